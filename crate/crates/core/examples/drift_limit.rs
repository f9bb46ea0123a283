//! As `t → 1` the reverse drift of the bridge at `x_t = y` approaches
//! `y - x̂`, with a deviation that shrinks like `1 - t`.

use thunder::verify::drift_limit_table;

fn main() -> thunder::Result<()> {
    println!("1-t       deviation    deviation/(1-t)");
    for (t, dev) in drift_limit_table()? {
        println!("{:<8.0e}  {dev:.4e}   {:.4}", 1.0 - t, dev / (1.0 - t));
    }
    Ok(())
}

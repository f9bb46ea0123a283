//! Parameter-gradient norms of the score and x0 losses near `t = 1` relative
//! to `t = 0.5`, for one random network.

use thunder::verify::gradient_ratios;

fn main() -> thunder::Result<()> {
    println!("seed  score ratio  σ ratio    x0 ratio");
    for seed in 0..4 {
        let (score, sigma, x0) = gradient_ratios(seed)?;
        println!("{seed:<5} {score:.4e}   {sigma:.4e} {x0:.3}");
    }
    Ok(())
}

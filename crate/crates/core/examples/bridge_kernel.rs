//! Sample the Brownian bridge between a clean and a noisy spectrogram and
//! compare the empirical moments with the closed-form kernel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thunder::sde::{BrownianBridgeSde, Sde};
use thunder::ComplexSpectrogram;

fn main() -> thunder::Result<()> {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x0 = ComplexSpectrogram::standard_normal(1, 1, &mut rng);
    let y = ComplexSpectrogram::standard_normal(1, 1, &mut rng);
    let draws = 50_000;

    println!("   t   mean(re)  kernel   var      kernel");
    for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let k = sde.kernel(t)?;
        let mean = k.mean(&x0, &y).data()[[0, 0]];
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..draws {
            let (x_t, _) = sde.sample_xt(&x0, &y, t, &mut rng)?;
            let v = x_t.data()[[0, 0]];
            sum += v.re;
            sq += (v - mean).norm_sqr();
        }
        println!(
            "{t:.1}  {:+.4}  {:+.4}  {:.4}  {:.4}",
            sum / draws as f64,
            mean.re,
            sq / draws as f64,
            k.var
        );
    }
    Ok(())
}

//! Convert between clean-speech estimates and scores, and show that the
//! true clean signal maps to the optimal score `-z/σ(t)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thunder::sde::{BrownianBridgeSde, Sde};
use thunder::ComplexSpectrogram;

fn main() -> thunder::Result<()> {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x0 = ComplexSpectrogram::standard_normal(8, 16, &mut rng);
    let y = ComplexSpectrogram::standard_normal(8, 16, &mut rng);

    for t in [0.05, 0.5, 0.95, 0.999] {
        let (x_t, z) = sde.sample_xt(&x0, &y, t, &mut rng)?;
        let score = sde.score_from_x0(&x_t, &y, t, &x0)?;
        let optimal = z.scaled(-1.0 / sde.kernel(t)?.std());
        let back = sde.x0_from_score(&x_t, &y, t, &score)?;
        println!(
            "t={t:<6} |s + z/σ|max {:.1e}   round trip |x0' - x0|max {:.1e}",
            score.max_abs_diff(&optimal),
            back.max_abs_diff(&x0)
        );
    }
    Ok(())
}

//! The exact posterior-mean denoiser for a Gaussian spectrogram prior, its
//! Bayes risk over time, and its regression-mode output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thunder::corpus::ToyTask;
use thunder::denoiser::{Denoiser, OracleDenoiser};
use thunder::sde::{BrownianBridgeSde, Sde};

fn main() -> thunder::Result<()> {
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 32)?;
    let oracle = OracleDenoiser::new(task.prior.clone());

    println!("t      Bayes risk per item");
    for t in [0.03, 0.25, 0.5, 0.75, 0.999, 1.0] {
        println!("{t:<6} {:.5}", task.prior.bayes_risk(sde.kernel(t)?, task.frames));
    }

    let item = task.item(11, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in [0.2, 0.8] {
        let (x_t, _) = sde.sample_xt(&item.clean, &item.noisy, t, &mut rng)?;
        let x_hat = oracle.predict_x0(&sde, &x_t, &item.noisy, t)?;
        println!("t={t}: squared error {:.5}", (&x_hat - &item.clean).norm_sqr());
    }
    let reg = oracle.predict_x0(&sde, &item.noisy, &item.noisy, 1.0)?;
    println!(
        "regression: squared error {:.5} (noisy input {:.5})",
        (&reg - &item.clean).norm_sqr(),
        (&item.noisy - &item.clean).norm_sqr()
    );
    Ok(())
}

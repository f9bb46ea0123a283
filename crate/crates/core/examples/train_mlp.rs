//! Train a small x0-predicting MLP on toy Gaussian data, compare its
//! validation loss with the analytic Bayes risk and save a checkpoint.
//!
//! `cargo run --release --example train_mlp -- [epochs]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thunder::corpus::ToyTask;
use thunder::denoiser::{load_checkpoint, save_checkpoint, DenoiserConfig, MlpDenoiser};
use thunder::sde::BrownianBridgeSde;
use thunder::trainer::{expected_bayes_risk, train, TrainConfig};

fn main() -> thunder::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 1)?;
    let pairs = task.training_pairs(2000, 3);

    let cfg = DenoiserConfig {
        hidden: vec![64, 64],
        ..Default::default()
    };
    let mut model = MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(1))?;
    let tc = TrainConfig {
        epochs,
        ..Default::default()
    };
    let risk = expected_bayes_risk(&task.prior, &sde, tc.t_min, tc.t_max, task.frames)?;
    let report = train(&mut model, &sde, &pairs, &tc)?;
    for e in report.curve.iter().step_by((epochs / 10).max(1)) {
        println!(
            "epoch {:>4}  train {:.5}  val {:.5}  val/risk {:.3}",
            e.epoch,
            e.train_loss,
            e.val_loss,
            e.val_loss / risk
        );
    }

    let path = std::env::temp_dir().join("thunder_example.ckpt");
    save_checkpoint(&model, &path)?;
    let reloaded = load_checkpoint(&path)?;
    println!(
        "checkpoint {} reloads identically: {}",
        path.display(),
        reloaded == model
    );
    Ok(())
}

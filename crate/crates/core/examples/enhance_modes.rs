//! Regression, diffusion and mixture enhancement of toy spectrograms with the
//! oracle denoiser.

use thunder::corpus::ToyTask;
use thunder::denoiser::OracleDenoiser;
use thunder::eval::{evaluate, evaluate_noisy, EvalItem};
use thunder::sampler::{EnhanceRequest, SamplerConfig};
use thunder::sde::BrownianBridgeSde;

fn main() -> thunder::Result<()> {
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 64)?;
    let items: Vec<EvalItem> = task.items(10, 7).iter().map(|i| EvalItem::from_toy(i, 1.0)).collect();
    let oracle = OracleDenoiser::new(task.prior.clone());
    let sampler = SamplerConfig {
        seed: 1,
        ..Default::default()
    };

    let mean = |r: thunder::metrics::MetricReport| r.mean_si_sdr().unwrap_or(f64::NAN);
    println!("noisy       {:6.2} dB", mean(evaluate_noisy(&items)?));
    for (name, req) in [
        ("regression", EnhanceRequest::regression()),
        ("diffusion", EnhanceRequest::diffusion(sampler.clone())),
        ("mixture", EnhanceRequest::mixture(0.8, sampler.clone())),
    ] {
        println!("{name:<11} {:6.2} dB", mean(evaluate(&items, &oracle, &sde, &req)?));
    }
    Ok(())
}

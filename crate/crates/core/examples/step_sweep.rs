//! Quality and wall-clock cost against the number of reverse steps, with the
//! corrector on and off.

use thunder::corpus::ToyTask;
use thunder::denoiser::OracleDenoiser;
use thunder::eval::{steps_sweep, summarize_steps, EvalItem};
use thunder::sampler::{EnhanceRequest, SamplerConfig};
use thunder::sde::BrownianBridgeSde;

fn main() -> thunder::Result<()> {
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 64)?;
    let items: Vec<EvalItem> = task.items(10, 7).iter().map(|i| EvalItem::from_toy(i, 1.0)).collect();
    let oracle = OracleDenoiser::new(task.prior.clone());
    let base = EnhanceRequest::mixture(0.8, SamplerConfig::default());

    let rows = steps_sweep(&items, &oracle, &sde, &base, &[1, 5, 15, 30], &[true, false])?;
    println!("N    corrector  SI-SDR   wall [ms]");
    for s in summarize_steps(&rows) {
        println!(
            "{:<4} {:<10} {:6.2}   {:7.2}",
            s.n_steps,
            s.corrector,
            s.mean_si_sdr,
            s.wall_s * 1e3
        );
    }
    Ok(())
}

//! SI-SDR and SI-SAR of mixture enhancement across interpolation weights.

use thunder::corpus::ToyTask;
use thunder::denoiser::OracleDenoiser;
use thunder::eval::{alpha_sweep, EvalItem};
use thunder::metrics::mean;
use thunder::sampler::SamplerConfig;
use thunder::sde::BrownianBridgeSde;

fn main() -> thunder::Result<()> {
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 64)?;
    let items: Vec<EvalItem> = task.items(10, 7).iter().map(|i| EvalItem::from_toy(i, 1.0)).collect();
    let oracle = OracleDenoiser::new(task.prior.clone());
    let alphas = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

    let rows = alpha_sweep(&items, &oracle, &sde, &SamplerConfig::default(), &alphas)?;
    println!("alpha  SI-SDR  SI-SAR");
    for a in alphas {
        let sel: Vec<_> = rows.iter().filter(|r| r.alpha == a).collect();
        println!(
            "{a:<5}  {:6.2}  {:6.2}",
            mean(sel.iter().map(|r| r.si_sdr)).unwrap_or(f64::NAN),
            mean(sel.iter().filter_map(|r| r.si_sar)).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

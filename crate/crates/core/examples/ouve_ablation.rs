//! The same oracle denoiser driven by the Brownian bridge and by the
//! Ornstein-Uhlenbeck process with exploding variance.

use thunder::corpus::ToyTask;
use thunder::denoiser::OracleDenoiser;
use thunder::eval::{evaluate, EvalItem};
use thunder::sampler::{EnhanceRequest, SamplerConfig};
use thunder::sde::{build_sde, OuveParams, SdeKind, TimeGuard};

fn main() -> thunder::Result<()> {
    let task = ToyTask::speech_like(16, 64)?;
    let items: Vec<EvalItem> = task.items(10, 7).iter().map(|i| EvalItem::from_toy(i, 1.0)).collect();
    let oracle = OracleDenoiser::new(task.prior.clone());

    for kind in [SdeKind::BrownianBridge, SdeKind::Ouve] {
        let sde = build_sde(kind, OuveParams::default(), TimeGuard::default())?;
        for n in [1, 30] {
            let req = EnhanceRequest::diffusion(SamplerConfig {
                n_steps: n,
                ..Default::default()
            });
            let sdr = evaluate(&items, &oracle, sde.as_ref(), &req)?
                .mean_si_sdr()
                .unwrap_or(f64::NAN);
            println!("{kind:?} N={n:<3} {sdr:6.2} dB");
        }
    }
    Ok(())
}

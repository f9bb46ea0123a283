//! Acceptance gate: runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. Expected values come from closed forms or
//! brute-force computations written out here, not from the library.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thunder::corpus::ToyTask;
use thunder::denoiser::{
    oracle_predict_x0, DenoiserConfig, GaussianPrior, MlpDenoiser, OracleDenoiser, Parameterization,
};
use thunder::eval::{self, EvalItem};
use thunder::metrics::si_sdr_slices;
use thunder::sampler::{
    diffusion_enhance, mixture_enhance, regression_enhance, run_reverse, EnhanceRequest, GaussianNoise, SamplerConfig,
};
use thunder::sde::{BrownianBridgeSde, Sde};
use thunder::signal::{istft, mix_at_snr, stft, StftConfig, TimeSignal};
use thunder::trainer::{train, TrainConfig};
use thunder::verify::gradient_ratios;
use thunder::ComplexSpectrogram;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn scalar(v: Complex64) -> ComplexSpectrogram {
    ComplexSpectrogram::filled(1, 1, v)
}

fn within_budget(pass: bool, elapsed: Duration, budget_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (pass && s < budget_s, format!("{s:.1} s of {budget_s} s"))
}

/// Empirical moments of 10⁵ kernel draws against `x0(1-t) + yt` and `t(1-t)`.
fn kernel_fidelity() -> Outcome {
    let start = Instant::now();
    let sde = BrownianBridgeSde::default();
    let (x0, y) = (Complex64::new(0.7, -0.4), Complex64::new(-0.2, 1.1));
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pass = true;
    let mut notes = Vec::new();
    for t in [0.1, 0.5, 0.9] {
        let mean = x0 * (1.0 - t) + y * t;
        let var = t * (1.0 - t);
        let draws: Vec<Complex64> = (0..n)
            .map(|_| {
                sde.sample_xt(&scalar(x0), &scalar(y), t, &mut rng)
                    .map(|(x, _)| x.data()[[0, 0]])
            })
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let m = draws.iter().sum::<Complex64>() / n as f64;
        // Each component has variance σ²/2; |x - μ|² is exponential with
        // mean and standard deviation σ².
        let se_mean = (var / 2.0 / n as f64).sqrt();
        let v = draws.iter().map(|d| (d - mean).norm_sqr()).sum::<f64>() / n as f64;
        let se_var = var / (n as f64).sqrt();
        let dm = (m - mean).re.abs().max((m - mean).im.abs()) / se_mean;
        let dv = (v - var).abs() / se_var;
        pass &= dm <= 3.0 && dv <= 3.0;
        notes.push(format!("t={t}: mean {dm:.2} SE, var {dv:.2} SE"));
    }
    let (ok, time) = within_budget(pass, start.elapsed(), 10.0);
    Ok((ok, format!("{}; {time}", notes.join(", "))))
}

fn random_spec(rng: &mut ChaCha8Rng, frames: usize, bins: usize) -> ComplexSpectrogram {
    ComplexSpectrogram::standard_normal(frames, bins, rng)
}

fn rel_diff(a: &ComplexSpectrogram, b: &ComplexSpectrogram) -> f64 {
    (a - b).norm() / b.norm()
}

fn conversion_bijection() -> Outcome {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t = rng.random_range(0.03..=0.999);
        let (x_t, y, v) = (
            random_spec(&mut rng, 2, 4),
            random_spec(&mut rng, 2, 4),
            random_spec(&mut rng, 2, 4),
        );
        let there = sde.score_from_x0(&x_t, &y, t, &v).map_err(err)?;
        let back = sde.x0_from_score(&x_t, &y, t, &there).map_err(err)?;
        worst = worst.max(rel_diff(&back, &v));
        let there = sde.x0_from_score(&x_t, &y, t, &v).map_err(err)?;
        let back = sde.score_from_x0(&x_t, &y, t, &there).map_err(err)?;
        worst = worst.max(rel_diff(&back, &v));
    }
    Ok((
        worst <= 1e-9,
        format!("worst relative error {worst:.2e} over 1000 states"),
    ))
}

fn optimal_score() -> Outcome {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t = rng.random_range(0.03..=0.999);
        let (x0, y) = (random_spec(&mut rng, 2, 4), random_spec(&mut rng, 2, 4));
        let (x_t, z) = sde.sample_xt(&x0, &y, t, &mut rng).map_err(err)?;
        let s = sde.score_from_x0(&x_t, &y, t, &x0).map_err(err)?;
        let sigma = (t * (1.0 - t)).sqrt();
        let expected = z.scaled(-1.0 / sigma);
        let scale = expected.iter().map(|v| v.norm()).fold(1.0, f64::max);
        worst = worst.max(s.max_abs_diff(&expected) / scale);
    }
    Ok((worst <= 1e-9, format!("worst elementwise deviation {worst:.2e}")))
}

/// Reverse drift at `x_t = y` written out from `f = (y - x)/(1 - t)`, `g = 1`
/// and the kernel score, compared against the library's.
fn drift_limit() -> Outcome {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (y, x_hat) = (random_spec(&mut rng, 3, 8), random_spec(&mut rng, 3, 8));
    let target = &y - &x_hat;
    let mut devs = Vec::new();
    for e in [1e-2, 1e-3, 1e-4] {
        let t = 1.0 - e;
        let s = sde.score_from_x0(&y, &y, t, &x_hat).map_err(err)?;
        let d = sde.reverse_drift(&y, &y, t, &s).map_err(err)?;
        let by_hand = y.zip_map(&x_hat, |yy, xh| (yy - (xh * (1.0 - t) + yy * t)) / (t * (1.0 - t)));
        if d.max_abs_diff(&by_hand) > 1e-9 * by_hand.norm() {
            return Ok((false, format!("reverse drift disagrees with the hand form at t={t}")));
        }
        devs.push((&d - &target).norm());
    }
    let ratios: Vec<f64> = devs.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (10.0 / 3.0..=30.0).contains(r));
    let devs: Vec<String> = devs.iter().map(|d| format!("{d:.3e}")).collect();
    Ok((
        pass,
        format!("deviations [{}], per-decade ratios {ratios:.3?}", devs.join(", ")),
    ))
}

fn gradient_ablation() -> Outcome {
    let start = Instant::now();
    let (score_ratio, _, x0_ratio) = gradient_ratios(500).map_err(err)?;
    let near: f64 = 1.0 - 1e-4;
    let sigma_ratio = (near * (1.0 - near)).sqrt() / 0.5;
    let rel = score_ratio / sigma_ratio;
    let pass = (0.5..=2.0).contains(&rel) && (0.5..=2.0).contains(&x0_ratio);
    let (ok, time) = within_budget(pass, start.elapsed(), 30.0);
    Ok((
        ok,
        format!("score ratio {score_ratio:.3e} = {rel:.3}x σ ratio {sigma_ratio:.3e}; x0 ratio {x0_ratio:.3}; {time}"),
    ))
}

/// Posterior mean of a complex scalar by Simpson integration of the joint
/// density over a square in the x0 plane.
fn quadrature_mean(x_t: Complex64, y: Complex64, t: f64, vx: f64, vn: f64) -> Complex64 {
    let (a, b, var) = (1.0 - t, t, t * (1.0 - t));
    let half = 7.0 * vx.sqrt();
    let n = 240;
    let h = 2.0 * half / n as f64;
    let w = |i: usize| match i {
        0 => 1.0,
        i if i == n => 1.0,
        i if i % 2 == 1 => 4.0,
        _ => 2.0,
    };
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for i in 0..=n {
        for j in 0..=n {
            let x0 = Complex64::new(-half + i as f64 * h, -half + j as f64 * h);
            let log_p = -x0.norm_sqr() / vx - (y - x0).norm_sqr() / vn - (x_t - x0 * a - y * b).norm_sqr() / var;
            let p = w(i) * w(j) * log_p.exp();
            num += x0 * p;
            den += p;
        }
    }
    num / den
}

fn oracle_posterior() -> Outcome {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (vx, vn) = (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let t = rng.random_range(0.05..0.95);
        let prior = GaussianPrior::flat(1, vx, vn).map_err(err)?;
        let (x0, n) = prior.sample_pair(1, &mut rng);
        let y = &x0 + &n;
        let (x_t, _) = sde.sample_xt(&x0, &y, t, &mut rng).map_err(err)?;
        let got = oracle_predict_x0(&x_t, &y, t, &prior).map_err(err)?.data()[[0, 0]];
        let want = quadrature_mean(x_t.data()[[0, 0]], y.data()[[0, 0]], t, vx, vn);
        worst = worst.max((got - want).norm());
    }
    Ok((
        worst <= 1e-3,
        format!("worst |oracle - quadrature| {worst:.2e} over 100 cases"),
    ))
}

fn mean_si_sdr(items: &[EvalItem], estimates: &[ComplexSpectrogram]) -> Result<f64, String> {
    let mut total = 0.0;
    for (item, est) in items.iter().zip(estimates) {
        total += item.score(est).map_err(err)?.0;
    }
    Ok(total / items.len() as f64)
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 64).map_err(err)?;
    let items: Vec<EvalItem> = task.items(20, 7).iter().map(|it| EvalItem::from_toy(it, 0.5)).collect();
    let oracle = OracleDenoiser::new(task.prior.clone());
    let noisy = mean_si_sdr(&items, &items.iter().map(|i| i.noisy.clone()).collect::<Vec<_>>())?;
    let mut at = Vec::new();
    for n in [1, 30] {
        let sampler = SamplerConfig {
            n_steps: n,
            ..Default::default()
        };
        let estimates: Vec<ComplexSpectrogram> = items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let cfg = SamplerConfig {
                    seed: eval::item_seed(7, i),
                    ..sampler.clone()
                };
                mixture_enhance(&item.noisy, &oracle, &sde, 0.8, &cfg)
            })
            .collect::<Result<_, _>>()
            .map_err(err)?;
        at.push(mean_si_sdr(&items, &estimates)?);
    }
    let gain = at[1] - noisy;
    let gap = (at[0] - at[1]).abs();
    let (ok, time) = within_budget(gain >= 3.0 && gap <= 2.0, start.elapsed(), 120.0);
    Ok((
        ok,
        format!(
            "noisy {noisy:.2} dB, N=1 {:.2} dB, N=30 {:.2} dB: gain {gain:.2} dB, gap {gap:.2} dB; {time}",
            at[0], at[1]
        ),
    ))
}

/// Expected posterior variance of one spectrogram entry summed over bins,
/// averaged over uniform t by the midpoint rule.
fn bayes_risk(prior: &GaussianPrior, t_min: f64, t_max: f64) -> f64 {
    let n = 20_000;
    let h = (t_max - t_min) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let t = t_min + (i as f64 + 0.5) * h;
        let (a, var) = (1.0 - t, t * (1.0 - t));
        for (vx, vn) in prior.var_x().iter().zip(prior.var_n()) {
            let v = vx * vn / (vx + vn);
            acc += v * var / (a * a * v + var);
        }
    }
    acc / n as f64
}

fn trained_mlp() -> Outcome {
    let start = Instant::now();
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 1).map_err(err)?;
    let pairs = task.training_pairs(4000, 3);
    let fit = |mode: Parameterization| -> Result<(MlpDenoiser, f64), String> {
        let cfg = DenoiserConfig {
            hidden: vec![64, 64],
            parameterization: mode,
            ..Default::default()
        };
        let mut model = MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).map_err(err)?;
        let tc = TrainConfig {
            epochs: 200,
            loss_mode: mode,
            ..Default::default()
        };
        let report = train(&mut model, &sde, &pairs, &tc).map_err(err)?;
        Ok((model, report.final_val_loss().unwrap_or(f64::NAN)))
    };
    let tc = TrainConfig::default();
    let risk = bayes_risk(&task.prior, tc.t_min, tc.t_max);
    let (x0_model, val) = fit(Parameterization::X0)?;
    let (score_model, _) = fit(Parameterization::Score)?;

    let items: Vec<EvalItem> = task.items(20, 7).iter().map(|it| EvalItem::from_toy(it, 0.0)).collect();
    let regression: Vec<ComplexSpectrogram> = items
        .iter()
        .map(|i| regression_enhance(&i.noisy, &x0_model, &sde))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let single: Vec<ComplexSpectrogram> = items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let cfg = SamplerConfig {
                n_steps: 1,
                corrector: false,
                seed: eval::item_seed(7, i),
                ..Default::default()
            };
            diffusion_enhance(&item.noisy, &score_model, &sde, &cfg)
        })
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let (reg_db, single_db) = (mean_si_sdr(&items, &regression)?, mean_si_sdr(&items, &single)?);
    let ratio = val / risk;
    let pass = ratio <= 1.1 && reg_db > single_db;
    let (ok, time) = within_budget(pass, start.elapsed(), 600.0);
    Ok((
        ok,
        format!(
            "x0 validation loss {val:.5} = {ratio:.3}x Bayes risk {risk:.5}; regression {reg_db:.2} dB vs score single step {single_db:.2} dB; {time}"
        ),
    ))
}

fn mode_collapse() -> Outcome {
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 8).map_err(err)?;
    let oracle = OracleDenoiser::new(task.prior.clone());
    let mut checked = 0;
    for item in task.items(5, 9) {
        for corrector in [true, false] {
            let cfg = SamplerConfig {
                n_steps: 10,
                corrector,
                seed: item.seed,
                ..Default::default()
            };
            let a = mixture_enhance(&item.noisy, &oracle, &sde, 0.0, &cfg).map_err(err)?;
            let b = run_reverse(
                &item.noisy,
                &item.noisy,
                &oracle,
                &sde,
                &cfg,
                &mut GaussianNoise::new(item.seed),
            )
            .map_err(err)?;
            if a != b {
                return Ok((false, format!("{} (corrector {corrector}) differs", item.id)));
            }
            checked += 1;
        }
    }
    Ok((true, format!("{checked} trajectories bitwise equal")))
}

fn signal_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let noise = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let sig = TimeSignal::new(noise(&mut rng, 16_000), 16_000).map_err(err)?;
    let cfg = StftConfig::default();
    let back = istft(&stft(&sig, &cfg).map_err(err)?, &cfg, sig.len(), 16_000).map_err(err)?;
    let round_trip = si_sdr_slices(back.samples(), sig.samples()).map_err(err)?;

    let mut worst_snr: f64 = 0.0;
    for snr in [-5.0, 0.0, 5.0, 10.0, 15.0, 27.3] {
        let clean = TimeSignal::new(noise(&mut rng, 4000), 16_000).map_err(err)?;
        let n = TimeSignal::new(noise(&mut rng, 4000), 16_000).map_err(err)?;
        let (_, scaled) = mix_at_snr(&clean, &n, snr).map_err(err)?;
        let e = |s: &TimeSignal| s.samples().iter().map(|v| v * v).sum::<f64>();
        worst_snr = worst_snr.max((10.0 * (e(&clean) / e(&scaled)).log10() - snr).abs());
    }

    let (est, reference) = (noise(&mut rng, 1000), noise(&mut rng, 1000));
    let base = si_sdr_slices(&est, &reference).map_err(err)?;
    let mut worst_scale: f64 = 0.0;
    for a in [1e-3, 0.5, 2.0, 1e3] {
        let scaled: Vec<f64> = est.iter().map(|v| v * a).collect();
        worst_scale = worst_scale.max((si_sdr_slices(&scaled, &reference).map_err(err)? - base).abs());
    }
    let pass = round_trip >= 60.0 && worst_snr <= 1e-6 && worst_scale <= 1e-9;
    Ok((
        pass,
        format!("round trip {round_trip:.1} dB, mixer error {worst_snr:.1e} dB, scale drift {worst_scale:.1e} dB"),
    ))
}

fn wall_clock() -> Outcome {
    let sde = BrownianBridgeSde::default();
    let task = ToyTask::speech_like(16, 64).map_err(err)?;
    let items: Vec<EvalItem> = task.items(10, 7).iter().map(|it| EvalItem::from_toy(it, 0.5)).collect();
    let oracle = OracleDenoiser::new(task.prior.clone());
    let grid = [1, 5, 15, 30];
    let req = EnhanceRequest::mixture(0.8, SamplerConfig::default());
    let rows = eval::steps_sweep(&items, &oracle, &sde, &req, &grid, &[true, false]).map_err(err)?;
    let summary = eval::summarize_steps(&rows);
    let wall = |n: usize, c: bool| {
        summary
            .iter()
            .find(|s| s.n_steps == n && s.corrector == c)
            .map(|s| s.wall_s)
            .unwrap_or(f64::NAN)
    };
    let mut pass = rows.len() == 4 * items.len() * 2;
    for c in [true, false] {
        pass &= grid.windows(2).all(|w| wall(w[0], c) <= wall(w[1], c));
    }
    // Per-step cost at the largest N, where fixed overheads matter least.
    let ratio = wall(30, false) / wall(30, true);
    pass &= (0.25..=1.0).contains(&ratio);
    let table: Vec<String> = grid
        .iter()
        .map(|&n| format!("N={n} {:.1}/{:.1} ms", 1e3 * wall(n, true), 1e3 * wall(n, false)))
        .collect();
    Ok((pass, format!("on/off {}; off/on at N=30 {ratio:.2}", table.join(", "))))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("AC1 kernel fidelity", kernel_fidelity),
        ("AC2 conversion bijection", conversion_bijection),
        ("AC3 optimal-score identity", optimal_score),
        ("AC4 drift limit", drift_limit),
        ("AC5 gradient ablation", gradient_ablation),
        ("AC6 oracle posterior", oracle_posterior),
        ("AC7 end-to-end enhancement", end_to_end),
        ("AC8 trained MLP", trained_mlp),
        ("AC9 mode collapse", mode_collapse),
        ("AC10 signal and metrics", signal_metrics),
        ("AC11 step sweep wall-clock", wall_clock),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

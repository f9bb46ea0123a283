//! Self-checks of the mathematical properties the engine relies on.
//!
//! Each suite is seed-pinned and returns a list of named checks with the
//! measured values, so a report can be printed or inspected in tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::denoiser::{oracle_predict_x0, DenoiserConfig, GaussianPrior, MlpDenoiser, Parameterization};
use crate::error::Result;
use crate::sde::{simulate_forward, BrownianBridgeSde, OuveParams, OuveSde, Sde, TimeGuard};
use crate::spectrogram::ComplexSpectrogram;
use crate::trainer::{gradient_norm, TrainBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Marginals,
    Conversion,
    OptimalScore,
    DriftLimit,
    Gradient,
    Oracle,
    Ouve,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Marginals,
        Suite::Conversion,
        Suite::OptimalScore,
        Suite::DriftLimit,
        Suite::Gradient,
        Suite::Oracle,
        Suite::Ouve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Marginals => "marginals",
            Suite::Conversion => "conversion",
            Suite::OptimalScore => "optimal-score",
            Suite::DriftLimit => "drift-limit",
            Suite::Gradient => "gradient",
            Suite::Oracle => "oracle",
            Suite::Ouve => "ouve",
        }
    }

    pub fn run(self) -> Result<SuiteReport> {
        let checks = match self {
            Suite::Marginals => marginals()?,
            Suite::Conversion => conversion()?,
            Suite::OptimalScore => optimal_score()?,
            Suite::DriftLimit => drift_limit()?,
            Suite::Gradient => gradient()?,
            Suite::Oracle => oracle()?,
            Suite::Ouve => ouve()?,
        };
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}/{}: {}", self.suite, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn scalar(v: Complex64) -> ComplexSpectrogram {
    ComplexSpectrogram::filled(1, 1, v)
}

/// Monte Carlo check of a kernel's mean and variance from `n` draws.
fn kernel_moments(
    sde: &dyn Sde,
    draws: impl Fn(&mut ChaCha8Rng) -> Result<Complex64>,
    x0: Complex64,
    y: Complex64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<Check> {
    let k = sde.kernel(t)?;
    let mean = x0 * k.x0_coeff + y * k.y_coeff;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sq = 0.0;
    for _ in 0..n {
        let v = draws(&mut rng)?;
        sum += v;
        sq += (v - mean).norm_sqr();
    }
    let emp_mean = sum / n as f64;
    let emp_var = sq / n as f64;
    // Each component has variance var/2; |x - μ|² is exponential with
    // standard deviation var.
    let se_mean = (k.var / 2.0 / n as f64).sqrt();
    let se_var = k.var / (n as f64).sqrt();
    let mean_err = (emp_mean - mean).re.abs().max((emp_mean - mean).im.abs());
    let var_err = (emp_var - k.var).abs();
    let passed = mean_err <= 3.0 * se_mean && var_err <= 3.0 * se_var;
    Ok(Check::new(
        format!("t={t}"),
        passed,
        format!(
            "mean error {mean_err:.2e} (3se {:.2e}), variance {emp_var:.5} vs {:.5} (3se {:.2e})",
            3.0 * se_mean,
            k.var,
            3.0 * se_var
        ),
    ))
}

fn marginals() -> Result<Vec<Check>> {
    let sde = BrownianBridgeSde::default();
    let (x0, y) = (Complex64::new(0.6, -0.2), Complex64::new(-0.3, 0.9));
    let (x0s, ys) = (scalar(x0), scalar(y));
    [0.1, 0.5, 0.9]
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            kernel_moments(
                &sde,
                |rng| Ok(sde.sample_xt(&x0s, &ys, t, rng)?.0.data()[[0, 0]]),
                x0,
                y,
                t,
                100_000,
                100 + i as u64,
            )
        })
        .collect()
}

fn random_spec(rng: &mut ChaCha8Rng) -> ComplexSpectrogram {
    ComplexSpectrogram::standard_normal(4, 8, rng)
}

fn rel_err(a: &ComplexSpectrogram, b: &ComplexSpectrogram) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn conversion() -> Result<Vec<Check>> {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let (mut worst_a, mut worst_b) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let t = rng.random_range(0.03..=0.999);
        let (x, y, v) = (random_spec(&mut rng), random_spec(&mut rng), random_spec(&mut rng));
        let s = sde.score_from_x0(&x, &y, t, &sde.x0_from_score(&x, &y, t, &v)?)?;
        worst_a = worst_a.max(rel_err(&s, &v));
        let x0 = sde.x0_from_score(&x, &y, t, &sde.score_from_x0(&x, &y, t, &v)?)?;
        worst_b = worst_b.max(rel_err(&x0, &v));
    }
    Ok(vec![
        Check::new("score∘x0", worst_a <= 1e-9, format!("max relative error {worst_a:.2e}")),
        Check::new("x0∘score", worst_b <= 1e-9, format!("max relative error {worst_b:.2e}")),
    ])
}

fn optimal_score() -> Result<Vec<Check>> {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let t = 0.03 + 0.969 * i as f64 / 99.0;
        let (x0, y) = (random_spec(&mut rng), random_spec(&mut rng));
        let (x_t, z) = sde.sample_xt(&x0, &y, t, &mut rng)?;
        let s = sde.score_from_x0(&x_t, &y, t, &x0)?;
        let expected = z.scaled(-1.0 / sde.kernel(t)?.std());
        worst = worst.max(s.max_abs_diff(&expected) / expected.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    Ok(vec![Check::new(
        "s = -z/σ",
        worst <= 1e-9,
        format!("max relative deviation {worst:.2e}"),
    )])
}

/// Deviation of the reverse drift from `y - x̂` at `x_t = y`, for
/// `t = 1 - 10^-k`.
pub fn drift_limit_table() -> Result<Vec<(f64, f64)>> {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let (y, x_hat) = (random_spec(&mut rng), random_spec(&mut rng));
    let target = &y - &x_hat;
    [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| {
            let t = 1.0 - e;
            let s = sde.score_from_x0(&y, &y, t, &x_hat)?;
            let d = sde.reverse_drift(&y, &y, t, &s)?;
            Ok((t, (&d - &target).norm()))
        })
        .collect()
}

fn drift_limit() -> Result<Vec<Check>> {
    let table = drift_limit_table()?;
    let mut checks = Vec::new();
    for (t, dev) in &table {
        checks.push(Check::new(
            format!("t={t}"),
            true,
            format!("deviation {dev:.4e}, deviation/(1-t) {:.4}", dev / (1.0 - t)),
        ));
    }
    for w in table.windows(2) {
        let ratio = w[0].1 / w[1].1;
        checks.push(Check::new(
            format!("decade {}→{}", w[0].0, w[1].0),
            (10.0 / 3.0..=30.0).contains(&ratio),
            format!("shrinks by {ratio:.3}x"),
        ));
    }
    Ok(checks)
}

/// Parameter-gradient norms of both losses at `t = 1 - 10⁻⁴` and `t = 0.5`
/// for one fixed random network: `(score_ratio, sigma_ratio, x0_ratio)`.
///
/// The output layer is initialised at a tenth of the Glorot scale so the
/// residual `σ·s + z` is dominated by `z` at both times.
pub fn gradient_ratios(seed: u64) -> Result<(f64, f64, f64)> {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = GaussianPrior::speech_like(16)?;
    let cfg = DenoiserConfig::default();
    let mut x0_model = MlpDenoiser::new(&cfg, &mut rng)?;
    let mut params = x0_model.mlp_mut().params_mut();
    let n = params.len();
    for slice in &mut params[n - 2..] {
        slice.iter_mut().for_each(|v| *v *= 0.1);
    }
    let score_model = MlpDenoiser::from_parts(x0_model.mlp().clone(), cfg.time_embedding, Parameterization::Score)?;
    let mut x0s = Vec::new();
    let mut ys = Vec::new();
    let mut zs = Vec::new();
    for _ in 0..32 {
        let (x0, n) = prior.sample_pair(4, &mut rng);
        ys.push(&x0 + &n);
        x0s.push(x0);
        zs.push(ComplexSpectrogram::standard_normal(4, 16, &mut rng));
    }
    // Mean per-example gradient norm, the quantity the σ-proportionality
    // argument is stated for.
    let mean_norm = |model: &MlpDenoiser, t: f64, mode: Parameterization| -> Result<f64> {
        let mut total = 0.0;
        for i in 0..x0s.len() {
            let b = TrainBatch::new(
                &sde,
                vec![x0s[i].clone()],
                vec![ys[i].clone()],
                vec![t],
                vec![zs[i].clone()],
            )?;
            total += gradient_norm(model, &sde, &b, mode)?;
        }
        Ok(total / x0s.len() as f64)
    };
    let near = 1.0 - 1e-4;
    let score_ratio = mean_norm(&score_model, near, Parameterization::Score)?
        / mean_norm(&score_model, 0.5, Parameterization::Score)?;
    let x0_ratio = mean_norm(&x0_model, near, Parameterization::X0)? / mean_norm(&x0_model, 0.5, Parameterization::X0)?;
    let sigma_ratio = sde.kernel(near)?.std() / sde.kernel(0.5)?.std();
    Ok((score_ratio, sigma_ratio, x0_ratio))
}

fn gradient() -> Result<Vec<Check>> {
    let (score_ratio, sigma_ratio, x0_ratio) = gradient_ratios(500)?;
    let rel = score_ratio / sigma_ratio;
    Ok(vec![
        Check::new(
            "score loss follows σ",
            (0.5..=2.0).contains(&rel),
            format!("gradient ratio {score_ratio:.4e}, σ ratio {sigma_ratio:.4e}"),
        ),
        Check::new(
            "x0 loss stays bounded",
            (0.5..=2.0).contains(&x0_ratio),
            format!("gradient ratio {x0_ratio:.4}"),
        ),
    ])
}

/// Posterior mean of a complex scalar by brute-force integration of the
/// joint density over a grid in the x0 plane.
pub fn quadrature_posterior_mean(x_t: Complex64, y: Complex64, t: f64, var_x: f64, var_n: f64) -> Complex64 {
    let (a, b, var) = (1.0 - t, t, t * (1.0 - t));
    let half = 6.0 * var_x.sqrt();
    let n = 400;
    let h = 2.0 * half / n as f64;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            let x0 = Complex64::new(-half + i as f64 * h, -half + j as f64 * h);
            let mut log_p = -x0.norm_sqr() / var_x - (y - x0).norm_sqr() / var_n;
            if var > 0.0 {
                log_p -= (x_t - x0 * a - y * b).norm_sqr() / var;
            }
            let p = log_p.exp();
            num += x0 * p;
            den += p;
        }
    }
    num / den
}

fn oracle() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let var_x = rng.random_range(0.2..=2.0);
        let var_n = rng.random_range(0.2..=2.0);
        let t = rng.random_range(0.05..=0.95);
        let prior = GaussianPrior::flat(1, var_x, var_n)?;
        let (x0, n) = prior.sample_pair(1, &mut rng);
        let y = &x0 + &n;
        let (x_t, _) = BrownianBridgeSde::default().sample_xt(&x0, &y, t, &mut rng)?;
        let got = oracle_predict_x0(&x_t, &y, t, &prior)?.data()[[0, 0]];
        let want = quadrature_posterior_mean(x_t.data()[[0, 0]], y.data()[[0, 0]], t, var_x, var_n);
        worst = worst.max((got - want).norm());
    }
    Ok(vec![Check::new(
        "posterior mean vs quadrature",
        worst <= 1e-3,
        format!("max abs error {worst:.2e} over 100 cases"),
    )])
}

fn ouve() -> Result<Vec<Check>> {
    let sde = OuveSde::new(OuveParams::default(), TimeGuard::default())?;
    let (x0, y) = (Complex64::new(0.6, -0.2), Complex64::new(-0.3, 0.9));
    let (x0s, ys) = (scalar(x0), scalar(y));
    let mut checks = Vec::new();
    for (i, &t) in [0.25, 1.0].iter().enumerate() {
        checks.push(kernel_moments(
            &sde,
            |rng| Ok(simulate_forward(&sde, &x0s, &ys, t, 200, rng)?.data()[[0, 0]]),
            x0,
            y,
            t,
            20_000,
            700 + i as u64,
        )?);
    }
    for c in &mut checks {
        c.name = format!("simulated {}", c.name);
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suites_pass() {
        for s in [
            Suite::Conversion,
            Suite::OptimalScore,
            Suite::DriftLimit,
            Suite::Gradient,
        ] {
            let rep = s.run().unwrap();
            assert!(rep.passed(), "{rep}");
        }
    }

    #[test]
    fn quadrature_matches_closed_form_at_midpoint() {
        let (x_t, y) = (Complex64::new(0.3, -0.4), Complex64::new(1.1, 0.2));
        let q = quadrature_posterior_mean(x_t, y, 0.5, 1.0, 1.0);
        let prior = GaussianPrior::flat(1, 1.0, 1.0).unwrap();
        let o = oracle_predict_x0(&scalar(x_t), &scalar(y), 0.5, &prior).unwrap();
        assert!((o.data()[[0, 0]] - q).norm() < 1e-3);
    }
}

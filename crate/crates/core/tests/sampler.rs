use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thunder::denoiser::{Denoiser, GaussianPrior, OracleDenoiser};
use thunder::sampler::{
    corrector_step, diffusion_enhance, mixture_enhance, predictor_mean, run_reverse, GaussianNoise, SamplerConfig,
    ZeroNoise,
};
use thunder::sde::{BrownianBridgeSde, DiffusionState};
use thunder::ComplexSpectrogram;

const VAR_X: f64 = 0.5;
const VAR_N: f64 = 0.25;

/// Moments of `p_t(x_t | y)` for the flat scalar prior, computed directly.
fn bridge_marginal(y: Complex64, t: f64) -> (Complex64, f64) {
    let (a, b, var) = (1.0 - t, t, t * (1.0 - t));
    let gain = VAR_X / (VAR_X + VAR_N);
    let post = VAR_X * VAR_N / (VAR_X + VAR_N);
    (y * (a * gain + b), a * a * post + var)
}

/// Run `steps` Langevin corrector steps at fixed `t` on `n` independent bins
/// started from the exact marginal, returning measured / analytic variance.
fn corrector_variance_ratio(snr: f64, t: f64, n: usize, steps: usize) -> f64 {
    let sde = BrownianBridgeSde::default();
    let oracle = OracleDenoiser::new(GaussianPrior::flat(n, VAR_X, VAR_N).unwrap());
    let y_val = Complex64::new(0.4, -0.3);
    let y = ComplexSpectrogram::filled(1, n, y_val);
    let (mean, var) = bridge_marginal(y_val, t);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let z = ComplexSpectrogram::standard_normal(1, n, &mut rng);
    let x = ComplexSpectrogram::filled(1, n, mean).lin_comb(1.0, &z, var.sqrt());
    let mut state = DiffusionState::new(x, t, &y).unwrap();
    let mut noise = GaussianNoise::new(22);
    for _ in 0..steps {
        state = corrector_step(state, &oracle, &sde, snr, &mut noise).unwrap();
    }
    let emp = state.x_t.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n as f64;
    emp / var
}

#[test]
fn corrector_keeps_marginal_variance_within_twenty_percent() {
    let ratio = corrector_variance_ratio(0.16, 0.5, 10_000, 200);
    assert!((ratio - 1.0).abs() <= 0.2, "variance ratio {ratio}");
}

#[test]
fn corrector_inflation_matches_unadjusted_langevin_bias() {
    // Self-consistent step ε = 2r²σ²/(1 + r²) gives stationary variance
    // σ²(1 + r²) for the unadjusted update.
    for snr in [0.16, 0.5] {
        let ratio = corrector_variance_ratio(snr, 0.5, 10_000, 300);
        let expected = 1.0 + snr * snr;
        assert!(
            (ratio / expected - 1.0).abs() < 0.03,
            "r={snr}: ratio {ratio}, expected {expected}"
        );
    }
}

#[test]
fn oracle_sampler_mean_converges_to_posterior_mean() {
    let sde = BrownianBridgeSde::default();
    let n = 10_000;
    let oracle = OracleDenoiser::new(GaussianPrior::flat(n, VAR_X, VAR_N).unwrap());
    let y_val = Complex64::new(0.8, 0.5);
    let y = ComplexSpectrogram::filled(1, n, y_val);
    let target = y_val * (VAR_X / (VAR_X + VAR_N));
    let mut errors = Vec::new();
    for steps in [1, 5, 15, 30] {
        let cfg = SamplerConfig {
            n_steps: steps,
            corrector: false,
            seed: steps as u64,
            ..Default::default()
        };
        let out = diffusion_enhance(&y, &oracle, &sde, &cfg).unwrap();
        let mean = out.iter().sum::<Complex64>() / n as f64;
        let var = out.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
        let se = (var / 2.0 / n as f64).sqrt();
        let err = (mean - target).re.abs().max((mean - target).im.abs());
        errors.push((steps, err, se));
    }
    let (_, err, se) = errors[3];
    assert!(
        err <= 3.0 * se.max(1e-12),
        "N=30 error {err} vs se {se}; all {errors:?}"
    );
}

#[test]
fn first_step_moves_against_the_noise() {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prior = GaussianPrior::flat(12, VAR_X, VAR_N).unwrap();
    let oracle = OracleDenoiser::new(prior.clone());
    let (x0, n) = prior.sample_pair(6, &mut rng);
    let y = &x0 + &n;
    for t_start in [0.99, 0.999, 0.9999] {
        let x_tilde = oracle.predict_x0(&sde, &y, &y, t_start).unwrap();
        let state = DiffusionState::new(y.clone(), t_start, &y).unwrap();
        let dt = t_start - 0.03;
        let step = &predictor_mean(&state, dt, &oracle, &sde).unwrap() - &y;
        let direction = step.scaled(1.0 / dt);
        let noise = &y - &x_tilde;
        let dev = (&direction + &noise).norm() / noise.norm();
        assert!(dev <= 2.0 * (1.0 - t_start), "t_start={t_start}: deviation {dev}");
    }
}

#[test]
fn single_noise_free_step_recovers_the_estimate() {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let prior = GaussianPrior::flat(8, VAR_X, VAR_N).unwrap();
    let oracle = OracleDenoiser::new(prior.clone());
    let (x0, n) = prior.sample_pair(4, &mut rng);
    let y = &x0 + &n;
    let cfg = SamplerConfig {
        n_steps: 1,
        t_start: 0.9999,
        corrector: false,
        ..Default::default()
    };
    let out = run_reverse(&y, &y, &oracle, &sde, &cfg, &mut ZeroNoise).unwrap();
    let reg = oracle.predict_x0(&sde, &y, &y, 1.0).unwrap();
    assert!(out.max_abs_diff(&reg) < 1e-2 * reg.norm());
}

#[test]
fn mixture_with_zero_weight_is_diffusion_from_observation() {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prior = GaussianPrior::speech_like(16).unwrap();
    let oracle = OracleDenoiser::new(prior.clone());
    let (x0, n) = prior.sample_pair(8, &mut rng);
    let y = &x0 + &n;
    for corrector in [true, false] {
        let cfg = SamplerConfig {
            n_steps: 7,
            corrector,
            seed: 99,
            ..Default::default()
        };
        let a = mixture_enhance(&y, &oracle, &sde, 0.0, &cfg).unwrap();
        let b = run_reverse(&y, &y, &oracle, &sde, &cfg, &mut GaussianNoise::new(99)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn time_grid_is_uniform_and_strictly_decreasing() {
    for n in [1, 2, 7, 30, 100] {
        let cfg = SamplerConfig {
            n_steps: n,
            ..Default::default()
        };
        let g = cfg.time_grid();
        assert_eq!(g.len(), n + 1);
        assert_eq!(g[0], cfg.t_start);
        assert_eq!(g[n], cfg.t_end);
        let dt = (cfg.t_start - cfg.t_end) / n as f64;
        for w in g.windows(2) {
            assert!(w[0] > w[1]);
            assert!((w[0] - w[1] - dt).abs() < 1e-12);
        }
    }
}

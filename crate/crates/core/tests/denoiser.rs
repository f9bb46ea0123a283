use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thunder::denoiser::{
    load_checkpoint, oracle_predict_x0, save_checkpoint, Denoiser, DenoiserConfig, GaussianPrior, Mlp, MlpDenoiser,
    OracleDenoiser, Parameterization, Tape, TimeEmbedding,
};
use thunder::sde::{BrownianBridgeSde, Sde};
use thunder::ComplexSpectrogram;

/// Posterior mean of a complex scalar from Simpson integration of the joint
/// density over a square in the x0 plane.
fn quadrature_mean(x_t: Complex64, y: Complex64, t: f64, vx: f64, vn: f64) -> Complex64 {
    let (a, b, var) = (1.0 - t, t, t * (1.0 - t));
    let half = 7.0 * vx.sqrt();
    let n = 300;
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

fn scalar(v: Complex64) -> ComplexSpectrogram {
    ComplexSpectrogram::filled(1, 1, v)
}

#[test]
fn oracle_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let sde = BrownianBridgeSde::default();
    for _ in 0..25 {
        let (vx, vn) = (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let t = rng.random_range(0.1..0.9);
        let prior = GaussianPrior::flat(1, vx, vn).unwrap();
        let (x0, n) = prior.sample_pair(1, &mut rng);
        let y = &x0 + &n;
        let (x_t, _) = sde.sample_xt(&x0, &y, t, &mut rng).unwrap();
        let got = oracle_predict_x0(&x_t, &y, t, &prior).unwrap().data()[[0, 0]];
        let want = quadrature_mean(x_t.data()[[0, 0]], y.data()[[0, 0]], t, vx, vn);
        assert!((got - want).norm() < 1e-6, "t={t}: {got} vs {want}");
    }
}

#[test]
fn oracle_regression_is_the_wiener_estimate() {
    let prior = GaussianPrior::flat(1, 0.3, 0.1).unwrap();
    let y = scalar(Complex64::new(1.0, -2.0));
    let out = oracle_predict_x0(&y, &y, 1.0, &prior).unwrap();
    assert!((out.data()[[0, 0]] - Complex64::new(0.75, -1.5)).norm() < 1e-12);
}

#[test]
fn no_constant_shift_improves_the_oracle() {
    let sde = BrownianBridgeSde::default();
    let prior = GaussianPrior::flat(1, 0.6, 0.3).unwrap();
    let oracle = OracleDenoiser::new(prior.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut residuals = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let t = rng.random_range(0.05..0.95);
        let (x0, n) = prior.sample_pair(1, &mut rng);
        let y = &x0 + &n;
        let (x_t, _) = sde.sample_xt(&x0, &y, t, &mut rng).unwrap();
        let est = oracle.predict_x0(&sde, &x_t, &y, t).unwrap();
        residuals.push(est.data()[[0, 0]] - x0.data()[[0, 0]]);
    }
    let mse = |c: Complex64| residuals.iter().map(|r| (r + c).norm_sqr()).sum::<f64>() / residuals.len() as f64;
    let base = mse(Complex64::new(0.0, 0.0));
    for c in [
        Complex64::new(0.05, 0.0),
        Complex64::new(-0.05, 0.0),
        Complex64::new(0.0, 0.05),
        Complex64::new(0.0, -0.05),
    ] {
        assert!(mse(c) > base, "shift {c} lowers MSE from {base} to {}", mse(c));
    }
}

#[test]
fn oracle_score_matches_analytic_marginal_score() {
    let sde = BrownianBridgeSde::default();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (vx, vn) = (0.4, 0.2);
    let prior = GaussianPrior::flat(6, vx, vn).unwrap();
    let oracle = OracleDenoiser::new(prior.clone());
    for t in [0.05, 0.3, 0.6, 0.9, 0.99] {
        let (x0, n) = prior.sample_pair(5, &mut rng);
        let y = &x0 + &n;
        let (x_t, _) = sde.sample_xt(&x0, &y, t, &mut rng).unwrap();
        let s = oracle.score(&sde, &x_t, &y, t).unwrap();
        let (a, b, var) = (1.0 - t, t, t * (1.0 - t));
        let gain = vx / (vx + vn);
        let total = a * a * vx * vn / (vx + vn) + var;
        let analytic = x_t.zip_map(&y, |xt, yy| -(xt - yy * (a * gain + b)) / total);
        let scale = analytic.iter().map(|v| v.norm()).fold(1.0, f64::max);
        assert!(s.max_abs_diff(&analytic) <= 1e-6 * scale, "t={t}");
    }
}

fn loss_of(mlp: &Mlp, x: &Array2<f64>, target: &Array2<f64>) -> f64 {
    let out = mlp.forward(x.view()).unwrap();
    0.5 * (&out - target).mapv(|v| v * v).sum()
}

#[test]
fn mlp_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut mlp = Mlp::new(&[5, 7, 3], &mut rng).unwrap();
    let x = Array2::from_shape_fn((4, 5), |_| rng.random_range(-1.0..1.0));
    let target = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
    let mut tape = Tape::new();
    let out = mlp.forward_recorded(x.view(), &mut tape).unwrap();
    let grads = mlp.backward(&tape, (&out - &target).view()).unwrap();
    let analytic: Vec<f64> = grads.slices().concat();

    let h = 1e-5;
    let n_groups = mlp.params_mut().len();
    let mut idx = 0;
    for g in 0..n_groups {
        let len = mlp.params_mut()[g].len();
        for i in 0..len {
            let orig = mlp.params_mut()[g][i];
            mlp.params_mut()[g][i] = orig + h;
            let up = loss_of(&mlp, &x, &target);
            mlp.params_mut()[g][i] = orig - h;
            let down = loss_of(&mlp, &x, &target);
            mlp.params_mut()[g][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = analytic[idx];
            assert!(
                (fd - a).abs() <= 1e-4 * a.abs().max(fd.abs()).max(1e-6),
                "param {idx}: analytic {a}, finite difference {fd}"
            );
            idx += 1;
        }
    }
    assert_eq!(idx, analytic.len());
}

#[test]
fn linear_layer_gradient_has_closed_form() {
    let w = Array2::from_shape_vec((3, 2), vec![0.5, -1.0, 2.0, 0.25, -0.75, 1.5]).unwrap();
    let mlp = Mlp::from_layers(vec![w.clone()], vec![Array1::zeros(2)]).unwrap();
    let x = Array2::from_shape_vec((1, 3), vec![1.0, -2.0, 0.5]).unwrap();
    let mut tape = Tape::new();
    let out = mlp.forward_recorded(x.view(), &mut tape).unwrap();
    // For L = ‖Wx‖²/2 the output gradient is the output itself.
    let grads = mlp.backward(&tape, out.view()).unwrap();
    let wx = x.dot(&w);
    let expected = x.t().dot(&wx);
    assert!((&grads.weights[0] - &expected).iter().all(|d| d.abs() < 1e-12));
    assert!((&grads.biases[0] - &wx.row(0)).iter().all(|d| d.abs() < 1e-12));
}

#[test]
fn zero_output_gradient_gives_zero_parameter_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let mlp = Mlp::new(&[4, 6, 6, 2], &mut rng).unwrap();
    let x = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
    let mut tape = Tape::new();
    mlp.forward_recorded(x.view(), &mut tape).unwrap();
    let grads = mlp.backward(&tape, Array2::zeros((3, 2)).view()).unwrap();
    assert_eq!(grads.norm(), 0.0);
}

#[test]
fn backward_without_forward_is_an_error() {
    let mlp = Mlp::zeros(&[3, 2]).unwrap();
    assert!(mlp.backward(&Tape::new(), Array2::zeros((1, 2)).view()).is_err());
}

#[test]
fn pass_through_layer_returns_noisy_state() {
    let emb = TimeEmbedding::default();
    let cfg = DenoiserConfig::default();
    let mut w = Array2::zeros((cfg.input_dim(), 2));
    w[[0, 0]] = 1.0;
    w[[1, 1]] = 1.0;
    let mlp = Mlp::from_layers(vec![w], vec![Array1::zeros(2)]).unwrap();
    let model = MlpDenoiser::from_parts(mlp, emb, Parameterization::X0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let x_t = ComplexSpectrogram::standard_normal(3, 5, &mut rng);
    let y = ComplexSpectrogram::standard_normal(3, 5, &mut rng);
    assert_eq!(model.forward(&x_t, &y, 0.4).unwrap(), x_t);
}

#[test]
fn same_seed_same_model_same_output() {
    let cfg = DenoiserConfig {
        hidden: vec![16, 16],
        ..Default::default()
    };
    let a = MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x_t = ComplexSpectrogram::standard_normal(4, 8, &mut rng);
    let y = ComplexSpectrogram::standard_normal(4, 8, &mut rng);
    assert_eq!(a.forward(&x_t, &y, 0.7).unwrap(), b.forward(&x_t, &y, 0.7).unwrap());
}

#[test]
fn checkpoints_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for p in [Parameterization::X0, Parameterization::Score] {
        let cfg = DenoiserConfig {
            hidden: vec![8, 4],
            parameterization: p,
            ..Default::default()
        };
        let model = MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let path = dir.path().join(format!("{p}.ckpt"));
        save_checkpoint(&model, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.parameterization(), p);
    }
}

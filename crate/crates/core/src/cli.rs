//! The `thunder` command line: corpus generation, training, enhancement,
//! sweeps and self-verification.
//!
//! Exit codes are 0 on success, 1 on usage errors, 2 on runtime failures and
//! 3 when a verification suite fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;

use crate::config::RunConfig;
use crate::corpus::{build_corpus, CleanKind, Manifest, NoiseKind, ToyTask, MANIFEST_FILE};
use crate::denoiser::{
    load_checkpoint, save_checkpoint, Denoiser, GaussianPrior, MlpDenoiser, OracleDenoiser, Parameterization,
};
use crate::error::Error;
use crate::eval::{self, EvalItem};
use crate::metrics::MetricReport;
use crate::sampler::{enhance, Mode};
use crate::signal::{istft, read_wav, stft, write_wav, BitDepth};
use crate::spectrogram::ComplexSpectrogram;
use crate::trainer::{train, TrainingPair};
use crate::verify::Suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
    Verification(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Parse a kebab-case enum name through its serde representation.
fn kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    use serde::de::value::{Error as DeError, StrDeserializer};
    use serde::de::IntoDeserializer;
    let de: StrDeserializer<'_, DeError> = s.into_deserializer();
    T::deserialize(de).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "thunder", version, about = "Brownian-bridge diffusion speech enhancement")]
struct Cli {
    /// Configuration file; defaults to $THUNDER_CONFIG, then built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic clean/noise/noisy corpus with a manifest.
    Gen(GenArgs),
    /// Train an MLP denoiser and write a checkpoint and loss curve.
    Train(TrainArgs),
    /// Enhance a WAV file or every item of a manifest.
    Enhance(EnhanceArgs),
    /// Sweep step counts or mixture weights and write tidy CSV.
    Sweep(SweepArgs),
    /// Run a self-verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Number of utterances.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = kebab::<CleanKind>, value_name = "harmonic|filtered-noise|gaussian-prior")]
    clean_kind: Option<CleanKind>,
    #[arg(long, value_parser = kebab::<NoiseKind>, value_name = "white|pink|babble")]
    noise_kind: Option<NoiseKind>,
    /// Utterance length in seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    sample_rate: Option<u32>,
    /// Comma-separated SNRs in dB, cycled over utterances.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    #[arg(long, value_parser = kebab::<BitDepth>, value_name = "pcm16|float32")]
    bit_depth: Option<BitDepth>,
    /// Replace an existing manifest.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
#[group(id = "data", required = true, multiple = false)]
struct DataSource {
    /// Corpus manifest to read.
    #[arg(long, group = "data", value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Use N in-memory items drawn from the speech-like Gaussian prior.
    #[arg(long, group = "data", value_name = "N")]
    toy: Option<usize>,
}

#[derive(Debug, Args)]
struct ToyShape {
    /// Frequency bins of toy items.
    #[arg(long, default_value_t = 16)]
    bins: usize,
    /// Frames per toy item.
    #[arg(long)]
    frames: Option<usize>,
    /// Seed of the toy item draw.
    #[arg(long, default_value_t = 7)]
    toy_seed: u64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[command(flatten)]
    data: DataSource,
    #[command(flatten)]
    toy: ToyShape,
    /// Training objective; also sets the model's parameterization.
    #[arg(long, value_parser = kebab::<Parameterization>, value_name = "x0|score")]
    loss_mode: Option<Parameterization>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
#[group(id = "model", required = true, multiple = false)]
struct ModelSource {
    /// Trained checkpoint.
    #[arg(long, group = "model", value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Exact posterior-mean denoiser for a Gaussian prior.
    #[arg(long, group = "model")]
    oracle: bool,
}

#[derive(Debug, Args)]
struct SamplerFlags {
    #[arg(long, value_parser = kebab::<Mode>, value_name = "regression|diffusion|mixture")]
    mode: Option<Mode>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Reverse steps N.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_corrector: bool,
}

#[derive(Debug, Args)]
struct EnhanceArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Single noisy WAV file.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    input: Option<PathBuf>,
    /// Corpus manifest; metrics are written for every row.
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    model: ModelSource,
    /// Manifest whose clean and noise signals define the oracle prior.
    #[arg(long, value_name = "PATH")]
    prior_manifest: Option<PathBuf>,
    #[command(flatten)]
    sampler: SamplerFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Steps,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorrectorChoice {
    Both,
    On,
    Off,
}

#[derive(Debug, Args)]
struct SweepArgs {
    kind: SweepKind,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Comma-separated grid: step counts or mixture weights.
    #[arg(long)]
    grid: Option<String>,
    /// Corrector settings to sweep (steps only).
    #[arg(long, value_enum, default_value_t = CorrectorChoice::Both)]
    corrector: CorrectorChoice,
    #[command(flatten)]
    data: DataSource,
    #[command(flatten)]
    toy: ToyShape,
    #[command(flatten)]
    model: ModelSource,
    #[command(flatten)]
    sampler: SamplerFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Marginals,
    Conversion,
    OptimalScore,
    DriftLimit,
    Gradient,
    Oracle,
    Ouve,
    All,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    suite: SuiteArg,
}

/// Parse `args` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => report(f),
    }
}

/// Print a failure and map it to its exit code.
fn report(f: Failure) -> i32 {
    match f {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Failure::Runtime(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
        Failure::Verification(n) => {
            eprintln!("verification failed: {n} check(s)");
            EXIT_VERIFY
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(cli.config.as_deref()).or_else(|e| usage(e.to_string()))?;
    match cli.command {
        Command::Gen(a) => cmd_gen(cfg, a),
        Command::Train(a) => cmd_train(cfg, a),
        Command::Enhance(a) => cmd_enhance(cfg, a),
        Command::Sweep(a) => cmd_sweep(cfg, a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn checked(cfg: RunConfig) -> CliResult<RunConfig> {
    cfg.validate().or_else(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn prepare_out(dir: &Path, cfg: &RunConfig) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let path = cfg.write_resolved(dir)?;
    log::info!("resolved config written to {}", path.display());
    Ok(())
}

fn cmd_gen(mut cfg: RunConfig, a: GenArgs) -> CliResult<()> {
    let c = &mut cfg.corpus;
    c.n_utterances = a.n.unwrap_or(c.n_utterances);
    c.seed = a.seed.unwrap_or(c.seed);
    c.clean_kind = a.clean_kind.unwrap_or(c.clean_kind);
    c.noise_kind = a.noise_kind.unwrap_or(c.noise_kind);
    c.duration_s = a.duration.unwrap_or(c.duration_s);
    c.sample_rate = a.sample_rate.unwrap_or(c.sample_rate);
    c.bit_depth = a.bit_depth.unwrap_or(c.bit_depth);
    if let Some(snr) = a.snr {
        c.snr_grid = snr;
    }
    let cfg = checked(cfg)?;
    if a.out.join(MANIFEST_FILE).exists() && !a.force {
        return Err(Error::ManifestExists(a.out.join(MANIFEST_FILE)).into());
    }
    prepare_out(&a.out, &cfg)?;
    let manifest = build_corpus(&cfg.corpus, &a.out, a.force)?;
    println!(
        "wrote {} utterances to {}",
        manifest.len(),
        a.out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

fn load_manifest(path: &Path) -> CliResult<Manifest> {
    let m = Manifest::load(path)?;
    if m.is_empty() {
        return Err(Error::Manifest(format!("{}: no records", path.display())).into());
    }
    Ok(m)
}

fn cmd_train(mut cfg: RunConfig, a: TrainArgs) -> CliResult<()> {
    if let Some(mode) = a.loss_mode {
        cfg.train.loss_mode = mode;
        cfg.denoiser.parameterization = mode;
    }
    let t = &mut cfg.train;
    t.epochs = a.epochs.unwrap_or(t.epochs);
    t.learning_rate = a.lr.unwrap_or(t.learning_rate);
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.seed = a.seed.unwrap_or(t.seed);
    if let Some(h) = a.hidden {
        cfg.denoiser.hidden = h;
    }
    let cfg = checked(cfg)?;
    let pairs = match (&a.data.manifest, a.data.toy) {
        (Some(path), _) => {
            let m = load_manifest(path)?;
            m.records
                .iter()
                .map(|rec| {
                    let (clean, _, noisy) = m.read_item(rec)?;
                    TrainingPair::new(stft(&clean, &cfg.stft)?, stft(&noisy, &cfg.stft)?)
                })
                .collect::<crate::Result<Vec<_>>>()?
        }
        (None, Some(0)) => return usage("--toy needs at least one item"),
        (None, Some(n)) => {
            let task = ToyTask::speech_like(a.toy.bins, a.toy.frames.unwrap_or(1))?;
            task.training_pairs(n, a.toy.toy_seed)
        }
        (None, None) => unreachable!("clap requires a data source"),
    };
    let sde = cfg.sde.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = MlpDenoiser::new(&cfg.denoiser, &mut rng)?;
    prepare_out(&a.out, &cfg)?;
    let report = train(&mut model, sde.as_ref(), &pairs, &cfg.train)?;
    save_checkpoint(&model, a.out.join("model.ckpt"))?;
    report.write_csv(a.out.join("loss.csv"))?;
    println!(
        "trained {} parameters on {} pairs ({} validation); final validation loss {:.6}",
        model.param_count(),
        report.train_size,
        report.val_size,
        report.final_val_loss().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn apply_sampler_flags(cfg: &mut RunConfig, f: &SamplerFlags) {
    let s = &mut cfg.sampler;
    s.mode = f.mode.unwrap_or(s.mode);
    if s.mode == Mode::Regression && (f.steps.is_some() || f.alpha.is_some()) {
        log::warn!("regression mode ignores --steps and --alpha");
        eprintln!("warning: regression mode ignores --steps and --alpha");
    }
    s.alpha = f.alpha.unwrap_or(s.alpha);
    s.n_steps = f.steps.unwrap_or(s.n_steps);
    s.seed = f.seed.unwrap_or(s.seed);
    if f.no_corrector {
        s.corrector = false;
    }
}

fn spectra(m: &Manifest, cfg: &RunConfig) -> crate::Result<(Vec<ComplexSpectrogram>, Vec<ComplexSpectrogram>)> {
    let mut clean = Vec::with_capacity(m.len());
    let mut noise = Vec::with_capacity(m.len());
    for rec in &m.records {
        let (c, n, _) = m.read_item(rec)?;
        clean.push(stft(&c, &cfg.stft)?);
        noise.push(stft(&n, &cfg.stft)?);
    }
    Ok((clean, noise))
}

fn load_denoiser(
    src: &ModelSource,
    cfg: &RunConfig,
    prior: impl FnOnce() -> CliResult<GaussianPrior>,
) -> CliResult<Box<dyn Denoiser>> {
    match &src.checkpoint {
        Some(path) => Ok(Box::new(load_checkpoint(path)?)),
        None => {
            let p = prior()?;
            log::info!("oracle prior over {} bins ({:?} SDE)", p.bins(), cfg.sde.kind);
            Ok(Box::new(OracleDenoiser::new(p)))
        }
    }
}

/// Regression and mixture modes evaluate the model at `t = 1`, where a score
/// cannot be turned back into a clean estimate.
fn check_mode(denoiser: &dyn Denoiser, mode: Mode) -> CliResult<()> {
    if mode != Mode::Diffusion && denoiser.parameterization() == Parameterization::Score {
        return usage(format!(
            "{mode} mode needs an x0-parameterized model; score models only support diffusion"
        ));
    }
    Ok(())
}

fn manifest_prior(path: &Path, cfg: &RunConfig) -> CliResult<GaussianPrior> {
    let m = load_manifest(path)?;
    let (clean, noise) = spectra(&m, cfg)?;
    Ok(GaussianPrior::estimate(&clean, &noise)?)
}

fn drop_sar(report: &mut MetricReport, keep: bool) {
    if !keep {
        report.rows.iter_mut().for_each(|r| r.si_sar = None);
    }
}

fn cmd_enhance(mut cfg: RunConfig, a: EnhanceArgs) -> CliResult<()> {
    apply_sampler_flags(&mut cfg, &a.sampler);
    let cfg = checked(cfg)?;
    let prior_path = a.prior_manifest.clone().or_else(|| a.manifest.clone());
    if a.model.oracle && prior_path.is_none() {
        return usage("--oracle with --input needs --prior-manifest");
    }
    let sde = cfg.sde.build()?;
    let req = cfg.sampler.to_request();
    let denoiser = load_denoiser(&a.model, &cfg, || manifest_prior(prior_path.as_deref().unwrap(), &cfg))?;
    check_mode(denoiser.as_ref(), req.mode)?;
    prepare_out(&a.out, &cfg)?;

    if let Some(input) = &a.input {
        let noisy = read_wav(input)?;
        let est = enhance(&stft(&noisy, &cfg.stft)?, denoiser.as_ref(), sde.as_ref(), &req)?;
        let sig = istft(&est, &cfg.stft, noisy.len(), noisy.sample_rate())?;
        let name = input
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| "enhanced.wav".into());
        let out = a.out.join(name);
        write_wav(&out, &sig, cfg.corpus.bit_depth)?;
        println!("wrote {}", out.display());
        return Ok(());
    }

    let manifest = load_manifest(a.manifest.as_deref().expect("clap requires an input"))?;
    let items = EvalItem::load_manifest(&manifest, &cfg.stft)?;
    let wav_dir = a.out.join("enhanced");
    std::fs::create_dir_all(&wav_dir).map_err(Error::from)?;
    let mut report = MetricReport::default();
    for (i, item) in items.iter().enumerate() {
        let mut r = req.clone();
        r.sampler.seed = eval::item_seed(req.sampler.seed, i);
        let est = enhance(&item.noisy, denoiser.as_ref(), sde.as_ref(), &r)?;
        if let Some(sig) = item.render(&est)? {
            write_wav(wav_dir.join(format!("{}.wav", item.id)), &sig, cfg.corpus.bit_depth)?;
        }
        let (si_sdr, si_sar) = item.score(&est)?;
        report.push(crate::metrics::MetricRow {
            utterance_id: item.id.clone(),
            mode: r.mode.to_string(),
            n_steps: r.reported_steps(),
            alpha: r.alpha,
            si_sdr,
            si_sar,
            seed: r.sampler.seed,
        });
    }
    drop_sar(&mut report, cfg.metrics.si_sar);
    report.write_csv(a.out.join("metrics.csv"))?;
    let noisy = eval::evaluate_noisy(&items)?;
    println!(
        "{} items: mean SI-SDR {:.2} dB (noisy {:.2} dB)",
        report.len(),
        report.mean_si_sdr().unwrap_or(f64::NAN),
        noisy.mean_si_sdr().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn parse_grid<T: std::str::FromStr>(text: &str) -> CliResult<Vec<T>> {
    let grid: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().or_else(|_| usage(format!("invalid grid value {s:?}"))))
        .collect::<CliResult<_>>()?;
    if grid.is_empty() {
        return usage("sweep grid must not be empty");
    }
    Ok(grid)
}

fn sweep_items(a: &SweepArgs, cfg: &RunConfig) -> CliResult<(Vec<EvalItem>, Option<GaussianPrior>)> {
    match (&a.data.manifest, a.data.toy) {
        (Some(path), _) => Ok((EvalItem::load_manifest(&load_manifest(path)?, &cfg.stft)?, None)),
        (None, Some(0)) => usage("--toy needs at least one item"),
        (None, Some(n)) => {
            let task = ToyTask::speech_like(a.toy.bins, a.toy.frames.unwrap_or(64))?;
            // Nominal audio length of one frame, for real-time factors.
            let frame_s = cfg.stft.hop as f64 / cfg.corpus.sample_rate as f64;
            let items = task
                .items(n, a.toy.toy_seed)
                .iter()
                .map(|it| EvalItem::from_toy(it, frame_s * task.frames as f64))
                .collect();
            Ok((items, Some(task.prior)))
        }
        (None, None) => unreachable!("clap requires a data source"),
    }
}

fn cmd_sweep(mut cfg: RunConfig, a: SweepArgs) -> CliResult<()> {
    apply_sampler_flags(&mut cfg, &a.sampler);
    if a.kind == SweepKind::Steps && cfg.sampler.mode == Mode::Regression {
        return usage("a step sweep needs diffusion or mixture mode");
    }
    let cfg = checked(cfg)?;
    let (items, toy_prior) = sweep_items(&a, &cfg)?;
    let denoiser = load_denoiser(&a.model, &cfg, || match (toy_prior, &a.data.manifest) {
        (Some(p), _) => Ok(p),
        (None, Some(path)) => manifest_prior(path, &cfg),
        (None, None) => unreachable!(),
    })?;
    let mode = match a.kind {
        SweepKind::Steps => cfg.sampler.mode,
        SweepKind::Alpha => Mode::Mixture,
    };
    check_mode(denoiser.as_ref(), mode)?;
    let sde = cfg.sde.build()?;
    prepare_out(&a.out, &cfg)?;
    match a.kind {
        SweepKind::Steps => {
            let grid: Vec<usize> = parse_grid(a.grid.as_deref().unwrap_or("1,5,15,30"))?;
            if grid.contains(&0) {
                return usage("step counts must be positive");
            }
            let correctors: &[bool] = match a.corrector {
                CorrectorChoice::Both => &[true, false],
                CorrectorChoice::On => &[true],
                CorrectorChoice::Off => &[false],
            };
            let mut rows = eval::steps_sweep(
                &items,
                denoiser.as_ref(),
                sde.as_ref(),
                &cfg.sampler.to_request(),
                &grid,
                correctors,
            )?;
            if !cfg.metrics.si_sar {
                rows.iter_mut().for_each(|r| r.si_sar = None);
            }
            eval::write_csv(a.out.join("steps.csv"), &rows)?;
            let summary = eval::summarize_steps(&rows);
            eval::write_csv(a.out.join("steps_summary.csv"), &summary)?;
            println!("N\tcorrector\tmean_si_sdr\twall_s\trtf");
            for s in summary {
                println!(
                    "{}\t{}\t{:.3}\t{:.4}\t{:.4}",
                    s.n_steps, s.corrector, s.mean_si_sdr, s.wall_s, s.rtf
                );
            }
        }
        SweepKind::Alpha => {
            let grid: Vec<f64> = parse_grid(a.grid.as_deref().unwrap_or("0,0.2,0.4,0.6,0.8,1.0"))?;
            if grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return usage("mixture weights must lie in [0, 1]");
            }
            let mut rows = eval::alpha_sweep(&items, denoiser.as_ref(), sde.as_ref(), &cfg.sampler.sampler(), &grid)?;
            if !cfg.metrics.si_sar {
                rows.iter_mut().for_each(|r| r.si_sar = None);
            }
            eval::write_csv(a.out.join("alpha.csv"), &rows)?;
            println!("alpha\tmean_si_sdr\tmean_si_sar");
            for &alpha in &grid {
                let sel = || rows.iter().filter(move |r| r.alpha == alpha);
                println!(
                    "{alpha}\t{:.3}\t{:.3}",
                    crate::metrics::mean(sel().map(|r| r.si_sdr)).unwrap_or(f64::NAN),
                    crate::metrics::mean(sel().filter_map(|r| r.si_sar)).unwrap_or(f64::NAN)
                );
            }
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CliResult<()> {
    let suites: Vec<Suite> = match a.suite {
        SuiteArg::Marginals => vec![Suite::Marginals],
        SuiteArg::Conversion => vec![Suite::Conversion],
        SuiteArg::OptimalScore => vec![Suite::OptimalScore],
        SuiteArg::DriftLimit => vec![Suite::DriftLimit],
        SuiteArg::Gradient => vec![Suite::Gradient],
        SuiteArg::Oracle => vec![Suite::Oracle],
        SuiteArg::Ouve => vec![Suite::Ouve],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let mut failed = 0;
    for s in suites {
        let report = s.run()?;
        print!("{report}");
        failed += report.checks.iter().filter(|c| !c.passed).count();
    }
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kebab_parses_serde_names() {
        assert_eq!(kebab::<Mode>("mixture"), Ok(Mode::Mixture));
        assert_eq!(kebab::<CleanKind>("gaussian-prior"), Ok(CleanKind::GaussianPrior));
        assert!(kebab::<Mode>("nope").is_err());
    }

    #[test]
    fn grids_parse_and_reject_empty() {
        assert_eq!(parse_grid::<usize>("1, 5,30").unwrap(), vec![1, 5, 30]);
        assert!(matches!(parse_grid::<usize>(""), Err(Failure::Usage(_))));
        assert!(matches!(parse_grid::<usize>("1,x"), Err(Failure::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["thunder"]), EXIT_USAGE);
        assert_eq!(run(["thunder", "verify", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["thunder", "--help"]), EXIT_OK);
        assert_eq!(run(["thunder", "verify", "conversion"]), EXIT_OK);
        assert_eq!(report(Failure::Verification(2)), EXIT_VERIFY);
        assert_eq!(report(Failure::Runtime(Error::ZeroEnergy("x"))), EXIT_RUNTIME);
        assert_eq!(report(Failure::Usage("x".into())), EXIT_USAGE);
    }
}

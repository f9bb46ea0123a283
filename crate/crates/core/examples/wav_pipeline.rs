//! Synthesize one noisy utterance, write it as WAV, read it back, run it
//! through the STFT and enhance it with an oracle fitted to the utterance.

use thunder::corpus::{gen_utterance, CleanKind, CorpusSpec};
use thunder::denoiser::{GaussianPrior, OracleDenoiser};
use thunder::metrics::si_sdr;
use thunder::sampler::{enhance, EnhanceRequest};
use thunder::sde::BrownianBridgeSde;
use thunder::signal::{istft, read_wav, stft, write_wav, BitDepth, StftConfig};

fn main() -> thunder::Result<()> {
    let spec = CorpusSpec {
        clean_kind: CleanKind::Harmonic,
        snr_grid: vec![5.0],
        ..Default::default()
    };
    let utt = gen_utterance(&spec, 0)?;
    let path = std::env::temp_dir().join("thunder_noisy.wav");
    write_wav(&path, &utt.noisy, BitDepth::Pcm16)?;
    let noisy = read_wav(&path)?;
    println!(
        "{}: {} samples at {} Hz, SNR {} dB",
        path.display(),
        noisy.len(),
        noisy.sample_rate(),
        utt.snr_db
    );

    let cfg = StftConfig::default();
    let y = stft(&noisy, &cfg)?;
    let round_trip = istft(&y, &cfg, noisy.len(), noisy.sample_rate())?;
    println!("STFT round trip SI-SDR {:.1} dB", si_sdr(&round_trip, &noisy)?);

    let prior = GaussianPrior::estimate(&[stft(&utt.clean, &cfg)?], &[stft(&utt.noise, &cfg)?])?;
    let oracle = OracleDenoiser::new(prior);
    let est = enhance(
        &y,
        &oracle,
        &BrownianBridgeSde::default(),
        &EnhanceRequest::regression(),
    )?;
    let out = istft(&est, &cfg, noisy.len(), noisy.sample_rate())?;
    println!(
        "SI-SDR noisy {:.2} dB, regression {:.2} dB",
        si_sdr(&noisy, &utt.clean)?,
        si_sdr(&out, &utt.clean)?
    );
    Ok(())
}

//! Build a small synthetic corpus on disk and re-measure the SNR of every
//! mixture from the written files.

use thunder::corpus::{build_corpus, CorpusSpec, NoiseKind};
use thunder::signal::snr_db;

fn main() -> thunder::Result<()> {
    let dir = std::env::temp_dir().join("thunder_corpus");
    let spec = CorpusSpec {
        n_utterances: 4,
        noise_kind: NoiseKind::Babble,
        seed: 7,
        ..Default::default()
    };
    let manifest = build_corpus(&spec, &dir, true)?;
    for rec in &manifest.records {
        let (clean, noise, _) = manifest.read_item(rec)?;
        println!(
            "{}  target {:5.1} dB  measured {:8.4} dB",
            rec.id,
            rec.snr_db,
            snr_db(&clean, &noise)
        );
    }
    println!("manifest at {}", dir.join(thunder::corpus::MANIFEST_FILE).display());
    Ok(())
}

//! Versioned binary checkpoint for [`MlpDenoiser`].
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic            8 bytes   "THNDRCKP"
//! version          u32       1
//! header_len       u32
//! header           header_len bytes of UTF-8 JSON:
//!                  {"layer_dims": [...], "activation": "tanh",
//!                   "time_embedding": {"frequencies": K, "max_frequency": F},
//!                   "parameterization": "x0" | "score"}
//! array_count      u32
//! array_count times:
//!   name_len       u32
//!   name           UTF-8, "layer{i}.weight" or "layer{i}.bias"
//!   ndim           u32
//!   dims           ndim × u64
//!   values         product(dims) × f64, row-major
//! ```
//!
//! Weight `i` has shape `layer_dims[i] × layer_dims[i+1]` and maps a row of
//! activations to the next layer by right-multiplication.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Mlp, MlpDenoiser, Parameterization, TimeEmbedding};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"THNDRCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    layer_dims: Vec<usize>,
    activation: String,
    time_embedding: TimeEmbedding,
    parameterization: Parameterization,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn save_checkpoint(model: &MlpDenoiser, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_to(model, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpDenoiser> {
    let bytes = std::fs::read(path)?;
    read_from(&mut bytes.as_slice())
}

fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| bad("length does not fit in u32"))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_array(w: &mut impl Write, name: &str, dims: &[usize], values: &[f64]) -> Result<()> {
    write_u32(w, name.len())?;
    w.write_all(name.as_bytes())?;
    write_u32(w, dims.len())?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn write_to(model: &MlpDenoiser, w: &mut impl Write) -> Result<()> {
    let mlp = model.mlp();
    let header = Header {
        layer_dims: mlp.dims(),
        activation: "tanh".into(),
        time_embedding: model.embedding(),
        parameterization: model.config().parameterization,
    };
    let json = serde_json::to_vec(&header).map_err(|e| bad(e.to_string()))?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    write_u32(w, json.len())?;
    w.write_all(&json)?;
    write_u32(w, 2 * mlp.weights().len())?;
    for (i, (wt, b)) in mlp.weights().iter().zip(mlp.biases()).enumerate() {
        let wv: Vec<f64> = wt.iter().copied().collect();
        write_array(w, &format!("layer{i}.weight"), &[wt.nrows(), wt.ncols()], &wv)?;
        write_array(
            w,
            &format!("layer{i}.bias"),
            &[b.len()],
            b.as_slice().expect("contiguous"),
        )?;
    }
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| bad("unexpected end of checkpoint"))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<usize> {
    Ok(u32::from_le_bytes(read_exact(r)?) as usize)
}

fn read_bytes(r: &mut impl Read, len: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(bad("unexpected end of checkpoint"));
    }
    Ok(buf)
}

fn read_array(r: &mut impl Read) -> Result<(String, Vec<usize>, Vec<f64>)> {
    let name_len = read_u32(r)?;
    let name = String::from_utf8(read_bytes(r, name_len)?).map_err(|_| bad("array name is not UTF-8"))?;
    let ndim = read_u32(r)?;
    if ndim > 8 {
        return Err(bad(format!("array {name} has {ndim} dimensions")));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(u64::from_le_bytes(read_exact(r)?) as usize);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad(format!("array {name} is too large")))?;
    let bytes = read_bytes(r, count.checked_mul(8).ok_or_else(|| bad("array too large"))?)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((name, dims, values))
}

pub(crate) fn read_from(r: &mut impl Read) -> Result<MlpDenoiser> {
    let magic: [u8; 8] = read_exact(r)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file (bad magic)"));
    }
    let version = u32::from_le_bytes(read_exact(r)?);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let header_len = read_u32(r)?;
    let header: Header =
        serde_json::from_slice(&read_bytes(r, header_len)?).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.activation != "tanh" {
        return Err(bad(format!("unsupported activation {:?}", header.activation)));
    }
    let layers = header.layer_dims.len().saturating_sub(1);
    if read_u32(r)? != 2 * layers {
        return Err(bad("array count does not match layer_dims"));
    }
    let mut weights = Vec::with_capacity(layers);
    let mut biases = Vec::with_capacity(layers);
    for i in 0..layers {
        let (fan_in, fan_out) = (header.layer_dims[i], header.layer_dims[i + 1]);
        let (name, dims, values) = read_array(r)?;
        if name != format!("layer{i}.weight") || dims != [fan_in, fan_out] {
            return Err(bad(format!(
                "expected layer{i}.weight {fan_in}x{fan_out}, found {name} {dims:?}"
            )));
        }
        weights.push(Array2::from_shape_vec((fan_in, fan_out), values).map_err(|e| bad(e.to_string()))?);
        let (name, dims, values) = read_array(r)?;
        if name != format!("layer{i}.bias") || dims != [fan_out] {
            return Err(bad(format!("expected layer{i}.bias {fan_out}, found {name} {dims:?}")));
        }
        biases.push(Array1::from_vec(values));
    }
    let mlp = Mlp::from_layers(weights, biases)?;
    MlpDenoiser::from_parts(mlp, header.time_embedding, header.parameterization)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::DenoiserConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> MlpDenoiser {
        let cfg = DenoiserConfig {
            hidden: vec![7, 3],
            parameterization: Parameterization::Score,
            ..DenoiserConfig::default()
        };
        MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let m = model();
        save_checkpoint(&m, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn layout_starts_with_magic_and_version() {
        let mut buf = Vec::new();
        write_to(&model(), &mut buf).unwrap();
        assert_eq!(&buf[..8], b"THNDRCKP");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        let hlen = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&buf[16..16 + hlen]).unwrap();
        assert_eq!(header["layer_dims"], serde_json::json!([22, 7, 3, 2]));
        assert_eq!(header["parameterization"], "score");
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let mut buf = Vec::new();
        write_to(&model(), &mut buf).unwrap();
        for cut in [4, 14, 40, buf.len() - 1] {
            assert!(
                matches!(read_from(&mut &buf[..cut]), Err(Error::Checkpoint(_))),
                "cut {cut}"
            );
        }
        let mut wrong = buf.clone();
        wrong[0] = b'X';
        assert!(read_from(&mut wrong.as_slice()).is_err());
        let mut v2 = buf.clone();
        v2[8] = 2;
        assert!(read_from(&mut v2.as_slice())
            .unwrap_err()
            .to_string()
            .contains("version"));
    }
}

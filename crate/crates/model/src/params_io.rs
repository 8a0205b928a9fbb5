//! Binary parameter files.
//!
//! Layout: magic `SGRF`, format version (u32 LE), schema fingerprint
//! (u64 LE), config (hidden u32, layers u32, aggregator code u8, seed u64),
//! parameter count (u32), then per parameter rows/cols (u32 each) and the
//! row-major f64 LE block, in deterministic id order.

use std::io::{Read, Write};

use logmend_encode::EncoderSet;
use logmend_tensor::Tensor;

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::params::ModelParams;

const MAGIC: &[u8; 4] = b"SGRF";
const VERSION: u32 = 1;

/// Stable FNV-1a fingerprint of the schema and encoder widths; guards a
/// parameter file against being loaded with mismatched encoders.
pub fn schema_fingerprint(enc: &EncoderSet) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(enc.schema.case_id_column.as_bytes());
    eat(enc.schema.activity_column.as_bytes());
    eat(enc.schema.timestamp_column.as_bytes());
    for (attr, attribute) in enc.schema.attributes.iter().enumerate() {
        eat(attribute.name.as_bytes());
        eat(&[attribute.kind as u8, attribute.scope as u8]);
        eat(&(enc.width(attr) as u64).to_le_bytes());
    }
    hash
}

fn aggregator_code(name: &str) -> Result<u8, ModelError> {
    match name {
        "sum" => Ok(0),
        "mean" => Ok(1),
        "max" => Ok(2),
        other => Err(ModelError::InvalidConfig(format!("unknown aggregator `{other}`"))),
    }
}

fn aggregator_name(code: u8) -> Result<&'static str, ModelError> {
    match code {
        0 => Ok("sum"),
        1 => Ok("mean"),
        2 => Ok("max"),
        other => Err(ModelError::BadParamsFile(format!("unknown aggregator code {other}"))),
    }
}

pub fn save_params(
    params: &ModelParams,
    cfg: &ModelConfig,
    enc: &EncoderSet,
    mut sink: impl Write,
) -> Result<(), ModelError> {
    sink.write_all(MAGIC)?;
    sink.write_all(&VERSION.to_le_bytes())?;
    sink.write_all(&schema_fingerprint(enc).to_le_bytes())?;
    sink.write_all(&(cfg.hidden_size as u32).to_le_bytes())?;
    sink.write_all(&(cfg.n_layers as u32).to_le_bytes())?;
    sink.write_all(&[aggregator_code(&cfg.aggregator)?])?;
    sink.write_all(&cfg.seed.to_le_bytes())?;
    sink.write_all(&(params.set.len() as u32).to_le_bytes())?;
    for param in params.set.iter() {
        sink.write_all(&(param.value.rows() as u32).to_le_bytes())?;
        sink.write_all(&(param.value.cols() as u32).to_le_bytes())?;
        for &v in param.value.data() {
            sink.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Loads parameters written by [`save_params`], rebuilding the layout from
/// the encoders and stored config and verifying every shape.
pub fn load_params(
    mut source: impl Read,
    enc: &EncoderSet,
) -> Result<(ModelParams, ModelConfig), ModelError> {
    let mut magic = [0u8; 4];
    source.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::BadParamsFile("bad magic bytes".into()));
    }
    let version = read_u32(&mut source)?;
    if version != VERSION {
        return Err(ModelError::BadParamsFile(format!(
            "unsupported format version {version}"
        )));
    }
    let fingerprint = read_u64(&mut source)?;
    if fingerprint != schema_fingerprint(enc) {
        return Err(ModelError::BadParamsFile(
            "schema fingerprint does not match the provided encoders".into(),
        ));
    }
    let hidden_size = read_u32(&mut source)? as usize;
    let n_layers = read_u32(&mut source)? as usize;
    let mut code = [0u8; 1];
    source.read_exact(&mut code)?;
    let seed = read_u64(&mut source)?;
    let cfg = ModelConfig {
        hidden_size,
        n_layers,
        aggregator: aggregator_name(code[0])?.to_string(),
        seed,
    };

    let mut params = ModelParams::init(enc, &cfg)?;
    let count = read_u32(&mut source)? as usize;
    if count != params.set.len() {
        return Err(ModelError::BadParamsFile(format!(
            "file holds {count} parameters, layout expects {}",
            params.set.len()
        )));
    }
    for param in params.set.iter_mut() {
        let rows = read_u32(&mut source)? as usize;
        let cols = read_u32(&mut source)? as usize;
        if (rows, cols) != param.value.shape() {
            return Err(ModelError::BadParamsFile(format!(
                "parameter `{}` has shape {rows}x{cols}, layout expects {:?}",
                param.name,
                param.value.shape()
            )));
        }
        let mut data = vec![0.0; rows * cols];
        let mut buf = [0u8; 8];
        for slot in &mut data {
            source.read_exact(&mut buf)?;
            *slot = f64::from_le_bytes(buf);
        }
        param.value = Tensor::new(rows, cols, data)?;
    }
    Ok((params, cfg))
}

fn read_u32(source: &mut impl Read) -> Result<u32, ModelError> {
    let mut buf = [0u8; 4];
    source.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(source: &mut impl Read) -> Result<u64, ModelError> {
    let mut buf = [0u8; 8];
    source.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

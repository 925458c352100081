//! Depth-network checkpoints.
//!
//! Layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ACDN"
//! 4       4     u32 hidden width H
//! 8       4     u32 input dimension
//! 12      4     u32 output dimension (1)
//! 16      8     u64 init seed
//! 24      8     f64 inverse-depth lower bound
//! 32      8     f64 inverse-depth upper bound
//! 40      4     u32 weight count
//! 44      4N    f32 weights in layer order (w1 b1 w2 b2 w3 b3)
//! ```
//!
//! Weights are stored as float32; loading then saving reproduces the
//! file bit for bit.

use std::fs;
use std::path::Path;

use acdepth_core::model::{weight_count, INPUT_DIM};
use acdepth_core::DepthNet;

use crate::error::{AppError, AppResult};

const MAGIC: &[u8; 4] = b"ACDN";

pub fn save_checkpoint(net: &DepthNet, path: &Path) -> AppResult<()> {
    let mut bytes = Vec::with_capacity(44 + net.weights.len() * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(net.hidden as u32).to_le_bytes());
    bytes.extend_from_slice(&(INPUT_DIM as u32).to_le_bytes());
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&net.seed.to_le_bytes());
    bytes.extend_from_slice(&net.inv_min.to_le_bytes());
    bytes.extend_from_slice(&net.inv_max.to_le_bytes());
    bytes.extend_from_slice(&(net.weights.len() as u32).to_le_bytes());
    for w in &net.weights {
        bytes.extend_from_slice(&(*w as f32).to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> AppResult<DepthNet> {
    let bytes = fs::read(path)?;
    let fail = |m: &str| AppError::Format(format!("{}: {m}", path.display()));
    if bytes.len() < 44 || &bytes[0..4] != MAGIC {
        return Err(fail("not a checkpoint file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let hidden = u32_at(4);
    let input_dim = u32_at(8);
    let out_dim = u32_at(12);
    if input_dim != INPUT_DIM || out_dim != 1 {
        return Err(fail("incompatible network dimensions"));
    }
    let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let inv_min = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let inv_max = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
    let count = u32_at(40);
    if count != weight_count(hidden) {
        return Err(fail("weight count does not match layer sizes"));
    }
    if bytes.len() != 44 + count * 4 {
        return Err(fail("truncated weight payload"));
    }
    let mut weights = Vec::with_capacity(count);
    for i in 0..count {
        let o = 44 + i * 4;
        weights.push(f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64);
    }
    Ok(DepthNet {
        hidden,
        weights,
        inv_min,
        inv_max,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use acdepth_core::model;

    #[test]
    fn save_load_save_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("acdepth-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let net = model::init_weights(77, 16);
        let p1 = dir.join("a.ckpt");
        let p2 = dir.join("b.ckpt");
        save_checkpoint(&net, &p1).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        assert_eq!(loaded.hidden, 16);
        assert_eq!(loaded.seed, 77);
        save_checkpoint(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = std::env::temp_dir().join(format!("acdepth-ckpt2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.ckpt");
        std::fs::write(&p, b"NOPE").unwrap();
        assert!(load_checkpoint(&p).is_err());
        let net = model::init_weights(1, 4);
        save_checkpoint(&net, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 2);
        std::fs::write(&p, bytes).unwrap();
        assert!(load_checkpoint(&p).is_err());
    }
}

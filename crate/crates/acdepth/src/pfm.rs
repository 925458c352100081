//! PFM (portable float map) reader and writer.
//!
//! Single-channel maps use the `Pf` magic, three-channel the `PF`
//! magic. The scale line is written as `-1.0`: negative scale marks
//! little-endian payloads, which is the only byte order produced or
//! consumed here. Rows are stored bottom-up per the format convention.

use std::fs;
use std::path::Path;

use acdepth_core::PixelGrid;

use crate::error::{AppError, AppResult};

/// Write a 1- or 3-channel grid as PFM (float32, little-endian).
pub fn write_pfm(grid: &PixelGrid, path: &Path) -> AppResult<()> {
    let (w, h, ch) = grid.shape();
    let magic = match ch {
        1 => "Pf",
        3 => "PF",
        _ => {
            return Err(AppError::Format(format!(
                "PFM supports 1 or 3 channels, got {ch}"
            )))
        }
    };
    let mut bytes = Vec::with_capacity(32 + w * h * ch * 4);
    bytes.extend_from_slice(format!("{magic}\n{w} {h}\n-1.0\n").as_bytes());
    // Bottom-up row order.
    for y in (0..h).rev() {
        for x in 0..w {
            for c in 0..ch {
                bytes.extend_from_slice(&(grid.get(x, y, c) as f32).to_le_bytes());
            }
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Read a PFM file written by [`write_pfm`] (or any little-endian PFM).
pub fn read_pfm(path: &Path) -> AppResult<PixelGrid> {
    let bytes = fs::read(path)?;
    let fail = |m: &str| AppError::Format(format!("{}: {m}", path.display()));

    // Header: magic line, dimension line, scale line, each '\n'-terminated.
    let mut pos = 0usize;
    let next_line = |bytes: &[u8], pos: &mut usize| -> AppResult<String> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos] != b'\n' {
            *pos += 1;
        }
        if *pos >= bytes.len() {
            return Err(AppError::Format(format!(
                "{}: truncated PFM header",
                path.display()
            )));
        }
        let s = String::from_utf8_lossy(&bytes[start..*pos]).into_owned();
        *pos += 1;
        Ok(s)
    };

    let magic = next_line(&bytes, &mut pos)?;
    let channels = match magic.trim() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(fail(&format!("bad PFM magic {other:?}"))),
    };
    let dims = next_line(&bytes, &mut pos)?;
    let mut it = dims.split_whitespace();
    let w: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| fail("bad width"))?;
    let h: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| fail("bad height"))?;
    let scale: f64 = next_line(&bytes, &mut pos)?
        .trim()
        .parse()
        .map_err(|_| fail("bad scale"))?;
    if scale >= 0.0 {
        return Err(fail("big-endian PFM is not supported"));
    }

    let need = w * h * channels * 4;
    if bytes.len() - pos != need {
        return Err(fail(&format!(
            "payload size {} != expected {need}",
            bytes.len() - pos
        )));
    }
    let mut grid = PixelGrid::new(w, h, channels);
    let mut off = pos;
    for y in (0..h).rev() {
        for x in 0..w {
            for c in 0..channels {
                let v = f32::from_le_bytes([
                    bytes[off],
                    bytes[off + 1],
                    bytes[off + 2],
                    bytes[off + 3],
                ]);
                grid.set(x, y, c, v as f64);
                off += 4;
            }
        }
    }
    Ok(grid)
}

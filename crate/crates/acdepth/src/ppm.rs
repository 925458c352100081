//! Binary PPM (P6, 8-bit) reader and writer for RGB images.

use std::fs;
use std::path::Path;

use acdepth_core::PixelGrid;

use crate::error::{AppError, AppResult};

/// Write an RGB grid as binary PPM; values are clamped to [0, 1] and
/// quantized to 8 bits.
pub fn write_ppm(grid: &PixelGrid, path: &Path) -> AppResult<()> {
    let (w, h, ch) = grid.shape();
    if ch != 3 {
        return Err(AppError::Format(format!(
            "PPM requires 3 channels, got {ch}"
        )));
    }
    let mut bytes = Vec::with_capacity(20 + w * h * 3);
    bytes.extend_from_slice(format!("P6\n{w} {h}\n255\n").as_bytes());
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let v = grid.get(x, y, c).clamp(0.0, 1.0);
                bytes.push((v * 255.0).round() as u8);
            }
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Read a binary PPM into a [0, 1] RGB grid.
pub fn read_ppm(path: &Path) -> AppResult<PixelGrid> {
    let bytes = fs::read(path)?;
    let fail = |m: &str| AppError::Format(format!("{}: {m}", path.display()));

    // Header tokens separated by whitespace (comments are not emitted by
    // the writer and not accepted here).
    let mut pos = 0usize;
    let token = |bytes: &[u8], pos: &mut usize| -> AppResult<String> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(AppError::Format(format!(
                "{}: truncated PPM header",
                path.display()
            )));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    if token(&bytes, &mut pos)? != "P6" {
        return Err(fail("bad PPM magic"));
    }
    let w: usize = token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| fail("bad width"))?;
    let h: usize = token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| fail("bad height"))?;
    let maxval: usize = token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| fail("bad maxval"))?;
    if maxval != 255 {
        return Err(fail("only 8-bit PPM is supported"));
    }
    pos += 1; // single whitespace byte after maxval
    if bytes.len() - pos != w * h * 3 {
        return Err(fail("payload size mismatch"));
    }
    let mut grid = PixelGrid::new(w, h, 3);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                grid.set(x, y, c, bytes[pos] as f64 / 255.0);
                pos += 1;
            }
        }
    }
    Ok(grid)
}

//! JPEG luminance quantization, simulated in the pixel domain.
//!
//! Only the lossy step of baseline JPEG is modeled: blockwise DCT,
//! uniform quantization with the scaled Annex-K luminance table, and the
//! inverse transform. Entropy coding, chroma handling and the final
//! rounding to integer pixels are out of scope; outputs stay `f64`,
//! clamped to the 8-bit range.

use crate::{dct, Error, ImagePlane, Result};

/// Annex-K luminance base quantization table (quality 50).
pub const BASE_TABLE: [[u16; 8]; 8] = [
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
];

/// The luminance quantization table for an IJG quality factor in
/// `[1, 100]`.
///
/// Each entry is `floor((base * scale + 50) / 100)` clamped to
/// `[1, 255]`, with `scale = 5000 / quality` below 50 and
/// `200 - 2 * quality` from 50 up. Quality 100 yields the all-ones
/// table.
pub fn luminance_table(quality: u8) -> Result<[[u16; 8]; 8]> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter {
            name: "quality",
            value: quality as f64,
            reason: "JPEG quality must lie in [1, 100]",
        });
    }
    let scale: u32 = if quality < 50 {
        5000 / quality as u32
    } else {
        200 - 2 * quality as u32
    };
    let mut table = [[0u16; 8]; 8];
    for u in 0..8 {
        for v in 0..8 {
            let q = (BASE_TABLE[u][v] as u32 * scale + 50) / 100;
            table[u][v] = q.clamp(1, 255) as u16;
        }
    }
    Ok(table)
}

/// Rounds half away from zero toward positive infinity: `-2.5 -> -2`,
/// `2.5 -> 3`.
#[inline]
fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Quantizes and immediately dequantizes one coefficient block in place.
pub fn quantize_block(block: &mut [[f64; 8]; 8], table: &[[u16; 8]; 8]) {
    for u in 0..8 {
        for v in 0..8 {
            let q = table[u][v] as f64;
            block[u][v] = round_half_up(block[u][v] / q) * q;
        }
    }
}

/// Quantizes a blockwise DCT plane onto the lattice of `table`
/// (dequantized representation, ready for the inverse transform).
pub fn quantize_plane(coeffs: &ImagePlane, table: &[[u16; 8]; 8]) -> Result<ImagePlane> {
    let (h, w) = coeffs.shape();
    if h % dct::BLOCK != 0 || w % dct::BLOCK != 0 {
        return Err(Error::InvalidDimensions {
            height: h,
            width: w,
            reason: "dimensions must be multiples of the 8x8 block size",
        });
    }
    let mut out = coeffs.clone();
    for br in 0..h / 8 {
        for bc in 0..w / 8 {
            let mut block = out.block8(br, bc);
            quantize_block(&mut block, table);
            out.set_block8(br, bc, &block);
        }
    }
    Ok(out)
}

/// One round of JPEG compression and decompression at the given quality.
///
/// Pixels are level-shifted by -128, transformed, quantized, transformed
/// back, shifted up and clamped to `[0, 255]`. Input dimensions must be
/// multiples of 8 (crop first with
/// [`ImagePlane::crop_to_multiple`](crate::ImagePlane::crop_to_multiple)).
pub fn compress(plane: &ImagePlane, quality: u8) -> Result<ImagePlane> {
    let table = luminance_table(quality)?;
    let shifted = plane.map(|v| v - 128.0);
    let coeffs = dct::block_dct(&shifted)?;
    let quantized = quantize_plane(&coeffs, &table)?;
    let back = dct::block_idct(&quantized)?;
    Ok(back.map(|v| (v + 128.0).clamp(0.0, 255.0)))
}

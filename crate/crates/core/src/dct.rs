//! Orthonormal 8x8 type-II DCT, applied blockwise to image planes.

use std::sync::LazyLock;

use crate::{Error, ImagePlane, Result};

/// Side length of the transform blocks.
pub const BLOCK: usize = 8;

/// The orthonormal DCT-II basis matrix `D`, with
/// `D[u][i] = a(u) cos((2i + 1) u pi / 16)`, `a(0) = sqrt(1/8)`,
/// `a(u) = 1/2` otherwise. Rows are orthonormal, so the inverse
/// transform is the transpose.
static DCT_MATRIX: LazyLock<[[f64; BLOCK]; BLOCK]> = LazyLock::new(|| {
    let mut d = [[0.0; BLOCK]; BLOCK];
    for (u, row) in d.iter_mut().enumerate() {
        let a = if u == 0 { (1.0 / BLOCK as f64).sqrt() } else { 0.5 };
        for (i, v) in row.iter_mut().enumerate() {
            *v = a * ((2 * i + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    d
});

/// The DCT basis matrix, row `u` holding the length-8 basis vector for
/// frequency `u`.
pub fn basis_matrix() -> &'static [[f64; BLOCK]; BLOCK] {
    &DCT_MATRIX
}

fn mat_mul(a: &[[f64; BLOCK]; BLOCK], b: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let mut out = [[0.0; BLOCK]; BLOCK];
    for i in 0..BLOCK {
        for k in 0..BLOCK {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..BLOCK {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn transpose(a: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let mut out = [[0.0; BLOCK]; BLOCK];
    for i in 0..BLOCK {
        for j in 0..BLOCK {
            out[j][i] = a[i][j];
        }
    }
    out
}

/// 2-D DCT of one 8x8 block: `Y = D X D^T`.
pub fn forward8(block: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let d = basis_matrix();
    mat_mul(&mat_mul(d, block), &transpose(d))
}

/// 2-D inverse DCT of one 8x8 block: `X = D^T Y D`.
pub fn inverse8(block: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let d = basis_matrix();
    mat_mul(&mat_mul(&transpose(d), block), d)
}

fn blockwise(
    plane: &ImagePlane,
    f: fn(&[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK],
) -> Result<ImagePlane> {
    let (h, w) = plane.shape();
    if h % BLOCK != 0 || w % BLOCK != 0 {
        return Err(Error::InvalidDimensions {
            height: h,
            width: w,
            reason: "dimensions must be multiples of the 8x8 block size",
        });
    }
    let mut out = ImagePlane::zeros(h, w);
    for br in 0..h / BLOCK {
        for bc in 0..w / BLOCK {
            out.set_block8(br, bc, &f(&plane.block8(br, bc)));
        }
    }
    Ok(out)
}

/// Blockwise forward DCT over a plane whose dimensions are multiples of 8.
///
/// Coefficients stay in place: the output pixel at `(8r + u, 8c + v)` is
/// coefficient `(u, v)` of input block `(r, c)`.
pub fn block_dct(plane: &ImagePlane) -> Result<ImagePlane> {
    blockwise(plane, forward8)
}

/// Blockwise inverse DCT; the exact inverse of [`block_dct`].
pub fn block_idct(plane: &ImagePlane) -> Result<ImagePlane> {
    blockwise(plane, inverse8)
}

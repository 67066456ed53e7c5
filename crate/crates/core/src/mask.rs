//! Anti-diagonal frequency subband masks over the 8x8 DCT grid.

use crate::{dct::BLOCK, Error, ImagePlane, Result};

/// Smallest accepted mode offset; at `-6` every AC coefficient is fragile.
pub const MIN_MODE_OFFSET: i32 = -6;
/// Largest accepted mode offset; at `7` only the highest frequency
/// `(7, 7)` remains.
pub const MAX_MODE_OFFSET: i32 = 7;

/// A subset of the 64 DCT modes of an 8x8 block.
///
/// The fragile subband with offset `c` keeps mode `(u, v)` iff
/// `u + v >= 7 + c` (zero-based frequencies), i.e. the anti-diagonal
/// high-frequency corner that strong JPEG compression quantizes to zero.
/// Larger `c` means a smaller, higher-frequency subband; the DC mode is
/// never part of a fragile subband.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandMask {
    keep: [[bool; BLOCK]; BLOCK],
    /// The offset `c` this mask was built from, when it is a fragile
    /// mask; derived masks (complements, the identity) carry `None`.
    offset: Option<i32>,
}

impl SubbandMask {
    /// The fragile (high-frequency) subband for mode offset `c`.
    pub fn fragile(c: i32) -> Result<SubbandMask> {
        if !(MIN_MODE_OFFSET..=MAX_MODE_OFFSET).contains(&c) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c as f64,
                reason: "mode offset must lie in [-6, 7]",
            });
        }
        let mut keep = [[false; BLOCK]; BLOCK];
        for (u, row) in keep.iter_mut().enumerate() {
            for (v, k) in row.iter_mut().enumerate() {
                *k = (u + v) as i32 >= 7 + c;
            }
        }
        Ok(SubbandMask {
            keep,
            offset: Some(c),
        })
    }

    /// The all-modes mask (identity filter, DC included).
    pub fn all() -> SubbandMask {
        SubbandMask {
            keep: [[true; BLOCK]; BLOCK],
            offset: None,
        }
    }

    /// The AC modes below the fragile subband for offset `c`: mode
    /// `(u, v)` iff `1 <= u + v < 7 + c`. Unlike
    /// [`SubbandMask::complement`] of a fragile mask this excludes DC,
    /// which recovery statistics must never count. Empty at `c = -6`,
    /// which is rejected.
    pub fn low_band(c: i32) -> Result<SubbandMask> {
        if !((MIN_MODE_OFFSET + 1)..=MAX_MODE_OFFSET).contains(&c) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c as f64,
                reason: "low band needs a mode offset in [-5, 7]",
            });
        }
        let mut keep = [[false; BLOCK]; BLOCK];
        for (u, row) in keep.iter_mut().enumerate() {
            for (v, k) in row.iter_mut().enumerate() {
                let s = (u + v) as i32;
                *k = s >= 1 && s < 7 + c;
            }
        }
        Ok(SubbandMask { keep, offset: None })
    }

    #[cfg(test)]
    pub(crate) fn from_predicate(f: impl Fn(usize, usize) -> bool) -> SubbandMask {
        let mut keep = [[false; BLOCK]; BLOCK];
        for (u, row) in keep.iter_mut().enumerate() {
            for (v, k) in row.iter_mut().enumerate() {
                *k = f(u, v);
            }
        }
        SubbandMask { keep, offset: None }
    }

    /// The fragile offset `c` for masks built by [`SubbandMask::fragile`].
    pub fn mode_offset(&self) -> Option<i32> {
        self.offset
    }

    /// The complementary set of modes (for a fragile mask: the
    /// low-frequency part that survives quantization).
    pub fn complement(&self) -> SubbandMask {
        let mut keep = [[false; BLOCK]; BLOCK];
        for u in 0..BLOCK {
            for v in 0..BLOCK {
                keep[u][v] = !self.keep[u][v];
            }
        }
        SubbandMask { keep, offset: None }
    }

    #[inline]
    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.keep[u][v]
    }

    /// Number of retained modes.
    pub fn retained_count(&self) -> usize {
        self.keep.iter().flatten().filter(|&&k| k).count()
    }

    /// Retained modes in row-major `(u, v)` order.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..BLOCK {
            for v in 0..BLOCK {
                if self.keep[u][v] {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Zeroes every coefficient of a blockwise DCT plane whose mode is
    /// not in the mask.
    pub fn filter_plane(&self, coeffs: &ImagePlane) -> Result<ImagePlane> {
        let (h, w) = coeffs.shape();
        if h % BLOCK != 0 || w % BLOCK != 0 {
            return Err(Error::InvalidDimensions {
                height: h,
                width: w,
                reason: "dimensions must be multiples of the 8x8 block size",
            });
        }
        let mut out = coeffs.clone();
        for r in 0..h {
            for c in 0..w {
                if !self.keep[r % BLOCK][c % BLOCK] {
                    *out.at_mut(r, c) = 0.0;
                }
            }
        }
        Ok(out)
    }

    /// Projects a spatial-domain plane onto the retained modes:
    /// blockwise DCT, zero the dropped coefficients, transform back.
    /// The identity mask reproduces the input up to floating-point
    /// round-off.
    pub fn project_spatial(&self, plane: &ImagePlane) -> Result<ImagePlane> {
        crate::dct::block_idct(&self.filter_plane(&crate::dct::block_dct(plane)?)?)
    }

    /// Collects the retained coefficients of every block, block-major
    /// (row of blocks, then column), modes in row-major order inside a
    /// block. The ordering is deterministic so that two planes filtered
    /// with the same mask yield aligned samples.
    pub fn coefficients(&self, coeffs: &ImagePlane) -> Result<Vec<f64>> {
        let (h, w) = coeffs.shape();
        if h % BLOCK != 0 || w % BLOCK != 0 {
            return Err(Error::InvalidDimensions {
                height: h,
                width: w,
                reason: "dimensions must be multiples of the 8x8 block size",
            });
        }
        let positions = self.positions();
        let mut out = Vec::with_capacity(h / BLOCK * w / BLOCK * positions.len());
        for br in 0..h / BLOCK {
            for bc in 0..w / BLOCK {
                let block = coeffs.block8(br, bc);
                out.extend(positions.iter().map(|&(u, v)| block[u][v]));
            }
        }
        Ok(out)
    }
}

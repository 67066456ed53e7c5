use crate::{Error, Result};

/// A single grayscale image plane stored row-major as `f64`.
///
/// Pixel values are not range-restricted; the same type carries 8-bit
/// image data (0..=255), noise residuals, fingerprints and blockwise
/// DCT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    /// Wraps row-major `data` of length `height * width`.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                reason: "dimensions must be positive",
            });
        }
        if data.len() != height * width {
            return Err(Error::InvalidDimensions {
                height,
                width,
                reason: "data length does not match dimensions",
            });
        }
        Ok(ImagePlane { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        ImagePlane {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        ImagePlane { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        debug_assert!(row < self.height && col < self.width);
        &mut self.data[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    /// Errors unless `self` and `other` have identical shape.
    pub fn check_same_shape(&self, other: &ImagePlane, context: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims(context, self.shape(), other.shape()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImagePlane {
        ImagePlane {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two same-shaped planes.
    pub fn zip_map(
        &self,
        other: &ImagePlane,
        context: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<ImagePlane> {
        self.check_same_shape(other, context)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ImagePlane {
            height: self.height,
            width: self.width,
            data,
        })
    }

    pub fn add(&self, other: &ImagePlane) -> Result<ImagePlane> {
        self.zip_map(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &ImagePlane) -> Result<ImagePlane> {
        self.zip_map(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &ImagePlane) -> Result<ImagePlane> {
        self.zip_map(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> ImagePlane {
        self.map(|v| v * s)
    }

    /// Clamps every value into `[lo, hi]`.
    pub fn clamp(&self, lo: f64, hi: f64) -> ImagePlane {
        self.map(|v| v.clamp(lo, hi))
    }

    /// Extracts the `height x width` window with top-left corner `(top, left)`.
    pub fn window(&self, top: usize, left: usize, height: usize, width: usize) -> Result<ImagePlane> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::InvalidDimensions {
                height,
                width,
                reason: "window exceeds plane bounds",
            });
        }
        let mut data = Vec::with_capacity(height * width);
        for r in top..top + height {
            data.extend_from_slice(&self.data[r * self.width + left..r * self.width + left + width]);
        }
        ImagePlane::new(height, width, data)
    }

    /// Center-crops so both dimensions become multiples of `block`.
    ///
    /// A leftover of `d % block` pixels is split evenly, with the extra
    /// pixel (odd leftover) going to the bottom/right side.
    pub fn crop_to_multiple(&self, block: usize) -> Result<ImagePlane> {
        if block == 0 {
            return Err(Error::InvalidParameter {
                name: "block",
                value: 0.0,
                reason: "block size must be positive",
            });
        }
        let new_h = self.height - self.height % block;
        let new_w = self.width - self.width % block;
        if new_h == 0 || new_w == 0 {
            return Err(Error::InvalidDimensions {
                height: self.height,
                width: self.width,
                reason: "plane smaller than one block",
            });
        }
        if (new_h, new_w) == self.shape() {
            return Ok(self.clone());
        }
        let top = (self.height - new_h) / 2;
        let left = (self.width - new_w) / 2;
        self.window(top, left, new_h, new_w)
    }

    /// Reads the 8x8 block whose top-left corner is `(8 * block_row, 8 * block_col)`.
    pub fn block8(&self, block_row: usize, block_col: usize) -> [[f64; 8]; 8] {
        let top = 8 * block_row;
        let left = 8 * block_col;
        debug_assert!(top + 8 <= self.height && left + 8 <= self.width);
        let mut out = [[0.0; 8]; 8];
        for (r, row) in out.iter_mut().enumerate() {
            let base = (top + r) * self.width + left;
            row.copy_from_slice(&self.data[base..base + 8]);
        }
        out
    }

    pub fn set_block8(&mut self, block_row: usize, block_col: usize, block: &[[f64; 8]; 8]) {
        let top = 8 * block_row;
        let left = 8 * block_col;
        debug_assert!(top + 8 <= self.height && left + 8 <= self.width);
        for (r, row) in block.iter().enumerate() {
            let base = (top + r) * self.width + left;
            self.data[base..base + 8].copy_from_slice(row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_lengths() {
        assert!(ImagePlane::new(2, 3, vec![0.0; 5]).is_err());
        assert!(ImagePlane::new(0, 3, vec![]).is_err());
        assert!(ImagePlane::new(2, 3, vec![0.0; 6]).is_ok());
    }

    #[test]
    fn indexing_is_row_major() {
        let p = ImagePlane::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(p.at(0, 2), 3.0);
        assert_eq!(p.at(1, 0), 4.0);
        assert_eq!(p.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn arithmetic_checks_shapes() {
        let a = ImagePlane::zeros(4, 4);
        let b = ImagePlane::zeros(4, 5);
        assert!(a.add(&b).is_err());
        assert!(a.mul(&a).is_ok());
    }

    #[test]
    fn crop_centers_the_window() {
        let p = ImagePlane::from_fn(19, 26, |r, c| (r * 100 + c) as f64);
        let cropped = p.crop_to_multiple(8).unwrap();
        assert_eq!(cropped.shape(), (16, 24));
        // 19 -> 16 leaves 3: one row trimmed on top, two at the bottom.
        // 26 -> 24 leaves 2: one column on each side.
        assert_eq!(cropped.at(0, 0), p.at(1, 1));
        assert_eq!(cropped.at(15, 23), p.at(16, 24));
    }

    #[test]
    fn crop_noop_when_already_aligned() {
        let p = ImagePlane::from_fn(16, 8, |r, c| (r + c) as f64);
        assert_eq!(p.crop_to_multiple(8).unwrap(), p);
    }

    #[test]
    fn block_roundtrip() {
        let mut p = ImagePlane::from_fn(16, 16, |r, c| (r * 16 + c) as f64);
        let b = p.block8(1, 0);
        assert_eq!(b[0][0], p.at(8, 0));
        assert_eq!(b[7][7], p.at(15, 7));
        let mut q = p.clone();
        p.set_block8(1, 0, &b);
        assert_eq!(p, q);
        let zero = [[0.0; 8]; 8];
        q.set_block8(1, 1, &zero);
        assert_eq!(q.at(9, 9), 0.0);
        assert_eq!(q.at(9, 7), p.at(9, 7));
    }
}

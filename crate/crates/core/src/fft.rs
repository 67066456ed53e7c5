//! 2-D FFT helpers for frequency-domain cross-correlation.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::ImagePlane;

/// In-place 2-D FFT over row-major data, rows then columns.
fn fft2_in_place(data: &mut [Complex<f64>], h: usize, w: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    let mut col = vec![Complex::default(); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = data[r * w + c];
        }
        col_fft.process(&mut col);
        for r in 0..h {
            data[r * w + c] = col[r];
        }
    }
}

/// Circular cross-correlation surface
/// `corr[s] = sum_x a[x + s] * b[x]` (indices wrap), computed in the
/// frequency domain. The zero-shift value lands at position `(0, 0)`.
pub(crate) fn circular_cross_correlation(a: &ImagePlane, b: &ImagePlane) -> ImagePlane {
    debug_assert_eq!(a.shape(), b.shape());
    let (h, w) = a.shape();
    let mut fa: Vec<Complex<f64>> = a.as_slice().iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut fb: Vec<Complex<f64>> = b.as_slice().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_in_place(&mut fa, h, w, false);
    fft2_in_place(&mut fb, h, w, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    fft2_in_place(&mut fa, h, w, true);
    let scale = 1.0 / (h * w) as f64;
    let data = fa.into_iter().map(|z| z.re * scale).collect();
    ImagePlane::new(h, w, data).expect("shape preserved")
}

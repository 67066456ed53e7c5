//! Separable orthogonal wavelet transform (8-tap Daubechies filter,
//! periodic boundary handling) used by the denoiser.

use crate::ImagePlane;

/// 8-tap Daubechies orthonormal lowpass filter. Coefficients carry the
/// full double precision of the spectral factorization; shorter
/// published tables leave shift-orthogonality defects near 1e-13 that
/// break exact reconstruction.
const LOWPASS: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

/// Quadrature mirror highpass: `g[k] = (-1)^k h[7-k]`.
fn highpass() -> [f64; 8] {
    let mut g = [0.0; 8];
    for (k, v) in g.iter_mut().enumerate() {
        *v = if k % 2 == 0 { LOWPASS[7 - k] } else { -LOWPASS[7 - k] };
    }
    g
}

/// One periodic analysis step: `x` (even length) -> approximation and
/// detail halves. `a[i] = sum_k h[k] x[(2i + k) mod n]`.
fn analyze(x: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = x.len();
    let g = highpass();
    for i in 0..n / 2 {
        let mut a = 0.0;
        let mut d = 0.0;
        for k in 0..8 {
            let v = x[(2 * i + k) % n];
            a += LOWPASS[k] * v;
            d += g[k] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

/// Inverse of [`analyze`]; the adjoint reconstruction
/// `x[(2i + k) mod n] += a[i] h[k] + d[i] g[k]`, exact because the
/// filter bank is orthonormal.
fn synthesize(approx: &[f64], detail: &[f64], x: &mut [f64]) {
    let n = x.len();
    let g = highpass();
    x.fill(0.0);
    for i in 0..n / 2 {
        for k in 0..8 {
            x[(2 * i + k) % n] += approx[i] * LOWPASS[k] + detail[i] * g[k];
        }
    }
}

/// Detail subbands of one decomposition level.
#[derive(Debug, Clone)]
pub(crate) struct DetailBands {
    pub lh: ImagePlane,
    pub hl: ImagePlane,
    pub hh: ImagePlane,
}

/// Multi-level 2-D decomposition: per-level detail bands (finest first)
/// plus the final approximation.
#[derive(Debug, Clone)]
pub(crate) struct Decomposition {
    pub levels: Vec<DetailBands>,
    pub approx: ImagePlane,
}

fn single_level(plane: &ImagePlane) -> (ImagePlane, DetailBands) {
    let (h, w) = plane.shape();
    debug_assert!(h % 2 == 0 && w % 2 == 0);
    // Rows first: left half lowpass, right half highpass.
    let mut row_pass = ImagePlane::zeros(h, w);
    let mut abuf = vec![0.0; w / 2];
    let mut dbuf = vec![0.0; w / 2];
    for r in 0..h {
        analyze(plane.row(r), &mut abuf, &mut dbuf);
        row_pass.as_mut_slice()[r * w..r * w + w / 2].copy_from_slice(&abuf);
        row_pass.as_mut_slice()[r * w + w / 2..(r + 1) * w].copy_from_slice(&dbuf);
    }
    // Columns second.
    let mut ll = ImagePlane::zeros(h / 2, w / 2);
    let mut lh = ImagePlane::zeros(h / 2, w / 2);
    let mut hl = ImagePlane::zeros(h / 2, w / 2);
    let mut hh = ImagePlane::zeros(h / 2, w / 2);
    let mut col = vec![0.0; h];
    let mut ca = vec![0.0; h / 2];
    let mut cd = vec![0.0; h / 2];
    for c in 0..w {
        for r in 0..h {
            col[r] = row_pass.at(r, c);
        }
        analyze(&col, &mut ca, &mut cd);
        let (low_target, high_target, cc) = if c < w / 2 {
            (&mut ll, &mut hl, c)
        } else {
            (&mut lh, &mut hh, c - w / 2)
        };
        for r in 0..h / 2 {
            *low_target.at_mut(r, cc) = ca[r];
            *high_target.at_mut(r, cc) = cd[r];
        }
    }
    (ll, DetailBands { lh, hl, hh })
}

fn single_level_inverse(ll: &ImagePlane, bands: &DetailBands) -> ImagePlane {
    let (hh2, ww2) = ll.shape();
    let (h, w) = (2 * hh2, 2 * ww2);
    let mut row_pass = ImagePlane::zeros(h, w);
    let mut ca = vec![0.0; hh2];
    let mut cd = vec![0.0; hh2];
    let mut col = vec![0.0; h];
    for c in 0..w {
        if c < w / 2 {
            for r in 0..hh2 {
                ca[r] = ll.at(r, c);
                cd[r] = bands.hl.at(r, c);
            }
        } else {
            for r in 0..hh2 {
                ca[r] = bands.lh.at(r, c - w / 2);
                cd[r] = bands.hh.at(r, c - w / 2);
            }
        }
        synthesize(&ca, &cd, &mut col);
        for r in 0..h {
            *row_pass.at_mut(r, c) = col[r];
        }
    }
    let mut out = ImagePlane::zeros(h, w);
    let mut abuf = vec![0.0; w / 2];
    let mut dbuf = vec![0.0; w / 2];
    let mut row = vec![0.0; w];
    for r in 0..h {
        abuf.copy_from_slice(&row_pass.row(r)[..w / 2]);
        dbuf.copy_from_slice(&row_pass.row(r)[w / 2..]);
        synthesize(&abuf, &dbuf, &mut row);
        out.as_mut_slice()[r * w..(r + 1) * w].copy_from_slice(&row);
    }
    out
}

/// How many levels a plane supports, up to `max_levels`: each level
/// needs the current dimensions even and at least 8.
pub(crate) fn supported_levels(mut h: usize, mut w: usize, max_levels: usize) -> usize {
    let mut levels = 0;
    while levels < max_levels && h % 2 == 0 && w % 2 == 0 && h >= 8 && w >= 8 {
        h /= 2;
        w /= 2;
        levels += 1;
    }
    levels
}

pub(crate) fn forward(plane: &ImagePlane, max_levels: usize) -> Decomposition {
    let levels = supported_levels(plane.height(), plane.width(), max_levels);
    let mut bands = Vec::with_capacity(levels);
    let mut current = plane.clone();
    for _ in 0..levels {
        let (ll, detail) = single_level(&current);
        bands.push(detail);
        current = ll;
    }
    Decomposition {
        levels: bands,
        approx: current,
    }
}

pub(crate) fn inverse(dec: &Decomposition) -> ImagePlane {
    let mut current = dec.approx.clone();
    for bands in dec.levels.iter().rev() {
        current = single_level_inverse(&current, bands);
    }
    current
}

//! Linear-programming recovery of zero-quantized DCT coefficients.
//!
//! Quantization erases small coefficients by snapping them to zero. An
//! adversary holding only the compressed image can still estimate the
//! erased values: pick the free coefficients so that the decoded block
//! is as smooth as possible against its surroundings. Smoothness is the
//! total absolute difference of 4-connected neighbor pixels within and
//! across the blocks of the 3x3 window around the target, which is a
//! linear program after the usual slack-pair linearization.
//!
//! Every block outside the target has all of its coefficients fixed, so
//! its pixels are constants. The solver therefore only carries the
//! target's 64 pixels, the free coefficients, and the difference pairs
//! that touch the target; pairs between two constant pixels shift the
//! objective by a constant and cannot influence the optimum. The
//! equivalence test below checks this reduction against the literal
//! whole-window program.

use rayon::prelude::*;

use crate::fingerprint::{self, Fingerprint};
use crate::mask::SubbandMask;
use crate::{dct, denoise, jpeg, lp, Error, ImagePlane, Result};

pub const DEFAULT_MAX_ITERS: usize = 50_000;

const LEVEL_SHIFT: f64 = 128.0;
const SLACK_BOUND: f64 = 4096.0;

/// One target block's recovery instance: fixed coefficients, the free
/// set, box bounds, and the constant border pixels of the window.
#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    pub block_row: usize,
    pub block_col: usize,
    /// Measured coefficients of the compressed target block with the
    /// free positions zeroed out.
    pub y_star: [[f64; 8]; 8],
    /// Coefficients to recover: retained by the scope mask and
    /// quantized to zero.
    pub free: Vec<(usize, usize)>,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    // Level-shifted pixels of the window that are adjacent to the
    // target block, when those neighbors exist.
    top: Option<[f64; 8]>,
    bottom: Option<[f64; 8]>,
    left: Option<[f64; 8]>,
    right: Option<[f64; 8]>,
}

impl RecoveryProblem {
    /// Builds the instance for one block of a decoded JPEG plane.
    ///
    /// A coefficient is free when the scope mask retains it and the
    /// compressed plane's value quantizes to zero under `table`; every
    /// other coefficient is fixed at its measured value.
    pub fn build(
        compressed: &ImagePlane,
        block_row: usize,
        block_col: usize,
        table: &[[u16; 8]; 8],
        scope: &SubbandMask,
    ) -> Result<RecoveryProblem> {
        let (h, w) = compressed.shape();
        if h % 8 != 0 || w % 8 != 0 {
            return Err(Error::InvalidDimensions {
                height: h,
                width: w,
                reason: "recovery needs dimensions that are multiples of 8",
            });
        }
        if block_row >= h / 8 || block_col >= w / 8 {
            return Err(Error::InvalidDimensions {
                height: block_row,
                width: block_col,
                reason: "block index outside the plane",
            });
        }
        let mut block = compressed.block8(block_row, block_col);
        for row in block.iter_mut() {
            for v in row.iter_mut() {
                *v -= LEVEL_SHIFT;
            }
        }
        let coeffs = dct::forward8(&block);
        let mut y_star = coeffs;
        let mut free = Vec::new();
        for u in 0..8 {
            for v in 0..8 {
                let q = table[u][v] as f64;
                let quantized = (coeffs[u][v] / q + 0.5).floor();
                if scope.contains(u, v) && quantized == 0.0 {
                    free.push((u, v));
                    y_star[u][v] = 0.0;
                }
            }
        }
        let (y_min, y_max) = (-1024.0, 1024.0);
        for u in 0..8 {
            for v in 0..8 {
                if y_star[u][v] < y_min || y_star[u][v] > y_max {
                    return Err(Error::InvalidParameter {
                        name: "y_star",
                        value: y_star[u][v],
                        reason: "fixed coefficient outside the variable bounds",
                    });
                }
            }
        }
        let r0 = 8 * block_row;
        let c0 = 8 * block_col;
        let border = |cells: [(isize, isize); 8]| -> Option<[f64; 8]> {
            let mut out = [0.0; 8];
            for (k, &(r, c)) in cells.iter().enumerate() {
                if r < 0 || c < 0 || r as usize >= h || c as usize >= w {
                    return None;
                }
                out[k] = compressed.at(r as usize, c as usize) - LEVEL_SHIFT;
            }
            Some(out)
        };
        let top = border(std::array::from_fn(|j| {
            (r0 as isize - 1, (c0 + j) as isize)
        }));
        let bottom = border(std::array::from_fn(|j| {
            ((r0 + 8) as isize, (c0 + j) as isize)
        }));
        let left = border(std::array::from_fn(|i| {
            ((r0 + i) as isize, c0 as isize - 1)
        }));
        let right = border(std::array::from_fn(|i| {
            ((r0 + i) as isize, (c0 + 8) as isize)
        }));
        Ok(RecoveryProblem {
            block_row,
            block_col,
            y_star,
            free,
            x_min: -LEVEL_SHIFT,
            x_max: LEVEL_SHIFT - 1.0,
            y_min,
            y_max,
            top,
            bottom,
            left,
            right,
        })
    }

    /// Difference pairs touching the target block: (pixel, other pixel)
    /// for interior pairs, (pixel, constant) for cross-boundary pairs.
    fn pairs(&self) -> Vec<Pair> {
        let mut out = Vec::with_capacity(144);
        for i in 0..8 {
            for j in 0..7 {
                out.push(Pair::Interior((i, j), (i, j + 1)));
            }
        }
        for i in 0..7 {
            for j in 0..8 {
                out.push(Pair::Interior((i, j), (i + 1, j)));
            }
        }
        if let Some(t) = self.top {
            for j in 0..8 {
                out.push(Pair::Cross((0, j), t[j]));
            }
        }
        if let Some(b) = self.bottom {
            for j in 0..8 {
                out.push(Pair::Cross((7, j), b[j]));
            }
        }
        if let Some(l) = self.left {
            for i in 0..8 {
                out.push(Pair::Cross((i, 0), l[i]));
            }
        }
        if let Some(r) = self.right {
            for i in 0..8 {
                out.push(Pair::Cross((i, 7), r[i]));
            }
        }
        out
    }

    /// Total variation a candidate coefficient block achieves, over the
    /// same pair set the solver optimizes.
    #[cfg(test)]
    fn objective_of(&self, y: &[[f64; 8]; 8]) -> f64 {
        let x = dct::inverse8(y);
        self.pairs()
            .iter()
            .map(|p| match *p {
                Pair::Interior((ai, aj), (bi, bj)) => (x[ai][aj] - x[bi][bj]).abs(),
                Pair::Cross((ai, aj), value) => (x[ai][aj] - value).abs(),
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
enum Pair {
    Interior((usize, usize), (usize, usize)),
    Cross((usize, usize), f64),
}

fn assemble_lp(p: &RecoveryProblem) -> (lp::Lp, Vec<Pair>) {
    let pairs = p.pairs();
    let nf = p.free.len();
    let n = 64 + nf + 2 * pairs.len();
    let d = dct::basis_matrix();
    let fixed_part = dct::inverse8(&p.y_star);

    let mut rows = Vec::with_capacity(64 + pairs.len());
    let mut rhs = Vec::with_capacity(64 + pairs.len());
    // Pixel definitions: X(i,j) - sum over free (u,v) of
    // D(u,i) D(v,j) Y(u,v) = IDCT of the fixed part.
    for i in 0..8 {
        for j in 0..8 {
            let mut row = vec![0.0; n];
            row[8 * i + j] = 1.0;
            for (k, &(u, v)) in p.free.iter().enumerate() {
                row[64 + k] = -d[u][i] * d[v][j];
            }
            rows.push(row);
            rhs.push(fixed_part[i][j]);
        }
    }
    // Slack-pair linearization: u+ - u- equals the signed difference.
    for (k, pair) in pairs.iter().enumerate() {
        let mut row = vec![0.0; n];
        row[64 + nf + 2 * k] = 1.0;
        row[64 + nf + 2 * k + 1] = -1.0;
        match *pair {
            Pair::Interior((ai, aj), (bi, bj)) => {
                row[8 * ai + aj] -= 1.0;
                row[8 * bi + bj] += 1.0;
                rhs.push(0.0);
            }
            Pair::Cross((ai, aj), value) => {
                row[8 * ai + aj] -= 1.0;
                rhs.push(-value);
            }
        }
        rows.push(row);
    }

    let mut objective = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for idx in 0..64 {
        lower[idx] = p.x_min;
        upper[idx] = p.x_max;
    }
    for idx in 64..64 + nf {
        lower[idx] = p.y_min;
        upper[idx] = p.y_max;
    }
    for idx in 64 + nf..n {
        objective[idx] = 1.0;
        upper[idx] = SLACK_BOUND;
    }
    (
        lp::Lp {
            objective,
            rows,
            rhs,
            lower,
            upper,
        },
        pairs,
    )
}

fn solve_reduced(p: &RecoveryProblem, max_iters: usize) -> Result<(lp::Lp, lp::LpSolution)> {
    let (program, _) = assemble_lp(p);
    let sol = lp::solve(&program, max_iters)?;
    Ok((program, sol))
}

/// Recovers the target block's coefficients. Free coefficients take the
/// smoothness optimum; fixed ones pass through unchanged. An empty free
/// set returns `y_star` without touching the solver.
pub fn recover_block(p: &RecoveryProblem, max_iters: usize) -> Result<[[f64; 8]; 8]> {
    if p.free.is_empty() {
        return Ok(p.y_star);
    }
    let (_, sol) = solve_reduced(p, max_iters)?;
    let mut y = p.y_star;
    for (k, &(u, v)) in p.free.iter().enumerate() {
        y[u][v] = sol.x[64 + k];
    }
    Ok(y)
}

/// A whole plane of recovered coefficients plus the number of blocks
/// whose program failed and fell back to the measured coefficients.
#[derive(Debug, Clone)]
pub struct RecoveredPlane {
    pub coefficients: ImagePlane,
    pub failed_blocks: usize,
}

/// Runs [`recover_block`] over every block of a decoded plane.
/// Infeasible or over-budget blocks keep their measured coefficients
/// and are counted rather than aborting the plane.
pub fn recover_plane(
    compressed: &ImagePlane,
    table: &[[u16; 8]; 8],
    scope: &SubbandMask,
    max_iters: usize,
) -> Result<RecoveredPlane> {
    let (h, w) = compressed.shape();
    let blocks: Vec<(usize, usize)> = (0..h / 8)
        .flat_map(|br| (0..w / 8).map(move |bc| (br, bc)))
        .collect();
    let solved: Vec<Result<([[f64; 8]; 8], bool)>> = blocks
        .par_iter()
        .map(|&(br, bc)| {
            let p = RecoveryProblem::build(compressed, br, bc, table, scope)?;
            match recover_block(&p, max_iters) {
                Ok(y) => Ok((y, false)),
                Err(Error::Infeasible { .. }) => Ok((p.y_star, true)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut coefficients = ImagePlane::zeros(h, w);
    let mut failed_blocks = 0;
    for (&(br, bc), item) in blocks.iter().zip(solved) {
        let (y, failed) = item?;
        coefficients.set_block8(br, bc, &y);
        if failed {
            failed_blocks += 1;
        }
    }
    Ok(RecoveredPlane {
        coefficients,
        failed_blocks,
    })
}

/// Joint sign distribution of recovered coefficients against their
/// uncompressed originals, over the free set only.
#[derive(Debug, Clone, Copy)]
pub struct SignContingency {
    /// Fractions indexed `[original class][recovered class]` with
    /// classes 0 = negative, 1 = zero band, 2 = positive.
    pub table: [[f64; 3]; 3],
    /// Number of classified coefficients.
    pub count: usize,
}

impl SignContingency {
    /// Fraction of free coefficients whose class was recovered
    /// correctly.
    pub fn diagonal_mass(&self) -> f64 {
        self.table[0][0] + self.table[1][1] + self.table[2][2]
    }
}

/// Classifies recovered vs original coefficients into negative / zero /
/// positive with a dead zone of `zero_band` around zero.
///
/// All three planes are blockwise DCT coefficients in the level-shifted
/// domain. Only coefficients that the mask retains and that the
/// compressed plane quantized to zero are counted; everything else
/// passed through compression untouched and says nothing about
/// recovery. Passing an all-zero compressed plane therefore classifies
/// every retained coefficient.
pub fn sign_contingency(
    recovered: &ImagePlane,
    original: &ImagePlane,
    compressed: &ImagePlane,
    mask: &SubbandMask,
    zero_band: f64,
) -> Result<SignContingency> {
    recovered.check_same_shape(original, "sign_contingency")?;
    recovered.check_same_shape(compressed, "sign_contingency")?;
    if !(zero_band >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "zero_band",
            value: zero_band,
            reason: "zero band must be nonnegative",
        });
    }
    let (h, w) = recovered.shape();
    if h % 8 != 0 || w % 8 != 0 {
        return Err(Error::InvalidDimensions {
            height: h,
            width: w,
            reason: "coefficient planes need dimensions that are multiples of 8",
        });
    }
    let classify = |x: f64| {
        if x < -zero_band {
            0
        } else if x > zero_band {
            2
        } else {
            1
        }
    };
    let mut counts = [[0usize; 3]; 3];
    let mut count = 0usize;
    let positions = mask.positions();
    for br in 0..h / 8 {
        for bc in 0..w / 8 {
            let rec = recovered.block8(br, bc);
            let orig = original.block8(br, bc);
            let comp = compressed.block8(br, bc);
            for &(u, v) in &positions {
                if comp[u][v].abs() < 0.5 {
                    counts[classify(orig[u][v])][classify(rec[u][v])] += 1;
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::Degenerate {
            context: "no free coefficients to classify".into(),
        });
    }
    let mut table = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            table[a][b] = counts[a][b] as f64 / count as f64;
        }
    }
    Ok(SignContingency { table, count })
}

/// Decodes a plane, recovers every block, and re-encodes the pixels.
/// Blocks with an empty free set keep their compressed pixels exactly.
pub fn recover_image(
    compressed: &ImagePlane,
    table: &[[u16; 8]; 8],
    scope: &SubbandMask,
    max_iters: usize,
) -> Result<(ImagePlane, usize)> {
    let (h, w) = compressed.shape();
    let blocks: Vec<(usize, usize)> = (0..h / 8)
        .flat_map(|br| (0..w / 8).map(move |bc| (br, bc)))
        .collect();
    let solved: Vec<Result<(Option<[[f64; 8]; 8]>, bool)>> = blocks
        .par_iter()
        .map(|&(br, bc)| {
            let p = RecoveryProblem::build(compressed, br, bc, table, scope)?;
            if p.free.is_empty() {
                return Ok((None, false));
            }
            match recover_block(&p, max_iters) {
                Ok(y) => Ok((Some(y), false)),
                Err(Error::Infeasible { .. }) => Ok((None, true)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut out = compressed.clone();
    let mut failed = 0;
    for (&(br, bc), item) in blocks.iter().zip(solved) {
        match item? {
            (Some(y), _) => {
                let mut spatial = dct::inverse8(&y);
                for row in spatial.iter_mut() {
                    for v in row.iter_mut() {
                        *v = (*v + LEVEL_SHIFT).clamp(0.0, 255.0);
                    }
                }
                out.set_block8(br, bc, &spatial);
            }
            (None, was_failure) => {
                if was_failure {
                    failed += 1;
                }
            }
        }
    }
    Ok((out, failed))
}

/// Correlation of an adversary's fragile-band fingerprint estimate with
/// the camera's fragile fingerprint, before and after recovery.
///
/// The images are compressed at `quality`, a fingerprint is estimated
/// from the decoded planes, the zero-quantized fragile coefficients are
/// recovered, and a second fingerprint is estimated from the recovered
/// planes. Both estimates are projected onto the fragile band before
/// correlating against `fp_fragile`, which is expected to hold the
/// fragile projection of the camera's fingerprint.
pub fn recovery_fingerprint_delta(
    images: &[ImagePlane],
    fp_fragile: &Fingerprint,
    c: i32,
    quality: u8,
) -> Result<(f64, f64)> {
    if images.is_empty() {
        return Err(Error::NotEnoughInputs {
            required: 1,
            actual: 0,
        });
    }
    let mask = SubbandMask::fragile(c)?;
    let table = jpeg::luminance_table(quality)?;
    let compressed: Vec<ImagePlane> = images
        .iter()
        .map(|img| jpeg::compress(img, quality))
        .collect::<Result<_>>()?;
    let recovered: Vec<ImagePlane> = compressed
        .iter()
        .map(|img| recover_image(img, &table, &mask, DEFAULT_MAX_ITERS).map(|(plane, _)| plane))
        .collect::<Result<_>>()?;

    let correlate = |estimation_inputs: &[ImagePlane]| -> Result<f64> {
        let fp = fingerprint::estimate_fingerprint_ml(estimation_inputs, denoise::DEFAULT_SIGMA0)?;
        let cleaned = fingerprint::clean_fingerprint(&fp);
        let projected = mask.project_spatial(&cleaned.plane)?;
        fingerprint::ncc(&projected, &fp_fragile.plane)
    };
    Ok((correlate(&compressed)?, correlate(&recovered)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::{render_scene, SceneSpec};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn textured_compressed(h: usize, w: usize, quality: u8, seed: u64) -> ImagePlane {
        let scene = render_scene(
            &SceneSpec::LaplacianSynthetic {
                intensity: 128.0,
                scale_range: (1.0, 12.0),
            },
            h,
            w,
            seed,
        )
        .unwrap();
        jpeg::compress(&scene, quality).unwrap()
    }

    #[test]
    fn partition_covers_all_subbands() {
        let plane = textured_compressed(32, 32, 80, 1);
        let table = jpeg::luminance_table(80).unwrap();
        let mask = SubbandMask::fragile(1).unwrap();
        let p = RecoveryProblem::build(&plane, 1, 2, &table, &mask).unwrap();
        assert!(!p.free.is_empty());
        for &(u, v) in &p.free {
            assert!(mask.contains(u, v));
            assert_eq!(p.y_star[u][v], 0.0);
        }
        let free_count = p.free.len();
        let fixed_nonzero = (0..8)
            .flat_map(|u| (0..8).map(move |v| (u, v)))
            .filter(|pos| !p.free.contains(pos))
            .count();
        assert_eq!(free_count + fixed_nonzero, 64);
    }

    #[test]
    fn empty_free_set_short_circuits() {
        // A block whose retained coefficients are all far from zero has
        // nothing to recover.
        let mut y = [[0.0f64; 8]; 8];
        for (u, row) in y.iter_mut().enumerate() {
            for (v, val) in row.iter_mut().enumerate() {
                *val = if (u + v) % 2 == 0 { 3.0 } else { -3.0 };
            }
        }
        y[0][0] = 16.0;
        let spatial = dct::inverse8(&y);
        let plane = ImagePlane::from_fn(8, 8, |i, j| spatial[i][j] + LEVEL_SHIFT);
        let table = jpeg::luminance_table(100).unwrap();
        let mask = SubbandMask::fragile(1).unwrap();
        let p = RecoveryProblem::build(&plane, 0, 0, &table, &mask).unwrap();
        assert!(p.free.is_empty());
        let rec = recover_block(&p, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(rec, p.y_star);
    }

    #[test]
    fn solution_satisfies_program_and_beats_zero_completion() {
        let plane = textured_compressed(32, 32, 85, 7);
        let table = jpeg::luminance_table(85).unwrap();
        let mask = SubbandMask::fragile(2).unwrap();
        let mut checked = 0;
        for br in 0..4 {
            for bc in 0..4 {
                let p = RecoveryProblem::build(&plane, br, bc, &table, &mask).unwrap();
                if p.free.is_empty() {
                    continue;
                }
                let (program, sol) = solve_reduced(&p, DEFAULT_MAX_ITERS).unwrap();
                // Every equality row holds at the returned point.
                for (row, &b) in program.rows.iter().zip(&program.rhs) {
                    let lhs: f64 = row.iter().zip(&sol.x).map(|(a, v)| a * v).sum();
                    assert!((lhs - b).abs() < 1e-6, "block ({br},{bc}) violates a row");
                }
                for (j, &v) in sol.x.iter().enumerate() {
                    assert!(v >= program.lower[j] - 1e-6 && v <= program.upper[j] + 1e-6);
                }
                // No slack pair carries weight on both sides.
                let base = 64 + p.free.len();
                for k in (base..sol.x.len()).step_by(2) {
                    assert!(
                        sol.x[k].min(sol.x[k + 1]) < 1e-6,
                        "slack pair {k} is loose: {} / {}",
                        sol.x[k],
                        sol.x[k + 1]
                    );
                }
                // The zero completion is feasible, so the optimum can
                // never be worse.
                let rec = recover_block(&p, DEFAULT_MAX_ITERS).unwrap();
                let zero_obj = p.objective_of(&p.y_star);
                let rec_obj = p.objective_of(&rec);
                assert!(
                    rec_obj <= zero_obj + 1e-6,
                    "block ({br},{bc}): {rec_obj} vs zero completion {zero_obj}"
                );
                assert!((rec_obj - sol.objective).abs() < 1e-6);
                checked += 1;
            }
        }
        assert!(checked >= 4, "only {checked} blocks had free coefficients");
    }

    #[test]
    fn reduced_program_matches_whole_window_program() {
        // Literal formulation over a 16x16 plane: every pixel is a
        // variable, non-target blocks are pinned to their decoded
        // values by their definition rows, and all 480 neighbor pairs
        // get slack pairs. The reduced program must reach the same
        // optimum up to the constant contributed by pairs between two
        // pinned pixels.
        let plane = textured_compressed(16, 16, 85, 3);
        let table = jpeg::luminance_table(85).unwrap();
        let mask = SubbandMask::fragile(1).unwrap();
        let p = RecoveryProblem::build(&plane, 0, 0, &table, &mask).unwrap();
        assert!(!p.free.is_empty());
        let (_, sol) = solve_reduced(&p, DEFAULT_MAX_ITERS).unwrap();
        let reduced_obj = sol.objective;

        let d = dct::basis_matrix();
        let shifted = ImagePlane::from_fn(16, 16, |i, j| plane.at(i, j) - LEVEL_SHIFT);
        let all_coeffs = dct::block_dct(&shifted).unwrap();
        let mut pairs: Vec<((usize, usize), (usize, usize))> = Vec::new();
        for i in 0..16 {
            for j in 0..15 {
                pairs.push(((i, j), (i, j + 1)));
            }
        }
        for i in 0..15 {
            for j in 0..16 {
                pairs.push(((i, j), (i + 1, j)));
            }
        }
        let nf = p.free.len();
        let n = 256 + nf + 2 * pairs.len();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for bi in 0..2 {
            for bj in 0..2 {
                let mut fixed = all_coeffs.block8(bi, bj);
                if (bi, bj) == (0, 0) {
                    fixed = p.y_star;
                }
                let fixed_part = dct::inverse8(&fixed);
                for i in 0..8 {
                    for j in 0..8 {
                        let (gi, gj) = (8 * bi + i, 8 * bj + j);
                        let mut row = vec![0.0; n];
                        row[16 * gi + gj] = 1.0;
                        if (bi, bj) == (0, 0) {
                            for (k, &(u, v)) in p.free.iter().enumerate() {
                                row[256 + k] = -d[u][i] * d[v][j];
                            }
                        }
                        rows.push(row);
                        rhs.push(fixed_part[i][j]);
                    }
                }
            }
        }
        for (k, &((ai, aj), (bi, bj))) in pairs.iter().enumerate() {
            let mut row = vec![0.0; n];
            row[256 + nf + 2 * k] = 1.0;
            row[256 + nf + 2 * k + 1] = -1.0;
            row[16 * ai + aj] -= 1.0;
            row[16 * bi + bj] += 1.0;
            rows.push(row);
            rhs.push(0.0);
        }
        let mut objective = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for idx in 0..256 {
            lower[idx] = -LEVEL_SHIFT;
            upper[idx] = LEVEL_SHIFT - 1.0;
        }
        for idx in 256..256 + nf {
            lower[idx] = -1024.0;
            upper[idx] = 1024.0;
        }
        for idx in 256 + nf..n {
            objective[idx] = 1.0;
            upper[idx] = SLACK_BOUND;
        }
        let literal = lp::Lp {
            objective,
            rows,
            rhs,
            lower,
            upper,
        };
        let lit_sol = lp::solve(&literal, 400_000).unwrap();

        // Pairs that never touch the target block contribute a fixed
        // offset.
        let mut offset = 0.0;
        for &((ai, aj), (bi, bj)) in &pairs {
            let a_in = ai < 8 && aj < 8;
            let b_in = bi < 8 && bj < 8;
            if !a_in && !b_in {
                offset += (shifted.at(ai, aj) - shifted.at(bi, bj)).abs();
            }
        }
        assert!(
            (lit_sol.objective - (reduced_obj + offset)).abs() < 1e-5,
            "literal {} vs reduced {} + offset {}",
            lit_sol.objective,
            reduced_obj,
            offset
        );
    }

    #[test]
    fn flat_content_recovers_zeros_exactly() {
        // Per-block-constant content has no fragile energy, and zero
        // free coefficients are the unique minimum of the roughness
        // objective there (any fragile component adds interior pixel
        // variation it cannot buy back at the block boundary). Monotone
        // ramps would not work as a probe: every monotone staircase has
        // the same total variation, so the solver is free to return a
        // vertex with large fragile coefficients.
        let original =
            ImagePlane::from_fn(32, 32, |i, j| 80.0 + 10.0 * (((i / 8) + (j / 8)) % 2) as f64);
        let quality = 90;
        let table = jpeg::luminance_table(quality).unwrap();
        let compressed = jpeg::compress(&original, quality).unwrap();
        let mask = SubbandMask::fragile(1).unwrap();
        let rec = recover_plane(&compressed, &table, &mask, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(rec.failed_blocks, 0);
        let shift = |img: &ImagePlane| {
            ImagePlane::from_fn(img.height(), img.width(), |i, j| img.at(i, j) - LEVEL_SHIFT)
        };
        let orig_coeffs = dct::block_dct(&shift(&original)).unwrap();
        let comp_coeffs = dct::block_dct(&shift(&compressed)).unwrap();
        let table_stats =
            sign_contingency(&rec.coefficients, &orig_coeffs, &comp_coeffs, &mask, 0.25).unwrap();
        assert!(table_stats.count > 100);
        assert!(
            table_stats.table[1][1] > 0.95,
            "zero-zero mass {}",
            table_stats.table[1][1]
        );
    }

    #[test]
    fn contingency_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let small = ImagePlane::from_fn(16, 16, |_, _| rng.gen_range(-0.2..0.2));
        let zeros = ImagePlane::zeros(16, 16);
        let mask = SubbandMask::fragile(0).unwrap();
        let t = sign_contingency(&small, &small, &zeros, &mask, 0.25).unwrap();
        assert_eq!(t.count, 4 * mask.retained_count());
        assert!((t.table[1][1] - 1.0).abs() < 1e-12);
        assert!((t.diagonal_mass() - 1.0).abs() < 1e-12);

        let big = ImagePlane::from_fn(16, 16, |i, j| if (i + j) % 2 == 0 { 2.0 } else { -3.0 });
        let neg = big.scale(-1.0);
        let t = sign_contingency(&neg, &big, &zeros, &mask, 0.25).unwrap();
        assert!((t.table[0][2] + t.table[2][0] - 1.0).abs() < 1e-12);
        assert_eq!(t.table[1][1], 0.0);
        assert_eq!(t.diagonal_mass(), 0.0);
    }

    #[test]
    fn contingency_needs_free_coefficients() {
        let plane = ImagePlane::from_fn(8, 8, |i, j| (i * 8 + j) as f64);
        let mask = SubbandMask::fragile(1).unwrap();
        // Compressed plane with every coefficient far from zero: the
        // free set is empty.
        let nonzero = ImagePlane::from_fn(8, 8, |_, _| 5.0);
        assert!(matches!(
            sign_contingency(&plane, &plane, &nonzero, &mask, 0.25),
            Err(Error::Degenerate { .. })
        ));
    }

    /// Blocks built from exact multiples of the quality-100 table pass
    /// through compression bit-identically and leave no free set, so
    /// the before/after correlations must coincide exactly.
    #[test]
    fn untouched_recovery_changes_nothing() {
        let h = 64;
        let w = 64;
        let build_img = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut img = ImagePlane::zeros(h, w);
            for br in 0..h / 8 {
                for bc in 0..w / 8 {
                    let mut y = [[0.0f64; 8]; 8];
                    for (u, row) in y.iter_mut().enumerate() {
                        for (v, val) in row.iter_mut().enumerate() {
                            if (u, v) == (0, 0) {
                                *val = 8.0 * rng.gen_range(-2..3) as f64;
                            } else {
                                *val = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                            }
                        }
                    }
                    let mut spatial = dct::inverse8(&y);
                    for row in spatial.iter_mut() {
                        for v in row.iter_mut() {
                            *v += LEVEL_SHIFT;
                        }
                    }
                    img.set_block8(br, bc, &spatial);
                }
            }
            img
        };
        let images: Vec<ImagePlane> = (0..3).map(|k| build_img(40 + k)).collect();
        for img in &images {
            let round = jpeg::compress(img, 100).unwrap();
            assert_eq!(img.as_slice(), round.as_slice(), "corpus not idempotent");
        }
        let mask = SubbandMask::fragile(1).unwrap();
        let fp = fingerprint::Fingerprint {
            plane: mask
                .project_spatial(&ImagePlane::from_fn(h, w, |i, j| {
                    ((i * 31 + j * 17) % 13) as f64 - 6.0
                }))
                .unwrap(),
            estimator: fingerprint::Estimator::MaximumLikelihood,
            n_images: 1,
            cleaned: true,
            degenerate_pixels: 0,
        };
        let (before, after) = recovery_fingerprint_delta(&images, &fp, 1, 100).unwrap();
        assert_eq!(before, after);
    }
}

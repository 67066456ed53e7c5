//! Dense two-phase simplex for small linear programs with bounded
//! variables.
//!
//! Solves `min c'x  s.t.  A x = b,  l <= x <= u` with all bounds
//! finite. The recovery problems this crate builds stay in the low
//! hundreds of rows and columns, where a dense tableau is simpler and
//! faster than pulling in a sparse solver.

use crate::{Error, Result};

/// A linear program in equality form with finite variable bounds.
#[derive(Debug, Clone)]
pub struct Lp {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

const EPS_REDUCED_COST: f64 = 1e-9;
const EPS_FEASIBILITY: f64 = 1e-7;
const EPS_PIVOT: f64 = 1e-10;
const STALL_LIMIT: usize = 40;

struct Tableau {
    // B^-1 A over all columns (structural + artificial), maintained by
    // elementary row operations on every pivot.
    t: Vec<Vec<f64>>,
    rhs_t: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<VarStatus>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    iterations: usize,
}

impl Tableau {
    fn value_of(&self, j: usize, x_basic: &[f64]) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            VarStatus::Basic => {
                let row = self.basis.iter().position(|&b| b == j).unwrap();
                x_basic[row]
            }
        }
    }

    fn basic_values(&self) -> Vec<f64> {
        let m = self.basis.len();
        let n = self.status.len();
        let mut x = self.rhs_t.clone();
        for j in 0..n {
            let bound = match self.status[j] {
                VarStatus::AtLower => self.lower[j],
                VarStatus::AtUpper => self.upper[j],
                VarStatus::Basic => continue,
            };
            if bound != 0.0 {
                for i in 0..m {
                    x[i] -= self.t[i][j] * bound;
                }
            }
        }
        x
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col];
        let inv = 1.0 / piv;
        for v in self.t[row].iter_mut() {
            *v *= inv;
        }
        self.rhs_t[row] *= inv;
        let pivot_row = self.t[row].clone();
        let pivot_rhs = self.rhs_t[row];
        for i in 0..self.t.len() {
            if i == row {
                continue;
            }
            let f = self.t[i][col];
            if f != 0.0 {
                for (v, p) in self.t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                self.rhs_t[i] -= f * pivot_rhs;
            }
        }
    }

    /// Runs the simplex loop for one phase with cost vector `cost`.
    /// Returns the basic-variable values at optimality.
    fn optimize(&mut self, cost: &[f64], max_iters: usize) -> Result<Vec<f64>> {
        let m = self.basis.len();
        let n = self.status.len();
        let mut stalled = 0usize;
        loop {
            let x_basic = self.basic_values();
            let cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
            let bland = stalled > STALL_LIMIT;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..n {
                if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..m {
                    if cb[i] != 0.0 {
                        d -= cb[i] * self.t[i][j];
                    }
                }
                let violation = match self.status[j] {
                    VarStatus::AtLower if d < -EPS_REDUCED_COST => -d,
                    VarStatus::AtUpper if d > EPS_REDUCED_COST => d,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, violation));
                    break;
                }
                match entering {
                    Some((_, best)) if violation <= best => {}
                    _ => entering = Some((j, violation)),
                }
            }
            let Some((col, _)) = entering else {
                return Ok(x_basic);
            };
            if self.iterations >= max_iters {
                return Err(Error::Infeasible {
                    status: "iteration-limit",
                    context: format!("simplex exceeded {max_iters} iterations"),
                });
            }
            // Direction of movement: up from the lower bound, down from
            // the upper bound.
            let sigma = if self.status[col] == VarStatus::AtLower {
                1.0
            } else {
                -1.0
            };
            let mut step = self.upper[col] - self.lower[col];
            // leaving: (row, hits_upper); None means the entering
            // variable flips to its opposite bound.
            let mut leaving: Option<(usize, bool)> = None;
            for i in 0..m {
                let a = sigma * self.t[i][col];
                let var = self.basis[i];
                if a > EPS_PIVOT {
                    let room = x_basic[i] - self.lower[var];
                    let ratio = room.max(0.0) / a;
                    if ratio < step - EPS_PIVOT
                        || (ratio < step + EPS_PIVOT && better_leaving(self, leaving, i, col, bland))
                    {
                        step = ratio;
                        leaving = Some((i, false));
                    }
                } else if a < -EPS_PIVOT {
                    let room = self.upper[var] - x_basic[i];
                    let ratio = room.max(0.0) / -a;
                    if ratio < step - EPS_PIVOT
                        || (ratio < step + EPS_PIVOT && better_leaving(self, leaving, i, col, bland))
                    {
                        step = ratio;
                        leaving = Some((i, true));
                    }
                }
            }
            if step.is_infinite() {
                return Err(Error::Infeasible {
                    status: "unbounded",
                    context: "objective decreases without limit".into(),
                });
            }
            if step < EPS_PIVOT {
                stalled += 1;
            } else {
                stalled = 0;
            }
            match leaving {
                None => {
                    self.status[col] = if sigma > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                }
                Some((row, hits_upper)) => {
                    let out = self.basis[row];
                    self.status[out] = if hits_upper {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.status[col] = VarStatus::Basic;
                    self.basis[row] = col;
                    self.pivot(row, col);
                }
            }
            self.iterations += 1;
        }
    }
}

/// Tie-break for the ratio test: prefer the candidate row with the
/// larger pivot magnitude, or the lowest basis index under Bland's
/// rule.
fn better_leaving(
    tab: &Tableau,
    current: Option<(usize, bool)>,
    candidate: usize,
    col: usize,
    bland: bool,
) -> bool {
    match current {
        None => true,
        Some((row, _)) => {
            if bland {
                tab.basis[candidate] < tab.basis[row]
            } else {
                tab.t[candidate][col].abs() > tab.t[row][col].abs()
            }
        }
    }
}

/// Solves the program, or reports it infeasible, unbounded, or out of
/// iterations.
pub fn solve(lp: &Lp, max_iters: usize) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    if lp.rhs.len() != m {
        return Err(Error::dims("lp rhs", (m, 1), (lp.rhs.len(), 1)));
    }
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::dims("lp bounds", (n, 1), (lp.lower.len(), 1)));
    }
    for row in &lp.rows {
        if row.len() != n {
            return Err(Error::dims("lp row", (1, n), (1, row.len())));
        }
    }
    for j in 0..n {
        if !lp.lower[j].is_finite() || !lp.upper[j].is_finite() || lp.lower[j] > lp.upper[j] {
            return Err(Error::InvalidParameter {
                name: "bounds",
                value: lp.lower[j],
                reason: "every variable needs finite lower <= upper bounds",
            });
        }
    }

    // Start with every structural variable at its lower bound and one
    // artificial per row carrying the residual.
    let total = n + m;
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let mut status = vec![VarStatus::AtLower; total];
    let mut residual = lp.rhs.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        for j in 0..n {
            residual[i] -= row[j] * lp.lower[j];
        }
    }
    let mut t = Vec::with_capacity(m);
    let mut rhs_t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_bound = 0.0f64;
    for r in &residual {
        art_bound = art_bound.max(r.abs());
    }
    for i in 0..m {
        let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
        // Left-multiplying the row by the artificial's sign makes the
        // initial basis matrix the identity.
        let mut row: Vec<f64> = lp.rows[i].iter().map(|&a| sign * a).collect();
        row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        t.push(row);
        rhs_t.push(sign * lp.rhs[i]);
        basis.push(n + i);
        status[n + i] = VarStatus::Basic;
        lower.push(0.0);
        upper.push(art_bound + 1.0);
    }
    let mut tab = Tableau {
        t,
        rhs_t,
        basis,
        status,
        lower,
        upper,
        iterations: 0,
    };

    let mut phase1_cost = vec![0.0; total];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = 1.0;
    }
    let x_basic = tab.optimize(&phase1_cost, max_iters)?;
    let infeasibility: f64 = (0..m)
        .map(|i| tab.value_of(n + i, &x_basic))
        .map(|v| v.max(0.0))
        .sum();
    if infeasibility > EPS_FEASIBILITY * (1.0 + art_bound) {
        return Err(Error::Infeasible {
            status: "infeasible",
            context: format!("phase-1 residual {infeasibility:.3e}"),
        });
    }
    // Artificials still basic at zero are pinned so phase 2 cannot
    // move them.
    for j in n..total {
        tab.lower[j] = 0.0;
        tab.upper[j] = 0.0;
    }

    let mut phase2_cost = lp.objective.clone();
    phase2_cost.resize(total, 0.0);
    let x_basic = tab.optimize(&phase2_cost, max_iters)?;

    let x: Vec<f64> = (0..n)
        .map(|j| {
            let v = tab.value_of(j, &x_basic);
            v.clamp(lp.lower[j], lp.upper[j])
        })
        .collect();
    let objective = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum::<f64>();
    Ok(LpSolution {
        x,
        objective,
        iterations: tab.iterations,
    })
}

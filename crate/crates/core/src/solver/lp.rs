//! Discretized cross-check: `min_{L(F̃)=1} max_grid |F̃|` as a dense linear
//! program, solved in dual form by a two-phase revised simplex.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::remez::{lengths, proportional_counts};
use super::{is_constant_case, Problem, WorkingProblem};
use crate::error::{arg, Error, Result};
use crate::numerics::chebyshev_lobatto;
use crate::rational::RationalFn;

/// Result of the grid LP.
#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    /// Discrete minimax value `min max_grid |F̃|` under `L(F̃) = 1`.
    pub h: f64,
    /// Extremal value of the discretized problem, from the grid-normalized `F`.
    pub m: f64,
    #[serde(rename = "F")]
    pub f: RationalFn,
    pub grid_size: usize,
    pub pivots: usize,
}

pub const MAX_GRID: usize = 10_000;

/// Solves the discretized problem on `grid_size` points of `E`.
pub fn solve_lp_oracle(p: &Problem, grid_size: usize) -> Result<LpSolution> {
    if grid_size > MAX_GRID {
        return arg(format!("grid size {grid_size} exceeds {MAX_GRID}"));
    }
    if is_constant_case(p) {
        return Ok(LpSolution {
            h: 1.0,
            m: 1.0,
            f: RationalFn::constant(&p.poles, 1.0),
            grid_size,
            pivots: 0,
        });
    }
    let wp = WorkingProblem::new(p)?;
    let dim = wp.basis.dim();
    let k = wp.intervals.len();
    if grid_size < (2 * k).max(dim) {
        return arg(format!(
            "grid size {grid_size} is too small for {dim} unknowns"
        ));
    }
    let mut counts = proportional_counts(&lengths(&wp.intervals), grid_size - 2 * k);
    counts.iter_mut().for_each(|c| *c += 2);
    let grid: Vec<f64> = wp
        .intervals
        .iter()
        .zip(&counts)
        .flat_map(|(&(a, b), &c)| chebyshev_lobatto(a, b, c))
        .collect();

    // Columns ±φ(x_i), rows indexed by basis functions, right-hand side L.
    let n_grid = grid.len();
    let mut rows = vec![vec![0.0; 2 * n_grid]; dim];
    let mut phi = vec![0.0; dim];
    for (i, &x) in grid.iter().enumerate() {
        wp.basis.eval_real(x, &mut phi);
        for r in 0..dim {
            rows[r][2 * i] = phi[r];
            rows[r][2 * i + 1] = -phi[r];
        }
    }
    let rhs = wp.basis.leading_functional();
    let cost = vec![1.0; 2 * n_grid];
    let out = simplex(&rows, &rhs, &cost)?;
    let coeffs = out.duals;
    let grid_norm = grid
        .iter()
        .fold(0.0_f64, |m, &x| m.max(wp.basis.combine(&coeffs, x).abs()));
    if !(grid_norm > 0.0) || !(out.value > 0.0) {
        return Err(Error::Integrity(
            "grid program returned a degenerate optimum".into(),
        ));
    }
    let scaled: Vec<f64> = coeffs.iter().map(|c| c / grid_norm).collect();
    let f = RationalFn::from_parts(p.poles.clone(), wp.normalized.map, wp.basis.clone(), scaled)?;
    let m = f.leading_coeff(p.x_star, p.d())?;
    Ok(LpSolution {
        h: 1.0 / out.value,
        m,
        f,
        grid_size: n_grid,
        pivots: out.pivots,
    })
}

pub(crate) struct SimplexOutcome {
    pub value: f64,
    #[allow(dead_code)]
    pub primal: Vec<f64>,
    /// Multipliers `y` of the equality rows (`Aᵀy ≤ c` at optimum).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;
const MAX_PIVOTS: usize = 100_000;

/// Revised simplex over `[S·A | I]` with `S = diag(sign b)`; the basis matrix is
/// refactorized at every pivot, which keeps ill-scaled rows from drifting.
struct Revised<'a> {
    cols: &'a DMatrix<f64>,
    rhs: DVector<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

struct Iterate {
    x_b: DVector<f64>,
    y: DVector<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Revised<'_> {
    fn factor(&self, cost: &[f64]) -> Result<Iterate> {
        let m = self.basis.len();
        let b = DMatrix::from_fn(m, m, |i, k| self.cols[(i, self.basis[k])]);
        let lu = b.clone().lu();
        let x_b = lu
            .solve(&self.rhs)
            .ok_or_else(|| Error::Numeric("simplex basis became singular".into()))?;
        let c_b = DVector::from_fn(m, |k, _| cost[self.basis[k]]);
        let y = b
            .transpose()
            .lu()
            .solve(&c_b)
            .ok_or_else(|| Error::Numeric("simplex basis became singular".into()))?;
        Ok(Iterate { x_b, y, lu })
    }

    /// Minimizes `cost` letting only columns `< allowed` enter.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<Iterate> {
        let m = self.basis.len();
        let mut streak = 0;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::NonConvergence {
                    iterations: self.pivots,
                    defect: f64::NAN,
                    context: "simplex pivot limit".into(),
                });
            }
            let it = self.factor(cost)?;
            let bland = streak >= DEGENERATE_STREAK;
            let ymax = it.y.amax().max(1.0);
            let mut enter = None;
            let mut best = -PIVOT_TOL * ymax;
            for (j, &cj) in cost.iter().enumerate().take(allowed) {
                if self.basis.contains(&j) {
                    continue;
                }
                let rc = cj - self.cols.column(j).dot(&it.y);
                if rc < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(c) = enter else { return Ok(it) };
            let u = it
                .lu
                .solve(&self.cols.column(c).into_owned())
                .ok_or_else(|| Error::Numeric("simplex basis became singular".into()))?;
            let tol = PIVOT_TOL * u.amax().max(1.0);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let artificial_at_zero = self.basis[i] >= allowed && it.x_b[i].abs() <= tol;
                let ratio = if u[i] > tol {
                    it.x_b[i].max(0.0) / u[i]
                } else if artificial_at_zero && u[i].abs() > tol {
                    0.0
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((li, lr)) => ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Integrity("linear program is unbounded".into()));
            };
            streak = if ratio <= 1e-14 { streak + 1 } else { 0 };
            self.basis[r] = c;
            self.pivots += 1;
        }
    }
}

/// `min cᵀx` subject to `A x = b`, `x ≥ 0`.
pub(crate) fn simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<SimplexOutcome> {
    let m = a.len();
    let n = c.len();
    let sign: Vec<f64> = b
        .iter()
        .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let cols = DMatrix::from_fn(m, n + m, |i, j| {
        if j < n {
            sign[i] * a[i][j]
        } else if j - n == i {
            1.0
        } else {
            0.0
        }
    });
    let mut rv = Revised {
        cols: &cols,
        rhs: DVector::from_fn(m, |i, _| sign[i] * b[i]),
        basis: (n..n + m).collect(),
        pivots: 0,
    };
    let mut phase_one = vec![0.0; n + m];
    phase_one[n..].iter_mut().for_each(|v| *v = 1.0);
    let it = rv.optimize(&phase_one, n)?;
    let infeas: f64 = rv
        .basis
        .iter()
        .zip(it.x_b.iter())
        .filter(|(j, _)| **j >= n)
        .map(|(_, v)| v.abs())
        .sum();
    let scale = b.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    if infeas > 1e-9 * scale {
        return Err(Error::Integrity(format!(
            "linear program is infeasible (residual {infeas:e})"
        )));
    }
    let mut phase_two = c.to_vec();
    phase_two.extend(std::iter::repeat_n(0.0, m));
    let it = rv.optimize(&phase_two, n)?;
    let mut primal = vec![0.0; n];
    for (k, &j) in rv.basis.iter().enumerate() {
        if j < n {
            primal[j] = it.x_b[k].max(0.0);
        }
    }
    let value = primal.iter().zip(c).map(|(x, c)| x * c).sum();
    let duals = (0..m).map(|i| sign[i] * it.y[i]).collect();
    Ok(SimplexOutcome {
        value,
        primal,
        duals,
        pivots: rv.pivots,
    })
}

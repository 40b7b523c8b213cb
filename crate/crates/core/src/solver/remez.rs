//! Exchange iteration in working coordinates (`x* = ∞`, hull `[-1, 1]`).
//!
//! With `g(w) = (−1)^{S(w)} F̃(w)` the levelled system reads
//! `g(x_j) = (−1)^{n+1−j} h`, `L(F̃) = 1`, and the optimum has `h = 1/m`.

use nalgebra::{DMatrix, DVector};

use super::extrema::{local_extrema, sign_runs, Extremum};
use super::{SolveOptions, WorkingProblem};
use crate::error::{Error, Result};
use crate::numerics::chebyshev_lobatto;
use crate::potential::build_green;

#[derive(Debug, Clone)]
pub(crate) struct ExchangeOutcome {
    pub coeffs: Vec<f64>,
    pub norm: f64,
    pub level: f64,
    pub defect: f64,
    pub iterations: usize,
    pub condition: f64,
    /// Final alternation window in working coordinates, `value = g(x)`.
    pub reference: Vec<Extremum>,
}

/// Splits `total` points across intervals in proportion to `weights`
/// (largest remainder, earlier interval wins ties).
pub(crate) fn proportional_counts(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|l| l / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = quotas[i] - counts[i] as f64;
        let rj = quotas[j] - counts[j] as f64;
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    let missing = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

pub(crate) fn lengths(intervals: &[(f64, f64)]) -> Vec<f64> {
    intervals.iter().map(|&(a, b)| b - a).collect()
}

/// Interval weights `Σ_c D(c) ω_E(I, c)`, the limiting density of alternation
/// points; interval lengths if the Green models cannot be built.
fn pole_weights(wp: &WorkingProblem) -> Vec<f64> {
    let set = &wp.normalized.set;
    let mut weights = vec![0.0; wp.intervals.len()];
    for (c, m) in wp.normalized.divisor.iter() {
        let Ok(model) = build_green(set, c) else {
            return lengths(&wp.intervals);
        };
        for (w, &(a, b)) in weights.iter_mut().zip(&wp.intervals) {
            *w += m as f64 * model.harmonic_measure_clipped(a, b);
        }
    }
    if weights.iter().all(|w| w.is_finite() && *w >= 0.0) && weights.iter().sum::<f64>() > 0.0 {
        weights
    } else {
        lengths(&wp.intervals)
    }
}

pub(crate) fn initial_reference(
    intervals: &[(f64, f64)],
    weights: &[f64],
    total: usize,
) -> Vec<f64> {
    let counts = proportional_counts(weights, total);
    intervals
        .iter()
        .zip(counts)
        .filter(|&(_, k)| k > 0)
        .flat_map(|(&(a, b), k)| chebyshev_lobatto(a, b, k))
        .collect()
}

struct Levelled {
    coeffs: Vec<f64>,
    level: f64,
    condition: f64,
}

/// Solves the levelled system in interpolation form: `F(x_j) = σ_j` with
/// `F = O(1)` on the set, then `h = 1/L(F)` and `F̃ = h·F`. Normalizing
/// through `L` directly would make `F̃` of size `1/m` on the set and put the
/// rounding floor of the solve at relative `ε·m`.
fn solve_levelled(wp: &WorkingProblem, refs: &[f64]) -> Result<Levelled> {
    let dim = wp.basis.dim();
    let m = refs.len();
    debug_assert_eq!(m, dim);
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    let mut row = vec![0.0; dim];
    for (j, &x) in refs.iter().enumerate() {
        wp.basis.eval_real(x, &mut row);
        for (i, v) in row.iter().enumerate() {
            a[(j, i)] = *v;
        }
        let alt = if (m - 1 - j).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        b[j] = alt * wp.parity(x);
    }
    let col_scale: Vec<f64> = (0..dim)
        .map(|j| {
            let c = a.column(j).amax();
            if c > 0.0 {
                1.0 / c
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in col_scale.iter().enumerate() {
        a.column_mut(j).scale_mut(*s);
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 0.0) {
        return Err(Error::Numeric("levelled system is singular".into()));
    }
    let mut sol = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Numeric(format!("levelled system: {e}")))?;
    for (j, s) in col_scale.iter().enumerate() {
        sol[j] *= s;
    }
    let lead: f64 = wp
        .basis
        .leading_functional()
        .iter()
        .zip(sol.iter())
        .map(|(l, c)| l * c)
        .sum();
    let level = 1.0 / lead;
    if !level.is_finite() || sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "levelled system produced non-finite values".into(),
        ));
    }
    Ok(Levelled {
        coeffs: sol.iter().map(|c| c * level).collect(),
        level,
        condition: smax / smin,
    })
}

/// Picks `len` consecutive runs: must contain the global maximum, preferably
/// ends on a positive run, then maximizes the smallest `|g|`; leftmost on ties.
fn choose_window(runs: &[Extremum], len: usize) -> Option<Vec<Extremum>> {
    if runs.len() < len {
        return None;
    }
    let imax = runs.iter().enumerate().fold(0, |best, (i, e)| {
        if e.value.abs() > runs[best].value.abs() {
            i
        } else {
            best
        }
    });
    let mut best: Option<(bool, f64, usize)> = None;
    for s in 0..=runs.len() - len {
        if imax < s || imax >= s + len {
            continue;
        }
        let w = &runs[s..s + len];
        let positive = w[len - 1].value > 0.0;
        let min = w.iter().fold(f64::INFINITY, |m, e| m.min(e.value.abs()));
        let better = match best {
            None => true,
            Some((bp, bm, _)) => (positive, min) > (bp, bm),
        };
        if better {
            best = Some((positive, min, s));
        }
    }
    best.map(|(_, _, s)| runs[s..s + len].to_vec())
}

pub(crate) fn exchange(wp: &WorkingProblem, opts: &SolveOptions) -> Result<ExchangeOutcome> {
    let len = wp.basis.dim();
    let samples = wp.samples_per_interval();
    let mut refs = initial_reference(&wp.intervals, &pole_weights(wp), len);
    let mut condition = 0.0_f64;
    let mut defect = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let lev = solve_levelled(wp, &refs)?;
        condition = condition.max(lev.condition);
        let h = lev.level;
        if !(h > 0.0) {
            return Err(Error::Numeric(format!(
                "levelled system returned level {h:e}"
            )));
        }
        let g = |w: f64| wp.parity(w) * wp.basis.combine(&lev.coeffs, w);
        let ext = local_extrema(&wp.intervals, &g, samples);
        let norm = ext.iter().fold(0.0_f64, |m, e| m.max(e.value.abs()));
        defect = (norm - h) / h;
        let mut strong: Vec<Extremum> = ext
            .iter()
            .copied()
            .filter(|e| e.value.abs() >= h)
            .chain(refs.iter().map(|&x| Extremum { x, value: g(x) }))
            .collect();
        strong.sort_by(|p, q| p.x.total_cmp(&q.x));
        let runs = sign_runs(&strong);
        let window = choose_window(&runs, len);
        if defect <= opts.tol {
            let reference = window
                .unwrap_or_else(|| refs.iter().map(|&x| Extremum { x, value: g(x) }).collect());
            return Ok(ExchangeOutcome {
                coeffs: lev.coeffs,
                norm,
                level: h,
                defect: defect.max(0.0),
                iterations: iter,
                condition,
                reference,
            });
        }
        let Some(window) = window else {
            return Err(Error::Numeric(format!(
                "exchange lost alternation at iteration {iter} ({} runs, need {len})",
                runs.len()
            )));
        };
        let next: Vec<f64> = window.iter().map(|e| e.x).collect();
        if next == refs {
            return Err(Error::NonConvergence {
                iterations: iter,
                defect,
                context: "reference stalled".into(),
            });
        }
        refs = next;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        defect,
        context: "exchange iteration cap reached".into(),
    })
}

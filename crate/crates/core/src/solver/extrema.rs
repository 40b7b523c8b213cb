//! Local maxima of `|g|` on a finite union of intervals.

use crate::numerics::{chebyshev_lobatto, golden_max};

/// A sampled or refined point together with the signed value of `g` there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
}

const REFINE_TOL: f64 = 1e-13;

/// Chebyshev extreme points plus points graded geometrically toward both
/// ends, which resolves features squeezed against an endpoint by a nearby pole.
pub fn sample_grid(a: f64, b: f64, samples: usize) -> Vec<f64> {
    let mut xs = chebyshev_lobatto(a, b, samples);
    let len = b - a;
    let mut t = 0.25;
    while t > 1e-9 {
        xs.push(a + len * t);
        xs.push(b - len * t);
        t *= 0.5;
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|p, q| (*p - *q).abs() <= 1e-12 * len);
    xs
}

/// Local maxima of `|g|`: discrete maxima on a Chebyshev grid per interval,
/// refined by golden-section search. Interval endpoints are always reported.
pub fn local_extrema<G: Fn(f64) -> f64>(
    intervals: &[(f64, f64)],
    g: &G,
    samples: usize,
) -> Vec<Extremum> {
    let mut out = Vec::new();
    for &(a, b) in intervals {
        let xs = sample_grid(a, b, samples.max(3));
        let vs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let m = xs.len();
        out.push(Extremum { x: a, value: vs[0] });
        out.push(Extremum {
            x: b,
            value: vs[m - 1],
        });
        for i in 0..m {
            let here = vs[i].abs();
            let left = if i > 0 {
                vs[i - 1].abs()
            } else {
                f64::NEG_INFINITY
            };
            let right = if i + 1 < m {
                vs[i + 1].abs()
            } else {
                f64::NEG_INFINITY
            };
            if here < left || here < right {
                continue;
            }
            let lo = xs[i.saturating_sub(1)];
            let hi = xs[(i + 1).min(m - 1)];
            let (x, v) = golden_max(|t| g(t).abs(), lo, hi, REFINE_TOL);
            if v > here {
                out.push(Extremum { x, value: g(x) });
            } else if i != 0 && i + 1 != m {
                out.push(Extremum {
                    x: xs[i],
                    value: vs[i],
                });
            }
        }
    }
    out.sort_by(|p, q| p.x.total_cmp(&q.x));
    out.dedup_by(|p, q| (p.x - q.x).abs() <= 1e-14 * (1.0 + p.x.abs()));
    out
}

/// Collapses runs of equal sign to their largest-`|g|` member (leftmost on ties).
/// Zero values are dropped.
pub fn sign_runs(points: &[Extremum]) -> Vec<Extremum> {
    let mut runs: Vec<Extremum> = Vec::new();
    for p in points
        .iter()
        .filter(|p| p.value != 0.0 && p.value.is_finite())
    {
        match runs.last_mut() {
            Some(last) if last.value.signum() == p.value.signum() => {
                if p.value.abs() > last.value.abs() {
                    *last = *p;
                }
            }
            _ => runs.push(*p),
        }
    }
    runs
}

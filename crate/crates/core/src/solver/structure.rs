//! Structural properties every extremizer has: real simple generalized
//! zeros spread at most one per gap, none in the gap of `x*`, prescribed
//! values at the edges of that gap, and a lower bound on the degree.

use serde::Serialize;

use super::{Solution, ALTERNATION_TOL};
use crate::error::Result;
use crate::geometry::in_cyclic_open;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub zeros_real: bool,
    pub zeros_simple: bool,
    /// Degree of the generalized zero divisor; equals `n`.
    pub zero_degree: usize,
    pub max_zeros_per_gap: usize,
    pub zeros_in_star_gap: usize,
    /// `max |F(e) − σ_e|` over the two edges of the gap containing `x*`.
    pub edge_residual: f64,
    pub degree: usize,
    /// `⌈(n + 1)/2⌉`, required of nonconstant solutions.
    pub degree_lower_bound: usize,
    pub pass: bool,
}

fn parity(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn structure_check(sol: &Solution, eps_pole: f64) -> Result<StructureReport> {
    let p = &sol.problem;
    let n = p.n();
    let z = &sol.zeros;
    let mut per_gap = vec![0usize; p.set.gaps().len()];
    for x in z.points() {
        if !p.set.contains(x) {
            per_gap[p.set.gap_index(x)?] += z.get(x) as usize;
        }
    }
    let star = p.set.gap_index(p.x_star)?;
    let gap = p.set.gap_of(p.x_star)?;
    let (a, b) = (gap.left, gap.right);
    let left_sum: u32 = p
        .poles
        .iter()
        .filter(|&(c, _)| in_cyclic_open(c, a, p.x_star))
        .map(|(_, m)| m)
        .sum();
    let right_sum: u32 = p
        .poles
        .iter()
        .filter(|&(c, _)| c == p.x_star || in_cyclic_open(c, p.x_star, b))
        .map(|(_, m)| m)
        .sum();
    let edge_residual = (sol.f.eval_ext(a) - parity(left_sum))
        .abs()
        .max((sol.f.eval_ext(b) - parity(right_sum)).abs());
    let degree = if sol.constant_case {
        0
    } else {
        sol.f.degree(eps_pole)
    };
    let degree_lower_bound = (n + 2) / 2;
    let mut rep = StructureReport {
        zeros_real: z.is_real(),
        zeros_simple: z.is_simple(),
        zero_degree: z.degree(),
        max_zeros_per_gap: per_gap.iter().copied().max().unwrap_or(0),
        zeros_in_star_gap: per_gap[star],
        edge_residual,
        degree,
        degree_lower_bound,
        pass: false,
    };
    rep.pass = rep.zeros_real
        && rep.zeros_simple
        && rep.zero_degree == n
        && rep.max_zeros_per_gap <= 1
        && rep.zeros_in_star_gap == 0
        && rep.edge_residual <= ALTERNATION_TOL
        && (sol.constant_case || degree >= degree_lower_bound);
    Ok(rep)
}

//! The extremal problem: maximize `Re lim_{x→x*} F(x)/r(x,x*)^d` over
//! `F ∈ L(D)` with `‖F‖_E ≤ 1`, where `d = D(x*)`.

mod extrema;
mod lp;
mod remez;
mod structure;

use serde::Serialize;

pub use extrema::{local_extrema, sample_grid, sign_runs, Extremum};
pub use lp::{solve_lp_oracle, LpSolution};
pub use structure::{structure_check, StructureReport};

use crate::error::{arg, Error, Result};
use crate::geometry::{
    normalize_problem, sign_function, CompactSet, ExtPoint, Normalized, PoleDivisor,
};
use crate::rational::{Basis, RationalFn, ZeroDivisor, DEFAULT_EPS_POLE};

/// Largest supported pole count.
pub const MAX_DEGREE: usize = 60;

/// Problem data: set, ambient pole divisor, and the reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub set: CompactSet,
    pub poles: PoleDivisor,
    pub x_star: ExtPoint,
}

impl Problem {
    pub fn new(set: CompactSet, poles: PoleDivisor, x_star: ExtPoint) -> Result<Self> {
        if set.contains(x_star) {
            return Err(Error::Domain(format!(
                "reference point {x_star} lies on the set"
            )));
        }
        poles.check_off(&set)?;
        if poles.degree() > MAX_DEGREE {
            return arg(format!(
                "at most {MAX_DEGREE} poles are supported, got {}",
                poles.degree()
            ));
        }
        Ok(Problem { set, poles, x_star })
    }

    /// Builds a problem from the set, divisor and point literals.
    pub fn parse(set: &str, poles: &str, x_star: &str) -> Result<Self> {
        Problem::new(
            CompactSet::parse(set)?,
            PoleDivisor::parse(poles)?,
            ExtPoint::parse(x_star)?,
        )
    }

    /// Number of poles `n` counted with multiplicity.
    pub fn n(&self) -> usize {
        self.poles.degree()
    }

    /// `d = D(x*)`; positive for the Chebyshev problem, zero for the residual one.
    pub fn d(&self) -> u32 {
        self.poles.get(self.x_star)
    }
}

impl Serialize for Problem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Problem", 4)?;
        st.serialize_field("set", &self.set.to_literal())?;
        st.serialize_field("poles", &self.poles.to_literal())?;
        st.serialize_field("x_star", &self.x_star)?;
        st.serialize_field("d", &self.d())?;
        st.end()
    }
}

/// Tunables of the exchange iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Target equioscillation defect `(‖F̃‖ − h)/h`.
    pub tol: f64,
    pub max_iter: usize,
    pub eps_pole: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 200,
            eps_pole: DEFAULT_EPS_POLE,
        }
    }
}

/// A point of an alternation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlternationPoint {
    pub x: ExtPoint,
    pub sign: i8,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Final equioscillation defect.
    pub defect: f64,
    /// Reference level of the last levelled system (working normalization).
    pub level: f64,
    /// Largest condition number seen in the levelled systems.
    pub condition: f64,
}

/// The extremizer with its certificate data.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub problem: Problem,
    #[serde(rename = "F")]
    pub f: RationalFn,
    pub m: f64,
    pub alternation: Vec<AlternationPoint>,
    pub zeros: ZeroDivisor,
    pub constant_case: bool,
    pub diagnostics: Diagnostics,
}

/// The problem moved to the frame where `x* = ∞` and `E` spans `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct WorkingProblem {
    pub normalized: Normalized,
    pub intervals: Vec<(f64, f64)>,
    pub basis: Basis,
    pub n: usize,
    finite_atoms: Vec<(f64, u32)>,
}

impl WorkingProblem {
    pub fn new(p: &Problem) -> Result<Self> {
        let normalized = normalize_problem(&p.set, &p.poles, p.x_star)?;
        let intervals = normalized.set.intervals()?;
        let basis = Basis::adapted(&normalized.divisor, &normalized.set)?;
        let finite_atoms = normalized
            .divisor
            .iter()
            .filter_map(|(c, m)| c.finite().map(|c| (c, m)))
            .collect();
        Ok(WorkingProblem {
            normalized,
            intervals,
            basis,
            n: p.n(),
            finite_atoms,
        })
    }

    /// `(−1)^{S(w)}` with `S(w) = Σ_{c > w} D(c)` over finite working atoms.
    pub fn parity(&self, w: f64) -> f64 {
        let s: u32 = self
            .finite_atoms
            .iter()
            .filter(|&&(c, _)| w < c)
            .map(|&(_, m)| m)
            .sum();
        if s.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn samples_per_interval(&self) -> usize {
        (8 * (self.n + 1)).max(32)
    }
}

/// True iff every atom is simple and `x*` together with the atoms occupy
/// pairwise distinct gaps.
pub fn is_constant_case(p: &Problem) -> bool {
    if p.poles.iter().any(|(_, m)| m > 1) {
        return false;
    }
    let mut points = vec![p.x_star];
    points.extend(p.poles.support());
    let mut gaps = Vec::new();
    for x in points {
        match p.set.gap_index(x) {
            Ok(g) => gaps.push(g),
            Err(_) => return false,
        }
    }
    let len = gaps.len();
    gaps.sort_unstable();
    gaps.dedup();
    gaps.len() == len
}

/// Computes the unique extremizer.
pub fn solve(p: &Problem, opts: &SolveOptions) -> Result<Solution> {
    if is_constant_case(p) {
        let f = RationalFn::constant(&p.poles, 1.0);
        let report = verify_alternation(&f, p)?;
        let zeros = f.generalized_zeros(opts.eps_pole)?;
        return Ok(Solution {
            problem: p.clone(),
            f,
            m: 1.0,
            alternation: report.window,
            zeros,
            constant_case: true,
            diagnostics: Diagnostics::default(),
        });
    }
    let wp = WorkingProblem::new(p)?;
    let out = remez::exchange(&wp, opts)?;
    let coeffs: Vec<f64> = out.coeffs.iter().map(|c| c / out.norm).collect();
    let f = RationalFn::from_parts(p.poles.clone(), wp.normalized.map, wp.basis.clone(), coeffs)?;
    let m = f.leading_coeff(p.x_star, p.d())?;
    let inv = wp.normalized.map.inverse();
    let alternation = out
        .reference
        .iter()
        .map(|e| {
            let value = e.value * wp.parity(e.x) / out.norm;
            AlternationPoint {
                x: inv.apply(ExtPoint::Finite(e.x)),
                sign: if value >= 0.0 { 1 } else { -1 },
                value,
            }
        })
        .collect();
    let zeros = f.generalized_zeros(opts.eps_pole)?;
    Ok(Solution {
        problem: p.clone(),
        f,
        m,
        alternation,
        zeros,
        constant_case: false,
        diagnostics: Diagnostics {
            iterations: out.iterations,
            defect: out.defect,
            level: out.level,
            condition: out.condition,
        },
    })
}

/// Outcome of the alternation search.
#[derive(Debug, Clone, Serialize)]
pub struct AlternationReport {
    /// Length of the longest chain obeying the sign law.
    pub size: usize,
    pub required: usize,
    /// The last `required` points of the chain (all of it if shorter).
    pub window: Vec<AlternationPoint>,
    /// `max_j |F(x_j) − σ_j|` over the window.
    pub sign_residual: f64,
    /// Sup-norm on the set, estimated by the same search.
    pub norm: f64,
    /// `n + 1 − D⁰(x*)` when `F` is not identically zero.
    pub bound: Option<usize>,
    pub within_bound: bool,
    pub pass: bool,
}

/// Tolerance for `|F| = 1` at alternation points.
pub const ALTERNATION_TOL: f64 = 1e-8;

/// Searches `E` for the longest alternation chain of `F` with the sign law
/// `F(x_j) = (−1)^{m−j−S(x_j)}`.
pub fn verify_alternation(f: &RationalFn, p: &Problem) -> Result<AlternationReport> {
    let wp = WorkingProblem::new(p)?;
    let inv = wp.normalized.map.inverse();
    let value = |w: f64| f.eval_ext(inv.apply(ExtPoint::Finite(w)));
    let g = |w: f64| value(w) * wp.parity(w);
    let samples = wp.samples_per_interval();
    let mut cands = local_extrema(&wp.intervals, &g, samples);
    let norm = cands.iter().fold(0.0_f64, |m, e| m.max(e.value.abs()));
    for &(a, b) in &wp.intervals {
        for x in extrema::sample_grid(a, b, samples) {
            let v = g(x);
            if v.abs() >= 1.0 - ALTERNATION_TOL {
                cands.push(Extremum { x, value: v });
            }
        }
    }
    cands.retain(|e| e.value.abs() >= 1.0 - ALTERNATION_TOL);
    cands.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut runs = sign_runs(&cands);
    while runs.last().is_some_and(|e| e.value < 0.0) {
        runs.pop();
    }
    let size = runs.len();
    let required = p.n() + 1;
    let start = size.saturating_sub(required);
    let mut window = Vec::new();
    let mut sign_residual = 0.0_f64;
    let m = size - start;
    for (j, e) in runs[start..].iter().enumerate() {
        let x = inv.apply(ExtPoint::Finite(e.x));
        let fx = f.eval_ext(x);
        let s = sign_function(&p.poles, p.x_star, x)?;
        let exponent = m as i64 - (j as i64 + 1) - s;
        let sigma = if exponent.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        sign_residual = sign_residual.max((fx - sigma).abs());
        window.push(AlternationPoint {
            x,
            sign: if fx >= 0.0 { 1 } else { -1 },
            value: fx,
        });
    }
    let bound = if f.coeffs().iter().all(|&c| c == 0.0) {
        None
    } else {
        let z = f.generalized_zeros(DEFAULT_EPS_POLE)?;
        Some((required).saturating_sub(z.get(p.x_star) as usize))
    };
    let within_bound = bound.is_none_or(|b| size <= b);
    let pass =
        size >= required && norm <= 1.0 + ALTERNATION_TOL && sign_residual <= ALTERNATION_TOL;
    Ok(AlternationReport {
        size,
        required,
        window,
        sign_residual,
        norm,
        bound,
        within_bound,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExtPoint::{Finite as F, Infinity as Inf};

    fn problem(set: &str, poles: &str, xs: &str) -> Problem {
        Problem::parse(set, poles, xs).unwrap()
    }

    #[test]
    fn constant_case_detection() {
        assert!(is_constant_case(&problem("[-2,-1];[0,1]", "-0.5:1", "inf")));
        assert!(!is_constant_case(&problem(
            "[-2,-1];[0,1]",
            "-0.5:2",
            "inf"
        )));
        assert!(!is_constant_case(&problem("[-1,1]", "2:1", "2")));
    }

    #[test]
    fn chebyshev_t3() {
        let p = problem("[-1,1]", "inf:3", "inf");
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert!((s.m - 4.0).abs() < 1e-9);
        for i in 0..=50 {
            let x = -1.0 + 2.0 * i as f64 / 50.0;
            assert!((s.f.eval_real(x) - (4.0 * x * x * x - 3.0 * x)).abs() < 1e-9);
        }
        let r = verify_alternation(&s.f, &p).unwrap();
        assert!(r.pass, "{r:?}");
        let xs: Vec<f64> = r.window.iter().map(|a| a.x.finite().unwrap()).collect();
        for (a, b) in xs.iter().zip([-1.0, -0.5, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(
            r.window.iter().map(|a| a.sign).collect::<Vec<_>>(),
            vec![-1, 1, -1, 1]
        );
    }

    #[test]
    fn single_pole_hand_solutions() {
        let p = problem("[-1,1]", "2:1", "2");
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert!((s.m - 3.0).abs() < 1e-10);
        for x in [-1.0, -0.3, 0.4, 1.0, 3.0] {
            assert!((s.f.eval_real(x) - (2.0 * x - 1.0) / (2.0 - x)).abs() < 1e-10);
        }
        let signs: Vec<(f64, i8)> = s
            .alternation
            .iter()
            .map(|a| (a.x.finite().unwrap(), a.sign))
            .collect();
        assert_eq!(signs.len(), 2);
        assert!((signs[0].0 + 1.0).abs() < 1e-9 && signs[0].1 == -1);
        assert!((signs[1].0 - 1.0).abs() < 1e-9 && signs[1].1 == 1);

        let p = problem("[-1,1]", "2:1", "inf");
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert!((s.m - 2.0).abs() < 1e-10);
        assert!((s.f.eval_real(0.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn constant_case_solution() {
        let p = problem("[-2,-1];[0,1]", "-0.5:1", "inf");
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert!(s.constant_case);
        assert_eq!(s.m, 1.0);
        let r = verify_alternation(&s.f, &p).unwrap();
        assert!(r.pass && r.size == 2, "{r:?}");
        assert_eq!(s.zeros.get(F(-0.5)), 1);
    }

    #[test]
    fn scaled_t3_fails_verification() {
        let p = problem("[-1,1]", "inf:3", "inf");
        let half = RationalFn::from_partial_fractions(0.0, &[-1.5, 0.0, 2.0], &[]).unwrap();
        let r = verify_alternation(&half, &p).unwrap();
        assert!(!r.pass && r.size == 0);
        let _ = Inf;
    }
}

//! Experiment harness for `n`-th root and modulus asymptotics of extremal
//! functions along pole sequences generated from an atomic limit measure.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::geometry::{CompactSet, ExtPoint, PoleDivisor};
use crate::potential::build_green;
use crate::solver::{solve, Problem, Solution, SolveOptions, MAX_DEGREE};

/// Slack allowed in the per-`n` upper bound `h_n ≤ (1/n) Σ D_n(c) G(z, c)`.
pub const BOUND_SLACK: f64 = 1e-9;

const WEIGHT_TOL: f64 = 1e-12;

/// How atom counts grow with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoleMode {
    /// Prefixes of the cycle `c_1, …, c_p, c_1, …`; requires equal weights.
    Periodic,
    /// Independent per-`n` counts by largest-remainder rounding of `n·w_i`.
    WeightedRotation,
}

impl std::str::FromStr for PoleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(PoleMode::Periodic),
            "weighted-rotation" => Ok(PoleMode::WeightedRotation),
            _ => arg(format!("unknown pole mode `{s}`")),
        }
    }
}

/// Rule producing `x*_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XStarRule {
    Constant(ExtPoint),
    /// Entry `n − 1` is used for `n`.
    PerN(Vec<ExtPoint>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleSequenceSpec {
    pub mode: PoleMode,
    pub atoms: Vec<(ExtPoint, f64)>,
    pub x_star: XStarRule,
}

impl PoleSequenceSpec {
    pub fn new(mode: PoleMode, atoms: Vec<(ExtPoint, f64)>, x_star: XStarRule) -> Result<Self> {
        if atoms.is_empty() {
            return arg("at least one atom is required");
        }
        if atoms.iter().any(|&(_, w)| !(w > 0.0) || !w.is_finite()) {
            return arg("atom weights must be positive and finite");
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return arg(format!("atom weights sum to {total}, not 1"));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].iter().any(|b| b.0 == a.0) {
                return arg(format!("atom {} is repeated", a.0));
            }
        }
        if mode == PoleMode::Periodic {
            let w0 = atoms[0].1;
            if atoms.iter().any(|a| (a.1 - w0).abs() > WEIGHT_TOL) {
                return arg("periodic mode requires equal weights");
            }
        }
        if let XStarRule::PerN(v) = &x_star {
            if v.is_empty() {
                return arg("the per-n reference list is empty");
            }
        }
        Ok(PoleSequenceSpec {
            mode,
            atoms,
            x_star,
        })
    }

    /// Parses `"c1:w1,c2:w2"`.
    pub fn parse_atoms(literal: &str) -> Result<Vec<(ExtPoint, f64)>> {
        Ok(crate::geometry::WeightedDivisor::parse(literal)?.atoms)
    }

    pub fn period(&self) -> usize {
        self.atoms.len()
    }

    pub fn x_star(&self, n: usize) -> Result<ExtPoint> {
        match &self.x_star {
            XStarRule::Constant(x) => Ok(*x),
            XStarRule::PerN(v) => v
                .get(n.wrapping_sub(1))
                .copied()
                .ok_or_else(|| Error::Argument(format!("no reference point given for n = {n}"))),
        }
    }

    /// Atom counts for `n`.
    pub fn counts(&self, n: usize) -> Vec<u32> {
        let p = self.atoms.len();
        match self.mode {
            PoleMode::Periodic => (0..p)
                .map(|i| (n / p + usize::from(i < n % p)) as u32)
                .collect(),
            PoleMode::WeightedRotation => {
                let exact: Vec<f64> = self.atoms.iter().map(|a| n as f64 * a.1).collect();
                let mut counts: Vec<u32> = exact.iter().map(|x| x.floor() as u32).collect();
                let assigned: usize = counts.iter().map(|&c| c as usize).sum();
                let mut order: Vec<usize> = (0..p).collect();
                order.sort_by(|&i, &j| {
                    let (fi, fj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
                    fj.total_cmp(&fi).then(i.cmp(&j))
                });
                for &i in order.iter().take(n.saturating_sub(assigned)) {
                    counts[i] += 1;
                }
                counts
            }
        }
    }

    pub fn divisor(&self, n: usize) -> PoleDivisor {
        let mut d = PoleDivisor::empty();
        for (a, k) in self.atoms.iter().zip(self.counts(n)) {
            d.add(a.0, k);
        }
        d
    }

    /// Problem for index `n` on `set`.
    pub fn problem(&self, set: &CompactSet, n: usize) -> Result<Problem> {
        Problem::new(set.clone(), self.divisor(n), self.x_star(n)?)
    }
}

/// `D_1, …, D_n`.
pub fn generate_divisors(spec: &PoleSequenceSpec, n: usize) -> Result<Vec<PoleDivisor>> {
    if n == 0 {
        return arg("n must be at least 1");
    }
    if n > MAX_DEGREE {
        return arg(format!("n must not exceed {MAX_DEGREE}"));
    }
    Ok((1..=n).map(|k| spec.divisor(k)).collect())
}

/// The first index whose solve failed, with the error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceFailure {
    pub n: usize,
    pub error: String,
}

/// Solves the problems for `ns` in parallel; results are sorted by `n` and
/// truncated at the first failure.
pub fn solve_sequence(
    set: &CompactSet,
    spec: &PoleSequenceSpec,
    ns: &[usize],
    opts: &SolveOptions,
) -> (Vec<(usize, Solution)>, Option<SequenceFailure>) {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let results: Vec<(usize, Result<Solution>)> = ns
        .par_iter()
        .map(|&n| (n, spec.problem(set, n).and_then(|p| solve(&p, opts))))
        .collect();
    let mut out = Vec::new();
    for (n, r) in results {
        match r {
            Ok(s) => out.push((n, s)),
            Err(e) => {
                return (
                    out,
                    Some(SequenceFailure {
                        n,
                        error: e.to_string(),
                    }),
                )
            }
        }
    }
    (out, None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootRow {
    pub n: usize,
    pub z: String,
    /// `(1/n) log |F_n(z)|`.
    pub h_n: f64,
    /// `∫ G_E(z, x) dμ(x)`.
    pub target: f64,
    pub error: f64,
    /// `(1/n) Σ D_n(c) G_E(z, c)`.
    pub upper_bound: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroMeasureRow {
    pub n: usize,
    /// Kolmogorov distance between `ν_n` and `Σ w_i ω_E(·, c_i)`.
    pub ks_distance: f64,
    pub max_gap_mass: f64,
    pub star_gap_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SzegoRow {
    pub n: usize,
    pub z: String,
    /// `log |F_n(z)| − Σ D_n(c) G_E(z, c)`.
    pub v_n: f64,
    /// `−log 2 − Σ_t D(t) G_E(z, t)` with `D` read off the largest-`n` zeros.
    pub limit: f64,
    pub deviation: f64,
    /// `|v_n − v_{n−p}|`; absent for the first term.
    pub cauchy_increment: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub root_rows: Vec<RootRow>,
    pub zero_rows: Vec<ZeroMeasureRow>,
    pub szego_rows: Vec<SzegoRow>,
    /// `max n·error` over the root rows.
    pub error_constant: f64,
    pub bound_ok: bool,
    pub failure: Option<SequenceFailure>,
}

/// Parses `"2i"`, `"3"`, `"1.5-2i"`, `"-i"`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Argument(format!("malformed complex number `{s}`"));
    let num = |x: &str| -> Result<f64> {
        let v: f64 = x.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => num(x),
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(num(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(num(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Canonical literal accepted by [`parse_complex`].
pub fn format_complex(z: Complex64) -> String {
    let (re, im) = (z.re, z.im);
    if im == 0.0 {
        format!("{re}")
    } else if re == 0.0 {
        format!("{im}i")
    } else if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

/// Parses `"2i;3"`.
pub fn parse_points(literal: &str) -> Result<Vec<Complex64>> {
    let pts: Vec<Complex64> = literal
        .split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse_complex)
        .collect::<Result<_>>()?;
    if pts.is_empty() {
        return arg("no evaluation points given");
    }
    Ok(pts)
}

fn green_at(set: &CompactSet, c: ExtPoint, z: Complex64) -> Result<f64> {
    Ok(build_green(set, c)?.eval(z))
}

fn check_points(set: &CompactSet, zs: &[Complex64]) -> Result<()> {
    for z in zs {
        if z.im == 0.0 && set.contains_real(z.re) {
            return Err(Error::Domain(format!(
                "evaluation point {} lies on the set",
                format_complex(*z)
            )));
        }
    }
    Ok(())
}

fn root_rows(
    set: &CompactSet,
    spec: &PoleSequenceSpec,
    sols: &[(usize, Solution)],
    zs: &[Complex64],
) -> Result<Vec<RootRow>> {
    let mut rows = Vec::new();
    for (n, sol) in sols {
        for &z in zs {
            let h_n = sol.f.eval(z).norm().ln() / *n as f64;
            let mut target = 0.0;
            for &(c, w) in &spec.atoms {
                target += w * green_at(set, c, z)?;
            }
            let mut bound = 0.0;
            for (c, m) in sol.problem.poles.iter() {
                bound += m as f64 * green_at(set, c, z)?;
            }
            let upper_bound = bound / *n as f64;
            rows.push(RootRow {
                n: *n,
                z: format_complex(z),
                h_n,
                target,
                error: (h_n - target).abs(),
                upper_bound,
                bound_ok: h_n <= upper_bound + BOUND_SLACK,
            });
        }
    }
    Ok(rows)
}

fn summarize(report: &mut ConvergenceReport) {
    report.error_constant = report
        .root_rows
        .iter()
        .map(|r| r.n as f64 * r.error)
        .fold(0.0, f64::max);
    report.bound_ok = report.root_rows.iter().all(|r| r.bound_ok);
}

/// Solves every `n` in `ns` and tabulates `h_n(z)` against `∫ G dμ` and the per-`n` bound.
pub fn run_root_asymptotics(
    set: &CompactSet,
    spec: &PoleSequenceSpec,
    ns: &[usize],
    zs: &[Complex64],
    opts: &SolveOptions,
) -> Result<ConvergenceReport> {
    check_points(set, zs)?;
    let (sols, failure) = solve_sequence(set, spec, ns, opts);
    let mut report = ConvergenceReport {
        root_rows: root_rows(set, spec, &sols, zs)?,
        failure,
        ..Default::default()
    };
    summarize(&mut report);
    Ok(report)
}

/// `ν_n` against `ρ = Σ w_i ω_E(·, c_i)`, as measures on the line.
pub fn zero_measure_compare(
    set: &CompactSet,
    sols: &[(usize, Solution)],
    atoms: &[(ExtPoint, f64)],
) -> Result<Vec<ZeroMeasureRow>> {
    if set.bounded_intervals().is_none() {
        return arg("zero measures are compared on bounded sets only");
    }
    let models = atoms
        .iter()
        .map(|&(c, w)| Ok((build_green(set, c)?, w)))
        .collect::<Result<Vec<_>>>()?;
    let rho_cdf = |x: f64| -> f64 {
        models
            .iter()
            .map(|(m, w)| w * m.harmonic_measure_clipped(f64::NEG_INFINITY, x))
            .sum()
    };
    let gaps = set.gaps();
    let mut rows = Vec::new();
    for (n, sol) in sols {
        let nf = *n as f64;
        let mut finite: Vec<(f64, u32)> = Vec::new();
        let mut gap_mass = vec![0.0; gaps.len()];
        for x in sol.zeros.points() {
            let m = sol.zeros.get(x);
            if let Ok(g) = set.gap_index(x) {
                gap_mass[g] += m as f64 / nf;
            }
            if let ExtPoint::Finite(v) = x {
                finite.push((v, m));
            }
        }
        finite.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut below = 0.0;
        let mut ks = 0.0_f64;
        for &(x, m) in &finite {
            let r = rho_cdf(x);
            ks = ks.max((r - below).abs());
            below += m as f64 / nf;
            ks = ks.max((r - below).abs());
        }
        ks = ks.max((1.0 - below).abs());
        let star = set.gap_index(sol.problem.x_star)?;
        rows.push(ZeroMeasureRow {
            n: *n,
            ks_distance: ks,
            max_gap_mass: gap_mass.iter().copied().fold(0.0, f64::max),
            star_gap_mass: gap_mass[star],
        });
    }
    Ok(rows)
}

/// Indices `n ≤ n_max` with `n ≡ n_max (mod p)`.
pub fn residue_class(n_max: usize, period: usize) -> Vec<usize> {
    (1..=n_max)
        .filter(|n| n % period == n_max % period)
        .collect()
}

fn szego_rows(
    set: &CompactSet,
    sols: &[(usize, Solution)],
    zs: &[Complex64],
    period: usize,
) -> Result<Vec<SzegoRow>> {
    let Some((_, last)) = sols.last() else {
        return Ok(Vec::new());
    };
    let limit_zeros: Vec<(ExtPoint, u32)> = last
        .zeros
        .points()
        .into_iter()
        .filter(|&t| !set.contains(t))
        .map(|t| (t, last.zeros.get(t)))
        .collect();
    let mut rows = Vec::new();
    for &z in zs {
        let mut limit = -std::f64::consts::LN_2;
        for &(t, m) in &limit_zeros {
            limit -= m as f64 * green_at(set, t, z)?;
        }
        let mut prev: Option<(usize, f64)> = None;
        for (n, sol) in sols {
            let mut v = sol.f.eval(z).norm().ln();
            for (c, m) in sol.problem.poles.iter() {
                v -= m as f64 * green_at(set, c, z)?;
            }
            let cauchy_increment = prev
                .filter(|&(pn, _)| pn + period == *n)
                .map(|(_, pv)| (v - pv).abs());
            rows.push(SzegoRow {
                n: *n,
                z: format_complex(z),
                v_n: v,
                limit,
                deviation: (v - limit).abs(),
                cauchy_increment,
            });
            prev = Some((*n, v));
        }
    }
    Ok(rows)
}

/// Tabulates `v_n(z)` along `n ≡ n_max (mod p)` for a periodic spec.
pub fn szego_widom_modulus(
    set: &CompactSet,
    spec: &PoleSequenceSpec,
    zs: &[Complex64],
    n_max: usize,
    opts: &SolveOptions,
) -> Result<ConvergenceReport> {
    if spec.mode != PoleMode::Periodic {
        return arg("the modulus limit needs a periodic pole sequence");
    }
    check_points(set, zs)?;
    let ns = residue_class(n_max, spec.period());
    if ns.len() < 3 {
        return arg(format!(
            "the subsequence up to n = {n_max} has fewer than 3 terms"
        ));
    }
    let (sols, failure) = solve_sequence(set, spec, &ns, opts);
    Ok(ConvergenceReport {
        szego_rows: szego_rows(set, &sols, zs, spec.period())?,
        failure,
        bound_ok: true,
        ..Default::default()
    })
}

/// Root, zero-measure and (for periodic specs) modulus rows from one set of solves.
pub fn run_battery(
    set: &CompactSet,
    spec: &PoleSequenceSpec,
    ns: &[usize],
    zs: &[Complex64],
    opts: &SolveOptions,
) -> Result<ConvergenceReport> {
    check_points(set, zs)?;
    let (sols, failure) = solve_sequence(set, spec, ns, opts);
    let mut report = ConvergenceReport {
        root_rows: root_rows(set, spec, &sols, zs)?,
        zero_rows: zero_measure_compare(set, &sols, &spec.atoms)?,
        failure,
        ..Default::default()
    };
    if spec.mode == PoleMode::Periodic {
        report.szego_rows = szego_rows(set, &sols, zs, spec.period())?;
    }
    summarize(&mut report);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExtPoint::{Finite as F, Infinity as Inf};

    fn spec(mode: PoleMode, atoms: &[(ExtPoint, f64)]) -> PoleSequenceSpec {
        PoleSequenceSpec::new(mode, atoms.to_vec(), XStarRule::Constant(Inf)).unwrap()
    }

    #[test]
    fn divisor_examples() {
        let s = spec(PoleMode::WeightedRotation, &[(Inf, 1.0)]);
        assert_eq!(
            generate_divisors(&s, 5).unwrap()[4],
            PoleDivisor::new(&[(Inf, 5)]).unwrap()
        );
        let s = spec(PoleMode::Periodic, &[(F(-0.05), 0.5), (Inf, 0.5)]);
        assert_eq!(s.counts(4), vec![2, 2]);
        assert_eq!(s.counts(5), vec![3, 2]);
        let s = spec(
            PoleMode::WeightedRotation,
            &[(F(-0.05), 2.0 / 3.0), (Inf, 1.0 / 3.0)],
        );
        assert_eq!(s.counts(4), vec![3, 1]);
        for n in 1..30 {
            assert_eq!(s.counts(n).iter().sum::<u32>() as usize, n);
        }
    }

    #[test]
    fn spec_validation() {
        let bad = PoleSequenceSpec::new(
            PoleMode::Periodic,
            vec![(Inf, 0.5), (F(3.0), 0.4)],
            XStarRule::Constant(Inf),
        );
        assert!(matches!(bad, Err(Error::Argument(_))));
        let uneven = PoleSequenceSpec::new(
            PoleMode::Periodic,
            vec![(Inf, 2.0 / 3.0), (F(3.0), 1.0 / 3.0)],
            XStarRule::Constant(Inf),
        );
        assert!(uneven.is_err());
        let s = spec(PoleMode::Periodic, &[(Inf, 1.0)]);
        assert!(generate_divisors(&s, 0).is_err());
        let per = PoleSequenceSpec::new(
            PoleMode::Periodic,
            vec![(Inf, 1.0)],
            XStarRule::PerN(vec![Inf, F(2.0)]),
        )
        .unwrap();
        assert_eq!(per.x_star(2).unwrap(), F(2.0));
        assert!(per.x_star(3).is_err());
    }

    #[test]
    fn complex_literals() {
        for (s, z) in [
            ("2i", Complex64::new(0.0, 2.0)),
            ("3", Complex64::new(3.0, 0.0)),
            ("1.5-2i", Complex64::new(1.5, -2.0)),
            ("-i", Complex64::new(0.0, -1.0)),
            ("1e-3+i", Complex64::new(1e-3, 1.0)),
        ] {
            let p = parse_complex(s).unwrap();
            assert_eq!(p, z);
            assert_eq!(parse_complex(&format_complex(p)).unwrap(), z);
        }
        assert!(parse_complex("2j").is_err());
        assert!(parse_points(" ; ").is_err());
    }

    #[test]
    fn chebyshev_rows() {
        let set = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
        let s = spec(PoleMode::Periodic, &[(Inf, 1.0)]);
        let z = [Complex64::new(0.0, 2.0)];
        let rep = run_battery(&set, &s, &[5, 10, 20], &z, &SolveOptions::default()).unwrap();
        assert!(rep.bound_ok && rep.failure.is_none());
        let errs: Vec<f64> = rep.root_rows.iter().map(|r| r.error).collect();
        assert!(errs[2] < errs[0] && errs[2] <= 0.04, "{errs:?}");
        for r in &rep.zero_rows {
            assert!(r.ks_distance <= 1.0 / r.n as f64 + 1e-6, "{r:?}");
            assert_eq!(r.star_gap_mass, 0.0);
        }
    }

    #[test]
    fn classical_modulus_limit() {
        let set = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
        let s = spec(PoleMode::Periodic, &[(Inf, 1.0)]);
        let rep = szego_widom_modulus(
            &set,
            &s,
            &[Complex64::new(2.0, 0.0)],
            24,
            &SolveOptions::default(),
        )
        .unwrap();
        for r in rep.szego_rows.iter().filter(|r| r.n >= 20) {
            assert!(r.deviation <= 1e-6, "{r:?}");
            assert!((r.limit + std::f64::consts::LN_2).abs() < 1e-15);
        }
        assert!(szego_widom_modulus(
            &set,
            &s,
            &[Complex64::new(2.0, 0.0)],
            2,
            &SolveOptions::default()
        )
        .is_err());
    }

    #[test]
    fn single_pole_rows() {
        let set = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
        let s = PoleSequenceSpec::new(
            PoleMode::Periodic,
            vec![(F(2.0), 1.0)],
            XStarRule::Constant(F(2.0)),
        )
        .unwrap();
        let rep = run_battery(
            &set,
            &s,
            &[1],
            &[Complex64::new(3.0, 0.0)],
            &SolveOptions::default(),
        )
        .unwrap();
        let target = (5.0 + 2.0 * 6f64.sqrt()).ln();
        assert!((rep.root_rows[0].target - target).abs() < 1e-9);
        assert!((rep.root_rows[0].h_n - 5f64.ln()).abs() < 1e-9);
        assert!(rep.zero_rows[0].ks_distance > 0.1);
    }
}

//! Post-solve verification of a solution and the built-in invariant battery.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::battery::random_problems;
use crate::error::{Error, Result};
use crate::extension::{
    band_measure_check, bernstein_walsh_check, gap_samples, n_extension, representation_check,
    BandSet, BernsteinWalshReport, RepresentationReport,
};
use crate::geometry::{CompactSet, ExtPoint, PoleDivisor};
use crate::potential::build_green;
use crate::rational::RationalFn;
use crate::solver::{
    solve, structure_check, verify_alternation, AlternationReport, Diagnostics, Problem, Solution,
    SolveOptions, StructureReport, ALTERNATION_TOL,
};

/// Allowed `|Σ ω − 1|` per band.
pub const BAND_TOL: f64 = 1e-6;
/// Allowed relative deviation in the cosh representation.
pub const REPRESENTATION_TOL: f64 = 1e-6;
/// Allowed negative Bernstein–Walsh margin.
pub const BERNSTEIN_WALSH_TOL: f64 = 1e-9;
/// Real sample points per gap for the representation check.
const GAP_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub eps_pole: f64,
    /// Random evaluation points for the off-set checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            eps_pole: crate::rational::DEFAULT_EPS_POLE,
            samples: 1000,
            seed: 0,
        }
    }
}

/// One named check; `margin` is tolerance minus observed deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub pass: bool,
    pub margin: Option<f64>,
    pub note: Option<String>,
}

impl CheckRow {
    fn new(name: &'static str, pass: bool, margin: Option<f64>) -> Self {
        CheckRow {
            name,
            pass,
            margin,
            note: None,
        }
    }

    fn skipped(name: &'static str, note: &str) -> Self {
        CheckRow {
            name,
            pass: true,
            margin: None,
            note: Some(format!("skipped: {note}")),
        }
    }

    fn failed(name: &'static str, e: &Error) -> Self {
        CheckRow {
            name,
            pass: false,
            margin: None,
            note: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub problem: Problem,
    pub m: f64,
    pub checks: Vec<CheckRow>,
    pub alternation: Option<AlternationReport>,
    pub structure: Option<StructureReport>,
    pub bands: Option<BandSet>,
    pub band_sums: Option<Vec<f64>>,
    pub representation: Option<RepresentationReport>,
    pub bernstein_walsh: Option<BernsteinWalshReport>,
    pub pass: bool,
}

/// `count` seeded points around the hull of `set`: half non-real, half real
/// points off the set.
pub fn random_points(set: &CompactSet, count: usize, seed: u64) -> Result<Vec<Complex64>> {
    let (lo, hi) = set.hull()?;
    let w = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = rng.gen_range(lo - w..hi + w);
        if out.len() % 2 == 0 {
            let y = rng.gen_range(-w..w);
            if y.abs() > 1e-6 * w {
                out.push(Complex64::new(x, y));
            }
        } else if !set.contains_real(x) {
            out.push(Complex64::new(x, 0.0));
        }
    }
    Ok(out)
}

/// Runs alternation, structure, band, representation and Bernstein–Walsh checks.
pub fn verify_solution(sol: &Solution, opts: &VerifyOptions) -> VerifyReport {
    let p = &sol.problem;
    let mut report = VerifyReport {
        problem: p.clone(),
        m: sol.m,
        checks: Vec::new(),
        alternation: None,
        structure: None,
        bands: None,
        band_sums: None,
        representation: None,
        bernstein_walsh: None,
        pass: false,
    };
    match verify_alternation(&sol.f, p) {
        Ok(r) => {
            let margin = ALTERNATION_TOL - r.sign_residual;
            report
                .checks
                .push(CheckRow::new("alternation", r.pass, Some(margin)));
            report.alternation = Some(r);
        }
        Err(e) => report.checks.push(CheckRow::failed("alternation", &e)),
    }
    match structure_check(sol, opts.eps_pole) {
        Ok(r) => {
            report.checks.push(CheckRow::new("structure", r.pass, None));
            report.structure = Some(r);
        }
        Err(e) => report.checks.push(CheckRow::failed("structure", &e)),
    }
    let names = ["bands", "band_measure", "representation", "bernstein_walsh"];
    if p.set.bounded_intervals().is_none() {
        for name in names {
            report
                .checks
                .push(CheckRow::skipped(name, "the set is unbounded"));
        }
    } else {
        let points = random_points(&p.set, opts.samples, opts.seed);
        if sol.constant_case {
            for name in &names[..3] {
                report
                    .checks
                    .push(CheckRow::skipped(name, "constant solution"));
            }
        } else {
            extension_checks(sol, opts, points.as_deref().unwrap_or(&[]), &mut report);
        }
        let bw = points.and_then(|z| bernstein_walsh_check(&sol.f, &p.set, &z, opts.eps_pole));
        match bw {
            Ok(r) => {
                let margin = r.margin_exp.min(r.margin_cosh) + BERNSTEIN_WALSH_TOL;
                report.checks.push(CheckRow::new(
                    "bernstein_walsh",
                    margin >= 0.0,
                    Some(margin),
                ));
                report.bernstein_walsh = Some(r);
            }
            Err(e) => report.checks.push(CheckRow::failed("bernstein_walsh", &e)),
        }
    }
    report.pass = report.checks.iter().all(|c| c.pass);
    report
}

fn extension_checks(
    sol: &Solution,
    opts: &VerifyOptions,
    points: &[Complex64],
    report: &mut VerifyReport,
) {
    let bands = match n_extension(&sol.f, &sol.problem.set, opts.eps_pole) {
        Ok(b) => b,
        Err(e) => {
            for name in ["bands", "band_measure", "representation"] {
                report.checks.push(CheckRow::failed(name, &e));
            }
            return;
        }
    };
    let shape_ok = bands.bands.len() == bands.degree && bands.all_monotone() && bands.contains_set;
    report.checks.push(CheckRow::new("bands", shape_ok, None));
    match band_measure_check(&sol.f, &bands, opts.eps_pole) {
        Ok(sums) => {
            let dev = sums.iter().fold(0.0_f64, |m, s| m.max((s - 1.0).abs()));
            let margin = BAND_TOL - dev;
            report
                .checks
                .push(CheckRow::new("band_measure", margin >= 0.0, Some(margin)));
            report.band_sums = Some(sums);
        }
        Err(e) => report.checks.push(CheckRow::failed("band_measure", &e)),
    }
    let mut zs = gap_samples(&sol.f, &bands, GAP_SAMPLES, opts.eps_pole);
    zs.extend(points.iter().filter(|z| z.im != 0.0));
    match representation_check(&sol.f, &bands, &zs, opts.eps_pole) {
        Ok(r) => {
            let margin = REPRESENTATION_TOL - r.real_deviation.max(r.complex_excess);
            report
                .checks
                .push(CheckRow::new("representation", margin >= 0.0, Some(margin)));
            report.representation = Some(r);
        }
        Err(e) => report.checks.push(CheckRow::failed("representation", &e)),
    }
    report.bands = Some(bands);
}

/// Rebuilds a solution from a `solve` JSON document.
pub fn load_solution(json: &str, eps_pole: f64) -> Result<Solution> {
    let bad = |what: &str| Error::Argument(format!("solution document: {what}"));
    let v: Value = serde_json::from_str(json).map_err(|e| bad(&e.to_string()))?;
    let prob = &v["problem"];
    let literal = |key: &str| {
        prob[key]
            .as_str()
            .ok_or_else(|| bad(&format!("missing problem.{key}")))
    };
    let set = CompactSet::parse(literal("set")?)?;
    let poles = PoleDivisor::parse(literal("poles")?)?;
    let x_star: ExtPoint =
        serde_json::from_value(prob["x_star"].clone()).map_err(|e| bad(&e.to_string()))?;
    let problem = Problem::new(set, poles, x_star)?;
    let f: RationalFn = serde_json::from_value(v["F"].clone()).map_err(|e| bad(&e.to_string()))?;
    let m = v["m"].as_f64().ok_or_else(|| bad("missing m"))?;
    let constant_case = v["constant_case"]
        .as_bool()
        .ok_or_else(|| bad("missing constant_case"))?;
    let zeros = f.generalized_zeros(eps_pole)?;
    Ok(Solution {
        problem,
        f,
        m,
        alternation: Vec::new(),
        zeros,
        constant_case,
        diagnostics: Diagnostics::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestCase {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub cases: Vec<SelftestCase>,
    pub pass: bool,
}

fn case(name: impl Into<String>, pass: bool, detail: String) -> SelftestCase {
    SelftestCase {
        name: name.into(),
        pass,
        detail,
    }
}

fn closed_form_case(name: &str, set: &str, poles: &str, x_star: &str, m: f64) -> SelftestCase {
    let sol = Problem::parse(set, poles, x_star).and_then(|p| solve(&p, &SolveOptions::default()));
    match sol {
        Ok(s) => {
            let rel = (s.m - m).abs() / m;
            case(
                name,
                rel <= 1e-9,
                format!("m = {:.17e}, relative error {rel:.3e}", s.m),
            )
        }
        Err(e) => case(name, false, e.to_string()),
    }
}

fn green_cases() -> Vec<SelftestCase> {
    let mut out = Vec::new();
    let unit = CompactSet::new(&[(-1.0, 1.0)]).expect("valid set");
    let g = build_green(&unit, ExtPoint::Infinity).map(|m| m.eval(Complex64::new(2.0, 0.0)));
    out.push(match g {
        Ok(g) => {
            let err = (g - 2.0_f64.acosh()).abs();
            case("green-closed-form", err <= 1e-9, format!("error {err:.3e}"))
        }
        Err(e) => case("green-closed-form", false, e.to_string()),
    });
    let two = CompactSet::new(&[(-1.0, -0.3), (0.2, 1.0)]).expect("valid set");
    let (a, b) = (-0.05, 1.7);
    let sym = build_green(&two, ExtPoint::Finite(a))
        .and_then(|ga| Ok((ga, build_green(&two, ExtPoint::Finite(b))?)))
        .map(|(ga, gb)| {
            let res = ga.max_period_residual().max(gb.max_period_residual());
            let asym = (ga.eval(Complex64::new(b, 0.0)) - gb.eval(Complex64::new(a, 0.0))).abs();
            (asym, res)
        });
    out.push(match sym {
        Ok((asym, res)) => case(
            "green-symmetry",
            asym <= 1e-7 && res <= 1e-10,
            format!("asymmetry {asym:.3e}, period residual {res:.3e}"),
        ),
        Err(e) => case("green-symmetry", false, e.to_string()),
    });
    out
}

fn random_case(i: usize, p: &Problem, seed: u64, opts: &SolveOptions) -> SelftestCase {
    let name = format!("random-{i}");
    let label = format!(
        "{} {} x*={}",
        p.set.to_literal(),
        p.poles.to_literal(),
        p.x_star
    );
    match solve(p, opts) {
        Ok(sol) => {
            let vopts = VerifyOptions {
                eps_pole: opts.eps_pole,
                samples: 200,
                seed: seed.wrapping_add(i as u64),
            };
            let r = verify_solution(&sol, &vopts);
            let defect_ok = sol.diagnostics.defect <= opts.tol;
            let failed: Vec<&str> = r
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name)
                .collect();
            let detail = if failed.is_empty() && defect_ok {
                label
            } else {
                format!(
                    "{label}: failed {failed:?}, defect {:.3e}",
                    sol.diagnostics.defect
                )
            };
            case(name, r.pass && defect_ok, detail)
        }
        Err(e) => case(name, false, format!("{label}: {e}")),
    }
}

/// Closed-form solves, Green-engine identities and `count` seeded random
/// problems run through [`verify_solution`].
pub fn selftest(seed: u64, count: usize, opts: &SolveOptions) -> SelftestReport {
    let mut cases = vec![
        closed_form_case("chebyshev-t3", "[-1,1]", "inf:3", "inf", 4.0),
        closed_form_case("residual-t3", "[-1,1]", "inf:3", "2", 26.0),
        closed_form_case("single-pole", "[-1,1]", "2:1", "2", 3.0),
        closed_form_case("constant-case", "[-2,-1];[0,1]", "-0.5:1", "inf", 1.0),
    ];
    cases.extend(green_cases());
    let problems = random_problems(seed, count, 8);
    let random: Vec<SelftestCase> = problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| random_case(i, p, seed, opts))
        .collect();
    cases.extend(random);
    let pass = cases.iter().all(|c| c.pass);
    SelftestReport { seed, cases, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_solution_passes_and_round_trips() {
        let p = Problem::parse("[-1,1]", "2:1", "2").unwrap();
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        let r = verify_solution(&sol, &VerifyOptions::default());
        assert!(r.pass, "{:?}", r.checks);
        let doc = crate::format::json_document("solve", &sol).unwrap();
        let back = load_solution(&doc, crate::rational::DEFAULT_EPS_POLE).unwrap();
        assert_eq!(back.f, sol.f);
        assert_eq!(back.m, sol.m);
        assert_eq!(back.zeros, sol.zeros);
    }

    #[test]
    fn constant_case_skips_extension() {
        let p = Problem::parse("[-2,-1];[0,1]", "-0.5:1", "inf").unwrap();
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        let r = verify_solution(&sol, &VerifyOptions::default());
        assert!(r.pass, "{:?}", r.checks);
        assert!(r
            .checks
            .iter()
            .any(|c| c.note.as_deref() == Some("skipped: constant solution")));
    }

    #[test]
    fn scaled_function_fails() {
        let p = Problem::parse("[-1,1]", "inf:3", "inf").unwrap();
        let mut sol = solve(&p, &SolveOptions::default()).unwrap();
        sol.f = sol.f.scaled(1.01);
        let r = verify_solution(&sol, &VerifyOptions::default());
        assert!(!r.pass);
        assert!(!r.checks[0].pass);
    }

    #[test]
    fn random_points_avoid_set() {
        let set = CompactSet::new(&[(-1.0, 0.0), (0.5, 1.0)]).unwrap();
        let z = random_points(&set, 100, 1).unwrap();
        assert_eq!(z.len(), 100);
        assert!(z.iter().all(|z| z.im != 0.0 || !set.contains_real(z.re)));
        assert_eq!(z, random_points(&set, 100, 1).unwrap());
    }
}

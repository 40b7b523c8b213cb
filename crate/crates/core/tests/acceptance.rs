use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ratcheb::asymptotics::{
    run_root_asymptotics, szego_widom_modulus, PoleMode, PoleSequenceSpec, XStarRule,
};
use ratcheb::battery::random_problems;
use ratcheb::extension::{band_measure_check, n_extension, representation_check};
use ratcheb::geometry::{CompactSet, ExtPoint, Mobius};
use ratcheb::potential::{build_green, koosis_check};
use ratcheb::rational::DEFAULT_EPS_POLE;
use ratcheb::solver::{
    solve, solve_lp_oracle, structure_check, verify_alternation, Problem, Solution, SolveOptions,
};
use ratcheb::verify::{verify_solution, VerifyOptions};

/// Regression bound on `max n·err(n)` for criterion 9.
const ROOT_ERROR_CONSTANT: f64 = 1.0;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn solved(set: &str, poles: &str, x_star: &str) -> Solution {
    let p = Problem::parse(set, poles, x_star).unwrap();
    solve(&p, &SolveOptions::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn chebyshev_recovery() -> Outcome {
    let t0 = Instant::now();
    let (mut f_err, mut m_err) = (0.0_f64, 0.0_f64);
    for n in 1..=12 {
        let s = solved("[-1,1]", &format!("inf:{n}"), "inf");
        for k in 0..400 {
            let x = -1.0 + 2.0 * k as f64 / 399.0;
            f_err = f_err.max((s.f.eval_real(x) - (n as f64 * x.acos()).cos()).abs());
        }
        m_err = m_err.max(rel(s.m, 2.0_f64.powi(n - 1)));
    }
    let elapsed = t0.elapsed();
    let pass = f_err <= 1e-9 && m_err <= 1e-9 && elapsed < Duration::from_secs(2);
    (
        pass,
        format!("max |F − T_n| = {f_err:.2e}, max rel m error = {m_err:.2e}, {elapsed:.2?}"),
    )
}

fn residual_growth() -> Outcome {
    let mut worst = 0.0_f64;
    for n in 1..=12 {
        let s = solved("[-1,1]", &format!("inf:{n}"), "2");
        worst = worst.max(rel(s.m, (n as f64 * 2.0_f64.acosh()).cosh()));
    }
    let m3 = solved("[-1,1]", "inf:3", "2").m;
    (
        worst <= 1e-9,
        format!("max rel error vs T_n(2) = {worst:.2e}, m_3 = {m3:.12}"),
    )
}

/// `(a, b)` with `F(z) = a + b/(2 − z)`.
fn partial_fraction(s: &Solution) -> (f64, f64) {
    let a = s.f.eval_ext(ExtPoint::Infinity);
    (a, 2.0 * (s.f.eval_real(0.0) - a))
}

fn single_pole_hand_solve() -> Outcome {
    let s = solved("[-1,1]", "2:1", "2");
    let (a, b) = partial_fraction(&s);
    let coeff_err = (a + 2.0).abs().max((b - 3.0).abs());
    let alt: Vec<(f64, i8)> = s
        .alternation
        .iter()
        .map(|p| (p.x.finite().unwrap_or(f64::NAN), p.sign))
        .collect();
    let alt_ok = alt.len() == 2
        && (alt[0].0 + 1.0).abs() < 1e-10
        && alt[0].1 == -1
        && (alt[1].0 - 1.0).abs() < 1e-10
        && alt[1].1 == 1;
    let r = solved("[-1,1]", "2:1", "inf");
    let (ra, rb) = partial_fraction(&r);
    let res_err = (ra - 2.0).abs().max((rb + 3.0).abs());
    let pass = coeff_err <= 1e-10
        && res_err <= 1e-10
        && rel(s.m, 3.0) <= 1e-10
        && rel(r.m, 2.0) <= 1e-10
        && alt_ok;
    (
        pass,
        format!(
            "F = {a:.12} + {b:.12}/(2−z), m = {:.12}; residual: {ra:.12} + {rb:.12}/(2−z), m = {:.12}; alternation {alt:?}",
            s.m, r.m
        ),
    )
}

fn constant_case() -> Outcome {
    let s = solved("[-2,-1];[0,1]", "-0.5:1", "inf");
    let exact_one = [-2.0, -1.5, 0.3, 1.0, 5.0]
        .iter()
        .all(|&x| s.f.eval_real(x) == 1.0);
    let r = verify_alternation(&s.f, &s.problem).unwrap();
    let pass =
        s.constant_case && s.m == 1.0 && exact_one && r.pass && r.required == 2 && r.size >= 2;
    (
        pass,
        format!(
            "m = {}, F ≡ 1: {exact_one}, alternation size {} of {}",
            s.m, r.size, r.required
        ),
    )
}

fn structure_suite() -> Outcome {
    let problems = random_problems(2024, 20, 8);
    let mut failures = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        let s = match solve(p, &SolveOptions::default()) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let alt = verify_alternation(&s.f, p).unwrap();
        let st = structure_check(&s, DEFAULT_EPS_POLE).unwrap();
        let defect_ok = s.diagnostics.defect <= 1e-10;
        if !(alt.pass && alt.size >= alt.required && st.pass && defect_ok) {
            failures.push(format!(
                "#{i} alternation {} structure {} defect {:.1e}",
                alt.pass, st.pass, s.diagnostics.defect
            ));
        }
    }
    let n_max = problems.iter().map(Problem::n).max().unwrap_or(0);
    (
        failures.is_empty(),
        format!("20 problems (n ≤ {n_max}); failures: {failures:?}"),
    )
}

const ORACLE_BATTERY: [(&str, &str, &str); 6] = [
    ("[-1,1]", "inf:4", "inf"),
    ("[-1,1]", "2:1,inf:2", "2"),
    ("[-1,-0.3];[0.2,1]", "inf:2,-0.05:1", "inf"),
    ("[-1,-0.3];[0.2,1]", "inf:3", "3"),
    ("[-2,-1];[0,0.5];[1,2]", "-0.5:1,0.75:1,inf:1", "inf"),
    ("[-1,0];[0.5,1.5]", "0.25:1,3:2", "3"),
];

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0_f64;
    let mut rows = Vec::new();
    for (set, poles, x) in ORACLE_BATTERY {
        let s = solved(set, poles, x);
        let lp = solve_lp_oracle(&s.problem, 2001).unwrap();
        let d = (s.m - lp.m).abs();
        worst = worst.max(d);
        rows.push(format!("{:.6}/{:.6}", s.m, lp.m));
    }
    (
        worst <= 5e-4,
        format!("max |m_Remez − m_LP| = {worst:.2e}; Remez/LP {rows:?}"),
    )
}

/// `φ(z) = z − √(z−1)√(z+1)`, the inverse Joukowsky map into the unit disk.
fn phi(z: Complex64) -> Complex64 {
    z - (z - 1.0).sqrt() * (z + 1.0).sqrt()
}

fn green_engine() -> Outcome {
    let unit = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
    let zs = [
        Complex64::new(0.0, 2.0),
        Complex64::new(0.3, 0.5),
        Complex64::new(3.0, 0.0),
        Complex64::new(-2.0, 0.0),
    ];
    let g_inf = build_green(&unit, ExtPoint::Infinity).unwrap();
    let mut closed = 0.0_f64;
    for &z in &zs {
        closed = closed.max((g_inf.eval(z) + phi(z).norm().ln()).abs());
    }
    for c in [2.0, -1.5] {
        let g = build_green(&unit, ExtPoint::Finite(c)).unwrap();
        let pc = phi(Complex64::new(c, 0.0));
        for &z in &zs {
            let pz = phi(z);
            let exact = ((Complex64::new(1.0, 0.0) - pc.conj() * pz) / (pz - pc))
                .norm()
                .ln();
            closed = closed.max((g.eval(z) - exact).abs());
        }
    }
    let sets = [
        CompactSet::new(&[(-1.0, -0.3), (0.2, 1.0)]).unwrap(),
        CompactSet::new(&[(-2.0, -1.0), (0.0, 0.5), (1.0, 2.0)]).unwrap(),
    ];
    let poles = [
        ExtPoint::Infinity,
        ExtPoint::Finite(-0.05),
        ExtPoint::Finite(3.0),
        ExtPoint::Finite(0.75),
    ];
    let mut period = 0.0_f64;
    let mut sym = 0.0_f64;
    for set in &sets {
        let finite: Vec<f64> = poles
            .iter()
            .filter_map(|c| c.finite())
            .filter(|&c| !set.contains_real(c))
            .collect();
        for c in poles.iter().filter(|c| !set.contains(**c)) {
            period = period.max(build_green(set, *c).unwrap().max_period_residual());
        }
        for (i, &a) in finite.iter().enumerate() {
            for &b in &finite[i + 1..] {
                let gab = build_green(set, ExtPoint::Finite(b))
                    .unwrap()
                    .eval(Complex64::new(a, 0.0));
                let gba = build_green(set, ExtPoint::Finite(a))
                    .unwrap()
                    .eval(Complex64::new(b, 0.0));
                sym = sym.max((gab - gba).abs());
            }
        }
    }
    let koosis_cases = [
        (
            "[-1,0];[0.5,1]",
            "[-1,1]",
            ExtPoint::Infinity,
            Complex64::new(0.0, 2.0),
        ),
        (
            "[-1,1]",
            "[-1,1];[1.5,2]",
            ExtPoint::Infinity,
            Complex64::new(0.2, 0.5),
        ),
        (
            "[-1,-0.3];[0.2,1]",
            "[-1,-0.3];[0.2,1];[1.5,2]",
            ExtPoint::Finite(3.0),
            Complex64::new(-2.0, 0.0),
        ),
    ];
    let mut koosis = 0.0_f64;
    for (e1, e2, c, z) in koosis_cases {
        let r = koosis_check(
            &CompactSet::parse(e1).unwrap(),
            &CompactSet::parse(e2).unwrap(),
            c,
            z,
        )
        .unwrap();
        koosis = koosis.max(r);
    }
    let mut arcsine = 0.0_f64;
    for (a, b) in [(0.5_f64, 1.0_f64), (-1.0, 0.0), (-0.3, 0.7), (0.9, 1.0)] {
        let exact = (a.acos() - b.acos()) / PI;
        arcsine = arcsine.max((g_inf.harmonic_measure(a, b).unwrap() - exact).abs());
    }
    let pass =
        closed <= 1e-9 && period <= 1e-10 && sym <= 1e-7 && koosis <= 1e-6 && arcsine <= 1e-8;
    (
        pass,
        format!(
            "closed forms {closed:.2e}, period residuals {period:.2e}, symmetry {sym:.2e}, Koosis {koosis:.2e}, arcsine {arcsine:.2e}"
        ),
    )
}

fn representation_and_bands() -> Outcome {
    let hand = solved("[-1,1]", "2:1", "2");
    let unit = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
    let g = build_green(&unit, ExtPoint::Finite(2.0))
        .unwrap()
        .eval(Complex64::new(3.0, 0.0));
    let anchor = (hand.f.eval_real(3.0).abs() - 5.0)
        .abs()
        .max((g.cosh() - 5.0).abs());
    let bands = n_extension(&hand.f, &unit, DEFAULT_EPS_POLE).unwrap();
    let anchor_rep = representation_check(
        &hand.f,
        &bands,
        &[Complex64::new(3.0, 0.0)],
        DEFAULT_EPS_POLE,
    )
    .unwrap();
    let mut worst_band = 0.0_f64;
    let mut worst_rep = anchor_rep.real_deviation;
    let mut worst_bw = f64::INFINITY;
    let mut failed = Vec::new();
    for (i, (set, poles, x)) in ORACLE_BATTERY.iter().enumerate() {
        let s = solved(set, poles, x);
        let r = verify_solution(
            &s,
            &VerifyOptions {
                samples: 1000,
                seed: i as u64,
                ..VerifyOptions::default()
            },
        );
        let bands = n_extension(&s.f, &s.problem.set, DEFAULT_EPS_POLE).unwrap();
        for sum in band_measure_check(&s.f, &bands, DEFAULT_EPS_POLE).unwrap() {
            worst_band = worst_band.max((sum - 1.0).abs());
        }
        if let Some(rep) = r.representation {
            worst_rep = worst_rep.max(rep.real_deviation).max(rep.complex_excess);
        }
        if let Some(bw) = r.bernstein_walsh {
            assert_eq!(bw.samples, 1000);
            worst_bw = worst_bw.min(bw.margin_exp).min(bw.margin_cosh);
        }
        if !r.pass {
            failed.push(i);
        }
    }
    let pass = anchor <= 1e-9
        && worst_rep <= 1e-6
        && worst_band <= 1e-6
        && worst_bw >= -1e-9
        && failed.is_empty();
    (
        pass,
        format!(
            "anchor |F(3)| = {:.12}, cosh G = {:.12}; representation {worst_rep:.2e}; band sums {worst_band:.2e}; Bernstein–Walsh min margin {worst_bw:.2e}; failed {failed:?}",
            hand.f.eval_real(3.0).abs(),
            g.cosh()
        ),
    )
}

fn two_pole_spec() -> (CompactSet, PoleSequenceSpec) {
    let set = CompactSet::parse("[-1,-0.3];[0.2,1]").unwrap();
    let spec = PoleSequenceSpec::new(
        PoleMode::Periodic,
        vec![(ExtPoint::Finite(-0.05), 0.5), (ExtPoint::Infinity, 0.5)],
        XStarRule::Constant(ExtPoint::Infinity),
    )
    .unwrap();
    (set, spec)
}

fn root_asymptotics() -> Outcome {
    let t0 = Instant::now();
    let (set, spec) = two_pole_spec();
    let zs = [Complex64::new(0.0, 2.0), Complex64::new(3.0, 0.0)];
    let r =
        run_root_asymptotics(&set, &spec, &[10, 20, 40], &zs, &SolveOptions::default()).unwrap();
    let err = |n: usize, z: &str| {
        r.root_rows
            .iter()
            .find(|row| row.n == n && row.z == z)
            .map(|row| row.error)
    };
    let decreasing = ["2i", "3"]
        .iter()
        .all(|z| matches!((err(10, z), err(40, z)), (Some(a), Some(b)) if b < a));
    let elapsed = t0.elapsed();
    let pass = r.failure.is_none()
        && r.root_rows.len() == 6
        && r.bound_ok
        && decreasing
        && r.error_constant <= ROOT_ERROR_CONSTANT
        && elapsed < Duration::from_secs(60);
    let table: Vec<String> = r
        .root_rows
        .iter()
        .map(|row| format!("n={} z={} err={:.4}", row.n, row.z, row.error))
        .collect();
    (
        pass,
        format!(
            "{table:?}; bound holds: {}; max n·err = {:.4} (bound {ROOT_ERROR_CONSTANT}); {elapsed:.2?}",
            r.bound_ok, r.error_constant
        ),
    )
}

/// First `n` from which the Cauchy increments are compared.
const CAUCHY_FROM: usize = 10;

fn szego_widom_modulus_check() -> Outcome {
    let unit = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
    let classical = PoleSequenceSpec::new(
        PoleMode::Periodic,
        vec![(ExtPoint::Infinity, 1.0)],
        XStarRule::Constant(ExtPoint::Infinity),
    )
    .unwrap();
    let c = szego_widom_modulus(
        &unit,
        &classical,
        &[Complex64::new(2.0, 0.0)],
        30,
        &SolveOptions::default(),
    )
    .unwrap();
    let classical_dev = c
        .szego_rows
        .iter()
        .filter(|r| r.n >= 20)
        .map(|r| (r.v_n + LN_2).abs())
        .fold(0.0, f64::max);
    let (set, spec) = two_pole_spec();
    let zs = [Complex64::new(0.0, 2.0), Complex64::new(3.0, 0.0)];
    let r = szego_widom_modulus(&set, &spec, &zs, 40, &SolveOptions::default()).unwrap();
    let mut decreasing = true;
    let mut increments = Vec::new();
    for z in ["2i", "3"] {
        let inc: Vec<f64> = r
            .szego_rows
            .iter()
            .filter(|row| row.z == z && row.n >= CAUCHY_FROM)
            .filter_map(|row| row.cauchy_increment)
            .collect();
        decreasing &= inc.windows(2).all(|w| w[1] < w[0]);
        increments.push(format!(
            "{z}: {:.2e} → {:.2e}",
            inc.first().unwrap_or(&f64::NAN),
            inc.last().unwrap_or(&f64::NAN)
        ));
    }
    let final_dev = r
        .szego_rows
        .iter()
        .filter(|row| row.n == 40)
        .map(|row| row.deviation)
        .fold(0.0, f64::max);
    let pass = r.failure.is_none() && classical_dev <= 1e-6 && decreasing && final_dev <= 1e-3;
    (
        pass,
        format!(
            "classical max |v_n(2) + log 2| (n ≥ 20) = {classical_dev:.2e}; increments from n = {CAUCHY_FROM} decreasing: {decreasing} ({increments:?}); deviation at n = 40: {final_dev:.2e}"
        ),
    )
}

/// A random orientation-preserving map whose pole lies outside the padded hull.
fn random_mobius(rng: &mut ChaCha8Rng, hull: (f64, f64)) -> Mobius {
    loop {
        let p = if rng.gen_bool(0.5) {
            hull.0 - rng.gen_range(0.2..2.0)
        } else {
            hull.1 + rng.gen_range(0.2..2.0)
        };
        let s = rng.gen_range(0.5..2.0);
        let t = rng.gen_range(-1.0..1.0);
        // z ↦ s·(−1/(z − p)) + t
        let f = Mobius::affine(s, t)
            .unwrap()
            .compose(&Mobius::inversion_at(p));
        if f.det() > 0.0 {
            return f;
        }
    }
}

fn conformal_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let problems = random_problems(77, 10, 6);
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        let f = random_mobius(&mut rng, p.set.hull().unwrap());
        let mapped = Problem::new(
            p.set.map(&f).unwrap(),
            p.poles.pushforward(&f),
            f.apply(p.x_star),
        );
        let (s, t) = match mapped.map(|q| {
            (
                solve(p, &SolveOptions::default()),
                solve(&q, &SolveOptions::default()),
            )
        }) {
            Ok((Ok(s), Ok(t))) => (s, t),
            other => {
                failures.push(format!("#{i}: {:?}", other.err()));
                continue;
            }
        };
        let iv = p.set.intervals().unwrap();
        for &(a, b) in &iv {
            for k in 0..=50 {
                let x = a + (b - a) * k as f64 / 50.0;
                let fx = f.apply(ExtPoint::Finite(x));
                worst = worst.max((t.f.eval_ext(fx) - s.f.eval_real(x)).abs());
            }
        }
    }
    let pass = failures.is_empty() && worst <= 1e-7;
    (
        pass,
        format!(
            "10 transported problems, max |F_T∘f − F| on E = {worst:.2e}; failures {failures:?}"
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("Chebyshev recovery", chebyshev_recovery),
        ("residual growth", residual_growth),
        ("single-pole hand solve", single_pole_hand_solve),
        ("constant case", constant_case),
        ("structure suite", structure_suite),
        ("oracle equivalence", oracle_equivalence),
        ("Green engine", green_engine),
        ("representation and bands", representation_and_bands),
        ("root asymptotics", root_asymptotics),
        ("modulus asymptotics", szego_widom_modulus_check),
        ("conformal invariance", conformal_invariance),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check();
        println!(
            "{} {:>2} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" },
            k + 1
        );
        if !pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

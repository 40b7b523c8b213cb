//! Green functions, harmonic measures and critical points for finite unions
//! of real intervals.
//!
//! Every model is built in a frame where the pole sits at infinity and the
//! set spans `[-1, 1]`. There
//!
//! `G(ζ) = Re ∫_e^ζ M(t) / √R(t) dt`,  `R(t) = Π (t − e_k)`,
//!
//! with `M` monic of degree `g` (the number of bounded gaps) fixed by the
//! conditions that `M/√R` integrates to zero over every bounded gap. `M` has
//! one root in each gap and is kept in product form, which stays accurate
//! when the frame change crowds part of the set into a small cluster.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{arg, domain, Error, Result};
use crate::geometry::{
    normalize_problem, CompactSet, ExtPoint, Mobius, PoleDivisor, WeightedDivisor,
};
use crate::numerics::{bisect, csqrt, integrate, integrate_complex};

const GAP_QUAD_TOL: f64 = 1e-14;
const PATH_TOL: f64 = 1e-13;
const MEASURE_TOL: f64 = 1e-14;
const MIN_GAP: f64 = 1e-9;

/// Numeric model of `G_E(·, c)`.
#[derive(Debug, Clone, Serialize)]
pub struct GreenModel {
    set: CompactSet,
    pole: ExtPoint,
    /// Original coordinates to model coordinates.
    frame: Mobius,
    endpoints: Vec<f64>,
    /// Roots of `M` in model coordinates, one per bounded gap.
    numerator_roots: Vec<f64>,
    period_residuals: Vec<f64>,
    critical_points: Vec<ExtPoint>,
}

/// `Π |t − e_k|` over all endpoints except `lo = e[i]` and `hi = e[i + 1]`, at
/// `t = mid − hw·cos θ`, with distances formed from `t − lo = 2hw·sin²(θ/2)`
/// and `hi − t = 2hw·cos²(θ/2)` so nearby endpoints keep full relative accuracy.
fn distance_product(endpoints: &[f64], i: usize, th: f64) -> f64 {
    let (lo, hi) = (endpoints[i], endpoints[i + 1]);
    let hw = 0.5 * (hi - lo);
    let from_lo = 2.0 * hw * (0.5 * th).sin().powi(2);
    let to_hi = 2.0 * hw * (0.5 * th).cos().powi(2);
    let mut p = 1.0;
    for (k, &e) in endpoints.iter().enumerate() {
        if k < i {
            p *= from_lo + (lo - e);
        } else if k > i + 1 {
            p *= to_hi + (e - hi);
        }
    }
    p
}

/// `∫_gap f(t, θ) / √|R(t)| dt` in the angle variable `t = mid − hw·cos θ`,
/// which absorbs the gap's own endpoints. `f` also receives `θ` so factors
/// vanishing inside the gap can be formed without cancellation.
fn gap_integral<F: Fn(f64, f64) -> f64>(endpoints: &[f64], gap: usize, f: F) -> f64 {
    let (lo, hi) = (endpoints[2 * gap + 1], endpoints[2 * gap + 2]);
    let (mid, hw) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let weight = |th: f64| 1.0 / distance_product(endpoints, 2 * gap + 1, th).sqrt();
    let abs_f = |th: f64| (f(mid - hw * th.cos(), th) * weight(th)).abs();
    let rough = integrate(abs_f, 0.0, std::f64::consts::PI, f64::INFINITY);
    let mass = integrate(abs_f, 0.0, std::f64::consts::PI, 1e-3 * rough);
    integrate(
        |th| f(mid - hw * th.cos(), th) * weight(th),
        0.0,
        std::f64::consts::PI,
        GAP_QUAD_TOL * mass,
    )
}

/// `Π_{i ∉ skip} (t − r_i)` for `t` in gap `own`, where `t − r_own` is built
/// from the gap midpoint offset.
fn partial_product(
    endpoints: &[f64],
    roots: &[f64],
    own: usize,
    skip: Option<usize>,
    t: f64,
    th: f64,
) -> f64 {
    let (lo, hi) = (endpoints[2 * own + 1], endpoints[2 * own + 2]);
    let (mid, hw) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    roots
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(i, &r)| {
            if i == own {
                (mid - r) - hw * th.cos()
            } else {
                t - r
            }
        })
        .product()
}

/// Periods of `Π (t − r_i)` over every gap, each relative to the integral of its modulus.
fn periods(endpoints: &[f64], roots: &[f64]) -> Vec<f64> {
    (0..roots.len())
        .map(|k| {
            let f = |t: f64, th: f64| partial_product(endpoints, roots, k, None, t, th);
            let v = gap_integral(endpoints, k, f);
            let m = gap_integral(endpoints, k, |t, th| f(t, th).abs());
            v / m
        })
        .collect()
}

/// Solves the period conditions: a linear solve in the basis
/// `Π_{i≠j} (t − m_i)` on gap midpoints, roots bracketed per gap, then Newton
/// steps on the roots while they reduce the periods.
fn solve_periods(endpoints: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = endpoints.len() / 2 - 1;
    let gaps: Vec<(f64, f64)> = (0..g)
        .map(|j| (endpoints[2 * j + 1], endpoints[2 * j + 2]))
        .collect();
    let mids: Vec<f64> = gaps.iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let mut a = DMatrix::<f64>::zeros(g, g);
    let mut rhs = DVector::<f64>::zeros(g);
    for k in 0..g {
        for j in 0..g {
            a[(k, j)] = gap_integral(endpoints, k, |t, th| {
                partial_product(endpoints, &mids, k, Some(j), t, th)
            });
        }
        rhs[k] = -gap_integral(endpoints, k, |t, th| {
            partial_product(endpoints, &mids, k, None, t, th)
        });
    }
    let coef = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular period system".into()))?;
    let m_of = |t: f64| {
        let full: f64 = mids.iter().map(|m| t - m).product();
        let rest: f64 = (0..g)
            .map(|j| {
                coef[j]
                    * mids
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != j)
                        .map(|(_, m)| t - m)
                        .product::<f64>()
            })
            .sum();
        full + rest
    };
    let mut roots = gaps
        .iter()
        .map(|&(lo, hi)| bisect(m_of, lo, hi, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let mut res = periods(endpoints, &roots);
    let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    for _ in 0..4 {
        if norm(&res) <= 1e-15 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(g, g);
        let mut r = DVector::<f64>::zeros(g);
        for k in 0..g {
            let scale = gap_integral(endpoints, k, |t, th| {
                partial_product(endpoints, &roots, k, None, t, th).abs()
            });
            for j in 0..g {
                jac[(k, j)] = -gap_integral(endpoints, k, |t, th| {
                    partial_product(endpoints, &roots, k, Some(j), t, th)
                }) / scale;
            }
            r[k] = res[k];
        }
        let Some(step) = jac.lu().solve(&r) else {
            break;
        };
        let trial: Vec<f64> = roots
            .iter()
            .zip(step.iter())
            .zip(&gaps)
            .map(|((x, d), &(lo, hi))| (x - d).clamp(lo, hi))
            .collect();
        let trial_res = periods(endpoints, &trial);
        if norm(&trial_res) >= norm(&res) {
            break;
        }
        roots = trial;
        res = trial_res;
    }
    Ok((roots, res))
}

impl GreenModel {
    /// Builds the model of `G_E(·, c)`.
    pub fn new(set: &CompactSet, pole: ExtPoint) -> Result<Self> {
        if set.contains(pole) {
            return domain(format!("pole {pole} lies on the set"));
        }
        let norm = normalize_problem(set, &PoleDivisor::empty(), pole)?;
        let endpoints = norm.set.endpoints()?;
        let g = endpoints.len() / 2 - 1;
        for j in 0..g {
            if endpoints[2 * j + 2] - endpoints[2 * j + 1] < MIN_GAP * 2.0 {
                return domain(format!(
                    "gap {j} is too narrow ({:e} in normalized scale)",
                    endpoints[2 * j + 2] - endpoints[2 * j + 1]
                ));
            }
        }
        let (roots, period_residuals) = if g > 0 {
            solve_periods(&endpoints)?
        } else {
            (Vec::new(), Vec::new())
        };
        let mut model = GreenModel {
            set: set.clone(),
            pole,
            frame: norm.map,
            endpoints,
            numerator_roots: roots,
            period_residuals,
            critical_points: Vec::new(),
        };
        model.critical_points = model.find_critical_points()?;
        Ok(model)
    }

    pub fn set(&self) -> &CompactSet {
        &self.set
    }

    pub fn pole(&self) -> ExtPoint {
        self.pole
    }

    pub fn frame(&self) -> &Mobius {
        &self.frame
    }

    /// Roots of `M` in model coordinates.
    pub fn numerator_roots(&self) -> &[f64] {
        &self.numerator_roots
    }

    fn numerator(&self, t: f64) -> f64 {
        self.numerator_roots.iter().map(|r| t - r).product()
    }

    fn numerator_complex(&self, t: Complex64) -> Complex64 {
        self.numerator_roots.iter().map(|r| t - r).product()
    }

    /// Relative periods of `M/√R` over each gap; zero for an exact model.
    pub fn period_residuals(&self) -> &[f64] {
        &self.period_residuals
    }

    pub fn max_period_residual(&self) -> f64 {
        self.period_residuals
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    pub fn genus(&self) -> usize {
        self.endpoints.len() / 2 - 1
    }

    /// Critical points of `G(·, c)` on the real line, one per gap not containing the pole.
    pub fn critical_points(&self) -> &[ExtPoint] {
        &self.critical_points
    }

    fn find_critical_points(&self) -> Result<Vec<ExtPoint>> {
        let inv = self.frame.inverse();
        Ok(self
            .numerator_roots
            .iter()
            .map(|&r| inv.apply(ExtPoint::Finite(r)))
            .collect())
    }

    /// `1/√R(t)` over all endpoints except `skip`, principal branches.
    fn inv_sqrt_other(&self, t: Complex64, skip: usize) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for (k, &e) in self.endpoints.iter().enumerate() {
            if k != skip {
                p *= csqrt(t - e);
            }
        }
        p.inv()
    }

    /// Green function at a model-coordinate point.
    pub fn eval_model(&self, zeta: Complex64) -> f64 {
        if zeta.im == 0.0 {
            let x = zeta.re;
            if self.endpoints.chunks(2).any(|iv| iv[0] <= x && x <= iv[1]) {
                return 0.0;
            }
        }
        let (k, e) = self
            .endpoints
            .iter()
            .enumerate()
            .min_by(|a, b| (zeta - a.1).norm().total_cmp(&(zeta - b.1).norm()))
            .map(|(k, e)| (k, *e))
            .expect("nonempty");
        let d = zeta - e;
        let root = csqrt(d) * 2.0;
        let v = integrate_complex(
            |s| {
                let t = d * (s * s) + e;
                root * self.numerator_complex(t) * self.inv_sqrt_other(t, k)
            },
            0.0,
            1.0,
            PATH_TOL,
        );
        v.re.max(0.0)
    }

    /// `G_E(z, c)`; `+∞` at the pole.
    pub fn eval(&self, z: Complex64) -> f64 {
        match self.frame.apply_complex(z) {
            Some(zeta) => self.eval_model(zeta),
            None => f64::INFINITY,
        }
    }

    pub fn eval_ext(&self, x: ExtPoint) -> f64 {
        match x {
            ExtPoint::Finite(v) => self.eval(Complex64::new(v, 0.0)),
            ExtPoint::Infinity => match self.frame.apply_infinity() {
                Some(zeta) => self.eval_model(zeta),
                None => f64::INFINITY,
            },
        }
    }

    fn model_interval_of(&self, x: f64) -> Option<usize> {
        self.endpoints
            .chunks(2)
            .position(|iv| iv[0] - 1e-14 <= x && x <= iv[1] + 1e-14)
    }

    /// Harmonic-measure mass of `[lo, hi]` (model coordinates) inside model interval `j`.
    fn model_mass(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let (a, b) = (self.endpoints[2 * j], self.endpoints[2 * j + 1]);
        let (mid, hw) = (0.5 * (a + b), 0.5 * (b - a));
        let theta = |x: f64| {
            if x - a <= b - x {
                2.0 * ((x - a) / (b - a)).clamp(0.0, 1.0).sqrt().asin()
            } else {
                std::f64::consts::PI - 2.0 * ((b - x) / (b - a)).clamp(0.0, 1.0).sqrt().asin()
            }
        };
        let (t0, t1) = (theta(lo.max(a)), theta(hi.min(b)));
        if t1 <= t0 {
            return 0.0;
        }
        integrate(
            |th| {
                let x = mid - hw * th.cos();
                let other = distance_product(&self.endpoints, 2 * j, th);
                self.numerator(x).abs() / (std::f64::consts::PI * other.sqrt())
            },
            t0,
            t1,
            MEASURE_TOL,
        )
    }

    /// Density of `ω_E(·, c)` at a point of `E`, original coordinates.
    pub fn harmonic_density(&self, x: f64) -> f64 {
        let f = &self.frame;
        let den = f.c * x + f.d;
        let xi = (f.a * x + f.b) / den;
        if self.model_interval_of(xi).is_none() {
            return 0.0;
        }
        let mut r = 1.0;
        for &e in &self.endpoints {
            r *= (xi - e).abs();
        }
        self.numerator(xi).abs() / (std::f64::consts::PI * r.sqrt()) * f.det() / (den * den)
    }

    /// `ω_E([lo, hi], c)` for an interval contained in `E`.
    pub fn harmonic_measure(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return arg(format!("empty interval [{lo}, {hi}]"));
        }
        let inside = self.set.arcs().iter().any(|&(s, e)| match (s, e) {
            (ExtPoint::Finite(a), ExtPoint::Finite(b)) if a <= b => a <= lo && hi <= b,
            _ => false,
        });
        if !inside {
            return arg(format!("[{lo}, {hi}] is not contained in the set"));
        }
        Ok(self.harmonic_measure_clipped(lo, hi))
    }

    /// `ω_E(E ∩ [lo, hi], c)` for a bounded set.
    pub fn harmonic_measure_clipped(&self, lo: f64, hi: f64) -> f64 {
        let Some(iv) = self.set.bounded_intervals() else {
            return f64::NAN;
        };
        let mut total = 0.0;
        for (a, b) in iv {
            let (l, h) = (lo.max(a), hi.min(b));
            if l >= h {
                continue;
            }
            let zl = self
                .frame
                .apply(ExtPoint::Finite(l))
                .finite()
                .unwrap_or(f64::NAN);
            let zh = self
                .frame
                .apply(ExtPoint::Finite(h))
                .finite()
                .unwrap_or(f64::NAN);
            let j = self.model_interval_of(0.5 * (zl + zh)).unwrap_or(0);
            total += self.model_mass(j, zl, zh);
        }
        total
    }

    /// Total harmonic mass of `E`; equals one for a valid model.
    pub fn total_mass(&self) -> f64 {
        (0..self.endpoints.len() / 2)
            .map(|j| self.model_mass(j, self.endpoints[2 * j], self.endpoints[2 * j + 1]))
            .sum()
    }
}

type CacheKey = (Vec<(u64, u64)>, u64);

fn key_bits(p: ExtPoint) -> u64 {
    match p {
        ExtPoint::Finite(x) => (x + 0.0).to_bits(),
        ExtPoint::Infinity => u64::MAX,
    }
}

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<GreenModel>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<GreenModel>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

const CACHE_LIMIT: usize = 4096;

/// Builds `G_E(·, c)` or fetches it from the process-wide cache.
pub fn build_green(set: &CompactSet, pole: ExtPoint) -> Result<Arc<GreenModel>> {
    let key: CacheKey = (
        set.arcs()
            .iter()
            .map(|&(s, e)| (key_bits(s), key_bits(e)))
            .collect(),
        key_bits(pole),
    );
    if let Some(m) = cache().read().expect("cache lock").get(&key) {
        return Ok(Arc::clone(m));
    }
    let model = Arc::new(GreenModel::new(set, pole)?);
    let mut w = cache().write().expect("cache lock");
    if w.len() >= CACHE_LIMIT {
        w.clear();
    }
    Ok(Arc::clone(w.entry(key).or_insert(model)))
}

/// `G_E(z, c)`.
pub fn green_eval(set: &CompactSet, pole: ExtPoint, z: Complex64) -> Result<f64> {
    Ok(build_green(set, pole)?.eval(z))
}

/// `Σ w_i G_E(z, c_i)`.
pub fn green_sum(set: &CompactSet, divisor: &WeightedDivisor, z: Complex64) -> Result<f64> {
    let mut total = 0.0;
    for &(c, w) in &divisor.atoms {
        if set.contains(c) {
            return domain(format!("atom {c} lies on the set"));
        }
        if w != 0.0 {
            total += w * build_green(set, c)?.eval(z);
        }
    }
    Ok(total)
}

/// Same as [`green_sum`] at a point of the extended line.
pub fn green_sum_ext(set: &CompactSet, divisor: &WeightedDivisor, x: ExtPoint) -> Result<f64> {
    let mut total = 0.0;
    for &(c, w) in &divisor.atoms {
        if w != 0.0 {
            total += w * build_green(set, c)?.eval_ext(x);
        }
    }
    Ok(total)
}

/// `ω_E([lo, hi], c)`.
pub fn harmonic_measure(model: &GreenModel, lo: f64, hi: f64) -> Result<f64> {
    model.harmonic_measure(lo, hi)
}

/// Closure of `E2 ∖ E1` as finite intervals.
fn difference(e1: &[(f64, f64)], e2: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    for &(a, b) in e1 {
        if !e2.iter().any(|&(c, d)| c <= a && b <= d) {
            return arg(format!("[{a}, {b}] is not contained in the larger set"));
        }
    }
    let mut out = Vec::new();
    for &(c, d) in e2 {
        let mut cursor = c;
        for &(a, b) in e1.iter().filter(|&&(a, b)| c <= a && b <= d) {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < d {
            out.push((cursor, d));
        }
    }
    Ok(out)
}

/// `|G_{E1}(z,c) − G_{E2}(z,c) − ∫_{E2∖E1} G_{E1}(z,x) ω_{E2}(dx,c)|` for `E1 ⊆ E2`.
pub fn koosis_check(e1: &CompactSet, e2: &CompactSet, pole: ExtPoint, z: Complex64) -> Result<f64> {
    let i1 = e1.intervals()?;
    let i2 = e2.intervals()?;
    let pieces = difference(&i1, &i2)?;
    if pieces.is_empty() {
        return Ok(0.0);
    }
    let g1 = build_green(e1, pole)?;
    let g2 = build_green(e2, pole)?;
    let lhs = g1.eval(z) - g2.eval(z);
    let symmetric = if z.im == 0.0 {
        Some(GreenModel::new(e1, ExtPoint::Finite(z.re))?)
    } else {
        None
    };
    let mut rhs = 0.0;
    let mut failure = None;
    for (a, b) in pieces {
        let (mid, hw) = (0.5 * (a + b), 0.5 * (b - a));
        rhs += integrate(
            |tau| {
                let x = mid - hw * (std::f64::consts::PI * tau).cos();
                let jac = hw * std::f64::consts::PI * (std::f64::consts::PI * tau).sin();
                let g = match &symmetric {
                    Some(m) => m.eval(Complex64::new(x, 0.0)),
                    None => match GreenModel::new(e1, ExtPoint::Finite(x)) {
                        Ok(m) => m.eval(z),
                        Err(e) => {
                            failure = Some(e);
                            0.0
                        }
                    },
                };
                g * g2.harmonic_density(x) * jac
            },
            0.0,
            1.0,
            1e-10,
        );
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> CompactSet {
        CompactSet::new(&[(-1.0, 1.0)]).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn single_interval_closed_forms() {
        let g = GreenModel::new(&unit(), ExtPoint::Infinity).unwrap();
        assert!((g.eval(re(2.0)) - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-12);
        assert!(g.eval(re(0.3)).abs() < 1e-12);
        let g = GreenModel::new(&unit(), ExtPoint::Finite(2.0)).unwrap();
        assert!((g.eval(re(3.0)) - (5.0 + 2.0 * 6f64.sqrt()).ln()).abs() < 1e-11);
        assert!(g.eval(re(2.0)).is_infinite());
    }

    #[test]
    fn symmetric_two_interval_critical_point() {
        let e = CompactSet::new(&[(-2.0, -1.0), (1.0, 2.0)]).unwrap();
        let g = GreenModel::new(&e, ExtPoint::Infinity).unwrap();
        assert_eq!(g.critical_points().len(), 1);
        assert!(g.critical_points()[0].finite().unwrap().abs() < 1e-12);
        assert!(g.max_period_residual() < 1e-10);
        assert!((g.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn arcsine_measures() {
        let g = GreenModel::new(&unit(), ExtPoint::Infinity).unwrap();
        assert!((g.harmonic_measure(0.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((g.harmonic_measure(-1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.harmonic_measure(0.5, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(g.harmonic_measure(0.5, 1.5).is_err());
    }

    #[test]
    fn green_sum_linearity() {
        let d = WeightedDivisor::new(vec![
            (ExtPoint::Finite(2.0), 0.5),
            (ExtPoint::Infinity, 0.5),
        ]);
        let v = green_sum(&unit(), &d, re(3.0)).unwrap();
        let want = 0.5 * (5.0 + 2.0 * 6f64.sqrt()).ln() + 0.5 * (3.0 + 8f64.sqrt()).ln();
        assert!((v - want).abs() < 1e-11);
        assert_eq!(
            green_sum(&unit(), &WeightedDivisor::default(), re(3.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn koosis_trivial_case() {
        assert_eq!(
            koosis_check(&unit(), &unit(), ExtPoint::Infinity, re(5.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn narrow_gap_rejected() {
        let e = CompactSet::new(&[(-1.0, 0.0), (1e-12, 1.0)]).unwrap();
        assert!(matches!(
            GreenModel::new(&e, ExtPoint::Infinity),
            Err(Error::Domain(_))
        ));
    }
}

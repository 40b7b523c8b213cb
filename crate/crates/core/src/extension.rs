//! The extension `E_F = F⁻¹([-1, 1])` of a set, its bands, and the Green
//! function identities that an extremal `F` satisfies on it.
//!
//! Everything is computed in the working frame of `F`, where the set is
//! bounded; harmonic measures and Green functions are conformally invariant,
//! so results transfer to the original line unchanged.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::geometry::{CompactSet, ExtPoint, Mobius, WeightedDivisor};
use crate::potential::{build_green, green_sum};
use crate::rational::RationalFn;
use crate::solver::local_extrema;

/// Relative imaginary part below which a `±1`-point counts as real.
pub const SNAP_TOL: f64 = 1e-6;
/// A near-real root pair whose real part satisfies `|F − shift|` below this is a double root.
pub const DOUBLE_TOL: f64 = 1e-8;
/// Split double roots are merged when `|F² − 1|` between them stays below this.
pub const MERGE_TOL: f64 = 1e-9;
/// Relative tolerance for comparing band ends with gap edges.
pub const CLASSIFY_TOL: f64 = 1e-8;
const MONOTONE_SAMPLES: usize = 64;

/// How the extension meets one gap of the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapTag {
    Unchanged,
    OneSided,
    Internal,
    Closed,
}

/// Closure of a connected component of `F⁻¹((−1, 1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub lo: ExtPoint,
    pub hi: ExtPoint,
    pub increasing: bool,
    /// `F′` keeps one sign at the sampled interior points.
    pub monotone: bool,
    #[serde(skip)]
    working: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapClass {
    pub left: ExtPoint,
    pub right: ExtPoint,
    pub tag: GapTag,
    /// The part of the extension inside the gap, if any.
    pub piece: Option<(ExtPoint, ExtPoint)>,
    /// More than one piece was found; the tag then follows the simplest case.
    pub ambiguous: bool,
}

/// Bands of `F⁻¹([-1, 1])` and the classification of every gap of the set.
#[derive(Debug, Clone, Serialize)]
pub struct BandSet {
    pub bands: Vec<Band>,
    pub gaps: Vec<GapClass>,
    /// `deg F`, to be compared with the number of bands.
    pub degree: usize,
    /// Sampled points of the set all lie in the extension.
    pub contains_set: bool,
    #[serde(skip)]
    frame: Mobius,
    #[serde(skip)]
    components: Vec<(f64, f64)>,
}

impl BandSet {
    pub fn all_monotone(&self) -> bool {
        self.bands.iter().all(|b| b.monotone)
    }

    /// Connected components of the extension in original coordinates.
    pub fn components(&self) -> Vec<(ExtPoint, ExtPoint)> {
        let inv = self.frame.inverse();
        self.components
            .iter()
            .map(|&(a, b)| {
                (
                    inv.apply(ExtPoint::Finite(a)),
                    inv.apply(ExtPoint::Finite(b)),
                )
            })
            .collect()
    }

    /// The extension as a compact set in original coordinates.
    pub fn extension_set(&self) -> Result<CompactSet> {
        CompactSet::from_arcs(&self.components())
    }

    fn working_set(&self) -> Result<CompactSet> {
        CompactSet::new(&self.components)
    }

    fn scale(&self) -> f64 {
        self.components
            .iter()
            .fold(1.0_f64, |m, &(a, b)| m.max(a.abs()).max(b.abs()))
    }

    fn in_extension(&self, w: f64) -> bool {
        let tol = CLASSIFY_TOL * self.scale();
        self.components
            .iter()
            .any(|&(a, b)| a - tol <= w && w <= b + tol)
    }
}

/// Poles of `F` with their attained orders, in working coordinates.
fn working_poles(f: &RationalFn, eps_pole: f64) -> Vec<(ExtPoint, u32)> {
    let ord = f.pole_orders(eps_pole);
    let b = f.basis();
    let mut out = vec![(ExtPoint::Infinity, ord.infinity)];
    out.extend(
        b.atoms
            .iter()
            .zip(&ord.finite)
            .map(|(a, &k)| (ExtPoint::Finite(a.c), k)),
    );
    out.retain(|&(_, k)| k > 0);
    out
}

fn working_intervals(f: &RationalFn, set: &CompactSet) -> Result<Vec<(f64, f64)>> {
    set.map(f.frame())?
        .bounded_intervals()
        .ok_or_else(|| Error::Argument("the set is unbounded in the working frame of F".into()))
}

/// A few Newton steps on `F − shift`, kept only if they improve the residual.
fn polish(f: &RationalFn, w: f64, shift: f64) -> f64 {
    let mut best = (w, (f.eval_working(w) - shift).abs());
    let mut x = w;
    for _ in 0..6 {
        let d = f.eval_working_derivative(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        x -= (f.eval_working(x) - shift) / d;
        let r = (f.eval_working(x) - shift).abs();
        if !(r < best.1) {
            break;
        }
        best = (x, r);
    }
    if (best.0 - w).abs() <= 1e-6 * w.abs().max(1.0) {
        best.0
    } else {
        w
    }
}

/// Computes the bands of `F⁻¹([-1, 1])` and classifies each gap of `set`.
pub fn n_extension(f: &RationalFn, set: &CompactSet, eps_pole: f64) -> Result<BandSet> {
    if f.is_constant() {
        return arg("a constant function has no bands");
    }
    if let Some(v) = f.value_at_working_infinity() {
        if v.abs() <= 1.0 {
            return arg("the extension reaches the point at infinity of the working frame");
        }
    }
    let intervals = working_intervals(f, set)?;
    let ord = f.pole_orders(eps_pole);
    let degree = f.degree(eps_pole);

    let mut pts = Vec::new();
    for shift in [1.0, -1.0] {
        let (roots, _) = f.working_roots(&ord, shift)?;
        for (i, &r) in roots.iter().enumerate() {
            let scale = r.norm().max(1.0);
            let double =
                r.im.abs() <= 1e-3 * scale && (f.eval_working(r.re) - shift).abs() <= DOUBLE_TOL;
            if r.im.abs() > SNAP_TOL * scale && !double {
                return Err(Error::Integrity(format!(
                    "F − {shift} has a non-real root {r}; F is not extremal"
                )));
            }
            let repeated = roots.iter().enumerate().any(|(j, q)| j != i && *q == r);
            pts.push(if repeated {
                r.re
            } else {
                polish(f, r.re, shift)
            });
        }
    }
    pts.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        if let Some(&q) = merged.last() {
            let close = p - q <= 1e-6 * q.abs().max(1.0);
            let v = f.eval_working(0.5 * (p + q));
            if p == q || (close && (v * v - 1.0).abs() <= MERGE_TOL) {
                let len = merged.len();
                merged[len - 1] = 0.5 * (p + q);
                continue;
            }
        }
        merged.push(p);
    }

    let mut bands = Vec::new();
    let inv = f.frame().inverse();
    for pair in merged.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = f.eval_working(0.5 * (a + b));
        if !(mid.abs() < 1.0) {
            continue;
        }
        let signs: Vec<f64> = (1..=MONOTONE_SAMPLES)
            .map(|k| {
                let t = k as f64 / (MONOTONE_SAMPLES + 1) as f64;
                f.eval_working_derivative(a + t * (b - a))
            })
            .collect();
        let monotone = signs.iter().all(|d| *d > 0.0) || signs.iter().all(|d| *d < 0.0);
        bands.push(Band {
            lo: inv.apply(ExtPoint::Finite(a)),
            hi: inv.apply(ExtPoint::Finite(b)),
            increasing: f.eval_working(b) > f.eval_working(a),
            monotone,
            working: (a, b),
        });
    }

    let mut components: Vec<(f64, f64)> = Vec::new();
    for b in &bands {
        match components.last_mut() {
            Some(last) if last.1 == b.working.0 => last.1 = b.working.1,
            _ => components.push(b.working),
        }
    }
    let mut out = BandSet {
        bands,
        gaps: Vec::new(),
        degree,
        contains_set: true,
        frame: *f.frame(),
        components,
    };
    out.contains_set = intervals
        .iter()
        .all(|&(a, b)| (0..=16).all(|k| out.in_extension(a + (b - a) * k as f64 / 16.0)));
    out.gaps = classify_gaps(&out, &intervals);
    Ok(out)
}

fn classify_gaps(bs: &BandSet, intervals: &[(f64, f64)]) -> Vec<GapClass> {
    let tol = CLASSIFY_TOL * bs.scale();
    let inv = bs.frame.inverse();
    let back = |w: f64| inv.apply(ExtPoint::Finite(w));
    let comps = &bs.components;
    let mut out = Vec::new();
    let k = intervals.len();
    for j in 0..k {
        let ga = intervals[j].1;
        let wrap = j + 1 == k;
        let gb = if wrap {
            intervals[0].0
        } else {
            intervals[j + 1].0
        };
        let touching = |e: f64| {
            comps
                .iter()
                .find(|c| c.0 <= e + tol && c.1 >= e - tol)
                .copied()
        };
        let left = touching(ga).filter(|c| c.1 > ga + tol);
        let right = touching(gb).filter(|c| c.0 < gb - tol);
        let internal: Vec<(f64, f64)> = comps
            .iter()
            .copied()
            .filter(|c| {
                if wrap {
                    c.0 > ga + tol || c.1 < gb - tol
                } else {
                    c.0 > ga + tol && c.1 < gb - tol
                }
            })
            .collect();
        let closed = !wrap && left.is_some_and(|c| c.1 >= gb - tol);
        let pieces = left.is_some() as usize + right.is_some() as usize + internal.len();
        let (tag, piece) = if closed {
            (GapTag::Closed, Some((ga, gb)))
        } else if let Some(c) = left {
            (GapTag::OneSided, Some((ga, c.1)))
        } else if let Some(c) = right {
            (GapTag::OneSided, Some((c.0, gb)))
        } else if let Some(&c) = internal.first() {
            (GapTag::Internal, Some(c))
        } else {
            (GapTag::Unchanged, None)
        };
        out.push(GapClass {
            left: back(ga),
            right: back(gb),
            tag,
            piece: piece.map(|(a, b)| (back(a), back(b))),
            ambiguous: !closed && pieces > 1,
        });
    }
    out
}

/// `Σ_c (F)_∞(c) ω_{E_F}(I, c)` for every band `I`; each equals one for extremal `F`.
pub fn band_measure_check(f: &RationalFn, bands: &BandSet, eps_pole: f64) -> Result<Vec<f64>> {
    let en = bands.working_set()?;
    let poles = working_poles(f, eps_pole);
    let models = poles
        .iter()
        .map(|&(c, k)| Ok((build_green(&en, c)?, k as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(bands
        .bands
        .iter()
        .map(|b| {
            models
                .iter()
                .map(|(m, k)| k * m.harmonic_measure_clipped(b.working.0, b.working.1))
                .sum()
        })
        .collect())
}

/// Deviations from `|F| = cosh(Σ_c (F)_∞(c) G_{E_F}(·, c))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepresentationReport {
    /// Largest `||F(x)| − cosh(Σ G)| / max(1, cosh Σ G)` over real samples outside `E_F`.
    pub real_deviation: f64,
    /// Largest relative excess of `|F(z)|` over `cosh(Σ G)` at non-real samples.
    pub complex_excess: f64,
    pub real_samples: usize,
    pub complex_samples: usize,
}

/// Compares `|F|` with the cosh of the weighted Green sum of the extension.
pub fn representation_check(
    f: &RationalFn,
    bands: &BandSet,
    points: &[Complex64],
    eps_pole: f64,
) -> Result<RepresentationReport> {
    let en = bands.working_set()?;
    let divisor = WeightedDivisor::new(
        working_poles(f, eps_pole)
            .into_iter()
            .map(|(c, k)| (c, k as f64))
            .collect(),
    );
    let mut rep = RepresentationReport {
        real_deviation: 0.0,
        complex_excess: 0.0,
        real_samples: 0,
        complex_samples: 0,
    };
    for &z in points {
        let fz = f.eval(z).norm();
        if !fz.is_finite() {
            continue;
        }
        let s = match f.frame().apply_complex(z) {
            Some(w) => {
                if w.im == 0.0 && bands.in_extension(w.re) {
                    continue;
                }
                green_sum(&en, &divisor, w)?
            }
            None => crate::potential::green_sum_ext(&en, &divisor, ExtPoint::Infinity)?,
        };
        let ch = s.cosh();
        if z.im == 0.0 {
            rep.real_samples += 1;
            rep.real_deviation = rep.real_deviation.max((fz - ch).abs() / ch.max(1.0));
        } else {
            rep.complex_samples += 1;
            rep.complex_excess = rep.complex_excess.max((fz - ch).max(0.0) / ch.max(1.0));
        }
    }
    Ok(rep)
}

/// Real points spread over the gaps of the extension, away from poles,
/// returned in original coordinates.
pub fn gap_samples(
    f: &RationalFn,
    bands: &BandSet,
    per_gap: usize,
    eps_pole: f64,
) -> Vec<Complex64> {
    let comps = &bands.components;
    let Some((&(lo, _), &(_, hi))) = comps.first().zip(comps.last()) else {
        return Vec::new();
    };
    let width = hi - lo;
    let poles: Vec<f64> = working_poles(f, eps_pole)
        .iter()
        .filter_map(|(c, _)| c.finite())
        .collect();
    let mut ws = Vec::new();
    for pair in comps.windows(2) {
        let (a, b) = (pair[0].1, pair[1].0);
        for k in 1..=per_gap {
            ws.push(a + (b - a) * k as f64 / (per_gap + 1) as f64);
        }
    }
    for k in 1..=per_gap {
        let d = width * 0.5 * k as f64;
        ws.push(lo - d);
        ws.push(hi + d);
    }
    let inv = bands.frame.inverse();
    ws.into_iter()
        .filter(|w| poles.iter().all(|c| (w - c).abs() > 1e-3 * width))
        .filter_map(|w| inv.apply_complex(Complex64::new(w, 0.0)))
        .collect()
}

/// Worst relative margins in `|F(z)|/‖F‖_E ≤ exp(Σ G)` and `≤ cosh(Σ G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinWalshReport {
    pub norm: f64,
    pub margin_exp: f64,
    pub margin_cosh: f64,
    pub samples: usize,
}

/// Checks both Bernstein–Walsh bounds for `F` relative to `set` at `points`.
pub fn bernstein_walsh_check(
    f: &RationalFn,
    set: &CompactSet,
    points: &[Complex64],
    eps_pole: f64,
) -> Result<BernsteinWalshReport> {
    let intervals = set
        .bounded_intervals()
        .ok_or_else(|| Error::Argument("the set must be bounded".into()))?;
    let g = |x: f64| f.eval_real(x);
    let norm = local_extrema(&intervals, &g, 64)
        .iter()
        .fold(0.0_f64, |m, e| m.max(e.value.abs()));
    if !(norm > 0.0) {
        return arg("F vanishes on the set");
    }
    let divisor = WeightedDivisor::from(&f.pole_divisor(eps_pole));
    let mut rep = BernsteinWalshReport {
        norm,
        margin_exp: f64::INFINITY,
        margin_cosh: f64::INFINITY,
        samples: 0,
    };
    for &z in points {
        let fz = f.eval(z).norm() / norm;
        if !fz.is_finite() {
            continue;
        }
        let s = green_sum(set, &divisor, z)?;
        let (e, c) = (s.exp(), s.cosh());
        rep.margin_exp = rep.margin_exp.min((e - fz) / e.max(1.0));
        rep.margin_cosh = rep.margin_cosh.min((c - fz) / c.max(1.0));
        rep.samples += 1;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::DEFAULT_EPS_POLE;
    use ExtPoint::Finite as F;

    fn unit() -> CompactSet {
        CompactSet::new(&[(-1.0, 1.0)]).unwrap()
    }

    fn t(n: usize) -> RationalFn {
        // T_n = Σ over the standard basis; build from monomials.
        let mut mono = vec![0.0; n + 1];
        let (mut a, mut b) = (vec![1.0], vec![0.0, 1.0]);
        for _ in 1..n {
            let mut c = vec![0.0; b.len() + 1];
            for (k, v) in b.iter().enumerate() {
                c[k + 1] += 2.0 * v;
            }
            for (k, v) in a.iter().enumerate() {
                c[k] -= v;
            }
            a = b;
            b = c;
        }
        let src = if n == 0 { a } else { b };
        mono[..src.len()].copy_from_slice(&src);
        RationalFn::from_partial_fractions(mono[0], &mono[1..], &[]).unwrap()
    }

    fn hand() -> RationalFn {
        RationalFn::from_partial_fractions(-2.0, &[], &[(2.0, vec![3.0])]).unwrap()
    }

    #[test]
    fn chebyshev_bands() {
        let bs = n_extension(&t(3), &unit(), DEFAULT_EPS_POLE).unwrap();
        assert_eq!(bs.bands.len(), 3);
        assert!(bs.all_monotone() && bs.contains_set);
        assert_eq!(bs.components().len(), 1);
        let (a, b) = bs.components()[0];
        assert!(
            (a.finite().unwrap() + 1.0).abs() < 1e-12 && (b.finite().unwrap() - 1.0).abs() < 1e-12
        );
        assert!(bs.gaps.iter().all(|g| g.tag == GapTag::Unchanged));
    }

    #[test]
    fn hand_example_identities() {
        let f = hand();
        let bs = n_extension(&f, &unit(), DEFAULT_EPS_POLE).unwrap();
        assert_eq!((bs.bands.len(), bs.degree), (1, 1));
        assert_eq!(bs.gaps[0].tag, GapTag::Unchanged);
        let sums = band_measure_check(&f, &bs, DEFAULT_EPS_POLE).unwrap();
        assert!((sums[0] - 1.0).abs() < 1e-9, "{sums:?}");
        let rep =
            representation_check(&f, &bs, &[Complex64::new(3.0, 0.0)], DEFAULT_EPS_POLE).unwrap();
        assert_eq!(rep.real_samples, 1);
        assert!(rep.real_deviation < 1e-8, "{rep:?}");
    }

    #[test]
    fn t2_band_sums() {
        let f = t(2);
        let bs = n_extension(&f, &unit(), DEFAULT_EPS_POLE).unwrap();
        let sums = band_measure_check(&f, &bs, DEFAULT_EPS_POLE).unwrap();
        assert_eq!(sums.len(), 2);
        for s in sums {
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bernstein_walsh_saturation() {
        let f = t(3);
        let z = [Complex64::new(2.0, 0.0)];
        let rep = bernstein_walsh_check(&f, &unit(), &z, DEFAULT_EPS_POLE).unwrap();
        assert!(rep.margin_cosh.abs() < 1e-9 && rep.margin_exp > 0.0);
        let rep = bernstein_walsh_check(&f.scaled(0.3), &unit(), &z, DEFAULT_EPS_POLE).unwrap();
        assert!(rep.margin_cosh.abs() < 1e-9, "scaling cancels in the ratio");
    }

    #[test]
    fn gap_tags() {
        let e = CompactSet::new(&[(-1.0, 0.0), (0.5, 0.7)]).unwrap();
        let bs = n_extension(&t(1), &e, DEFAULT_EPS_POLE).unwrap();
        assert_eq!(bs.gaps[0].tag, GapTag::Closed);
        assert_eq!(bs.gaps[1].tag, GapTag::OneSided);
        let (a, b) = bs.gaps[1].piece.unwrap();
        assert_eq!(a, F(0.7));
        assert!((b.finite().unwrap() - 1.0).abs() < 1e-14);
        let narrow = RationalFn::from_partial_fractions(-5.0, &[10.0], &[]).unwrap();
        let e = CompactSet::new(&[(-1.0, -0.9)]).unwrap();
        let bs = n_extension(&narrow, &e, DEFAULT_EPS_POLE).unwrap();
        assert_eq!(bs.gaps[0].tag, GapTag::Internal);
        assert!(!bs.contains_set);
    }
}

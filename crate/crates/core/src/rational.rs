//! Rational functions with poles restricted to a divisor, stored in an
//! orthonormal basis over a working coordinate.
//!
//! A [`RationalFn`] lives on the original extended line but is evaluated
//! through a Möbius `frame` into working coordinates `w`. The basis of
//! `L(D)` is built by rational Arnoldi on a grid over the set:
//!
//! * `v_0 = κ/q(w)` with `q(w) = Π ((c − w)/σ_c)^{D(c)}` over the finite
//!   atoms far from the set, which then need no chain of their own,
//! * a polynomial chain multiplying by `s = (w − center)/half_width`, of
//!   length `D(∞) + deg q`,
//! * one chain per remaining atom multiplying by `1/(c − w)`, of length `D(c)`.
//!
//! Each new vector is the operator applied to the last vector of its chain,
//! orthogonalized twice against all earlier ones and normalized on the grid.
//! Evaluation replays the recurrence. Laurent coefficients of every vector
//! at working infinity and at each atom are carried along for the pole
//! orders, leading coefficients and values at poles.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{CompactSet, ExtPoint, Mobius, PoleDivisor};
use crate::numerics::{
    bisect, chebyshev_interpolate, chebyshev_lobatto, chebyshev_points, chebyshev_roots, golden_max,
};

/// Value returned by complex evaluation at a pole.
pub const POLE_MARKER: Complex64 = Complex64::new(f64::INFINITY, 0.0);

/// Default relative threshold below which a top-order coefficient at a pole
/// counts as zero.
pub const DEFAULT_EPS_POLE: f64 = 1e-8;

/// Atoms at least this many half-widths from the hull centre join the weight.
const FAR_RATIO: f64 = 2.0;

/// `|F − shift|` minima below this (relative to `|shift|`) count as double roots.
const TOUCH_TOL: f64 = 1e-8;

/// Finite pole of the ambient divisor in working coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub c: f64,
    pub mult: u32,
    /// Carried by the weight `1/q` rather than by a chain.
    pub far: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    S,
    U(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct Step {
    op: Op,
    src: usize,
    h: Vec<f64>,
    norm: f64,
}

/// Laurent coefficients of every basis vector at one point, orders `lo..=hi`
/// in the local variable `σ` with `w = center + half_width·scale·σ` at
/// infinity and `w = c + scale·σ` at a finite atom.
#[derive(Debug, Clone, PartialEq)]
struct Expansion {
    lo: i32,
    hi: i32,
    scale: f64,
    coeffs: Vec<Vec<f64>>,
}

impl Expansion {
    fn at(&self, v: usize, k: i32) -> f64 {
        if k < self.lo || k > self.hi {
            0.0
        } else {
            self.coeffs[v][(k - self.lo) as usize]
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BasisSpec {
    poly_degree: u32,
    center: f64,
    half_width: f64,
    atoms: Vec<Atom>,
    grid: Vec<f64>,
}

/// Working-coordinate basis of `L(D)`, orthonormal on its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisSpec", into = "BasisSpec")]
pub struct Basis {
    pub poly_degree: u32,
    pub center: f64,
    pub half_width: f64,
    pub atoms: Vec<Atom>,
    grid: Vec<f64>,
    /// `v_0 = κ/q`, with `κ` a power of two so that constants are exact.
    kappa: f64,
    steps: Vec<Step>,
    /// Index 0 is working infinity, then one per atom.
    expansions: Vec<Expansion>,
}

impl From<Basis> for BasisSpec {
    fn from(b: Basis) -> Self {
        BasisSpec {
            poly_degree: b.poly_degree,
            center: b.center,
            half_width: b.half_width,
            atoms: b.atoms,
            grid: b.grid,
        }
    }
}

impl TryFrom<BasisSpec> for Basis {
    type Error = Error;
    fn try_from(s: BasisSpec) -> Result<Self> {
        Basis::build(s.poly_degree, s.center, s.half_width, s.atoms, s.grid)
    }
}

fn split_atoms(divisor: &PoleDivisor, center: f64, half_width: f64) -> Vec<Atom> {
    divisor
        .iter()
        .filter_map(|(c, m)| {
            c.finite().map(|c| Atom {
                c,
                mult: m,
                far: (c - center).abs() >= FAR_RATIO * half_width,
            })
        })
        .collect()
}

/// Truncated product of a Laurent array (orders `lo..=hi`) with the series
/// `b` supported on orders `blo..=bhi`.
fn series_mul(a: &[f64], lo: i32, b: &[(i32, f64)]) -> Vec<f64> {
    let hi = lo + a.len() as i32 - 1;
    (lo..=hi)
        .map(|k| {
            b.iter()
                .filter_map(|&(j, bj)| {
                    let i = k - j;
                    (lo..=hi).contains(&i).then(|| bj * a[(i - lo) as usize])
                })
                .sum()
        })
        .collect()
}

impl Basis {
    /// Basis on a grid over `[-1, 1]` with every atom on its own chain, for
    /// functions given in closed form.
    pub fn standard(divisor: &PoleDivisor) -> Self {
        let mut atoms = split_atoms(divisor, 0.0, 1.0);
        atoms.iter_mut().for_each(|a| a.far = false);
        let dim = divisor.degree() + 1;
        let grid: Vec<f64> = chebyshev_lobatto(-1.0, 1.0, 4 * dim + 32)
            .into_iter()
            .filter(|x| atoms.iter().all(|a| (x - a.c).abs() > 1e-3))
            .collect();
        Basis::build(divisor.get(ExtPoint::Infinity), 0.0, 1.0, atoms, grid)
            .expect("standard basis is regular")
    }

    /// Basis orthonormal on a Chebyshev grid over the bounded set.
    pub fn adapted(divisor: &PoleDivisor, set: &CompactSet) -> Result<Self> {
        let iv = set.intervals()?;
        let (lo, hi) = (iv[0].0, iv[iv.len() - 1].1);
        let center = 0.5 * (lo + hi);
        let half_width = 0.5 * (hi - lo);
        let atoms = split_atoms(divisor, center, half_width);
        let per = 2 * (divisor.degree() + 1) + 16;
        let grid = iv
            .iter()
            .flat_map(|&(a, b)| chebyshev_lobatto(a, b, per))
            .collect();
        Basis::build(
            divisor.get(ExtPoint::Infinity),
            center,
            half_width,
            atoms,
            grid,
        )
    }

    fn build(
        poly_degree: u32,
        center: f64,
        half_width: f64,
        atoms: Vec<Atom>,
        grid: Vec<f64>,
    ) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Numeric("degenerate working hull".into()));
        }
        let deg_q: u32 = atoms.iter().filter(|a| a.far).map(|a| a.mult).sum();
        let n_poly = (poly_degree + deg_q) as usize;
        let dim = 1 + poly_degree as usize + atoms.iter().map(|a| a.mult as usize).sum::<usize>();
        if grid.len() < dim {
            return Err(Error::Numeric("basis grid is too small".into()));
        }
        let mut b = Basis {
            poly_degree,
            center,
            half_width,
            atoms,
            grid,
            kappa: 1.0,
            steps: Vec::new(),
            expansions: Vec::new(),
        };
        let ng = b.grid.len() as f64;
        let q: Vec<f64> = b.grid.iter().map(|&w| 1.0 / b.weight(w)).collect();
        let nrm = (q.iter().map(|v| v * v).sum::<f64>() / ng).sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Numeric("basis weight vanishes on the grid".into()));
        }
        b.kappa = (1.0 / nrm).log2().round().exp2();
        let mut vecs: Vec<Vec<f64>> = vec![q.iter().map(|v| v * b.kappa).collect()];
        let v0_norm2 = vecs[0].iter().map(|v| v * v).sum::<f64>() / ng;
        b.init_expansions(n_poly);

        // Chains: `None` is the polynomial chain, `Some(i)` the chain of atom `i`.
        let mut chains: Vec<(Op, usize, usize)> = Vec::new();
        chains.push((Op::S, n_poly, 0));
        for (i, a) in b.atoms.iter().enumerate() {
            if !a.far {
                chains.push((Op::U(i), a.mult as usize, 0));
            }
        }
        let mut round = 0;
        while vecs.len() < dim {
            round += 1;
            for ch in chains.iter_mut() {
                if round > ch.1 {
                    continue;
                }
                let (op, src) = (ch.0, ch.2);
                let mut x: Vec<f64> = b
                    .grid
                    .iter()
                    .zip(&vecs[src])
                    .map(|(&w, v)| b.op_value(op, w) * v)
                    .collect();
                let mut h = vec![0.0; vecs.len()];
                for _ in 0..2 {
                    for (i, v) in vecs.iter().enumerate() {
                        let n2 = if i == 0 { v0_norm2 } else { 1.0 };
                        let hi = x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (ng * n2);
                        x.iter_mut().zip(v).for_each(|(a, b)| *a -= hi * b);
                        h[i] += hi;
                    }
                }
                let norm = (x.iter().map(|v| v * v).sum::<f64>() / ng).sqrt();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::Numeric("basis construction broke down".into()));
                }
                x.iter_mut().for_each(|v| *v /= norm);
                let step = Step { op, src, h, norm };
                b.extend_expansions(&step);
                b.steps.push(step);
                ch.2 = vecs.len();
                vecs.push(x);
            }
        }
        Ok(b)
    }

    /// Local scale at atom `i`: half the distance to the nearest other atom, at most the half-width.
    fn local_scale(&self, i: usize) -> f64 {
        let c = self.atoms[i].c;
        self.atoms
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, a)| 0.5 * (a.c - c).abs())
            .fold(self.half_width, f64::min)
    }

    /// Series of the operator in the local variable of expansion `p`.
    fn op_series(&self, op: Op, p: usize, len: usize) -> Vec<(i32, f64)> {
        let e = &self.expansions[p];
        let hw = self.half_width;
        match (op, p) {
            (Op::S, 0) => vec![(1, e.scale)],
            (Op::S, _) => {
                let c = self.atoms[p - 1].c;
                vec![(0, (c - self.center) / hw), (1, e.scale / hw)]
            }
            (Op::U(i), 0) => {
                let g = (self.atoms[i].c - self.center) / (hw * e.scale);
                let mut t = -1.0 / (hw * e.scale);
                (1..=len as i32)
                    .map(|j| {
                        let out = (-j, t);
                        t *= g;
                        out
                    })
                    .collect()
            }
            (Op::U(i), _) if i == p - 1 => vec![(-1, -1.0 / e.scale)],
            (Op::U(i), _) => {
                let d = self.atoms[i].c - self.atoms[p - 1].c;
                let r = e.scale / d;
                let mut t = 1.0 / d;
                (0..len as i32)
                    .map(|j| {
                        let out = (j, t);
                        t *= r;
                        out
                    })
                    .collect()
            }
        }
    }

    fn init_expansions(&mut self, n_poly: usize) {
        let scale_inf = self
            .atoms
            .iter()
            .map(|a| 2.0 * ((a.c - self.center) / self.half_width).abs())
            .fold(1.0, f64::max);
        self.expansions = vec![Expansion {
            lo: -(n_poly as i32) - 1,
            hi: self.poly_degree as i32,
            scale: scale_inf,
            coeffs: Vec::new(),
        }];
        for i in 0..self.atoms.len() {
            let m = self.atoms[i].mult as i32;
            self.expansions.push(Expansion {
                lo: -m,
                hi: m,
                scale: self.local_scale(i),
                coeffs: Vec::new(),
            });
        }
        for p in 0..self.expansions.len() {
            let (lo, hi) = (self.expansions[p].lo, self.expansions[p].hi);
            let len = (hi - lo + 1) as usize;
            let mut a = vec![0.0; len];
            a[(-lo) as usize] = self.kappa;
            for (i, at) in self.atoms.iter().enumerate() {
                if !at.far {
                    continue;
                }
                let sigma = (at.c - self.center).abs();
                let ser: Vec<(i32, f64)> = self
                    .op_series(Op::U(i), p, len)
                    .into_iter()
                    .map(|(j, v)| (j, v * sigma))
                    .collect();
                for _ in 0..at.mult {
                    a = series_mul(&a, lo, &ser);
                }
            }
            self.expansions[p].coeffs.push(a);
        }
    }

    fn extend_expansions(&mut self, step: &Step) {
        for p in 0..self.expansions.len() {
            let e = &self.expansions[p];
            let len = (e.hi - e.lo + 1) as usize;
            let ser = self.op_series(step.op, p, len);
            let e = &self.expansions[p];
            let mut a = series_mul(&e.coeffs[step.src], e.lo, &ser);
            for (i, hi) in step.h.iter().enumerate() {
                a.iter_mut()
                    .zip(&e.coeffs[i])
                    .for_each(|(x, y)| *x -= hi * y);
            }
            a.iter_mut().for_each(|x| *x /= step.norm);
            self.expansions[p].coeffs.push(a);
        }
    }

    /// `q(w)`, the product over far atoms.
    fn weight(&self, w: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.far)
            .map(|a| ((a.c - w) / (a.c - self.center).abs()).powi(a.mult as i32))
            .product()
    }

    fn op_value(&self, op: Op, w: f64) -> f64 {
        match op {
            Op::S => (w - self.center) / self.half_width,
            Op::U(i) => 1.0 / (self.atoms[i].c - w),
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.steps.len()
    }

    /// Working-coordinate divisor spanned by the basis.
    pub fn divisor(&self) -> PoleDivisor {
        let mut d = PoleDivisor::empty();
        d.add(ExtPoint::Infinity, self.poly_degree);
        for a in &self.atoms {
            d.add(ExtPoint::Finite(a.c), a.mult);
        }
        d
    }

    /// Basis values at a real working point off the poles.
    pub fn eval_real(&self, w: f64, out: &mut [f64]) {
        out[0] = self.kappa / self.weight(w);
        for (j, st) in self.steps.iter().enumerate() {
            let mut x = self.op_value(st.op, w) * out[st.src];
            for (h, v) in st.h.iter().zip(&out[..=j]) {
                x -= h * v;
            }
            out[j + 1] = x / st.norm;
        }
    }

    /// Derivatives of the basis functions with respect to `w`.
    pub fn eval_real_derivative(&self, w: f64, out: &mut [f64]) {
        let mut vals = vec![0.0; self.dim()];
        vals[0] = self.kappa / self.weight(w);
        let log_dq: f64 = self
            .atoms
            .iter()
            .filter(|a| a.far)
            .map(|a| a.mult as f64 / (a.c - w))
            .sum();
        out[0] = vals[0] * log_dq;
        for (j, st) in self.steps.iter().enumerate() {
            let (op, dop) = match st.op {
                Op::S => ((w - self.center) / self.half_width, 1.0 / self.half_width),
                Op::U(i) => {
                    let u = 1.0 / (self.atoms[i].c - w);
                    (u, u * u)
                }
            };
            let mut x = op * vals[st.src];
            let mut d = dop * vals[st.src] + op * out[st.src];
            for (i, h) in st.h.iter().enumerate() {
                x -= h * vals[i];
                d -= h * out[i];
            }
            vals[j + 1] = x / st.norm;
            out[j + 1] = d / st.norm;
        }
    }

    pub fn eval_complex(&self, w: Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.dim());
        let q: Complex64 = self
            .atoms
            .iter()
            .filter(|a| a.far)
            .map(|a| {
                ((Complex64::new(a.c, 0.0) - w) / (a.c - self.center).abs()).powi(a.mult as i32)
            })
            .product();
        out.push(q.inv() * self.kappa);
        for st in &self.steps {
            let op = match st.op {
                Op::S => (w - self.center) / self.half_width,
                Op::U(i) => (Complex64::new(self.atoms[i].c, 0.0) - w).inv(),
            };
            let mut x = op * out[st.src];
            for (h, v) in st.h.iter().zip(&out) {
                x -= v * *h;
            }
            out.push(x / st.norm);
        }
        out
    }

    /// Laurent coefficient of order `k` of `Σ coeffs_j v_j` at expansion `p`,
    /// with the sum of the magnitudes of its terms.
    fn laurent(&self, coeffs: &[f64], p: usize, k: i32) -> (f64, f64) {
        let e = &self.expansions[p];
        coeffs
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(s, m), (j, &a)| {
                let t = a * e.at(j, k);
                (s + t, m + t.abs())
            })
    }

    /// Highest order `k ≤ max` at expansion `p` whose coefficient survives cancellation.
    fn attained_order(&self, coeffs: &[f64], p: usize, max: u32, eps: f64) -> u32 {
        let sign = if p == 0 { 1 } else { -1 };
        (1..=max)
            .rev()
            .find(|&k| {
                let (v, m) = self.laurent(coeffs, p, sign * k as i32);
                v.abs() > eps * m
            })
            .unwrap_or(0)
    }

    /// Value at atom `i` when no pole is attained there, else `+∞`.
    fn value_at_atom(&self, coeffs: &[f64], i: usize) -> f64 {
        if self.attained_order(coeffs, i + 1, self.atoms[i].mult, DEFAULT_EPS_POLE) > 0 {
            f64::INFINITY
        } else {
            self.laurent(coeffs, i + 1, 0).0
        }
    }

    /// `Σ coeffs_i φ_i(w)` at a real working point; `+∞` at an active pole.
    pub fn combine(&self, coeffs: &[f64], w: f64) -> f64 {
        if let Some(i) = self.atoms.iter().position(|a| a.c == w) {
            return self.value_at_atom(coeffs, i);
        }
        let mut vals = vec![0.0; self.dim()];
        self.eval_real(w, &mut vals);
        vals.iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }

    /// Functional `a ↦ lim_{w→∞} F(w)/w^d` for `d = poly_degree`, or `F(∞)` when `d = 0`.
    pub fn leading_functional(&self) -> Vec<f64> {
        let e = &self.expansions[0];
        let d = self.poly_degree as i32;
        let unit = (self.half_width * e.scale).powi(d);
        (0..self.dim()).map(|j| e.at(j, d) / unit).collect()
    }

    /// Coefficients of `Σ a_j v_j` interpolating `f` on the grid in the least-squares sense.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let ng = self.grid.len() as f64;
        let mut acc = vec![0.0; self.dim()];
        let mut vals = vec![0.0; self.dim()];
        let mut v0_norm2 = 0.0;
        for &w in &self.grid {
            self.eval_real(w, &mut vals);
            let fw = f(w);
            v0_norm2 += vals[0] * vals[0] / ng;
            acc.iter_mut().zip(&vals).for_each(|(a, v)| *a += v * fw);
        }
        acc[0] /= v0_norm2;
        acc.into_iter().map(|a| a / ng).collect()
    }

    /// Coefficients of the constant function `1`.
    pub fn unit_coeffs(&self) -> Vec<f64> {
        if self.atoms.iter().all(|a| !a.far) {
            let mut out = vec![0.0; self.dim()];
            out[0] = 1.0 / self.kappa;
            return out;
        }
        self.project(|_| 1.0)
    }
}

/// Pole order actually attained at each atom of the ambient divisor.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleOrders {
    /// Order at working infinity.
    pub infinity: u32,
    /// Order at each finite working atom, aligned with `Basis::atoms`.
    pub finite: Vec<u32>,
}

/// Generalized zero divisor: real points with multiplicities plus any
/// non-real roots found numerically.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZeroDivisor {
    pub atoms: BTreeMap<ExtPoint, u32>,
    pub nonreal: Vec<Complex64>,
}

impl ZeroDivisor {
    pub fn degree(&self) -> usize {
        self.atoms.values().map(|&m| m as usize).sum::<usize>() + self.nonreal.len()
    }

    pub fn get(&self, x: ExtPoint) -> u32 {
        self.atoms.get(&x).copied().unwrap_or(0)
    }

    pub fn is_real(&self) -> bool {
        self.nonreal.is_empty()
    }

    pub fn is_simple(&self) -> bool {
        self.atoms.values().all(|&m| m == 1)
    }

    pub fn points(&self) -> Vec<ExtPoint> {
        self.atoms.keys().copied().collect()
    }
}

impl Serialize for ZeroDivisor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(ExtPoint, u32)> = self.atoms.iter().map(|(&c, &m)| (c, m)).collect();
        v.serialize(s)
    }
}

/// Element of `L(D)` on the extended real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalRepr", into = "RationalRepr")]
pub struct RationalFn {
    poles: PoleDivisor,
    frame: Mobius,
    basis: Basis,
    coeffs: Vec<f64>,
    numerator: Vec<f64>,
    denominator_roots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    poles: PoleDivisor,
    coeffs: Vec<f64>,
    numerator: Vec<f64>,
    denominator_roots: Vec<f64>,
    frame: Mobius,
    basis: Basis,
}

impl From<RationalFn> for RationalRepr {
    fn from(f: RationalFn) -> Self {
        RationalRepr {
            poles: f.poles,
            coeffs: f.coeffs,
            numerator: f.numerator,
            denominator_roots: f.denominator_roots,
            frame: f.frame,
            basis: f.basis,
        }
    }
}

impl TryFrom<RationalRepr> for RationalFn {
    type Error = Error;
    fn try_from(r: RationalRepr) -> Result<Self> {
        RationalFn::from_parts(r.poles, r.frame, r.basis, r.coeffs)
    }
}

impl RationalFn {
    /// Assembles a function from its frame, working basis and coefficients.
    pub fn from_parts(
        poles: PoleDivisor,
        frame: Mobius,
        basis: Basis,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::Argument(format!(
                "expected {} coefficients, got {}",
                basis.dim(),
                coeffs.len()
            )));
        }
        if poles.degree() + 1 != basis.dim() {
            return Err(Error::Argument(
                "basis does not match the pole divisor".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("non-finite coefficient".into()));
        }
        let mut f = RationalFn {
            poles,
            frame,
            basis,
            coeffs,
            numerator: Vec::new(),
            denominator_roots: Vec::new(),
        };
        f.refresh_cache();
        Ok(f)
    }

    /// `constant + Σ poly[k−1] z^k + Σ_c Σ_k b_{c,k} (c − z)^{−k}`.
    pub fn from_partial_fractions(
        constant: f64,
        poly: &[f64],
        atoms: &[(f64, Vec<f64>)],
    ) -> Result<Self> {
        let mut divisor = PoleDivisor::empty();
        divisor.add(ExtPoint::Infinity, poly.len() as u32);
        for (c, b) in atoms {
            if !c.is_finite() {
                return Err(Error::Argument("finite pole expected".into()));
            }
            divisor.add(ExtPoint::Finite(*c), b.len() as u32);
        }
        let basis = Basis::standard(&divisor);
        let f = |z: f64| {
            let poly = poly.iter().rev().fold(0.0, |acc, c| (acc + c) * z);
            let parts: f64 = atoms
                .iter()
                .map(|(c, b)| {
                    let u = 1.0 / (c - z);
                    b.iter().rev().fold(0.0, |acc, v| (acc + v) * u)
                })
                .sum();
            constant + poly + parts
        };
        let coeffs = basis.project(f);
        RationalFn::from_parts(divisor, Mobius::identity(), basis, coeffs)
    }

    /// Constant function viewed inside `L(D)`.
    pub fn constant(poles: &PoleDivisor, value: f64) -> Self {
        let basis = Basis::standard(poles);
        let coeffs = basis.unit_coeffs().iter().map(|u| u * value).collect();
        RationalFn::from_parts(poles.clone(), Mobius::identity(), basis, coeffs)
            .expect("constant is valid")
    }

    pub fn poles(&self) -> &PoleDivisor {
        &self.poles
    }

    pub fn frame(&self) -> &Mobius {
        &self.frame
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Monomial coefficients of `P = F · R_n` in original coordinates.
    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    /// Finite poles of the ambient divisor, with multiplicity.
    pub fn denominator_roots(&self) -> &[f64] {
        &self.denominator_roots
    }

    pub fn scaled(&self, s: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        RationalFn::from_parts(self.poles.clone(), self.frame, self.basis.clone(), coeffs)
            .expect("same shape")
    }

    /// `F + t`.
    pub fn shifted(&self, t: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (c, u) in coeffs.iter_mut().zip(self.basis.unit_coeffs()) {
            *c += t * u;
        }
        RationalFn::from_parts(self.poles.clone(), self.frame, self.basis.clone(), coeffs)
            .expect("same shape")
    }

    /// True when the coefficients are a multiple of those of `1`, up to rounding.
    pub fn is_constant(&self) -> bool {
        let unit = self.basis.unit_coeffs();
        let lambda = self.coeffs[0] / unit[0];
        let tol = 1e-14 * self.coefficient_scale();
        self.coeffs
            .iter()
            .zip(&unit)
            .all(|(c, u)| (c - lambda * u).abs() <= tol)
    }

    fn refresh_cache(&mut self) {
        self.denominator_roots = self
            .poles
            .iter()
            .filter_map(|(c, m)| c.finite().map(|c| std::iter::repeat_n(c, m as usize)))
            .flatten()
            .collect();
        let n = self.poles.degree();
        let samples = n + 1;
        let rho = 1.0;
        let mut acc = vec![0.0; samples];
        let nodes: Vec<(Complex64, f64)> = (0..samples)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / samples as f64;
                (Complex64::from_polar(rho, theta), theta)
            })
            .collect();
        for (z, theta) in &nodes {
            let mut p = self.eval(*z);
            for &c in &self.denominator_roots {
                p *= *z - c;
            }
            for (j, a) in acc.iter_mut().enumerate() {
                *a += (p * Complex64::from_polar(1.0, -(j as f64) * theta)).re;
            }
        }
        self.numerator = acc
            .iter()
            .enumerate()
            .map(|(j, a)| a / (samples as f64 * rho.powi(j as i32)))
            .collect();
    }

    /// Evaluates through the cached `P / R_n` form.
    pub fn eval_polynomial_form(&self, z: Complex64) -> Complex64 {
        let mut p = Complex64::new(0.0, 0.0);
        for &c in self.numerator.iter().rev() {
            p = p * z + c;
        }
        let mut r = Complex64::new(1.0, 0.0);
        for &c in &self.denominator_roots {
            r *= z - c;
        }
        if r == Complex64::new(0.0, 0.0) {
            return POLE_MARKER;
        }
        p / r
    }

    /// Working value at a real working point.
    pub fn eval_working(&self, w: f64) -> f64 {
        self.basis.combine(&self.coeffs, w)
    }

    /// Derivative with respect to the working coordinate.
    pub fn eval_working_derivative(&self, w: f64) -> f64 {
        let mut buf = vec![0.0; self.basis.dim()];
        self.basis.eval_real_derivative(w, &mut buf);
        buf.iter().zip(&self.coeffs).map(|(b, c)| b * c).sum()
    }

    fn eval_working_complex(&self, w: Complex64) -> Complex64 {
        if w.im == 0.0 {
            if let Some(i) = self.basis.atoms.iter().position(|a| a.c == w.re) {
                let v = self.basis.value_at_atom(&self.coeffs, i);
                return if v.is_finite() {
                    Complex64::new(v, 0.0)
                } else {
                    POLE_MARKER
                };
            }
        }
        let vals = self.basis.eval_complex(w);
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, c) in vals.iter().zip(&self.coeffs) {
            if *c == 0.0 {
                continue;
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return POLE_MARKER;
            }
            acc += v * *c;
        }
        acc
    }

    /// Value at working infinity; `None` if there is a pole there.
    pub fn value_at_working_infinity(&self) -> Option<f64> {
        let b = &self.basis;
        if b.attained_order(&self.coeffs, 0, b.poly_degree, DEFAULT_EPS_POLE) > 0 {
            return None;
        }
        Some(b.laurent(&self.coeffs, 0, 0).0)
    }

    /// Value at a complex point; [`POLE_MARKER`] at poles.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self.frame.apply_complex(z) {
            Some(w) => self.eval_working_complex(w),
            None => self
                .value_at_working_infinity()
                .map_or(POLE_MARKER, |v| Complex64::new(v, 0.0)),
        }
    }

    /// Value at a point of the extended line; `±∞` at poles.
    pub fn eval_ext(&self, x: ExtPoint) -> f64 {
        let w = match x {
            ExtPoint::Finite(v) => self.frame.apply(ExtPoint::Finite(v)),
            ExtPoint::Infinity => self.frame.apply(ExtPoint::Infinity),
        };
        match w {
            ExtPoint::Finite(w) => self.eval_working(w),
            ExtPoint::Infinity => self.value_at_working_infinity().unwrap_or(f64::INFINITY),
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval_ext(ExtPoint::Finite(x))
    }

    /// Derivative with respect to the original coordinate at a finite real point.
    pub fn derivative_real(&self, x: f64) -> f64 {
        let f = &self.frame;
        let den = f.c * x + f.d;
        let w = (f.a * x + f.b) / den;
        self.eval_working_derivative(w) * f.det() / (den * den)
    }

    /// Largest basis-coefficient magnitude.
    pub fn coefficient_scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Attained pole orders: at each pole, the largest order whose Laurent
    /// coefficient exceeds `eps_pole` times the sum of the magnitudes of the
    /// basis contributions to it.
    pub fn pole_orders(&self, eps_pole: f64) -> PoleOrders {
        let b = &self.basis;
        PoleOrders {
            infinity: b.attained_order(&self.coeffs, 0, b.poly_degree, eps_pole),
            finite: b
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| b.attained_order(&self.coeffs, i + 1, a.mult, eps_pole))
                .collect(),
        }
    }

    /// Pole divisor `(F)_∞` in original coordinates.
    pub fn pole_divisor(&self, eps_pole: f64) -> PoleDivisor {
        let ord = self.pole_orders(eps_pole);
        let inv = self.frame.inverse();
        let mut d = PoleDivisor::empty();
        d.add(inv.apply(ExtPoint::Infinity), ord.infinity);
        for (a, &k) in self.basis.atoms.iter().zip(&ord.finite) {
            d.add(inv.apply(ExtPoint::Finite(a.c)), k);
        }
        d
    }

    /// Degree of `F` as a rational map.
    pub fn degree(&self, eps_pole: f64) -> usize {
        self.pole_divisor(eps_pole).degree()
    }

    /// `lim_{x→x*} F(x) / r(x, x*)^d` with `r(z, c) = 1/(c − z)` and `r(z, ∞) = z`.
    pub fn leading_coeff(&self, x_star: ExtPoint, d: u32) -> Result<f64> {
        let ord = self.pole_orders(DEFAULT_EPS_POLE);
        let f = &self.frame;
        let b = &self.basis;
        let rho = || match x_star {
            ExtPoint::Finite(p) => (f.c * p + f.d).powi(2) / f.det(),
            ExtPoint::Infinity => f.c * f.c / f.det(),
        };
        match f.apply(x_star) {
            ExtPoint::Infinity => {
                if ord.infinity > d {
                    return domain(format!(
                        "pole order {} at {x_star} exceeds {d}",
                        ord.infinity
                    ));
                }
                if d == 0 {
                    return self
                        .value_at_working_infinity()
                        .ok_or_else(|| Error::Domain(format!("{x_star} is a pole")));
                }
                if d > b.poly_degree {
                    return Ok(0.0);
                }
                let scale = b.half_width * b.expansions[0].scale;
                let lead_w = b.laurent(&self.coeffs, 0, d as i32).0 / scale.powi(d as i32);
                let kappa = match x_star {
                    ExtPoint::Finite(p) => -(f.a * p + f.b) / f.c,
                    ExtPoint::Infinity => f.a / f.d,
                };
                Ok(kappa.powi(d as i32) * lead_w)
            }
            ExtPoint::Finite(ws) => {
                let pos = b.atoms.iter().position(|a| a.c == ws);
                let attained = pos.map_or(0, |j| ord.finite[j]);
                if attained > d {
                    return domain(format!("pole order {attained} at {x_star} exceeds {d}"));
                }
                if d == 0 {
                    return Ok(self.eval_working(ws));
                }
                let Some(j) = pos else { return Ok(0.0) };
                if b.atoms[j].mult < d {
                    return Ok(0.0);
                }
                let r = b.expansions[j + 1].scale;
                let lead_u = b.laurent(&self.coeffs, j + 1, -(d as i32)).0 * (-r).powi(d as i32);
                Ok(rho().powi(d as i32) * lead_u)
            }
        }
    }

    /// `(F − shift) · Π (w − c)^{ord_c}` at a real working point, evaluated
    /// without dividing by near poles so it stays finite there.
    pub fn working_numerator(&self, w: f64, ord: &PoleOrders, shift: f64) -> f64 {
        let b = &self.basis;
        let others = |skip: usize| -> f64 {
            b.atoms
                .iter()
                .zip(&ord.finite)
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, (a, &k))| (w - a.c).powi(k as i32))
                .product()
        };
        if let Some(j) = b.atoms.iter().position(|a| a.c == w) {
            let k = ord.finite[j];
            let lead = if k == 0 {
                b.laurent(&self.coeffs, j + 1, 0).0 - shift
            } else {
                b.laurent(&self.coeffs, j + 1, -(k as i32)).0
                    * b.expansions[j + 1].scale.powi(k as i32)
            };
            return lead * others(j);
        }
        (self.eval_working(w) - shift) * others(usize::MAX)
    }

    /// Real roots of `F − shift` from sign changes and tangential minima on a
    /// graded sampling of the working line, double roots listed twice. `None`
    /// unless they account for all `n_eff` roots, in which case the companion
    /// matrix must decide.
    fn scan_real_roots(&self, ord: &PoleOrders, shift: f64, n_eff: usize) -> Option<Vec<f64>> {
        if n_eff == 0 {
            return None;
        }
        if let Some(v) = self.value_at_working_infinity() {
            if (v - shift).abs() <= 1e-12 * self.coefficient_scale().max(shift.abs()) {
                return None;
            }
        }
        let b = &self.basis;
        let theta = |w: f64| ((w - b.center) / b.half_width).atan();
        let at = |t: f64| b.center + b.half_width * t.tan();
        let mut poles: Vec<f64> = b
            .atoms
            .iter()
            .map(|a| a.c)
            .zip(&ord.finite)
            .filter(|&(_, &k)| k > 0)
            .map(|(c, _)| theta(c))
            .collect();
        poles.sort_by(f64::total_cmp);
        let half = std::f64::consts::FRAC_PI_2;
        let m = (16 * (n_eff + 1) * (n_eff + 1)).clamp(4096, 300_000);
        let step = std::f64::consts::PI / m as f64;
        let mut ts: Vec<f64> = (1..m).map(|k| -half + step * k as f64).collect();
        ts.extend(
            chebyshev_points(16 * (n_eff + 1))
                .into_iter()
                .map(f64::atan),
        );
        for &p in poles.iter().chain(&[-half, half]) {
            let mut d = step;
            while d > 1e-15 {
                ts.push(p - d);
                ts.push(p + d);
                d *= 0.5;
            }
        }
        ts.retain(|t| t.abs() < half && poles.binary_search_by(|p| p.total_cmp(t)).is_err());
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let ws: Vec<f64> = ts.iter().map(|&t| at(t)).collect();
        let vs: Vec<f64> = ws.iter().map(|&w| self.eval_working(w) - shift).collect();
        let joined = |i: usize, j: usize| {
            let k = poles.partition_point(|p| *p < ts[i]);
            k == poles.len() || poles[k] > ts[j]
        };
        let g = |w: f64| self.eval_working(w) - shift;
        let mut roots = Vec::new();
        for i in 0..ws.len() - 1 {
            if vs[i] == 0.0 {
                roots.push(ws[i]);
            } else if vs[i] * vs[i + 1] < 0.0 && joined(i, i + 1) {
                roots.push(bisect(g, ws[i], ws[i + 1], 0.0).ok()?);
            }
        }
        let tol = TOUCH_TOL * shift.abs();
        for i in 1..ws.len() - 1 {
            let (l, c, r) = (vs[i - 1], vs[i], vs[i + 1]);
            let same = l * c > 0.0 && c * r > 0.0;
            if !same || c.abs() > l.abs() || c.abs() > r.abs() || !joined(i - 1, i + 1) {
                continue;
            }
            let sg = c.signum();
            let (lo, hi) = (ws[i - 1], ws[i + 1]);
            let dg = |w: f64| self.eval_working_derivative(w);
            let x = if dg(lo) * dg(hi) < 0.0 {
                bisect(dg, lo, hi, 0.0).ok()?
            } else {
                golden_max(|w| -sg * g(w), lo, hi, 0.0).0
            };
            let v = -sg * g(x);
            if v > 0.0 {
                roots.push(bisect(g, ws[i - 1], x, 0.0).ok()?);
                roots.push(bisect(g, x, ws[i + 1], 0.0).ok()?);
            } else if -v <= tol && tol > 0.0 {
                roots.push(x);
                roots.push(x);
            }
        }
        roots.sort_by(f64::total_cmp);
        (roots.len() == n_eff).then_some(roots)
    }

    /// Roots (working coordinates) of the numerator of `F − shift` for the
    /// attained pole orders, and the number of roots at working infinity.
    pub fn working_roots(&self, ord: &PoleOrders, shift: f64) -> Result<(Vec<Complex64>, usize)> {
        let n_eff = ord.infinity as usize + ord.finite.iter().map(|&k| k as usize).sum::<usize>();
        if let Some(real) = self.scan_real_roots(ord, shift, n_eff) {
            return Ok((
                real.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
                0,
            ));
        }
        let b = &self.basis;
        let pts = chebyshev_points(n_eff + 1);
        let vals: Vec<f64> = pts
            .iter()
            .map(|s| self.working_numerator(b.center + b.half_width * s, ord, shift))
            .collect();
        let mut cheb = chebyshev_interpolate(&vals);
        let scale = cheb.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return Err(Error::Domain("the zero function has no divisor".into()));
        }
        while cheb.len() > 1 && cheb[cheb.len() - 1].abs() <= 1e-11 * scale {
            cheb.pop();
        }
        let at_infinity = n_eff + 1 - cheb.len();
        let roots = chebyshev_roots(&cheb)?
            .into_iter()
            .map(|s| s * b.half_width + b.center)
            .collect();
        Ok((roots, at_infinity))
    }

    /// Generalized zero divisor `(F)_0 + D − (F)_∞` in original coordinates.
    pub fn generalized_zeros(&self, eps_pole: f64) -> Result<ZeroDivisor> {
        let ord = self.pole_orders(eps_pole);
        let (roots, at_inf) = self.working_roots(&ord, 0.0)?;
        let inv = self.frame.inverse();
        let mut out = ZeroDivisor::default();
        let mut add = |x: ExtPoint, m: u32| {
            if m > 0 {
                *out.atoms.entry(x).or_insert(0) += m;
            }
        };
        add(
            inv.apply(ExtPoint::Infinity),
            self.basis.poly_degree - ord.infinity + at_inf as u32,
        );
        for (a, &k) in self.basis.atoms.iter().zip(&ord.finite) {
            add(inv.apply(ExtPoint::Finite(a.c)), a.mult - k);
        }
        let mut real: Vec<(f64, bool)> = Vec::new();
        let mut nonreal = Vec::new();
        for r in roots {
            let tol = 1e-8 * r.norm().max(1.0);
            if r.im.abs() <= tol {
                real.push((r.re, r.im != 0.0));
            } else {
                nonreal.push(r);
            }
        }
        real.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut i = 0;
        while i < real.len() {
            let mut j = i + 1;
            while j < real.len() {
                let gap = real[j].0 - real[j - 1].0;
                let scale = real[j].0.abs().max(1.0);
                let paired = real[j].1 && real[j - 1].1 && gap <= 1e-7 * scale;
                if gap <= 1e-9 * scale || paired {
                    j += 1;
                } else {
                    break;
                }
            }
            let centre = real[i..j].iter().map(|r| r.0).sum::<f64>() / (j - i) as f64;
            add(inv.apply(ExtPoint::Finite(centre)), (j - i) as u32);
            i = j;
        }
        for z in nonreal {
            out.nonreal.push(match inv.apply_complex(z) {
                Some(v) => v,
                None => POLE_MARKER,
            });
        }
        Ok(out)
    }
}

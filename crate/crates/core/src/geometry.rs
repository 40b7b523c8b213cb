//! Subsets of the extended real line: points, interval unions, gaps, divisors
//! and orientation-preserving Möbius maps.
//!
//! Cyclic order on the extended line is decided by exact comparisons of
//! rotated coordinates, never by floating arithmetic on mapped points.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg, domain, Error, Result};

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtPoint {
    Finite(f64),
    Infinity,
}

impl ExtPoint {
    /// Builds a point from a float; `±inf` both map to the single point at infinity.
    pub fn new(x: f64) -> Result<Self> {
        if x.is_nan() {
            return arg("NaN is not a point of the extended real line");
        }
        Ok(if x.is_infinite() {
            ExtPoint::Infinity
        } else {
            ExtPoint::Finite(x)
        })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtPoint::Infinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtPoint::Finite(x) => Some(*x),
            ExtPoint::Infinity => None,
        }
    }

    /// Parses a decimal literal or one of `inf`, `+inf`, `-inf`, `infinity`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "inf" | "+inf" | "-inf" | "infinity" | "+infinity" | "-infinity" | "∞" => {
                Ok(ExtPoint::Infinity)
            }
            _ => {
                let x: f64 = t
                    .parse()
                    .map_err(|_| Error::Argument(format!("malformed number `{s}`")))?;
                ExtPoint::new(x)
            }
        }
    }
}

impl fmt::Display for ExtPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtPoint::Finite(x) => write!(f, "{x}"),
            ExtPoint::Infinity => write!(f, "inf"),
        }
    }
}

impl Eq for ExtPoint {}

impl Ord for ExtPoint {
    /// Linear order on the extended line cut open at infinity: finite values
    /// ascending, infinity last.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtPoint::Finite(a), ExtPoint::Finite(b)) => a.total_cmp(b),
            (ExtPoint::Finite(_), ExtPoint::Infinity) => Ordering::Less,
            (ExtPoint::Infinity, ExtPoint::Finite(_)) => Ordering::Greater,
            (ExtPoint::Infinity, ExtPoint::Infinity) => Ordering::Equal,
        }
    }
}

impl PartialOrd for ExtPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<f64> for ExtPoint {
    fn from(x: f64) -> Self {
        if x.is_infinite() {
            ExtPoint::Infinity
        } else {
            ExtPoint::Finite(x)
        }
    }
}

impl Serialize for ExtPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtPoint::Finite(x) => s.serialize_f64(*x),
            ExtPoint::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => ExtPoint::new(x).map_err(serde::de::Error::custom),
            Repr::Text(s) => ExtPoint::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Position of `x` when the circle is cut open at `anchor` and walked in the
/// positive direction. The anchor itself ranks first.
fn cyclic_rank(anchor: ExtPoint, x: ExtPoint) -> (u8, f64) {
    if x == anchor {
        return (0, 0.0);
    }
    match (anchor, x) {
        (ExtPoint::Infinity, ExtPoint::Finite(v)) => (1, v),
        (ExtPoint::Finite(a), ExtPoint::Finite(v)) if v > a => (1, v),
        (ExtPoint::Finite(_), ExtPoint::Infinity) => (2, 0.0),
        (ExtPoint::Finite(_), ExtPoint::Finite(v)) => (3, v),
        (ExtPoint::Infinity, ExtPoint::Infinity) => unreachable!(),
    }
}

fn rank_cmp(a: (u8, f64), b: (u8, f64)) -> Ordering {
    a.0.cmp(&b.0).then(a.1.total_cmp(&b.1))
}

/// `x ∈ (a, b)` in cyclic order.
pub fn in_cyclic_open(x: ExtPoint, a: ExtPoint, b: ExtPoint) -> bool {
    if x == a || x == b || a == b {
        return false;
    }
    rank_cmp(cyclic_rank(a, x), cyclic_rank(a, b)) == Ordering::Less
}

/// `x ∈ [a, b]` in cyclic order.
pub fn in_cyclic_closed(x: ExtPoint, a: ExtPoint, b: ExtPoint) -> bool {
    x == a || x == b || in_cyclic_open(x, a, b)
}

/// True iff the points are distinct and, walking the circle from the first
/// one, the remaining points are met in the listed order.
pub fn cyclically_ordered(points: &[ExtPoint]) -> Result<bool> {
    if points.len() < 3 {
        return arg("cyclic order needs at least three points");
    }
    for (i, p) in points.iter().enumerate() {
        if points[i + 1..].contains(p) {
            return Ok(false);
        }
    }
    let anchor = points[0];
    Ok(points[1..]
        .windows(2)
        .all(|w| rank_cmp(cyclic_rank(anchor, w[0]), cyclic_rank(anchor, w[1])) == Ordering::Less))
}

/// Orientation-preserving real Möbius map `z ↦ (a z + b) / (c z + d)`, `ad − bc > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return arg(format!("Möbius determinant must be positive, got {det}"));
        }
        Ok(Mobius { a, b, c, d })
    }

    pub fn identity() -> Self {
        Mobius {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    /// `z ↦ −1/(z − p)`: sends `p` to infinity and infinity to zero.
    pub fn inversion_at(p: f64) -> Self {
        Mobius {
            a: 0.0,
            b: -1.0,
            c: 1.0,
            d: -p,
        }
    }

    /// Increasing affine map `z ↦ s z + t`, `s > 0`.
    pub fn affine(s: f64, t: f64) -> Result<Self> {
        Mobius::new(s, t, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn is_affine(&self) -> bool {
        self.c == 0.0
    }

    pub fn apply(&self, x: ExtPoint) -> ExtPoint {
        match x {
            ExtPoint::Infinity => {
                if self.c == 0.0 {
                    ExtPoint::Infinity
                } else {
                    ExtPoint::Finite(self.a / self.c)
                }
            }
            ExtPoint::Finite(v) => {
                let den = self.c * v + self.d;
                if den == 0.0 {
                    ExtPoint::Infinity
                } else {
                    ExtPoint::from((self.a * v + self.b) / den)
                }
            }
        }
    }

    /// Image of a complex point; `None` stands for infinity.
    pub fn apply_complex(&self, z: Complex64) -> Option<Complex64> {
        let den = z * self.c + self.d;
        if den == Complex64::new(0.0, 0.0) {
            return None;
        }
        let w = (z * self.a + self.b) / den;
        if w.re.is_finite() && w.im.is_finite() {
            Some(w)
        } else {
            None
        }
    }

    /// Image of the point at infinity of the complex sphere.
    pub fn apply_infinity(&self) -> Option<Complex64> {
        if self.c == 0.0 {
            None
        } else {
            Some(Complex64::new(self.a / self.c, 0.0))
        }
    }

    pub fn inverse(&self) -> Self {
        Mobius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Self {
        Mobius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }
}

/// Closed arc of the extended line, traversed in the positive direction from
/// `start` to `end`.
pub type Arc = (ExtPoint, ExtPoint);

/// A gap: connected component of the complement of a compact set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub left: ExtPoint,
    pub right: ExtPoint,
    pub unbounded: bool,
}

impl Gap {
    pub fn contains(&self, x: ExtPoint) -> bool {
        in_cyclic_open(x, self.left, self.right)
    }
}

/// Finite union of disjoint closed arcs of positive length.
///
/// Bounded sets are the common case; a set may also contain the point at
/// infinity, in which case exactly one arc passes through it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSet {
    arcs: Vec<Arc>,
}

impl CompactSet {
    /// Bounded set from finite intervals `[a, b]`, `a < b`, listed in increasing order.
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self> {
        if intervals.is_empty() {
            return arg("a compact set needs at least one interval");
        }
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return arg(format!("interval {i} has a non-finite endpoint"));
            }
            if !(a < b) {
                return arg(format!("interval [{a}, {b}] must have a < b"));
            }
            if i > 0 && !(intervals[i - 1].1 < a) {
                return arg(format!(
                    "intervals must be disjoint and increasing: [{}, {}] then [{a}, {b}]",
                    intervals[i - 1].0,
                    intervals[i - 1].1
                ));
            }
        }
        Ok(CompactSet {
            arcs: intervals
                .iter()
                .map(|&(a, b)| (ExtPoint::Finite(a), ExtPoint::Finite(b)))
                .collect(),
        })
    }

    /// General constructor from positively oriented arcs in any order.
    pub fn from_arcs(arcs: &[Arc]) -> Result<Self> {
        if arcs.is_empty() {
            return arg("a compact set needs at least one arc");
        }
        let mut sorted = arcs.to_vec();
        sorted.sort_by(|x, y| {
            rank_cmp(
                cyclic_rank(ExtPoint::Infinity, x.0),
                cyclic_rank(ExtPoint::Infinity, y.0),
            )
        });
        if sorted.len() == 1 {
            if sorted[0].0 == sorted[0].1 {
                return arg("arcs must have positive length");
            }
        } else {
            let seq: Vec<ExtPoint> = sorted.iter().flat_map(|&(s, e)| [s, e]).collect();
            if !cyclically_ordered(&seq)? {
                return arg("arcs must be disjoint with positive length");
            }
        }
        Ok(CompactSet { arcs: sorted })
    }

    /// Parses `"[a1,b1];[a2,b2];..."`. Endpoints `-inf`/`inf` describe
    /// components through infinity.
    pub fn parse(literal: &str) -> Result<Self> {
        let mut finite = Vec::new();
        let mut left_tail: Option<ExtPoint> = None;
        let mut right_tail: Option<ExtPoint> = None;
        for piece in literal.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let inner = piece
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(']'))
                .ok_or_else(|| {
                    Error::Argument(format!("interval `{piece}` must look like [a,b]"))
                })?;
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 2 {
                return arg(format!("interval `{piece}` must have two endpoints"));
            }
            let lo = parts[0].trim().to_ascii_lowercase();
            let hi = parts[1].trim().to_ascii_lowercase();
            let lo_inf = lo.starts_with('-') && ExtPoint::parse(&lo)? == ExtPoint::Infinity;
            let hi_inf = !hi.starts_with('-') && ExtPoint::parse(&hi)? == ExtPoint::Infinity;
            match (lo_inf, hi_inf) {
                (true, true) => return arg("the whole real line is not a proper compact subset"),
                (true, false) => {
                    if left_tail.is_some() {
                        return arg("at most one interval may start at -inf");
                    }
                    left_tail = Some(ExtPoint::parse(&hi)?);
                }
                (false, true) => {
                    if right_tail.is_some() {
                        return arg("at most one interval may end at inf");
                    }
                    right_tail = Some(ExtPoint::parse(&lo)?);
                }
                (false, false) => {
                    let a = ExtPoint::parse(&lo)?
                        .finite()
                        .ok_or_else(|| Error::Argument(format!("bad endpoint in `{piece}`")))?;
                    let b = ExtPoint::parse(&hi)?
                        .finite()
                        .ok_or_else(|| Error::Argument(format!("bad endpoint in `{piece}`")))?;
                    finite.push((a, b));
                }
            }
        }
        if left_tail.is_none() && right_tail.is_none() {
            return CompactSet::new(&finite);
        }
        for &(a, b) in &finite {
            if !(a < b) {
                return arg(format!("interval [{a}, {b}] must have a < b"));
            }
        }
        let mut arcs: Vec<Arc> = finite
            .iter()
            .map(|&(a, b)| (ExtPoint::Finite(a), ExtPoint::Finite(b)))
            .collect();
        match (right_tail, left_tail) {
            (Some(s), Some(e)) => arcs.push((s, e)),
            (Some(s), None) => arcs.push((s, ExtPoint::Infinity)),
            (None, Some(e)) => arcs.push((ExtPoint::Infinity, e)),
            (None, None) => unreachable!(),
        }
        CompactSet::from_arcs(&arcs)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn num_components(&self) -> usize {
        self.arcs.len()
    }

    pub fn contains_infinity(&self) -> bool {
        self.contains(ExtPoint::Infinity)
    }

    /// Finite intervals in increasing order, or `None` if the set contains infinity.
    pub fn bounded_intervals(&self) -> Option<Vec<(f64, f64)>> {
        self.arcs
            .iter()
            .map(|&(s, e)| match (s, e) {
                (ExtPoint::Finite(a), ExtPoint::Finite(b)) if a < b => Some((a, b)),
                _ => None,
            })
            .collect()
    }

    /// Bounded intervals; errors for sets through infinity.
    pub fn intervals(&self) -> Result<Vec<(f64, f64)>> {
        self.bounded_intervals()
            .ok_or_else(|| Error::Argument("set contains infinity; normalize it first".into()))
    }

    /// Sorted endpoints of a bounded set.
    pub fn endpoints(&self) -> Result<Vec<f64>> {
        Ok(self
            .intervals()?
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect())
    }

    pub fn contains(&self, x: ExtPoint) -> bool {
        self.arcs.iter().any(|&(s, e)| in_cyclic_closed(x, s, e))
    }

    pub fn contains_real(&self, x: f64) -> bool {
        self.contains(ExtPoint::Finite(x))
    }

    /// Gaps in cyclic order; the gap after arc `i` comes `i`-th.
    pub fn gaps(&self) -> Vec<Gap> {
        let k = self.arcs.len();
        (0..k)
            .map(|i| {
                let left = self.arcs[i].1;
                let right = self.arcs[(i + 1) % k].0;
                Gap {
                    left,
                    right,
                    unbounded: in_cyclic_open(ExtPoint::Infinity, left, right),
                }
            })
            .collect()
    }

    /// The gap containing `x`.
    pub fn gap_of(&self, x: ExtPoint) -> Result<Gap> {
        if self.contains(x) {
            return domain(format!("{x} lies on the set"));
        }
        self.gaps()
            .into_iter()
            .find(|g| g.contains(x))
            .ok_or_else(|| Error::Domain(format!("{x} is in no gap")))
    }

    /// Index into [`CompactSet::gaps`] of the gap containing `x`.
    pub fn gap_index(&self, x: ExtPoint) -> Result<usize> {
        if self.contains(x) {
            return domain(format!("{x} lies on the set"));
        }
        self.gaps()
            .iter()
            .position(|g| g.contains(x))
            .ok_or_else(|| Error::Domain(format!("{x} is in no gap")))
    }

    pub fn map(&self, f: &Mobius) -> Result<Self> {
        let arcs: Vec<Arc> = self
            .arcs
            .iter()
            .map(|&(s, e)| (f.apply(s), f.apply(e)))
            .collect();
        CompactSet::from_arcs(&arcs)
    }

    /// Smallest interval containing a bounded set.
    pub fn hull(&self) -> Result<(f64, f64)> {
        let iv = self.intervals()?;
        Ok((iv[0].0, iv[iv.len() - 1].1))
    }

    /// Distance from a real point to a bounded set.
    pub fn distance(&self, x: f64) -> Result<f64> {
        Ok(self
            .intervals()?
            .iter()
            .map(|&(a, b)| {
                if x < a {
                    a - x
                } else if x > b {
                    x - b
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// Canonical literal form.
    pub fn to_literal(&self) -> String {
        let mut parts = Vec::new();
        for &(s, e) in &self.arcs {
            match (s, e) {
                (ExtPoint::Finite(a), ExtPoint::Finite(b)) if a < b => {
                    parts.push(format!("[{a},{b}]"))
                }
                (ExtPoint::Finite(a), ExtPoint::Finite(b)) => {
                    parts.push(format!("[-inf,{b}]"));
                    parts.push(format!("[{a},inf]"));
                }
                (ExtPoint::Finite(a), ExtPoint::Infinity) => parts.push(format!("[{a},inf]")),
                (ExtPoint::Infinity, ExtPoint::Finite(b)) => parts.push(format!("[-inf,{b}]")),
                _ => unreachable!("arcs have distinct endpoints"),
            }
        }
        parts.join(";")
    }
}

impl Serialize for CompactSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.arcs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CompactSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let arcs: Vec<Arc> = Vec::deserialize(d)?;
        CompactSet::from_arcs(&arcs).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for CompactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

/// Integral divisor with finite support: point ↦ positive multiplicity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PoleDivisor {
    atoms: BTreeMap<ExtPoint, u32>,
}

impl PoleDivisor {
    pub fn new(atoms: &[(ExtPoint, u32)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(c, m) in atoms {
            if let ExtPoint::Finite(v) = c {
                if !v.is_finite() {
                    return arg("divisor atoms must be finite or the point at infinity");
                }
            }
            if m == 0 {
                continue;
            }
            *map.entry(c).or_insert(0) += m;
        }
        Ok(PoleDivisor { atoms: map })
    }

    pub fn empty() -> Self {
        PoleDivisor::default()
    }

    /// Parses `"c1:m1,c2:m2"` with `c` a decimal or `inf`; the empty string is the zero divisor.
    pub fn parse(literal: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for piece in literal.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (c, m) = piece.rsplit_once(':').ok_or_else(|| {
                Error::Argument(format!("divisor atom `{piece}` must look like c:m"))
            })?;
            let point = ExtPoint::parse(c)?;
            let mult: u32 = m
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad multiplicity in `{piece}`")))?;
            if mult == 0 {
                return arg(format!("multiplicity must be positive in `{piece}`"));
            }
            atoms.push((point, mult));
        }
        PoleDivisor::new(&atoms)
    }

    pub fn to_literal(&self) -> String {
        self.atoms
            .iter()
            .map(|(c, m)| format!("{c}:{m}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn degree(&self) -> usize {
        self.atoms.values().map(|&m| m as usize).sum()
    }

    pub fn get(&self, x: ExtPoint) -> u32 {
        self.atoms.get(&x).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ExtPoint, u32)> + '_ {
        self.atoms.iter().map(|(&c, &m)| (c, m))
    }

    pub fn support(&self) -> Vec<ExtPoint> {
        self.atoms.keys().copied().collect()
    }

    pub fn add(&mut self, x: ExtPoint, m: u32) {
        if m > 0 {
            *self.atoms.entry(x).or_insert(0) += m;
        }
    }

    /// Pushforward `f_* D = D ∘ f⁻¹`.
    pub fn pushforward(&self, f: &Mobius) -> Self {
        let mut out = PoleDivisor::empty();
        for (c, m) in self.iter() {
            out.add(f.apply(c), m);
        }
        out
    }

    /// Checks every atom lies off `set`.
    pub fn check_off(&self, set: &CompactSet) -> Result<()> {
        for c in self.atoms.keys() {
            if set.contains(*c) {
                return domain(format!("pole {c} lies on the set"));
            }
        }
        Ok(())
    }

    /// `D ≤ other` pointwise.
    pub fn le(&self, other: &PoleDivisor) -> bool {
        self.iter().all(|(c, m)| m <= other.get(c))
    }
}

impl fmt::Display for PoleDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl Serialize for PoleDivisor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(ExtPoint, u32)> = self.iter().collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PoleDivisor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<(ExtPoint, u32)> = Vec::deserialize(d)?;
        PoleDivisor::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Atomic measure or divisor with real weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedDivisor {
    pub atoms: Vec<(ExtPoint, f64)>,
}

impl WeightedDivisor {
    pub fn new(atoms: Vec<(ExtPoint, f64)>) -> Self {
        WeightedDivisor { atoms }
    }

    /// Parses `"c1:w1,c2:w2"`.
    pub fn parse(literal: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for piece in literal.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (c, w) = piece
                .rsplit_once(':')
                .ok_or_else(|| Error::Argument(format!("atom `{piece}` must look like c:w")))?;
            let weight: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad weight in `{piece}`")))?;
            if !weight.is_finite() {
                return arg(format!("weight in `{piece}` must be finite"));
            }
            atoms.push((ExtPoint::parse(c)?, weight));
        }
        Ok(WeightedDivisor { atoms })
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

impl From<&PoleDivisor> for WeightedDivisor {
    fn from(d: &PoleDivisor) -> Self {
        WeightedDivisor {
            atoms: d.iter().map(|(c, m)| (c, m as f64)).collect(),
        }
    }
}

/// `S(x) = Σ_{c ≠ x*} D(c) · [x ∈ [x*, c)]`, the signed pole count between
/// the reference point and `x`.
pub fn sign_function(d: &PoleDivisor, x_star: ExtPoint, x: ExtPoint) -> Result<i64> {
    if x == x_star {
        return domain("sign function is undefined at the reference point");
    }
    if d.get(x) > 0 {
        return domain(format!("sign function is undefined at the pole {x}"));
    }
    Ok(d.iter()
        .filter(|&(c, _)| c != x_star)
        .filter(|&(c, _)| in_cyclic_open(x, x_star, c))
        .map(|(_, m)| m as i64)
        .sum())
}

/// Problem data moved to the frame where the reference point is infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    /// Map from original to normalized coordinates.
    pub map: Mobius,
    pub set: CompactSet,
    pub divisor: PoleDivisor,
    pub x_star: ExtPoint,
}

/// Sends `x_star` to infinity and rescales so the image of `set` spans `[-1, 1]`.
pub fn normalize_problem(
    set: &CompactSet,
    divisor: &PoleDivisor,
    x_star: ExtPoint,
) -> Result<Normalized> {
    if set.contains(x_star) {
        return domain(format!("reference point {x_star} lies on the set"));
    }
    divisor.check_off(set)?;
    let inv = match x_star {
        ExtPoint::Infinity => Mobius::identity(),
        ExtPoint::Finite(p) => Mobius::inversion_at(p),
    };
    let image = set.map(&inv)?;
    let (lo, hi) = image.hull()?;
    let scale = 2.0 / (hi - lo);
    let shift = -(lo + hi) / (hi - lo);
    let affine = if scale == 1.0 && shift == 0.0 {
        Mobius::identity()
    } else {
        Mobius::affine(scale, shift)?
    };
    let map = affine.compose(&inv);
    let set_n = set.map(&map)?;
    Ok(Normalized {
        map,
        set: set_n,
        divisor: divisor.pushforward(&map),
        x_star: map.apply(x_star),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExtPoint::{Finite as F, Infinity as Inf};

    #[test]
    fn cyclic_order_examples() {
        assert!(cyclically_ordered(&[Inf, F(-1.0), F(0.0), F(1.0)]).unwrap());
        assert!(cyclically_ordered(&[F(2.0), F(3.0), Inf, F(-1.0), F(1.0)]).unwrap());
        assert!(!cyclically_ordered(&[F(0.0), F(2.0), F(1.0)]).unwrap());
        assert!(!cyclically_ordered(&[F(0.0), F(1.0), F(0.0)]).unwrap());
        assert!(matches!(
            cyclically_ordered(&[F(0.0), F(1.0)]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn gap_lookup() {
        let e = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
        let g = e.gap_of(F(3.0)).unwrap();
        assert_eq!((g.left, g.right, g.unbounded), (F(1.0), F(-1.0), true));

        let e2 = CompactSet::new(&[(-2.0, -1.0), (0.0, 1.0)]).unwrap();
        let g = e2.gap_of(F(-0.5)).unwrap();
        assert_eq!((g.left, g.right, g.unbounded), (F(-1.0), F(0.0), false));
        let g = e2.gap_of(Inf).unwrap();
        assert_eq!((g.left, g.right), (F(1.0), F(-2.0)));
        assert!(matches!(e2.gap_of(F(0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn sign_function_examples() {
        let d = PoleDivisor::new(&[(F(2.0), 1)]).unwrap();
        assert_eq!(sign_function(&d, F(2.0), F(0.0)).unwrap(), 0);
        assert_eq!(sign_function(&d, Inf, F(0.0)).unwrap(), 1);
        let t = PoleDivisor::new(&[(Inf, 3)]).unwrap();
        assert_eq!(sign_function(&t, Inf, F(0.5)).unwrap(), 0);
        assert!(sign_function(&d, Inf, F(2.0)).is_err());
    }

    #[test]
    fn normalization_examples() {
        let e = CompactSet::new(&[(-1.0, 1.0)]).unwrap();
        let t3 = PoleDivisor::new(&[(Inf, 3)]).unwrap();
        let n = normalize_problem(&e, &t3, Inf).unwrap();
        assert_eq!(n.map, Mobius::identity());
        assert_eq!(n.set, e);
        assert_eq!(n.divisor, t3);

        // the inversion part alone sends [-1, 1] to [1/3, 1]
        let inv = Mobius::inversion_at(2.0);
        assert!((inv.apply(F(-1.0)).finite().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(inv.apply(F(1.0)), F(1.0));

        let d = PoleDivisor::new(&[(F(2.0), 1)]).unwrap();
        let n = normalize_problem(&e, &d, F(2.0)).unwrap();
        assert_eq!(n.map.apply(F(2.0)), Inf);
        assert_eq!(n.x_star, Inf);
        assert_eq!(n.divisor, PoleDivisor::new(&[(Inf, 1)]).unwrap());
        assert_eq!(n.set.intervals().unwrap().len(), 1);

        let e2 = CompactSet::new(&[(0.0, 1.0), (2.0, 3.0)]).unwrap();
        let d2 = PoleDivisor::new(&[(F(1.5), 2)]).unwrap();
        let n = normalize_problem(&e2, &d2, F(1.5)).unwrap();
        assert_eq!(n.divisor, PoleDivisor::new(&[(Inf, 2)]).unwrap());
        let iv = n.set.intervals().unwrap();
        assert_eq!(iv.len(), 2);
        assert!((iv[0].0 + 1.0).abs() < 1e-14 && (iv[1].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn literals() {
        let e = CompactSet::parse("[-2,-1]; [0,1]").unwrap();
        assert_eq!(e.intervals().unwrap(), vec![(-2.0, -1.0), (0.0, 1.0)]);
        assert!(CompactSet::parse("[1,-1]").is_err());
        assert!(CompactSet::parse("[0,2];[1,3]").is_err());
        let w = CompactSet::parse("[-inf,-2];[2,inf]").unwrap();
        assert!(w.contains_infinity());
        assert!(!w.contains_real(0.0));
        assert!(w.contains_real(5.0));
        assert_eq!(w.gaps().len(), 1);
        assert_eq!(CompactSet::parse(&w.to_literal()).unwrap(), w);

        let d = PoleDivisor::parse("2:1, inf:3").unwrap();
        assert_eq!(d.degree(), 4);
        assert_eq!(d.get(Inf), 3);
        assert_eq!(PoleDivisor::parse(&d.to_literal()).unwrap(), d);
        assert!(PoleDivisor::parse("2:0").is_err());
        assert!(PoleDivisor::parse("2").is_err());
    }

    #[test]
    fn mobius_inverse_roundtrip() {
        let f = Mobius::new(2.0, 1.0, 0.5, 3.0).unwrap();
        for x in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            let y = f.apply(F(x));
            let back = f.inverse().apply(y).finite().unwrap();
            assert!((back - x).abs() < 1e-12);
        }
        assert!(Mobius::new(1.0, 0.0, 0.0, -1.0).is_err());
    }
}

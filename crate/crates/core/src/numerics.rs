//! Small numerical kernels shared by the rational, potential and solver layers.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

const MAX_PANELS: usize = 20_000;

/// Panel sum and the matching sum of `|f|`, which bounds rounding in the former.
fn gl_panel<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let (x, w) = gl20();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = Complex64::new(0.0, 0.0);
    let mut m = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let v = f(mid + half * xi);
        s += v * *wi;
        m += v.norm() * wi;
    }
    (s * half, m * half.abs())
}

/// Adaptive Gauss–Legendre quadrature of a complex integrand over `[a, b]`.
///
/// A panel is accepted when halving changes it by less than `tol` in absolute
/// terms or by a few ulps of the integrand's mass on it; depth and panel count
/// are capped.
pub fn integrate_complex<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex64 {
    fn rec<F: FnMut(f64) -> Complex64>(
        f: &mut F,
        a: f64,
        b: f64,
        whole: Complex64,
        tol: f64,
        depth: u32,
        budget: &mut usize,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let (left, ml) = gl_panel(f, a, m);
        let (right, mr) = gl_panel(f, m, b);
        *budget = budget.saturating_sub(2);
        let sum = left + right;
        let err = (sum - whole).norm();
        if depth >= 50 || *budget == 0 || err <= tol || err <= 32.0 * f64::EPSILON * (ml + mr) {
            return sum;
        }
        rec(f, a, m, left, tol, depth + 1, budget) + rec(f, m, b, right, tol, depth + 1, budget)
    }
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let (whole, _) = gl_panel(&mut f, a, b);
    let mut budget = MAX_PANELS;
    rec(&mut f, a, b, whole, tol, 0, &mut budget)
}

/// Adaptive Gauss–Legendre quadrature of a real integrand.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, tol).re
}

/// First-kind Chebyshev points `cos((j + ½)π / n)`, descending.
pub fn chebyshev_points(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| ((j as f64 + 0.5) * std::f64::consts::PI / n as f64).cos())
        .collect()
}

/// Chebyshev extreme points mapped to `[a, b]`, ascending, endpoints included.
pub fn chebyshev_lobatto(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|j| {
            let t = -(std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

/// Chebyshev coefficients of the interpolant through values at [`chebyshev_points`].
pub fn chebyshev_interpolate(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    v * (k as f64 * (j as f64 + 0.5) * std::f64::consts::PI / n as f64).cos()
                })
                .sum();
            if k == 0 {
                s / n as f64
            } else {
                2.0 * s / n as f64
            }
        })
        .collect()
}

/// Clenshaw evaluation of `Σ c_k T_k(x)`.
pub fn chebyshev_eval(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Clenshaw evaluation at a complex argument.
pub fn chebyshev_eval_complex(coeffs: &[f64], x: Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let (mut b1, mut b2) = (zero, zero);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = x * b1 * 2.0 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + coeffs.first().copied().unwrap_or(0.0)
}

/// Chebyshev coefficients of the monomial series `Σ a_k x^k`.
pub fn monomial_to_chebyshev(mono: &[f64]) -> Vec<f64> {
    // x^k in Chebyshev form, built by repeated multiplication by x
    let n = mono.len();
    let mut out = vec![0.0; n.max(1)];
    let mut power = vec![1.0];
    for (k, &a) in mono.iter().enumerate() {
        if k > 0 {
            let mut next = vec![0.0; power.len() + 1];
            for (j, &p) in power.iter().enumerate() {
                if j == 0 {
                    next[1] += p;
                } else {
                    next[j + 1] += 0.5 * p;
                    next[j - 1] += 0.5 * p;
                }
            }
            power = next;
        }
        for (j, &p) in power.iter().enumerate() {
            out[j] += a * p;
        }
    }
    out
}

/// Parlett–Reinsch diagonal balancing, in place.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a real square matrix after balancing.
pub fn eigenvalues(mut m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    balance(&mut m);
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("eigenvalue iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Roots of `Σ c_k T_k(x)` via the balanced colleague matrix. Trailing zero
/// coefficients must be trimmed by the caller.
pub fn chebyshev_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    if lead == 0.0 {
        return Err(Error::Numeric(
            "leading Chebyshev coefficient is zero".into(),
        ));
    }
    if n == 1 {
        return Ok(vec![Complex64::new(-coeffs[0] / lead, 0.0)]);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    m[(0, 1)] = 1.0;
    for k in 1..n - 1 {
        m[(k, k - 1)] = 0.5;
        m[(k, k + 1)] = 0.5;
    }
    m[(n - 1, n - 2)] += 0.5;
    for j in 0..n {
        m[(n - 1, j)] -= coeffs[j] / (2.0 * lead);
    }
    eigenvalues(m)
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while b - a > tol && iter < 200 {
        iter += 1;
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numeric(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Forces a `-0.0` imaginary part to `+0.0` so principal square roots of
/// negative reals land on `+i`.
pub fn upper(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

/// Principal square root with the `+0.0` convention on the negative axis.
pub fn csqrt(z: Complex64) -> Complex64 {
    upper(z).sqrt()
}

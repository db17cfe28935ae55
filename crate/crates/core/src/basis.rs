//! Shifted Legendre polynomials on `[0, 1]`, Gauss-Legendre rules and the
//! superconvergence point sets of the DG method.
//!
//! The shifted polynomial of degree `j` is `P_j(s) = L_j(2s - 1)` where `L_j`
//! is the classical Legendre polynomial on `[-1, 1]`, so that
//! `P_j(1) = 1` and `∫_0^1 P_i P_j ds = δ_ij / (2j + 1)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest basis order supported by the solvers.
pub const MAX_ORDER: usize = 8;

/// Largest Gauss rule that [`gauss_rule`] will build.
pub const MAX_QUAD_POINTS: usize = 64;

const NEWTON_MAX_ITER: usize = 100;
const ROOT_TOL: f64 = 1e-14;

/// Classical Legendre `L_j(x)` and `L'_j(x)` on `[-1, 1]`.
fn legendre_pair(j: usize, x: f64) -> (f64, f64) {
    if j == 0 {
        return (1.0, 0.0);
    }
    // L_{k+1} = ((2k+1) x L_k - k L_{k-1}) / (k+1)
    // L'_{k+1} = L'_{k-1} + (2k+1) L_k
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..j {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// `P_j(s)` by the forward three-term recurrence.
pub fn legendre_eval(j: usize, s: f64) -> f64 {
    legendre_pair(j, 2.0 * s - 1.0).0
}

/// `P'_j(s)`, the derivative with respect to `s` (twice the derivative of
/// the unshifted polynomial).
pub fn legendre_deriv(j: usize, s: f64) -> f64 {
    2.0 * legendre_pair(j, 2.0 * s - 1.0).1
}

/// Values `P_0(s), ..., P_{m-1}(s)`.
pub fn legendre_values(m: usize, s: f64) -> Vec<f64> {
    let x = 2.0 * s - 1.0;
    let mut out = Vec::with_capacity(m);
    if m == 0 {
        return out;
    }
    out.push(1.0);
    if m == 1 {
        return out;
    }
    out.push(x);
    for k in 1..m - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// A quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_0^1 f(s) ds` under this rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }

    /// `∫_a^b f(t) dt` under the affinely mapped rule.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let len = b - a;
        len * self.integrate(|s| f(a + s * len))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre rule with `q` nodes on `[0, 1]`, nodes in increasing order.
///
/// Nodes are Newton-polished roots of `L_q` started from the usual
/// `cos(π(i + 3/4)/(q + 1/2))` guesses.
pub fn gauss_rule(q: usize) -> Result<QuadRule> {
    if !(1..=MAX_QUAD_POINTS).contains(&q) {
        return Err(Error::invalid(format!(
            "gauss_rule: node count {q} outside 1..={MAX_QUAD_POINTS}"
        )));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let half = q.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_pair(q, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                converged = true;
                break;
            }
        }
        if !converged && legendre_pair(q, x).0.abs() > 1e-13 {
            return Err(Error::NoConvergence {
                degree: q,
                index: i,
                iterations: NEWTON_MAX_ITER,
            });
        }
        if q % 2 == 1 && i == half - 1 {
            x = 0.0;
        }
        let dp = legendre_pair(q, x).1;
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; mirror into both halves
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[q - 1 - i] = w;
        weights[i] = w;
    }
    Ok(QuadRule { nodes, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(m: usize) -> Self {
        if m % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

/// Local points where the DG error gains one order.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperconvPoints {
    pub m: usize,
    pub parity: Parity,
    pub points: Vec<f64>,
}

impl SuperconvPoints {
    /// Degree `d` of the Legendre polynomial whose derivative vanishes at the
    /// points: `m + 1` for odd `m`, `m` for even `m`.
    pub fn target_degree(&self) -> usize {
        match self.parity {
            Parity::Odd => self.m + 1,
            Parity::Even => self.m,
        }
    }
}

/// Interior zeros of `L'_k` on `(-1, 1)`, ascending.
///
/// The zeros interlace with the roots of `L_k`, so each one is bracketed by a
/// pair of consecutive Gauss nodes; Newton on `L'_k` with `L''_k` taken from
/// the Legendre ODE, falling back to bisection when a step leaves the bracket.
fn derivative_zeros(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Ok(Vec::new());
    }
    let gauss = gauss_rule(k)?;
    let roots: Vec<f64> = gauss.nodes.iter().map(|&s| 2.0 * s - 1.0).collect();
    let kk = (k * (k + 1)) as f64;
    let mut zeros = Vec::with_capacity(k - 1);
    for (idx, pair) in roots.windows(2).enumerate() {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let f_lo = legendre_pair(k, lo).1;
        let mut x = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_pair(k, x);
            if dp == 0.0 {
                converged = true;
                break;
            }
            if dp.signum() == f_lo.signum() {
                lo = x;
            } else {
                hi = x;
            }
            let d2p = (2.0 * x * dp - kk * p) / (1.0 - x * x);
            let mut next = x - dp / d2p;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step < ROOT_TOL * 0.1 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                degree: k,
                index: idx,
                iterations: NEWTON_MAX_ITER,
            });
        }
        zeros.push(x);
    }
    Ok(zeros)
}

/// Superconvergence points for basis order `m`: zeros of `P'_{m+1}` for odd
/// `m` (m points) and of `P'_m` for even `m` (m - 1 points).
pub fn superconv_points(m: usize) -> Result<SuperconvPoints> {
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(Error::invalid(format!(
            "superconv_points: order {m} outside 1..={MAX_ORDER}"
        )));
    }
    let parity = Parity::of(m);
    let k = match parity {
        Parity::Odd => m + 1,
        Parity::Even => m,
    };
    let mut points: Vec<f64> = derivative_zeros(k)?
        .into_iter()
        .map(|x| 0.5 * (1.0 + x))
        .collect();
    // enforce exact mirror symmetry about 1/2
    let n = points.len();
    for i in 0..n / 2 {
        let avg = 0.5 * (points[i] + (1.0 - points[n - 1 - i]));
        points[i] = avg;
        points[n - 1 - i] = 1.0 - avg;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    Ok(SuperconvPoints { m, parity, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Explicit monomial form of the shifted Legendre polynomial:
    /// P_j(s) = Σ_k (-1)^{j+k} C(j,k) C(j+k,k) s^k.
    fn monomial_legendre(j: usize, s: f64) -> f64 {
        (0..=j)
            .map(|k| {
                let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
                sign * binom(j as u64, k as u64) * binom((j + k) as u64, k as u64) * s.powi(k as i32)
            })
            .sum()
    }

    #[test]
    fn low_degree_values() {
        assert_eq!(legendre_eval(0, 0.7), 1.0);
        assert_eq!(legendre_eval(1, 0.5), 0.0);
        assert!((legendre_eval(2, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(legendre_deriv(1, 0.3), 2.0);
        assert!(legendre_deriv(2, 0.5).abs() < 1e-15);
        // d/ds (20s^3 - 30s^2 + 12s - 1) = 60s^2 - 60s + 12 at 1/2
        assert!((legendre_deriv(3, 0.5) + 3.0).abs() < 1e-14);
    }

    #[test]
    fn recurrence_matches_monomial_expansion() {
        for j in 0..=6 {
            for i in 0..20 {
                let s = (i as f64 * 0.618_033_988_749_895).fract();
                let diff = (legendre_eval(j, s) - monomial_legendre(j, s)).abs();
                assert!(diff < 1e-12, "j={j} s={s} diff={diff}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let eps = 1e-6;
        for j in 0..=8 {
            for &s in &[0.1, 0.33, 0.5, 0.77, 0.95] {
                let fd = (legendre_eval(j, s + eps) - legendre_eval(j, s - eps)) / (2.0 * eps);
                assert!((fd - legendre_deriv(j, s)).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn values_vector_agrees_with_scalar_eval() {
        let vals = legendre_values(7, 0.23);
        for (j, v) in vals.iter().enumerate() {
            assert!((v - legendre_eval(j, 0.23)).abs() < 1e-15);
        }
        assert!(legendre_values(0, 0.5).is_empty());
    }

    #[test]
    fn gauss_small_rules() {
        let r1 = gauss_rule(1).unwrap();
        assert!((r1.nodes[0] - 0.5).abs() < 1e-15);
        assert!((r1.weights[0] - 1.0).abs() < 1e-15);

        let r2 = gauss_rule(2).unwrap();
        let d = 3f64.sqrt() / 6.0;
        assert!((r2.nodes[0] - (0.5 - d)).abs() < 1e-15);
        assert!((r2.nodes[1] - (0.5 + d)).abs() < 1e-15);
        assert!((r2.weights[0] - 0.5).abs() < 1e-15);
        assert!((r2.weights[1] - 0.5).abs() < 1e-15);

        let r3 = gauss_rule(3).unwrap();
        assert!((r3.integrate(|s| s.powi(5)) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_rejects_out_of_range() {
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(65).is_err());
    }

    #[test]
    fn gauss_exactness_and_weights() {
        for q in 1..=MAX_QUAD_POINTS {
            let rule = gauss_rule(q).unwrap();
            assert_eq!(rule.len(), q);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "q={q} sum={total}");
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes.iter().all(|&s| s > 0.0 && s < 1.0));
            for k in 0..=(2 * q - 1).min(40) {
                let got = rule.integrate(|s| s.powi(k as i32));
                let want = 1.0 / (k as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "q={q} k={k}");
            }
        }
    }

    #[test]
    fn orthogonality() {
        for i in 0..=10 {
            for j in 0..=10 {
                let rule = gauss_rule(i.max(j) + 1).unwrap();
                let got = rule.integrate(|s| legendre_eval(i, s) * legendre_eval(j, s));
                let want = if i == j { 1.0 / (2 * j + 1) as f64 } else { 0.0 };
                assert!((got - want).abs() < 1e-13, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn superconv_small_orders() {
        let p2 = superconv_points(2).unwrap();
        assert_eq!(p2.points, vec![0.5]);
        assert_eq!(p2.parity, Parity::Even);

        let p3 = superconv_points(3).unwrap();
        let d = (3.0f64 / 7.0).sqrt() / 2.0;
        let want = [0.5 - d, 0.5, 0.5 + d];
        for (a, b) in p3.points.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((p3.points[0] - 0.172673).abs() < 1e-6);

        let p4 = superconv_points(4).unwrap();
        assert_eq!(p4.points.len(), 3);
        assert_eq!(p4.points[1], 0.5);
        for &s in &p4.points {
            let (a, b) = (legendre_deriv(4, s - 1e-6), legendre_deriv(4, s + 1e-6));
            assert!(a * b < 0.0, "no sign change at {s}");
        }
    }

    #[test]
    fn superconv_all_orders() {
        for m in 1..=MAX_ORDER {
            let sp = superconv_points(m).unwrap();
            let want_len = if m % 2 == 1 { m } else { m - 1 };
            assert_eq!(sp.points.len(), want_len, "m={m}");
            let deg = sp.target_degree();
            for &s in &sp.points {
                assert!(legendre_deriv(deg, s).abs() < 1e-12, "m={m} s={s}");
                assert!(s > 0.0 && s < 1.0);
            }
            assert!(sp.points.windows(2).all(|w| w[0] < w[1]));
            let n = sp.points.len();
            for i in 0..n {
                assert!((sp.points[i] + sp.points[n - 1 - i] - 1.0).abs() < 1e-13);
            }
        }
        assert!(superconv_points(0).is_err());
        assert!(superconv_points(9).is_err());
    }

    #[test]
    fn m1_superconv_point_is_midpoint() {
        // m = 1 is odd: zero of P'_2
        assert_eq!(superconv_points(1).unwrap().points, vec![0.5]);
    }
}

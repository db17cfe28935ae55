//! Structural matrices of the DG scheme for basis order `m`.
//!
//! `M` is the constant-kernel limit of the local triangle moments and `N` the
//! limit of the history moments. The vectors `v`, `w`, `ṽ` are the closed
//! forms of `M⁻¹e₀`, `M⁻¹e_{m-1}` and `e₀ᵀM⁻¹`, and `q = w/w₀ - v/2`.
//! [`verify_identities`] turns each algebraic relation between them into a
//! residual that can be checked numerically.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::basis::{Parity, MAX_ORDER};
use crate::error::{Error, Result};

pub const DEFAULT_IDENTITY_TOL: f64 = 1e-12;

/// Sub-diagonal coefficient `α_j = 1/(8j² - 2)`, `j ≥ 1`.
pub fn alpha(j: usize) -> f64 {
    let j = j as f64;
    1.0 / (8.0 * j * j - 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrices {
    /// Basis order (polynomial degree `m - 1`).
    pub m: usize,
    pub m_matrix: DMatrix<f64>,
    pub n_matrix: DMatrix<f64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub v_tilde: RowDVector<f64>,
    pub q: DVector<f64>,
    /// `α_1, ..., α_{m-1}`.
    pub alphas: Vec<f64>,
}

impl SpectralMatrices {
    pub fn parity(&self) -> Parity {
        Parity::of(self.m)
    }

    /// Determinant of `M` from its LU factorisation.
    pub fn det_m(&self) -> f64 {
        self.m_matrix.clone().lu().determinant()
    }

    /// Product of the pivots `U_ii` of the partially pivoted LU of `M`.
    pub fn lu_pivot_product(&self) -> f64 {
        let lu = self.m_matrix.clone().lu();
        lu.u().diagonal().iter().product()
    }
}

/// Builds all structural matrices for `1 ≤ m ≤ 8`.
pub fn build(m: usize) -> Result<SpectralMatrices> {
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(Error::invalid(format!(
            "spectral::build: order {m} outside 1..={MAX_ORDER}"
        )));
    }
    let alphas: Vec<f64> = (1..m).map(alpha).collect();

    let mut mm = DMatrix::zeros(m, m);
    mm[(0, 0)] = 0.5;
    for j in 1..m {
        mm[(j - 1, j)] = -alphas[j - 1];
        mm[(j, j - 1)] = alphas[j - 1];
    }

    let mut nm = DMatrix::zeros(m, m);
    nm[(0, 0)] = 1.0;

    let scale = 2.0 * (2 * m - 1) as f64;
    let w = DVector::from_fn(m, |i, _| scale * (2 * i + 1) as f64);

    // odd m:  v = 2(1, 0, 5, 0, ..., 2m-1),  ṽ = v
    // even m: v = -2(0, 3, 0, 7, ..., 2m-1), ṽ = -v
    let odd = m % 2 == 1;
    let pattern = DVector::from_fn(m, |i, _| {
        let keep = if odd { i % 2 == 0 } else { i % 2 == 1 };
        if keep {
            2.0 * (2 * i + 1) as f64
        } else {
            0.0
        }
    });
    let v = if odd { pattern.clone() } else { pattern.map(|x| if x == 0.0 { 0.0 } else { -x }) };
    let v_tilde = pattern.transpose();

    let q = &w / w[0] - &v * 0.5;

    Ok(SpectralMatrices {
        m,
        m_matrix: mm,
        n_matrix: nm,
        v,
        w,
        v_tilde,
        q,
        alphas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub m: usize,
    pub tol: f64,
    pub residuals: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.residual <= self.tol)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.residual)
    }
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Evaluates every identity that holds for the order and parity of `s`.
///
/// Always: `Mv = e₀`, `M(6e₀ - 3v) = e₁` (m ≥ 2), `Mw = e_{m-1}`,
/// `ṽM = e₀ᵀ`, `M⁻¹N = (v, 0, ..., 0)`, `NM⁻¹ = (ṽ; 0; ...)`.
/// Odd `m`: `-2M⁻¹N + (M⁻¹N)² = 0`, `(I - M⁻¹N)² = I`, `M⁻¹Nq = 0`.
/// Even `m`: `NM⁻¹N = 0`.
pub fn verify_identities(s: &SpectralMatrices, tol: f64) -> IdentityReport {
    let m = s.m;
    let mm = &s.m_matrix;
    let nm = &s.n_matrix;
    let e = |i: usize| DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });
    let mut out = Vec::new();
    let mut push = |name: &'static str, residual: f64| out.push(IdentityResidual { name, residual });

    push("M v - e0", max_abs((mm * &s.v - e(0)).iter()));
    if m >= 2 {
        let lhs = mm * (e(0) * 6.0 - &s.v * 3.0);
        push("M (6 e0 - 3 v) - e1", max_abs((lhs - e(1)).iter()));
    }
    push("M w - e_{m-1}", max_abs((mm * &s.w - e(m - 1)).iter()));
    push(
        "v~ M - e0^T",
        max_abs((&s.v_tilde * mm - e(0).transpose()).iter()),
    );

    // Explicit inverse is fine at this size.
    let minv = mm
        .clone()
        .try_inverse()
        .expect("M is nonsingular for every supported order");
    let minv_n = &minv * nm;
    let mut expected = DMatrix::zeros(m, m);
    expected.set_column(0, &s.v);
    push("M^-1 N - (v, 0, ..., 0)", max_abs((&minv_n - expected).iter()));
    let n_minv = nm * &minv;
    let mut expected = DMatrix::zeros(m, m);
    expected.set_row(0, &s.v_tilde);
    push("N M^-1 - (v~; 0; ...)", max_abs((n_minv - expected).iter()));

    match s.parity() {
        Parity::Odd => {
            let g = &minv_n * -2.0 + &minv_n * &minv_n;
            push("-2 M^-1 N + (M^-1 N)^2", max_abs(g.iter()));
            let id = DMatrix::<f64>::identity(m, m);
            let r = &id - &minv_n;
            push("(I - M^-1 N)^2 - I", max_abs((&r * &r - id).iter()));
            push("M^-1 N q", max_abs((&minv_n * &s.q).iter()));
        }
        Parity::Even => {
            push("N M^-1 N", max_abs((nm * &minv * nm).iter()));
        }
    }

    IdentityReport {
        m,
        tol,
        residuals: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one() {
        let s = build(1).unwrap();
        assert_eq!(s.m_matrix[(0, 0)], 0.5);
        assert_eq!(s.n_matrix[(0, 0)], 1.0);
        assert_eq!(s.v[0], 2.0);
        assert_eq!(s.w[0], 2.0);
        assert_eq!(s.q[0], 0.0);
        let rep = verify_identities(&s, DEFAULT_IDENTITY_TOL);
        assert!(rep.passed());
        assert_eq!(rep.get("(I - M^-1 N)^2 - I"), Some(0.0));
    }

    #[test]
    fn order_two() {
        let s = build(2).unwrap();
        assert!((s.alphas[0] - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(s.m_matrix[(0, 0)], 0.5);
        assert!((s.m_matrix[(0, 1)] + 1.0 / 6.0).abs() < 1e-16);
        assert!((s.m_matrix[(1, 0)] - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(s.m_matrix[(1, 1)], 0.0);
        assert_eq!(s.v.as_slice(), &[0.0, -6.0]);
        assert_eq!(s.w.as_slice(), &[6.0, 18.0]);
        let mv = &s.m_matrix * &s.v;
        assert!((mv[0] - 1.0).abs() < 1e-15 && mv[1].abs() < 1e-15);
    }

    #[test]
    fn order_three() {
        let s = build(3).unwrap();
        assert!((s.alphas[1] - 1.0 / 30.0).abs() < 1e-16);
        assert_eq!(s.v.as_slice(), &[2.0, 0.0, 10.0]);
        let mv = &s.m_matrix * &s.v;
        assert!((mv[0] - 1.0).abs() < 1e-15);
        assert!(mv[1].abs() < 1e-15 && mv[2].abs() < 1e-15);
    }

    #[test]
    fn q_has_vanishing_even_entries_for_odd_orders() {
        for m in [1, 3, 5, 7] {
            let s = build(m).unwrap();
            for i in (0..m).step_by(2) {
                assert_eq!(s.q[i], 0.0, "m={m} i={i}");
            }
        }
    }

    #[test]
    fn all_orders_pass() {
        for m in 1..=MAX_ORDER {
            let s = build(m).unwrap();
            let rep = verify_identities(&s, DEFAULT_IDENTITY_TOL);
            assert!(rep.passed(), "m={m}: {:?}", rep.residuals);
            let odd = rep.get("(I - M^-1 N)^2 - I").is_some();
            let even = rep.get("N M^-1 N").is_some();
            assert!(odd ^ even);
            assert_eq!(odd, m % 2 == 1);
        }
    }

    #[test]
    fn determinant_matches_pivots() {
        for m in 1..=MAX_ORDER {
            let s = build(m).unwrap();
            let det = s.det_m();
            assert!(det != 0.0);
            let piv = s.lu_pivot_product();
            assert!((det.abs() - piv.abs()).abs() <= 1e-12 * det.abs());
            let cond = s.m_matrix.clone().try_inverse().unwrap().norm() * s.m_matrix.norm();
            assert!(cond.is_finite());
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(build(0).is_err());
        assert!(build(9).is_err());
    }
}

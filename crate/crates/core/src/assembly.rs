//! Galerkin moment integrals on the reference interval.
//!
//! For interval `n` with `t = t_n + s h`:
//!
//! * `a_ij = ∫_0^1 P_i P_j`
//! * `β^n(i,j) = ∫_0^1 P_i(s) ∫_0^s K(t_n + sh, t_n + τh) P_j(τ) dτ ds`
//! * `β^{(n,l)}(i,j) = ∫_0^1 P_i(s) ∫_0^1 K(t_n + sh, t_l + τh) P_j(τ) dτ ds`
//! * `F_n(i) = ∫_0^1 f(t_n + sh) P_i(s) ds`
//!
//! The inner triangle integral maps `[0, s]` affinely onto the reference rule.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::basis::{gauss_rule, legendre_values, QuadRule};
use crate::error::Result;
use crate::solver::Mesh;

/// Extra Gauss nodes per direction beyond the basis order.
pub const DEFAULT_EXTRA_NODES: usize = 6;

/// Default moment rule: `m + 6` Gauss nodes per direction.
pub fn default_rule(m: usize) -> Result<QuadRule> {
    gauss_rule(m + DEFAULT_EXTRA_NODES)
}

/// A quadrature rule together with tabulated basis values at its nodes and at
/// the mapped triangle nodes, reused across every moment of a solve.
#[derive(Debug, Clone)]
pub struct MomentQuadrature {
    m: usize,
    rule: QuadRule,
    /// `P_j(s_a)`, indexed `[a][j]`.
    outer: Vec<Vec<f64>>,
    /// `P_j(s_a x_b)`, indexed `[a][b][j]`.
    inner: Vec<Vec<Vec<f64>>>,
}

impl MomentQuadrature {
    pub fn new(m: usize, rule: &QuadRule) -> Self {
        let outer = rule.nodes.iter().map(|&s| legendre_values(m, s)).collect();
        let inner = rule
            .nodes
            .iter()
            .map(|&s| rule.nodes.iter().map(|&x| legendre_values(m, s * x)).collect())
            .collect();
        Self {
            m,
            rule: rule.clone(),
            outer,
            inner,
        }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.m;
        let mut a = DMatrix::zeros(m, m);
        for (wa, pa) in self.rule.weights.iter().zip(&self.outer) {
            for i in 0..m {
                for j in 0..m {
                    a[(i, j)] += wa * pa[i] * pa[j];
                }
            }
        }
        a
    }

    pub fn beta_diag(&self, kernel: &dyn Fn(f64, f64) -> f64, mesh: &Mesh, n: usize) -> DMatrix<f64> {
        let m = self.m;
        let h = mesh.h();
        let tn = mesh.node(n);
        let mut out = DMatrix::zeros(m, m);
        let mut inner_sum = vec![0.0; m];
        for (a, (&s, &wa)) in self.rule.nodes.iter().zip(&self.rule.weights).enumerate() {
            inner_sum.iter_mut().for_each(|x| *x = 0.0);
            let t = tn + s * h;
            for (b, (&x, &wb)) in self.rule.nodes.iter().zip(&self.rule.weights).enumerate() {
                let tau = s * x;
                let kw = s * wb * kernel(t, tn + tau * h);
                for (acc, p) in inner_sum.iter_mut().zip(&self.inner[a][b]) {
                    *acc += kw * p;
                }
            }
            for i in 0..m {
                let pi = wa * self.outer[a][i];
                for j in 0..m {
                    out[(i, j)] += pi * inner_sum[j];
                }
            }
        }
        out
    }

    pub fn beta_offdiag(
        &self,
        kernel: &dyn Fn(f64, f64) -> f64,
        mesh: &Mesh,
        n: usize,
        l: usize,
    ) -> DMatrix<f64> {
        let m = self.m;
        let h = mesh.h();
        let (tn, tl) = (mesh.node(n), mesh.node(l));
        let mut out = DMatrix::zeros(m, m);
        let mut inner_sum = vec![0.0; m];
        for (a, (&s, &wa)) in self.rule.nodes.iter().zip(&self.rule.weights).enumerate() {
            inner_sum.iter_mut().for_each(|x| *x = 0.0);
            let t = tn + s * h;
            for (b, (&tau, &wb)) in self.rule.nodes.iter().zip(&self.rule.weights).enumerate() {
                let kw = wb * kernel(t, tl + tau * h);
                for (acc, p) in inner_sum.iter_mut().zip(&self.outer[b]) {
                    *acc += kw * p;
                }
            }
            for i in 0..m {
                let pi = wa * self.outer[a][i];
                for j in 0..m {
                    out[(i, j)] += pi * inner_sum[j];
                }
            }
        }
        out
    }

    pub fn load_vector(&self, f: &dyn Fn(f64) -> f64, mesh: &Mesh, n: usize) -> DVector<f64> {
        let h = mesh.h();
        let tn = mesh.node(n);
        let mut out = DVector::zeros(self.m);
        for (&s, (&w, p)) in self.rule.nodes.iter().zip(self.rule.weights.iter().zip(&self.outer)) {
            let fw = w * f(tn + s * h);
            for (o, pj) in out.iter_mut().zip(p) {
                *o += fw * pj;
            }
        }
        out
    }

    /// Load vector of an interval-dependent integrand `f(n, t)`.
    pub(crate) fn load_vector_indexed(
        &self,
        f: &dyn Fn(usize, f64) -> f64,
        mesh: &Mesh,
        n: usize,
    ) -> DVector<f64> {
        self.load_vector(&|t| f(n, t), mesh, n)
    }
}

/// Gram matrix `(a_ij)` by quadrature; diagonal with `a_jj = 1/(2j+1)`.
pub fn gram(m: usize) -> Result<DMatrix<f64>> {
    let rule = default_rule(m)?;
    Ok(MomentQuadrature::new(m, &rule).gram())
}

pub fn beta_diag(
    kernel: &dyn Fn(f64, f64) -> f64,
    mesh: &Mesh,
    n: usize,
    m: usize,
    rule: &QuadRule,
) -> DMatrix<f64> {
    MomentQuadrature::new(m, rule).beta_diag(kernel, mesh, n)
}

pub fn beta_offdiag(
    kernel: &dyn Fn(f64, f64) -> f64,
    mesh: &Mesh,
    n: usize,
    l: usize,
    m: usize,
    rule: &QuadRule,
) -> DMatrix<f64> {
    assert!(l < n, "history block requires l < n (got l = {l}, n = {n})");
    MomentQuadrature::new(m, rule).beta_offdiag(kernel, mesh, n, l)
}

pub fn load_vector(
    f: &dyn Fn(f64) -> f64,
    mesh: &Mesh,
    n: usize,
    m: usize,
    rule: &QuadRule,
) -> DVector<f64> {
    MomentQuadrature::new(m, rule).load_vector(f, mesh, n)
}

/// All moments needed for step `n` of the coupled system, keyed by kernel
/// index `(p, q)` (0-based) and history interval `l`.
#[derive(Debug, Clone)]
pub struct MomentBlock {
    pub m: usize,
    pub gram: DMatrix<f64>,
    pub diag: BTreeMap<(usize, usize), DMatrix<f64>>,
    pub history: BTreeMap<(usize, usize, usize), DMatrix<f64>>,
    pub loads: BTreeMap<usize, DVector<f64>>,
}

impl MomentBlock {
    /// Assembles the moments of step `n` for the coupled system with kernels
    /// `K11`, `K12`, `K21`.
    pub fn for_iae(
        problem: &crate::problems::IaeProblem,
        mesh: &Mesh,
        n: usize,
        quad: &MomentQuadrature,
    ) -> Self {
        let kernels: [((usize, usize), &dyn Fn(f64, f64) -> f64); 3] = [
            ((0, 0), &*problem.k11),
            ((0, 1), &*problem.k12),
            ((1, 0), &*problem.k21),
        ];
        let mut diag = BTreeMap::new();
        let mut history = BTreeMap::new();
        for (key, k) in kernels {
            diag.insert(key, quad.beta_diag(k, mesh, n));
            for l in 0..n {
                history.insert((key.0, key.1, l), quad.beta_offdiag(k, mesh, n, l));
            }
        }
        let mut loads = BTreeMap::new();
        loads.insert(0, quad.load_vector(&*problem.f1, mesh, n));
        loads.insert(1, quad.load_vector(&*problem.f2, mesh, n));
        Self {
            m: quad.order(),
            gram: quad.gram(),
            diag,
            history,
            loads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral;

    fn mesh(n: usize, t: f64) -> Mesh {
        Mesh::new(t, n).unwrap()
    }

    #[test]
    fn gram_is_diagonal() {
        let a = gram(2).unwrap();
        assert!((a[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((a[(1, 1)] - 1.0 / 3.0).abs() < 1e-14);
        assert!(a[(0, 1)].abs() < 1e-14);
        let a4 = gram(4).unwrap();
        for j in 0..4 {
            assert!((a4[(j, j)] - 1.0 / (2 * j + 1) as f64).abs() < 1e-13);
        }
        for m in 1..=8 {
            let a = gram(m).unwrap();
            for i in 0..m {
                for j in 0..m {
                    let want = if i == j { 1.0 / (2 * j + 1) as f64 } else { 0.0 };
                    assert!((a[(i, j)] - want).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn constant_kernel_entries() {
        let mesh = mesh(4, 1.0);
        let rule = default_rule(3).unwrap();
        let b = beta_diag(&|_, _| 1.0, &mesh, 2, 3, &rule);
        assert!((b[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((b[(0, 1)] + 1.0 / 6.0).abs() < 1e-15);
        assert!((b[(1, 0)] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn constant_kernel_reproduces_m_and_n() {
        let mesh = mesh(8, 1.0);
        for m in 1..=8 {
            let rule = default_rule(m).unwrap();
            let s = spectral::build(m).unwrap();
            let b = beta_diag(&|_, _| 1.0, &mesh, 3, m, &rule);
            assert!((&b - &s.m_matrix).amax() < 1e-12, "m={m}");
            let bl = beta_offdiag(&|_, _| 1.0, &mesh, 3, 1, m, &rule);
            assert!((&bl - &s.n_matrix).amax() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn history_moment_of_linear_kernel() {
        // K(t,s) = s, n = 1, l = 0, h = 0.5: ∫∫ 0.5 τ dτ ds = 0.25
        let mesh = mesh(2, 1.0);
        let rule = default_rule(2).unwrap();
        let b = beta_offdiag(&|_, s| s, &mesh, 1, 0, 2, &rule);
        assert!((b[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn history_leading_term_converges() {
        // (0,0) entry → K(t_n, t_l) + O(h) with t_n = 0.5, t_l = 0.25 fixed
        let k = |t: f64, s: f64| (2.0 * t - s).exp();
        let rule = default_rule(3).unwrap();
        let mut prev = None;
        for n_int in [8usize, 16, 32, 64] {
            let mesh = mesh(n_int, 1.0);
            let (n, l) = (n_int / 2, n_int / 4);
            let b = beta_offdiag(&k, &mesh, n, l, 3, &rule);
            let err = (b[(0, 0)] - k(0.5, 0.25)).abs();
            if let Some(p) = prev {
                let ratio: f64 = p / err;
                assert!((ratio.log2() - 1.0).abs() < 0.2, "ratio {ratio}");
            }
            prev = Some(err);
        }
    }

    #[test]
    fn load_vectors() {
        let mesh1 = Mesh::new(2.0, 2).unwrap(); // h = 1
        let rule = default_rule(4).unwrap();
        let one = load_vector(&|_| 1.0, &mesh1, 1, 4, &rule);
        assert!((one[0] - 1.0).abs() < 1e-15);
        assert!(one.iter().skip(1).all(|x| x.abs() < 1e-15));
        let lin = load_vector(&|t| t, &mesh1, 0, 2, &rule);
        assert!((lin[0] - 0.5).abs() < 1e-15);
        assert!((lin[1] - 1.0 / 6.0).abs() < 1e-15);
        let zero = load_vector(&|_| 0.0, &mesh1, 1, 3, &rule);
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quadrature_converged_for_builtin_kernels() {
        let p = crate::problems::example1();
        let mesh = mesh(4, 1.0);
        for m in 1..=8 {
            let q1 = MomentQuadrature::new(m, &default_rule(m).unwrap());
            let q2 = MomentQuadrature::new(m, &gauss_rule(2 * (m + DEFAULT_EXTRA_NODES)).unwrap());
            let b1 = MomentBlock::for_iae(&p, &mesh, 3, &q1);
            let b2 = MomentBlock::for_iae(&p, &mesh, 3, &q2);
            for (k, v) in &b1.diag {
                assert!((v - &b2.diag[k]).amax() < 1e-12);
            }
            for (k, v) in &b1.history {
                assert!((v - &b2.history[k]).amax() < 1e-12);
            }
            for (k, v) in &b1.loads {
                assert!((v - &b2.loads[k]).amax() < 1e-12);
            }
        }
    }
}

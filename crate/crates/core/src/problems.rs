//! Problem definitions: the index-2 integral-algebraic system
//!
//! ```text
//! x1(t) + ∫_0^t [K11(t,s) x1(s) + K12(t,s) x2(s)] ds = f1(t)
//!         ∫_0^t  K21(t,s) x1(s) ds                   = f2(t)
//! ```
//!
//! first-kind Volterra equations `∫_0^t k(t,s) y(s) ds = g(t)` with an
//! optional data perturbation, and the three built-in benchmark systems.

use std::fmt;
use std::sync::Arc;

use crate::basis::{gauss_rule, QuadRule};
use crate::error::{Error, Result};

pub type Kernel = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smallest admissible `|K21(t,t) K12(t,t)|` (or `|k(t,t)|`) on the sample grid.
pub const MIN_DIAGONAL: f64 = 1e-10;
const DIAGONAL_SAMPLES: usize = 50;
const RESIDUAL_SAMPLES: usize = 20;
const RESIDUAL_TOL: f64 = 1e-8;
const RESIDUAL_QUAD: usize = 32;
const ORACLE_PANEL: f64 = 0.1;
const F_AT_ZERO_TOL: f64 = 1e-12;

/// Deterministic low-discrepancy points in `(0, 1)`.
pub(crate) fn sample_points(count: usize) -> impl Iterator<Item = f64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    (1..=count).map(|i| (0.5 + i as f64 * GOLDEN).fract())
}

/// Composite Gauss quadrature of `f` over `[0, t]` with panels of width at
/// most `ORACLE_PANEL`.
fn composite(rule: &QuadRule, t: f64, f: impl Fn(f64) -> f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let panels = (t / ORACLE_PANEL).ceil().max(1.0) as usize;
    let width = t / panels as f64;
    (0..panels)
        .map(|k| {
            let a = k as f64 * width;
            rule.integrate_on(a, a + width, &f)
        })
        .sum()
}

#[derive(Clone)]
pub struct IaeProblem {
    pub name: String,
    pub t_end: f64,
    pub k11: Kernel,
    pub k12: Kernel,
    pub k21: Kernel,
    pub f1: Func,
    pub f2: Func,
    pub exact_x1: Option<Func>,
    pub exact_x2: Option<Func>,
}

impl fmt::Debug for IaeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IaeProblem")
            .field("name", &self.name)
            .field("t_end", &self.t_end)
            .field("has_exact", &self.has_exact())
            .finish_non_exhaustive()
    }
}

impl IaeProblem {
    pub fn builder(t_end: f64) -> IaeBuilder {
        IaeBuilder {
            name: "custom".into(),
            t_end,
            kernels: None,
            rhs: None,
            exact: None,
        }
    }

    pub fn has_exact(&self) -> bool {
        self.exact_x1.is_some() && self.exact_x2.is_some()
    }

    /// Residuals of both equations at `t` for the attached exact solution,
    /// with the integrals evaluated by the composite quadrature oracle.
    pub fn exact_residual(&self, t: f64, q: usize) -> Result<(f64, f64)> {
        let (g1, g2) = rhs_oracle(self, t, q)?;
        Ok(((self.f1)(t) - g1, (self.f2)(t) - g2))
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::problem(format!("T = {} must be positive", self.t_end)));
        }
        let f2_0 = (self.f2)(0.0);
        if f2_0.abs() > F_AT_ZERO_TOL {
            return Err(Error::problem(format!("f2(0) = {f2_0:e}, expected 0")));
        }
        for i in 0..DIAGONAL_SAMPLES {
            let t = self.t_end * i as f64 / (DIAGONAL_SAMPLES - 1) as f64;
            let d = ((self.k21)(t, t) * (self.k12)(t, t)).abs();
            if !(d >= MIN_DIAGONAL) {
                return Err(Error::problem(format!(
                    "|K21(t,t) K12(t,t)| = {d:e} at t = {t} is below {MIN_DIAGONAL:e}"
                )));
            }
        }
        if self.has_exact() {
            for u in sample_points(RESIDUAL_SAMPLES) {
                let t = u * self.t_end;
                let (r1, r2) = self.exact_residual(t, RESIDUAL_QUAD)?;
                let r = r1.abs().max(r2.abs());
                if r > RESIDUAL_TOL {
                    return Err(Error::problem(format!(
                        "exact solution leaves residual {r:e} at t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub struct IaeBuilder {
    name: String,
    t_end: f64,
    kernels: Option<(Kernel, Kernel, Kernel)>,
    rhs: Option<(Func, Func)>,
    exact: Option<(Func, Func)>,
}

impl IaeBuilder {
    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn kernels<A, B, C>(mut self, k11: A, k12: B, k21: C) -> Self
    where
        A: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        C: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.kernels = Some((Arc::new(k11), Arc::new(k12), Arc::new(k21)));
        self
    }

    pub fn rhs<A, B>(mut self, f1: A, f2: B) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.rhs = Some((Arc::new(f1), Arc::new(f2)));
        self
    }

    pub fn exact<A, B>(mut self, x1: A, x2: B) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.exact = Some((Arc::new(x1), Arc::new(x2)));
        self
    }

    /// Validates the problem: `f2(0) = 0`, the diagonal product bound, and
    /// (when exact solutions are attached) the residual of both equations.
    pub fn build(self) -> Result<IaeProblem> {
        let (k11, k12, k21) = self
            .kernels
            .ok_or_else(|| Error::problem("kernels not set"))?;
        let (f1, f2) = self.rhs.ok_or_else(|| Error::problem("rhs not set"))?;
        let (exact_x1, exact_x2) = match self.exact {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        let p = IaeProblem {
            name: self.name,
            t_end: self.t_end,
            k11,
            k12,
            k21,
            f1,
            f2,
            exact_x1,
            exact_x2,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Evaluates `f1(t) = x1(t) + ∫_0^t [K11 x1 + K12 x2]` and
/// `f2(t) = ∫_0^t K21 x1` from the exact solution by composite `q`-point
/// Gauss quadrature on `⌈t/0.1⌉` panels.
pub fn rhs_oracle(problem: &IaeProblem, t: f64, q: usize) -> Result<(f64, f64)> {
    if !(0.0..=problem.t_end).contains(&t) {
        return Err(Error::OutOfDomain {
            t,
            t_end: problem.t_end,
        });
    }
    let x1 = problem
        .exact_x1
        .as_ref()
        .ok_or(Error::MissingExact { component: 0 })?;
    let x2 = problem
        .exact_x2
        .as_ref()
        .ok_or(Error::MissingExact { component: 1 })?;
    let rule = gauss_rule(q)?;
    let int1 = composite(&rule, t, |s| {
        (problem.k11)(t, s) * x1(s) + (problem.k12)(t, s) * x2(s)
    });
    let int2 = composite(&rule, t, |s| (problem.k21)(t, s) * x1(s));
    Ok((x1(t) + int1, int2))
}

fn example_kernels(b: IaeBuilder) -> IaeBuilder {
    b.kernels(|t, s| t - s, |t, s| (t - s).exp(), |t, s| (2.0 * t - s).exp())
}

/// `∫_0^t e^{t-s} cos s ds`
fn exp_cos_convolution(t: f64) -> f64 {
    0.5 * (t.sin() - t.cos() + t.exp())
}

/// Benchmark 1: `x1 = t e^{-t}`, `x2 = cos t` on `[0, 1]`.
pub fn example1() -> IaeProblem {
    example_kernels(IaeProblem::builder(1.0).name("ex1"))
        .rhs(
            |t| (2.0 * t + 2.0) * (-t).exp() + t - 2.0 + exp_cos_convolution(t),
            |t| 0.25 * (2.0 * t).exp() - 0.5 * t - 0.25,
        )
        .exact(|t| t * (-t).exp(), |t| t.cos())
        .build()
        .expect("built-in example 1 is valid")
}

/// Benchmark 2: `x1 = t sin t`, `x2 = cos t` on `[0, 1]`.
pub fn example2() -> IaeProblem {
    example_kernels(IaeProblem::builder(1.0).name("ex2"))
        .rhs(
            |t| 2.0 - 2.0 * t.cos() + exp_cos_convolution(t),
            |t| 0.5 * (2.0 * t).exp() - 0.5 * t.exp() * (t * (t.sin() + t.cos()) + t.cos()),
        )
        .exact(|t| t * t.sin(), |t| t.cos())
        .build()
        .expect("built-in example 2 is valid")
}

/// Benchmark 3: `x1 = cos t`, `x2 = e^{-t}` on `[0, 1]`.
pub fn example3() -> IaeProblem {
    example_kernels(IaeProblem::builder(1.0).name("ex3"))
        .rhs(
            |t| 1.0 + t.sinh(),
            |t| 0.5 * (t.exp() * (t.sin() - t.cos()) + (2.0 * t).exp()),
        )
        .exact(|t| t.cos(), |t| (-t).exp())
        .build()
        .expect("built-in example 3 is valid")
}

/// Looks up a built-in example by name (`ex1`, `ex2`, `ex3`).
pub fn builtin(name: &str) -> Result<IaeProblem> {
    match name {
        "ex1" => Ok(example1()),
        "ex2" => Ok(example2()),
        "ex3" => Ok(example3()),
        other => Err(Error::invalid(format!(
            "unknown problem `{other}` (expected ex1, ex2 or ex3)"
        ))),
    }
}

/// How the perturbation shape is laid over the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerturbationProfile {
    /// `δ(t) = amplitude · h^{m1} · shape(t)`.
    Smooth,
    /// Same as `Smooth` but with the sign flipped on every other interval,
    /// `δ(t_n + sh) = (-1)^n · amplitude · h^{m1} · shape(t)`.
    Alternating,
    /// `δ(t_n + sh) = amplitude · h^{m1} · shape(t) · ((-1)^n + 2s - 1)`.
    ///
    /// The alternating part resonates with the step propagator for odd `m`
    /// and the linear part with its nilpotent part for even `m`, so this
    /// profile attains the worst-case rate for both parities.
    #[default]
    Resonant,
}

/// Data perturbation `δ = O(h^{m1})` added to the right-hand side of a
/// first-kind equation.
#[derive(Clone)]
pub struct PerturbationSpec {
    pub m1: i32,
    pub shape: Func,
    pub amplitude: f64,
    pub profile: PerturbationProfile,
}

impl fmt::Debug for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationSpec")
            .field("m1", &self.m1)
            .field("amplitude", &self.amplitude)
            .field("profile", &self.profile)
            .finish_non_exhaustive()
    }
}

impl PerturbationSpec {
    /// Default shape `sin(t + 1)` with unit amplitude and the resonant profile.
    pub fn new(m1: i32) -> Self {
        Self {
            m1,
            shape: Arc::new(|t: f64| (t + 1.0).sin()),
            amplitude: 1.0,
            profile: PerturbationProfile::Resonant,
        }
    }

    pub fn with_shape(mut self, shape: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.shape = Arc::new(shape);
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_profile(mut self, profile: PerturbationProfile) -> Self {
        self.profile = profile;
        self
    }

    /// `δ` at `t_n + s h` for step size `h`.
    pub fn delta(&self, h: f64, n: usize, t: f64) -> f64 {
        let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
        let factor = match self.profile {
            PerturbationProfile::Smooth => 1.0,
            PerturbationProfile::Alternating => sign,
            PerturbationProfile::Resonant => sign + 2.0 * (t / h - n as f64) - 1.0,
        };
        factor * self.amplitude * h.powi(self.m1) * (self.shape)(t)
    }
}

#[derive(Clone)]
pub struct Vie1Problem {
    pub t_end: f64,
    pub kernel: Kernel,
    pub g: Func,
    pub exact_y: Option<Func>,
    pub perturbation: Option<PerturbationSpec>,
}

impl fmt::Debug for Vie1Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vie1Problem")
            .field("t_end", &self.t_end)
            .field("has_exact", &self.exact_y.is_some())
            .field("perturbation", &self.perturbation)
            .finish_non_exhaustive()
    }
}

impl Vie1Problem {
    pub fn with_perturbation(mut self, perturbation: Option<PerturbationSpec>) -> Self {
        self.perturbation = perturbation;
        self
    }
}

/// Bundles a first-kind problem `∫_0^t k(t,s) y(s) ds = g(t)`, checking
/// `g(0) = 0` and `|k(t,t)| ≥ MIN_DIAGONAL` on a sample grid.
pub fn make_vie1<K, G>(
    t_end: f64,
    kernel: K,
    g: G,
    exact: Option<Func>,
    perturbation: Option<PerturbationSpec>,
) -> Result<Vie1Problem>
where
    K: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    G: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::problem(format!("T = {t_end} must be positive")));
    }
    let g0 = g(0.0);
    if g0.abs() > F_AT_ZERO_TOL {
        return Err(Error::problem(format!("g(0) = {g0:e}, expected 0")));
    }
    for i in 0..DIAGONAL_SAMPLES {
        let t = t_end * i as f64 / (DIAGONAL_SAMPLES - 1) as f64;
        let d = kernel(t, t).abs();
        if !(d >= MIN_DIAGONAL) {
            return Err(Error::problem(format!(
                "|k(t,t)| = {d:e} at t = {t} is below {MIN_DIAGONAL:e}"
            )));
        }
    }
    Ok(Vie1Problem {
        t_end,
        kernel: Arc::new(kernel),
        g: Arc::new(g),
        exact_y: exact,
        perturbation,
    })
}

/// The first-kind equation `∫_0^t K21(t,s) y(s) ds = f2(t)` of a coupled
/// system taken on its own, with `x1` as its exact solution.
pub fn first_kind_part(problem: &IaeProblem) -> Result<Vie1Problem> {
    let k21 = problem.k21.clone();
    let f2 = problem.f2.clone();
    make_vie1(
        problem.t_end,
        move |t, s| k21(t, s),
        move |t| f2(t),
        problem.exact_x1.clone(),
        None,
    )
}

/// The second equation of the benchmark systems taken on its own:
/// `∫_0^t e^{2t-s} y(s) ds = g(t)` with `y = t e^{-t}`.
pub fn benchmark_vie1() -> Vie1Problem {
    make_vie1(
        1.0,
        |t, s| (2.0 * t - s).exp(),
        |t| 0.25 * (2.0 * t).exp() - 0.5 * t - 0.25,
        Some(Arc::new(|t: f64| t * (-t).exp())),
        None,
    )
    .expect("benchmark first-kind problem is valid")
}

/// Anything that can supply exact solution components for error measurement.
pub trait ExactSolution {
    fn exact(&self, component: usize) -> Option<&Func>;
    fn problem_id(&self) -> String;
}

impl ExactSolution for IaeProblem {
    fn exact(&self, component: usize) -> Option<&Func> {
        match component {
            0 => self.exact_x1.as_ref(),
            1 => self.exact_x2.as_ref(),
            _ => None,
        }
    }

    fn problem_id(&self) -> String {
        self.name.clone()
    }
}

impl ExactSolution for Vie1Problem {
    fn exact(&self, component: usize) -> Option<&Func> {
        if component == 0 {
            self.exact_y.as_ref()
        } else {
            None
        }
    }

    fn problem_id(&self) -> String {
        "vie1".into()
    }
}

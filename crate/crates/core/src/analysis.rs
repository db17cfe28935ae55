//! Error measurement and convergence-order regression.

use std::fmt;

use crate::assembly::default_rule;
use crate::basis::{gauss_rule, superconv_points, Parity, QuadRule};
use crate::error::{Error, Result};
use crate::problems::{ExactSolution, IaeProblem, PerturbationSpec, Vie1Problem};
use crate::solver::{solve_iae, solve_vie1, DgSolution, Mesh};

/// Gauss points per interval used for sup-norm errors (plus `s = 1`).
pub const GLOBAL_SAMPLES_PER_INTERVAL: usize = 10;

/// Errors below this are at the rounding floor; orders computed from them
/// are flagged and not asserted on.
pub const ERROR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    /// Sup-norm over all of `[0, T]`.
    Global,
    /// Maximum over the superconvergence points `t_n + s_r h`.
    Superconv,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Global => "global",
            ErrorKind::Superconv => "superconv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub component: usize,
    pub kind: ErrorKind,
    pub value: f64,
    pub argmax_t: f64,
}

fn max_error_over(
    sol: &DgSolution,
    exact: &dyn Fn(f64) -> f64,
    component: usize,
    kind: ErrorKind,
    local_points: &[f64],
) -> ErrorSample {
    let mesh = sol.mesh;
    let h = mesh.h();
    let mut best = ErrorSample {
        component,
        kind,
        value: 0.0,
        argmax_t: h,
    };
    for n in 0..mesh.intervals() {
        for &s in local_points {
            let t = mesh.node(n) + s * h;
            let err = (exact(t) - sol.eval_local(component, n, s)).abs();
            if err > best.value {
                best.value = err;
                best.argmax_t = t;
            }
        }
    }
    best
}

fn exact_of<P: ExactSolution + ?Sized>(problem: &P, component: usize) -> Result<&crate::problems::Func> {
    problem
        .exact(component)
        .ok_or(Error::MissingExact { component })
}

/// Sup-norm error of `component` sampled at `samples_per_interval` Gauss
/// points and the right end point of every interval. The superconvergence
/// points are sampled too, so the result bounds [`superconv_error`].
pub fn global_error<P: ExactSolution + ?Sized>(
    sol: &DgSolution,
    problem: &P,
    component: usize,
    samples_per_interval: usize,
) -> Result<ErrorSample> {
    if samples_per_interval < 5 {
        return Err(Error::invalid(format!(
            "global_error needs at least 5 samples per interval, got {samples_per_interval}"
        )));
    }
    let exact = exact_of(problem, component)?;
    let mut points = gauss_rule(samples_per_interval)?.nodes;
    points.push(1.0);
    points.extend(superconv_points(sol.m)?.points);
    Ok(max_error_over(sol, &**exact, component, ErrorKind::Global, &points))
}

/// Maximum error of `component` over `t_n + s_r h` for the superconvergence
/// points `s_r` of the solution's basis order.
pub fn superconv_error<P: ExactSolution + ?Sized>(
    sol: &DgSolution,
    problem: &P,
    component: usize,
) -> Result<ErrorSample> {
    let exact = exact_of(problem, component)?;
    let points = superconv_points(sol.m)?.points;
    Ok(max_error_over(sol, &**exact, component, ErrorKind::Superconv, &points))
}

pub fn measure<P: ExactSolution + ?Sized>(
    sol: &DgSolution,
    problem: &P,
    component: usize,
    kind: ErrorKind,
) -> Result<ErrorSample> {
    match kind {
        ErrorKind::Global => global_error(sol, problem, component, GLOBAL_SAMPLES_PER_INTERVAL),
        ErrorKind::Superconv => superconv_error(sol, problem, component),
    }
}

/// `log2(e_N / e_{2N})` for one refinement pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    pub value: f64,
    /// Either error of the pair is below [`ERROR_FLOOR`].
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub problem_id: String,
    pub m: usize,
    pub kind: ErrorKind,
    pub component: usize,
    /// `(N, error)` with `N` doubling.
    pub rows: Vec<(usize, f64)>,
    /// One entry per consecutive pair of rows.
    pub orders: Vec<OrderEstimate>,
}

impl ConvergenceReport {
    pub fn new(
        problem_id: impl Into<String>,
        m: usize,
        kind: ErrorKind,
        component: usize,
        rows: Vec<(usize, f64)>,
    ) -> Result<Self> {
        check_doubling(&rows.iter().map(|r| r.0).collect::<Vec<_>>(), 2)?;
        let orders = rows
            .windows(2)
            .map(|w| {
                let (e0, e1) = (w[0].1, w[1].1);
                OrderEstimate {
                    value: (e0 / e1).log2(),
                    floored: e0 < ERROR_FLOOR || e1 < ERROR_FLOOR,
                }
            })
            .collect();
        Ok(Self {
            problem_id: problem_id.into(),
            m,
            kind,
            component,
            rows,
            orders,
        })
    }

    /// Order from the finest refinement pair.
    pub fn final_order(&self) -> Option<OrderEstimate> {
        self.orders.last().copied()
    }

    /// Finest pair whose errors are both above the floor, with its index.
    pub fn finest_unfloored(&self) -> Option<(usize, OrderEstimate)> {
        self.orders
            .iter()
            .copied()
            .enumerate()
            .rev()
            .find(|(_, o)| !o.floored)
    }

    pub fn error_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == n).map(|r| r.1)
    }
}

fn check_doubling(n_list: &[usize], min_len: usize) -> Result<()> {
    if n_list.len() < min_len {
        return Err(Error::invalid(format!(
            "refinement sequence needs at least {min_len} entries, got {}",
            n_list.len()
        )));
    }
    if let Some(w) = n_list.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid(format!(
            "refinement sequence must double: {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn wrap(intervals: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Refinement {
        intervals,
        source: Box::new(e),
    }
}

/// Solves `problem` on every mesh of `n_list` with the default moment rule.
/// Independent solves run on scoped threads.
pub fn refinement_solutions(
    problem: &IaeProblem,
    m: usize,
    n_list: &[usize],
) -> Result<Vec<(usize, DgSolution)>> {
    refinement_solutions_with_rule(problem, m, n_list, &default_rule(m)?)
}

/// As [`refinement_solutions`] with an explicit moment rule.
pub fn refinement_solutions_with_rule(
    problem: &IaeProblem,
    m: usize,
    n_list: &[usize],
    rule: &QuadRule,
) -> Result<Vec<(usize, DgSolution)>> {
    let results: Vec<Result<DgSolution>> = std::thread::scope(|scope| {
        let handles: Vec<_> = n_list
            .iter()
            .map(|&n| {
                scope.spawn(move || {
                    let mesh = Mesh::new(problem.t_end, n)?;
                    solve_iae(problem, &mesh, m, rule)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    n_list
        .iter()
        .zip(results)
        .map(|(&n, r)| r.map(|s| (n, s)).map_err(wrap(n)))
        .collect()
}

/// Builds a report for one component and error kind from solutions already
/// computed on a doubling sequence.
pub fn report_from_solutions<P: ExactSolution + ?Sized>(
    problem: &P,
    solutions: &[(usize, DgSolution)],
    kind: ErrorKind,
    component: usize,
) -> Result<ConvergenceReport> {
    let m = solutions
        .first()
        .map(|s| s.1.m)
        .ok_or_else(|| Error::invalid("no solutions"))?;
    let rows = solutions
        .iter()
        .map(|(n, sol)| measure(sol, problem, component, kind).map(|e| (*n, e.value)))
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::new(problem.problem_id(), m, kind, component, rows)
}

/// Solves on each `N` of a doubling sequence (length ≥ 3) and regresses the
/// error of `component` (0-based).
pub fn order_regression(
    problem: &IaeProblem,
    m: usize,
    n_list: &[usize],
    kind: ErrorKind,
    component: usize,
) -> Result<ConvergenceReport> {
    check_doubling(n_list, 3)?;
    let sols = refinement_solutions(problem, m, n_list)?;
    report_from_solutions(problem, &sols, kind, component)
}

/// Global-error regression of the first-kind solver with the perturbation of
/// `base` (or the default shape) rescaled to exponent `m1`.
pub fn perturbation_study(
    base: &Vie1Problem,
    m: usize,
    m1: i32,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    perturbation_study_with_rule(base, m, m1, n_list, &default_rule(m)?)
}

/// As [`perturbation_study`] with an explicit moment rule.
pub fn perturbation_study_with_rule(
    base: &Vie1Problem,
    m: usize,
    m1: i32,
    n_list: &[usize],
    rule: &QuadRule,
) -> Result<ConvergenceReport> {
    check_doubling(n_list, 3)?;
    let spec = match &base.perturbation {
        Some(p) => PerturbationSpec { m1, ..p.clone() },
        None => PerturbationSpec::new(m1),
    };
    let problem = base.clone().with_perturbation(Some(spec));
    let rows = n_list
        .iter()
        .map(|&n| {
            let run = || -> Result<f64> {
                let mesh = Mesh::new(problem.t_end, n)?;
                let sol = solve_vie1(&problem, &mesh, m, rule)?;
                Ok(global_error(&sol, &problem, 0, GLOBAL_SAMPLES_PER_INTERVAL)?.value)
            };
            run().map(|e| (n, e)).map_err(wrap(n))
        })
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::new(format!("vie1-m1={m1}"), m, ErrorKind::Global, 0, rows)
}

/// Attainable order for the coupled system. `x1_vanishing` states whether
/// `x1^{(m)}(0) = 0`, which only matters for odd `m`.
pub fn iae_expected_order(m: usize, kind: ErrorKind, component: usize, x1_vanishing: bool) -> i64 {
    let m = m as i64;
    let odd = Parity::of(m as usize) == Parity::Odd;
    match (kind, component, odd) {
        (ErrorKind::Global, 0, true) => m,
        (ErrorKind::Global, 0, false) => m - 1,
        (ErrorKind::Global, _, true) => {
            if x1_vanishing {
                m - 1
            } else {
                m - 2
            }
        }
        (ErrorKind::Global, _, false) => m - 3,
        (ErrorKind::Superconv, 0, true) => {
            if x1_vanishing {
                m + 1
            } else {
                m
            }
        }
        (ErrorKind::Superconv, 0, false) => m,
        (ErrorKind::Superconv, _, true) => {
            if x1_vanishing {
                m - 1
            } else {
                m - 2
            }
        }
        (ErrorKind::Superconv, _, false) => m - 2,
    }
}

/// Attainable global order of the perturbed first-kind solver.
pub fn perturbed_expected_order(m: usize, m1: i32) -> i64 {
    let m = m as i64;
    let cap = m1 as i64 - 2;
    if m % 2 == 1 {
        m.min(cap)
    } else {
        (m - 1).min(cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example1, example2};

    #[test]
    fn report_orders_and_flooring() {
        let rep = ConvergenceReport::new(
            "t",
            3,
            ErrorKind::Global,
            0,
            vec![(4, 8e-6), (8, 1e-6), (16, 1.25e-7), (32, 1e-13)],
        )
        .unwrap();
        assert_eq!(rep.orders.len(), 3);
        assert!((rep.orders[0].value - 3.0).abs() < 1e-12);
        assert!(!rep.orders[1].floored);
        assert!(rep.final_order().unwrap().floored);
        assert_eq!(rep.finest_unfloored().unwrap().0, 1);
        assert!(ConvergenceReport::new("t", 3, ErrorKind::Global, 0, vec![(4, 1.0), (6, 0.5)]).is_err());
    }

    #[test]
    fn missing_exact_and_bad_sampling() {
        let p = example1();
        let sol = solve_iae(&p, &Mesh::new(1.0, 4).unwrap(), 2, &default_rule(2).unwrap()).unwrap();
        assert!(global_error(&sol, &p, 0, 4).is_err());
        assert!(matches!(
            global_error(&sol, &p, 2, 10),
            Err(Error::MissingExact { component: 2 })
        ));
        let bare = IaeProblem::builder(1.0)
            .kernels(|_, _| 0.0, |_, _| 1.0, |_, _| 1.0)
            .rhs(|t| t, |t| t)
            .build()
            .unwrap();
        assert!(superconv_error(&sol, &bare, 0).is_err());
    }

    #[test]
    fn superconv_not_above_global() {
        let p = example2();
        for m in [2, 3, 4] {
            let sol = solve_iae(&p, &Mesh::new(1.0, 8).unwrap(), m, &default_rule(m).unwrap()).unwrap();
            for c in 0..2 {
                let g = global_error(&sol, &p, c, 10).unwrap();
                let s = superconv_error(&sol, &p, c).unwrap();
                assert!(g.value > 0.0 && g.argmax_t > 0.0 && g.argmax_t <= 1.0);
                assert!(s.value <= g.value);
            }
        }
    }

    #[test]
    fn expected_orders() {
        assert_eq!(iae_expected_order(3, ErrorKind::Global, 0, false), 3);
        assert_eq!(iae_expected_order(4, ErrorKind::Global, 1, false), 1);
        assert_eq!(iae_expected_order(5, ErrorKind::Global, 1, true), 4);
        assert_eq!(iae_expected_order(5, ErrorKind::Superconv, 0, true), 6);
        assert_eq!(iae_expected_order(6, ErrorKind::Superconv, 1, true), 4);
        assert_eq!(perturbed_expected_order(3, 4), 2);
        assert_eq!(perturbed_expected_order(3, 10), 3);
        assert_eq!(perturbed_expected_order(4, 10), 3);
    }

    #[test]
    fn regression_requires_doubling() {
        let p = example1();
        assert!(order_regression(&p, 3, &[4, 8], ErrorKind::Global, 0).is_err());
        assert!(order_regression(&p, 3, &[4, 8, 12], ErrorKind::Global, 0).is_err());
    }
}

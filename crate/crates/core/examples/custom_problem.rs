//! Defining a new coupled system with the builder, checking its closed-form
//! right-hand side against the quadrature oracle and solving it.
//!
//! System: `x1 + ∫ (x1 + x2) = f1`, `∫ e^{t-s} x1 = f2` with
//! `x1 = e^t`, `x2 = sin t` on `[0, 2]`.

use dg_iae::analysis::{global_error, GLOBAL_SAMPLES_PER_INTERVAL};
use dg_iae::assembly::default_rule;
use dg_iae::problems::{rhs_oracle, IaeProblem};
use dg_iae::solver::{iae_galerkin_residuals, solve_iae, Mesh};
use dg_iae::Result;

fn main() -> Result<()> {
    let problem = IaeProblem::builder(2.0)
        .name("custom")
        .kernels(|_, _| 1.0, |_, _| 1.0, |t, s| (t - s).exp())
        .rhs(
            |t: f64| t.exp() + (t.exp() - 1.0) + (1.0 - t.cos()),
            |t: f64| t * t.exp(),
        )
        .exact(f64::exp, f64::sin)
        .build()?;

    for t in [0.5, 1.0, 1.5, 2.0] {
        let (o1, o2) = rhs_oracle(&problem, t, 32)?;
        println!(
            "t = {t}: |f1 - oracle| = {:.1e}, |f2 - oracle| = {:.1e}",
            (o1 - (problem.f1)(t)).abs(),
            (o2 - (problem.f2)(t)).abs()
        );
    }

    let m = 3;
    let rule = default_rule(m)?;
    for n in [8, 16, 32] {
        let sol = solve_iae(&problem, &Mesh::new(2.0, n)?, m, &rule)?;
        let e1 = global_error(&sol, &problem, 0, GLOBAL_SAMPLES_PER_INTERVAL)?;
        let e2 = global_error(&sol, &problem, 1, GLOBAL_SAMPLES_PER_INTERVAL)?;
        let res = iae_galerkin_residuals(&problem, &sol, &rule)
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "N = {n:>2}: |e1| = {:.2e}, |e2| = {:.2e}, x1(1.2) = {:.8}, cond <= {:.1e}, residual {res:.1e}",
            e1.value,
            e2.value,
            sol.eval(0, 1.2)?,
            sol.max_condition()
        );
    }
    Ok(())
}

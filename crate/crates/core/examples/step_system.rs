//! Inspecting one marching step: the assembled block matrix, its condition
//! number, and the determinant identity
//! `det = (-1)^m h^{2m} det B21 det B12`.

use dg_iae::assembly::{beta_diag, default_rule};
use dg_iae::problems::example1;
use dg_iae::solver::{iae_step_system, Mesh};
use dg_iae::Result;

fn main() -> Result<()> {
    let problem = example1();
    let m = 3;
    let rule = default_rule(m)?;
    for n_int in [4, 16, 64] {
        let mesh = Mesh::new(1.0, n_int)?;
        let sys = iae_step_system(&problem, &mesh, m, &rule, 0, &[vec![], vec![]]);
        let (_, report) = sys.solve(0)?;
        let h = mesh.h();
        let b12 = beta_diag(&*problem.k12, &mesh, 0, m, &rule);
        let b21 = beta_diag(&*problem.k21, &mesh, 0, m, &rule);
        let det = sys.unscaled_lhs().determinant();
        let predicted = (-1f64).powi(m as i32) * h.powi(2 * m as i32) * b21.determinant() * b12.determinant();
        println!(
            "N = {n_int:>2}: cond1 = {:.2e}, residual = {:.1e}, det = {det:.6e}, predicted = {predicted:.6e}",
            report.condition, report.residual
        );
    }
    let mesh = Mesh::new(1.0, 4)?;
    let sys = iae_step_system(&problem, &mesh, m, &rule, 0, &[vec![], vec![]]);
    println!("\nrow-scaled step matrix, N = 4, first interval:{:.5}", sys.lhs);
    Ok(())
}

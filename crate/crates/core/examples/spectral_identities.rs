//! Structural matrices `M`, `N` and the vectors `v`, `w`, `ṽ`, `q`, with a
//! residual check of every algebraic identity between them.

use dg_iae::spectral::{build, verify_identities, DEFAULT_IDENTITY_TOL};
use dg_iae::Result;

fn main() -> Result<()> {
    let s = build(4)?;
    println!("m = 4\nM = {}", s.m_matrix);
    println!("v = {}", s.v.transpose());
    println!("w = {}", s.w.transpose());
    println!("q = {}", s.q.transpose());
    println!("det M = {:.6e}\n", s.det_m());

    for m in 1..=8 {
        let rep = verify_identities(&build(m)?, DEFAULT_IDENTITY_TOL);
        println!(
            "m = {m}: {} identities, max residual {:.2e} -> {}",
            rep.residuals.len(),
            rep.max_residual(),
            if rep.passed() { "ok" } else { "FAILED" }
        );
        for r in &rep.residuals {
            println!("    {:<28} {:.2e}", r.name, r.residual);
        }
    }
    Ok(())
}

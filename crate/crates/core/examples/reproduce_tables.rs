//! Global error tables for a built-in example.
//!
//! `cargo run --example reproduce_tables -- ex2` (default `ex1`).

use dg_iae::analysis::{iae_expected_order, refinement_solutions, report_from_solutions, ErrorKind};
use dg_iae::cli::{emit_table, Format};
use dg_iae::problems::builtin;
use dg_iae::Result;

fn main() -> Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "ex1".into());
    let problem = builtin(&name)?;
    // x1 = t sin t and x1 = cos t have vanishing odd derivatives at 0
    let x1_vanishing = name != "ex1";
    for component in 0..2 {
        for m in [3, 4, 5, 6] {
            let sols = refinement_solutions(&problem, m, &[2, 4, 8, 16, 32])?;
            let rep = report_from_solutions(&problem, &sols, ErrorKind::Global, component)?;
            print!("{}", emit_table(&rep, Format::Md));
            println!(
                "theory: h^{}\n",
                iae_expected_order(m, ErrorKind::Global, component, x1_vanishing)
            );
        }
    }
    Ok(())
}

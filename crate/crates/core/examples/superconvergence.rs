//! Global versus superconvergence-point errors for Examples 1 and 2 with
//! `m = 3`: Example 2 has `x1'''(0) = 0`, which lifts both local orders.

use dg_iae::analysis::{order_regression, ErrorKind};
use dg_iae::problems::{example1, example2};
use dg_iae::Result;

fn main() -> Result<()> {
    let n_list = [4, 8, 16, 32];
    for problem in [example1(), example2()] {
        println!("{}", problem.name);
        for component in 0..2 {
            for kind in [ErrorKind::Global, ErrorKind::Superconv] {
                let rep = order_regression(&problem, 3, &n_list, kind, component)?;
                let errs: Vec<String> = rep.rows.iter().map(|(_, e)| format!("{e:.2e}")).collect();
                println!(
                    "  x{} {kind:<9}: {}  order {:.3}",
                    component + 1,
                    errs.join(" "),
                    rep.final_order().unwrap().value
                );
            }
        }
    }
    Ok(())
}

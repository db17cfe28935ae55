//! Second-kind Volterra equation `y + ∫_0^t e^{t-s} y ds = f` with
//! `y = cos t`: the DG solution converges like `h^m` globally.

use dg_iae::assembly::default_rule;
use dg_iae::solver::{solve_vie2, Mesh};
use dg_iae::Result;

fn main() -> Result<()> {
    let kernel = |t: f64, s: f64| (t - s).exp();
    // ∫_0^t e^{t-s} cos s ds = (e^t + sin t - cos t) / 2
    let f = |t: f64| t.cos() + 0.5 * (t.exp() + t.sin() - t.cos());
    for m in 1..=4 {
        let rule = default_rule(m)?;
        let mut prev: Option<f64> = None;
        print!("m = {m}:");
        for n in [4, 8, 16, 32] {
            let sol = solve_vie2(&kernel, &f, &Mesh::new(1.0, n)?, m, &rule)?;
            let err = (0..=200)
                .map(|i| i as f64 / 200.0)
                .map(|t| (sol.eval(0, t).unwrap() - t.cos()).abs())
                .fold(0.0, f64::max);
            match prev {
                Some(p) => print!("  {err:.2e} ({:.2})", (p / err).log2()),
                None => print!("  {err:.2e}"),
            }
            prev = Some(err);
        }
        println!();
    }
    Ok(())
}

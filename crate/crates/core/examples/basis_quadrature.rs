//! Shifted Legendre basis, Gauss rules and superconvergence points.

use dg_iae::basis::{gauss_rule, legendre_eval, superconv_points, Parity};
use dg_iae::Result;

fn main() -> Result<()> {
    println!("P_j(s) at s = 0.3:");
    for j in 0..6 {
        println!("  P_{j}(0.3) = {:+.6}", legendre_eval(j, 0.3));
    }

    let rule = gauss_rule(5)?;
    println!("\n5-point Gauss rule on [0, 1]:");
    for (x, w) in rule.iter() {
        println!("  node {x:.15}  weight {w:.15}");
    }
    let exact = 1.0 / 10.0;
    let approx = rule.integrate(|s| s.powi(9));
    println!("  int s^9 = {approx:.16} (exact {exact}, error {:.1e})", (approx - exact).abs());

    println!("\nsuperconvergence points:");
    for m in 2..=6 {
        let sp = superconv_points(m)?;
        let which = match sp.parity {
            Parity::Odd => format!("zeros of P'_{}", m + 1),
            Parity::Even => format!("zeros of P'_{m}"),
        };
        let pts: Vec<String> = sp.points.iter().map(|s| format!("{s:.6}")).collect();
        println!("  m = {m} ({which}): {}", pts.join(", "));
    }
    Ok(())
}

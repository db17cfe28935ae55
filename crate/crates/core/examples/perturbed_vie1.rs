//! First-kind Volterra solver with an `O(h^{m1})` data perturbation.
//!
//! The default (resonant) profile attains `min(m, m1 - 2)` for odd `m` and
//! `min(m - 1, m1 - 2)` for even `m`; a smooth perturbation only costs one
//! power of `h`.

use dg_iae::analysis::{perturbation_study, perturbed_expected_order};
use dg_iae::problems::{benchmark_vie1, PerturbationProfile, PerturbationSpec};
use dg_iae::Result;

fn main() -> Result<()> {
    let n_list = [8, 16, 32, 64];
    for profile in [PerturbationProfile::Resonant, PerturbationProfile::Smooth] {
        println!("{profile:?} perturbation");
        for (m, m1) in [(3, 4), (3, 10), (4, 4), (4, 10), (5, 6)] {
            let base = benchmark_vie1().with_perturbation(Some(PerturbationSpec::new(m1).with_profile(profile)));
            let rep = perturbation_study(&base, m, m1, &n_list)?;
            println!(
                "  m = {m}, m1 = {m1:>2}: order {:.3} (bound {})",
                rep.final_order().unwrap().value,
                perturbed_expected_order(m, m1)
            );
        }
    }
    Ok(())
}

// Pilot run, optimal allocation and the telescoping MLMC estimator on the
// synthetic low-rank hierarchy.

use mlcv::mlmc::{allocate_mlmc, oracle_mean, pilot_mlmc, run_mlmc, MlmcOptions};
use mlcv::models::{LevelHierarchy, SyntheticLowRank, SyntheticParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let h = SyntheticLowRank::new(SyntheticParams::default())?;
    let pilot = pilot_mlmc(&h, 100, 1)?;
    for s in &pilot.stats {
        println!(
            "level {}: E[Y] = {:+.4e}, V[Y] = {:.4e}, C = {}",
            s.level, s.mean_y, s.var_y, s.cost
        );
    }

    let exact = h.exact_mean(h.finest_level());
    let reference = oracle_mean(&h, h.finest_level(), 20_000, 99)?;
    println!("exact E[Q_L] = {exact:.6}, 2e4-sample MC = {reference:.6}");
    for eps in [0.05, 0.02, 0.01] {
        let plan = allocate_mlmc(&pilot.variances(), &pilot.costs(), eps)?;
        let run = run_mlmc(&h, &pilot, &plan, MlmcOptions::default())?;
        println!(
            "eps {eps}: N = {:?}, estimate {:.5} (error {:+.1e}), cost {}",
            plan.samples,
            run.estimate,
            run.estimate - exact,
            run.cost
        );
        assert!(run.sampling_error <= eps * eps / 2.0 * 1.0000001);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("MLMC example failed");
}

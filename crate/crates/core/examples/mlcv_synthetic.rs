// Reduced bases, control-variate configuration and the MLCV estimator on
// the synthetic low-rank hierarchy, next to plain MLMC.

use mlcv::mlcv::{build_bases, configure_cv, plan_mlcv, run_mlcv, RankPolicy, DEFAULT_S2};
use mlcv::mlmc::{allocate_mlmc, pilot_mlmc, run_mlmc, MlmcOptions};
use mlcv::models::{LevelHierarchy, SyntheticLowRank, SyntheticParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let h = SyntheticLowRank::new(SyntheticParams::default())?;
    let pilot = pilot_mlmc(&h, 100, 3)?;
    let bases = build_bases(&h, &pilot, &RankPolicy::Fixed { rank: 5 })?;
    let cv = configure_cv(&h, &pilot, &bases, DEFAULT_S2, false)?;
    for c in &cv[1..] {
        println!(
            "level {}: rank {}, rho^2 = {:.6}, N'/N = {:.2}, theta = {:.4}, MSERF = {:.2e}",
            c.level,
            c.rank,
            c.rho2,
            c.multiplier,
            c.theta,
            c.mserf()
        );
    }

    let exact = h.exact_mean(h.finest_level());
    let eps = 0.005;
    let mlmc = run_mlmc(
        &h,
        &pilot,
        &allocate_mlmc(&pilot.variances(), &pilot.costs(), eps)?,
        MlmcOptions::default(),
    )?;
    let plan = plan_mlcv(&pilot, &cv, eps)?;
    let out = run_mlcv(&h, &pilot, &bases, &cv, &plan)?;
    println!("MLMC: estimate {:.6}, cost {}", mlmc.estimate, mlmc.cost);
    println!(
        "MLCV: estimate {:.6}, cost {} (basis {}, Z-bar {}), ratio {:.3}",
        out.result.estimate,
        out.result.cost,
        out.cost_log.basis_cost(),
        out.cost_log.zbar_cost(),
        out.result.cost / mlmc.cost
    );
    println!("exact {exact:.6}");
    assert_eq!(out.result.cost, out.cost_log.total());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("MLCV example failed");
}

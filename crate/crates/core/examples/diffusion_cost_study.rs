// Cost of MC, MLMC and MLCV on the 1D random diffusion problem with
// quadratic cost growth, across a sequence of tolerances.

use mlcv::mlcv::{build_bases, configure_cv, plan_mlcv, planned_cost_log, RankPolicy, DEFAULT_S2};
use mlcv::mlmc::{allocate_mlmc, mc_cost_reference, pilot_mlmc, planned_mlmc_cost};
use mlcv::models::{Diffusion1d, DiffusionParams, Kernel, LevelHierarchy};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let h = Diffusion1d::new(DiffusionParams {
        kernel: Kernel::SquaredExponential {
            variance: 0.3,
            length: 1.0,
        },
        coarse_dofs: 3,
        refinement: 4,
        cost_exponent: 2.0,
        ..Default::default()
    })?;
    let n_p = 300;
    let pilot = pilot_mlmc(&h, n_p, 0)?;
    let bases = build_bases(
        &h,
        &pilot,
        &RankPolicy::FixedPerLevel {
            ranks: vec![3, 10, 10],
        },
    )?;
    let cv = configure_cv(&h, &pilot, &bases, DEFAULT_S2, false)?;
    for c in &cv[1..] {
        println!(
            "level {} (M = {}): rho^2 = {:.4}",
            c.level,
            h.dofs(c.level),
            c.rho2
        );
    }

    let top = h.finest_level();
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>7}",
        "eps", "MC", "MLMC", "MLCV", "ratio"
    );
    for eps in [1e-3, 1e-4, 3e-5, 1e-5] {
        let mc = mc_cost_reference(pilot.stats[top].var_q, h.level_cost(top), eps)?;
        let mlmc = planned_mlmc_cost(
            &h,
            n_p,
            &allocate_mlmc(&pilot.variances(), &pilot.costs(), eps)?,
        );
        let mlcv = planned_cost_log(&h, n_p, &cv, &plan_mlcv(&pilot, &cv, eps)?).total();
        println!(
            "{eps:>8.0e} {mc:>12.4e} {mlmc:>12.4e} {mlcv:>12.4e} {:>7.3}",
            mlcv / mlmc
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("diffusion cost study failed");
}

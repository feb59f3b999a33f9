// Fitted decay rates α, β, γ from pilot statistics of the diffusion
// hierarchy, and the extrapolated bias check.

use mlcv::mlmc::{bias_check, fit_rates, pilot_mlmc, power_law_fit};
use mlcv::models::{Diffusion1d, DiffusionParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let m = [16.0, 32.0, 64.0, 128.0];
    let v: Vec<f64> = m.iter().map(|x: &f64| 3.0 * x.powf(-1.7)).collect();
    let fit = power_law_fit(&m, &v)?;
    println!("exact power law: slope {:.12}", fit.slope);

    let h = Diffusion1d::new(DiffusionParams::default())?;
    let pilot = pilot_mlmc(&h, 500, 0)?;
    let rates = fit_rates(&pilot.stats)?;
    println!(
        "diffusion: alpha = {:.3}, beta = {:.3}, gamma = {:.3}",
        rates.alpha, rates.beta, rates.gamma
    );
    for eps in [1e-3, 1e-4, 1e-5] {
        if let Some(b) = bias_check(&pilot.stats, rates.alpha, eps) {
            let verdict = if b.ok { "within" } else { "exceeds" };
            println!(
                "eps {eps:e}: bias {:.2e} {verdict} budget {:.2e}",
                b.extrapolated, b.budget
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("rate fit example failed");
}

// Karhunen-Loève expansion of a squared-exponential covariance and a
// few field realizations.

use mlcv::models::{kl_decompose, uniform_grid, Kernel};
use mlcv::rng::{draw_input, Distribution, Purpose, StreamKey};
use std::sync::Arc;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::SquaredExponential {
        variance: 1.0,
        length: 0.1,
    };
    let field = kl_decompose(kernel, &uniform_grid(201), 12)?;
    let captured: f64 = field.eigenvalues.iter().sum::<f64>() / field.trace;
    println!("leading eigenvalues: {:.4?}", &field.eigenvalues[..5]);
    println!("12 modes capture {:.2}% of the variance", 100.0 * captured);

    let law: Arc<[Distribution]> = vec![Distribution::StandardGaussian; field.modes()].into();
    for i in 0..3 {
        let xi = draw_input(&StreamKey::new(42, Purpose::Oracle, i), &law)?;
        let g = field.sample_field(xi.as_slice())?;
        let (lo, hi) = g
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        println!(
            "realization {i}: min {lo:+.3}, max {hi:+.3}, g(0.5) = {:+.3}",
            g[100]
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("KL example failed");
}

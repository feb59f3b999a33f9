// Counter-based input streams: any sample is regenerated from its key,
// whatever the thread count.

use mlcv::mlmc::pilot_mlmc;
use mlcv::models::{SyntheticLowRank, SyntheticParams};
use mlcv::rng::{draw_input, Distribution, Purpose, StreamKey};
use std::sync::Arc;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let law: Arc<[Distribution]> = vec![
        Distribution::StandardGaussian,
        Distribution::uniform(0.0, 2.0)?,
    ]
    .into();
    for purpose in [Purpose::Pilot(1), Purpose::MainY(1), Purpose::Zbar(1)] {
        let xi = draw_input(&StreamKey::new(2024, purpose, 17), &law)?;
        println!("{purpose:?} sample 17: {:?}", xi.values);
    }
    let a = draw_input(&StreamKey::new(2024, Purpose::Oracle, 5), &law)?;
    let b = draw_input(&StreamKey::new(2024, Purpose::Oracle, 5), &law)?;
    assert_eq!(a, b);

    let h = SyntheticLowRank::new(SyntheticParams::default())?;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build()?;
    let p1 = one.install(|| pilot_mlmc(&h, 500, 8))?;
    let p4 = four.install(|| pilot_mlmc(&h, 500, 8))?;
    assert_eq!(p1.stats, p4.stats);
    println!(
        "pilot statistics identical on 1 and 4 threads: V[Y_2] = {:e}",
        p1.stats[2].var_y
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("stream example failed");
}

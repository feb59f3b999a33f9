// A study driven by a JSON config, as the `mlcv` binary runs it: pilot,
// estimate and compare, with artifacts written to a scratch directory.

use mlcv::driver::{cmd_compare, cmd_estimate, cmd_pilot, Overrides, RunConfig};

const CONFIG: &str = r#"{
    "schema_version": 1,
    "model": {"kind": "synthetic_low_rank", "levels": 3},
    "epsilons": [0.02, 0.01],
    "methods": ["mlmc", "mlcv"],
    "rank_policy": {"kind": "tolerance", "tolerance": 1e-6},
    "pilot_samples": 60
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join(format!("mlcv-example-{}", std::process::id()));
    let mut config = RunConfig::from_json(CONFIG, "inline")?;
    config.apply(&Overrides {
        seed: Some(11),
        out_dir: Some(out.clone()),
        threads: Some(2),
    })?;

    let pilot = cmd_pilot(&config)?;
    println!(
        "pilot ranks: {:?}",
        pilot.levels.iter().map(|l| l.rank).collect::<Vec<_>>()
    );
    for r in cmd_estimate(&config, None)? {
        println!(
            "{:>4} eps {}: {:.6} at cost {}",
            r.method.as_str(),
            r.epsilon,
            r.totals.estimate,
            r.totals.cost
        );
    }
    for row in cmd_compare(&config)? {
        println!("eps {}: MLCV/MLMC = {:.3}", row.epsilon, row.ratio);
    }
    let mut files: Vec<String> = std::fs::read_dir(&out)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("artifacts: {files:?}");
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("config example failed");
}

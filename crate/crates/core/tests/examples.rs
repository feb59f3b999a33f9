mod interpolative_decomposition {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/interpolative_decomposition.rs"
    ));
}

#[test]
fn interpolative_decomposition_example_runs() {
    interpolative_decomposition::run_example()
        .expect("interpolative_decomposition example should run");
}

mod kl_field {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/kl_field.rs"));
}

#[test]
fn kl_field_example_runs() {
    kl_field::run_example().expect("kl_field example should run");
}

mod mlmc_synthetic {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/mlmc_synthetic.rs"
    ));
}

#[test]
fn mlmc_synthetic_example_runs() {
    mlmc_synthetic::run_example().expect("mlmc_synthetic example should run");
}

mod mlcv_synthetic {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/mlcv_synthetic.rs"
    ));
}

#[test]
fn mlcv_synthetic_example_runs() {
    mlcv_synthetic::run_example().expect("mlcv_synthetic example should run");
}

mod diffusion_cost_study {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/diffusion_cost_study.rs"
    ));
}

#[test]
fn diffusion_cost_study_example_runs() {
    diffusion_cost_study::run_example().expect("diffusion_cost_study example should run");
}

mod reproducible_streams {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/reproducible_streams.rs"
    ));
}

#[test]
fn reproducible_streams_example_runs() {
    reproducible_streams::run_example().expect("reproducible_streams example should run");
}

mod rate_fits {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/rate_fits.rs"
    ));
}

#[test]
fn rate_fits_example_runs() {
    rate_fits::run_example().expect("rate_fits example should run");
}

mod cli_config {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/cli_config.rs"
    ));
}

#[test]
fn cli_config_example_runs() {
    cli_config::run_example().expect("cli_config example should run");
}

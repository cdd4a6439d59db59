//! Regenerates `data/sample_data.csv`: 60 days of the vaccinated
//! compartment under the `n = 1` estimates with 0.5% uniform noise, seed 42.
//!
//! `cargo run --example synthesize_sample_data [-- out.csv]`

use epidemio::calibration::synthesize_observations;
use epidemio::{ModelParams, StateVector};

pub const SEED: u64 = 42;
pub const NOISE: f64 = 0.005;
pub const DAYS: u32 = 60;

fn main() -> epidemio::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_data.csv").to_string());
    let series = synthesize_observations(
        &ModelParams::estimated_n1(),
        &StateVector::calibration_initial(),
        DAYS,
        NOISE,
        SEED,
    )?;
    series.write_csv(&path)?;
    println!("{} observations written to {path}", series.len());
    Ok(())
}

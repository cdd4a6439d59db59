//! Fits the seven transmission and progression rates to the bundled
//! vaccinated-count series, starting 20% away from the generating values.

use epidemio::calibration::{fit, FitConfig, ObservedSeries, Problem};
use epidemio::{ModelParams, StateVector};

fn main() -> epidemio::Result<()> {
    let data_dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let data = ObservedSeries::read_csv(format!("{data_dir}/sample_data.csv"))?;
    let config: FitConfig = epidemio::io::read_json(format!("{data_dir}/fit_config.json"))?;
    let truth = ModelParams::estimated_n1();

    let problem = Problem {
        base: truth,
        free: &config.free,
        init: StateVector::calibration_initial(),
        data: &data,
        observable: config.observable,
    };
    let guess = config.initial_guess(&truth);
    let result = fit(&problem, &guess, &config.options())?;

    println!(
        "{:?} after {} iterations: objective {:.4e} -> {:.4e}",
        result.status, result.iterations, result.initial_objective, result.objective
    );
    println!("{:>8} {:>12} {:>12} {:>12}", "param", "guess", "fitted", "generating");
    for (name, g) in config.free.iter().zip(&guess) {
        println!(
            "{:>8} {:>12.5e} {:>12.5e} {:>12.5e}",
            name.as_str(),
            g,
            result.fitted[name],
            truth.get(*name)
        );
    }
    Ok(())
}

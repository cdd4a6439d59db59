//! 300-day outbreak with the illustrative parameter set.
//!
//! `cargo run --example simulate_outbreak [-- out.csv]`

use epidemio::integrator::{integrate, write_trajectory_csv, Tolerances};
use epidemio::model::total_population;
use epidemio::{ModelParams, StateVector};

fn main() -> epidemio::Result<()> {
    let params = ModelParams::illustrative();
    let traj = integrate(&params, &StateVector::outbreak_initial(), 300.0, 1.0, Tolerances::default())?;

    let infected = traj.series(2);
    let (peak_day, peak) = infected
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    println!("infectious peak: {peak:.0} on day {peak_day}");
    for day in [0, 50, 100, 200, 300] {
        let s = traj.at(day as f64);
        println!(
            "day {day:>3}  S={:>12.0} I={:>12.0} V={:>12.0} R={:>12.0} N={:>12.0}",
            s.s,
            s.i,
            s.v,
            s.r,
            total_population(s)
        );
    }

    if let Some(path) = std::env::args().nth(1) {
        write_trajectory_csv(&traj, &path)?;
        println!("trajectory written to {path}");
    }
    Ok(())
}

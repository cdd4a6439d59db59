//! The adaptive integrator on its own, applied to a predator-prey system
//! whose first integral should stay constant.

use epidemio::integrator::{solve, Tolerances};

fn main() -> epidemio::Result<()> {
    let (a, b, c, d) = (1.1, 0.4, 0.4, 0.1);
    let invariant = |x: &[f64; 2]| d * x[0] - c * x[0].ln() + b * x[1] - a * x[1].ln();

    let sol = solve(
        |_, x: &[f64; 2]| [a * x[0] - b * x[0] * x[1], d * x[0] * x[1] - c * x[1]],
        [10.0, 10.0],
        100.0,
        10.0,
        Tolerances::default(),
        Some(&["prey", "predator"]),
    )?;
    let h0 = invariant(&sol.states[0]);
    for (t, x) in sol.times.iter().zip(&sol.states) {
        println!("t={t:>5}  prey={:>9.4} predator={:>9.4}  drift={:+.2e}", x[0], x[1], invariant(x) - h0);
    }
    println!("{} accepted steps, {} rejected", sol.steps, sol.rejected);
    Ok(())
}

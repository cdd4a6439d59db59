//! Direction of the transcritical bifurcation at R0 = 1 for several Hill
//! exponents, and a scan of the equilibria in beta.

use epidemio::bifurcation::{bifurcation_report, bifurcation_scan};
use epidemio::ModelParams;

fn main() -> epidemio::Result<()> {
    let base = ModelParams::estimated_n2();
    for n in 1..=3 {
        let rep = bifurcation_report(&base.with_n(n))?;
        println!(
            "n={n}: beta*={:.6e} a={:+.3e} b={:.3e} backward condition={} -> {:?}",
            rep.beta_star, rep.a, rep.b, rep.backward, rep.regime
        );
    }

    let beta_star = bifurcation_report(&base)?.beta_star;
    let rows = bifurcation_scan(&base, (0.8 * beta_star, 1.2 * beta_star), 21)?;
    println!("\n{:>12} {:>8}  endemic I", "beta", "R0");
    for row in rows {
        let roots: Vec<String> = row
            .endemic
            .iter()
            .map(|e| format!("{:.2}({})", e.i_root, e.stable_hint().as_str()))
            .collect();
        println!("{:>12.5e} {:>8.4}  {}", row.beta, row.r0, roots.join(", "));
    }
    Ok(())
}

//! Disease-free state, next-generation matrices and the threshold R0 for
//! the bundled parameter sets.

use epidemio::equilibria::{dr0_dsigma_sign, equilibrium_report, R0Parts};
use epidemio::ModelParams;

fn main() -> epidemio::Result<()> {
    let sets = [
        ("illustrative", ModelParams::illustrative()),
        ("estimated n=1", ModelParams::estimated_n1()),
        ("estimated n=2", ModelParams::estimated_n2()),
    ];
    for (label, params) in sets {
        let rep = equilibrium_report(&params)?;
        println!("{label}");
        println!("  DFS: S={:.1} V={:.1} R={:.1}", rep.dfs.s, rep.dfs.v, rep.dfs.r);
        println!("  R0 = {:.6} ({})", rep.r0, rep.verdict.as_str());
        println!("  max Re(eig) of J(DFS) = {:.3e}", rep.dominant_eig_real);
        println!(
            "  Routh-Hurwitz: a1={:.3e} a2={:.3e} a3={:.3e} stable={}",
            rep.routh_hurwitz.a1, rep.routh_hurwitz.a2, rep.routh_hurwitz.a3, rep.routh_hurwitz.stable_block
        );

        let parts = R0Parts::of(&params);
        let effect = dr0_dsigma_sign(&params);
        println!(
            "  dR0/dsigma sign {} (BE-CD = {:.3e}); R0 at 2 sigma = {:.6}",
            effect.sign,
            effect.be_minus_cd,
            parts.r0_at(2.0 * params.sigma)
        );
    }
    Ok(())
}

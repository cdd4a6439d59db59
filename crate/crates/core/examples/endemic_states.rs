//! Endemic equilibria just below the threshold when the bifurcation is
//! backward: a small unstable state and a large stable one.

use epidemio::bifurcation::{beta_star, endemic_steady_states};
use epidemio::equilibria::r0;
use epidemio::{ModelParams, ParamName};

fn main() -> epidemio::Result<()> {
    let base = ModelParams::estimated_n2();
    let critical = beta_star(&base).expect("threshold exists for the bundled parameters");
    for factor in [0.95, 0.999, 1.001, 1.05] {
        let params = base.with(ParamName::Beta, factor * critical);
        let states = endemic_steady_states(&params)?;
        println!("beta = {factor} beta*  (R0 = {:.4}): {} endemic state(s)", r0(&params), states.len());
        for e in states {
            let s = e.state;
            println!(
                "  I={:<12.4} S={:.0} E={:.2} V={:.0} C={:.2}  max Re(eig)={:+.3e} residual={:.1e}",
                s.i, s.s, s.e, s.v, s.c, e.max_real_eig, e.residual
            );
        }
    }
    Ok(())
}

//! Elasticities of R0 for both estimated parameter sets, largest first.

use epidemio::sensitivity::sensitivity_table;
use epidemio::ModelParams;

fn main() -> epidemio::Result<()> {
    for params in [ModelParams::estimated_n1(), ModelParams::estimated_n2()] {
        let table = sensitivity_table(&params)?;
        println!("n = {}", table.n);
        for e in table.tornado() {
            let bar = "#".repeat((e.index.abs() * 40.0).round() as usize);
            println!("  {:>8} {:+.7} {bar}", e.parameter.as_str(), e.index);
        }
    }
    Ok(())
}

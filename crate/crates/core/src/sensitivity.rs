//! Normalized sensitivity (elasticity) of R0 to each parameter.

use std::path::Path;

use serde::Serialize;

use crate::equilibria::{dfs_denominator, kronecker_n1, r0};
use crate::error::{Error, Result};
use crate::io::write_atomically;
use crate::params::{ModelParams, ParamName};

/// Relative step of the central difference.
pub const RELATIVE_STEP: f64 = 1e-6;
/// Largest accepted change of an index when the step is halved.
pub const RICHARDSON_TOL: f64 = 1e-8;

/// Core parameters, in reporting order.
pub const TABLE_PARAMETERS: [ParamName; 10] = [
    ParamName::Beta,
    ParamName::Epsilon,
    ParamName::TPrime,
    ParamName::LambdaV,
    ParamName::D,
    ParamName::Alpha1,
    ParamName::Alpha2,
    ParamName::Xi,
    ParamName::Delta,
    ParamName::Sigma,
];

/// Extra parameters appended to the table.
pub const EXTRA_PARAMETERS: [ParamName; 5] = [
    ParamName::Lambda,
    ParamName::Mu,
    ParamName::Phi,
    ParamName::Omega,
    ParamName::Kappa,
];

fn central_index(params: &ModelParams, name: ParamName, base: f64, rel_step: f64) -> f64 {
    let x = params.get(name);
    let h = rel_step * x.abs();
    let up = r0(&params.with(name, x + h));
    let down = r0(&params.with(name, x - h));
    x / base * (up - down) / (2.0 * h)
}

/// `(P / R0) dR0/dP` by central differences.
pub fn sensitivity_index(params: &ModelParams, name: ParamName) -> Result<f64> {
    let base = r0(params);
    if base == 0.0 || !base.is_finite() {
        return Err(Error::UndefinedIndex);
    }
    if params.get(name) == 0.0 {
        return Ok(0.0);
    }
    let coarse = central_index(params, name, base, RELATIVE_STEP);
    let fine = central_index(params, name, base, RELATIVE_STEP / 2.0);
    if (coarse - fine).abs() > RICHARDSON_TOL {
        log::warn!(
            "sensitivity of R0 to {name}: step halving moved the index by {:e}",
            (coarse - fine).abs()
        );
    }
    Ok(fine)
}

/// Like [`sensitivity_index`] but taking the parameter by its JSON key.
pub fn sensitivity_index_by_name(params: &ModelParams, name: &str) -> Result<f64> {
    sensitivity_index(params, name.parse()?)
}

/// Closed-form index for parameters entering R0 in a simple way.
/// `None` for the rest (`Lambda` is exactly 1 and also covered).
pub fn analytic_index(params: &ModelParams, name: ParamName) -> Option<f64> {
    let p = params;
    let k = kronecker_n1(p);
    let env = p.phi / (p.omega * p.kappa);
    let vacc_ratio = p.sigma / (p.t_prime + p.mu);
    let force = (p.beta + k * p.alpha1 * env) + (p.epsilon + k * p.alpha2 * env) * vacc_ratio;
    let d3 = p.mu + p.delta + p.d;
    let value = match name {
        ParamName::Lambda => 1.0,
        ParamName::Beta => p.beta / force,
        ParamName::Epsilon => p.epsilon * vacc_ratio / force,
        ParamName::Alpha1 => k * p.alpha1 * env / force,
        ParamName::Alpha2 => k * p.alpha2 * env * vacc_ratio / force,
        ParamName::Delta => -p.delta / d3,
        ParamName::D => -p.d / d3,
        ParamName::Xi => p.mu / (p.xi + p.mu),
        ParamName::LambdaV => -p.lambda_v * p.t_prime * p.sigma / dfs_denominator(p),
        _ => return None,
    };
    Some(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityEntry {
    pub parameter: ParamName,
    pub index: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityTable {
    pub entries: Vec<SensitivityEntry>,
    pub n: u32,
    pub params: ModelParams,
}

impl SensitivityTable {
    pub fn get(&self, name: ParamName) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.parameter == name)
            .map(|e| e.index)
    }

    /// Entries ordered by decreasing `|index|`.
    pub fn tornado(&self) -> Vec<SensitivityEntry> {
        let mut sorted = self.entries.clone();
        sorted.sort_by(|a, b| b.index.abs().total_cmp(&a.index.abs()));
        sorted
    }

    /// `parameter,index` rows in table order.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomically(path.as_ref(), |w| {
            writeln!(w, "parameter,index")?;
            for e in &self.entries {
                writeln!(w, "{},{}", e.parameter, e.index)?;
            }
            Ok(())
        })
    }

    /// `rank,parameter,index,abs_index` rows sorted by magnitude.
    pub fn write_tornado_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomically(path.as_ref(), |w| {
            writeln!(w, "rank,parameter,index,abs_index")?;
            for (rank, e) in self.tornado().iter().enumerate() {
                writeln!(w, "{},{},{},{}", rank + 1, e.parameter, e.index, e.index.abs())?;
            }
            Ok(())
        })
    }
}

pub fn sensitivity_table(params: &ModelParams) -> Result<SensitivityTable> {
    let entries = TABLE_PARAMETERS
        .iter()
        .chain(EXTRA_PARAMETERS.iter())
        .map(|&parameter| {
            Ok(SensitivityEntry {
                parameter,
                index: sensitivity_index(params, parameter)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityTable {
        entries,
        n: params.n,
        params: *params,
    })
}

//! State vector, environmental response function and the model vector field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

pub const COMPARTMENTS: [&str; 6] = ["S", "E", "I", "V", "R", "C"];

/// Population counts and environmental virus concentration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateVector {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl StateVector {
    pub fn new(s: f64, e: f64, i: f64, v: f64, r: f64, c: f64) -> Self {
        StateVector { s, e, i, v, r, c }
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        StateVector::new(x[0], x[1], x[2], x[3], x[4], x[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.s, self.e, self.i, self.v, self.r, self.c]
    }

    /// Euclidean norm over all six components.
    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Initial data of the 300-day outbreak run. `C` is not given there
    /// and starts at zero.
    pub fn outbreak_initial() -> Self {
        StateVector::new(61_098_000.0, 2_200_000.0, 1_200_000.0, 18_500_000.0, 2000.0, 0.0)
    }

    /// Initial data of the vaccination-series runs. `I` is not given there;
    /// the outbreak value of 1.2 million is used.
    pub fn calibration_initial() -> Self {
        StateVector::new(
            61_098_000.0,
            2_200_000.0,
            1_200_000.0,
            18_500_000.0,
            2000.0,
            20_000.0,
        )
    }

    fn check_finite(&self) -> Result<()> {
        for (name, x) in COMPARTMENTS.iter().zip(self.to_array()) {
            if !x.is_finite() {
                return Err(Error::InvalidState(format!("{name} = {x}")));
            }
        }
        Ok(())
    }
}

/// Total living population `S + E + I + V + R`; `C` is not a head count.
pub fn total_population(state: &StateVector) -> f64 {
    state.s + state.e + state.i + state.v + state.r
}

/// Hill-type response `C^n / (C^n + kappa)`.
pub fn response_g(c: f64, kappa: f64, n: u32) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("{kappa} must be positive"),
        });
    }
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "Hill exponent must be at least 1".into(),
        });
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidState(format!("concentration {c} is negative")));
    }
    Ok(g(c, kappa, n))
}

pub(crate) fn g(c: f64, kappa: f64, n: u32) -> f64 {
    // every rounding step here is monotone in c, unlike cn / (cn + kappa)
    1.0 / (1.0 + kappa / c.abs().powi(n as i32))
}

/// dg/dC.
pub(crate) fn g_prime(c: f64, kappa: f64, n: u32) -> f64 {
    let cn = c.powi(n as i32);
    if !cn.is_finite() {
        return 0.0;
    }
    let denom = cn + kappa;
    n as f64 * kappa * c.powi(n as i32 - 1) / (denom * denom)
}

/// dg/dC at C = 0.
pub(crate) fn g_prime_at_zero(kappa: f64, n: u32) -> f64 {
    if n == 1 {
        1.0 / kappa
    } else {
        0.0
    }
}

/// d²g/dC² at C = 0.
pub(crate) fn g_second_at_zero(kappa: f64, n: u32) -> f64 {
    match n {
        1 => -2.0 / (kappa * kappa),
        2 => 2.0 / kappa,
        _ => 0.0,
    }
}

/// Vector field on raw arrays, no input checks. Hot path for the integrator.
pub(crate) fn vector_field(x: &[f64; 6], p: &ModelParams) -> [f64; 6] {
    let [s, e, i, v, r, c] = *x;
    let gc = g(c, p.kappa, p.n);
    let contact_s = p.beta * s * i;
    let contact_v = p.epsilon * i * v;
    let env_s = p.alpha1 * s * gc;
    let env_v = p.alpha2 * v * gc;
    [
        p.recruitment - contact_s - p.sigma * s + (1.0 - p.lambda_v) * p.t_prime * v - env_s
            - p.mu * s,
        contact_s + contact_v - (p.xi + p.mu) * e + env_s + env_v,
        p.xi * e - (p.delta + p.d + p.mu) * i,
        p.sigma * s - contact_v - (p.t_prime + p.mu) * v - env_v,
        p.delta * i - p.mu * r + p.lambda_v * p.t_prime * v,
        p.phi * i - p.omega * c,
    ]
}

/// Time derivative of `(S, E, I, V, R, C)`.
pub fn rhs(state: &StateVector, params: &ModelParams) -> Result<[f64; 6]> {
    state.check_finite()?;
    Ok(vector_field(&state.to_array(), params))
}

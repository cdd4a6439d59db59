//! Model parameters and their JSON representation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The fifteen rates of the model plus the Hill exponent of the
/// environmental response function.
///
/// Values are plain data; analysis routines never mutate a parameter set,
/// they derive modified copies through [`ModelParams::with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Recruitment rate (individuals/day).
    #[serde(rename = "Lambda")]
    pub recruitment: f64,
    /// Direct contact transmission rate (1/(individuals·day)).
    pub beta: f64,
    /// Vaccination rate of susceptibles (1/day).
    pub sigma: f64,
    /// Probability that a vaccination is successful.
    pub lambda_v: f64,
    /// Exit rate from the vaccinated class (1/day).
    pub t_prime: f64,
    /// Environmental transmission rate to susceptibles (1/day).
    pub alpha1: f64,
    /// Environmental transmission rate to vaccinated individuals (1/day).
    pub alpha2: f64,
    /// Contact transmission rate to vaccinated individuals (1/(individuals·day)).
    pub epsilon: f64,
    /// Natural mortality (1/day).
    pub mu: f64,
    /// Symptom development rate (1/day).
    pub xi: f64,
    /// Recovery rate (1/day).
    pub delta: f64,
    /// Disease-induced fatality (1/day).
    pub d: f64,
    /// Virus shedding rate (copies/(individual·day)).
    pub phi: f64,
    /// Virus decay rate (1/day).
    pub omega: f64,
    /// Half-saturation constant of the response function (copies^n).
    pub kappa: f64,
    /// Hill exponent.
    pub n: u32,
}

/// Soft-constraint violation; the parameter set is still usable.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamWarning {
    /// `epsilon > beta`: vaccinated individuals more susceptible to contact than susceptibles.
    EpsilonExceedsBeta { epsilon: f64, beta: f64 },
    /// `alpha2 > alpha1`: same, for the environmental route.
    Alpha2ExceedsAlpha1 { alpha2: f64, alpha1: f64 },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::EpsilonExceedsBeta { epsilon, beta } => write!(
                f,
                "epsilon ({epsilon:e}) exceeds beta ({beta:e}); vaccinated individuals are assumed no more susceptible"
            ),
            ParamWarning::Alpha2ExceedsAlpha1 { alpha2, alpha1 } => write!(
                f,
                "alpha2 ({alpha2:e}) exceeds alpha1 ({alpha1:e}); vaccinated individuals are assumed no more susceptible"
            ),
        }
    }
}

/// Identifier for one real-valued field of [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ParamName {
    Lambda,
    Beta,
    Sigma,
    LambdaV,
    TPrime,
    Alpha1,
    Alpha2,
    Epsilon,
    Mu,
    Xi,
    Delta,
    D,
    Phi,
    Omega,
    Kappa,
}

impl ParamName {
    pub const ALL: [ParamName; 15] = [
        ParamName::Lambda,
        ParamName::Beta,
        ParamName::Sigma,
        ParamName::LambdaV,
        ParamName::TPrime,
        ParamName::Alpha1,
        ParamName::Alpha2,
        ParamName::Epsilon,
        ParamName::Mu,
        ParamName::Xi,
        ParamName::Delta,
        ParamName::D,
        ParamName::Phi,
        ParamName::Omega,
        ParamName::Kappa,
    ];

    /// The JSON key for this field.
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Lambda => "Lambda",
            ParamName::Beta => "beta",
            ParamName::Sigma => "sigma",
            ParamName::LambdaV => "lambda_v",
            ParamName::TPrime => "t_prime",
            ParamName::Alpha1 => "alpha1",
            ParamName::Alpha2 => "alpha2",
            ParamName::Epsilon => "epsilon",
            ParamName::Mu => "mu",
            ParamName::Xi => "xi",
            ParamName::Delta => "delta",
            ParamName::D => "d",
            ParamName::Phi => "phi",
            ParamName::Omega => "omega",
            ParamName::Kappa => "kappa",
        }
    }

    /// Rates carry a 1/time unit and scale together under a change of time unit.
    pub fn is_rate(self) -> bool {
        !matches!(self, ParamName::LambdaV | ParamName::Kappa)
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

impl TryFrom<String> for ParamName {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ParamName> for String {
    fn from(p: ParamName) -> String {
        p.as_str().to_string()
    }
}

impl ModelParams {
    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::Lambda => self.recruitment,
            ParamName::Beta => self.beta,
            ParamName::Sigma => self.sigma,
            ParamName::LambdaV => self.lambda_v,
            ParamName::TPrime => self.t_prime,
            ParamName::Alpha1 => self.alpha1,
            ParamName::Alpha2 => self.alpha2,
            ParamName::Epsilon => self.epsilon,
            ParamName::Mu => self.mu,
            ParamName::Xi => self.xi,
            ParamName::Delta => self.delta,
            ParamName::D => self.d,
            ParamName::Phi => self.phi,
            ParamName::Omega => self.omega,
            ParamName::Kappa => self.kappa,
        }
    }

    /// Copy of `self` with one field replaced.
    #[must_use]
    pub fn with(&self, name: ParamName, value: f64) -> ModelParams {
        let mut p = *self;
        let slot = match name {
            ParamName::Lambda => &mut p.recruitment,
            ParamName::Beta => &mut p.beta,
            ParamName::Sigma => &mut p.sigma,
            ParamName::LambdaV => &mut p.lambda_v,
            ParamName::TPrime => &mut p.t_prime,
            ParamName::Alpha1 => &mut p.alpha1,
            ParamName::Alpha2 => &mut p.alpha2,
            ParamName::Epsilon => &mut p.epsilon,
            ParamName::Mu => &mut p.mu,
            ParamName::Xi => &mut p.xi,
            ParamName::Delta => &mut p.delta,
            ParamName::D => &mut p.d,
            ParamName::Phi => &mut p.phi,
            ParamName::Omega => &mut p.omega,
            ParamName::Kappa => &mut p.kappa,
        };
        *slot = value;
        p
    }

    #[must_use]
    pub fn with_n(&self, n: u32) -> ModelParams {
        ModelParams { n, ..*self }
    }

    /// Checks hard invariants and returns the soft-constraint warnings.
    pub fn validate(&self) -> Result<Vec<ParamWarning>> {
        for name in ParamName::ALL {
            let value = self.get(name);
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: name.as_str(),
                    reason: format!("{value} is not finite"),
                });
            }
            let may_be_zero = matches!(
                name,
                ParamName::Alpha1 | ParamName::Alpha2 | ParamName::Sigma | ParamName::D
            );
            if name == ParamName::LambdaV {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::InvalidParameter {
                        name: name.as_str(),
                        reason: format!("{value} is outside [0, 1]"),
                    });
                }
            } else if may_be_zero && value < 0.0 {
                return Err(Error::InvalidParameter {
                    name: name.as_str(),
                    reason: format!("{value} is negative"),
                });
            } else if !may_be_zero && value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: name.as_str(),
                    reason: format!("{value} must be strictly positive"),
                });
            }
        }
        if self.n < 1 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "Hill exponent must be at least 1".into(),
            });
        }

        let mut warnings = Vec::new();
        if self.epsilon > self.beta {
            warnings.push(ParamWarning::EpsilonExceedsBeta {
                epsilon: self.epsilon,
                beta: self.beta,
            });
        }
        if self.alpha2 > self.alpha1 {
            warnings.push(ParamWarning::Alpha2ExceedsAlpha1 {
                alpha2: self.alpha2,
                alpha1: self.alpha1,
            });
        }
        Ok(warnings)
    }

    /// Parses and validates a JSON parameter document.
    pub fn from_json_str(text: &str) -> std::result::Result<(ModelParams, Vec<ParamWarning>), ParseError> {
        let params: ModelParams = serde_json::from_str(text).map_err(ParseError::Json)?;
        let warnings = params.validate().map_err(ParseError::Invalid)?;
        Ok((params, warnings))
    }

    /// Illustrative epidemic parameters (Michaelis–Menten response) used for
    /// the 300-day outbreak simulation.
    pub fn illustrative() -> ModelParams {
        ModelParams {
            recruitment: 3032.0,
            beta: 0.15e-8,
            sigma: 0.01,
            lambda_v: 0.8,
            t_prime: 1.0 / 120.0,
            alpha1: 0.01,
            alpha2: 0.01,
            epsilon: 0.15e-8,
            mu: 3.653e-5,
            xi: 0.125,
            delta: 0.06,
            d: 0.02,
            phi: 2.0,
            omega: 4.0,
            kappa: 20000.0,
            n: 1,
        }
    }

    /// Parameters estimated from the vaccination series with `n = 1`.
    pub fn estimated_n1() -> ModelParams {
        ModelParams {
            recruitment: 3032.0,
            beta: 1.0257e-8,
            sigma: 0.02136,
            lambda_v: 0.8,
            t_prime: 0.0055,
            alpha1: 0.00041,
            alpha2: 0.00031,
            epsilon: 1e-8,
            mu: 3.653e-5,
            xi: 0.01004,
            delta: 0.19999,
            d: 0.1,
            phi: 2.0,
            omega: 5.0,
            kappa: 20000.0,
            n: 1,
        }
    }

    /// Parameters estimated from the vaccination series with `n = 2`.
    pub fn estimated_n2() -> ModelParams {
        ModelParams {
            beta: 1.004e-8,
            sigma: 0.02126,
            alpha1: 0.0001,
            alpha2: 0.0001,
            xi: 0.01133,
            delta: 0.2,
            n: 2,
            ..ModelParams::estimated_n1()
        }
    }
}

/// Failure to turn a JSON document into a valid parameter set.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Json(serde_json::Error),
    #[error(transparent)]
    Invalid(Error),
}

/// Reads a parameter file, returning the parameters and any soft warnings.
pub fn load_params(path: impl AsRef<Path>) -> Result<(ModelParams, Vec<ParamWarning>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelParams::from_json_str(&text).map_err(|e| match e {
        ParseError::Json(source) => Error::Json {
            path: path.to_path_buf(),
            source,
        },
        ParseError::Invalid(err) => err,
    })
}

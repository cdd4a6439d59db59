//! Least-squares calibration of transmission and progression rates against an
//! observed vaccinated-count series.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, Tolerances};
use crate::io::write_atomically;
use crate::model::StateVector;
use crate::params::{ModelParams, ParamName};

/// Parameters fitted unless configured otherwise.
pub const DEFAULT_FREE: [ParamName; 7] = [
    ParamName::Beta,
    ParamName::Epsilon,
    ParamName::Alpha1,
    ParamName::Alpha2,
    ParamName::Xi,
    ParamName::Delta,
    ParamName::Sigma,
];

/// Forward-difference step in log-parameter space.
pub const JACOBIAN_STEP: f64 = 1e-6;
pub const REL_DECREASE_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-8;
/// Residual norm, relative to the data norm, treated as an exact fit.
pub const EXACT_FIT_TOL: f64 = 1e-12;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
const LAMBDA_MIN: f64 = 1e-12;

/// Observed vaccinated counts by day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSeries {
    pub day_index: Vec<u32>,
    pub vaccinated: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    day: u32,
    vaccinated: f64,
}

impl ObservedSeries {
    /// Builds a series from `(day, count)` pairs in any order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.is_empty() {
            return Err(Error::Domain("observed series is empty".into()));
        }
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Domain(format!("day {} appears twice", w[0].0)));
            }
        }
        if let Some((day, x)) = pairs.iter().find(|p| !(p.1 >= 0.0) || !p.1.is_finite()) {
            return Err(Error::Domain(format!("day {day}: count {x} must be finite and nonnegative")));
        }
        Ok(ObservedSeries {
            day_index: pairs.iter().map(|p| p.0).collect(),
            vaccinated: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.day_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.day_index.is_empty()
    }

    pub fn last_day(&self) -> u32 {
        self.day_index.last().copied().unwrap_or(0)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.day_index.iter().copied().zip(self.vaccinated.iter().copied())
    }

    /// Reads a `day,vaccinated` CSV.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = reader.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["day", "vaccinated"] {
            return Err(Error::Domain(format!(
                "{}: expected header `day,vaccinated`",
                path.display()
            )));
        }
        let rows = reader
            .deserialize::<CsvRow>()
            .map(|r| r.map(|row| (row.day, row.vaccinated)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(csv_err)?;
        Self::from_pairs(rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomically(path.as_ref(), |w| {
            writeln!(w, "day,vaccinated")?;
            for (day, x) in self.pairs() {
                writeln!(w, "{day},{x}")?;
            }
            Ok(())
        })
    }
}

/// What the observed counts are compared with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// The level `V(t)`.
    #[default]
    Cumulative,
    /// The one-day change `V(t) - V(t-1)`; day 0 is not allowed.
    Daily,
}

/// Free parameters together with the fixed ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<'a> {
    pub base: ModelParams,
    pub free: &'a [ParamName],
    pub init: StateVector,
    pub data: &'a ObservedSeries,
    pub observable: Observable,
}

impl Problem<'_> {
    fn params_for(&self, values: &[f64]) -> Result<ModelParams> {
        if values.len() != self.free.len() {
            return Err(Error::Domain(format!(
                "expected {} free values, got {}",
                self.free.len(),
                values.len()
            )));
        }
        let mut p = self.base;
        for (&name, &x) in self.free.iter().zip(values) {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Domain(format!("free parameter {name} = {x} must be positive")));
            }
            p = p.with(name, x);
        }
        Ok(p)
    }

    /// Observed minus modelled value at every data point.
    pub fn residuals(&self, values: &[f64]) -> Result<Vec<f64>> {
        let params = self.params_for(values)?;
        let model = model_observations(&params, &self.init, self.data, self.observable)?;
        Ok(self
            .data
            .vaccinated
            .iter()
            .zip(model)
            .map(|(obs, m)| obs - m)
            .collect())
    }

    pub fn objective(&self, values: &[f64]) -> Result<f64> {
        Ok(self.residuals(values)?.iter().map(|r| r * r).sum())
    }
}

/// Model counterpart of each observation.
pub fn model_observations(
    params: &ModelParams,
    init: &StateVector,
    data: &ObservedSeries,
    observable: Observable,
) -> Result<Vec<f64>> {
    if observable == Observable::Daily && data.day_index.first() == Some(&0) {
        return Err(Error::Domain("daily increments need days from 1 on".into()));
    }
    let last = data.last_day().max(1);
    let traj = integrate(params, init, last as f64, 1.0, Tolerances::default())?;
    let v = |day: u32| traj.states[day as usize].v;
    Ok(data
        .day_index
        .iter()
        .map(|&day| match observable {
            Observable::Cumulative => v(day),
            Observable::Daily => v(day) - v(day - 1),
        })
        .collect())
}

/// Sum of squared deviations between the data and the modelled `V`.
pub fn objective(
    free_values: &[f64],
    free: &[ParamName],
    base: &ModelParams,
    init: &StateVector,
    data: &ObservedSeries,
) -> Result<f64> {
    Problem {
        base: *base,
        free,
        init: *init,
        data,
        observable: Observable::Cumulative,
    }
    .objective(free_values)
}

/// Box constraints for one free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub observable: Observable,
    /// Optional bounds keyed like `free`.
    pub bounds: Vec<Option<Bounds>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            observable: Observable::Cumulative,
            bounds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    RelativeDecrease,
    SmallGradient,
    ExactFit,
    MaxIterations,
    DampingExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Free parameter name to fitted value.
    pub fitted: BTreeMap<ParamName, f64>,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: FitStatus,
    /// Objective after each iteration, starting with the guess.
    pub residual_history: Vec<f64>,
    /// Full parameter set at the optimum.
    pub params: ModelParams,
}

fn clamp_log(x: &mut DVector<f64>, bounds: &[Option<Bounds>]) {
    for (xi, b) in x.iter_mut().zip(bounds) {
        if let Some(b) = b {
            *xi = xi.clamp(b.lower.ln(), b.upper.ln());
        }
    }
}

fn jacobian(problem: &Problem, log_x: &DVector<f64>, r0: &[f64]) -> Result<DMatrix<f64>> {
    let k = log_x.len();
    let columns: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..k)
            .map(|j| {
                scope.spawn(move || {
                    let mut shifted = log_x.clone();
                    shifted[j] += JACOBIAN_STEP;
                    let values: Vec<f64> = shifted.iter().map(|x| x.exp()).collect();
                    problem.residuals(&values).map(|r| {
                        r.iter()
                            .zip(r0)
                            .map(|(a, b)| (a - b) / JACOBIAN_STEP)
                            .collect()
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("jacobian worker panicked")).collect()
    });
    let mut jac = DMatrix::zeros(r0.len(), k);
    for (j, col) in columns.into_iter().enumerate() {
        jac.set_column(j, &DVector::from_vec(col?));
    }
    Ok(jac)
}

/// Levenberg–Marquardt fit in log-parameter space, so iterates stay positive.
pub fn fit(problem: &Problem, guess: &[f64], options: &FitOptions) -> Result<FitResult> {
    let k = problem.free.len();
    if guess.len() != k {
        return Err(Error::Domain(format!("guess has {} values for {k} free parameters", guess.len())));
    }
    if let Some((name, x)) = problem.free.iter().zip(guess).find(|(_, x)| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("guess for {name} = {x} must be positive")));
    }
    let mut bounds = options.bounds.clone();
    bounds.resize(k, None);
    for b in bounds.iter().flatten() {
        if !(b.lower > 0.0 && b.lower <= b.upper) {
            return Err(Error::Domain(format!("invalid bounds [{}, {}]", b.lower, b.upper)));
        }
    }
    let problem = Problem {
        observable: options.observable,
        ..problem.clone()
    };

    let mut log_x = DVector::from_iterator(k, guess.iter().map(|x| x.ln()));
    clamp_log(&mut log_x, &bounds);
    let values = |lx: &DVector<f64>| lx.iter().map(|x| x.exp()).collect::<Vec<f64>>();

    let mut r = problem.residuals(&values(&log_x))?;
    let mut s: f64 = r.iter().map(|x| x * x).sum();
    let initial_objective = s;
    let mut history = vec![s];
    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0;

    let data_norm = problem.data.vaccinated.iter().map(|x| x * x).sum::<f64>().sqrt();
    let status = loop {
        if s.sqrt() <= EXACT_FIT_TOL * data_norm {
            break FitStatus::ExactFit;
        }
        if iterations >= options.max_iter {
            break FitStatus::MaxIterations;
        }
        let jac = jacobian(&problem, &log_x, &r)?;
        let rv = DVector::from_column_slice(&r);
        let grad = jac.transpose() * &rv;
        // cosine between the residual and the column space of the Jacobian
        if grad.norm() < GRADIENT_TOL * jac.norm() * rv.norm() {
            break FitStatus::SmallGradient;
        }
        let jtj = jac.transpose() * &jac;
        iterations += 1;

        let mut accepted = None;
        while lambda <= LAMBDA_MAX {
            let mut lhs = jtj.clone();
            for i in 0..k {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(f64::MIN_POSITIVE);
            }
            let step = lhs.cholesky().map(|c| c.solve(&(-&grad)));
            if let Some(step) = step {
                let mut trial = &log_x + step;
                clamp_log(&mut trial, &bounds);
                if let Ok(rt) = problem.residuals(&values(&trial)) {
                    let st: f64 = rt.iter().map(|x| x * x).sum();
                    if st.is_finite() && st < s {
                        accepted = Some((trial, rt, st));
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        let Some((trial, rt, st)) = accepted else {
            break FitStatus::DampingExhausted;
        };
        let rel = (s - st) / s;
        log_x = trial;
        r = rt;
        s = st;
        history.push(s);
        lambda = (lambda / 10.0).max(LAMBDA_MIN);
        log::debug!("fit iteration {iterations}: objective {s:e}, lambda {lambda:e}");
        if rel < REL_DECREASE_TOL {
            break FitStatus::RelativeDecrease;
        }
    };

    let fitted_values = values(&log_x);
    let params = problem.params_for(&fitted_values)?;
    Ok(FitResult {
        fitted: problem.free.iter().copied().zip(fitted_values).collect(),
        objective: s,
        initial_objective,
        iterations,
        converged: !matches!(status, FitStatus::MaxIterations | FitStatus::DampingExhausted),
        status,
        residual_history: history,
        params,
    })
}

/// Model `V` sampled daily on `0..=days`, each value multiplied by `1 + η`
/// with `η` uniform on `[-noise_rel, noise_rel]`.
pub fn synthesize_observations(
    params: &ModelParams,
    init: &StateVector,
    days: u32,
    noise_rel: f64,
    seed: u64,
) -> Result<ObservedSeries> {
    if days < 1 {
        return Err(Error::Domain("days must be at least 1".into()));
    }
    if !(noise_rel >= 0.0) || !noise_rel.is_finite() {
        return Err(Error::Domain(format!("noise level {noise_rel} must be nonnegative")));
    }
    let traj = integrate(params, init, days as f64, 1.0, Tolerances::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vaccinated = traj
        .states
        .iter()
        .map(|s| {
            if noise_rel == 0.0 {
                s.v
            } else {
                s.v * (1.0 + rng.random_range(-noise_rel..=noise_rel))
            }
        })
        .collect();
    Ok(ObservedSeries {
        day_index: (0..=days).collect(),
        vaccinated,
    })
}

/// Fit settings as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "default_free")]
    pub free: Vec<ParamName>,
    /// Starting values keyed by parameter; missing entries start from the
    /// base parameter file.
    #[serde(default)]
    pub guess: BTreeMap<ParamName, f64>,
    #[serde(default)]
    pub bounds: BTreeMap<ParamName, Bounds>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Seed of the guess perturbation; no perturbation when `perturb` is 0.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub perturb: f64,
    #[serde(default)]
    pub observable: Observable,
}

fn default_free() -> Vec<ParamName> {
    DEFAULT_FREE.to_vec()
}

fn default_max_iter() -> usize {
    100
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            free: default_free(),
            guess: BTreeMap::new(),
            bounds: BTreeMap::new(),
            max_iter: default_max_iter(),
            seed: 0,
            perturb: 0.0,
            observable: Observable::Cumulative,
        }
    }
}

impl FitConfig {
    /// Starting vector: explicit guesses, else base values, each optionally
    /// scaled by a seeded factor in `[1 - perturb, 1 + perturb]`.
    pub fn initial_guess(&self, base: &ModelParams) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.free
            .iter()
            .map(|name| {
                let x = self.guess.get(name).copied().unwrap_or_else(|| base.get(*name));
                if self.perturb > 0.0 {
                    x * (1.0 + rng.random_range(-self.perturb..=self.perturb))
                } else {
                    x
                }
            })
            .collect()
    }

    pub fn options(&self) -> FitOptions {
        FitOptions {
            max_iter: self.max_iter,
            observable: self.observable,
            bounds: self.free.iter().map(|n| self.bounds.get(n).copied()).collect(),
        }
    }
}

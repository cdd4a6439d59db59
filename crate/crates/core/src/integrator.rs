//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! The stepper is generic over fixed-size systems so that scalar probes and
//! the six-compartment model share one code path. Samples are produced at
//! multiples of a fixed step through the method's fourth-order continuous
//! extension, so output times never constrain the step size.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::write_atomically;
use crate::model::{total_population, vector_field, StateVector, COMPARTMENTS};
use crate::params::ModelParams;

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-6;

const MAX_STEPS: usize = 1_000_000;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

/// Relative and absolute local error tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
        }
    }
}

/// Sampled solution of a fixed-size system.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    /// Number of accepted steps.
    pub steps: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * coef * ki;
        }
    }
    out
}

fn initial_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], f0: &[f64; N], tol: Tolerances, span: f64) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let scaled_norm = |v: &[f64; N]| {
        (v.iter()
            .zip(y.iter())
            .map(|(vi, yi)| {
                let sk = tol.atol + tol.rtol * yi.abs();
                (vi / sk).powi(2)
            })
            .sum::<f64>()
            / N as f64)
            .sqrt()
    };
    let dnf = scaled_norm(f0);
    let dny = scaled_norm(y);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * dny / dnf
    };
    h = h.min(span);
    let y1 = axpy(y, h, &[(1.0, f0)]);
    let f1 = f(t + h, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let der2 = scaled_norm(&diff) / h;
    let der12 = dnf.max(der2);
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / 5.0)
    };
    (100.0 * h).min(h1).min(span)
}

/// Integrates `y' = f(t, y)` from `t = 0` to `t_end`, sampling at
/// `0, sample_step, 2·sample_step, …` up to `t_end`.
///
/// With `nonnegative`, any component dropping below `-atol` aborts with
/// [`Error::Negativity`]; `names` labels components in that error.
pub fn solve<const N: usize, F>(
    f: F,
    y0: [f64; N],
    t_end: f64,
    sample_step: f64,
    tol: Tolerances,
    nonnegative: Option<&[&'static str; N]>,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be positive, got {t_end}")));
    }
    if !(sample_step > 0.0) || !sample_step.is_finite() {
        return Err(Error::Domain(format!(
            "sample_step must be positive, got {sample_step}"
        )));
    }
    if !(tol.rtol > 0.0 && tol.atol > 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }

    let n_samples = (t_end / sample_step * (1.0 + 1e-12)).floor() as usize + 1;
    let mut times = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);
    times.push(0.0);
    states.push(y0);
    let mut next_sample = 1usize;

    let check = |t: f64, y: &[f64; N]| -> Result<()> {
        if let Some(names) = nonnegative {
            for (k, &yk) in y.iter().enumerate() {
                if yk < -tol.atol || !yk.is_finite() {
                    return Err(Error::Negativity {
                        t,
                        component: names[k],
                        value: yk,
                    });
                }
            }
        }
        Ok(())
    };

    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&f, t, &y, &k1, tol, t_end);
    let mut err_old: f64 = 1e-4;
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;

    while next_sample < n_samples {
        if steps + rejected > MAX_STEPS {
            return Err(Error::Stiffness { t, h });
        }
        if h < 1e-12 * t.abs().max(1.0) {
            return Err(Error::Stiffness { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y1 = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y1);

        let err = (y
            .iter()
            .zip(y1.iter())
            .enumerate()
            .map(|(i, (y0i, y1i))| {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sk = tol.atol + tol.rtol * y0i.abs().max(y1i.abs());
                (e / sk).powi(2)
            })
            .sum::<f64>()
            / N as f64)
            .sqrt();
        if !err.is_finite() {
            h *= FAC_MIN;
            rejected += 1;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(0.2 - PI_BETA * 0.75);
        if err <= 1.0 {
            check(t + h, &y1)?;

            // dense output coefficients over [t, t + h]
            let r2: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
            let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            let t_new = t + h;
            while next_sample < n_samples {
                let ts = (next_sample as f64 * sample_step).min(t_end);
                if ts > t_new {
                    break;
                }
                let ys = if ts >= t_new {
                    y1
                } else {
                    let th = (ts - t) / h;
                    let th1 = 1.0 - th;
                    std::array::from_fn(|i| {
                        y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])))
                    })
                };
                check(ts, &ys)?;
                times.push(ts);
                states.push(ys);
                next_sample += 1;
            }

            t = t_new;
            y = y1;
            k1 = k7;
            steps += 1;

            let mut fac = (fac11 / err_old.powf(PI_BETA)) / SAFETY;
            fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            rejected += 1;
            last_rejected = true;
        }
    }

    Ok(Solution {
        times,
        states,
        steps,
        rejected,
    })
}

/// Sampled model trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub params: ModelParams,
}

impl Trajectory {
    /// Component series `k` (0 = S … 5 = C).
    pub fn series(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.to_array()[k]).collect()
    }

    /// State at the sample closest to `t`.
    pub fn at(&self, t: f64) -> &StateVector {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        &self.states[idx]
    }
}

/// Integrates the model from `init` over `[0, t_end]`.
pub fn integrate(
    params: &ModelParams,
    init: &StateVector,
    t_end: f64,
    sample_step: f64,
    tol: Tolerances,
) -> Result<Trajectory> {
    let y0 = init.to_array();
    for (name, x) in COMPARTMENTS.iter().zip(y0) {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidState(format!("initial {name} = {x}")));
        }
    }
    let p = *params;
    let sol = solve(
        move |_, x| vector_field(x, &p),
        y0,
        t_end,
        sample_step,
        tol,
        Some(&COMPARTMENTS),
    )?;
    Ok(Trajectory {
        times: sol.times,
        states: sol.states.into_iter().map(StateVector::from_array).collect(),
        params: *params,
    })
}

/// Writes `t,S,E,I,V,R,C,N` rows using shortest round-trip float formatting.
pub fn write_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_atomically(path.as_ref(), |w| {
        writeln!(w, "t,S,E,I,V,R,C,N")?;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            writeln!(
                w,
                "{t},{},{},{},{},{},{},{}",
                s.s,
                s.e,
                s.i,
                s.v,
                s.r,
                s.c,
                total_population(s)
            )?;
        }
        Ok(())
    })
}

/// Long-format `t,compartment,value` rows for plotting tools.
pub fn write_plot_data_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_atomically(path.as_ref(), |w| {
        writeln!(w, "t,compartment,value")?;
        for (k, name) in COMPARTMENTS.iter().enumerate() {
            for (t, s) in traj.times.iter().zip(&traj.states) {
                writeln!(w, "{t},{name},{}", s.to_array()[k])?;
            }
        }
        for (t, s) in traj.times.iter().zip(&traj.states) {
            writeln!(w, "{t},N,{}", total_population(s))?;
        }
        Ok(())
    })
}

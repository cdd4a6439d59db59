//! Transcritical bifurcation at `R0 = 1` and the endemic steady states.
//!
//! With `beta` as the bifurcation parameter, the direction of the branch
//! leaving the disease-free state is decided by the sign of the quadratic
//! centre-manifold coefficient `a` (the mixed coefficient `b` is always
//! positive). Endemic equilibria are found independently as positive roots
//! of a scalar equation in `I`, which is what the root-count checks rest on.

use std::path::Path;

use serde::Serialize;

use crate::equilibria::{
    dfs_denominator, disease_free_state, jacobian_at, kronecker_n1, max_real_eigenvalue, r0,
    Stability,
};
use crate::error::{Error, Result};
use crate::io::write_atomically;
use crate::model::{g, g_prime_at_zero, g_second_at_zero, rhs, StateVector};
use crate::params::{ModelParams, ParamName};

/// Points in the logarithmic sign scan for endemic roots.
pub const SCAN_POINTS: usize = 10_000;
/// Upper end of the root search relative to `Lambda / mu`.
pub const I_MAX_FACTOR: f64 = 1.01;
/// Lower end of the logarithmic grid relative to its upper end.
const SCAN_FLOOR: f64 = 1e-14;

/// Critical contact rate at which `R0 = 1`, other parameters fixed.
/// `None` when the threshold expression is not positive.
pub fn beta_star(params: &ModelParams) -> Option<f64> {
    let p = params;
    let dfs = disease_free_state(p);
    let k = kronecker_n1(p);
    let env = p.phi / (p.omega * p.kappa);
    let value = (p.xi + p.mu) * (p.mu + p.delta + p.d) / (p.xi * dfs.s)
        - k * p.alpha1 * env
        - (p.epsilon + k * p.alpha2 * env) * p.sigma / (p.t_prime + p.mu);
    (value > 0.0).then_some(value)
}

/// Right (`w`) and left (`v`) null vectors of the disease-free Jacobian at
/// `beta = beta*`, normalized by `w[1] = v[1] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalEigenvectors {
    pub w: [f64; 6],
    pub v: [f64; 6],
}

impl CriticalEigenvectors {
    pub fn dot(&self) -> f64 {
        self.w.iter().zip(&self.v).map(|(a, b)| a * b).sum()
    }
}

pub fn criticality_eigenvectors(params: &ModelParams) -> Result<CriticalEigenvectors> {
    let p = params;
    let bs = beta_star(p).ok_or(Error::NoCriticalBeta)?;
    let dfs = disease_free_state(p);
    let den = dfs_denominator(p);
    let k = kronecker_n1(p);
    let env = p.phi / (p.omega * p.kappa);
    let d3 = p.delta + p.d + p.mu;

    let eff_s = bs + k * p.alpha1 * env;
    let eff_v = p.epsilon + k * p.alpha2 * env;
    let w2 = 1.0;
    let w3 = p.xi * w2 / d3;
    let w6 = p.phi * w3 / p.omega;
    let w1 = -w3
        * (eff_s * (p.t_prime + p.mu) * dfs.s + eff_v * (1.0 - p.lambda_v) * p.t_prime * dfs.v)
        / den;
    let w4 = -w3 * (eff_s * p.sigma * dfs.s + eff_v * (p.sigma + p.mu) * dfs.v) / den;
    let w5 = (p.delta * w3 + p.lambda_v * p.t_prime * w4) / p.mu;

    let v2 = 1.0;
    let v3 = (1.0 + p.mu / p.xi) * v2;
    let v6 = k * (p.alpha1 * dfs.s + p.alpha2 * dfs.v) / (p.kappa * p.omega) * v2;

    Ok(CriticalEigenvectors {
        w: [w1, w2, w3, w4, w5, w6],
        v: [0.0, v2, v3, 0.0, 0.0, v6],
    })
}

/// Quadratic (`a`) and parameter-mixed (`b`) centre-manifold coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalForm {
    pub a: f64,
    pub b: f64,
    /// Sum of absolute values of the summands of `a`.
    pub a_scale: f64,
}

/// `a = sum v_k w_i w_j d2f_k/dx_i dx_j` and `b = sum v_k w_i d2f_k/dx_i dbeta`
/// at the disease-free state and `beta*`.
pub fn normal_form_coefficients(params: &ModelParams) -> Result<NormalForm> {
    let p = params;
    let bs = beta_star(p).ok_or(Error::NoCriticalBeta)?;
    let CriticalEigenvectors { w, v } = criticality_eigenvectors(p)?;
    let dfs = disease_free_state(p);
    let dg = g_prime_at_zero(p.kappa, p.n);
    let d2g = g_second_at_zero(p.kappa, p.n);
    let terms = [
        2.0 * bs * w[0] * w[2],
        2.0 * p.epsilon * w[2] * w[3],
        2.0 * (p.alpha1 * w[0] + p.alpha2 * w[3]) * w[5] * dg,
        (p.alpha1 * dfs.s + p.alpha2 * dfs.v) * w[5] * w[5] * d2g,
    ];
    let a = v[1] * terms.iter().sum::<f64>();
    let a_scale = v[1].abs() * terms.iter().map(|t| t.abs()).sum::<f64>();
    // only f1 = ... - beta S I and f2 = beta S I + ... depend on beta; v1 = 0
    let b = v[1] * w[2] * dfs.s - v[0] * w[2] * dfs.s;
    Ok(NormalForm { a, b, a_scale })
}

/// Closed-form test for a backward bifurcation. Only `n = 2` can satisfy it.
pub fn backward_condition(params: &ModelParams) -> bool {
    let p = params;
    if p.n != 2 {
        return false;
    }
    let Some(bs) = beta_star(p) else {
        return false;
    };
    let den = dfs_denominator(p);
    let lhs = (p.alpha1 * (p.t_prime + p.mu) + p.alpha2 * p.sigma) * p.phi * p.phi
        / (p.omega * p.omega * p.kappa);
    let rhs = (bs * bs * (p.t_prime + p.mu).powi(2)
        + bs * p.epsilon * p.sigma * ((2.0 - p.lambda_v) * p.t_prime + p.mu)
        + p.epsilon * p.epsilon * p.sigma * (p.sigma + p.mu))
        / den;
    lhs > rhs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Forward,
    Backward,
    Degenerate,
}

/// Relative size of `|a|` below which no direction is claimed.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct BifurcationReport {
    pub beta_star: f64,
    pub w: [f64; 6],
    pub v: [f64; 6],
    pub a: f64,
    pub b: f64,
    pub backward: bool,
    pub regime: Regime,
}

pub fn bifurcation_report(params: &ModelParams) -> Result<BifurcationReport> {
    let bs = beta_star(params).ok_or(Error::NoCriticalBeta)?;
    let vecs = criticality_eigenvectors(params)?;
    let nf = normal_form_coefficients(params)?;
    let regime = if nf.a.abs() <= DEGENERATE_TOL * nf.a_scale {
        Regime::Degenerate
    } else if nf.a > 0.0 {
        Regime::Backward
    } else {
        Regime::Forward
    };
    Ok(BifurcationReport {
        beta_star: bs,
        w: vecs.w,
        v: vecs.v,
        a: nf.a,
        b: nf.b,
        backward: backward_condition(params),
        regime,
    })
}

/// Intermediate quantities of the steady-state elimination at a given `I`.
struct Elimination {
    s: f64,
    v: f64,
    y: f64,
    z: f64,
    hill: f64,
    /// Reduced equation whose positive roots are the endemic `I` values.
    reduced: f64,
    reduced_scale: f64,
}

fn eliminate(p: &ModelParams, i: f64) -> Result<Elimination> {
    let c = p.phi / p.omega * i;
    let gc = g(c, p.kappa, p.n);
    let x = p.beta * i + p.sigma + p.alpha1 * gc + p.mu;
    let y = p.epsilon * i + p.t_prime + p.mu + p.alpha2 * gc;
    let z = x * y - (1.0 - p.lambda_v) * p.t_prime * p.sigma;
    if !(z > 0.0) {
        return Err(Error::Singularity(i));
    }
    let s = p.recruitment * y / z;
    let v = p.recruitment * p.sigma / z;
    let rho = (p.phi / p.omega).powi(p.n as i32);
    let hill = rho * i.powi(p.n as i32) + p.kappa;
    let g_over_i = rho * i.powi(p.n as i32 - 1) / hill;
    let loss = (p.xi + p.mu) * (p.delta + p.d + p.mu) / p.xi;
    let env = (p.alpha1 * s + p.alpha2 * v) * g_over_i;
    Ok(Elimination {
        s,
        v,
        y,
        z,
        hill,
        reduced: p.beta * s + p.epsilon * v - loss + env,
        reduced_scale: (p.beta * s).abs() + (p.epsilon * v).abs() + loss + env.abs(),
    })
}

/// The cleared polynomial `p(I)`: the reduced steady-state equation times
/// `Z (eps I + t' + mu + alpha2 g) ((phi/omega)^n I^n + kappa)`, all of
/// which are positive for `I >= 0`.
pub fn endemic_polynomial_value(params: &ModelParams, i: f64) -> Result<f64> {
    if !(i >= 0.0) {
        return Err(Error::Domain(format!("I must be nonnegative, got {i}")));
    }
    let el = eliminate(params, i)?;
    Ok(el.reduced * el.z * el.y * el.hill)
}

/// Magnitude against which `p(I)` residuals are judged.
pub fn endemic_polynomial_scale(params: &ModelParams, i: f64) -> Result<f64> {
    let el = eliminate(params, i)?;
    Ok(el.reduced_scale * el.z * el.y * el.hill)
}

/// An equilibrium with every compartment positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndemicState {
    pub state: StateVector,
    pub i_root: f64,
    /// Euclidean norm of the vector field at `state`.
    pub residual: f64,
    pub max_real_eig: f64,
}

impl EndemicState {
    pub fn stable_hint(&self) -> Stability {
        if self.max_real_eig < 0.0 {
            Stability::Stable
        } else if self.max_real_eig > 0.0 {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }
}

/// Expands an endemic `I` into the full steady state.
pub fn endemic_state_at(params: &ModelParams, i: f64) -> Result<StateVector> {
    let p = params;
    let el = eliminate(p, i)?;
    let e = (p.delta + p.d + p.mu) * i / p.xi;
    let c = p.phi / p.omega * i;
    let r = (p.delta * i + p.lambda_v * p.t_prime * el.v) / p.mu;
    Ok(StateVector::new(el.s, e, i, el.v, r, c))
}

fn reduced(p: &ModelParams, i: f64) -> Result<f64> {
    Ok(eliminate(p, i)?.reduced)
}

/// Bisection on a sign change followed by a guarded Newton polish.
fn polish_root(p: &ModelParams, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = reduced(p, lo)?;
    for _ in 0..400 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = reduced(p, mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let fx = reduced(p, x)?;
        let h = 1e-7 * x;
        let slope = (reduced(p, x + h)? - reduced(p, x - h)?) / (2.0 * h);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - fx / slope;
        if !(next > lo && next < hi) || reduced(p, next)?.abs() >= fx.abs() {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// All endemic equilibria, ordered by increasing `I`.
pub fn endemic_steady_states(params: &ModelParams) -> Result<Vec<EndemicState>> {
    let p = params;
    let i_max = I_MAX_FACTOR * p.recruitment / p.mu;
    let mut grid = Vec::with_capacity(SCAN_POINTS + 1);
    grid.push(0.0);
    let log_lo = (i_max * SCAN_FLOOR).ln();
    let log_hi = i_max.ln();
    for k in 0..SCAN_POINTS {
        let t = k as f64 / (SCAN_POINTS - 1) as f64;
        grid.push((log_lo + t * (log_hi - log_lo)).exp());
    }

    let values = grid
        .iter()
        .map(|&i| reduced(p, i))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for k in 0..grid.len() - 1 {
        let (a, b) = (values[k], values[k + 1]);
        let root = if b == 0.0 {
            Some(grid[k + 1])
        } else if a != 0.0 && (a > 0.0) != (b > 0.0) {
            Some(polish_root(p, grid[k], grid[k + 1])?)
        } else {
            None
        };
        let Some(i) = root else { continue };
        if i <= 0.0 {
            continue;
        }
        let state = endemic_state_at(p, i)?;
        let f = rhs(&state, p)?;
        let residual = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let poly = endemic_polynomial_value(p, i)?.abs();
        let poly_scale = endemic_polynomial_scale(p, i)?;
        if residual > 1e-8 * state.norm() || poly > 1e-8 * poly_scale {
            return Err(Error::RootPolish { i, residual });
        }
        let max_real_eig = max_real_eigenvalue(&jacobian_at(&state, p));
        out.push(EndemicState {
            state,
            i_root: i,
            residual,
            max_real_eig,
        });
    }
    Ok(out)
}

/// One row of a bifurcation diagram in `beta`.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub beta: f64,
    pub r0: f64,
    pub endemic: Vec<EndemicState>,
}

/// Equilibria on `steps` evenly spaced values of `beta` across `beta_range`.
pub fn bifurcation_scan(
    params: &ModelParams,
    beta_range: (f64, f64),
    steps: usize,
) -> Result<Vec<ScanRow>> {
    let (lo, hi) = beta_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Domain(format!(
            "beta range must be positive and ordered, got [{lo}, {hi}]"
        )));
    }
    if steps < 2 {
        return Err(Error::Domain(format!("steps must be at least 2, got {steps}")));
    }
    let betas: Vec<f64> = (0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
        .collect();
    let rows: Vec<Result<ScanRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = betas
            .chunks(steps.div_ceil(worker_count()))
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|&beta| {
                            let q = params.with(ParamName::Beta, beta);
                            Ok(ScanRow {
                                beta,
                                r0: r0(&q),
                                endemic: endemic_steady_states(&q)?,
                            })
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scan worker panicked"))
            .collect()
    });
    rows.into_iter().collect()
}

fn worker_count() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
}

/// Writes `beta,R0,root_index,I,S,E,V,R,C,stable_hint`. Index 0 is the
/// disease-free state; endemic roots follow in increasing `I`.
pub fn write_branch_csv(
    params: &ModelParams,
    rows: &[ScanRow],
    path: impl AsRef<Path>,
) -> Result<()> {
    write_atomically(path.as_ref(), |w| {
        writeln!(w, "beta,R0,root_index,I,S,E,V,R,C,stable_hint")?;
        for row in rows {
            let dfs = disease_free_state(&params.with(ParamName::Beta, row.beta));
            let verdict = Stability::from_r0(row.r0);
            let s = dfs;
            writeln!(
                w,
                "{},{},0,{},{},{},{},{},{},{}",
                row.beta,
                row.r0,
                s.i,
                s.s,
                s.e,
                s.v,
                s.r,
                s.c,
                verdict.as_str()
            )?;
            for (k, st) in row.endemic.iter().enumerate() {
                let s = st.state;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    row.beta,
                    row.r0,
                    k + 1,
                    s.i,
                    s.s,
                    s.e,
                    s.v,
                    s.r,
                    s.c,
                    st.stable_hint().as_str()
                )?;
            }
        }
        Ok(())
    })
}

#![allow(dead_code)]

use std::path::PathBuf;

use epidemio::bifurcation::beta_star;
use epidemio::{ModelParams, ParamName};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut ChaCha8Rng, center: f64, spread: f64) -> f64 {
    center * spread.powf(rng.random_range(-1.0..=1.0))
}

/// A valid parameter set with every rate within a factor 5 of the `n = 1`
/// estimates and `lambda_v` uniform on `[0, 1]`. When a critical contact
/// rate exists, `beta` is set to `f beta*` with `f` log-uniform on
/// `[1/4, 4]`, so both sides of the threshold are sampled.
pub fn random_params(rng: &mut ChaCha8Rng, n: u32) -> ModelParams {
    let base = ModelParams::estimated_n1();
    let mut p = base.with_n(n);
    for name in ParamName::ALL {
        let value = match name {
            ParamName::LambdaV => rng.random_range(0.0..=1.0),
            ParamName::Kappa => log_uniform(rng, base.kappa, 10.0),
            _ => log_uniform(rng, base.get(name), 5.0),
        };
        p = p.with(name, value);
    }
    if let Some(bs) = beta_star(&p) {
        p = p.with(ParamName::Beta, bs * 4f64.powf(rng.random_range(-1.0..=1.0)));
    }
    p.validate().expect("draw is valid");
    p
}

/// Like [`random_params`] but redrawn until a critical contact rate exists.
pub fn random_params_with_threshold(rng: &mut ChaCha8Rng, n: u32) -> ModelParams {
    loop {
        let p = random_params(rng, n);
        if beta_star(&p).is_some() {
            return p;
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Vector field written out independently of the library.
pub fn field(x: &[f64; 6], p: &ModelParams) -> [f64; 6] {
    let [s, e, i, v, r, c] = *x;
    let cn = c.powi(p.n as i32);
    let g = cn / (cn + p.kappa);
    [
        p.recruitment - p.beta * s * i - p.sigma * s + (1.0 - p.lambda_v) * p.t_prime * v
            - p.alpha1 * s * g
            - p.mu * s,
        p.beta * s * i + p.epsilon * i * v - (p.xi + p.mu) * e + p.alpha1 * s * g + p.alpha2 * v * g,
        p.xi * e - (p.delta + p.d + p.mu) * i,
        p.sigma * s - p.epsilon * i * v - (p.t_prime + p.mu) * v - p.alpha2 * v * g,
        p.delta * i - p.mu * r + p.lambda_v * p.t_prime * v,
        p.phi * i - p.omega * c,
    ]
}

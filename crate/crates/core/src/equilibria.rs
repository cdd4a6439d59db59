//! Disease-free steady state, its linearization, and the reproduction number.

use nalgebra::{Matrix3, Matrix6};
use serde::Serialize;

use crate::error::Result;
use crate::model::{g, g_prime, g_prime_at_zero, StateVector};
use crate::params::ModelParams;

/// `|R0 - 1|` below this gives a marginal verdict.
pub const MARGINAL_TOL: f64 = 1e-12;

/// Denominator shared by the disease-free closed forms,
/// `mu (sigma + t' + mu) + lambda t' sigma`.
pub(crate) fn dfs_denominator(p: &ModelParams) -> f64 {
    p.mu * (p.sigma + p.t_prime + p.mu) + p.lambda_v * p.t_prime * p.sigma
}

/// 1 when the environmental route is linear at `C = 0` (n = 1), else 0.
pub(crate) fn kronecker_n1(p: &ModelParams) -> f64 {
    if p.n == 1 {
        1.0
    } else {
        0.0
    }
}

/// The unique boundary equilibrium `(S*, 0, 0, V*, R*, 0)`.
pub fn disease_free_state(params: &ModelParams) -> StateVector {
    let p = params;
    let den = dfs_denominator(p);
    let s = p.recruitment * (p.t_prime + p.mu) / den;
    let v = p.recruitment * p.sigma / den;
    let r = p.lambda_v * p.t_prime * p.recruitment * p.sigma / (p.mu * den);
    StateVector::new(s, 0.0, 0.0, v, r, 0.0)
}

/// Analytic Jacobian of the vector field at `state`, rows and columns in
/// `(S, E, I, V, R, C)` order.
pub fn jacobian_at(state: &StateVector, params: &ModelParams) -> Matrix6<f64> {
    let p = params;
    let StateVector { s, i, v, c, .. } = *state;
    let gc = g(c, p.kappa, p.n);
    let dg = if c == 0.0 {
        g_prime_at_zero(p.kappa, p.n)
    } else {
        g_prime(c, p.kappa, p.n)
    };
    let d3 = p.delta + p.d + p.mu;
    #[rustfmt::skip]
    let j = Matrix6::new(
        -p.beta * i - p.sigma - p.alpha1 * gc - p.mu, 0.0, -p.beta * s, (1.0 - p.lambda_v) * p.t_prime, 0.0, -p.alpha1 * s * dg,
        p.beta * i + p.alpha1 * gc, -(p.xi + p.mu), p.beta * s + p.epsilon * v, p.epsilon * i + p.alpha2 * gc, 0.0, (p.alpha1 * s + p.alpha2 * v) * dg,
        0.0, p.xi, -d3, 0.0, 0.0, 0.0,
        p.sigma, 0.0, -p.epsilon * v, -p.epsilon * i - (p.t_prime + p.mu) - p.alpha2 * gc, 0.0, -p.alpha2 * v * dg,
        0.0, 0.0, p.delta, p.lambda_v * p.t_prime, -p.mu, 0.0,
        0.0, 0.0, p.phi, 0.0, 0.0, -p.omega,
    );
    j
}

/// Coefficients of `l^3 + A1 l^2 + A2 l + A3` for the infected block
/// `(E, I, C)` of the disease-free Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouthHurwitz {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `A1 > 0`, `A1 A2 > A3` and `A3 > 0`.
    pub stable_block: bool,
}

pub fn routh_hurwitz(params: &ModelParams) -> RouthHurwitz {
    let j = jacobian_at(&disease_free_state(params), params);
    let (j22, j23, j26) = (j[(1, 1)], j[(1, 2)], j[(1, 5)]);
    let (j32, j33) = (j[(2, 1)], j[(2, 2)]);
    let (j63, j66) = (j[(5, 2)], j[(5, 5)]);
    let a1 = -j22 - j33 - j66;
    let a2 = j22 * j33 - j23 * j32 + j66 * (j22 + j33);
    let a3 = -j22 * j33 * j66 + j32 * (j23 * j66 - j63 * j26);
    RouthHurwitz {
        a1,
        a2,
        a3,
        stable_block: a1 > 0.0 && a1 * a2 > a3 && a3 > 0.0,
    }
}

/// New-infection matrix `F` and transition matrix `V` over `(E, I, C)` at
/// the disease-free state.
pub fn next_generation_matrices(params: &ModelParams) -> (Matrix3<f64>, Matrix3<f64>) {
    let p = params;
    let dfs = disease_free_state(p);
    let k = kronecker_n1(p);
    #[rustfmt::skip]
    let f = Matrix3::new(
        0.0, p.beta * dfs.s + p.epsilon * dfs.v, k * (p.alpha1 * dfs.s + p.alpha2 * dfs.v) / p.kappa,
        0.0, 0.0, 0.0,
        0.0, 0.0, 0.0,
    );
    #[rustfmt::skip]
    let v = Matrix3::new(
        p.xi + p.mu, 0.0, 0.0,
        -p.xi, p.delta + p.d + p.mu, 0.0,
        0.0, -p.phi, p.omega,
    );
    (f, v)
}

/// Basic reproduction number in closed form.
pub fn r0(params: &ModelParams) -> f64 {
    let p = params;
    let dfs = disease_free_state(p);
    let k = kronecker_n1(p);
    let env = p.phi / (p.omega * p.kappa);
    p.xi / ((p.xi + p.mu) * (p.mu + p.delta + p.d))
        * ((p.beta + k * p.alpha1 * env) * dfs.s + (p.epsilon + k * p.alpha2 * env) * dfs.v)
}

/// Scalars of `R0 = A (B sigma + C) / (D sigma + E)`; none of them depends
/// on `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R0Parts {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl R0Parts {
    pub fn of(params: &ModelParams) -> R0Parts {
        let p = params;
        let k = kronecker_n1(p);
        R0Parts {
            a: p.recruitment * p.xi / (p.omega * (p.xi + p.mu) * (p.mu + p.delta + p.d)),
            b: p.epsilon * p.omega + k * p.alpha2 * p.phi / p.kappa,
            c: (p.mu + p.t_prime) * (p.omega * p.beta + k * p.alpha1 * p.phi / p.kappa),
            d: p.mu + p.lambda_v * p.t_prime,
            e: p.mu * (p.mu + p.t_prime),
        }
    }

    pub fn r0_at(&self, sigma: f64) -> f64 {
        self.a * (self.b * sigma + self.c) / (self.d * sigma + self.e)
    }
}

/// Sign of `dR0/dsigma` through the scalar `BE - CD`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VaccinationEffect {
    pub be_minus_cd: f64,
    /// -1, 0 or 1.
    pub sign: i8,
}

pub fn dr0_dsigma_sign(params: &ModelParams) -> VaccinationEffect {
    let parts = R0Parts::of(params);
    let be_minus_cd = parts.b * parts.e - parts.c * parts.d;
    let sign = if be_minus_cd > 0.0 {
        1
    } else if be_minus_cd < 0.0 {
        -1
    } else {
        0
    };
    VaccinationEffect { be_minus_cd, sign }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn from_r0(r0: f64) -> Stability {
        if (r0 - 1.0).abs() <= MARGINAL_TOL {
            Stability::Marginal
        } else if r0 < 1.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

/// Largest real part among the eigenvalues of a dense 6×6 matrix.
pub fn max_real_eigenvalue(m: &Matrix6<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn rows<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> Vec<Vec<f64>> {
    (0..R).map(|i| (0..C).map(|j| m[(i, j)]).collect()).collect()
}

/// Everything known about the disease-free state for one parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub dfs: StateVector,
    /// Row-major.
    pub jacobian: Vec<Vec<f64>>,
    pub routh_hurwitz: RouthHurwitz,
    pub ngm_f: Vec<Vec<f64>>,
    pub ngm_v: Vec<Vec<f64>>,
    pub r0: f64,
    pub dominant_eig_real: f64,
    pub verdict: Stability,
    pub stable: bool,
    /// The R0 verdict, the eigenvalue sign and the Routh–Hurwitz test all agree.
    pub threshold_consistent: bool,
    pub vaccination: VaccinationEffect,
}

pub fn equilibrium_report(params: &ModelParams) -> Result<EquilibriumReport> {
    let dfs = disease_free_state(params);
    let jac = jacobian_at(&dfs, params);
    let rh = routh_hurwitz(params);
    let (f, v) = next_generation_matrices(params);
    let r0 = r0(params);
    let dominant = max_real_eigenvalue(&jac);
    let verdict = Stability::from_r0(r0);
    let threshold_consistent = match verdict {
        Stability::Stable => dominant < 0.0 && rh.stable_block,
        Stability::Unstable => dominant > 0.0 && !rh.stable_block,
        Stability::Marginal => true,
    };
    if !threshold_consistent {
        log::warn!(
            "threshold checks disagree: R0 = {r0}, max Re(eig) = {dominant:e}, Routh-Hurwitz stable = {}",
            rh.stable_block
        );
    }
    Ok(EquilibriumReport {
        dfs,
        jacobian: rows(&jac),
        routh_hurwitz: rh,
        ngm_f: rows(&f),
        ngm_v: rows(&v),
        r0,
        dominant_eig_real: dominant,
        verdict,
        stable: verdict == Stability::Stable,
        threshold_consistent,
        vaccination: dr0_dsigma_sign(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rhs;
    use crate::params::ParamName;

    /// Gaussian elimination on the three steady-state equations for
    /// `(S, V, R)` with `E = I = C = 0`.
    fn dfs_by_linear_solve(p: &ModelParams) -> [f64; 3] {
        let a = nalgebra::Matrix3::new(
            -(p.sigma + p.mu),
            (1.0 - p.lambda_v) * p.t_prime,
            0.0,
            p.sigma,
            -(p.t_prime + p.mu),
            0.0,
            0.0,
            p.lambda_v * p.t_prime,
            -p.mu,
        );
        let b = nalgebra::Vector3::new(-p.recruitment, 0.0, 0.0);
        let x = a.lu().solve(&b).unwrap();
        [x[0], x[1], x[2]]
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn dfs_without_vaccination() {
        let p = ModelParams::estimated_n1().with(ParamName::Sigma, 0.0);
        let dfs = disease_free_state(&p);
        assert_eq!(dfs.v, 0.0);
        assert_eq!(dfs.r, 0.0);
        assert!(rel(dfs.s, p.recruitment / p.mu) < 1e-15);
    }

    #[test]
    fn dfs_matches_linear_solve() {
        let p = ModelParams::estimated_n1();
        let dfs = disease_free_state(&p);
        let oracle = dfs_by_linear_solve(&p);
        assert!(rel(dfs.s, oracle[0]) < 1e-12);
        assert!(rel(dfs.v, oracle[1]) < 1e-12);
        assert!(rel(dfs.r, oracle[2]) < 1e-12);
        // orientation values
        assert!(rel(dfs.s, 1.7677e5) < 1e-3);
        assert!(rel(dfs.v, 6.8196e5) < 1e-3);
        assert!(rel(dfs.r, 8.21e7) < 1e-3);
        let f = rhs(&dfs, &p).unwrap();
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= 1e-9 * dfs.norm(), "{norm}");
    }

    #[test]
    fn jacobian_structure_at_dfs() {
        let p = ModelParams::estimated_n2();
        let j = jacobian_at(&disease_free_state(&p), &p);
        assert_eq!(j[(4, 4)], -p.mu);
        assert_eq!(j[(5, 5)], -p.omega);
        assert_eq!(j[(0, 5)], 0.0);
        assert_eq!(j[(1, 5)], 0.0);
        assert_eq!(j[(3, 5)], 0.0);
        let p1 = ModelParams::estimated_n1();
        let dfs = disease_free_state(&p1);
        let j = jacobian_at(&dfs, &p1);
        assert_eq!(j[(1, 5)], (p1.alpha1 * dfs.s + p1.alpha2 * dfs.v) / p1.kappa);
    }

    #[test]
    fn structural_block_is_stable() {
        for p in [ModelParams::estimated_n1(), ModelParams::illustrative()] {
            let j = jacobian_at(&disease_free_state(&p), &p);
            let tr = j[(0, 0)] + j[(3, 3)];
            let det = j[(0, 0)] * j[(3, 3)] - j[(0, 3)] * j[(3, 0)];
            assert!(tr < 0.0 && det > 0.0);
            assert!(rel(det, dfs_denominator(&p)) < 1e-12);
        }
    }

    #[test]
    fn ngm_shapes() {
        let p = ModelParams::estimated_n2();
        let (f, v) = next_generation_matrices(&p);
        assert_eq!(f[(0, 2)], 0.0);
        assert!(f.row(1).iter().chain(f.row(2).iter()).all(|&x| x == 0.0));
        let det = (p.xi + p.mu) * (p.delta + p.d + p.mu) * p.omega;
        assert!(rel(v.determinant(), det) < 1e-14);
        assert!(v.try_inverse().is_some());
    }

    #[test]
    fn r0_of_estimated_parameters() {
        let r = r0(&ModelParams::estimated_n1());
        assert!((r - 0.0475).abs() < 5e-5, "{r}");
        assert_eq!(Stability::from_r0(r), Stability::Stable);
    }

    #[test]
    fn r0_is_linear_in_transmission_rates() {
        let p = ModelParams::estimated_n1();
        let c = 3.7;
        let q = p
            .with(ParamName::Beta, c * p.beta)
            .with(ParamName::Epsilon, c * p.epsilon)
            .with(ParamName::Alpha1, c * p.alpha1)
            .with(ParamName::Alpha2, c * p.alpha2);
        assert!(rel(r0(&q), c * r0(&p)) < 1e-14);
    }

    #[test]
    fn parts_reproduce_r0() {
        for p in [ModelParams::estimated_n1(), ModelParams::estimated_n2()] {
            let parts = R0Parts::of(&p);
            assert!(rel(parts.r0_at(p.sigma), r0(&p)) < 1e-13);
        }
    }

    #[test]
    fn vaccination_effect_degenerate_case() {
        let p = ModelParams::estimated_n1();
        let q = p
            .with(ParamName::Epsilon, p.beta)
            .with(ParamName::Alpha2, p.alpha1)
            .with(ParamName::LambdaV, 0.0)
            .with(ParamName::TPrime, 0.0);
        let eff = dr0_dsigma_sign(&q);
        assert_eq!(eff.be_minus_cd, 0.0);
        assert_eq!(eff.sign, 0);
        assert_eq!(dr0_dsigma_sign(&p).sign, -1);
    }

    #[test]
    fn marginal_verdict() {
        assert_eq!(Stability::from_r0(1.0 + 1e-13), Stability::Marginal);
        assert_eq!(Stability::from_r0(1.0 + 1e-9), Stability::Unstable);
        assert_eq!(Stability::from_r0(0.5), Stability::Stable);
    }

    #[test]
    fn report_is_self_consistent() {
        let report = equilibrium_report(&ModelParams::estimated_n1()).unwrap();
        assert!(report.stable && report.threshold_consistent);
        assert!(report.dominant_eig_real < 0.0);
        assert!(report.routh_hurwitz.a1 > 0.0);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["verdict"], "stable");
        assert_eq!(json["jacobian"].as_array().unwrap().len(), 6);
    }
}

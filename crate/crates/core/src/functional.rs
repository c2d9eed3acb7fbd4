//! The functional `P̂(α, γ) = log 2 + Ψ(0, 0) - (γ/2) ∫ α s ξ''`, its
//! γ-derivative from the tilted second moments, and stationarity residuals.

use serde::{Deserialize, Serialize};

use crate::cascade::{expected_u_squared, solve_cascade, GridSpec, LevelSolution, TiltedValues};
use crate::error::Result;
use crate::model::{alpha_moments, AlphaMoments, Mixture, OrderParameter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub gamma: f64,
    pub p_hat: f64,
    pub phi00: f64,
    pub eu2: TiltedValues,
    /// `∂γ Ψ(0, 0) = ½ (ξ'(1) - Σ_ℓ (m_ℓ - m_{ℓ-1}) ξ'(q_ℓ) eu2[ℓ])`.
    pub dgamma_phi: f64,
    /// `∂γ P̂ = ½ (∫ α ξ' - Σ_ℓ (m_ℓ - m_{ℓ-1}) ξ'(q_ℓ) (eu2[ℓ] - q_ℓ))`.
    pub dgamma_p: f64,
    pub moments: AlphaMoments,
}

impl Evaluation {
    /// `∂γ P̂` by the direct route `∂γ Ψ(0,0) - ½ ∫ α s ξ''`; agrees with
    /// `dgamma_p` through the moment identity.
    pub fn dgamma_p_direct(&self) -> f64 {
        self.dgamma_phi - 0.5 * self.moments.int_alpha_s_xi2
    }
}

/// `P̂` from a solved cascade.
pub fn p_hat_of(sol: &LevelSolution) -> f64 {
    let moments = alpha_moments(sol.order_parameter(), sol.mixture());
    std::f64::consts::LN_2 + sol.phi00() - 0.5 * sol.gamma() * moments.int_alpha_s_xi2
}

/// `P̂(α, γ)` alone, without the tilted sweep.
pub fn p_hat(mix: &Mixture, op: &OrderParameter, gamma: f64, grid: &GridSpec) -> Result<f64> {
    Ok(p_hat_of(&solve_cascade(mix, op, gamma, grid)?))
}

pub fn evaluate(
    mix: &Mixture,
    op: &OrderParameter,
    gamma: f64,
    grid: &GridSpec,
) -> Result<Evaluation> {
    let sol = solve_cascade(mix, op, gamma, grid)?;
    Ok(evaluate_solution(&sol))
}

pub fn evaluate_solution(sol: &LevelSolution) -> Evaluation {
    let mix = sol.mixture();
    let op = sol.order_parameter();
    let gamma = sol.gamma();
    let moments = alpha_moments(op, mix);
    let eu2 = expected_u_squared(sol);
    let phi00 = sol.phi00();
    let mut weighted = 0.0;
    let mut weighted_gap = 0.0;
    for (level, q, mass) in op.atoms() {
        if mass == 0.0 {
            continue;
        }
        let e = eu2.eu2[level];
        weighted += mass * mix.xi_prime(q) * e;
        weighted_gap += mass * mix.xi_prime(q) * (e - q);
    }
    Evaluation {
        gamma,
        p_hat: std::f64::consts::LN_2 + phi00 - 0.5 * gamma * moments.int_alpha_s_xi2,
        phi00,
        eu2,
        dgamma_phi: 0.5 * (mix.xi_prime(1.0) - weighted),
        dgamma_p: 0.5 * (moments.int_alpha_xi_prime - weighted_gap),
        moments,
    }
}

/// `eu2[ℓ] - q_ℓ` at one atom of `dα`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomResidual {
    pub level: usize,
    pub q: f64,
    pub mass: f64,
    pub residual: f64,
}

/// Atoms lighter than this are ignored by the stationarity check; the
/// minimizer can leave such slivers behind and they do not move `P̂`.
pub const NEGLIGIBLE_MASS: f64 = 1e-9;

/// Residuals at every atom of non-negligible mass. A Parisi measure has
/// `E u(q)² = q` on its support.
pub fn stationarity_residual(
    mix: &Mixture,
    op: &OrderParameter,
    gamma: f64,
    grid: &GridSpec,
) -> Result<Vec<AtomResidual>> {
    Ok(residuals_of(op, &evaluate(mix, op, gamma, grid)?))
}

pub fn residuals_of(op: &OrderParameter, eval: &Evaluation) -> Vec<AtomResidual> {
    op.atoms()
        .filter(|&(_, _, mass)| mass > NEGLIGIBLE_MASS)
        .map(|(level, q, mass)| AtomResidual {
            level,
            q,
            mass,
            residual: eval.eu2.eu2[level] - q,
        })
        .collect()
}

pub fn max_abs_residual(residuals: &[AtomResidual]) -> f64 {
    residuals
        .iter()
        .map(|r| r.residual.abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_order_parameter;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn zero_temperature() {
        let mix = Mixture::new(vec![0.9, 0.4]).unwrap();
        let op = validate_order_parameter(2, &[0.2, 0.6], &[0.3]).unwrap();
        let ev = evaluate(&mix, &op, 0.0, &GridSpec::default()).unwrap();
        assert_eq!(ev.p_hat, LN2);
        assert_eq!(ev.dgamma_phi, mix.xi_prime(1.0) / 2.0);
    }

    #[test]
    fn replica_symmetric_sk() {
        let mix = Mixture::sk();
        let op = OrderParameter::replica_symmetric();
        for gamma in [0.25, 1.0, 3.0] {
            let ev = evaluate(&mix, &op, gamma, &GridSpec::default()).unwrap();
            assert!((ev.p_hat - (LN2 + gamma / 4.0)).abs() < 1e-12);
            assert!((ev.dgamma_p - 0.25).abs() < 1e-12);
            assert!((ev.dgamma_p - ev.dgamma_p_direct()).abs() < 1e-12);
            let res = residuals_of(&op, &ev);
            assert_eq!(res.len(), 1);
            assert_eq!(res[0].residual, 0.0);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mix = Mixture::new(vec![0.8, 0.5]).unwrap();
        let op = validate_order_parameter(3, &[0.1, 0.45, 0.8], &[0.25, 0.6]).unwrap();
        let grid = GridSpec::default();
        let gamma: f64 = 1.7;
        let d = 1e-4 * gamma.max(1.0);
        let ev = evaluate(&mix, &op, gamma, &grid).unwrap();
        let hi = p_hat(&mix, &op, gamma + d, &grid).unwrap();
        let lo = p_hat(&mix, &op, gamma - d, &grid).unwrap();
        let fd = (hi - lo) / (2.0 * d);
        assert!(
            (ev.dgamma_p - fd).abs() <= 1e-5 * fd.abs(),
            "{} vs {fd}",
            ev.dgamma_p
        );
        assert!((ev.dgamma_p - ev.dgamma_p_direct()).abs() < 1e-10);
    }

    #[test]
    fn phi_concave_in_gamma() {
        let mix = Mixture::sk();
        let op = validate_order_parameter(2, &[0.3, 0.7], &[0.4]).unwrap();
        let grid = GridSpec::default();
        let phis: Vec<f64> = (1..=7)
            .map(|i| {
                solve_cascade(&mix, &op, 0.5 * i as f64, &grid)
                    .unwrap()
                    .phi00()
            })
            .collect();
        for w in phis.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-8);
        }
    }

    #[test]
    fn phi_convex_along_alpha_path() {
        let mix = Mixture::sk();
        let a = validate_order_parameter(2, &[0.2, 0.6], &[0.3]).unwrap();
        let b = validate_order_parameter(2, &[0.4, 0.9], &[0.7]).unwrap();
        let grid = GridSpec::default();
        let vals: Vec<f64> = (0..=4)
            .map(|i| {
                let op = a.mix(&b, i as f64 / 4.0);
                solve_cascade(&mix, &op, 3.0, &grid).unwrap().phi00()
            })
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8, "{vals:?}");
        }
    }
}

//! Random Energy Model: closed forms and a finite-N Monte Carlo check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::LogSumExp;

const LN2: f64 = std::f64::consts::LN_2;

/// Largest N for which the 2^N energies are enumerated.
pub const MAX_N: u32 = 24;
pub const MIN_SAMPLES: usize = 16;

/// Critical temperature `γ_c = 2 log 2`.
pub fn critical_gamma() -> f64 {
    2.0 * LN2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HighTemp,
    LowTemp,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::HighTemp => "high_temp",
            Regime::LowTemp => "low_temp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemPoint {
    pub gamma: f64,
    pub p_hat: f64,
    pub regime: Regime,
}

pub fn p_rem(gamma: f64) -> Result<RemPoint> {
    if gamma.is_nan() || gamma < 0.0 || gamma.is_infinite() {
        return Err(Error::InvalidTemperature(gamma));
    }
    Ok(if gamma <= critical_gamma() {
        RemPoint {
            gamma,
            p_hat: 0.5 * gamma + LN2,
            regime: Regime::HighTemp,
        }
    } else {
        RemPoint {
            gamma,
            p_hat: (2.0 * gamma * LN2).sqrt(),
            regime: Regime::LowTemp,
        }
    })
}

/// Maximizers of `γ ↦ P̂_REM(γ) - γm/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RemMaximizer {
    /// Every γ in `(0, hi]`.
    UpTo {
        hi: f64,
    },
    Point {
        gamma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemTransform {
    pub m: f64,
    pub value: f64,
    pub maximizer: RemMaximizer,
}

pub fn gamma_rem(m: f64) -> Result<RemTransform> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "m must lie in (0, 1], got {m}"
        )));
    }
    let maximizer = if m == 1.0 {
        RemMaximizer::UpTo {
            hi: critical_gamma(),
        }
    } else {
        RemMaximizer::Point {
            gamma: critical_gamma() / (m * m),
        }
    };
    Ok(RemTransform {
        m,
        value: LN2 / m,
        maximizer,
    })
}

/// `inf_{m ∈ (0,1]} (log2/m + γm/2)` with its minimizer.
pub fn rem_variational_inf(gamma: f64) -> Result<(f64, f64)> {
    if gamma.is_nan() || gamma <= 0.0 || gamma.is_infinite() {
        return Err(Error::InvalidTemperature(gamma));
    }
    if gamma <= critical_gamma() {
        Ok((0.5 * gamma + LN2, 1.0))
    } else {
        let m = (critical_gamma() / gamma).sqrt();
        // At the interior minimizer both terms equal sqrt(γ log2 / 2).
        Ok(((2.0 * gamma * LN2).sqrt(), m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub n: u32,
    pub samples: usize,
    pub gamma: f64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Average of `(1/N) log Σ_σ exp(-√(γN) X_σ)` over independent draws of the
/// 2^N standard Gaussian energies. Sample `i` uses stream `i` of a ChaCha8
/// generator keyed by `seed`.
pub fn rem_finite_n_mc(n: u32, samples: usize, gamma: f64, seed: u64) -> Result<McEstimate> {
    if n == 0 || n > MAX_N {
        return Err(Error::ResourceLimit(format!(
            "N = {n} needs 2^{n} energies per sample; allowed range is 1..={MAX_N}"
        )));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_SAMPLES} samples required, got {samples}"
        )));
    }
    if gamma.is_nan() || gamma < 0.0 || gamma.is_infinite() {
        return Err(Error::InvalidTemperature(gamma));
    }
    let nf = n as f64;
    if gamma == 0.0 {
        return Ok(McEstimate {
            n,
            samples,
            gamma,
            estimate: LN2,
            std_error: 0.0,
        });
    }
    let scale = (gamma * nf).sqrt();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut acc = LogSumExp::default();
            for _ in 0..(1u64 << n) {
                let x: f64 = StandardNormal.sample(&mut rng);
                acc.push(-scale * x);
            }
            acc.value() / nf
        })
        .collect();
    let (mean, var) = mean_and_variance(&values);
    Ok(McEstimate {
        n,
        samples,
        gamma,
        estimate: mean,
        std_error: (var / samples as f64).sqrt(),
    })
}

/// Mean and unbiased variance, summed in a fixed order.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

/// Pairwise summation; deterministic for a given slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

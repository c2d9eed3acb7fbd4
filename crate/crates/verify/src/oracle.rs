//! Reference values computed without the cascade grid: direct nested
//! quadrature over every Gaussian increment, and finite differences.

use parisi_core::{Mixture, OrderParameter};

/// Trapezoid rule for a standard normal expectation on `[-z_max, z_max]`.
#[derive(Debug, Clone)]
pub struct NormalRule {
    z: Vec<f64>,
    w: Vec<f64>,
}

impl NormalRule {
    pub fn new(points: usize, z_max: f64) -> Self {
        assert!(points >= 3, "need at least three points");
        let h = 2.0 * z_max / (points - 1) as f64;
        let norm = h / (2.0 * std::f64::consts::PI).sqrt();
        let z: Vec<f64> = (0..points).map(|i| -z_max + h * i as f64).collect();
        let w = z.iter().map(|z| norm * (-0.5 * z * z).exp()).collect();
        Self { z, w }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.z.iter().zip(&self.w).map(|(&z, &w)| w * f(z)).sum()
    }
}

impl Default for NormalRule {
    fn default() -> Self {
        Self::new(161, 10.0)
    }
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Tensor-product evaluation of the nested expectations. Cost grows as
/// `points^(number of stretches)`, so it is meant for `k <= 2`.
pub struct NestedOracle<'a> {
    mix: &'a Mixture,
    op: &'a OrderParameter,
    gamma: f64,
    rule: NormalRule,
}

impl<'a> NestedOracle<'a> {
    pub fn new(mix: &'a Mixture, op: &'a OrderParameter, gamma: f64, rule: NormalRule) -> Self {
        Self {
            mix,
            op,
            gamma,
            rule,
        }
    }

    fn std(&self, level: usize) -> f64 {
        let op = self.op;
        let v = self.mix.xi_prime(op.q_all()[level + 1]) - self.mix.xi_prime(op.q_all()[level]);
        (self.gamma * v.max(0.0)).sqrt()
    }

    /// `(Ψ(q_ℓ, x), E[f(X(q_b)) | X(q_ℓ) = x])` under the tilted path law.
    fn level(&self, level: usize, x: f64, b: usize, f: &dyn Fn(f64) -> f64) -> (f64, f64) {
        let top = self.op.q_all().len() - 1;
        if level == top {
            return (log_cosh(x), f(x));
        }
        let s = self.std(level);
        if s == 0.0 {
            let (psi, t) = self.level(level + 1, x, b, f);
            return (psi, if level >= b { f(x) } else { t });
        }
        let m = self.op.m_all()[level];
        let inner: Vec<(f64, f64)> = self
            .rule
            .z
            .iter()
            .map(|&z| self.level(level + 1, x + s * z, b, f))
            .collect();
        let w = &self.rule.w;
        let (psi, tilted) = if m == 0.0 {
            let psi: f64 = inner.iter().zip(w).map(|((p, _), w)| w * p).sum();
            let t: f64 = inner.iter().zip(w).map(|((_, t), w)| w * t).sum();
            (psi, t)
        } else {
            let top = inner
                .iter()
                .map(|(p, _)| m * p)
                .fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = inner
                .iter()
                .zip(w)
                .map(|((p, _), w)| w * (m * p - top).exp())
                .collect();
            let sum: f64 = e.iter().sum();
            let t: f64 = e.iter().zip(&inner).map(|(e, (_, t))| e * t).sum::<f64>() / sum;
            ((top + sum.ln()) / m, t)
        };
        (psi, if level >= b { f(x) } else { tilted })
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.level(0, x, 0, &|_| 0.0).0
    }

    /// `E f(X(q_b))` for the path started at `(0, 0)`.
    pub fn tilted(&self, b: usize, f: &dyn Fn(f64) -> f64) -> f64 {
        self.level(0, 0.0, b, f).1
    }
}

/// Fourth-order central difference.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_moments() {
        let r = NormalRule::default();
        assert!((r.expect(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!((r.expect(|z| z * z) - 1.0).abs() < 1e-14);
        assert!((r.expect(|z| z.powi(4)) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn replica_symmetric_closed_form() {
        let mix = Mixture::sk();
        let op = OrderParameter::replica_symmetric();
        let o = NestedOracle::new(&mix, &op, 1.3, NormalRule::default());
        // α ≡ 1 with m = 1: Ψ(0, 0) = log E cosh(√γ Z) = γ/2.
        assert!((o.phi(0.0) - 0.65).abs() < 1e-13);
        // Tilted law of X(1) is the cosh-tilted Gaussian: E X² = γ + γ².
        assert!((o.tilted(1, &|y| y * y) - (1.3 + 1.69)).abs() < 1e-11);
    }

    #[test]
    fn golden_finds_quadratic_peak() {
        let (x, v) = golden_max(|x| 1.0 - (x - 0.3).powi(2), -2.0, 2.0, 100);
        assert!((x - 0.3).abs() < 1e-7 && (v - 1.0).abs() < 1e-14);
    }
}

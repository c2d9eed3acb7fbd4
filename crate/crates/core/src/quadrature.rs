//! Gauss–Hermite rules for expectations against a standard normal, and a
//! stable log-sum-exp.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Largest node count handed out by [`GaussHermite::for_order`].
pub const MAX_ORDER: usize = 2048;

/// Nodes `t_j` and log-weights `ln w_j` with `Σ w_j f(t_j) ≈ E f(Z)`,
/// `Z ~ N(0, 1)`. Nodes are sorted ascending.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl GaussHermite {
    /// Shared rule with `n` nodes (rounded up to even, clamped to
    /// `[2, MAX_ORDER]`).
    pub fn for_order(n: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let n = (n.clamp(2, MAX_ORDER) + 1) & !1;
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&n) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(Self::compute(n));
        cache.lock().unwrap().entry(n).or_insert(rule).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_weights.iter().map(|lw| lw.exp())
    }

    /// `E f(Z)` by direct summation.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&t, &lw)| lw.exp() * f(t))
            .sum()
    }

    /// Physicists' roots: each positive root is isolated by Sturm-count
    /// bisection, then polished by safeguarded Newton on the orthonormal
    /// recurrence. Weights follow from `p_n'` at the root. Uncached; `n` must be even.
    pub fn compute(n: usize) -> Self {
        let half = n / 2;
        let nf = n as f64;
        let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
        let mut pos_roots = Vec::with_capacity(half);
        let mut pos_logw = Vec::with_capacity(half);
        // Roots are symmetric; the positive ones have indices half..n.
        for r in half..n {
            let (mut lo, mut hi) = (0.0_f64, upper);
            while hi - lo > 1e-3 * (1.0 + hi) {
                let mid = 0.5 * (lo + hi);
                if roots_below(n, mid) > r {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let lo_sign = orthonormal_pair(n, lo).0.signum();
            let mut z = 0.5 * (lo + hi);
            for _ in 0..200 {
                let (p_n, p_nm1, _) = orthonormal_pair(n, z);
                if p_n == 0.0 {
                    break;
                }
                if p_n.signum() == lo_sign {
                    lo = z;
                } else {
                    hi = z;
                }
                let mut next = z - p_n / ((2.0 * nf).sqrt() * p_nm1);
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                let step = (next - z).abs();
                z = next;
                if step <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, p_nm1, log_scale) = orthonormal_pair(n, z);
            let log_pp = ((2.0 * nf).sqrt() * p_nm1).abs().ln() + log_scale;
            pos_roots.push(z);
            // w = 2 / p_n'(z)^2 for the e^{-x^2} weight; divide by sqrt(pi).
            pos_logw.push(std::f64::consts::LN_2 - 2.0 * log_pp - 0.5 * std::f64::consts::PI.ln());
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut nodes = Vec::with_capacity(n);
        let mut log_weights = Vec::with_capacity(n);
        for i in (0..half).rev() {
            nodes.push(-pos_roots[i] * sqrt2);
            log_weights.push(pos_logw[i]);
        }
        for i in 0..half {
            nodes.push(pos_roots[i] * sqrt2);
            log_weights.push(pos_logw[i]);
        }
        // Renormalize away the accumulated rounding in the weights.
        let total = log_sum_exp(&log_weights);
        for lw in &mut log_weights {
            *lw -= total;
        }
        Self { nodes, log_weights }
    }
}

/// Number of roots of the degree-`n` Hermite polynomial below `z`, from the
/// sign changes of the Sturm sequence `p_0(z), ..., p_n(z)`.
fn roots_below(n: usize, z: f64) -> usize {
    const BIG: f64 = 1e150;
    let mut p1 = 1.0_f64;
    let mut p2 = 0.0_f64;
    let mut changes = 0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1 == 0.0 {
            p1 = -f64::MIN_POSITIVE * p2.signum();
        }
        if (p1 < 0.0) != (p2 < 0.0) {
            changes += 1;
        }
        if p1.abs() > BIG {
            p1 /= BIG;
            p2 /= BIG;
        }
    }
    n - changes
}

/// Orthonormal Hermite values `(p_n(z), p_{n-1}(z))` times `exp(-log_scale)`.
fn orthonormal_pair(n: usize, z: f64) -> (f64, f64, f64) {
    const BIG: f64 = 1e150;
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > BIG {
            p1 /= BIG;
            p2 /= BIG;
            log_scale += BIG.ln();
        }
    }
    (p1, p2, log_scale)
}

/// `ln Σ exp(a_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, value: f64) {
        if value <= self.max {
            self.sum += (value - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - value).exp() + 1.0;
            self.max = value;
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_integrate_moments() {
        for n in [2, 8, 20, 64] {
            let gh = GaussHermite::for_order(n);
            assert_eq!(gh.len(), n);
            assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-14);
            assert!(gh.expect(|t| t).abs() < 1e-13);
            assert!((gh.expect(|t| t * t) - 1.0).abs() < 1e-13);
            if n >= 4 {
                assert!((gh.expect(|t| t.powi(4)) - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        for n in [64, 256, 1024, 2048] {
            let gh = GaussHermite::for_order(n);
            for w in gh.nodes.windows(2) {
                assert!(w[0] < w[1], "n = {n}");
            }
            for i in 0..n {
                assert_eq!(gh.nodes[i], -gh.nodes[n - 1 - i]);
            }
            let e2 = gh.expect(|t| t * t);
            assert!((e2 - 1.0).abs() < 1e-12, "n = {n}: {e2}");
        }
    }

    #[test]
    fn every_even_order_is_accurate() {
        for n in (2..=400).step_by(2) {
            let gh = GaussHermite::for_order(n);
            assert!((gh.expect(|t| t * t) - 1.0).abs() < 1e-13, "n = {n}");
            if n >= 4 {
                assert!((gh.expect(|t| t.powi(4)) - 3.0).abs() < 1e-12, "n = {n}");
            }
        }
    }

    #[test]
    fn high_order_exactness_on_cosh() {
        // E cosh(aZ) = exp(a^2 / 2)
        let gh = GaussHermite::for_order(128);
        for a in [0.5, 1.0, 2.0, 3.0] {
            let got = gh.expect(|t| (a * t).cosh());
            assert!((got / (a * a / 2.0).exp() - 1.0).abs() < 1e-13, "a = {a}");
        }
    }

    #[test]
    fn log_sum_exp_stable() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let mut acc = LogSumExp::default();
        for x in [-5.0, 700.0, 3.0, 700.0] {
            acc.push(x);
        }
        assert!((acc.value() - (700.0 + 2f64.ln())).abs() < 1e-12);
    }
}

//! Seeded random (mixture, order parameter, γ) instances.

use parisi_core::{validate_order_parameter, Mixture, OrderParameter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Instance {
    pub mix: Mixture,
    pub op: OrderParameter,
    pub gamma: f64,
}

/// `count` instances with degrees in `2..=4`, `1 <= k <= max_k` and
/// `γ ∈ [0.1, 5]`.
pub fn random_instances(seed: u64, count: usize, max_k: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_instance(&mut rng, max_k))
        .collect()
}

fn random_instance(rng: &mut ChaCha8Rng, max_k: usize) -> Instance {
    let mut coeffs = vec![0.0; 3];
    coeffs[0] = rng.random_range(0.3..1.0);
    for c in coeffs.iter_mut().skip(1) {
        if rng.random_bool(0.5) {
            *c = rng.random_range(0.1..0.8);
        }
    }
    let mix = Mixture::new(coeffs).expect("positive coefficients");
    let k = rng.random_range(1..=max_k);
    let mut q: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
    q.sort_by(f64::total_cmp);
    let mut m: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.05..0.95)).collect();
    m.sort_by(f64::total_cmp);
    let op = validate_order_parameter(k, &q, &m).expect("sorted draws are valid");
    Instance {
        mix,
        op,
        gamma: rng.random_range(0.1..5.0),
    }
}

/// `n` equally spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let a = random_instances(5, 4, 3);
        let b = random_instances(5, 4, 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.op, y.op);
            assert_eq!(x.gamma, y.gamma);
        }
        assert!(a.iter().all(|i| i.op.k() <= 3 && i.op.k() >= 1));
    }
}

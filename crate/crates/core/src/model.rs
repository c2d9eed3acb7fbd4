//! The mixture `ξ(t) = Σ c_p² t^p` and finite-step order parameters.
//!
//! An order parameter is a nondecreasing step function on `[0, 1]`,
//!
//! ```text
//! α(s) = m_ℓ  for s in [q_ℓ, q_{ℓ+1}),  ℓ = 0..=k,      α(1) = 1
//! 0 = q_0 <= q_1 <= ... <= q_k <= q_{k+1} = 1
//! 0 = m_0 <= m_1 <= ... <= m_{k-1} <= m_k = 1
//! ```
//!
//! The induced measure `dα` has an atom of mass `m_ℓ - m_{ℓ-1}` at `q_ℓ`.
//! The case `k = 0` is the replica-symmetric parameter `α ≡ 1`, stored as a
//! single level with `m_0 = 1`, i.e. a unit atom at the origin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported degree `p` in the mixture.
pub const MAX_DEGREE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    /// `coeffs[i]` is `c_{i+2}`.
    coeffs: Vec<f64>,
}

impl Mixture {
    /// Builds a mixture from coefficients indexed from `p = 2`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidMixture("no coefficients".into()));
        }
        if coeffs.len() + 1 > MAX_DEGREE {
            return Err(Error::InvalidMixture(format!(
                "degree {} exceeds the maximum {MAX_DEGREE}",
                coeffs.len() + 1
            )));
        }
        if let Some(p) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidMixture(format!("c_{} is not finite", p + 2)));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidMixture("all coefficients are zero".into()));
        }
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// Builds a mixture from `(p, c_p)` pairs; unlisted degrees are zero.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let max_p = pairs.iter().map(|&(p, _)| p).max().unwrap_or(0);
        if max_p > MAX_DEGREE {
            return Err(Error::InvalidMixture(format!(
                "degree {max_p} exceeds the maximum {MAX_DEGREE}"
            )));
        }
        let mut coeffs = vec![0.0; max_p.saturating_sub(1)];
        for &(p, c) in pairs {
            if p < 2 {
                return Err(Error::InvalidMixture(format!("degree p = {p} is below 2")));
            }
            coeffs[p - 2] = c;
        }
        Self::new(coeffs)
    }

    /// The Sherrington-Kirkpatrick model, `ξ(t) = t²/2`.
    pub fn sk() -> Self {
        Self {
            coeffs: vec![std::f64::consts::FRAC_1_SQRT_2],
        }
    }

    /// `c_p`, zero outside the stored range.
    pub fn coefficient(&self, p: usize) -> f64 {
        if p < 2 {
            0.0
        } else {
            self.coeffs.get(p - 2).copied().unwrap_or(0.0)
        }
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() + 1
    }

    /// `(p, c_p²)` for every nonzero term.
    fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i as i32 + 2, c * c))
    }

    pub fn xi(&self, t: f64) -> f64 {
        self.terms().map(|(p, c2)| c2 * t.powi(p)).sum()
    }

    pub fn xi_prime(&self, t: f64) -> f64 {
        self.terms()
            .map(|(p, c2)| c2 * p as f64 * t.powi(p - 1))
            .sum()
    }

    pub fn xi_second(&self, t: f64) -> f64 {
        self.terms()
            .map(|(p, c2)| c2 * (p * (p - 1)) as f64 * t.powi(p - 2))
            .sum()
    }

    /// Antiderivative of `s ξ''(s)` vanishing at 0, i.e. `t ξ'(t) - ξ(t)`.
    fn s_xi_second_antiderivative(&self, t: f64) -> f64 {
        self.terms()
            .map(|(p, c2)| c2 * (p - 1) as f64 * t.powi(p))
            .sum()
    }

    /// Smallest `t` in `[0, 1]` with `ξ'(t) >= target`, by bisection.
    pub fn xi_prime_inverse(&self, target: f64) -> f64 {
        invert_monotone(|t| self.xi_prime(t), target)
    }

    /// Smallest `t` in `[0, 1]` with `ξ(t) >= target`, by bisection.
    pub fn xi_inverse(&self, target: f64) -> f64 {
        invert_monotone(|t| self.xi(t), target)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

fn invert_monotone(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    if target <= f(0.0) {
        return 0.0;
    }
    if target >= f(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    hi
}

/// A finite replica-symmetry-breaking order parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderParameter {
    /// `q_0 = 0, q_1, ..., q_k, q_{k+1} = 1`.
    q: Vec<f64>,
    /// `m_0, ..., m_k`; `m_0 = 0` unless `k = 0`.
    m: Vec<f64>,
}

impl OrderParameter {
    /// Validates the user-facing `(k, q, m)` form: `q = (q_1..q_k)`,
    /// `m = (m_1..m_{k-1})`. Duplicate interior `q`s are merged.
    pub fn new(k: usize, q: &[f64], m: &[f64]) -> Result<Self> {
        validate_order_parameter(k, q, m)
    }

    /// `α ≡ 1`: the whole mass of `dα` sits at the origin.
    pub fn replica_symmetric() -> Self {
        Self {
            q: vec![0.0, 1.0],
            m: vec![1.0],
        }
    }

    /// `α = 0` on `[0, 1)`: a unit atom at 1.
    pub fn dirac_at_one() -> Self {
        Self {
            q: vec![0.0, 1.0, 1.0],
            m: vec![0.0, 1.0],
        }
    }

    /// `α = 0` on `[0, q)` and 1 on `[q, 1]`: a unit atom at `q`.
    pub fn dirac_at(q: f64) -> Result<Self> {
        if q == 0.0 {
            return Ok(Self::replica_symmetric());
        }
        Self::new(1, &[q], &[])
    }

    /// Number of interior breakpoints `k`.
    pub fn k(&self) -> usize {
        self.m.len() - 1
    }

    /// Number of constant stretches, `k + 1`.
    pub fn n_levels(&self) -> usize {
        self.m.len()
    }

    /// `q_ℓ` for `ℓ = 0..=k+1`.
    pub fn q(&self, level: usize) -> f64 {
        self.q[level]
    }

    /// `m_ℓ` for `ℓ = 0..=k`.
    pub fn m(&self, level: usize) -> f64 {
        self.m[level]
    }

    /// All breakpoints `q_0..=q_{k+1}`.
    pub fn q_all(&self) -> &[f64] {
        &self.q
    }

    /// All level values `m_0..=m_k`.
    pub fn m_all(&self) -> &[f64] {
        &self.m
    }

    /// User-facing interior breakpoints `q_1..q_k`.
    pub fn q_interior(&self) -> &[f64] {
        if self.k() == 0 {
            &[]
        } else {
            &self.q[1..=self.k()]
        }
    }

    /// User-facing interior values `m_1..m_{k-1}`.
    pub fn m_interior(&self) -> &[f64] {
        let k = self.k();
        if k <= 1 {
            &[]
        } else {
            &self.m[1..k]
        }
    }

    /// Right-continuous evaluation of the step function.
    pub fn alpha(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 1.0;
        }
        let mut value = self.m[0];
        for level in 1..self.n_levels() {
            if self.q[level] <= s {
                value = self.m[level];
            } else {
                break;
            }
        }
        value
    }

    /// Mass of `dα` at `q_ℓ`, namely `m_ℓ - m_{ℓ-1}` with `m_{-1} = 0`.
    pub fn atom_mass(&self, level: usize) -> f64 {
        if level == 0 {
            self.m[0]
        } else {
            self.m[level] - self.m[level - 1]
        }
    }

    /// `(q_ℓ, mass)` for `ℓ = 0..=k`, including zero-mass entries.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.n_levels()).map(move |l| (l, self.q[l], self.atom_mass(l)))
    }

    /// `∫ f dα` for the atomic measure.
    pub fn integrate_dalpha(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms()
            .filter(|&(_, _, w)| w != 0.0)
            .map(|(_, q, w)| w * f(q))
            .sum()
    }

    /// True when all the mass of `dα` sits at the origin (`α ≡ 1`).
    pub fn is_replica_symmetric(&self) -> bool {
        self.atoms().all(|(_, q, w)| w == 0.0 || q == 0.0)
    }

    /// Pointwise convex combination `(1-t)·self + t·other`, on the common
    /// refinement of both breakpoint sets.
    pub fn mix(&self, other: &Self, t: f64) -> Self {
        let mut breaks: Vec<f64> = self.q[1..=self.k()]
            .iter()
            .chain(other.q[1..=other.k()].iter())
            .copied()
            .collect();
        breaks.push(0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut q = breaks;
        let mut m: Vec<f64> = q
            .iter()
            .map(|&s| (1.0 - t) * self.alpha(s) + t * other.alpha(s))
            .collect();
        // Keep the first stretch at m = 0 when the value there is positive.
        if m[0] > 0.0 && q.len() > 1 {
            q.insert(0, 0.0);
            m.insert(0, 0.0);
        } else if m[0] > 0.0 {
            // Single stretch starting at 0: a pure atom at the origin.
            q.insert(0, 0.0);
            m.insert(0, 0.0);
        }
        *m.last_mut().unwrap() = 1.0_f64.min(*m.last().unwrap());
        // The final stretch must end at m = 1: close with a zero-width level.
        if *m.last().unwrap() < 1.0 {
            q.push(1.0);
            m.push(1.0);
        }
        q.push(1.0);
        Self::from_full(q, m)
    }

    /// Builds from full arrays (`q_0..=q_{k+1}`, `m_0..=m_k`) and merges
    /// zero-width interior levels.
    pub(crate) fn from_full(q: Vec<f64>, m: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), m.len() + 1);
        let mut op = Self { q, m };
        op.merge_duplicates();
        op
    }

    fn merge_duplicates(&mut self) {
        // A zero-width stretch [q_ℓ, q_{ℓ+1}) for 1 <= ℓ < k contributes an
        // identity cascade step; drop (q_ℓ, m_ℓ).
        let mut level = 1;
        while level < self.k() {
            if self.q[level] == self.q[level + 1] {
                self.q.remove(level);
                self.m.remove(level);
            } else {
                level += 1;
            }
        }
    }
}

/// Validates and normalizes a `(k, q, m)` triple.
///
/// `q` holds `q_1..q_k` and `m` holds `m_1..m_{k-1}`. Index in errors refers
/// to the position within `q`, or within `m` when the reason says so.
pub fn validate_order_parameter(k: usize, q: &[f64], m: &[f64]) -> Result<OrderParameter> {
    if q.len() != k {
        return Err(Error::InvalidOrderParameter {
            index: q.len().min(k),
            reason: format!("q has {} entries, expected k = {k}", q.len()),
        });
    }
    let expected_m = k.saturating_sub(1);
    if m.len() != expected_m {
        return Err(Error::InvalidOrderParameter {
            index: m.len().min(expected_m),
            reason: format!("m has {} entries, expected {expected_m}", m.len()),
        });
    }
    if k == 0 {
        return Ok(OrderParameter::replica_symmetric());
    }
    let mut prev = 0.0;
    for (i, &qi) in q.iter().enumerate() {
        if !qi.is_finite() || !(0.0..=1.0).contains(&qi) {
            return Err(Error::InvalidOrderParameter {
                index: i,
                reason: format!("q = {qi} is outside [0, 1]"),
            });
        }
        if qi < prev {
            return Err(Error::InvalidOrderParameter {
                index: i,
                reason: format!("q is not nondecreasing ({qi} < {prev})"),
            });
        }
        prev = qi;
    }
    let mut prev = 0.0;
    for (i, &mi) in m.iter().enumerate() {
        if !mi.is_finite() || !(0.0..=1.0).contains(&mi) {
            return Err(Error::InvalidOrderParameter {
                index: i,
                reason: format!("m = {mi} is outside [0, 1]"),
            });
        }
        if mi < prev {
            return Err(Error::InvalidOrderParameter {
                index: i,
                reason: format!("m is not nondecreasing ({mi} < {prev})"),
            });
        }
        prev = mi;
    }
    let mut q_full = Vec::with_capacity(k + 2);
    q_full.push(0.0);
    q_full.extend_from_slice(q);
    q_full.push(1.0);
    let mut m_full = Vec::with_capacity(k + 1);
    m_full.push(0.0);
    m_full.extend_from_slice(m);
    m_full.push(1.0);
    Ok(OrderParameter::from_full(q_full, m_full))
}

/// The four α-integrals used throughout, all in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMoments {
    /// `∫₀¹ α(s) ξ'(s) ds`
    pub int_alpha_xi_prime: f64,
    /// `∫₀¹ α(s) s ξ''(s) ds`
    pub int_alpha_s_xi2: f64,
    /// `∫₀¹ ξ dα`
    pub int_xi_dalpha: f64,
    /// `∫₀¹ s ξ'(s) dα`
    pub int_s_xiprime_dalpha: f64,
}

impl AlphaMoments {
    /// `ξ'(1) - ∫αξ' - ∫sξ'dα`, which equals `int_alpha_s_xi2` exactly.
    pub fn identity_rhs(&self, mix: &Mixture) -> f64 {
        mix.xi_prime(1.0) - self.int_alpha_xi_prime - self.int_s_xiprime_dalpha
    }
}

pub fn alpha_moments(op: &OrderParameter, mix: &Mixture) -> AlphaMoments {
    let mut int_alpha_xi_prime = 0.0;
    let mut int_alpha_s_xi2 = 0.0;
    for level in 0..op.n_levels() {
        let (a, b) = (op.q(level), op.q(level + 1));
        let m = op.m(level);
        if m == 0.0 || a == b {
            continue;
        }
        int_alpha_xi_prime += m * (mix.xi(b) - mix.xi(a));
        int_alpha_s_xi2 +=
            m * (mix.s_xi_second_antiderivative(b) - mix.s_xi_second_antiderivative(a));
    }
    AlphaMoments {
        int_alpha_xi_prime,
        int_alpha_s_xi2,
        int_xi_dalpha: op.integrate_dalpha(|q| mix.xi(q)),
        int_s_xiprime_dalpha: op.integrate_dalpha(|q| q * mix.xi_prime(q)),
    }
}

/// `∫₀¹ ξ dα`, the limiting `E<ξ(R₁₂)>` for a Parisi measure.
pub fn overlap_moment(op: &OrderParameter, mix: &Mixture) -> f64 {
    op.integrate_dalpha(|q| mix.xi(q))
}

/// Text form of a mixture and an optional order parameter.
///
/// ```toml
/// coeffs = { 2 = 0.7071067811865476, 3 = 0.5 }
/// k = 2
/// q = [0.3, 0.7]
/// m = [0.4]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub coeffs: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
}

impl ModelSpec {
    pub fn from_model(mix: &Mixture, op: Option<&OrderParameter>) -> Self {
        let coeffs = (2..=mix.max_degree())
            .filter(|&p| mix.coefficient(p) != 0.0)
            .map(|p| (p.to_string(), mix.coefficient(p)))
            .collect();
        Self {
            coeffs,
            k: op.map(OrderParameter::k),
            q: op.map(|op| op.q_interior().to_vec()),
            m: op.map(|op| op.m_interior().to_vec()),
        }
    }

    pub fn mixture(&self) -> Result<Mixture> {
        let mut pairs = Vec::with_capacity(self.coeffs.len());
        for (key, &value) in &self.coeffs {
            let p: usize = key.trim().parse().map_err(|_| {
                Error::InvalidMixture(format!("degree key {key:?} is not an integer"))
            })?;
            pairs.push((p, value));
        }
        Mixture::from_pairs(&pairs)
    }

    /// The order parameter, if `k` is present. Missing `q`/`m` default to empty.
    pub fn order_parameter(&self) -> Result<Option<OrderParameter>> {
        match self.k {
            None => {
                if self.q.is_some() || self.m.is_some() {
                    return Err(Error::Config("`q`/`m` given without `k`".into()));
                }
                Ok(None)
            }
            Some(k) => {
                let q = self.q.clone().unwrap_or_default();
                let m = self.m.clone().unwrap_or_default();
                validate_order_parameter(k, &q, &m).map(Some)
            }
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn sk_normalization() {
        let mix = Mixture::sk();
        assert!(close(mix.xi(0.5), 0.125, 1e-15));
        assert!(close(mix.xi_prime(1.0), 1.0, 1e-15));
        for t in [0.0, 0.3, 1.0] {
            assert!(close(mix.xi_second(t), 1.0, 1e-15));
        }
    }

    #[test]
    fn two_three_mixture() {
        let mix = Mixture::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(mix.xi(1.0), 2.0);
        assert_eq!(mix.xi_prime(1.0), 5.0);
        assert_eq!(mix.xi_second(1.0), 8.0);
        assert_eq!(mix.xi_prime(0.0), 0.0);
        assert_eq!(mix.xi(0.0), 0.0);
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert!(matches!(
            Mixture::new(vec![]),
            Err(Error::InvalidMixture(_))
        ));
        assert!(matches!(
            Mixture::new(vec![0.0, 0.0]),
            Err(Error::InvalidMixture(_))
        ));
        assert!(matches!(
            Mixture::new(vec![f64::NAN]),
            Err(Error::InvalidMixture(_))
        ));
        assert!(matches!(
            Mixture::new(vec![1.0; 64]),
            Err(Error::InvalidMixture(_))
        ));
        assert!(matches!(
            Mixture::from_pairs(&[(1, 1.0)]),
            Err(Error::InvalidMixture(_))
        ));
    }

    #[test]
    fn replica_symmetric_order_parameter() {
        let op = validate_order_parameter(0, &[], &[]).unwrap();
        assert_eq!(op.k(), 0);
        for s in [0.0, 0.5, 1.0] {
            assert_eq!(op.alpha(s), 1.0);
        }
        let atoms: Vec<_> = op.atoms().collect();
        assert_eq!(atoms, vec![(0, 0.0, 1.0)]);
        assert!(op.is_replica_symmetric());
    }

    #[test]
    fn interior_one_step() {
        let op = validate_order_parameter(2, &[0.3, 0.7], &[0.4]).unwrap();
        assert_eq!(op.k(), 2);
        assert_eq!(op.alpha(0.1), 0.0);
        assert_eq!(op.alpha(0.3), 0.4);
        assert_eq!(op.alpha(0.69), 0.4);
        assert_eq!(op.alpha(0.7), 1.0);
        assert_eq!(op.alpha(1.0), 1.0);
        let masses: f64 = op.atoms().map(|(_, _, w)| w).sum();
        assert!(close(masses, 1.0, 1e-15));
    }

    #[test]
    fn rejects_non_monotone() {
        let err = validate_order_parameter(2, &[0.5, 0.3], &[0.4]).unwrap_err();
        assert!(matches!(err, Error::InvalidOrderParameter { index: 1, .. }));
        let err = validate_order_parameter(3, &[0.1, 0.3, 0.5], &[0.6, 0.4]).unwrap_err();
        assert!(matches!(err, Error::InvalidOrderParameter { index: 1, .. }));
        let err = validate_order_parameter(2, &[0.1, 0.3], &[-0.1]).unwrap_err();
        assert!(matches!(err, Error::InvalidOrderParameter { index: 0, .. }));
        let err = validate_order_parameter(1, &[1.5], &[]).unwrap_err();
        assert!(matches!(err, Error::InvalidOrderParameter { index: 0, .. }));
        let err = validate_order_parameter(2, &[0.1], &[]).unwrap_err();
        assert!(matches!(err, Error::InvalidOrderParameter { .. }));
    }

    #[test]
    fn merges_duplicate_breakpoints() {
        let op = validate_order_parameter(3, &[0.2, 0.5, 0.5], &[0.3, 0.6]).unwrap();
        assert_eq!(op.k(), 2);
        assert_eq!(op.q_interior(), &[0.2, 0.5]);
        assert_eq!(op.m_interior(), &[0.3]);
        // The merged atom at 0.5 carries m_3 - m_1.
        let mass: f64 = op.atoms().filter(|a| a.1 == 0.5).map(|a| a.2).sum();
        assert!(close(mass, 0.7, 1e-15));
    }

    #[test]
    fn moments_closed_forms() {
        let mix = Mixture::sk();
        let rs = OrderParameter::replica_symmetric();
        let mo = alpha_moments(&rs, &mix);
        assert!(close(mo.int_alpha_xi_prime, 0.5, 1e-15));
        assert!(close(mo.int_alpha_s_xi2, 0.5, 1e-15));
        assert_eq!(mo.int_xi_dalpha, 0.0);

        let op = validate_order_parameter(2, &[0.3, 0.7], &[0.4]).unwrap();
        let mo = alpha_moments(&op, &mix);
        assert!(close(mo.int_alpha_xi_prime, 0.335, 1e-14));
        assert!(close(overlap_moment(&op, &mix), 0.165, 1e-14));
        assert!(close(
            overlap_moment(&OrderParameter::dirac_at_one(), &mix),
            0.5,
            1e-15
        ));
    }

    #[test]
    fn moments_match_midpoint_quadrature() {
        // Independent check of the closed forms by brute-force quadrature.
        let mix = Mixture::new(vec![0.8, 0.5, 0.3]).unwrap();
        let op = validate_order_parameter(3, &[0.15, 0.45, 0.8], &[0.2, 0.55]).unwrap();
        let n = 400_000;
        let h = 1.0 / n as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            a += op.alpha(s) * mix.xi_prime(s) * h;
            b += op.alpha(s) * s * mix.xi_second(s) * h;
        }
        let mo = alpha_moments(&op, &mix);
        assert!(close(mo.int_alpha_xi_prime, a, 1e-5));
        assert!(close(mo.int_alpha_s_xi2, b, 1e-5));
    }

    #[test]
    fn mixing_two_parameters() {
        let a = OrderParameter::replica_symmetric();
        let b = validate_order_parameter(2, &[0.3, 0.7], &[0.4]).unwrap();
        let mid = a.mix(&b, 0.5);
        for s in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            assert!(
                close(mid.alpha(s), 0.5 * a.alpha(s) + 0.5 * b.alpha(s), 1e-15),
                "s = {s}"
            );
        }
        assert_eq!(a.mix(&b, 0.0).alpha(0.1), 1.0);
    }

    #[test]
    fn config_round_trip() {
        let mix = Mixture::from_pairs(&[(2, 0.7), (4, -0.3)]).unwrap();
        let op = validate_order_parameter(2, &[0.25, 0.6], &[0.35]).unwrap();
        let text = ModelSpec::from_model(&mix, Some(&op))
            .to_toml_string()
            .unwrap();
        let spec = ModelSpec::from_toml_str(&text).unwrap();
        let mix2 = spec.mixture().unwrap();
        let op2 = spec.order_parameter().unwrap().unwrap();
        for p in 2..=4 {
            assert!(close(mix.coefficient(p), mix2.coefficient(p), 1e-15));
        }
        assert_eq!(op.q_all(), op2.q_all());
        assert_eq!(op.m_all(), op2.m_all());
        assert!(ModelSpec::from_toml_str("coeffs = { 2 = 1.0 }\nbogus = 1").is_err());
    }

    fn arb_mixture() -> impl Strategy<Value = Mixture> {
        prop::collection::vec(-1.5..1.5f64, 1..6)
            .prop_filter("nonzero", |c| c.iter().any(|x| x.abs() > 1e-3))
            .prop_map(|c| Mixture::new(c).unwrap())
    }

    fn arb_order_parameter() -> impl Strategy<Value = OrderParameter> {
        (1usize..6).prop_flat_map(|k| {
            (
                prop::collection::vec(0.0..1.0f64, k),
                prop::collection::vec(0.0..1.0f64, k - 1),
            )
                .prop_map(move |(mut q, mut m)| {
                    q.sort_by(f64::total_cmp);
                    m.sort_by(f64::total_cmp);
                    validate_order_parameter(k, &q, &m).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn moment_identity(mix in arb_mixture(), op in arb_order_parameter()) {
            let mo = alpha_moments(&op, &mix);
            let rhs = mo.identity_rhs(&mix);
            let scale = mix.xi_prime(1.0).abs().max(1e-300);
            prop_assert!((mo.int_alpha_s_xi2 - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn xi_shape(mix in arb_mixture()) {
            let mut prev = mix.xi_prime(0.0);
            prop_assert_eq!(prev, 0.0);
            for i in 0..=200 {
                let t = i as f64 / 200.0;
                prop_assert!(mix.xi_second(t) >= 0.0);
                let d = mix.xi_prime(t);
                prop_assert!(d >= prev - 1e-15);
                prev = d;
            }
        }

        #[test]
        fn alpha_right_continuous_nondecreasing(op in arb_order_parameter()) {
            let mut prev = 0.0;
            for i in 0..=500 {
                let s = i as f64 / 500.0;
                let a = op.alpha(s);
                prop_assert!(a >= prev);
                prev = a;
            }
            prop_assert_eq!(op.alpha(1.0), 1.0);
            for &q in op.q_interior() {
                if q < 1.0 {
                    prop_assert_eq!(op.alpha(q), op.alpha(q + 1e-12_f64.max(q * 1e-12)).min(op.alpha(q)));
                }
            }
        }
    }
}

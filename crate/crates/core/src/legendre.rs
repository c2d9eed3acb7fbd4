//! Legendre structure in γ: the transform
//!
//! ```text
//! Γ̂(α) = sup_{γ>0} ( P̂(α, γ) - (γ/2) ∫ α ξ' )
//! ```
//!
//! both duality directions against the minimized curve `P̂(γ)`, the
//! alternative transform `L̂` over the minimized curve, and a concavity
//! certificate for `γ ↦ Φ(0, 0)`.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::cascade::{solve_cascade, GridSpec};
use crate::error::{Error, Result};
use crate::functional::{evaluate, max_abs_residual, residuals_of, Evaluation};
use crate::minimize::{minimize_from, repolish, MinimizeOptions, ParisiMeasure};
use crate::model::{alpha_moments, validate_order_parameter, Mixture, OrderParameter};
use crate::roots::illinois;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LegendreOptions {
    /// Left end of the γ search.
    pub gamma_min: f64,
    /// A derivative still positive here is reported as divergence.
    pub gamma_max: f64,
    /// Root-finding stops once `|∂γ J| <=` this.
    pub slope_tol: f64,
    /// Pass threshold for the duality residuals.
    pub duality_tol: f64,
    /// Stationarity/value-gap threshold for accepting a Parisi measure.
    pub parisi_tol: f64,
    pub grid: GridSpec,
    pub minimize: MinimizeOptions,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            gamma_min: 1e-8,
            gamma_max: 1e6,
            slope_tol: 1e-9,
            duality_tol: 1e-4,
            parisi_tol: 1e-4,
            grid: GridSpec::default(),
            minimize: MinimizeOptions::default(),
        }
    }
}

/// Where the supremum over γ is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Argmax {
    Point {
        gamma: f64,
    },
    /// Every γ in `[lo, hi]` attains it (`hi` may be infinite).
    Interval {
        lo: f64,
        hi: f64,
    },
    /// The objective increases without bound.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreResult {
    /// `+inf` when divergent.
    pub value: f64,
    pub argmax: Argmax,
    /// `∂γ P̂(α, γ*) - ½∫αξ'` at the reported maximizer.
    pub slope_at_argmax: f64,
    pub int_alpha_xi_prime: f64,
    pub evaluations: usize,
}

impl LegendreResult {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `Γ̂(α)` by root-finding on the (decreasing) derivative of the concave
/// map `γ ↦ P̂(α, γ) - (γ/2)∫αξ'`.
pub fn gamma_hat(
    mix: &Mixture,
    op: &OrderParameter,
    opts: &LegendreOptions,
) -> Result<LegendreResult> {
    let c = alpha_moments(op, mix).int_alpha_xi_prime;
    if op.is_replica_symmetric() {
        // P̂(α, γ) = log 2 + γ ξ(1)/2 and ∫αξ' = ξ(1): the objective is flat.
        return Ok(LegendreResult {
            value: LN2,
            argmax: Argmax::Interval {
                lo: 0.0,
                hi: f64::INFINITY,
            },
            slope_at_argmax: 0.0,
            int_alpha_xi_prime: c,
            evaluations: 0,
        });
    }
    if c == 0.0 {
        // α = 0 on [0, 1): ∂γ P̂ = ½ ξ'(1)(1 - E u(1)²) > 0 for every γ.
        return Ok(divergent(c, 0));
    }
    let mut evaluations = 0;
    let mut slope = |gamma: f64| -> Result<(f64, Evaluation)> {
        evaluations += 1;
        let ev = evaluate(mix, op, gamma, &opts.grid)?;
        Ok((ev.dgamma_p - 0.5 * c, ev))
    };
    let lo = opts.gamma_min;
    let (g_lo, ev_lo) = slope(lo)?;
    if g_lo <= 0.0 {
        return Ok(LegendreResult {
            value: ev_lo.p_hat - 0.5 * lo * c,
            argmax: Argmax::Point { gamma: lo },
            slope_at_argmax: g_lo,
            int_alpha_xi_prime: c,
            evaluations,
        });
    }
    let mut a = (lo, g_lo);
    let mut hi = 1.0_f64.max(lo);
    let b = loop {
        let (g, _) = slope(hi)?;
        if g <= 0.0 {
            break (hi, g);
        }
        a = (hi, g);
        if hi >= opts.gamma_max {
            return Ok(divergent(c, evaluations));
        }
        hi = (hi * 4.0).min(opts.gamma_max);
    };
    let mut last = None;
    let root = illinois(
        |gamma| {
            let (g, ev) = slope(gamma)?;
            last = Some((gamma, g, ev));
            Ok(g)
        },
        a,
        b,
        opts.slope_tol,
        1e-13,
        200,
    )?;
    let (gamma, g, ev) = match last {
        Some((gm, g, ev)) if gm == root => (gm, g, ev),
        _ => {
            let (g, ev) = slope(root)?;
            (root, g, ev)
        }
    };
    Ok(LegendreResult {
        value: ev.p_hat - 0.5 * gamma * c,
        argmax: Argmax::Point { gamma },
        slope_at_argmax: g,
        int_alpha_xi_prime: c,
        evaluations,
    })
}

fn divergent(c: f64, evaluations: usize) -> LegendreResult {
    LegendreResult {
        value: f64::INFINITY,
        argmax: Argmax::Divergent,
        slope_at_argmax: f64::NAN,
        int_alpha_xi_prime: c,
        evaluations,
    }
}

/// The minimized curve `γ ↦ P̂(γ)`, cached and warm-started from the
/// nearest cached minimizer.
pub struct ValueCurve<'a> {
    mix: &'a Mixture,
    k: usize,
    opts: MinimizeOptions,
    cache: Mutex<BTreeMap<u64, ParisiMeasure>>,
}

impl<'a> ValueCurve<'a> {
    pub fn new(mix: &'a Mixture, k: usize, opts: MinimizeOptions) -> Self {
        Self {
            mix,
            k,
            opts,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    /// Seeds the cache with an already minimized point.
    pub fn insert(&self, measure: ParisiMeasure) {
        self.cache
            .lock()
            .unwrap()
            .insert(measure.gamma.to_bits(), measure);
    }

    pub fn at(&self, gamma: f64) -> Result<ParisiMeasure> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidTemperature(gamma));
        }
        let nearest = {
            let cache = self.cache.lock().unwrap();
            if let Some(hit) = cache.get(&gamma.to_bits()) {
                return Ok(hit.clone());
            }
            cache
                .values()
                .min_by(|a, b| {
                    let da = (a.gamma / gamma).ln().abs();
                    let db = (b.gamma / gamma).ln().abs();
                    da.total_cmp(&db)
                })
                .map(|m| (m.gamma, m.op.clone()))
        };
        let measure = match nearest {
            Some((g, op)) if (g / gamma).ln().abs() < 0.1 => {
                repolish(self.mix, gamma, self.k, &self.opts, &op)?
            }
            Some((_, op)) => minimize_from(self.mix, gamma, self.k, &self.opts, Some(&op))?,
            None => minimize_from(self.mix, gamma, self.k, &self.opts, None)?,
        };
        self.insert(measure.clone());
        Ok(measure)
    }

    pub fn len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `sup_{γ ∈ (lo, hi)} (P̂(γ) - γc/2)` by root-finding on its derivative
/// `½∫α_P(γ)ξ' - c/2`. Returns `(γ*, value, slope)`.
fn sup_over_curve(
    curve: &ValueCurve<'_>,
    c: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64, f64)> {
    let h = |gamma: f64| -> Result<(f64, f64)> {
        let pm = curve.at(gamma)?;
        Ok((
            0.5 * (pm.int_alpha_xi_prime - c),
            pm.value - 0.5 * gamma * c,
        ))
    };
    let (h_lo, v_lo) = h(lo)?;
    if h_lo <= 0.0 {
        return Ok((lo, v_lo, h_lo));
    }
    let (h_hi, v_hi) = h(hi)?;
    if h_hi >= 0.0 {
        return Ok((hi, v_hi, h_hi));
    }
    let root = illinois(
        |g| h(g).map(|r| r.0),
        (lo, h_lo),
        (hi, h_hi),
        tol,
        1e-6 * hi,
        60,
    )?;
    let (slope, value) = h(root)?;
    Ok((root, value, slope))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelEntry {
    pub q: Vec<f64>,
    pub m: Vec<f64>,
    pub gamma_hat: f64,
    /// `Γ̂(α) + (γ/2)∫αξ'`, an upper bound for `P̂(γ)`.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardReport {
    pub gamma: f64,
    pub parisi_value: f64,
    pub parisi_q: Vec<f64>,
    pub parisi_m: Vec<f64>,
    pub gamma_hat: LegendreResult,
    pub reconstruction: f64,
    pub residual: f64,
    pub passed: bool,
    pub panel: Vec<PanelEntry>,
    pub panel_passed: bool,
}

/// A fixed panel of ten non-optimal order parameters with at most two steps.
pub fn default_panel() -> Vec<OrderParameter> {
    let specs: [(usize, &[f64], &[f64]); 10] = [
        (1, &[0.2], &[]),
        (1, &[0.5], &[]),
        (1, &[0.8], &[]),
        (2, &[0.2, 0.6], &[0.3]),
        (2, &[0.2, 0.6], &[0.7]),
        (2, &[0.1, 0.5], &[0.5]),
        (2, &[0.3, 0.9], &[0.4]),
        (2, &[0.4, 0.7], &[0.2]),
        (2, &[0.05, 0.3], &[0.6]),
        (2, &[0.5, 0.95], &[0.8]),
    ];
    specs
        .iter()
        .map(|(k, q, m)| validate_order_parameter(*k, q, m).expect("panel entries are valid"))
        .collect()
}

/// Checks `Γ̂(α_P) + (γ/2)∫α_Pξ' = P̂(γ)` at the minimizer, and the
/// inequality `≥` on a panel of other order parameters. Panel entries with
/// more than `k` steps are skipped: they may beat the `k`-step minimum.
pub fn duality_forward(
    mix: &Mixture,
    gamma: f64,
    k: usize,
    panel: &[OrderParameter],
    opts: &LegendreOptions,
) -> Result<ForwardReport> {
    let pm = minimize_from(mix, gamma, k, &opts.minimize, None)?;
    let gh = gamma_hat(mix, &pm.op, opts)?;
    let reconstruction = gh.value + 0.5 * gamma * pm.int_alpha_xi_prime;
    let residual = (reconstruction - pm.value).abs();
    let mut entries = Vec::with_capacity(panel.len());
    for op in panel.iter().filter(|op| op.k() <= k) {
        let g = gamma_hat(mix, op, opts)?;
        let c = alpha_moments(op, mix).int_alpha_xi_prime;
        let bound = g.value + 0.5 * gamma * c;
        entries.push(PanelEntry {
            q: op.q_interior().to_vec(),
            m: op.m_interior().to_vec(),
            gamma_hat: g.value,
            bound,
            passed: bound >= pm.value - 1e-8,
        });
    }
    Ok(ForwardReport {
        gamma,
        parisi_value: pm.value,
        parisi_q: pm.q.clone(),
        parisi_m: pm.m.clone(),
        gamma_hat: gh,
        reconstruction,
        residual,
        passed: residual <= opts.duality_tol,
        panel_passed: entries.iter().all(|e| e.passed),
        panel: entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseReport {
    pub claimed_gamma: f64,
    pub gamma_hat: f64,
    /// `sup_γ (P̂(γ) - (γ/2)∫αξ')` over the minimized curve.
    pub sup_value: f64,
    pub argmax_gamma: f64,
    pub residual: f64,
    pub stationarity: f64,
    pub value_gap: f64,
    pub passed: bool,
}

/// Checks `Γ̂(α) = sup_γ (P̂(γ) - (γ/2)∫αξ')` for a Parisi measure `α`
/// claimed to come from `gamma0`.
pub fn duality_inverse(
    mix: &Mixture,
    op: &OrderParameter,
    gamma0: f64,
    k: usize,
    opts: &LegendreOptions,
) -> Result<InverseReport> {
    let curve = ValueCurve::new(mix, k, opts.minimize);
    duality_inverse_with(&curve, op, gamma0, opts)
}

pub fn duality_inverse_with(
    curve: &ValueCurve<'_>,
    op: &OrderParameter,
    gamma0: f64,
    opts: &LegendreOptions,
) -> Result<InverseReport> {
    let mix = curve.mix;
    let ev = evaluate(mix, op, gamma0, &opts.grid)?;
    let stationarity = max_abs_residual(&residuals_of(op, &ev));
    let seed = minimize_from(mix, gamma0, curve.k, &curve.opts, Some(op))?;
    curve.insert(seed.clone());
    let value_gap = ev.p_hat - seed.value;
    if stationarity > opts.parisi_tol || value_gap > opts.parisi_tol {
        return Err(Error::NotAParisiMeasure {
            gamma: gamma0,
            reason: format!(
                "stationarity residual {stationarity:.3e}, value above the minimum by {value_gap:.3e}"
            ),
        });
    }
    let gh = gamma_hat(mix, op, opts)?;
    let c = ev.moments.int_alpha_xi_prime;
    let (argmax_gamma, sup_value, _) = sup_over_curve(curve, c, 0.5 * gamma0, 2.0 * gamma0, 1e-6)?;
    let sup_value = sup_value.max(seed.value - 0.5 * gamma0 * c);
    let residual = (sup_value - gh.value).abs();
    Ok(InverseReport {
        claimed_gamma: gamma0,
        gamma_hat: gh.value,
        sup_value,
        argmax_gamma,
        residual,
        stationarity,
        value_gap,
        passed: residual <= opts.duality_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LHatResult {
    /// `+inf` when `∫αξ' = 0`.
    pub value: f64,
    pub argmax_gamma: f64,
    pub int_alpha_xi_prime: f64,
}

/// `L̂(α) = sup_{γ≥0} (P̂(γ) - (γ/2)∫αξ')` over the minimized curve.
pub fn l_hat(curve: &ValueCurve<'_>, op: &OrderParameter) -> Result<LHatResult> {
    let mix = curve.mix;
    let c = alpha_moments(op, mix).int_alpha_xi_prime;
    if c <= 0.0 {
        return Ok(LHatResult {
            value: f64::INFINITY,
            argmax_gamma: f64::INFINITY,
            int_alpha_xi_prime: c,
        });
    }
    let xi1 = mix.xi(1.0);
    if c >= xi1 * (1.0 - 1e-12) {
        // ∫α_Pξ' <= ξ(1) = c: the objective never increases; P̂(0) = log 2.
        return Ok(LHatResult {
            value: LN2,
            argmax_gamma: 0.0,
            int_alpha_xi_prime: c,
        });
    }
    // ∫α_Pξ' <= sqrt(2ξ(1)log2/γ) forces the slope negative beyond this.
    let upper = 2.0 * xi1 * LN2 / (c * c);
    let (argmax_gamma, value, _) = sup_over_curve(curve, c, 1e-3 * upper.min(1.0), upper, 1e-6)?;
    Ok(LHatResult {
        value: value.max(LN2),
        argmax_gamma,
        int_alpha_xi_prime: c,
    })
}

/// Two distinct two-step order parameters with `∫αξ' = c`, built by fixing
/// `(q_1, m_1)` and solving the linear constraint for `ξ(q_2)`.
pub fn matching_witnesses(mix: &Mixture, c: f64) -> Result<[OrderParameter; 2]> {
    let xi1 = mix.xi(1.0);
    let build = |q1: f64, m1: f64| -> Result<OrderParameter> {
        // c = m1 (ξ(q2) - ξ(q1)) + ξ(1) - ξ(q2)
        let target = (xi1 - c - m1 * mix.xi(q1)) / (1.0 - m1);
        if !(target > mix.xi(q1) && target < xi1) {
            return Err(Error::InvalidParameter(format!(
                "no witness with q1 = {q1}, m1 = {m1} for ∫αξ' = {c}"
            )));
        }
        let q2 = mix.xi_inverse(target);
        validate_order_parameter(2, &[q1, q2], &[m1])
    };
    let mut found = Vec::new();
    for (q1, m1) in [
        (0.1, 0.3),
        (0.2, 0.6),
        (0.05, 0.15),
        (0.3, 0.8),
        (0.02, 0.5),
    ] {
        if let Ok(op) = build(q1, m1) {
            found.push(op);
            if found.len() == 2 {
                break;
            }
        }
    }
    match <[OrderParameter; 2]>::try_from(found) {
        Ok(pair) => Ok(pair),
        Err(_) => Err(Error::InvalidParameter(format!(
            "could not build two witnesses for ∫αξ' = {c}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessEntry {
    pub q: Vec<f64>,
    pub m: Vec<f64>,
    pub int_alpha_xi_prime: f64,
    pub l_hat: f64,
    /// `L̂(α) + (γ/2)∫αξ'`.
    pub reconstruction: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonUniquenessReport {
    pub gamma: f64,
    pub parisi_value: f64,
    pub parisi_int_alpha_xi_prime: f64,
    pub witnesses: Vec<WitnessEntry>,
    /// L¹ distance between the two witnesses.
    pub witness_distance: f64,
    pub passed: bool,
}

/// Shows that the inf in `P̂(γ) = inf_α (L̂(α) + (γ/2)∫αξ')` is attained by
/// two distinct order parameters sharing `∫α_Pξ'`.
pub fn l_hat_non_uniqueness(
    curve: &ValueCurve<'_>,
    gamma: f64,
    tol: f64,
) -> Result<NonUniquenessReport> {
    let pm = curve.at(gamma)?;
    let c = pm.int_alpha_xi_prime;
    let pair = matching_witnesses(curve.mix, c)?;
    let mut witnesses = Vec::new();
    for op in &pair {
        let lh = l_hat(curve, op)?;
        let ci = alpha_moments(op, curve.mix).int_alpha_xi_prime;
        let reconstruction = lh.value + 0.5 * gamma * ci;
        witnesses.push(WitnessEntry {
            q: op.q_interior().to_vec(),
            m: op.m_interior().to_vec(),
            int_alpha_xi_prime: ci,
            l_hat: lh.value,
            reconstruction,
            residual: (reconstruction - pm.value).abs(),
        });
    }
    let witness_distance = l1_distance(&pair[0], &pair[1]);
    Ok(NonUniquenessReport {
        gamma,
        parisi_value: pm.value,
        parisi_int_alpha_xi_prime: c,
        passed: witness_distance > 1e-3 && witnesses.iter().all(|w| w.residual <= tol),
        witnesses,
        witness_distance,
    })
}

/// `∫₀¹ |α - β|` for step functions, exact.
pub fn l1_distance(a: &OrderParameter, b: &OrderParameter) -> f64 {
    let mut breaks: Vec<f64> = a.q_all().iter().chain(b.q_all()).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
        .windows(2)
        .map(|w| (w[1] - w[0]) * (a.alpha(w[0]) - b.alpha(w[0])).abs())
        .sum()
}

/// Second difference on a possibly nonuniform grid, normalized so that it
/// equals `f[i+1] - 2 f[i] + f[i-1]` when the spacing is uniform.
pub fn second_differences(x: &[f64], f: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1))
        .map(|i| {
            let h1 = x[i] - x[i - 1];
            let h2 = x[i + 1] - x[i];
            2.0 * (h1 * f[i + 1] - (h1 + h2) * f[i] + h2 * f[i - 1]) / (h1 + h2)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityCertificate {
    pub gammas: Vec<f64>,
    pub phi00: Vec<f64>,
    /// Largest second difference of `Φ(0,0)` in γ; concavity means `<= 0`.
    pub max_second_difference: f64,
    /// Smallest second difference of `Φ(0,0)` in `β = √γ`; convexity in β
    /// means `>= 0`.
    pub min_beta_second_difference: f64,
    pub passed: bool,
}

pub fn concavity_certificate(
    mix: &Mixture,
    op: &OrderParameter,
    gammas: &[f64],
    grid: &GridSpec,
) -> Result<ConcavityCertificate> {
    if gammas.len() < 3 || gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "need an increasing grid of at least three temperatures".into(),
        ));
    }
    let phi00 = gammas
        .iter()
        .map(|&g| solve_cascade(mix, op, g, grid).map(|s| s.phi00()))
        .collect::<Result<Vec<f64>>>()?;
    let max_second_difference = second_differences(gammas, &phi00)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let betas: Vec<f64> = gammas.iter().map(|g| g.sqrt()).collect();
    let min_beta_second_difference = second_differences(&betas, &phi00)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(ConcavityCertificate {
        gammas: gammas.to_vec(),
        phi00,
        max_second_difference,
        min_beta_second_difference,
        passed: max_second_difference <= 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replica_symmetric_is_flat() {
        let r = gamma_hat(
            &Mixture::sk(),
            &OrderParameter::replica_symmetric(),
            &LegendreOptions::default(),
        )
        .unwrap();
        assert_eq!(r.value, LN2);
        assert!(matches!(r.argmax, Argmax::Interval { .. }));
    }

    #[test]
    fn atom_at_one_diverges() {
        let r = gamma_hat(
            &Mixture::sk(),
            &OrderParameter::dirac_at_one(),
            &LegendreOptions::default(),
        )
        .unwrap();
        assert!(!r.is_finite());
        assert_eq!(r.argmax, Argmax::Divergent);
    }

    #[test]
    fn interior_first_order_condition() {
        let mix = Mixture::sk();
        let op = validate_order_parameter(2, &[0.2, 0.6], &[0.3]).unwrap();
        let r = gamma_hat(&mix, &op, &LegendreOptions::default()).unwrap();
        assert!(r.is_finite());
        assert!(r.slope_at_argmax.abs() <= 1e-7, "{r:?}");
        // Fenchel: the sup dominates the objective at any γ.
        let c = r.int_alpha_xi_prime;
        for gamma in [0.5, 2.0, 5.0] {
            let p = crate::functional::p_hat(&mix, &op, gamma, &GridSpec::default()).unwrap();
            assert!(r.value >= p - 0.5 * gamma * c - 1e-10);
        }
    }

    #[test]
    fn second_difference_uniform_and_nonuniform() {
        let x = [0.0, 1.0, 2.0];
        assert_eq!(second_differences(&x, &[1.0, 0.0, 1.0]), vec![2.0]);
        // Linear data has zero second difference on any grid.
        let x = [0.1, 0.4, 1.3, 1.5];
        let f: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        for d in second_differences(&x, &f) {
            assert!(d.abs() < 1e-14);
        }
    }

    #[test]
    fn witnesses_share_the_integral() {
        let mix = Mixture::sk();
        let [a, b] = matching_witnesses(&mix, 0.356).unwrap();
        let ca = alpha_moments(&a, &mix).int_alpha_xi_prime;
        let cb = alpha_moments(&b, &mix).int_alpha_xi_prime;
        assert!((ca - 0.356).abs() < 1e-12 && (cb - 0.356).abs() < 1e-12);
        assert!(l1_distance(&a, &b) > 1e-2);
    }

    #[test]
    fn replica_symmetric_concavity_is_linear() {
        let gammas: Vec<f64> = (1..=6).map(|i| 0.5 * i as f64).collect();
        let cert = concavity_certificate(
            &Mixture::sk(),
            &OrderParameter::replica_symmetric(),
            &gammas,
            &GridSpec::default(),
        )
        .unwrap();
        assert!(cert.max_second_difference.abs() < 1e-12);
        assert!(cert.passed);
    }
}

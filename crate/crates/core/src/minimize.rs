//! Minimization of `P̂(·, γ)` over k-step order parameters, and temperature
//! scans built on it.
//!
//! The search runs over `2k + 1` unconstrained reals
//! `(d_0..d_k, e_0..e_{k-1})`:
//!
//! ```text
//! q_ℓ = Σ_{i<ℓ} d_i² / Σ_i d_i²     (ℓ = 1..k)
//! m_ℓ = Σ_{i<ℓ} e_i² / Σ_i e_i²     (ℓ = 1..k-1)
//! ```
//!
//! Every valid order parameter with at most k steps is reachable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{phi00_only, solve_cascade, GridSpec};
use crate::error::{Error, Result};
use crate::functional::{
    evaluate_solution, max_abs_residual, residuals_of, AtomResidual, Evaluation,
};
use crate::model::{alpha_moments, overlap_moment, Mixture, OrderParameter};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Largest supported number of steps.
pub const MAX_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    /// Number of starting points (replica symmetric, ladder, then random).
    pub starts: usize,
    pub seed: u64,
    /// Restart cycles on the fine grid before giving up on convergence.
    pub max_restarts: usize,
    /// A restart cycle that improves the value by less than this ends the search.
    pub tol: f64,
    /// Evaluation budget of one Nelder–Mead run.
    pub max_evals: usize,
    /// Grid for the final polish and the reported values.
    pub grid: GridSpec,
    /// Cheaper grid for the multi-start exploration.
    pub coarse_grid: GridSpec,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0,
            max_restarts: 8,
            tol: 1e-10,
            max_evals: 1500,
            grid: GridSpec::default(),
            coarse_grid: GridSpec {
                half_width: None,
                intervals: 256,
                order: 32,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParisiMeasure {
    #[serde(skip)]
    pub op: OrderParameter,
    pub q: Vec<f64>,
    pub m: Vec<f64>,
    pub gamma: f64,
    pub value: f64,
    pub residuals: Vec<AtomResidual>,
    pub max_residual: f64,
    pub overlap_moment: f64,
    pub int_alpha_xi_prime: f64,
    pub converged: bool,
    pub evaluation: Evaluation,
}

/// Maps search coordinates to an order parameter with at most `k` steps.
pub fn params_to_op(k: usize, p: &[f64]) -> OrderParameter {
    assert_eq!(p.len(), 2 * k + 1, "expected 2k + 1 coordinates");
    if k == 0 {
        return OrderParameter::replica_symmetric();
    }
    let cumulative = |xs: &[f64]| -> Vec<f64> {
        let total: f64 = xs.iter().map(|x| x * x).sum();
        let n = xs.len();
        let mut acc = 0.0;
        (1..n)
            .map(|l| {
                if total > 0.0 && total.is_finite() {
                    acc += xs[l - 1] * xs[l - 1];
                    (acc / total).min(1.0)
                } else {
                    l as f64 / n as f64
                }
            })
            .collect()
    };
    let q_inner = cumulative(&p[..=k]);
    let m_inner = cumulative(&p[k + 1..]);
    let mut q = Vec::with_capacity(k + 2);
    q.push(0.0);
    q.extend(q_inner);
    q.push(1.0);
    let mut m = Vec::with_capacity(k + 1);
    m.push(0.0);
    m.extend(m_inner);
    m.push(1.0);
    OrderParameter::from_full(q, m)
}

/// Inverse of [`params_to_op`], padding with zero-width levels at 1 when `op`
/// has fewer than `k` steps.
pub fn op_to_params(op: &OrderParameter, k: usize) -> Result<Vec<f64>> {
    let mut q = op.q_all().to_vec();
    let mut m = op.m_all().to_vec();
    if m[0] > 0.0 {
        // Mass at the origin: open with an empty stretch at m = 0.
        q.insert(0, 0.0);
        m.insert(0, 0.0);
    }
    let steps = m.len() - 1;
    if steps > k {
        return Err(Error::UnsupportedOrder { k: steps, max: k });
    }
    if k == 0 {
        return Ok(vec![1.0]);
    }
    while m.len() - 1 < k {
        let last = q.len() - 1;
        q.insert(last, 1.0);
        m.push(1.0);
    }
    let mut p = Vec::with_capacity(2 * k + 1);
    for w in q.windows(2) {
        p.push((w[1] - w[0]).max(0.0).sqrt());
    }
    for w in m.windows(2) {
        p.push((w[1] - w[0]).max(0.0).sqrt());
    }
    Ok(p)
}

fn check_inputs(gamma: f64, k: usize) -> Result<()> {
    if k > MAX_K {
        return Err(Error::UnsupportedOrder { k, max: MAX_K });
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidTemperature(gamma));
    }
    Ok(())
}

/// Objective in search coordinates; invalid grids surface as `+inf`.
fn objective(mix: &Mixture, gamma: f64, k: usize, grid: &GridSpec, p: &[f64]) -> f64 {
    let op = params_to_op(k, p);
    match phi00_only(mix, &op, gamma, grid) {
        Ok(phi) => {
            std::f64::consts::LN_2 + phi - 0.5 * gamma * alpha_moments(&op, mix).int_alpha_s_xi2
        }
        Err(_) => f64::INFINITY,
    }
}

fn starting_points(
    k: usize,
    opts: &MinimizeOptions,
    warm: Option<&OrderParameter>,
) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(opts.starts.max(2));
    starts.push(op_to_params(&OrderParameter::replica_symmetric(), k).unwrap());
    let ladder = {
        let mut p = vec![1.0; 2 * k + 1];
        if k > 0 {
            // q equispaced, m equispaced.
            p[k + 1..].fill(1.0);
        }
        p
    };
    starts.push(ladder);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.starts.max(2) {
        let mut q: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let mut m: Vec<f64> = (0..k.saturating_sub(1))
            .map(|_| rng.random::<f64>())
            .collect();
        q.sort_by(f64::total_cmp);
        m.sort_by(f64::total_cmp);
        let op = crate::model::validate_order_parameter(k, &q, &m).expect("sorted draws are valid");
        starts.push(op_to_params(&op, k).unwrap());
    }
    if let Some(w) = warm {
        if let Ok(p) = op_to_params(w, k) {
            let last = starts.len() - 1;
            starts[last] = p;
        }
    }
    starts
}

/// Nelder–Mead with restarts until a full cycle gains less than `tol`.
/// Returns `(params, value, converged)`.
fn polish(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    start: &[f64],
    step: f64,
    max_cycles: usize,
    tol: f64,
    max_evals: usize,
) -> (Vec<f64>, f64, bool) {
    let nm = NelderMeadOptions {
        initial_step: step,
        max_evals,
        ..NelderMeadOptions::default()
    };
    let mut x = start.to_vec();
    let mut value = f(&x);
    for _ in 0..max_cycles {
        let r = nelder_mead(&mut |p| f(p), &x, &nm);
        let gain = value - r.value;
        if r.value < value {
            x = r.x;
            value = r.value;
        }
        if gain < tol {
            return (x, value, true);
        }
    }
    (x, value, false)
}

pub fn minimize(
    mix: &Mixture,
    gamma: f64,
    k: usize,
    opts: &MinimizeOptions,
) -> Result<ParisiMeasure> {
    minimize_from(mix, gamma, k, opts, None)
}

/// Like [`minimize`], with `warm` replacing the last random start.
pub fn minimize_from(
    mix: &Mixture,
    gamma: f64,
    k: usize,
    opts: &MinimizeOptions,
    warm: Option<&OrderParameter>,
) -> Result<ParisiMeasure> {
    check_inputs(gamma, k)?;
    opts.grid.resolve(mix, gamma)?;
    opts.coarse_grid.resolve(mix, gamma)?;
    if k == 0 {
        return finish(
            mix,
            gamma,
            OrderParameter::replica_symmetric(),
            true,
            &opts.grid,
        );
    }
    let coarse = |p: &[f64]| objective(mix, gamma, k, &opts.coarse_grid, p);
    let fine = |p: &[f64]| objective(mix, gamma, k, &opts.grid, p);

    let explored: Vec<(Vec<f64>, f64)> = starting_points(k, opts, warm)
        .par_iter()
        .map(|s| {
            let (p, v, _) = polish(&coarse, s, 0.1, 3, 1e-9, opts.max_evals);
            (p, v)
        })
        .collect();
    let best_coarse = explored.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let mut shortlist: Vec<&(Vec<f64>, f64)> = explored
        .iter()
        .filter(|e| e.1 <= best_coarse + 1e-6)
        .collect();
    shortlist.sort_by(|a, b| a.1.total_cmp(&b.1));
    shortlist.truncate(3);

    let mut candidates: Vec<(OrderParameter, f64, bool)> = shortlist
        .par_iter()
        .map(|(p, _)| {
            let (p, v, ok) = polish(&fine, p, 0.02, opts.max_restarts, opts.tol, opts.max_evals);
            (params_to_op(k, &p), v, ok)
        })
        .collect();
    let rs = OrderParameter::replica_symmetric();
    let rs_value = fine(&op_to_params(&rs, k)?);
    candidates.push((rs, rs_value, true));

    let (op, _, converged) = select(mix, candidates);
    finish(mix, gamma, op, converged, &opts.grid)
}

/// Lowest value wins; values within 1e-12 are broken by smallest `∫αξ'`.
fn select(
    mix: &Mixture,
    candidates: Vec<(OrderParameter, f64, bool)>,
) -> (OrderParameter, f64, bool) {
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    candidates
        .into_iter()
        .filter(|c| c.1 <= best + 1e-12)
        .min_by(|a, b| {
            let ia = alpha_moments(&a.0, mix).int_alpha_xi_prime;
            let ib = alpha_moments(&b.0, mix).int_alpha_xi_prime;
            ia.total_cmp(&ib)
        })
        .expect("at least one candidate")
}

fn finish(
    mix: &Mixture,
    gamma: f64,
    op: OrderParameter,
    converged: bool,
    grid: &GridSpec,
) -> Result<ParisiMeasure> {
    let sol = solve_cascade(mix, &op, gamma, grid)?;
    let evaluation = evaluate_solution(&sol);
    let residuals = residuals_of(&op, &evaluation);
    Ok(ParisiMeasure {
        q: op.q_interior().to_vec(),
        m: op.m_interior().to_vec(),
        gamma,
        value: evaluation.p_hat,
        max_residual: max_abs_residual(&residuals),
        residuals,
        overlap_moment: overlap_moment(&op, mix),
        int_alpha_xi_prime: evaluation.moments.int_alpha_xi_prime,
        converged,
        evaluation,
        op,
    })
}

/// Local re-minimization from `start` only (no multi-start), for nearby
/// temperatures.
pub fn repolish(
    mix: &Mixture,
    gamma: f64,
    k: usize,
    opts: &MinimizeOptions,
    start: &OrderParameter,
) -> Result<ParisiMeasure> {
    check_inputs(gamma, k)?;
    opts.grid.resolve(mix, gamma)?;
    if k == 0 {
        return finish(
            mix,
            gamma,
            OrderParameter::replica_symmetric(),
            true,
            &opts.grid,
        );
    }
    let fine = |p: &[f64]| objective(mix, gamma, k, &opts.grid, p);
    let p0 = op_to_params(start, k)?;
    let (p, v, ok) = polish(
        &fine,
        &p0,
        0.02,
        opts.max_restarts,
        opts.tol,
        opts.max_evals,
    );
    let rs = OrderParameter::replica_symmetric();
    let rs_value = fine(&op_to_params(&rs, k)?);
    let (op, _, converged) = select(
        mix,
        vec![(params_to_op(k, &p), v, ok), (rs, rs_value, true)],
    );
    finish(mix, gamma, op, converged, &opts.grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub gamma: f64,
    pub beta: f64,
    pub value: f64,
    pub dvalue_fd: f64,
    pub int_alpha_xiprime: f64,
    pub overlap_moment: f64,
    pub max_residual: f64,
    pub converged: bool,
    pub measure: ParisiMeasure,
}

/// Central finite-difference step for derivatives in γ.
pub fn fd_step(gamma: f64) -> f64 {
    1e-4 * gamma.max(1.0)
}

/// Minimizes along an increasing γ grid, warm-starting each point from the
/// previous minimizer. `dvalue_fd` is the central difference of the
/// minimized value, from local re-minimizations at `γ ± δ`.
pub fn temperature_scan(
    mix: &Mixture,
    gammas: &[f64],
    k: usize,
    opts: &MinimizeOptions,
) -> Result<Vec<ScanRow>> {
    if gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "gamma grid must be increasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(gammas.len());
    let mut warm: Option<OrderParameter> = None;
    for &gamma in gammas {
        let measure = minimize_from(mix, gamma, k, opts, warm.as_ref())?;
        let d = fd_step(gamma).min(0.5 * gamma);
        let hi = repolish(mix, gamma + d, k, opts, &measure.op)?;
        let lo = repolish(mix, gamma - d, k, opts, &measure.op)?;
        let dvalue_fd = (hi.value - lo.value) / (2.0 * d);
        warm = Some(measure.op.clone());
        rows.push(ScanRow {
            gamma,
            beta: gamma.sqrt(),
            value: measure.value,
            dvalue_fd,
            int_alpha_xiprime: measure.int_alpha_xi_prime,
            overlap_moment: measure.overlap_moment,
            max_residual: measure.max_residual,
            converged: measure.converged,
            measure,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_order_parameter;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn param_round_trip() {
        let op = validate_order_parameter(3, &[0.1, 0.45, 0.8], &[0.25, 0.6]).unwrap();
        let back = params_to_op(3, &op_to_params(&op, 3).unwrap());
        for (a, b) in op.q_all().iter().zip(back.q_all()) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in op.m_all().iter().zip(back.m_all()) {
            assert!((a - b).abs() < 1e-15);
        }
        let rs = params_to_op(
            2,
            &op_to_params(&OrderParameter::replica_symmetric(), 2).unwrap(),
        );
        assert!(rs.is_replica_symmetric());
        for s in [0.0, 0.5, 0.99] {
            assert_eq!(rs.alpha(s), 1.0);
        }
    }

    #[test]
    fn padding_preserves_alpha() {
        let op = validate_order_parameter(1, &[0.4], &[]).unwrap();
        let padded = params_to_op(3, &op_to_params(&op, 3).unwrap());
        for s in [0.0, 0.2, 0.4, 0.7, 1.0] {
            assert!((padded.alpha(s) - op.alpha(s)).abs() < 1e-15);
        }
        assert!(matches!(
            op_to_params(&op, 0),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn rejects_large_k() {
        let mix = Mixture::sk();
        assert!(matches!(
            minimize(&mix, 1.0, 9, &MinimizeOptions::default()),
            Err(Error::UnsupportedOrder { k: 9, .. })
        ));
        assert!(matches!(
            minimize(&mix, 0.0, 2, &MinimizeOptions::default()),
            Err(Error::InvalidTemperature(_))
        ));
    }

    #[test]
    fn tiny_gamma_is_replica_symmetric() {
        let mix = Mixture::sk();
        let gamma = 1e-6;
        let pm = minimize(&mix, gamma, 2, &MinimizeOptions::default()).unwrap();
        assert!((pm.value - (std::f64::consts::LN_2 + gamma / 4.0)).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn every_op_is_reachable(k in 1usize..6, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut q: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let mut m: Vec<f64> = (0..k - 1).map(|_| rng.random::<f64>()).collect();
            q.sort_by(f64::total_cmp);
            m.sort_by(f64::total_cmp);
            let op = validate_order_parameter(k, &q, &m).unwrap();
            let back = params_to_op(k, &op_to_params(&op, k).unwrap());
            for i in 0..=100 {
                let s = i as f64 / 100.0;
                prop_assert!((back.alpha(s) - op.alpha(s)).abs() < 1e-12);
            }
        }
    }
}

//! Backward cascade solution of the Parisi PDE for a step order parameter,
//! and expectations under the tilted (optimally controlled) path measure.
//!
//! Across a stretch where `α = m`, the PDE is solved exactly by one
//! Hopf–Cole step,
//!
//! ```text
//! Ψ(q_ℓ, x) = (1/m) log E exp(m Ψ(q_{ℓ+1}, x + √γ z)),   Var z = ξ'(q_{ℓ+1}) - ξ'(q_ℓ)
//! ```
//!
//! with the plain expectation when `m = 0`. Each level is sampled on the
//! half grid `x_i = i h`, `i = 0..=N`, and extended to the line by
//! evenness of `Ψ` and oddness of `∂ₓΨ`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mixture, OrderParameter};
use crate::quadrature::{GaussHermite, MAX_ORDER};

/// `m` below this is treated as zero (plain expectation).
pub const SMALL_M: f64 = 1e-8;

/// Node weights below `e^-46` relative to the normalizer are dropped.
const PRUNE_LOG_THRESHOLD: f64 = -46.0;

/// User-facing grid settings. `half_width = None` picks the default
/// `max(8 + 4σ, 6σ)` with `σ = √(γ ξ'(1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub half_width: Option<f64>,
    /// Number of intervals on `[0, L]`; the spacing is `L / intervals`.
    pub intervals: usize,
    /// Gauss–Hermite order for a unit-variance step.
    pub order: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: None,
            intervals: 1024,
            order: 64,
        }
    }
}

impl GridSpec {
    /// Same spec at half the spacing and twice the quadrature order.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            intervals: self.intervals * 2,
            order: self.order * 2,
        }
    }

    pub fn resolve(&self, mix: &Mixture, gamma: f64) -> Result<Grid> {
        if self.intervals < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 intervals, got {}",
                self.intervals
            )));
        }
        if self.order < 8 || !self.order.is_multiple_of(2) || self.order > MAX_ORDER {
            return Err(Error::InvalidGrid(format!(
                "quadrature order must be even and in [8, {MAX_ORDER}], got {}",
                self.order
            )));
        }
        let sigma = (gamma * mix.xi_prime(1.0)).sqrt();
        let half_width = match self.half_width {
            None => (8.0 + 4.0 * sigma).max(6.0 * sigma),
            Some(l) => {
                if !l.is_finite() || l < 8.0 {
                    return Err(Error::InvalidGrid(format!("half width {l} is below 8")));
                }
                if l < 6.0 * sigma {
                    return Err(Error::GridTooNarrow {
                        half_width: l,
                        required: 6.0 * sigma,
                    });
                }
                l
            }
        };
        Ok(Grid {
            half_width,
            spacing: half_width / self.intervals as f64,
            intervals: self.intervals,
            order: self.order,
        })
    }
}

/// A resolved grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub spacing: f64,
    pub intervals: usize,
    pub order: usize,
}

impl Grid {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature rule for a step with standard deviation `s`: the node
    /// count grows with `s²` so that node spacing stays below the scale on
    /// which `log cosh` bends.
    pub(crate) fn rule_for(&self, s: f64) -> Arc<GaussHermite> {
        let n = (self.order as f64 * (s * s).max(1.0)).ceil() as usize;
        GaussHermite::for_order(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    Even,
    Odd,
}

/// Four-point Lagrange interpolation of a half-grid sample at `y in [0, L]`.
fn interp(values: &[f64], h: f64, parity: Parity, y: f64) -> f64 {
    let n = values.len() - 1;
    let u = y / h;
    let base = (u.floor() as usize).min(n - 2);
    let p = u - base as f64;
    let at = |i: isize| -> f64 {
        if i < 0 {
            let v = values[(-i) as usize];
            match parity {
                Parity::Even => v,
                Parity::Odd => -v,
            }
        } else {
            values[i as usize]
        }
    };
    let b = base as isize;
    let wm = -p * (p - 1.0) * (p - 2.0) / 6.0;
    let w0 = (p + 1.0) * (p - 1.0) * (p - 2.0) / 2.0;
    let w1 = -(p + 1.0) * p * (p - 2.0) / 2.0;
    let w2 = (p + 1.0) * p * (p - 1.0) / 6.0;
    wm * at(b - 1) + w0 * at(b) + w1 * at(b + 1) + w2 * at(b + 2)
}

/// `(log cosh y, tanh y, sech² y)` without overflow.
pub fn log_cosh_triple(y: f64) -> (f64, f64, f64) {
    let a = y.abs();
    let e = (-2.0 * a).exp();
    let value = a + e.ln_1p() - std::f64::consts::LN_2;
    let t = (1.0 - e) / (1.0 + e);
    let d2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    (value, t.copysign(y), d2)
}

/// One sampled level function `(Ψ, ∂ₓΨ, ∂ₓₓΨ)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sampled {
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub d2psi: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Reader<'a> {
    /// `log cosh y + shift`, exact.
    Terminal(f64),
    Sampled(&'a Sampled, f64, f64),
}

impl Reader<'_> {
    #[inline]
    fn eval(&self, y: f64) -> (f64, f64, f64) {
        match *self {
            Reader::Terminal(shift) => {
                let (a, b, c) = log_cosh_triple(y);
                (a + shift, b, c)
            }
            Reader::Sampled(s, h, l) => {
                let a = y.abs();
                let sign = if y < 0.0 { -1.0 } else { 1.0 };
                let n = s.psi.len() - 1;
                if a > l {
                    let slope = s.dpsi[n].clamp(-1.0, 1.0);
                    (s.psi[n] + slope * (a - l), sign * slope, 0.0)
                } else {
                    (
                        interp(&s.psi, h, Parity::Even, a),
                        sign * interp(&s.dpsi, h, Parity::Odd, a),
                        interp(&s.d2psi, h, Parity::Even, a),
                    )
                }
            }
        }
    }

    #[inline]
    fn value(&self, y: f64) -> f64 {
        match *self {
            Reader::Terminal(shift) => log_cosh_triple(y).0 + shift,
            Reader::Sampled(s, h, l) => {
                let a = y.abs();
                let n = s.psi.len() - 1;
                if a > l {
                    s.psi[n] + s.dpsi[n].clamp(-1.0, 1.0) * (a - l)
                } else {
                    interp(&s.psi, h, Parity::Even, a)
                }
            }
        }
    }
}

/// Quadrature nodes (already scaled by the step std) and log-weights for
/// one tilted step, after pruning.
pub(crate) struct Step {
    pub m: f64,
    pub offsets: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl Step {
    fn new(grid: &Grid, m: f64, s: f64) -> Self {
        let rule = grid.rule_for(s);
        let m = if m < SMALL_M { 0.0 } else { m };
        let mut offsets = Vec::with_capacity(rule.len());
        let mut log_weights = Vec::with_capacity(rule.len());
        for (&t, &lw) in rule.nodes.iter().zip(&rule.log_weights) {
            // |Ψ(x + s t) - Ψ(x)| <= s|t|, so this bounds the node's share.
            if lw + m * s * (t.abs() + 1.0) >= PRUNE_LOG_THRESHOLD {
                offsets.push(s * t);
                log_weights.push(lw);
            }
        }
        Self {
            m,
            offsets,
            log_weights,
        }
    }

    /// Tilted probabilities `ρ_j ∝ w_j exp(m Ψ_j)` and `(1/m) log E e^{mΨ}`.
    fn tilt(&self, psi: &[f64], rho: &mut Vec<f64>) -> f64 {
        rho.clear();
        let mean: f64 = psi
            .iter()
            .zip(&self.log_weights)
            .map(|(p, lw)| lw.exp() * p)
            .sum();
        if self.m == 0.0 {
            rho.extend(self.log_weights.iter().map(|lw| lw.exp()));
            return mean;
        }
        let m = self.m;
        let (lo, hi) = psi
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
                (a.min(p), b.max(p))
            });
        let log_z = if m * (hi - lo) < 50.0 {
            // Centered form; avoids cancellation when m is small.
            let t: f64 = psi
                .iter()
                .zip(&self.log_weights)
                .map(|(p, lw)| lw.exp() * (m * (p - mean)).exp_m1())
                .sum();
            t.ln_1p()
        } else {
            let a_max = psi
                .iter()
                .zip(&self.log_weights)
                .map(|(p, lw)| lw + m * (p - mean))
                .fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = psi
                .iter()
                .zip(&self.log_weights)
                .map(|(p, lw)| (lw + m * (p - mean) - a_max).exp())
                .sum();
            a_max + s.ln()
        };
        rho.extend(
            psi.iter()
                .zip(&self.log_weights)
                .map(|(p, lw)| (lw + m * (p - mean) - log_z).exp()),
        );
        mean + log_z / m
    }
}

/// Per-level samples of `Ψ(q_ℓ, ·)`, `∂ₓΨ(q_ℓ, ·)` and `∂ₓₓΨ(q_ℓ, ·)` for
/// `ℓ = 0..=k+1`.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub(crate) mix: Mixture,
    pub(crate) op: OrderParameter,
    pub(crate) gamma: f64,
    pub(crate) grid: Grid,
    pub(crate) variances: Vec<f64>,
    pub(crate) levels: Vec<Sampled>,
    /// Levels at or above this index are `log cosh x + shifts[ℓ]` exactly:
    /// above it every stretch has `m = 1` (a Gaussian step of `cosh`) or
    /// zero width.
    pub(crate) analytic_from: usize,
    pub(crate) shifts: Vec<f64>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(gamma))
    }
}

pub fn solve_cascade(
    mix: &Mixture,
    op: &OrderParameter,
    gamma: f64,
    grid: &GridSpec,
) -> Result<LevelSolution> {
    solve_impl(mix, op, gamma, grid, false)
}

/// `Φ(0, 0)` alone: derivatives are skipped and the bottom level is
/// evaluated only at the origin. Agrees exactly with [`solve_cascade`].
pub fn phi00_only(mix: &Mixture, op: &OrderParameter, gamma: f64, grid: &GridSpec) -> Result<f64> {
    Ok(solve_impl(mix, op, gamma, grid, true)?.levels[0].psi[0])
}

fn solve_impl(
    mix: &Mixture,
    op: &OrderParameter,
    gamma: f64,
    grid: &GridSpec,
    value_only: bool,
) -> Result<LevelSolution> {
    check_gamma(gamma)?;
    let grid = grid.resolve(mix, gamma)?;
    let n_levels = op.n_levels();
    let variances: Vec<f64> = (0..n_levels)
        .map(|l| (mix.xi_prime(op.q(l + 1)) - mix.xi_prime(op.q(l))).max(0.0))
        .collect();
    let mut shifts = vec![0.0; n_levels + 1];
    let mut analytic_from = n_levels;
    while analytic_from > 0 {
        let l = analytic_from - 1;
        let v = gamma * variances[l];
        if v == 0.0 {
            shifts[l] = shifts[l + 1];
        } else if op.m(l) == 1.0 {
            // E cosh(x + s z) = cosh(x) e^{s²/2}
            shifts[l] = shifts[l + 1] + 0.5 * v;
        } else {
            break;
        }
        analytic_from = l;
    }
    let mut levels: Vec<Sampled> = shifts.iter().map(|&c| sample_terminal(&grid, c)).collect();
    for level in (0..analytic_from).rev() {
        let s = (gamma * variances[level]).sqrt();
        let next = if level + 1 >= analytic_from {
            Reader::Terminal(shifts[level + 1])
        } else {
            Reader::Sampled(&levels[level + 1], grid.spacing, grid.half_width)
        };
        let sampled = if s == 0.0 {
            levels[level + 1].clone()
        } else if value_only && level == 0 {
            let (a, b, c) = eval_step(
                &next,
                &Step::new(&grid, op.m(level), s),
                0.0,
                &mut Vec::new(),
            );
            Sampled {
                psi: vec![a],
                dpsi: vec![b],
                d2psi: vec![c],
            }
        } else {
            cascade_step(&grid, &next, &Step::new(&grid, op.m(level), s), !value_only)
        };
        levels[level] = sampled;
    }
    Ok(LevelSolution {
        mix: mix.clone(),
        op: op.clone(),
        gamma,
        grid,
        variances,
        levels,
        analytic_from,
        shifts,
    })
}

fn sample_terminal(grid: &Grid, shift: f64) -> Sampled {
    let (mut psi, mut dpsi, mut d2psi) = (vec![], vec![], vec![]);
    for i in 0..grid.len() {
        let (a, b, c) = log_cosh_triple(grid.x(i));
        psi.push(a + shift);
        dpsi.push(b);
        d2psi.push(c);
    }
    Sampled { psi, dpsi, d2psi }
}

/// One cascade step at every grid point. Without `derivs` only `Ψ` is
/// computed, plus the derivatives at the outermost point (the tail slope).
fn cascade_step(grid: &Grid, next: &Reader<'_>, step: &Step, derivs: bool) -> Sampled {
    let last = grid.len() - 1;
    let rows: Vec<(f64, f64, f64)> = (0..grid.len())
        .into_par_iter()
        .with_min_len(32)
        .map_init(
            || (Vec::new(), Vec::new()),
            |(psi, rho), i| {
                let x = grid.x(i);
                if derivs || i == last {
                    let (value, d, d2) = eval_step(next, step, x, rho);
                    (value, if i == 0 { 0.0 } else { d }, d2)
                } else {
                    psi.clear();
                    psi.extend(step.offsets.iter().map(|&o| next.value(x + o)));
                    (step.tilt(psi, rho), 0.0, 0.0)
                }
            },
        )
        .collect();
    let mut out = Sampled {
        psi: Vec::with_capacity(rows.len()),
        dpsi: Vec::with_capacity(rows.len()),
        d2psi: Vec::with_capacity(rows.len()),
    };
    for (a, b, c) in rows {
        out.psi.push(a);
        out.dpsi.push(b);
        out.d2psi.push(c);
    }
    out
}

impl LevelSolution {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mix
    }

    pub fn order_parameter(&self) -> &OrderParameter {
        &self.op
    }

    /// `v_ℓ = ξ'(q_{ℓ+1}) - ξ'(q_ℓ)` for `ℓ = 0..=k`.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Number of stored levels, `k + 2`.
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// `Φ(0, 0) = Ψ(q_0, 0)`.
    pub fn phi00(&self) -> f64 {
        self.levels[0].psi[0]
    }

    /// Samples of `Ψ(q_ℓ, x_i)` on the half grid.
    pub fn psi(&self, level: usize) -> &[f64] {
        &self.levels[level].psi
    }

    pub fn dpsi(&self, level: usize) -> &[f64] {
        &self.levels[level].dpsi
    }

    pub fn d2psi(&self, level: usize) -> &[f64] {
        &self.levels[level].d2psi
    }

    fn reader(&self, level: usize) -> Reader<'_> {
        if level >= self.analytic_from {
            Reader::Terminal(self.shifts[level])
        } else {
            Reader::Sampled(&self.levels[level], self.grid.spacing, self.grid.half_width)
        }
    }

    /// `(Ψ, ∂ₓΨ, ∂ₓₓΨ)` at `(q_ℓ, x)`.
    pub fn phi_triple(&self, level: usize, x: f64) -> (f64, f64, f64) {
        self.reader(level).eval(x)
    }

    /// `(Ψ, ∂ₓΨ)` at `(q_ℓ, x)`.
    pub fn phi_value(&self, level: usize, x: f64) -> (f64, f64) {
        let (a, b, _) = self.phi_triple(level, x);
        (a, b)
    }

    /// Standard deviation of the Gaussian step across level `ℓ`.
    pub fn step_std(&self, level: usize) -> f64 {
        (self.gamma * self.variances[level]).sqrt()
    }

    pub(crate) fn step(&self, level: usize) -> Step {
        Step::new(&self.grid, self.op.m(level), self.step_std(level))
    }

    /// Reader for the time inside level `ℓ` whose remaining variance to
    /// `q_{ℓ+1}` is `remaining` (in ξ'-units), when it is exact.
    fn analytic_between(&self, level: usize, remaining: f64) -> Option<f64> {
        let s2 = self.gamma * remaining.max(0.0);
        match self.reader(level + 1) {
            Reader::Terminal(shift) if s2 == 0.0 => Some(shift),
            Reader::Terminal(shift) if self.op.m(level) == 1.0 => Some(shift + 0.5 * s2),
            _ => None,
        }
    }

    /// `Ψ` and its derivatives at an intermediate time of level `ℓ`, whose
    /// remaining variance to `q_{ℓ+1}` is `remaining` (in ξ'-units): one
    /// tilted step from the stored level `ℓ + 1`.
    pub fn phi_between(&self, level: usize, remaining: f64, x: f64) -> (f64, f64, f64) {
        if let Some(shift) = self.analytic_between(level, remaining) {
            return Reader::Terminal(shift).eval(x);
        }
        let s = (self.gamma * remaining.max(0.0)).sqrt();
        let next = self.reader(level + 1);
        if s == 0.0 {
            return next.eval(x);
        }
        let step = Step::new(&self.grid, self.op.m(level), s);
        eval_step(&next, &step, x, &mut Vec::new())
    }

    /// Sampled `(Ψ, ∂ₓΨ, ∂ₓₓΨ)` at an intermediate time, on the same grid.
    pub fn sample_between(&self, level: usize, remaining: f64) -> LevelSlice {
        let analytic = self.analytic_between(level, remaining);
        let sampled = match analytic {
            Some(_) => None,
            None => {
                let s = (self.gamma * remaining.max(0.0)).sqrt();
                let next = self.reader(level + 1);
                Some(match next {
                    Reader::Sampled(sm, _, _) if s == 0.0 => sm.clone(),
                    _ => cascade_step(
                        &self.grid,
                        &next,
                        &Step::new(&self.grid, self.op.m(level), s),
                        true,
                    ),
                })
            }
        };
        LevelSlice {
            sampled,
            analytic,
            spacing: self.grid.spacing,
            half_width: self.grid.half_width,
        }
    }
}

fn eval_step(next: &Reader<'_>, step: &Step, x: f64, rho: &mut Vec<f64>) -> (f64, f64, f64) {
    let mut psi = Vec::with_capacity(step.offsets.len());
    let mut d = Vec::with_capacity(step.offsets.len());
    let mut d2 = Vec::with_capacity(step.offsets.len());
    for &o in &step.offsets {
        let (a, b, c) = next.eval(x + o);
        psi.push(a);
        d.push(b);
        d2.push(c);
    }
    let value = step.tilt(&psi, rho);
    let mean_d: f64 = rho.iter().zip(&d).map(|(r, v)| r * v).sum();
    let mean_d2: f64 = rho.iter().zip(&d2).map(|(r, v)| r * v).sum();
    let var_d: f64 = rho
        .iter()
        .zip(&d)
        .map(|(r, v)| r * (v - mean_d) * (v - mean_d))
        .sum();
    (value, mean_d.clamp(-1.0, 1.0), mean_d2 + step.m * var_d)
}

/// A level function at an intermediate time, for path simulation.
#[derive(Debug, Clone)]
pub struct LevelSlice {
    sampled: Option<Sampled>,
    analytic: Option<f64>,
    spacing: f64,
    half_width: f64,
}

impl LevelSlice {
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match (&self.sampled, self.analytic) {
            (Some(s), _) => Reader::Sampled(s, self.spacing, self.half_width).eval(x),
            (None, Some(shift)) => Reader::Terminal(shift).eval(x),
            (None, None) => unreachable!("slice is either sampled or analytic"),
        }
    }
}

/// `E u(q_b)²` along the optimally controlled path started at `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedValues {
    /// `eu2[b]` for `b = 0..=k+1`.
    pub eu2: Vec<f64>,
}

/// Result of the downward tilted recursion for one integrand: `g[ℓ]` samples
/// `x ↦ E f(X(q_b))` started from `(q_ℓ, x)`, for `ℓ = 0..=b`.
#[derive(Debug, Clone)]
pub struct TiltedProfile {
    pub b: usize,
    pub g: Vec<Vec<f64>>,
}

impl TiltedProfile {
    /// `g_ℓ(x)` off the grid (even extension, constant tail).
    pub fn at(&self, level: usize, x: f64, grid: &Grid) -> f64 {
        let values = &self.g[level];
        let a = x.abs();
        if a >= grid.half_width {
            values[values.len() - 1]
        } else {
            interp(values, grid.spacing, Parity::Even, a)
        }
    }
}

type Integrand<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// Runs the tilted recursion for several `(b, f)` pairs in one sweep. Each
/// `f` must be even in its argument; the returned profiles are sampled on
/// the half grid.
pub fn tilted_profiles(
    sol: &LevelSolution,
    targets: &[(usize, Integrand<'_>)],
) -> Result<Vec<TiltedProfile>> {
    let top = sol.n_levels() - 1;
    let grid = &sol.grid;
    for &(b, f) in targets {
        if b > top {
            return Err(Error::InvalidParameter(format!(
                "level {b} exceeds k + 1 = {top}"
            )));
        }
        for i in 0..grid.len() {
            let v = f(grid.x(i));
            if !v.is_finite() {
                return Err(Error::InvalidIntegrand(grid.x(i)));
            }
        }
    }
    let mut profiles: Vec<TiltedProfile> = targets
        .iter()
        .map(|&(b, f)| {
            let mut g = vec![Vec::new(); b + 1];
            g[b] = (0..grid.len()).map(|i| f(grid.x(i))).collect();
            TiltedProfile { b, g }
        })
        .collect();
    for level in (0..top).rev() {
        let active: Vec<usize> = (0..targets.len())
            .filter(|&t| targets[t].0 > level)
            .collect();
        if active.is_empty() {
            continue;
        }
        let s = sol.step_std(level);
        if s == 0.0 {
            for &t in &active {
                let copy = profiles[t].g[level + 1].clone();
                profiles[t].g[level] = copy;
            }
            continue;
        }
        let step = sol.step(level);
        let next = sol.reader(level + 1);
        let rows: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .with_min_len(32)
            .map_init(
                || (Vec::new(), Vec::new()),
                |(psi, rho), i| {
                    let x = grid.x(i);
                    psi.clear();
                    psi.extend(step.offsets.iter().map(|&o| next.value(x + o)));
                    step.tilt(psi, rho);
                    active
                        .iter()
                        .map(|&t| {
                            let (b, f) = targets[t];
                            let prof = &profiles[t];
                            step.offsets
                                .iter()
                                .zip(rho.iter())
                                .map(|(&o, &r)| {
                                    let y = x + o;
                                    let g = if b == level + 1 {
                                        f(y)
                                    } else {
                                        prof.at(level + 1, y, grid)
                                    };
                                    r * g
                                })
                                .sum()
                        })
                        .collect()
                },
            )
            .collect();
        for (slot, &t) in active.iter().enumerate() {
            profiles[t].g[level] = rows.iter().map(|r| r[slot]).collect();
        }
    }
    Ok(profiles)
}

/// `E f(X(q_b))` for the tilted path started at `(0, 0)`.
pub fn tilted_expectation(
    sol: &LevelSolution,
    f: &(dyn Fn(f64) -> f64 + Sync),
    b: usize,
) -> Result<f64> {
    tilted_expectation_from(sol, f, 0, b, 0.0)
}

/// `E f(X(q_b))` for the tilted path started at `(q_a, x)`.
pub fn tilted_expectation_from(
    sol: &LevelSolution,
    f: &(dyn Fn(f64) -> f64 + Sync),
    a: usize,
    b: usize,
    x: f64,
) -> Result<f64> {
    if a > b {
        return Err(Error::InvalidParameter(format!(
            "start level {a} above target {b}"
        )));
    }
    let profiles = tilted_profiles(sol, &[(b, f)])?;
    if a == b {
        let v = f(x);
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidIntegrand(x))
        };
    }
    // One exact step from x to level a + 1 avoids interpolating g_a.
    let s = sol.step_std(a);
    if s == 0.0 {
        return Ok(if a + 1 == b {
            f(x)
        } else {
            profiles[0].at(a + 1, x, &sol.grid)
        });
    }
    let step = sol.step(a);
    let reader = sol.reader(a + 1);
    let psi: Vec<f64> = step.offsets.iter().map(|&o| reader.value(x + o)).collect();
    let mut rho = Vec::new();
    step.tilt(&psi, &mut rho);
    Ok(step
        .offsets
        .iter()
        .zip(&rho)
        .map(|(&o, &r)| {
            let y = x + o;
            r * if a + 1 == b {
                f(y)
            } else {
                profiles[0].at(a + 1, y, &sol.grid)
            }
        })
        .sum())
}

/// `eu2[b] = E (∂ₓΨ(q_b, X(q_b)))²` for `b = 0..=k+1`.
pub fn expected_u_squared(sol: &LevelSolution) -> TiltedValues {
    let top = sol.n_levels() - 1;
    let fs: Vec<Box<dyn Fn(f64) -> f64 + Sync + '_>> = (0..=top)
        .map(|b| {
            let f: Box<dyn Fn(f64) -> f64 + Sync> = Box::new(move |y| {
                let d = sol.phi_triple(b, y).1;
                d * d
            });
            f
        })
        .collect();
    let targets: Vec<(usize, Integrand<'_>)> = fs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(b, f)| (b, f.as_ref() as Integrand<'_>))
        .collect();
    let profiles = tilted_profiles(sol, &targets).expect("squared slopes are finite");
    let mut eu2 = vec![0.0; top + 1];
    for prof in profiles {
        eu2[prof.b] = prof.g[0][0].clamp(0.0, 1.0);
    }
    TiltedValues { eu2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_order_parameter;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn interpolation_is_exact_on_cubics() {
        let h = 0.1;
        let f = |x: f64| 1.0 + 0.3 * x * x;
        let values: Vec<f64> = (0..=20).map(|i| f(i as f64 * h)).collect();
        for y in [0.0, 0.03, 0.55, 1.17, 1.93, 2.0] {
            assert!(
                close(interp(&values, h, Parity::Even, y), f(y), 1e-13),
                "y = {y}"
            );
        }
        let g = |x: f64| x - 0.2 * x.powi(3);
        let odd: Vec<f64> = (0..=20).map(|i| g(i as f64 * h)).collect();
        for y in [0.0, 0.04, 0.13, 1.99] {
            assert!(
                close(interp(&odd, h, Parity::Odd, y), g(y), 1e-13),
                "y = {y}"
            );
        }
    }

    #[test]
    fn log_cosh_triple_extremes() {
        let (v, d, d2) = log_cosh_triple(0.0);
        assert_eq!((v, d, d2), (0.0, 0.0, 1.0));
        let (v, d, d2) = log_cosh_triple(-800.0);
        assert!(close(v, 800.0 - std::f64::consts::LN_2, 1e-12));
        assert_eq!(d, -1.0);
        assert_eq!(d2, 0.0);
        assert!(close(log_cosh_triple(1.3).0, 1.3f64.cosh().ln(), 1e-15));
    }

    #[test]
    fn zero_temperature_is_terminal() {
        let mix = Mixture::sk();
        let op = validate_order_parameter(2, &[0.3, 0.7], &[0.4]).unwrap();
        let sol = solve_cascade(&mix, &op, 0.0, &GridSpec::default()).unwrap();
        assert_eq!(sol.phi00(), 0.0);
        for level in 0..sol.n_levels() {
            let (v, d) = sol.phi_value(level, 1.7);
            assert!(close(v, 1.7f64.cosh().ln(), 1e-15));
            assert!(close(d, 1.7f64.tanh(), 1e-15));
        }
        assert!(expected_u_squared(&sol).eu2.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn origin_only_matches_full_solve() {
        let mix = Mixture::new(vec![0.7, 0.0, 0.5]).unwrap();
        let op = validate_order_parameter(3, &[0.0, 0.4, 0.9], &[0.2, 0.5]).unwrap();
        let grid = GridSpec::default();
        let full = solve_cascade(&mix, &op, 1.3, &grid).unwrap().phi00();
        assert_eq!(phi00_only(&mix, &op, 1.3, &grid).unwrap(), full);
    }

    #[test]
    fn replica_symmetric_sk_closed_form() {
        // With m = 1 the single step gives log E cosh(√γ z) = γ/2.
        let mix = Mixture::sk();
        let op = OrderParameter::replica_symmetric();
        for gamma in [0.3, 1.0, 4.0] {
            let sol = solve_cascade(&mix, &op, gamma, &GridSpec::default()).unwrap();
            assert!(
                close(sol.phi00(), gamma / 2.0, 1e-12),
                "gamma = {gamma}: {}",
                sol.phi00()
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mix = Mixture::sk();
        let op = OrderParameter::replica_symmetric();
        assert!(matches!(
            solve_cascade(&mix, &op, -1.0, &GridSpec::default()),
            Err(Error::InvalidTemperature(_))
        ));
        let narrow = GridSpec {
            half_width: Some(10.0),
            ..GridSpec::default()
        };
        assert!(matches!(
            solve_cascade(&mix, &op, 4.0, &narrow),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn evenness_and_bounds() {
        let mix = Mixture::new(vec![0.8, 0.6]).unwrap();
        let op = validate_order_parameter(2, &[0.35, 0.8], &[0.5]).unwrap();
        let sol = solve_cascade(&mix, &op, 2.5, &GridSpec::default()).unwrap();
        for level in 0..sol.n_levels() {
            for x in [0.1, 1.3, 5.0, 40.0] {
                let (a, b) = sol.phi_value(level, x);
                let (c, d) = sol.phi_value(level, -x);
                assert_eq!(a, c);
                assert_eq!(b, -d);
                assert!(b.abs() <= 1.0);
            }
            let psi = sol.psi(level);
            for w in psi.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            }
        }
    }

    #[test]
    fn tilted_normalization_and_base_case() {
        let mix = Mixture::sk();
        let op = validate_order_parameter(2, &[0.3, 0.7], &[0.4]).unwrap();
        let sol = solve_cascade(&mix, &op, 2.0, &GridSpec::default()).unwrap();
        for b in 0..sol.n_levels() {
            let one = tilted_expectation(&sol, &|_| 1.0, b).unwrap();
            assert!(close(one, 1.0, 1e-12), "b = {b}: {one}");
        }
        let f = |y: f64| (y * y).cos();
        assert_eq!(tilted_expectation(&sol, &f, 0).unwrap(), 1.0);
        assert!(matches!(
            tilted_expectation(&sol, &|_| f64::NAN, 2),
            Err(Error::InvalidIntegrand(_))
        ));
    }

    #[test]
    fn eu2_replica_symmetric_reduction() {
        // With m = 1 throughout, the tilt is cosh(z)/E cosh(z).
        let mix = Mixture::sk();
        let sol = solve_cascade(
            &mix,
            &OrderParameter::replica_symmetric(),
            1.0,
            &GridSpec::default(),
        )
        .unwrap();
        let eu2 = expected_u_squared(&sol).eu2;
        assert_eq!(eu2.len(), 2);
        assert_eq!(eu2[0], 0.0);
        let gh = GaussHermite::for_order(200);
        let expected = gh.expect(|z| z.tanh() * z.sinh()) / 0.5f64.exp();
        assert!(close(eu2[1], expected, 1e-9), "{} vs {expected}", eu2[1]);
    }
}

//! Monte Carlo of the controlled state
//!
//! ```text
//! dX = γ α ξ'' u ds + √(γ ξ'') dW,   u = ∂ₓΨ(s, X) when optimal,
//! ```
//!
//! simulated in ξ'-time `τ = ξ'(s)`, where it reads `dX = γ α u dτ + √γ dB`.
//! The objective `log cosh X(1) - (γ/2)∫ α u² dτ` has mean `Ψ(0, x)` under
//! the optimal control and no more than that under any other.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{expected_u_squared, log_cosh_triple, LevelSlice, LevelSolution};
use crate::error::{Error, Result};
use crate::rem::{mean_and_variance, pairwise_sum};

pub const MIN_STEPS: usize = 200;

/// Control `u(s, x)`; `s` is the original time in `[0, 1]`.
pub type ControlFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Control {
    Optimal,
    Zero,
    /// `c · ∂ₓΨ`.
    Scaled(f64),
    Custom(ControlFn),
}

impl std::fmt::Debug for Control {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Control::Optimal => f.write_str("Optimal"),
            Control::Zero => f.write_str("Zero"),
            Control::Scaled(c) => write!(f, "Scaled({c})"),
            Control::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeOptions {
    pub n_paths: usize,
    /// Steps over `[0, 1]`, spaced uniformly in ξ'-time.
    pub n_steps: usize,
    pub seed: u64,
    /// Starting point `x`.
    pub x0: f64,
    /// Number of leading paths whose full trajectories are kept.
    pub trace_paths: usize,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 1000,
            seed: 0,
            x0: 0.0,
            trace_paths: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub path: usize,
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

/// Per-path records. Checkpoint arrays are indexed `[b][path]` for the
/// levels `q_0..q_{k+1}`.
#[derive(Debug, Clone)]
pub struct PathBatch {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub x0: f64,
    pub gamma: f64,
    /// Step times in `[0, 1]`; contains every `q_ℓ`.
    pub times: Vec<f64>,
    pub checkpoint_q: Vec<f64>,
    pub objective: Vec<f64>,
    pub drift: Vec<f64>,
    pub penalty: Vec<f64>,
    pub x_end: Vec<f64>,
    /// `∂ₓΨ(q_b, X(q_b))`.
    pub u_at: Vec<Vec<f64>>,
    /// `∂ₓₓΨ(q_b, X(q_b))`.
    pub d2_at: Vec<Vec<f64>>,
    /// `∂ₓₓΨ(q_{b+1}) - ∂ₓₓΨ(q_b) + γ∫ α (∂ₓₓΨ)² dτ` over stretch `b`.
    pub second_identity: Vec<Vec<f64>>,
    pub traces: Vec<TraceRow>,
}

struct Schedule {
    /// ξ'-time at each grid point.
    tau: Vec<f64>,
    s: Vec<f64>,
    /// Stretch index of the step starting at each grid point.
    level: Vec<usize>,
    /// Index in `tau` of each `q_ℓ`.
    checkpoints: Vec<usize>,
}

fn schedule(sol: &LevelSolution, n_steps: usize) -> Schedule {
    let mix = sol.mixture();
    let op = sol.order_parameter();
    let total = mix.xi_prime(1.0);
    let mut tau = vec![0.0];
    let mut s = vec![0.0];
    let mut level = Vec::new();
    let mut checkpoints = vec![0];
    for l in 0..op.n_levels() {
        let (a, b) = (mix.xi_prime(op.q(l)), mix.xi_prime(op.q(l + 1)));
        if b > a {
            let n = ((n_steps as f64 * (b - a) / total).ceil() as usize).max(1);
            for j in 1..=n {
                let t = if j == n {
                    b
                } else {
                    a + (b - a) * j as f64 / n as f64
                };
                tau.push(t);
                s.push(if j == n {
                    op.q(l + 1)
                } else {
                    mix.xi_prime_inverse(t)
                });
                level.push(l);
            }
        }
        checkpoints.push(tau.len() - 1);
    }
    Schedule {
        tau,
        s,
        level,
        checkpoints,
    }
}

struct PathOut {
    objective: f64,
    drift: f64,
    penalty: f64,
    x_end: f64,
    u_at: Vec<f64>,
    d2_at: Vec<f64>,
    second: Vec<f64>,
    trace: Vec<TraceRow>,
}

pub fn simulate(sol: &LevelSolution, control: &Control, opts: &SdeOptions) -> Result<PathBatch> {
    if opts.n_steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!(
            "n_steps must be at least {MIN_STEPS}, got {}",
            opts.n_steps
        )));
    }
    if opts.n_paths < 2 {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    if !opts.x0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "starting point {}",
            opts.x0
        )));
    }
    let gamma = sol.gamma();
    let op = sol.order_parameter();
    let sch = schedule(sol, opts.n_steps);
    let n_cp = sch.checkpoints.len();
    // Ψ at the left end of every step whose stretch carries drift.
    let slices: Vec<Option<LevelSlice>> = (0..sch.level.len())
        .into_par_iter()
        .map(|j| {
            let l = sch.level[j];
            if op.m(l) == 0.0 {
                return None;
            }
            let remaining = sch.tau[checkpoint_end(&sch, l)] - sch.tau[j];
            Some(sol.sample_between(l, remaining))
        })
        .collect();
    let paths: Vec<PathOut> = (0..opts.n_paths)
        .into_par_iter()
        .with_min_len(64)
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(p as u64);
            let mut x = opts.x0;
            let (mut drift, mut penalty) = (0.0, 0.0);
            let mut u_at = Vec::with_capacity(n_cp);
            let mut d2_at = Vec::with_capacity(n_cp);
            let mut second = vec![0.0; n_cp - 1];
            let mut trace = Vec::new();
            let keep = p < opts.trace_paths;
            let mut next_cp = 0;
            for j in 0..sch.tau.len() {
                while next_cp < n_cp && sch.checkpoints[next_cp] == j {
                    let (_, u, d2) = sol.phi_triple(next_cp, x);
                    u_at.push(u);
                    d2_at.push(d2);
                    if next_cp > 0 {
                        second[next_cp - 1] += d2 - d2_at[next_cp - 1];
                    }
                    next_cp += 1;
                }
                if j == sch.level.len() {
                    if keep {
                        trace.push(TraceRow {
                            path: p,
                            t: sch.s[j],
                            x,
                            u: u_at[n_cp - 1],
                        });
                    }
                    break;
                }
                let l = sch.level[j];
                let dt = sch.tau[j + 1] - sch.tau[j];
                let m = op.m(l);
                let (u, d2) = match &slices[j] {
                    Some(slice) => {
                        let (_, du, d2) = slice.eval(x);
                        let u = match control {
                            Control::Optimal => du,
                            Control::Zero => 0.0,
                            Control::Scaled(c) => c * du,
                            Control::Custom(f) => f(sch.s[j], x),
                        };
                        (u, d2)
                    }
                    None => (0.0, 0.0),
                };
                if keep {
                    trace.push(TraceRow {
                        path: p,
                        t: sch.s[j],
                        x,
                        u,
                    });
                }
                second[l] += gamma * m * d2 * d2 * dt;
                drift += gamma * m * u * dt;
                penalty += 0.5 * gamma * m * u * u * dt;
                let z: f64 = StandardNormal.sample(&mut rng);
                x += gamma * m * u * dt + (gamma * dt).sqrt() * z;
            }
            PathOut {
                objective: log_cosh_triple(x).0 - penalty,
                drift,
                penalty,
                x_end: x,
                u_at,
                d2_at,
                second,
                trace,
            }
        })
        .collect();
    let column = |f: &dyn Fn(&PathOut) -> f64| paths.iter().map(f).collect::<Vec<f64>>();
    Ok(PathBatch {
        n_paths: opts.n_paths,
        n_steps: sch.level.len(),
        seed: opts.seed,
        x0: opts.x0,
        gamma,
        times: sch.s.clone(),
        checkpoint_q: op.q_all().to_vec(),
        objective: column(&|p| p.objective),
        drift: column(&|p| p.drift),
        penalty: column(&|p| p.penalty),
        x_end: column(&|p| p.x_end),
        u_at: (0..n_cp).map(|b| column(&|p| p.u_at[b])).collect(),
        d2_at: (0..n_cp).map(|b| column(&|p| p.d2_at[b])).collect(),
        second_identity: (0..n_cp - 1).map(|b| column(&|p| p.second[b])).collect(),
        traces: paths.iter().flat_map(|p| p.trace.iter().copied()).collect(),
    })
}

fn checkpoint_end(sch: &Schedule, level: usize) -> usize {
    sch.checkpoints[level + 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl MeanEstimate {
    pub fn of(values: &[f64]) -> Self {
        let (mean, var) = mean_and_variance(values);
        Self {
            mean,
            std_error: (var / values.len() as f64).sqrt(),
        }
    }

    /// `|mean - target| <= z · SE`, with a rounding floor for exact cases.
    pub fn agrees_with(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_error + 1e-12 * (1.0 + target.abs())
    }
}

pub fn variational_objective(batch: &PathBatch) -> MeanEstimate {
    MeanEstimate::of(&batch.objective)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub level: usize,
    pub q: f64,
    pub mean_u: MeanEstimate,
    pub mean_u2: MeanEstimate,
    /// Expected `E u(q_b)²` from the tilted recursion.
    pub eu2: f64,
    pub u_centered: bool,
    pub u2_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StretchRow {
    pub level: usize,
    pub from_q: f64,
    pub to_q: f64,
    /// Mean of the second-identity residual (expected zero).
    pub residual: MeanEstimate,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub checkpoints: Vec<CheckpointRow>,
    pub stretches: Vec<StretchRow>,
    pub passed: bool,
}

/// Identities for an optimal-control batch, each within `z` standard errors.
/// `E u` is only required to vanish when the start is the origin.
pub fn martingale_check(batch: &PathBatch, sol: &LevelSolution, z: f64) -> MartingaleReport {
    let eu2 = expected_u_squared(sol).eu2;
    let (_, u0, _) = sol.phi_triple(0, batch.x0);
    let checkpoints: Vec<CheckpointRow> = (0..batch.u_at.len())
        .map(|b| {
            let mean_u = MeanEstimate::of(&batch.u_at[b]);
            let sq: Vec<f64> = batch.u_at[b].iter().map(|u| u * u).collect();
            let mean_u2 = MeanEstimate::of(&sq);
            CheckpointRow {
                level: b,
                q: batch.checkpoint_q[b],
                u_centered: mean_u.agrees_with(u0, z),
                u2_matches: batch.x0 != 0.0 || mean_u2.agrees_with(eu2[b], z),
                mean_u,
                mean_u2,
                eu2: eu2[b],
            }
        })
        .collect();
    let stretches: Vec<StretchRow> = batch
        .second_identity
        .iter()
        .enumerate()
        .map(|(b, values)| {
            let residual = MeanEstimate::of(values);
            StretchRow {
                level: b,
                from_q: batch.checkpoint_q[b],
                to_q: batch.checkpoint_q[b + 1],
                passed: residual.agrees_with(0.0, z),
                residual,
            }
        })
        .collect();
    let passed = checkpoints.iter().all(|c| c.u_centered && c.u2_matches)
        && stretches.iter().all(|s| s.passed);
    MartingaleReport {
        checkpoints,
        stretches,
        passed,
    }
}

/// Sum of per-path objectives in path order; exposed for reproducibility checks.
pub fn objective_sum(batch: &PathBatch) -> f64 {
    pairwise_sum(&batch.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{solve_cascade, GridSpec};
    use crate::model::{validate_order_parameter, Mixture, OrderParameter};

    fn opts(n_paths: usize) -> SdeOptions {
        SdeOptions {
            n_paths,
            n_steps: 200,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn zero_temperature_paths_stay_put() {
        let sol = solve_cascade(
            &Mixture::sk(),
            &OrderParameter::replica_symmetric(),
            0.0,
            &GridSpec::default(),
        )
        .unwrap();
        let b = simulate(&sol, &Control::Optimal, &opts(64)).unwrap();
        assert!(b.x_end.iter().all(|&x| x == 0.0));
        let r = martingale_check(&b, &sol, 3.0);
        assert!(r.passed);
    }

    #[test]
    fn grid_hits_every_level() {
        let mix = Mixture::sk();
        let op = validate_order_parameter(2, &[0.3, 0.7], &[0.4]).unwrap();
        let sol = solve_cascade(&mix, &op, 1.5, &GridSpec::default()).unwrap();
        let sch = schedule(&sol, 200);
        for (b, &i) in sch.checkpoints.iter().enumerate() {
            assert_eq!(sch.s[i], op.q(b));
        }
        assert!(sch.level.len() >= 200);
    }

    #[test]
    fn zero_control_is_gaussian() {
        let sol = solve_cascade(
            &Mixture::sk(),
            &OrderParameter::replica_symmetric(),
            1.0,
            &GridSpec::default(),
        )
        .unwrap();
        let b = simulate(&sol, &Control::Zero, &opts(4000)).unwrap();
        let var = mean_and_variance(&b.x_end).1;
        assert!((var - 1.0).abs() < 0.1, "{var}");
        assert!(b.penalty.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let sol = solve_cascade(
            &Mixture::sk(),
            &OrderParameter::replica_symmetric(),
            1.0,
            &GridSpec::default(),
        )
        .unwrap();
        let a = simulate(&sol, &Control::Optimal, &opts(300)).unwrap();
        let b = simulate(&sol, &Control::Optimal, &opts(300)).unwrap();
        assert_eq!(objective_sum(&a).to_bits(), objective_sum(&b).to_bits());
    }

    #[test]
    fn rejects_short_schedules() {
        let sol = solve_cascade(
            &Mixture::sk(),
            &OrderParameter::replica_symmetric(),
            1.0,
            &GridSpec::default(),
        )
        .unwrap();
        let o = SdeOptions {
            n_steps: 50,
            ..opts(10)
        };
        assert!(simulate(&sol, &Control::Zero, &o).is_err());
    }
}

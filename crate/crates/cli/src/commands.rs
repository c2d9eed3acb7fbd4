use std::collections::BTreeMap;

use anyhow::{bail, Result};
use parisi_core::cascade::{solve_cascade, Grid};
use parisi_core::functional::{evaluate_solution, residuals_of, AtomResidual, Evaluation};
use parisi_core::legendre::{
    concavity_certificate, default_panel, duality_forward, duality_inverse_with, gamma_hat,
    l_hat_non_uniqueness, ConcavityCertificate, ForwardReport, InverseReport, LegendreResult,
    NonUniquenessReport, ValueCurve,
};
use parisi_core::minimize::{minimize, temperature_scan, ParisiMeasure};
use parisi_core::rem::{p_rem, rem_finite_n_mc};
use parisi_core::sde::{
    martingale_check, simulate, variational_objective, Control, MartingaleReport, MeanEstimate,
};
use serde::Serialize;

use crate::config::Resolved;
use crate::output::{to_json, Cell, Csv, Sink};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct EvalReport<'a> {
    version: &'static str,
    coeffs: BTreeMap<String, f64>,
    q: &'a [f64],
    m: &'a [f64],
    grid: Grid,
    evaluation: Evaluation,
    dgamma_p_direct: f64,
    residuals: Vec<AtomResidual>,
}

fn coeff_map(cfg: &Resolved) -> BTreeMap<String, f64> {
    cfg.raw
        .model
        .as_ref()
        .map(|m| m.coeffs.clone())
        .unwrap_or_default()
}

/// Single-temperature results are emitted bare, several as an array.
fn one_or_many<T: Serialize>(items: &[T]) -> Result<String> {
    if items.len() == 1 {
        to_json(&items[0])
    } else {
        to_json(&items)
    }
}

pub fn eval(cfg: &Resolved, sink: &Sink) -> Result<bool> {
    let mix = cfg.mixture()?;
    let op = cfg.order_parameter()?;
    if cfg.raw.output.dump_levels && !sink.has_dir() {
        bail!(parisi_core::Error::Config(
            "`dump_levels` needs --out".into()
        ));
    }
    let mut reports = Vec::new();
    let mut dump = Csv::new(&["gamma", "level", "q", "x", "psi", "dpsi"]);
    for gamma in cfg.temperatures()? {
        let sol = solve_cascade(mix, op, gamma, &cfg.raw.grid)?;
        let ev = evaluate_solution(&sol);
        if cfg.raw.output.dump_levels {
            let grid = sol.grid();
            for level in 0..sol.n_levels() {
                let (psi, dpsi) = (sol.psi(level), sol.dpsi(level));
                for i in 0..grid.len() {
                    dump.row(&[
                        Cell::F(gamma),
                        Cell::U(level as u64),
                        Cell::F(op.q(level)),
                        Cell::F(grid.x(i)),
                        Cell::F(psi[i]),
                        Cell::F(dpsi[i]),
                    ]);
                }
            }
        }
        reports.push(EvalReport {
            version: VERSION,
            coeffs: coeff_map(cfg),
            q: op.q_all(),
            m: op.m_all(),
            grid: *sol.grid(),
            dgamma_p_direct: ev.dgamma_p_direct(),
            residuals: residuals_of(op, &ev),
            evaluation: ev,
        });
    }
    sink.emit("evaluation.json", &one_or_many(&reports)?)?;
    if cfg.raw.output.dump_levels {
        sink.emit("levels.csv", &dump.into_string())?;
    }
    Ok(true)
}

pub fn minimize_cmd(cfg: &Resolved, sink: &Sink) -> Result<bool> {
    let mix = cfg.mixture()?;
    let opts = cfg.minimize_options();
    let measures: Vec<ParisiMeasure> = cfg
        .temperatures()?
        .into_iter()
        .map(|g| minimize(mix, g, cfg.steps(), &opts))
        .collect::<Result<_, _>>()?;
    sink.emit("minimize.json", &one_or_many(&measures)?)?;
    Ok(true)
}

pub const SCAN_HEADER: [&str; 8] = [
    "gamma",
    "beta",
    "value",
    "dvalue_fd",
    "int_alpha_xiprime",
    "overlap_moment",
    "max_residual",
    "converged",
];

pub fn scan(cfg: &Resolved, sink: &Sink) -> Result<bool> {
    let mix = cfg.mixture()?;
    let mut gammas = cfg.temperatures()?;
    if gammas.iter().any(|&g| g <= 0.0) {
        bail!(parisi_core::Error::Config(
            "scan temperatures must be positive".into()
        ));
    }
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let rows = temperature_scan(mix, &gammas, cfg.steps(), &cfg.minimize_options())?;
    let mut csv = Csv::new(&SCAN_HEADER);
    for r in &rows {
        csv.row(&[
            Cell::F(r.gamma),
            Cell::F(r.beta),
            Cell::F(r.value),
            Cell::F(r.dvalue_fd),
            Cell::F(r.int_alpha_xiprime),
            Cell::F(r.overlap_moment),
            Cell::F(r.max_residual),
            Cell::B(r.converged),
        ]);
    }
    sink.emit("scan.csv", &csv.into_string())?;
    Ok(true)
}

#[derive(Serialize)]
struct LegendreReport {
    gamma_hat: LegendreResult,
    concavity: Option<ConcavityCertificate>,
}

pub fn legendre(cfg: &Resolved, sink: &Sink) -> Result<bool> {
    let mix = cfg.mixture()?;
    let op = cfg.order_parameter()?;
    let gh = gamma_hat(mix, op, &cfg.legendre_options())?;
    let mut gammas = cfg.raw.temperatures();
    gammas.sort_by(f64::total_cmp);
    let concavity = if gammas.len() >= 3 {
        Some(concavity_certificate(mix, op, &gammas, &cfg.raw.grid)?)
    } else {
        None
    };
    let passed = concavity.as_ref().is_none_or(|c| c.passed);
    sink.emit(
        "legendre.json",
        &to_json(&LegendreReport {
            gamma_hat: gh,
            concavity,
        })?,
    )?;
    Ok(passed)
}

#[derive(Serialize)]
struct DualityReport {
    forward: Vec<ForwardReport>,
    inverse: Vec<InverseReport>,
    non_uniqueness: Vec<NonUniquenessEntry>,
    passed: bool,
}

#[derive(Serialize)]
struct NonUniquenessEntry {
    gamma: f64,
    /// Absent when `α_P ≡ 1`, where no other α shares `∫αξ' = ξ(1)`.
    report: Option<NonUniquenessReport>,
}

pub fn dual_check(cfg: &Resolved, sink: &Sink) -> Result<bool> {
    let mix = cfg.mixture()?;
    let opts = cfg.legendre_options();
    let k = cfg.steps();
    let panel = default_panel();
    let curve = ValueCurve::new(mix, k, opts.minimize);
    let (mut forward, mut inverse, mut non_uniqueness) = (Vec::new(), Vec::new(), Vec::new());
    for gamma in cfg.temperatures()? {
        let f = duality_forward(mix, gamma, k, &panel, &opts)?;
        let pm = curve.at(gamma)?;
        inverse.push(duality_inverse_with(&curve, &pm.op, gamma, &opts)?);
        let report = if pm.int_alpha_xi_prime < mix.xi(1.0) * (1.0 - 1e-9) {
            Some(l_hat_non_uniqueness(&curve, gamma, opts.duality_tol)?)
        } else {
            None
        };
        non_uniqueness.push(NonUniquenessEntry { gamma, report });
        forward.push(f);
    }
    let passed = forward.iter().all(|f| f.passed && f.panel_passed)
        && inverse.iter().all(|i| i.passed)
        && non_uniqueness
            .iter()
            .all(|n| n.report.as_ref().is_none_or(|r| r.passed));
    sink.emit(
        "duality.json",
        &to_json(&DualityReport {
            forward,
            inverse,
            non_uniqueness,
            passed,
        })?,
    )?;
    Ok(passed)
}

pub fn rem(cfg: &Resolved, sink: &Sink) -> Result<bool> {
    let gammas = cfg.temperatures()?;
    let mut csv = Csv::new(&["gamma", "p_rem", "regime"]);
    for &g in &gammas {
        let p = p_rem(g)?;
        csv.row(&[
            Cell::F(g),
            Cell::F(p.p_hat),
            Cell::S(p.regime.as_str().into()),
        ]);
    }
    sink.emit("rem.csv", &csv.into_string())?;
    let sizes = &cfg.raw.rem.n;
    if !sizes.is_empty() {
        let seed = cfg.raw.seed.unwrap_or(0);
        let mut mc = Csv::new(&["n", "samples", "gamma", "estimate", "std_error", "p_rem"]);
        for &n in sizes {
            for &g in &gammas {
                let e = rem_finite_n_mc(n, cfg.raw.rem.samples, g, seed)?;
                mc.row(&[
                    Cell::U(n as u64),
                    Cell::U(e.samples as u64),
                    Cell::F(g),
                    Cell::F(e.estimate),
                    Cell::F(e.std_error),
                    Cell::F(p_rem(g)?.p_hat),
                ]);
            }
        }
        if !sink.has_dir() {
            println!();
        }
        sink.emit("rem_mc.csv", &mc.into_string())?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct SdeReport {
    gamma: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    phi00: f64,
    optimal: MeanEstimate,
    zero_control: MeanEstimate,
    optimal_matches: bool,
    zero_control_below: bool,
    martingale: MartingaleReport,
    passed: bool,
}

pub fn sde_check(cfg: &Resolved, sink: &Sink) -> Result<bool> {
    let mix = cfg.mixture()?;
    let op = cfg.order_parameter()?;
    let gammas = cfg.temperatures()?;
    let [gamma] = gammas[..] else {
        bail!(parisi_core::Error::Config(
            "sde-check takes a single `gamma`".into()
        ));
    };
    let sol = solve_cascade(mix, op, gamma, &cfg.raw.grid)?;
    let opts = cfg.raw.sde;
    let optimal = simulate(&sol, &Control::Optimal, &opts)?;
    let zero = simulate(&sol, &Control::Zero, &opts)?;
    let phi = sol.phi00();
    let v_opt = variational_objective(&optimal);
    let v_zero = variational_objective(&zero);
    let martingale = martingale_check(&optimal, &sol, 3.0);
    let optimal_matches = v_opt.agrees_with(phi, 3.0);
    let zero_control_below = v_zero.mean <= phi + 3.0 * v_zero.std_error;
    let passed = optimal_matches && zero_control_below && martingale.passed;
    if opts.trace_paths > 0 {
        let mut csv = Csv::new(&["path", "t", "x", "u"]);
        for r in &optimal.traces {
            csv.row(&[
                Cell::U(r.path as u64),
                Cell::F(r.t),
                Cell::F(r.x),
                Cell::F(r.u),
            ]);
        }
        sink.emit_file_only("paths.csv", &csv.into_string())?;
    }
    sink.emit(
        "sde.json",
        &to_json(&SdeReport {
            gamma,
            n_paths: optimal.n_paths,
            n_steps: optimal.n_steps,
            seed: optimal.seed,
            phi00: phi,
            optimal: v_opt,
            zero_control: v_zero,
            optimal_matches,
            zero_control_below,
            martingale,
            passed,
        })?,
    )?;
    Ok(passed)
}

pub fn selftest(only: &[u8]) -> Result<bool> {
    let ids: Vec<u8> = if only.is_empty() {
        (1..=11).collect()
    } else {
        only.to_vec()
    };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=11).contains(&i)) {
        bail!(parisi_core::Error::Config(format!(
            "no criterion {bad}; criteria are 1 to 11"
        )));
    }
    let mut all = true;
    for id in ids {
        let outcome = parisi_verify::run(id);
        println!("{outcome}");
        all &= outcome.ok();
    }
    Ok(all)
}

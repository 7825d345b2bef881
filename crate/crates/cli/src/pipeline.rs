//! The `run`, `verify` and `sweep` pipelines.

use std::path::{Path, PathBuf};

use anyhow::Result;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use worldsheet::error::{Assumption, Error};
use worldsheet::initial_data::{check_assumptions, lambda0_from_data, smallness_norms, InitialData};
use worldsheet::numerics::loglog_slope;
use worldsheet::solver::characteristic::{solve_characteristic, solve_characteristic_backward};
use worldsheet::solver::upwind::solve_upwind;
use worldsheet::solver::{SolveResult, Snapshot, Termination};
use worldsheet::spherical::{cross_validate, solve_spherical};
use worldsheet::verify::{run_suite, SuiteConfig, SuiteResult, SUITES};

use crate::config::{RunConfig, SolverChoice};
use crate::output::{write_snapshots, Records};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ASSUMPTION: u8 = 3;
pub const EXIT_HORIZON: u8 = 4;
pub const EXIT_FAILURE: u8 = 5;

/// Report label and exit code of an error.
pub fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    match err.downcast_ref::<Error>() {
        Some(Error::AssumptionViolated { which: Assumption::Exterior, .. }) | Some(Error::HorizonViolation { .. }) => {
            ("horizon-violation", EXIT_HORIZON)
        }
        Some(Error::AssumptionViolated { .. }) => ("assumption-violated", EXIT_ASSUMPTION),
        Some(Error::Parse { .. }) | Some(Error::InvalidInput(_)) | Some(Error::CflViolation { .. }) => {
            ("config-error", EXIT_CONFIG)
        }
        Some(_) => ("numerical-error", EXIT_FAILURE),
        None => ("error", EXIT_FAILURE),
    }
}

fn termination_code(t: &Termination) -> u8 {
    match t {
        Termination::ReachedT => EXIT_OK,
        Termination::HorizonViolation { .. } => EXIT_HORIZON,
        _ => EXIT_FAILURE,
    }
}

fn output_path(dir: &Path, prefix: &str, name: &str) -> PathBuf {
    dir.join(format!("{prefix}_{name}"))
}

fn run_record(solver: &str, r: &SolveResult) -> serde_json::Value {
    let mut d = serde_json::to_value(&r.diagnostics).unwrap_or_default();
    if let Some(m) = d.as_object_mut() {
        m.remove("verdicts");
    }
    json!({
        "solver": solver,
        "chart": r.chart,
        "termination": r.termination,
        "final_time": r.final_time,
        "steps": r.steps,
        "grid": r.grid,
        "min_horizon_gap": r.extremes.min_horizon_gap,
        "max_delta": r.extremes.max_delta,
        "min_gap": r.extremes.min_gap,
        "null_defect": r.null_defect,
        "monitors": d,
    })
}

/// Largest spatial position difference between two snapshots, compared at
/// the nodes of `b` that `a` covers.
pub fn position_deviation(a: &Snapshot, b: &Snapshot) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for (th, jb) in b.theta.iter().zip(&b.jets) {
        if let Some(ja) = a.sample(*th) {
            let d = (1..4).map(|c| (ja.u[c] - jb.u[c]).abs()).fold(0.0, f64::max);
            worst = Some(worst.map_or(d, |w| w.max(d)));
        }
    }
    worst
}

/// Runs the configured pipeline and returns the exit code. Everything that
/// happens is also written to `<prefix>_diagnostics.jsonl` in `out_dir`.
pub fn run(cfg: &RunConfig, base: &Path, out_dir: &Path) -> Result<u8> {
    std::fs::create_dir_all(out_dir)?;
    let prefix = &cfg.output.prefix;
    let mut rec = Records::create(&output_path(out_dir, prefix, "diagnostics.jsonl"))?;
    rec.emit("config", cfg)?;
    let code = match run_inner(cfg, base, out_dir, &mut rec) {
        Ok(code) => code,
        Err(e) => {
            let (kind, code) = classify(&e);
            warn!("{kind}: {e:#}");
            rec.emit("error", &json!({ "kind": kind, "message": format!("{e:#}") }))?;
            code
        }
    };
    rec.emit("summary", &json!({ "exit_code": code }))?;
    info!("diagnostics written to {}", rec.path.display());
    rec.finish()?;
    Ok(code)
}

fn run_inner(cfg: &RunConfig, base: &Path, out_dir: &Path, rec: &mut Records) -> Result<u8> {
    let mass = cfg.metric.mass();
    let prefix = &cfg.output.prefix;
    let (data, epsilon) = cfg.data.load(base)?;
    info!("data: {} nodes, periodic = {}", data.len(), data.periodic);
    worldsheet::initial_data::check_exterior_data(&data, mass, cfg.metric.horizon_margin)?;

    let background = cfg.data.file.is_none().then(|| cfg.data.family().background());
    rec.emit("smallness", &smallness_norms(&data, background)?)?;
    let report = check_assumptions(&lambda0_from_data(&data, mass)?, cfg.solver.c1_bound);
    rec.emit("assumptions", &report)?;
    if cfg.solver.enforce_assumptions {
        report.into_result()?;
    }

    let ch = cfg.characteristic();
    let mut code = EXIT_OK;
    let mut solved: Vec<(&str, SolveResult)> = Vec::new();
    match cfg.solver.kind {
        SolverChoice::Characteristic if ch.t_final < 0.0 => {
            let r = solve_characteristic_backward(&data, mass, &ch, epsilon, cfg.suites.mutation)?;
            solved.push(("characteristic", r));
        }
        SolverChoice::Characteristic | SolverChoice::Both => {
            solved.push(("characteristic", solve_characteristic(&data, mass, &ch, epsilon, cfg.suites.mutation)?));
        }
        SolverChoice::Spherical => {
            solved.push(("characteristic", solve_characteristic(&data, mass, &ch, epsilon, cfg.suites.mutation)?));
            solved.push(("spherical", solve_spherical(&data, mass, &ch, cfg.solver.polar_margin)?));
        }
        SolverChoice::Upwind => {}
    }
    for (name, r) in &solved {
        info!("{name} ({}): {} at t = {} after {} steps", r.chart, r.termination.label(), r.final_time, r.steps);
        rec.emit("run", &run_record(name, r))?;
        for v in &r.diagnostics.verdicts {
            if !v.passed {
                warn!("monitor bound '{}' exceeded: {} > {}", v.name, v.measured, v.bound);
            }
            rec.emit("verdict", &json!({ "solver": name, "verdict": v }))?;
        }
        if cfg.output.write_snapshots {
            write_snapshots(&output_path(out_dir, prefix, &format!("{}_snapshots.csv", r.chart)), r.chart, &r.snapshots)?;
        }
        code = code.max(termination_code(&r.termination));
    }
    if let [(_, cart), (_, sph)] = &solved[..] {
        if cart.termination.reached() && sph.termination.reached() {
            rec.emit("cross-chart", &json!({ "t": cart.final_time, "max_position_deviation": cross_validate(cart, sph)? }))?;
        }
    }

    if matches!(cfg.solver.kind, SolverChoice::Upwind | SolverChoice::Both) {
        let up = solve_upwind(&data, mass, &cfg.upwind())?;
        info!("upwind: {} at t = {} after {} steps", up.termination.label(), up.final_time, up.steps);
        rec.emit(
            "run",
            &json!({
                "solver": "upwind",
                "termination": up.termination,
                "final_time": up.final_time,
                "steps": up.steps,
                "h": up.h,
            }),
        )?;
        if cfg.output.write_snapshots {
            write_snapshots(&output_path(out_dir, prefix, "upwind_snapshots.csv"), "upwind", &up.snapshots)?;
        }
        code = code.max(termination_code(&up.termination));
        if let Some((_, ch)) = solved.first() {
            if ch.termination.reached() && up.termination.reached() {
                let dev = position_deviation(ch.last(), up.last());
                rec.emit("cross-solver", &json!({ "t": up.final_time, "max_position_deviation": dev }))?;
            }
        }
    }

    if !cfg.suites.names.is_empty() {
        let results = run_suites(&cfg.suites.names, &cfg.suite_config());
        for r in &results {
            rec.emit("suite", r)?;
        }
        if results.iter().any(|r| !r.passed) {
            code = code.max(EXIT_FAILURE);
        }
    }
    Ok(code)
}

/// Runs the named suites (all when empty). Errors become failed results.
pub fn run_suites(names: &[String], cfg: &SuiteConfig) -> Vec<SuiteResult> {
    let names: Vec<&str> =
        if names.is_empty() { SUITES.to_vec() } else { names.iter().map(String::as_str).collect() };
    names
        .par_iter()
        .map(|n| {
            run_suite(n, cfg).unwrap_or_else(|e| SuiteResult {
                name: n.to_string(),
                passed: false,
                measured: f64::NAN,
                tolerance: f64::NAN,
                samples: 0,
                detail: format!("suite could not run: {e}"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Epsilon,
    Nodes,
    TFinal,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub termination: String,
    pub final_time: f64,
    pub steps: usize,
    pub v_inf: f64,
    pub v_inf_initial: f64,
    pub v_inf_ratio: f64,
    pub v1: f64,
    pub q_v: f64,
    pub min_horizon_gap: f64,
    pub max_delta: f64,
    pub min_gap: f64,
    pub null_defect: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(value: f64, e: &anyhow::Error) -> Self {
        SweepRow {
            value,
            termination: classify(e).0.to_string(),
            final_time: f64::NAN,
            steps: 0,
            v_inf: f64::NAN,
            v_inf_initial: f64::NAN,
            v_inf_ratio: f64::NAN,
            v1: f64::NAN,
            q_v: f64::NAN,
            min_horizon_gap: f64::NAN,
            max_delta: f64::NAN,
            min_gap: f64::NAN,
            null_defect: f64::NAN,
            error: Some(format!("{e:#}")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct SweepFit {
    pub axis: Option<SweepAxis>,
    pub runs: usize,
    pub failed: usize,
    /// Slope of `log Q_V` against `log epsilon`.
    pub q_v_exponent: Option<f64>,
    /// Slope of `log V1` against `log epsilon`.
    pub v1_exponent: Option<f64>,
    /// Orders from successive differences of the final positions.
    pub convergence_orders: Vec<f64>,
    pub max_v_inf_ratio: Option<f64>,
}

fn sweep_one(cfg: &RunConfig, axis: SweepAxis, value: f64, base: &Path) -> Result<(SweepRow, Snapshot)> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Epsilon => c.data.epsilon = value,
        SweepAxis::Nodes => c.grid.nodes = value as usize,
        SweepAxis::TFinal => c.solver.t_final = value,
    }
    c.validate()?;
    let (data, epsilon): (InitialData, _) = c.data.load(base)?;
    let ch = c.characteristic();
    let r = match c.solver.kind {
        SolverChoice::Spherical => solve_spherical(&data, c.metric.mass(), &ch, c.solver.polar_margin)?,
        _ => solve_characteristic(&data, c.metric.mass(), &ch, epsilon, c.suites.mutation)?,
    };
    let d = &r.diagnostics;
    let row = SweepRow {
        value,
        termination: r.termination.label().to_string(),
        final_time: r.final_time,
        steps: r.steps,
        v_inf: d.v_inf,
        v_inf_initial: d.v_inf_initial,
        v_inf_ratio: d.v_inf / d.v_inf_initial,
        v1: d.v1,
        q_v: d.q_v,
        min_horizon_gap: r.extremes.min_horizon_gap,
        max_delta: r.extremes.max_delta,
        min_gap: r.extremes.min_gap,
        null_defect: r.null_defect,
        error: None,
    };
    Ok((row, r.last().clone()))
}

/// Independent runs along one parameter axis. Failed runs are recorded and
/// skipped by the fits.
pub fn sweep(cfg: &RunConfig, axis: SweepAxis, values: &[f64], base: &Path) -> (Vec<SweepRow>, SweepFit) {
    let runs: Vec<(SweepRow, Option<Snapshot>)> = values
        .par_iter()
        .map(|&v| match sweep_one(cfg, axis, v, base) {
            Ok((row, snap)) => (row, Some(snap)),
            Err(e) => {
                warn!("sweep value {v}: {e:#}");
                (SweepRow::failed(v, &e), None)
            }
        })
        .collect();
    let ok: Vec<&(SweepRow, Option<Snapshot>)> =
        runs.iter().filter(|(r, s)| s.is_some() && r.termination == Termination::ReachedT.label()).collect();
    let mut fit = SweepFit {
        axis: Some(axis),
        runs: runs.len(),
        failed: runs.len() - ok.len(),
        ..SweepFit::default()
    };
    let xs: Vec<f64> = ok.iter().map(|(r, _)| r.value).collect();
    match axis {
        SweepAxis::Epsilon if ok.len() >= 2 => {
            let q: Vec<f64> = ok.iter().map(|(r, _)| r.q_v).collect();
            let v1: Vec<f64> = ok.iter().map(|(r, _)| r.v1).collect();
            fit.q_v_exponent = Some(loglog_slope(&xs, &q));
            fit.v1_exponent = Some(loglog_slope(&xs, &v1));
        }
        SweepAxis::Nodes => {
            let mut sorted: Vec<_> = ok.iter().map(|(r, s)| (r.value, s.as_ref().unwrap())).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let diffs: Vec<(f64, f64)> = sorted
                .windows(2)
                .filter_map(|w| position_deviation(w[1].1, w[0].1).map(|d| (w[0].0, d)))
                .collect();
            fit.convergence_orders = diffs
                .windows(2)
                .map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 / w[0].0).ln())
                .collect();
        }
        SweepAxis::TFinal => {
            fit.max_v_inf_ratio = ok.iter().map(|(r, _)| r.v_inf_ratio).reduce(f64::max);
        }
        _ => {}
    }
    (runs.into_iter().map(|(r, _)| r).collect(), fit)
}

pub fn write_sweep(dir: &Path, prefix: &str, rows: &[SweepRow], fit: &SweepFit) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(output_path(dir, prefix, "sweep.csv"))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut rec = Records::create(&output_path(dir, prefix, "sweep.jsonl"))?;
    for r in rows {
        rec.emit("sweep-run", r)?;
    }
    rec.emit("fit", fit)?;
    rec.finish()
}

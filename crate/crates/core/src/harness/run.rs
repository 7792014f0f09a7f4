//! Executes a scenario and writes its CSV and JSON artifacts.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::{json, Value};

use super::scenario::{Experiment, GridSpec, PacketSpec, Scenario, Space};
use super::theorem::{smoothing_check, theorem_check, Agreement};
use crate::classical::{
    check_local_diffeo, comparison_flow, extract_scattering_data, flow_to, integrate_flow, FlowOptions, FreePhasePoint, PhasePoint,
};
use crate::error::{Error, Result};
use crate::geometry::{Potential, ScatteringMetric};
use crate::microlocal::{wf_rh_test, wf_test, Decision, DetectorConfig, HalfDensity, LadderPoint, Scaling, WFVerdict};
use crate::quantum::{free_evolve, CoherentState, CurvedPropagator, CurvedState, EvolutionConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { out: PathBuf::from("out"), seed: None, threads: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Ok,
    /// Some theorem-check verdict was marginal.
    Inconclusive,
    /// Some check contradicted the expected correspondence or a point failed.
    Failed,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: &'static str,
    pub artifacts: Vec<PathBuf>,
    pub line: String,
    pub outcome: Outcome,
}

/// Runs `f` over `items` on up to `threads` workers; results keep input order.
fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every slot filled")).collect()
}

struct Writer<'a> {
    dir: &'a Path,
    stem: String,
    config: String,
    artifacts: Vec<PathBuf>,
}

impl Writer<'_> {
    fn json(&mut self, kind: &str, result: Value) -> Result<()> {
        let config: Value = serde_json::from_str(&self.config)?;
        let doc = json!({ "schema": format!("conic-scatter/{kind}/v1"), "config": config, "result": result });
        let path = self.dir.join(format!("{}.json", self.stem));
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        self.artifacts.push(path);
        Ok(())
    }

    /// CSV with the effective config as a leading `#` comment line.
    fn csv(&mut self, suffix: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(format!("{}.{suffix}.csv", self.stem));
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# config: {}", self.config)?;
        let mut out = csv::Writer::from_writer(file);
        out.write_record(header).map_err(csv_error)?;
        for row in rows {
            out.write_record(row).map_err(csv_error)?;
        }
        out.flush()?;
        self.artifacts.push(path);
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.into())
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn ladder_rows(label: &[String], ladder: &[LadderPoint]) -> Vec<Vec<String>> {
    ladder
        .iter()
        .map(|p| {
            let mut row = label.to_vec();
            row.extend([num(p.eps), num(p.norm)]);
            row
        })
        .collect()
}

fn test_state<S: HalfDensity>(u: &S, point: FreePhasePoint, scaling: Scaling, cfg: &DetectorConfig) -> Result<WFVerdict> {
    match scaling {
        Scaling::Standard => wf_test(u, point, cfg),
        Scaling::RadiallyHomogeneous => wf_rh_test(u, point, cfg),
    }
}

fn exponent_text(v: &WFVerdict) -> String {
    v.exponent.map_or("none".into(), |e| format!("{e:.2}"))
}

fn decision_name(d: Decision) -> &'static str {
    match d {
        Decision::Absent => "absent",
        Decision::Present => "present",
        Decision::Marginal => "marginal",
    }
}

/// Validates and runs a scenario, writing artifacts under `opts.out`.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let metric = scenario.validate()?;
    let mut effective = scenario.clone();
    if let Some(seed) = opts.seed {
        effective.seed = seed;
    }
    fs::create_dir_all(&opts.out)?;
    let mut w = Writer {
        dir: &opts.out,
        stem: effective.name.clone(),
        config: serde_json::to_string(&effective)?,
        artifacts: Vec::new(),
    };
    let kind = effective.experiment.kind();
    let potential = effective.potential.as_ref();
    let (line, outcome) = match &effective.experiment {
        Experiment::Trajectory { start, t_end, flow } => run_trajectory(&mut w, &metric, potential, *start, *t_end, flow)?,
        Experiment::ScatterData { starts, ladder } => {
            let points = starts.resolve(effective.seed);
            let results = par_map(&points, opts.threads, |p| extract_scattering_data(&metric, potential, *p, ladder));
            let mut rows = Vec::new();
            let mut failed = 0;
            let values: Vec<Value> = points
                .iter()
                .zip(&results)
                .enumerate()
                .map(|(i, (p, r))| match r {
                    Ok(sd) => {
                        rows.push(vec![
                            i.to_string(),
                            num(p.r),
                            num(p.theta),
                            num(p.rho),
                            num(p.omega),
                            num(sd.r_minus),
                            num(sd.theta_minus),
                            sd.theta_winding.to_string(),
                            num(sd.rho_minus),
                            num(sd.omega_minus),
                            serde_json::to_value(sd.status).map_or_else(|_| String::new(), |v| v.as_str().unwrap_or("").to_string()),
                        ]);
                        json!({ "start": p, "scattering": sd })
                    }
                    Err(e) => {
                        failed += 1;
                        json!({ "start": p, "error": e.to_string() })
                    }
                })
                .collect();
            w.csv(
                "scatter",
                &["index", "r", "theta", "rho", "omega", "r_minus", "theta_minus", "theta_winding", "rho_minus", "omega_minus", "status"],
                &rows,
            )?;
            w.json(kind, json!({ "points": values }))?;
            let outcome = if failed > 0 { Outcome::Failed } else { Outcome::Ok };
            (format!("{} points, {} failed", points.len(), failed), outcome)
        }
        Experiment::DiffeoCheck { window, times, flow } => {
            let report = check_local_diffeo(&metric, potential, window, times, flow)?;
            let rows: Vec<Vec<String>> =
                report.entries.iter().map(|e| vec![num(e.t), num(e.sup_norm), e.failed_points.to_string()]).collect();
            w.csv("diffeo", &["t", "sup_norm", "failed_points"], &rows)?;
            let sup = report.entries.iter().map(|e| e.sup_norm).fold(0.0, f64::max);
            let line = format!("sup |J - I| = {sup:.3e}, passed = {}", report.passed);
            w.json(kind, serde_json::to_value(&report)?)?;
            (line, Outcome::Ok)
        }
        Experiment::EvolveFree { packet, grid, times } => run_evolve_free(&mut w, &metric, packet, grid, times)?,
        Experiment::EvolveCurved { packet, grid, times, evolution } => {
            run_evolve_curved(&mut w, &metric, potential, packet, grid, times, evolution)?
        }
        Experiment::WfTest { packet, grid, space, time, evolution, point, scaling, detector } => {
            let coherent = CoherentState::new(packet.center, packet.eps)?;
            let verdict = match space {
                Space::Free => {
                    let u = free_evolve(&coherent.free_state(grid.periodic()?, metric.boundary)?, *time);
                    test_state(&u, *point, *scaling, detector)?
                }
                Space::Curved => {
                    let g = grid.dirichlet()?;
                    let mut u = coherent.curved_state(&metric, g)?;
                    if *time != 0.0 {
                        let cfg = evolution.ok_or_else(|| Error::Config("curved evolution needs an evolution block".into()))?;
                        u = CurvedPropagator::new(&metric, potential, g, cfg)?.evolve(&u, *time)?;
                    }
                    test_state(&u, *point, *scaling, detector)?
                }
            };
            w.csv("ladder", &["eps", "norm"], &ladder_rows(&[], &verdict.ladder))?;
            let line = format!("{} (exponent {})", decision_name(verdict.decision), exponent_text(&verdict));
            w.json(kind, serde_json::to_value(&verdict)?)?;
            (line, Outcome::Ok)
        }
        Experiment::SmoothingCheck { starts, check } => {
            let points = starts.resolve(effective.seed);
            let results = par_map(&points, opts.threads, |p| smoothing_check(&metric, potential, *p, check));
            let (mut rows, mut values) = (Vec::new(), Vec::new());
            let (mut failed, mut inconclusive) = (0, 0);
            for (i, (p, r)) in points.iter().zip(&results).enumerate() {
                match r {
                    Ok(rep) => {
                        rows.extend(ladder_rows(&[i.to_string(), "initial-rh".into()], &rep.initial.ladder));
                        rows.extend(ladder_rows(&[i.to_string(), "evolved".into()], &rep.evolved.ladder));
                        if !rep.consistent {
                            failed += 1;
                        } else if rep.initial.decision != Decision::Absent || rep.evolved.decision == Decision::Marginal {
                            inconclusive += 1;
                        }
                        values.push(serde_json::to_value(rep)?);
                    }
                    Err(e) => {
                        failed += 1;
                        values.push(json!({ "start": p, "error": e.to_string() }));
                    }
                }
            }
            w.csv("ladder", &["index", "test", "eps", "norm"], &rows)?;
            w.json(kind, json!({ "reports": values }))?;
            let outcome = classify(failed, inconclusive);
            (format!("{} points: {} failed, {} inconclusive", points.len(), failed, inconclusive), outcome)
        }
        Experiment::TheoremCheck { starts, check } => {
            let points = starts.resolve(effective.seed);
            let results = par_map(&points, opts.threads, |p| theorem_check(&metric, potential, *p, check));
            let (mut rows, mut values) = (Vec::new(), Vec::new());
            let (mut agree, mut failed, mut inconclusive) = (0, 0, 0);
            for (i, (p, r)) in points.iter().zip(&results).enumerate() {
                match r {
                    Ok(rep) => {
                        rows.extend(ladder_rows(&[i.to_string(), "left".into()], &rep.left.ladder));
                        rows.extend(ladder_rows(&[i.to_string(), "right".into()], &rep.right.ladder));
                        if let Some(rh) = &rep.rh {
                            rows.extend(ladder_rows(&[i.to_string(), "initial-rh".into()], &rh.ladder));
                        }
                        match rep.agreement {
                            Agreement::Agree => agree += 1,
                            Agreement::Inconclusive => inconclusive += 1,
                            Agreement::Contradiction => failed += 1,
                        }
                        values.push(serde_json::to_value(rep)?);
                    }
                    Err(e) => {
                        failed += 1;
                        values.push(json!({ "start": p, "error": e.to_string() }));
                    }
                }
            }
            w.csv("ladder", &["index", "side", "eps", "norm"], &rows)?;
            w.json(kind, json!({ "reports": values, "agree": agree, "inconclusive": inconclusive, "failed": failed }))?;
            let outcome = classify(failed, inconclusive);
            (format!("{} points: {agree} agree, {inconclusive} inconclusive, {failed} failed", points.len()), outcome)
        }
    };
    Ok(RunSummary { kind, artifacts: w.artifacts, line, outcome })
}

fn classify(failed: usize, inconclusive: usize) -> Outcome {
    if failed > 0 {
        Outcome::Failed
    } else if inconclusive > 0 {
        Outcome::Inconclusive
    } else {
        Outcome::Ok
    }
}

fn run_trajectory(
    w: &mut Writer,
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    t_end: f64,
    flow: &FlowOptions,
) -> Result<(String, Outcome)> {
    let traj = integrate_flow(metric, potential, start, t_end, flow)?;
    let rows: Vec<Vec<String>> = traj
        .samples
        .iter()
        .map(|s| vec![num(s.t), num(s.point.r), num(s.point.theta), num(s.point.rho), num(s.point.omega), num(s.p_rel_drift)])
        .collect();
    w.csv("trajectory", &["t", "r", "theta_unwrapped", "rho", "omega", "p_rel_drift"], &rows)?;
    let last = traj.last();
    let line = format!("{} samples to t = {}, energy drift {:.3e}", traj.samples.len(), last.t, traj.energy_drift);
    w.json(
        "trajectory",
        json!({ "p0": traj.p0, "energy_drift": traj.energy_drift, "t_span": traj.t_span, "chart_exit": traj.chart_exit, "end": last }),
    )?;
    let outcome = if traj.chart_exit.is_some() { Outcome::Failed } else { Outcome::Ok };
    Ok((line, outcome))
}

fn moments_row(t: f64, norm: f64, pos: (f64, f64), mom: Option<(f64, f64)>, classical: Option<FreePhasePoint>) -> Vec<String> {
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    vec![
        num(t),
        num(norm),
        num(pos.0),
        num(pos.1),
        opt(mom.map(|m| m.0)),
        opt(mom.map(|m| m.1)),
        opt(classical.map(|c| c.r)),
        opt(classical.map(|c| c.theta)),
        opt(classical.map(|c| c.rho)),
        opt(classical.map(|c| c.omega)),
    ]
}

const MOMENT_HEADER: [&str; 10] =
    ["t", "norm", "r_mean", "theta_mean", "rho_mean", "omega_mean", "r_classical", "theta_classical", "rho_classical", "omega_classical"];

/// Times are classical: the packet at scale `ε` is propagated for `εt`.
fn run_evolve_free(w: &mut Writer, metric: &ScatteringMetric, packet: &PacketSpec, grid: &GridSpec, times: &[f64]) -> Result<(String, Outcome)> {
    let u0 = CoherentState::new(packet.center, packet.eps)?.free_state(grid.periodic()?, metric.boundary)?;
    let mut rows = Vec::new();
    let mut drift = 0.0f64;
    for &t in times {
        let u = free_evolve(&u0, packet.eps * t);
        let norm = u.norm();
        drift = drift.max((norm - 1.0).abs());
        rows.push(moments_row(t, norm, u.position_expectation(), Some(u.momentum_expectation(packet.eps)), Some(comparison_flow(packet.center, t))));
    }
    w.csv("moments", &MOMENT_HEADER, &rows)?;
    w.json("evolve-free", json!({ "samples": times.len(), "max_norm_drift": drift }))?;
    Ok((format!("{} samples, norm drift {drift:.3e}", times.len()), Outcome::Ok))
}

fn run_evolve_curved(
    w: &mut Writer,
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    packet: &PacketSpec,
    grid: &GridSpec,
    times: &[f64],
    evolution: &EvolutionConfig,
) -> Result<(String, Outcome)> {
    let g = grid.dirichlet()?;
    let u0: CurvedState = CoherentState::new(packet.center, packet.eps)?.curved_state(metric, g)?;
    let prop = CurvedPropagator::new(metric, potential, g, *evolution)?;
    let quantum: Vec<f64> = times.iter().map(|t| packet.eps * t).collect();
    let states = prop.evolve_sampled(&u0, &quantum)?;
    let start = PhasePoint::new(packet.center.r, packet.center.theta, packet.center.rho, packet.center.omega);
    let mut rows = Vec::new();
    let mut deviation = 0.0f64;
    for (&t, u) in times.iter().zip(&states) {
        let classical = flow_to(metric, potential, start, t, &FlowOptions::default()).ok().map(FreePhasePoint::from);
        let pos = u.position_expectation();
        if let Some(c) = classical {
            deviation = deviation.max((pos.0 - c.r).abs());
        }
        rows.push(moments_row(t, u.norm(), pos, None, classical));
    }
    w.csv("moments", &MOMENT_HEADER, &rows)?;
    w.json("evolve-curved", json!({ "samples": times.len(), "max_radial_deviation": deviation }))?;
    Ok((format!("{} samples, max |<r> - r(t)| {deviation:.3e}", times.len()), Outcome::Ok))
}

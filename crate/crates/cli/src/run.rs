//! Executes one resolved [`RunConfig`] into a directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use coordlab::aggregation::{run_mogd, GradientProblem};
use coordlab::bounds::{protocol_length, CoordinationParams};
use coordlab::dynamics::{
    hysteresis_sweep, simulate, two_state_midpoints, EventType, HysteresisScenario, Scenario, TemperatureRamp,
};
use coordlab::findability::cascade;
use coordlab::hierarchy::{
    compare_topologies, error_propagation, multi_level_cost, multi_level_cost_exact, optimal_group_count,
    single_level_cost, tree_depth,
};
use serde_json::{json, Value};

use crate::config::{CascadeParams, HierarchyParams, MogdParams, ProblemId, RunConfig, SimulateParams, Target};
use crate::error::{CliError, CliResult};
use crate::figures;

/// What a run wrote and the headline numbers it produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    /// Named scalar results, in a stable order, for sweep tables.
    pub metrics: Vec<(String, String)>,
}

impl RunReport {
    pub(crate) fn metric(&mut self, name: &str, value: impl ToString) {
        self.metrics.push((name.to_string(), value.to_string()));
    }
}

/// Runs `cfg` and writes its outputs plus `<name>.resolved.toml` into `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> CliResult<RunReport> {
    cfg.check()?;
    fs::create_dir_all(dir)?;
    let out = Outputs { dir, name: &cfg.name };
    let mut report = match cfg.target {
        Target::Hierarchy => hierarchy(section(&cfg.hierarchy)?, &out),
        Target::Simulate => match section(&cfg.simulate)? {
            SimulateParams::Dynamics { horizon, scenario } => dynamics(scenario, *horizon, &out),
            SimulateParams::Hysteresis { scenario, ramp } => hysteresis(scenario, ramp, &out),
        },
        Target::Cascade => cascade_run(section(&cfg.cascade)?, &out),
        Target::Mogd => mogd(section(&cfg.mogd)?, &out),
        Target::Figure => figures::render(section(&cfg.figure)?, &out),
    }?;
    let sidecar = out.path("resolved.toml");
    fs::write(&sidecar, cfg.to_toml()?)?;
    report.files.push(sidecar);
    Ok(report)
}

fn section<T>(s: &Option<T>) -> CliResult<&T> {
    s.as_ref()
        .ok_or_else(|| CliError::Config("configuration is missing its target section".into()))
}

pub(crate) struct Outputs<'a> {
    pub dir: &'a Path,
    pub name: &'a str,
}

impl Outputs<'_> {
    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.name))
    }

    pub fn create(&self, suffix: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
        let path = self.path(suffix);
        let file =
            File::create(&path).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
        Ok((path, BufWriter::new(file)))
    }

    pub fn json(&self, suffix: &str, value: &Value) -> CliResult<PathBuf> {
        let (path, mut w) = self.create(suffix)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }
}

fn hierarchy(h: &HierarchyParams, out: &Outputs) -> CliResult<RunReport> {
    let params = CoordinationParams::new(h.agents, h.objectives, h.k_bar, h.rho, h.epsilon)?;
    let mut report = RunReport::default();
    let flat = protocol_length(&params)?.total;
    let mut doc = json!({ "agents": h.agents, "objectives": h.objectives, "flat_bits": flat });
    report.lines.push(format!("flat protocol length: {flat} bits"));
    report.metric("flat_bits", flat);

    if h.optimize {
        let opt = optimal_group_count(&params, h.objectives)?;
        report.lines.push(format!(
            "optimal groups: {} ({} bits); analytic N^(2/3) = {}",
            opt.exact, opt.exact_cost, opt.analytic
        ));
        report.metric("m_opt", opt.exact);
        report.metric("m_opt_bits", opt.exact_cost);
        report.metric("m_analytic", opt.analytic);
        doc["optimum"] = json!(opt);
    }
    if let Some(m) = h.groups {
        let cost = single_level_cost(&params, m, h.objectives)?;
        report.lines.push(format!("{m} groups: {cost} bits"));
        report.metric("groups_bits", cost);
        doc["groups"] = json!({ "groups": m, "total_bits": cost });
    }
    if let Some(b) = h.branching {
        let exact = multi_level_cost_exact(&params, b, h.objectives, None)?;
        let closed = multi_level_cost(&params, b, h.objectives)?;
        let depth = tree_depth(h.agents, b);
        report.lines.push(format!(
            "tree b={b}, depth {depth}: {exact} bits (closed form {closed})"
        ));
        report.metric("tree_bits", exact);
        doc["tree"] = json!({ "branching": b, "depth": depth, "total_bits": exact, "closed_form_bits": closed });
    }
    if let Some(target) = h.error_target {
        let b = h
            .branching
            .ok_or_else(|| CliError::Config("error_target needs branching".into()))?;
        let ep = error_propagation(target, b, h.agents)?;
        report.lines.push(format!(
            "per-level epsilon {} over {} levels gives {}",
            ep.epsilon_level, ep.levels, ep.epsilon_total
        ));
        report.metric("epsilon_level", ep.epsilon_level);
        doc["error_propagation"] = json!(ep);
    }
    if h.compare {
        let rows = compare_topologies(&params, h.objectives, h.max_branching)?;
        for r in &rows {
            let param = r.parameter.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            let note = if r.analytic_only { " (scaling estimate)" } else { "" };
            report.lines.push(format!(
                "{:<13} {:>5} {:>14.1} bits  N^{:.3}{note}",
                json!(r.kind).as_str().unwrap_or(""),
                param,
                r.total_bits,
                r.exponent
            ));
        }
        doc["comparison"] = json!(rows);
    }
    report.files.push(out.json("json", &doc)?);
    Ok(report)
}

fn dynamics(scenario: &Scenario, horizon: f64, out: &Outputs) -> CliResult<RunReport> {
    let sim = simulate(scenario, horizon)?;
    let mut report = RunReport::default();

    let (path, mut w) = out.create("trajectory.csv")?;
    sim.write_trajectory_csv(&mut w)?;
    w.flush()?;
    report.files.push(path);
    let (path, mut w) = out.create("events.jsonl")?;
    sim.write_events_jsonl(&mut w)?;
    w.flush()?;
    report.files.push(path);

    let count = |t: EventType| sim.events.iter().filter(|e| e.event_type == t).count();
    let transitions: Vec<Value> = sim
        .events
        .iter()
        .filter(|e| e.event_type == EventType::LpChange)
        .map(|e| json!({ "time": e.time, "from_bits": e.payload["from_bits"], "to_bits": e.payload["to_bits"] }))
        .collect();
    for t in &transitions {
        report.lines.push(format!(
            "t={}: L(P) {} -> {} bits",
            t["time"], t["from_bits"], t["to_bits"]
        ));
    }
    let fs = sim.final_state;
    report.lines.push(format!(
        "final state at t={}: N={}, d={}, T_co={}, work {} bits",
        fs.time,
        fs.agents(),
        fs.objectives(),
        fs.t_co,
        sim.cumulative_work
    ));
    report.metric("final_n", fs.agents());
    report.metric("final_d", fs.objectives());
    report.metric("final_t_co", fs.t_co);
    report.metric("cumulative_work", sim.cumulative_work);
    report.metric("dropouts", count(EventType::Dropout));
    report.metric("focal_transitions", count(EventType::FocalTransition));

    let summary = json!({
        "horizon": horizon,
        "final_state": fs,
        "cumulative_work_bits": sim.cumulative_work,
        "rows": sim.rows.len(),
        "events": sim.events.len(),
        "dropouts": count(EventType::Dropout),
        "lp_changes": transitions,
    });
    report.files.push(out.json("summary.json", &summary)?);
    Ok(report)
}

fn hysteresis(scenario: &HysteresisScenario, ramp: &TemperatureRamp, out: &Outputs) -> CliResult<RunReport> {
    let r = hysteresis_sweep(ramp, scenario)?;
    let mut report = RunReport::default();
    let (path, mut w) = out.create("hysteresis.csv")?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(["temperature", "psi_up", "psi_down"])?;
        for ((t, up), down) in r.temperatures.iter().zip(&r.psi_up).zip(&r.psi_down) {
            csv.serialize((t, up, down))?;
        }
        csv.flush()?;
    }
    w.flush()?;
    report.files.push(path);

    let (oracle_up, oracle_down) = two_state_midpoints(r.t_c, scenario.barrier);
    report.lines.push(format!("T_c = {}, width = {}", r.t_c, r.width));
    report.lines.push(format!(
        "loop area {}; midpoints up {:?}, down {:?}",
        r.loop_area, r.midpoint_up, r.midpoint_down
    ));
    report.metric("t_c", r.t_c);
    report.metric("loop_area", r.loop_area);
    report.metric("midpoint_up", opt(r.midpoint_up));
    report.metric("midpoint_down", opt(r.midpoint_down));
    let summary = json!({
        "t_c": r.t_c,
        "width": r.width,
        "loop_area": r.loop_area,
        "midpoint_up": r.midpoint_up,
        "midpoint_down": r.midpoint_down,
        "two_state_midpoint_up": oracle_up,
        "two_state_midpoint_down": oracle_down,
        "switches": r.switch_temperatures.len(),
    });
    report.files.push(out.json("summary.json", &summary)?);
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cascade_run(c: &CascadeParams, out: &Outputs) -> CliResult<RunReport> {
    let lattice = c.lattice()?;
    let seeds: Vec<(usize, usize)> = c.seeds.iter().map(|s| (s[0], s[1])).collect();
    let r = cascade(&lattice, c.kind, &seeds)?;
    let mut report = RunReport::default();
    let (path, mut w) = out.create("frames.csv")?;
    r.write_frames_csv(&mut w)?;
    w.flush()?;
    report.files.push(path);
    report.lines.push(format!(
        "{} cascade: {} of {} cells in {} rounds, spans = {}",
        c.kind,
        r.adopted,
        r.cells,
        r.rounds(),
        r.spans
    ));
    report.metric("adopted", r.adopted);
    report.metric("final_fraction", r.final_fraction());
    report.metric("rounds", r.rounds());
    report.metric("spans", r.spans);
    let summary = json!({
        "kind": r.kind,
        "spans": r.spans,
        "adopted": r.adopted,
        "cells": r.cells,
        "final_fraction": r.final_fraction(),
        "rounds": r.rounds(),
    });
    report.files.push(out.json("summary.json", &summary)?);
    Ok(report)
}

pub fn problem(id: ProblemId) -> GradientProblem {
    match id {
        ProblemId::ConflictingPair => GradientProblem::conflicting_pair(),
        ProblemId::RotatedPair => GradientProblem::rotated_pair(),
        ProblemId::RotationalTriple => GradientProblem::rotational_triple(),
    }
}

fn mogd(m: &MogdParams, out: &Outputs) -> CliResult<RunReport> {
    let p = problem(m.problem);
    let (traj, diag) = run_mogd(&p, &m.aggregator, &m.start, m.step_size, m.steps, &m.thresholds)?;
    let mut report = RunReport::default();
    let (path, mut w) = out.create("trajectory.csv")?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    report.files.push(path);
    let status = json!(diag.status);
    let status = status.as_str().unwrap_or_default().to_string();
    report.lines.push(format!(
        "{status} after {} steps; trailing displacement {}, recurrence period {:?}",
        traj.points.len().saturating_sub(1),
        diag.displacement_window,
        diag.recurrence_period_estimate
    ));
    report.metric("status", &status);
    report.metric("displacement_window", diag.displacement_window);
    report.metric("period", opt(diag.recurrence_period_estimate));
    let doc = json!({
        "diagnostics": diag,
        "final_point": traj.points.last(),
        "final_losses": traj.losses.last(),
        "stability_bound": match &m.aggregator {
            coordlab::aggregation::Aggregator::Fixed { weights } => p.stability_bound(weights).ok(),
            _ => None,
        },
    });
    report.files.push(out.json("diagnostics.json", &doc)?);
    Ok(report)
}

//! Data (and optional SVG) for the four summary panels.

use std::fs;

use coordlab::bounds::{protocol_length, CoordinationParams};
use coordlab::findability::{cascade, CascadeResult, Lattice, SolutionKind};
use coordlab::population::{
    cooling_work, coordination_temperature, critical_temperature, AgentModel, LogBase, Population,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{FigureParams, Panel};
use crate::error::CliResult;
use crate::run::{Outputs, RunReport};
use crate::svg::{ramp, Svg};

pub(crate) fn render(fig: &FigureParams, out: &Outputs) -> CliResult<RunReport> {
    let mut report = RunReport::default();
    let svg = match &fig.panel {
        Panel::Fig1a {
            agents,
            objectives,
            k_bar,
            rho,
            epsilon,
        } => scaling(agents, objectives, *k_bar, *rho, *epsilon, out, &mut report)?,
        Panel::Fig1b {
            grid,
            threshold,
            findable_seeds,
            accurate_seeds,
        } => cascades(grid, *threshold, findable_seeds, accurate_seeds, out, &mut report)?,
        Panel::Fig1c { agents, spreads, seed } => snapshots(*agents, spreads, *seed, out, &mut report)?,
        Panel::Fig1d {
            n_agents,
            k_bar,
            k0,
            t1,
            ratio_steps,
        } => cooling(*n_agents, *k_bar, *k0, *t1, *ratio_steps, out, &mut report)?,
    };
    if fig.svg {
        let path = out.path("svg");
        fs::write(&path, svg.finish())?;
        report.files.push(path);
    }
    Ok(report)
}

fn scaling(
    agents: &[u64],
    objectives: &[u64],
    k_bar: f64,
    rho: f64,
    epsilon: f64,
    out: &Outputs,
    report: &mut RunReport,
) -> CliResult<Svg> {
    let mut grid = Vec::with_capacity(agents.len() * objectives.len());
    for &n in agents {
        for &d in objectives {
            let total = protocol_length(&CoordinationParams::new(n, d, k_bar, rho, epsilon)?)?.total;
            grid.push((n, d, total, total.log10()));
        }
    }
    let (path, mut w) = out.create("csv")?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(["agents", "objectives", "length_bits", "log10_length"])?;
        for row in &grid {
            csv.serialize(row)?;
        }
        csv.flush()?;
    }
    report.files.push(path);
    let lo = grid.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
    let hi = grid.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    report
        .lines
        .push(format!("log10 L(P) spans [{lo:.3}, {hi:.3}] over {} cells", grid.len()));
    report.metric("log10_min", lo);
    report.metric("log10_max", hi);
    let meta = json!({ "k_bar": k_bar, "rho": rho, "epsilon": epsilon, "log10_min": lo, "log10_max": hi });
    report.files.push(out.json("meta.json", &meta)?);

    let cell = 24.0;
    let (left, top) = (60.0, 40.0);
    let mut svg = Svg::new(
        left + cell * objectives.len() as f64 + 30.0,
        top + cell * agents.len() as f64 + 50.0,
    );
    svg.text(left, 24.0, 14.0, "start", "log10 protocol length (bits)");
    for (i, &n) in agents.iter().enumerate() {
        for (j, &d) in objectives.iter().enumerate() {
            let v = grid[i * objectives.len() + j].3;
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let y = top + cell * (agents.len() - 1 - i) as f64;
            svg.rect(left + cell * j as f64, y, cell, cell, &ramp(t));
            if i == 0 {
                svg.text(
                    left + cell * (j as f64 + 0.5),
                    top + cell * agents.len() as f64 + 16.0,
                    10.0,
                    "middle",
                    &d.to_string(),
                );
            }
        }
        svg.text(
            left - 6.0,
            top + cell * (agents.len() - i) as f64 - 8.0,
            10.0,
            "end",
            &n.to_string(),
        );
    }
    svg.text(
        left + cell * objectives.len() as f64 / 2.0,
        top + cell * agents.len() as f64 + 36.0,
        12.0,
        "middle",
        "objectives d",
    );
    svg.text(14.0, top - 8.0, 12.0, "start", "N");
    Ok(svg)
}

fn cascades(
    grid: &str,
    threshold: usize,
    findable_seeds: &[[usize; 2]],
    accurate_seeds: &[[usize; 2]],
    out: &Outputs,
    report: &mut RunReport,
) -> CliResult<Svg> {
    let lattice = Lattice::parse(grid, threshold)?;
    let seeds = |s: &[[usize; 2]]| s.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>();
    let runs = [
        cascade(&lattice, SolutionKind::Findable, &seeds(findable_seeds))?,
        cascade(&lattice, SolutionKind::Accurate, &seeds(accurate_seeds))?,
    ];
    let (path, mut w) = out.create("csv")?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(["kind", "round", "cell_x", "cell_y"])?;
        for r in &runs {
            for (round, frame) in r.frames.iter().enumerate() {
                for &(x, y) in frame {
                    csv.serialize((r.kind.to_string(), round, x, y))?;
                }
            }
        }
        csv.flush()?;
    }
    report.files.push(path);
    let lattice_path = out.path("lattice.txt");
    fs::write(&lattice_path, lattice.to_text())?;
    report.files.push(lattice_path);

    let mut meta = serde_json::Map::new();
    for r in &runs {
        report.lines.push(format!(
            "{}: {} of {} cells, spans = {}",
            r.kind, r.adopted, r.cells, r.spans
        ));
        report.metric(&format!("{}_spans", r.kind), r.spans);
        report.metric(&format!("{}_fraction", r.kind), r.final_fraction());
        meta.insert(
            r.kind.to_string(),
            json!({ "spans": r.spans, "adopted": r.adopted, "cells": r.cells, "rounds": r.rounds() }),
        );
    }
    report
        .files
        .push(out.json("meta.json", &serde_json::Value::Object(meta))?);

    let cell = 14.0;
    let panel = cell * lattice.width() as f64;
    let mut svg = Svg::new(3.0 * 30.0 + 2.0 * panel, panel + 70.0);
    for (k, r) in runs.iter().enumerate() {
        let x0 = 30.0 + k as f64 * (panel + 30.0);
        draw_cascade(&mut svg, &lattice, r, x0, 40.0, cell);
        svg.text(x0, 28.0, 13.0, "start", &format!("{} (spans: {})", r.kind, r.spans));
    }
    Ok(svg)
}

fn draw_cascade(svg: &mut Svg, lattice: &Lattice, r: &CascadeResult, x0: f64, y0: f64, cell: f64) {
    let mut round_of = vec![None; lattice.width() * lattice.height()];
    for (round, frame) in r.frames.iter().enumerate() {
        for &(x, y) in frame {
            round_of[y * lattice.width() + x] = Some(round);
        }
    }
    let last = r.rounds().max(1) as f64;
    for y in 0..lattice.height() {
        for x in 0..lattice.width() {
            let fill = match round_of[y * lattice.width() + x] {
                Some(round) => ramp(round as f64 / last),
                None if lattice.cell(x, y).accepts(r.kind) => "#dddddd".to_string(),
                None => "#f7f7f7".to_string(),
            };
            svg.rect(
                x0 + cell * x as f64,
                y0 + cell * y as f64,
                cell - 1.0,
                cell - 1.0,
                &fill,
            );
        }
    }
    svg.frame(x0, y0, cell * lattice.width() as f64, cell * lattice.height() as f64);
}

fn snapshots(agents: usize, spreads: &[f64], seed: u64, out: &Outputs, report: &mut RunReport) -> CliResult<Svg> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = AgentModel::new(vec![0.5, 0.5])?;
    let pops = spreads
        .iter()
        .map(|&s| Population::scattered(agents, &center, s, &mut rng))
        .collect::<coordlab::Result<Vec<_>>>()?;
    let (path, mut w) = out.create("csv")?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(["spread", "agent", "x", "y"])?;
        for (s, pop) in spreads.iter().zip(&pops) {
            for (i, m) in pop.models().iter().enumerate() {
                csv.serialize((s, i, m.components()[0], m.components()[1]))?;
            }
        }
        csv.flush()?;
    }
    report.files.push(path);
    let temps: Vec<f64> = pops.iter().map(coordination_temperature).collect();
    for (s, t) in spreads.iter().zip(&temps) {
        report.lines.push(format!("spread {s}: T_co = {t}"));
    }
    let meta: Vec<_> = spreads
        .iter()
        .zip(&temps)
        .map(|(s, t)| json!({ "spread": s, "t_co": t }))
        .collect();
    report.files.push(out.json("meta.json", &json!(meta))?);

    let size = 160.0;
    let mut svg = Svg::new(30.0 + spreads.len() as f64 * (size + 30.0), size + 80.0);
    for (k, (pop, t)) in pops.iter().zip(&temps).enumerate() {
        let x0 = 30.0 + k as f64 * (size + 30.0);
        svg.frame(x0, 40.0, size, size);
        for m in pop.models() {
            let c = m.components();
            svg.circle(x0 + c[0] * size, 40.0 + (1.0 - c[1]) * size, 3.0, "#283c96");
        }
        svg.text(x0, 28.0, 12.0, "start", &format!("spread {}", spreads[k]));
        svg.text(x0, 40.0 + size + 20.0, 12.0, "start", &format!("T_co = {t:.4}"));
    }
    Ok(svg)
}

fn cooling(n: u64, k_bar: f64, k0: f64, t1: f64, steps: u32, out: &Outputs, report: &mut RunReport) -> CliResult<Svg> {
    let cp = critical_temperature(n as f64, k_bar, k0, LogBase::Natural)?;
    if steps == 0 {
        return Err(crate::error::CliError::Config("ratio_steps must be positive".into()));
    }
    let mut rows = Vec::with_capacity(steps as usize);
    for i in 1..=steps {
        let ratio = f64::from(i) / f64::from(steps);
        let t2 = ratio * t1;
        let work = cooling_work(n as f64, k_bar, k0, t1, t2)?;
        rows.push((ratio, t2, work, t2 < cp.t_c));
    }
    let (path, mut w) = out.create("csv")?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(["ratio", "t2", "work_bits", "stable"])?;
        for row in &rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
    }
    report.files.push(path);
    report.lines.push(format!("T_c = {} (width {})", cp.t_c, cp.width));
    report.metric("t_c", cp.t_c);
    report.metric("work_at_unit_ratio", rows.last().map(|r| r.2).unwrap_or_default());
    let meta = json!({ "t_c": cp.t_c, "width": cp.width, "t1": t1, "n_agents": n, "k_bar": k_bar, "k0": k0 });
    report.files.push(out.json("meta.json", &meta)?);

    let (left, top, w, h) = (60.0, 30.0, 320.0, 200.0);
    let w_max = rows.iter().map(|r| r.2).fold(0.0, f64::max).max(1.0);
    let mut svg = Svg::new(left + w + 30.0, top + h + 50.0);
    svg.frame(left, top, w, h);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (left + r.0 * w, top + h * (1.0 - r.2 / w_max)))
        .collect();
    svg.polyline(&pts, "#283c96");
    let xc = left + (cp.t_c / t1).min(1.0) * w;
    svg.line(xc, top, xc, top + h, "#c03030", true);
    svg.text(xc + 4.0, top + 14.0, 11.0, "start", &format!("T_c = {:.3}", cp.t_c));
    svg.text(left + w / 2.0, top + h + 32.0, 12.0, "middle", "T2 / T1");
    svg.text(left - 8.0, top + 10.0, 11.0, "end", &format!("{w_max:.0}"));
    svg.text(left - 8.0, top + h, 11.0, "end", "0");
    svg.text(14.0, top - 10.0, 12.0, "start", "W (bits)");
    Ok(svg)
}

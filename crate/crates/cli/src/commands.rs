//! Turns parsed arguments into resolved configurations and runs them.

use std::io::Write;

use coordlab::aggregation::Aggregator;
use coordlab::bounds::{protocol_length, simple_estimate, topological_decomposition, ConflictTerm, CoordinationParams};
use coordlab::findability::{Lattice, SolutionKind};
use serde_json::json;

use crate::cli::{
    AggregatorArg, BoundsArgs, BoundsMode, CascadeArgs, ConflictArg, FigureArgs, Format, HierarchyArgs, MogdArgs,
    RunArgs, SimulateArgs,
};
use crate::config::{
    CascadeParams, FigureParams, HierarchyParams, MogdParams, ProblemId, RunConfig, SimulateParams, SimulatePreset,
    Target,
};
use crate::error::{CliError, CliResult};
use crate::run::{execute, RunReport};

pub fn bounds(args: &BoundsArgs, w: &mut impl Write) -> CliResult<()> {
    let params = CoordinationParams::new(args.agents, args.objectives, args.k_bar, args.rho, args.epsilon)?;
    let rows: Vec<(String, Vec<f64>)>;
    let columns: Vec<&str>;
    if args.compare {
        let bound = protocol_length(&params)?;
        let topo = topological_decomposition(&params)?;
        columns = vec!["bound", "topological", "difference"];
        let row = |name: &str, a: f64, b: f64| (name.to_string(), vec![a, b, a - b]);
        rows = vec![
            row("models", bound.l_models, topo.i_models),
            row("communication", bound.l_comm, topo.i_comm),
            row("total", bound.total, topo.total),
        ];
    } else {
        columns = vec!["bits"];
        rows = match args.mode {
            BoundsMode::Bound => {
                let c = protocol_length(&params)?;
                breakdown_rows(&[
                    ("l_models", c.l_models),
                    ("l_comm", c.l_comm),
                    ("l_rules", c.l_rules),
                    ("total", c.total),
                ])
            }
            BoundsMode::Topological => {
                let t = topological_decomposition(&params)?;
                breakdown_rows(&[
                    ("i_models", t.i_models),
                    ("i_weight", t.i_weight),
                    ("i_conflict", t.i_conflict),
                    ("total", t.total),
                ])
            }
            BoundsMode::Simple => {
                let term = match args.conflict_term {
                    ConflictArg::Pairs => ConflictTerm::ObjectivePairs,
                    ConflictArg::Full => ConflictTerm::Full,
                };
                for (name, v) in [
                    ("bits-per-objective", args.bits_per_objective),
                    ("bits-per-conflict", args.bits_per_conflict),
                    ("rules-bits", args.rules_bits),
                ] {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(CliError::Config(format!("--{name} must be nonnegative, got {v}")));
                    }
                }
                let c = simple_estimate(
                    args.agents,
                    args.objectives,
                    args.bits_per_objective,
                    args.bits_per_conflict,
                    term,
                    args.rules_bits,
                );
                breakdown_rows(&[
                    ("l_models", c.l_models),
                    ("l_comm", c.l_comm),
                    ("l_rules", c.l_rules),
                    ("total", c.total),
                ])
            }
        };
    }
    match args.format {
        Format::Text => {
            let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(4);
            if columns.len() > 1 {
                write!(w, "{:<width$}", "term")?;
                for c in &columns {
                    write!(w, "  {c:>20}")?;
                }
                writeln!(w)?;
            }
            for (name, values) in &rows {
                write!(w, "{name:<width$}")?;
                for v in values {
                    write!(w, "  {:>20}", v.to_string())?;
                }
                writeln!(w)?;
            }
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut *w);
            let mut header = vec!["term"];
            header.extend(&columns);
            csv.write_record(&header)?;
            for (name, values) in &rows {
                let mut record = vec![name.clone()];
                record.extend(values.iter().map(f64::to_string));
                csv.write_record(&record)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            let doc = if args.compare {
                let list: Vec<_> = rows
                    .iter()
                    .map(|(name, v)| json!({ "term": name, columns[0]: v[0], columns[1]: v[1], columns[2]: v[2] }))
                    .collect();
                json!(list)
            } else {
                let map: serde_json::Map<_, _> = rows.iter().map(|(n, v)| (n.clone(), json!(v[0]))).collect();
                json!(map)
            };
            writeln!(
                w,
                "{}",
                serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?
            )?;
        }
    }
    Ok(())
}

fn breakdown_rows(items: &[(&str, f64)]) -> Vec<(String, Vec<f64>)> {
    items.iter().map(|(n, v)| (n.to_string(), vec![*v])).collect()
}

/// Loads `--config` if given (checking its target) or builds the default.
fn load(run: &RunArgs, target: Target, default: impl FnOnce() -> RunConfig) -> CliResult<(RunConfig, bool)> {
    match &run.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            if cfg.target != target {
                return Err(CliError::Config(format!(
                    "{} is a `{}` configuration, not `{target}`",
                    path.display(),
                    cfg.target
                )));
            }
            Ok((cfg, true))
        }
        None => Ok((default(), false)),
    }
}

/// Applies `--set` and `--name`, the last layer of overrides.
fn finish(cfg: RunConfig, run: &RunArgs) -> CliResult<RunConfig> {
    let mut cfg = cfg.with_overrides(&run.set)?;
    if let Some(name) = &run.name {
        cfg.name = name.clone();
    }
    cfg.check()?;
    Ok(cfg)
}

fn run_and_print(cfg: &RunConfig, run: &RunArgs, w: &mut impl Write) -> CliResult<RunReport> {
    let report = execute(cfg, &run.out)?;
    for line in &report.lines {
        writeln!(w, "{line}")?;
    }
    for f in &report.files {
        writeln!(w, "wrote {}", f.display())?;
    }
    Ok(report)
}

pub fn resolve_hierarchy(args: &HierarchyArgs) -> CliResult<RunConfig> {
    let (mut cfg, _) = load(&args.run, Target::Hierarchy, || RunConfig {
        hierarchy: Some(HierarchyParams::default()),
        ..RunConfig::new("hierarchy", Target::Hierarchy)
    })?;
    let h = cfg.hierarchy.as_mut().expect("checked on load");
    if let Some(v) = args.agents {
        h.agents = v;
    }
    if let Some(v) = args.objectives {
        h.objectives = v;
    }
    if let Some(v) = args.k_bar {
        h.k_bar = v;
    }
    if let Some(v) = args.rho {
        h.rho = v;
    }
    if let Some(v) = args.epsilon {
        h.epsilon = v;
    }
    h.optimize |= args.optimize;
    h.compare |= args.compare;
    if args.groups.is_some() {
        h.groups = args.groups;
    }
    if args.branching.is_some() {
        h.branching = args.branching;
    }
    if let Some(v) = args.max_branching {
        h.max_branching = v;
    }
    if args.error_target.is_some() {
        h.error_target = args.error_target;
    }
    finish(cfg, &args.run)
}

pub fn hierarchy(args: &HierarchyArgs, w: &mut impl Write) -> CliResult<RunReport> {
    run_and_print(&resolve_hierarchy(args)?, &args.run, w)
}

pub fn resolve_simulate(args: &SimulateArgs) -> CliResult<RunConfig> {
    let preset = args.preset.unwrap_or(SimulatePreset::Bistromathics);
    let (mut cfg, _) = load(&args.run, Target::Simulate, || RunConfig {
        simulate: Some(preset.params()),
        ..RunConfig::new(preset.name(), Target::Simulate)
    })?;
    let sim = cfg.simulate.as_mut().expect("checked on load");
    if let Some(seed) = args.seed {
        sim.set_seed(seed);
    }
    if let Some(h) = args.horizon {
        match sim {
            SimulateParams::Dynamics { horizon, .. } => *horizon = h,
            SimulateParams::Hysteresis { .. } => {
                return Err(CliError::Config("--horizon applies to the dynamics model only".into()))
            }
        }
    }
    finish(cfg, &args.run)
}

pub fn simulate(args: &SimulateArgs, w: &mut impl Write) -> CliResult<RunReport> {
    run_and_print(&resolve_simulate(args)?, &args.run, w)
}

fn first_accepting(lattice: &Lattice, kind: SolutionKind) -> CliResult<Vec<[usize; 2]>> {
    lattice
        .accepting(kind)
        .first()
        .map(|&(x, y)| vec![[x, y]])
        .ok_or_else(|| CliError::Config(format!("lattice has no {kind} cell to seed")))
}

pub fn resolve_cascade(args: &CascadeArgs) -> CliResult<RunConfig> {
    let (mut cfg, from_file) = load(&args.run, Target::Cascade, || {
        let lattice = Lattice::figure_fixture();
        RunConfig {
            cascade: Some(CascadeParams {
                grid: lattice.to_text(),
                threshold: lattice.threshold(),
                kind: SolutionKind::Findable,
                seeds: Vec::new(),
            }),
            ..RunConfig::new("cascade", Target::Cascade)
        }
    })?;
    let c = cfg.cascade.as_mut().expect("checked on load");
    let mut reseed = !from_file;
    if let Some(path) = &args.lattice {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        c.grid = Lattice::parse(&text, args.threshold.unwrap_or(c.threshold).max(1))?.to_text();
        reseed = true;
    }
    if args.preset.is_some() {
        let lattice = Lattice::figure_fixture();
        c.grid = lattice.to_text();
        c.threshold = lattice.threshold();
        reseed = true;
    }
    if let Some(t) = args.threshold {
        c.threshold = t;
    }
    if let Some(kind) = args.kind {
        reseed |= kind != c.kind;
        c.kind = kind;
    }
    if !args.seeds.is_empty() {
        c.seeds = args.seeds.clone();
    } else if reseed || c.seeds.is_empty() {
        c.seeds = first_accepting(&c.lattice()?, c.kind)?;
    }
    finish(cfg, &args.run)
}

pub fn cascade(args: &CascadeArgs, w: &mut impl Write) -> CliResult<RunReport> {
    run_and_print(&resolve_cascade(args)?, &args.run, w)
}

fn mogd_defaults(problem: ProblemId) -> MogdParams {
    let (start, aggregator, step_size, steps) = match problem {
        ProblemId::ConflictingPair => (vec![3.0], Aggregator::equal(2), 0.1, 1000),
        ProblemId::RotatedPair => (vec![2.0, 1.0], Aggregator::equal(2), 0.1, 2000),
        ProblemId::RotationalTriple => (vec![2.0, -1.0], Aggregator::RoundRobin, 0.25, 3000),
    };
    MogdParams {
        problem,
        aggregator,
        start,
        step_size,
        steps,
        thresholds: Default::default(),
    }
}

pub fn resolve_mogd(args: &MogdArgs) -> CliResult<RunConfig> {
    let problem = args.problem.unwrap_or(ProblemId::ConflictingPair);
    let (mut cfg, from_file) = load(&args.run, Target::Mogd, || RunConfig {
        mogd: Some(mogd_defaults(problem)),
        ..RunConfig::new("mogd", Target::Mogd)
    })?;
    let m = cfg.mogd.as_mut().expect("checked on load");
    if from_file && args.problem.is_some_and(|p| p != m.problem) {
        *m = mogd_defaults(problem);
    }
    let objectives = crate::run::problem(m.problem).objectives().len();
    match (args.aggregator, &args.weights) {
        (Some(AggregatorArg::MinNorm), None) => m.aggregator = Aggregator::MinNorm,
        (Some(AggregatorArg::RoundRobin), None) => m.aggregator = Aggregator::RoundRobin,
        (Some(AggregatorArg::Fixed), None) => m.aggregator = Aggregator::equal(objectives),
        (None | Some(AggregatorArg::Fixed), Some(weights)) => {
            m.aggregator = Aggregator::Fixed {
                weights: weights.clone(),
            }
        }
        (Some(_), Some(_)) => return Err(CliError::Config("--weights needs the fixed aggregator".into())),
        (None, None) => {}
    }
    if let Some(start) = &args.start {
        m.start = start.clone();
    }
    if let Some(v) = args.step_size {
        m.step_size = v;
    }
    if let Some(v) = args.steps {
        m.steps = v;
    }
    finish(cfg, &args.run)
}

pub fn mogd(args: &MogdArgs, w: &mut impl Write) -> CliResult<RunReport> {
    run_and_print(&resolve_mogd(args)?, &args.run, w)
}

pub fn resolve_figure(args: &FigureArgs) -> CliResult<RunConfig> {
    let (mut cfg, _) = load(&args.run, Target::Figure, || RunConfig {
        figure: Some(FigureParams::defaults(args.id)),
        ..RunConfig::new(args.id.as_str(), Target::Figure)
    })?;
    let fig = cfg.figure.as_mut().expect("checked on load");
    if fig.panel.id() != args.id {
        return Err(CliError::Config(format!(
            "configuration describes {}, not {}",
            fig.panel.id().as_str(),
            args.id.as_str()
        )));
    }
    fig.svg |= args.svg;
    finish(cfg, &args.run)
}

pub fn figure(args: &FigureArgs, w: &mut impl Write) -> CliResult<RunReport> {
    run_and_print(&resolve_figure(args)?, &args.run, w)
}

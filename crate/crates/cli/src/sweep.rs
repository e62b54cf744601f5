//! Cartesian sweeps over dotted configuration paths.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use coordlab::Execution;
use serde::{Deserialize, Serialize};

use crate::cli::SweepArgs;
use crate::config::{check_name, parse_value, set_path, RunConfig, SimulatePreset, Target};
use crate::error::{CliError, CliResult};
use crate::run::{execute, RunReport};

pub const DEFAULT_CAP: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted path from the run configuration root, e.g. `simulate.scenario.config.seed`.
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default)]
    pub axes: Vec<Axis>,
    pub base: RunConfig,
}

fn default_cap() -> u64 {
    DEFAULT_CAP
}

impl SweepSpec {
    pub fn size(&self) -> u128 {
        self.axes.iter().map(|a| a.values.len() as u128).product()
    }

    /// Axis values for scenario `index`, last axis varying fastest.
    pub fn point(&self, mut index: u128) -> Vec<&toml::Value> {
        let mut out = vec![None; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            let len = axis.values.len() as u128;
            *slot = Some(&axis.values[(index % len) as usize]);
            index /= len;
        }
        out.into_iter().map(|v| v.expect("every axis is visited")).collect()
    }

    pub fn scenario(&self, index: u128) -> CliResult<RunConfig> {
        let mut doc =
            toml::Value::try_from(&self.base).map_err(|e| CliError::Runtime(format!("cannot serialize base: {e}")))?;
        for (axis, value) in self.axes.iter().zip(self.point(index)) {
            set_path(&mut doc, &axis.path, value.clone())?;
        }
        let cfg: RunConfig = doc.try_into()?;
        cfg.check()?;
        Ok(cfg)
    }
}

pub struct SweepOutcome {
    pub dir: PathBuf,
    pub size: u128,
    pub reports: Vec<RunReport>,
}

fn parse_axis(raw: &str) -> CliResult<Axis> {
    let (path, values) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("axis `{raw}` is not of the form path=values")))?;
    let values = values.trim();
    let values = if values.starts_with('[') {
        match parse_value(values) {
            toml::Value::Array(items) => items,
            _ => return Err(CliError::Config(format!("axis `{raw}` has a malformed value list"))),
        }
    } else {
        values.split(',').map(|v| parse_value(v.trim())).collect()
    };
    Ok(Axis {
        path: path.trim().to_string(),
        values,
    })
}

fn seed_path(base: &RunConfig) -> CliResult<&'static str> {
    match (&base.target, &base.simulate) {
        (Target::Simulate, Some(sim)) => Ok(sim.seed_path()),
        (Target::Figure, _) => Ok("figure.panel.seed"),
        _ => Err(CliError::Config(format!(
            "target `{}` has no seed to sweep",
            base.target
        ))),
    }
}

pub fn resolve(args: &SweepArgs) -> CliResult<SweepSpec> {
    let mut spec = match (&args.config, &args.base) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let spec: SweepSpec = toml::from_str(&text)?;
            spec.base.check()?;
            spec
        }
        (None, Some(path)) => SweepSpec {
            name: "sweep".into(),
            cap: DEFAULT_CAP,
            axes: Vec::new(),
            base: RunConfig::load(path)?,
        },
        (None, None) => {
            let preset = args.preset.unwrap_or(SimulatePreset::Bistromathics);
            SweepSpec {
                name: "sweep".into(),
                cap: DEFAULT_CAP,
                axes: Vec::new(),
                base: RunConfig {
                    simulate: Some(preset.params()),
                    ..RunConfig::new(preset.name(), Target::Simulate)
                },
            }
        }
    };
    if let Some(seeds) = &args.seeds {
        spec.axes.push(Axis {
            path: seed_path(&spec.base)?.to_string(),
            values: seeds
                .iter()
                .map(|&s| {
                    i64::try_from(s)
                        .map(toml::Value::Integer)
                        .map_err(|_| CliError::Config(format!("seed {s} is too large")))
                })
                .collect::<CliResult<_>>()?,
        });
    }
    for raw in &args.axes {
        spec.axes.push(parse_axis(raw)?);
    }
    if let Some(cap) = args.cap {
        spec.cap = cap;
    }
    if let Some(name) = &args.name {
        spec.name = name.clone();
    }
    for axis in &spec.axes {
        if axis.values.is_empty() {
            return Err(CliError::Config(format!("axis `{}` has no values", axis.path)));
        }
    }
    check_name(&spec.name)?;
    Ok(spec)
}

/// Validates every scenario, then runs them concurrently into
/// `out/<name>/run-NNNNN/` and merges a long-format `results.csv` in
/// scenario order.
pub fn run(spec: &SweepSpec, out: &Path, log: &mut impl Write) -> CliResult<SweepOutcome> {
    let size = spec.size();
    writeln!(log, "sweep `{}`: {size} scenarios (cap {})", spec.name, spec.cap)?;
    if size > spec.cap as u128 {
        return Err(CliError::SweepCap {
            size,
            cap: spec.cap as u128,
        });
    }
    let configs = (0..size).map(|i| spec.scenario(i)).collect::<CliResult<Vec<_>>>()?;
    let dir = out.join(&spec.name);
    fs::create_dir_all(&dir)?;
    let jobs: Vec<(usize, &RunConfig)> = configs.iter().enumerate().collect();
    let reports = Execution::default()
        .map(&jobs, |(i, cfg)| execute(cfg, &dir.join(format!("run-{i:05}"))))
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;

    let results = dir.join("results.csv");
    {
        let mut csv = csv::Writer::from_path(&results)?;
        let mut header = vec!["run".to_string()];
        header.extend(spec.axes.iter().map(|a| a.path.clone()));
        header.extend(["metric".to_string(), "value".to_string()]);
        csv.write_record(&header)?;
        for (i, report) in reports.iter().enumerate() {
            let point: Vec<String> = spec.point(i as u128).into_iter().map(render).collect();
            for (metric, value) in &report.metrics {
                let mut record = vec![i.to_string()];
                record.extend(point.iter().cloned());
                record.push(metric.clone());
                record.push(value.clone());
                csv.write_record(&record)?;
            }
        }
        csv.flush()?;
    }
    let text = toml::to_string(spec).map_err(|e| CliError::Runtime(format!("cannot serialize sweep: {e}")))?;
    fs::write(dir.join(format!("{}.resolved.toml", spec.name)), text)?;
    writeln!(log, "wrote {}", results.display())?;
    Ok(SweepOutcome { dir, size, reports })
}

fn render(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulateParams;

    fn spec(axes: Vec<Axis>) -> SweepSpec {
        SweepSpec {
            name: "t".into(),
            cap: 10,
            axes,
            base: RunConfig {
                simulate: Some(SimulatePreset::Bistromathics.params()),
                ..RunConfig::new("b", Target::Simulate)
            },
        }
    }

    #[test]
    fn mixed_radix_points() {
        let s = spec(vec![
            parse_axis("simulate.scenario.config.seed=1,2").unwrap(),
            parse_axis("simulate.horizon=[1.0, 2.0, 3.0]").unwrap(),
        ]);
        assert_eq!(s.size(), 6);
        let p = s.point(4);
        assert_eq!(*p[0], toml::Value::Integer(2));
        assert_eq!(*p[1], toml::Value::Float(2.0));
        match s.scenario(4).unwrap().simulate.unwrap() {
            SimulateParams::Dynamics { horizon, scenario } => {
                assert_eq!(horizon, 2.0);
                assert_eq!(scenario.config.seed, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_axes_is_one_scenario() {
        assert_eq!(spec(vec![]).size(), 1);
    }

    #[test]
    fn cap_is_enforced_before_running() {
        let s = spec(vec![parse_axis(
            "simulate.scenario.config.seed=[1,2,3,4,5,6,7,8,9,10,11]",
        )
        .unwrap()]);
        let dir = tempfile::tempdir().unwrap();
        let err = run(&s, dir.path(), &mut Vec::new()).err().unwrap();
        assert_eq!(err.exit_code(), 4);
        assert!(!dir.path().join("t").exists());
    }

    #[test]
    fn bad_axis_is_a_config_error() {
        let s = spec(vec![parse_axis("simulate.scenario.config.sede=1").unwrap()]);
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run(&s, dir.path(), &mut Vec::new()).err().unwrap().exit_code(), 2);
    }
}

//! Run configuration: one TOML document per run, with a section for the
//! target it drives. Unknown keys are rejected everywhere, and the fully
//! resolved document is written next to every run's outputs so the run can
//! be repeated with `--config`.

use std::fmt;
use std::path::Path;

use coordlab::aggregation::{Aggregator, DiagnosticThresholds};
use coordlab::dynamics::{HysteresisScenario, Scenario, TemperatureRamp};
use coordlab::findability::{Lattice, SolutionKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Hierarchy,
    Simulate,
    Cascade,
    Mogd,
    Figure,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Target::Hierarchy => "hierarchy",
            Target::Simulate => "simulate",
            Target::Cascade => "cascade",
            Target::Mogd => "mogd",
            Target::Figure => "figure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<HierarchyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<CascadeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mogd: Option<MogdParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyParams {
    pub agents: u64,
    pub objectives: u64,
    pub k_bar: f64,
    pub rho: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub optimize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<u64>,
    #[serde(default)]
    pub compare: bool,
    #[serde(default = "default_max_branching")]
    pub max_branching: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_target: Option<f64>,
}

fn default_max_branching() -> u64 {
    10
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams {
            agents: 1000,
            objectives: 2,
            k_bar: 100.0,
            rho: 0.9,
            epsilon: 0.01,
            optimize: false,
            groups: None,
            branching: None,
            compare: false,
            max_branching: default_max_branching(),
            error_target: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SimulateParams {
    Dynamics {
        horizon: f64,
        scenario: Box<Scenario>,
    },
    Hysteresis {
        scenario: HysteresisScenario,
        ramp: TemperatureRamp,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SimulatePreset {
    Bistromathics,
    PhaseTransition,
}

impl SimulatePreset {
    pub fn params(self) -> SimulateParams {
        match self {
            SimulatePreset::Bistromathics => SimulateParams::Dynamics {
                horizon: 10.0,
                scenario: Box::new(Scenario::bistromathics()),
            },
            SimulatePreset::PhaseTransition => SimulateParams::Hysteresis {
                scenario: HysteresisScenario::default(),
                ramp: TemperatureRamp::default(),
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SimulatePreset::Bistromathics => "bistromathics",
            SimulatePreset::PhaseTransition => "phase-transition",
        }
    }
}

impl SimulateParams {
    pub fn seed_path(&self) -> &'static str {
        match self {
            SimulateParams::Dynamics { .. } => "simulate.scenario.config.seed",
            SimulateParams::Hysteresis { .. } => "simulate.scenario.seed",
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            SimulateParams::Dynamics { scenario, .. } => scenario.config.seed = seed,
            SimulateParams::Hysteresis { scenario, .. } => scenario.seed = seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeParams {
    /// Lattice rows, top first, using `.` `F` `A` `B`.
    pub grid: String,
    pub threshold: usize,
    pub kind: SolutionKind,
    pub seeds: Vec<[usize; 2]>,
}

impl CascadeParams {
    pub fn lattice(&self) -> CliResult<Lattice> {
        Ok(Lattice::parse(&self.grid, self.threshold)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    ConflictingPair,
    RotatedPair,
    RotationalTriple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MogdParams {
    pub problem: ProblemId,
    pub aggregator: Aggregator,
    pub start: Vec<f64>,
    pub step_size: f64,
    pub steps: usize,
    #[serde(default)]
    pub thresholds: DiagnosticThresholds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FigureId {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig1d,
}

impl FigureId {
    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig1a => "fig1a",
            FigureId::Fig1b => "fig1b",
            FigureId::Fig1c => "fig1c",
            FigureId::Fig1d => "fig1d",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureParams {
    /// Also render a standalone SVG next to the data.
    #[serde(default)]
    pub svg: bool,
    pub panel: Panel,
}

impl FigureParams {
    pub fn defaults(id: FigureId) -> FigureParams {
        FigureParams {
            svg: false,
            panel: Panel::defaults(id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Panel {
    /// Protocol length over an agents × objectives grid.
    Fig1a {
        agents: Vec<u64>,
        objectives: Vec<u64>,
        k_bar: f64,
        rho: f64,
        epsilon: f64,
    },
    /// Findable and accurate cascades on one lattice.
    Fig1b {
        grid: String,
        threshold: usize,
        findable_seeds: Vec<[usize; 2]>,
        accurate_seeds: Vec<[usize; 2]>,
    },
    /// Population snapshots from tightly ordered to disordered.
    Fig1c {
        agents: usize,
        spreads: Vec<f64>,
        seed: u64,
    },
    /// Cooling work against the temperature ratio.
    Fig1d {
        n_agents: u64,
        k_bar: f64,
        k0: f64,
        t1: f64,
        ratio_steps: u32,
    },
}

impl Panel {
    pub fn defaults(id: FigureId) -> Panel {
        match id {
            FigureId::Fig1a => Panel::Fig1a {
                agents: (1..=20).map(|i| i * 5).collect(),
                objectives: (1..=10).collect(),
                k_bar: 10.0,
                rho: 0.0,
                epsilon: 0.1,
            },
            FigureId::Fig1b => {
                let lattice = Lattice::figure_fixture();
                Panel::Fig1b {
                    grid: lattice.to_text(),
                    threshold: lattice.threshold(),
                    findable_seeds: vec![[0, 0]],
                    accurate_seeds: vec![[7, 7]],
                }
            }
            FigureId::Fig1c => Panel::Fig1c {
                agents: 40,
                spreads: vec![0.02, 0.15, 0.5],
                seed: 11,
            },
            FigureId::Fig1d => Panel::Fig1d {
                n_agents: 50,
                k_bar: 20.0,
                k0: 10.0,
                t1: 0.25,
                ratio_steps: 20,
            },
        }
    }

    pub fn id(&self) -> FigureId {
        match self {
            Panel::Fig1a { .. } => FigureId::Fig1a,
            Panel::Fig1b { .. } => FigureId::Fig1b,
            Panel::Fig1c { .. } => FigureId::Fig1c,
            Panel::Fig1d { .. } => FigureId::Fig1d,
        }
    }
}

impl RunConfig {
    pub fn new(name: impl Into<String>, target: Target) -> Self {
        RunConfig {
            name: name.into(),
            target,
            hierarchy: None,
            simulate: None,
            cascade: None,
            mogd: None,
            figure: None,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))
    }

    /// The name must be usable as a file stem and exactly the target's
    /// section must be present.
    pub fn check(&self) -> CliResult<()> {
        check_name(&self.name)?;
        let present = [
            (Target::Hierarchy, self.hierarchy.is_some()),
            (Target::Simulate, self.simulate.is_some()),
            (Target::Cascade, self.cascade.is_some()),
            (Target::Mogd, self.mogd.is_some()),
            (Target::Figure, self.figure.is_some()),
        ];
        for (target, has) in present {
            if target == self.target && !has {
                return Err(CliError::Config(format!(
                    "target `{target}` needs a [{target}] section"
                )));
            }
            if target != self.target && has {
                return Err(CliError::Config(format!(
                    "section [{target}] does not belong to target `{}`",
                    self.target
                )));
            }
        }
        Ok(())
    }

    /// Applies `path=value` overrides. Values are read as TOML literals and
    /// fall back to plain strings.
    pub fn with_overrides(&self, sets: &[String]) -> CliResult<Self> {
        if sets.is_empty() {
            return Ok(self.clone());
        }
        let mut doc =
            toml::Value::try_from(self).map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))?;
        for raw in sets {
            let (path, value) = raw
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override `{raw}` is not of the form path=value")))?;
            set_path(&mut doc, path.trim(), parse_value(value.trim()))?;
        }
        let cfg: RunConfig = doc.try_into()?;
        cfg.check()?;
        Ok(cfg)
    }
}

/// Names become file stems and directory names.
pub fn check_name(name: &str) -> CliResult<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "name `{name}` must be non-empty and use only letters, digits, `-`, `_` and `.`"
        )))
    }
}

pub fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets a dotted path inside a TOML document. Intermediate keys must exist;
/// the last key may be new. Numeric segments index arrays.
pub fn set_path(doc: &mut toml::Value, path: &str, value: toml::Value) -> CliResult<()> {
    let bad = |why: &str| CliError::Config(format!("cannot set `{path}`: {why}"));
    if path.is_empty() {
        return Err(bad("empty path"));
    }
    let segments: Vec<&str> = path.split('.').collect();
    let mut node = doc;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        node = match node {
            toml::Value::Table(table) => {
                if last {
                    table.insert(seg.to_string(), value);
                    return Ok(());
                }
                table.get_mut(*seg).ok_or_else(|| bad(&format!("no key `{seg}`")))?
            }
            toml::Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| bad(&format!("`{seg}` is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| bad(&format!("index {idx} out of range for length {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad(&format!("`{seg}` is below a plain value"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

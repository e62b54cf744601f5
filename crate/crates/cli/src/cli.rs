use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coordlab::findability::SolutionKind;

use crate::config::{FigureId, ProblemId, SimulatePreset};

#[derive(Debug, Parser)]
#[command(
    name = "coordlab",
    version,
    about = "Coordination cost models, simulations and figure data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Protocol-length bounds and their decompositions.
    Bounds(BoundsArgs),
    /// Group-count and tree-topology costs.
    Hierarchy(HierarchyArgs),
    /// Coordination dynamics or the phase-transition sweep.
    Simulate(SimulateArgs),
    /// Threshold adoption cascade on a lattice.
    Cascade(CascadeArgs),
    /// Multi-objective gradient descent with trajectory diagnostics.
    Mogd(MogdArgs),
    /// Cartesian parameter sweep over a base configuration.
    Sweep(SweepArgs),
    /// Data for one summary panel.
    Figure(FigureArgs),
}

/// Options shared by every command that writes result files.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Run configuration (TOML). Flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file stem; also recorded in the resolved configuration.
    #[arg(long)]
    pub name: Option<String>,
    /// Output directory.
    #[arg(long, env = "COORDLAB_OUT", default_value = "coordlab-out")]
    pub out: PathBuf,
    /// Override any configuration value, e.g. `--set simulate.horizon=5`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundsMode {
    /// Information-theoretic lower bound.
    #[value(name = "bound", alias = "theorem1")]
    Bound,
    /// Same bound split into weight and conflict bits.
    Topological,
    /// Fixed bits per objective and per conflict.
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConflictArg {
    Pairs,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 4)]
    pub agents: u64,
    #[arg(long, default_value_t = 2)]
    pub objectives: u64,
    #[arg(long, default_value_t = 10.0)]
    pub k_bar: f64,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = BoundsMode::Bound)]
    pub mode: BoundsMode,
    #[arg(long, default_value_t = 10.0)]
    pub bits_per_objective: f64,
    #[arg(long, default_value_t = 5.0)]
    pub bits_per_conflict: f64,
    #[arg(long, value_enum, default_value_t = ConflictArg::Pairs)]
    pub conflict_term: ConflictArg,
    #[arg(long, default_value_t = 0.0)]
    pub rules_bits: f64,
    /// Print the bound and its topological decomposition side by side.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub agents: Option<u64>,
    #[arg(long)]
    pub objectives: Option<u64>,
    #[arg(long)]
    pub k_bar: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Brute-force the optimal number of groups.
    #[arg(long)]
    pub optimize: bool,
    /// Cost with this many groups.
    #[arg(long)]
    pub groups: Option<u64>,
    /// Cost of a tree with this branching factor.
    #[arg(long)]
    pub branching: Option<u64>,
    /// Compare flat, grouped, tree and star topologies.
    #[arg(long)]
    pub compare: bool,
    #[arg(long)]
    pub max_branching: Option<u64>,
    /// End-to-end error target split across tree levels (needs --branching).
    #[arg(long)]
    pub error_target: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, conflicts_with = "config")]
    pub preset: Option<SimulatePreset>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated time (dynamics model only).
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LatticePreset {
    /// 16×16 crossing findable band with small accurate islands.
    XBand,
}

#[derive(Debug, Args)]
pub struct CascadeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Lattice text file: one row per line using `.` `F` `A` `B`.
    #[arg(long, conflicts_with = "preset")]
    pub lattice: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<LatticePreset>,
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<SolutionKind>,
    /// Seed cell as `x,y`; repeatable. Defaults to the first accepting cell.
    #[arg(long = "seed", value_name = "X,Y", value_parser = parse_cell)]
    pub seeds: Vec<[usize; 2]>,
    #[arg(long)]
    pub threshold: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregatorArg {
    Fixed,
    MinNorm,
    RoundRobin,
}

#[derive(Debug, Args)]
pub struct MogdArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub problem: Option<ProblemId>,
    #[arg(long, value_enum)]
    pub aggregator: Option<AggregatorArg>,
    /// Fixed aggregation weights, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub start: Option<Vec<f64>>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep specification (TOML) with `name`, `cap`, `[base]` and `[[axes]]`.
    #[arg(long, conflicts_with_all = ["base", "preset"])]
    pub config: Option<PathBuf>,
    /// Base run configuration to vary.
    #[arg(long, conflicts_with = "preset")]
    pub base: Option<PathBuf>,
    /// Base on a simulate preset instead of a file.
    #[arg(long, value_enum)]
    pub preset: Option<SimulatePreset>,
    /// Axis as `path=v1,v2,...` or `path=[...]`; repeatable.
    #[arg(long = "axis", value_name = "PATH=VALUES")]
    pub axes: Vec<String>,
    /// Shorthand for an axis over the target's seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Largest allowed number of scenarios.
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, env = "COORDLAB_OUT", default_value = "coordlab-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub id: FigureId,
    /// Also write a standalone SVG rendering.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

fn parse_kind(s: &str) -> Result<SolutionKind, String> {
    s.parse::<SolutionKind>().map_err(|e| e.to_string())
}

fn parse_cell(s: &str) -> Result<[usize; 2], String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` is not of the form x,y"))?;
    let coord = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok([coord(x)?, coord(y)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cells() {
        assert_eq!(parse_cell("3, 4").unwrap(), [3, 4]);
        assert!(parse_cell("3").is_err());
        assert!(parse_cell("-1,2").is_err());
    }

    #[test]
    fn command_tree_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

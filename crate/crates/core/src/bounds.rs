//! Closed-form protocol-length calculators.
//!
//! All logarithms here are base 2, so every quantity is in bits. The
//! protocol length of `N` agents coordinating on `d` objectives splits into a
//! model-sharing term `N·K̄·log₂K̄·(1−ρ)` and a pairwise communication term
//! `C(N,2)·d(d+3)/2·log₂(1/ε)`. The same total can be reached by counting
//! per-objective weights and per-objective-pair conflicts separately, which
//! [`topological_decomposition`] does.

use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Parameters shared by every bound: agents, objectives, model size, overlap
/// and consensus precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinationParams {
    pub n_agents: u64,
    pub n_objectives: u64,
    /// Mean model complexity K̄ in bits.
    pub mean_model_complexity: f64,
    /// Mean pairwise model overlap ρ in `[0, 1]`.
    pub overlap: f64,
    /// Consensus precision ε in `(0, 1)`.
    pub precision: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_complexity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_objective_complexity: Option<f64>,
}

impl CoordinationParams {
    pub fn new(
        n_agents: u64,
        n_objectives: u64,
        mean_model_complexity: f64,
        overlap: f64,
        precision: f64,
    ) -> Result<Self> {
        let p = CoordinationParams {
            n_agents,
            n_objectives,
            mean_model_complexity,
            overlap,
            precision,
            base_complexity: None,
            per_objective_complexity: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters whose K̄ follows the linear law `K_b + K_δ·d`.
    pub fn with_linear_complexity(
        n_agents: u64,
        n_objectives: u64,
        base_complexity: f64,
        per_objective_complexity: f64,
        overlap: f64,
        precision: f64,
    ) -> Result<Self> {
        let k_bar = model_complexity_linear(base_complexity, per_objective_complexity, n_objectives)?;
        let mut p = Self::new(n_agents, n_objectives, k_bar, overlap, precision)?;
        p.base_complexity = Some(base_complexity);
        p.per_objective_complexity = Some(per_objective_complexity);
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 1 {
            return Err(CoordError::invalid("n_agents", "must be at least 1"));
        }
        if self.n_objectives < 1 {
            return Err(CoordError::invalid("n_objectives", "must be at least 1"));
        }
        if !(self.mean_model_complexity.is_finite() && self.mean_model_complexity > 0.0) {
            return Err(CoordError::invalid(
                "mean_model_complexity",
                format!("must be positive, got {}", self.mean_model_complexity),
            ));
        }
        check_overlap(self.overlap)?;
        check_precision(self.precision)?;
        for (name, v) in [
            ("base_complexity", self.base_complexity),
            ("per_objective_complexity", self.per_objective_complexity),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CoordError::invalid(name, format!("must be nonnegative, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// `K_b + K_δ·d` when both linear-law coefficients are present.
    pub fn linear_model_complexity(&self) -> Option<f64> {
        Some(self.base_complexity? + self.per_objective_complexity? * self.n_objectives as f64)
    }

    /// log₂(1/ε), the bits needed per resolved quantity.
    pub fn precision_bits(&self) -> f64 {
        (1.0 / self.precision).log2()
    }
}

pub(crate) fn check_overlap(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(CoordError::invalid("overlap", format!("must lie in [0, 1], got {rho}")));
    }
    Ok(())
}

pub(crate) fn check_precision(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CoordError::invalid(
            "precision",
            format!("must lie in (0, 1), got {eps}"),
        ));
    }
    Ok(())
}

/// Bit-denominated decomposition of a protocol length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub l_models: f64,
    pub l_comm: f64,
    pub l_rules: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(l_models: f64, l_comm: f64, l_rules: f64) -> Self {
        CostBreakdown {
            l_models,
            l_comm,
            l_rules,
            total: l_models + l_comm + l_rules,
        }
    }
}

/// Weight/conflict decomposition of the same protocol length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologicalBreakdown {
    pub i_models: f64,
    pub i_weight: f64,
    pub i_conflict: f64,
    /// `i_weight + i_conflict`, with the counts summed before scaling by the precision bits.
    pub i_comm: f64,
    pub total: f64,
}

/// `C(n, 2)` as a float.
pub fn pairs(n: u64) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Number of Gaussian parameters per objective set: `d(d+3)/2` (mean plus
/// covariance entries).
pub fn objective_param_count(d: u64) -> f64 {
    let d = d as f64;
    d * (d + 3.0) / 2.0
}

/// `N·K̄·log₂K̄·(1−ρ)`, clamped at zero for K̄ < 1 where the log goes negative.
pub fn model_sharing_bits(n: f64, k_bar: f64, rho: f64) -> f64 {
    (n * k_bar * k_bar.log2() * (1.0 - rho)).max(0.0)
}

/// Lower bound on the protocol length for ε-approximate consensus.
///
/// The rules term is zero: it grows only logarithmically in N and dropping it
/// keeps the bound strict.
pub fn protocol_length(params: &CoordinationParams) -> Result<CostBreakdown> {
    params.validate()?;
    let l_models = model_sharing_bits(params.n_agents as f64, params.mean_model_complexity, params.overlap);
    let l_comm = pairs(params.n_agents) * objective_param_count(params.n_objectives) * params.precision_bits();
    Ok(CostBreakdown::new(l_models, l_comm, 0.0))
}

/// Bits one pair of agents must exchange.
///
/// With `include_alignment` the basis-alignment overhead `d·log₂d + d`
/// (permutation plus sign conventions) is added.
pub fn pairwise_exchange_cost(d: u64, epsilon: f64, include_alignment: bool) -> Result<f64> {
    if d < 1 {
        return Err(CoordError::invalid("n_objectives", "must be at least 1"));
    }
    check_precision(epsilon)?;
    let mut bits = objective_param_count(d) * (1.0 / epsilon).log2();
    if include_alignment {
        let df = d as f64;
        bits += df * df.log2() + df;
    }
    Ok(bits)
}

/// `K(m_i | m_j) = K_i·(1−ρ)`.
pub fn conditional_complexity(k_i: f64, rho: f64) -> Result<f64> {
    if !(k_i.is_finite() && k_i >= 0.0) {
        return Err(CoordError::invalid("k_i", format!("must be nonnegative, got {k_i}")));
    }
    check_overlap(rho)?;
    Ok(k_i * (1.0 - rho))
}

/// Linear model-size law `K_b + K_δ·d`.
pub fn model_complexity_linear(k_b: f64, k_delta: f64, d: u64) -> Result<f64> {
    if !(k_b.is_finite() && k_b >= 0.0) {
        return Err(CoordError::invalid(
            "base_complexity",
            format!("must be nonnegative, got {k_b}"),
        ));
    }
    if !(k_delta.is_finite() && k_delta >= 0.0) {
        return Err(CoordError::invalid(
            "per_objective_complexity",
            format!("must be nonnegative, got {k_delta}"),
        ));
    }
    Ok(k_b + k_delta * d as f64)
}

/// How many objective conflicts each pair of agents reconciles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictTerm {
    /// `C(d, 2)` objective pairs.
    #[serde(alias = "pairs")]
    ObjectivePairs,
    /// `d(d+3)/2`, the full mean-plus-covariance count.
    Full,
}

impl ConflictTerm {
    pub fn count(self, d: u64) -> f64 {
        match self {
            ConflictTerm::ObjectivePairs => pairs(d),
            ConflictTerm::Full => objective_param_count(d),
        }
    }
}

impl std::str::FromStr for ConflictTerm {
    type Err = CoordError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs" | "objective-pairs" => Ok(ConflictTerm::ObjectivePairs),
            "full" => Ok(ConflictTerm::Full),
            other => Err(CoordError::Malformed(format!("unknown conflict term `{other}`"))),
        }
    }
}

/// Back-of-envelope accounting with fixed bits per objective and per
/// reconciled conflict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleEstimate {
    pub bits_per_objective: f64,
    pub bits_per_conflict: f64,
    pub conflict_term: ConflictTerm,
    #[serde(default)]
    pub rules_bits: f64,
}

impl SimpleEstimate {
    /// 10 bits per objective, 5 bits per pairwise reconciliation.
    pub fn bill_splitting(conflict_term: ConflictTerm) -> Self {
        SimpleEstimate {
            bits_per_objective: 10.0,
            bits_per_conflict: 5.0,
            conflict_term,
            rules_bits: 0.0,
        }
    }

    pub fn evaluate(&self, n: u64, d: u64) -> CostBreakdown {
        simple_estimate(
            n,
            d,
            self.bits_per_objective,
            self.bits_per_conflict,
            self.conflict_term,
            self.rules_bits,
        )
    }
}

/// `N·d·bits_per_objective + C(N,2)·conflicts(d)·bits_per_conflict + rules`.
pub fn simple_estimate(
    n: u64,
    d: u64,
    bits_per_objective: f64,
    bits_per_conflict: f64,
    conflict_term: ConflictTerm,
    rules_bits: f64,
) -> CostBreakdown {
    let l_models = n as f64 * d as f64 * bits_per_objective;
    let l_comm = pairs(n) * conflict_term.count(d) * bits_per_conflict;
    CostBreakdown::new(l_models, l_comm, rules_bits)
}

/// Same total as [`protocol_length`], split into per-objective weight and
/// variance bits (`N(N−1)·d`) and per-objective-pair conflict bits
/// (`C(N,2)·C(d,2)`).
pub fn topological_decomposition(params: &CoordinationParams) -> Result<TopologicalBreakdown> {
    params.validate()?;
    let n = params.n_agents as f64;
    let d = params.n_objectives as f64;
    let bits = params.precision_bits();
    let i_models = model_sharing_bits(n, params.mean_model_complexity, params.overlap);
    let weight_count = n * (n - 1.0) * d;
    let conflict_count = n * (n - 1.0) / 2.0 * (d * (d - 1.0) / 2.0);
    let i_comm = (weight_count + conflict_count) * bits;
    Ok(TopologicalBreakdown {
        i_models,
        i_weight: weight_count * bits,
        i_conflict: conflict_count * bits,
        i_comm,
        total: i_models + i_comm + 0.0,
    })
}

/// Minimum erasure energy in joules: `bits·k_B·T·ln 2`.
pub fn landauer_energy(bits: f64, physical_temperature: f64) -> Result<f64> {
    if !(physical_temperature > 0.0 && physical_temperature.is_finite()) {
        return Err(CoordError::invalid(
            "physical_temperature",
            format!("must be positive, got {physical_temperature}"),
        ));
    }
    if !(bits >= 0.0 && bits.is_finite()) {
        return Err(CoordError::invalid("bits", format!("must be nonnegative, got {bits}")));
    }
    Ok(bits * BOLTZMANN * physical_temperature * std::f64::consts::LN_2)
}

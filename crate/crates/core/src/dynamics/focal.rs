use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{protocol_length, ConflictTerm, CoordinationParams, SimpleEstimate};
use crate::error::{CoordError, Result};

/// Regimes a group falls back to, ordered from most to least demanding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FocalKind {
    Exact,
    Category,
    EqualSplit,
    Separate,
    Chaos,
    Abandon,
}

impl FocalKind {
    pub const ALL: [FocalKind; 6] = [
        FocalKind::Exact,
        FocalKind::Category,
        FocalKind::EqualSplit,
        FocalKind::Separate,
        FocalKind::Chaos,
        FocalKind::Abandon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FocalKind::Exact => "exact",
            FocalKind::Category => "category",
            FocalKind::EqualSplit => "equal-split",
            FocalKind::Separate => "separate",
            FocalKind::Chaos => "chaos",
            FocalKind::Abandon => "abandon",
        }
    }
}

impl fmt::Display for FocalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FocalKind {
    type Err = CoordError;

    fn from_str(s: &str) -> Result<Self> {
        FocalKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| CoordError::Malformed(format!("unknown focal kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocalPoint {
    pub kind: FocalKind,
    /// K_focal in bits.
    pub complexity: f64,
}

/// Coefficients of the quadratic surrogate `aN + b·d² + c·N² + e·N²d²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

impl FocalCoefficients {
    /// Matches the protocol-length bound: `a = K̄·log₂K̄·(1−ρ)`, `e` is the
    /// `N²d²` coefficient `log₂(1/ε)/4`, and `b = c = 3·log₂(1/ε)/4`.
    pub fn from_bound(k_bar: f64, rho: f64, epsilon: f64) -> Self {
        let bits = (1.0 / epsilon).log2();
        FocalCoefficients {
            a: k_bar * k_bar.log2() * (1.0 - rho),
            b: 0.75 * bits,
            c: 0.75 * bits,
            e: 0.25 * bits,
        }
    }

    pub fn evaluate(&self, n: f64, d: f64) -> f64 {
        self.a * n + self.b * d * d + self.c * n * n + self.e * n * n * d * d
    }
}

/// `B·exp(−L(P)/L_capacity)` with `L(P)` from the quadratic surrogate.
pub fn focal_point_complexity(
    n: f64,
    d: f64,
    capacity_b: f64,
    l_capacity: f64,
    coeffs: &FocalCoefficients,
) -> Result<f64> {
    focal_complexity_from_length(coeffs.evaluate(n, d), capacity_b, l_capacity)
}

/// `B·exp(−L/L_capacity)` for a known protocol length.
pub fn focal_complexity_from_length(l_p: f64, capacity_b: f64, l_capacity: f64) -> Result<f64> {
    if !(capacity_b > 0.0) {
        return Err(CoordError::invalid(
            "capacity_b",
            format!("must be positive, got {capacity_b}"),
        ));
    }
    if !(l_capacity > 0.0) {
        return Err(CoordError::invalid(
            "l_capacity",
            format!("must be positive, got {l_capacity}"),
        ));
    }
    Ok(capacity_b * (-l_p / l_capacity).exp())
}

/// Load ratios `L/L_capacity` at which the regime escalates past an equal split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Escalation {
    pub separate: f64,
    pub chaos: f64,
    pub abandon: f64,
}

impl Default for Escalation {
    fn default() -> Self {
        Escalation {
            separate: 1.0,
            chaos: 3.0,
            abandon: 6.0,
        }
    }
}

/// Regime for a protocol length against capacity. A load exactly on a
/// boundary takes the simpler regime.
pub fn select_focal_point(l_p: f64, l_capacity: f64, escalation: &Escalation) -> FocalKind {
    let r = l_p / l_capacity;
    if r < 0.3 {
        FocalKind::Exact
    } else if r < 0.7 {
        FocalKind::Category
    } else if r < escalation.separate.max(0.7) {
        FocalKind::EqualSplit
    } else if r < escalation.chaos {
        FocalKind::Separate
    } else if r < escalation.abandon {
        FocalKind::Chaos
    } else {
        FocalKind::Abandon
    }
}

/// How a running system prices its coordination protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LpEstimator {
    /// The full bound with the run's K̄, ρ and ε.
    Bound,
    /// Fixed bits per objective and per reconciled conflict.
    Simple {
        bits_per_objective: f64,
        bits_per_conflict: f64,
        conflict_term: ConflictTerm,
        #[serde(default)]
        rules_bits: f64,
        /// Charge no reconciliation while the system sits at zero temperature.
        #[serde(default)]
        consensus_skips_reconciliation: bool,
    },
}

impl LpEstimator {
    pub fn bill_splitting(conflict_term: ConflictTerm, consensus_skips_reconciliation: bool) -> Self {
        let s = SimpleEstimate::bill_splitting(conflict_term);
        LpEstimator::Simple {
            bits_per_objective: s.bits_per_objective,
            bits_per_conflict: s.bits_per_conflict,
            conflict_term,
            rules_bits: s.rules_bits,
            consensus_skips_reconciliation,
        }
    }

    pub fn evaluate(&self, n: u64, d: u64, t_co: f64, k_bar: f64, rho: f64, epsilon: f64) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        match *self {
            LpEstimator::Bound => {
                Ok(protocol_length(&CoordinationParams::new(n, d.max(1), k_bar, rho, epsilon)?)?.total)
            }
            LpEstimator::Simple {
                bits_per_objective,
                bits_per_conflict,
                conflict_term,
                rules_bits,
                consensus_skips_reconciliation,
            } => {
                let est = SimpleEstimate {
                    bits_per_objective,
                    bits_per_conflict,
                    conflict_term,
                    rules_bits,
                }
                .evaluate(n, d);
                if consensus_skips_reconciliation && t_co == 0.0 {
                    Ok(est.l_models + est.l_rules)
                } else {
                    Ok(est.total)
                }
            }
        }
    }
}

/// Capacity, escalation and pricing used to pick a regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalConfig {
    /// Bits a group can hold before simplifying.
    pub l_capacity: f64,
    #[serde(default)]
    pub escalation: Escalation,
    pub estimator: LpEstimator,
}

impl Default for FocalConfig {
    /// Bill splitting priced per objective pair against 230 bits of capacity.
    fn default() -> Self {
        FocalConfig {
            l_capacity: 230.0,
            escalation: Escalation::default(),
            estimator: LpEstimator::bill_splitting(ConflictTerm::ObjectivePairs, false),
        }
    }
}

impl FocalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_capacity > 0.0 && self.l_capacity.is_finite()) {
            return Err(CoordError::invalid("l_capacity", "must be positive"));
        }
        let e = &self.escalation;
        if !(e.separate > 0.0 && e.separate <= e.chaos && e.chaos <= e.abandon) {
            return Err(CoordError::invalid(
                "escalation",
                "thresholds must be positive and nondecreasing",
            ));
        }
        Ok(())
    }
}

/// Regime for every `(N, d)`; rows follow `n_values`, columns `d_values`.
/// Priced at zero temperature with K̄ = 100, ρ = 0, ε = 0.01 when the
/// estimator needs them.
pub fn focal_matrix(n_values: &[u64], d_values: &[u64], config: &FocalConfig) -> Result<Vec<Vec<FocalKind>>> {
    if n_values.is_empty() || d_values.is_empty() {
        return Err(CoordError::invalid(
            "grid",
            "agent and objective lists must be nonempty",
        ));
    }
    config.validate()?;
    n_values
        .iter()
        .map(|&n| {
            d_values
                .iter()
                .map(|&d| {
                    let l = config.estimator.evaluate(n, d, 1.0, 100.0, 0.0, 0.01)?;
                    Ok(select_focal_point(l, config.l_capacity, &config.escalation))
                })
                .collect()
        })
        .collect()
}

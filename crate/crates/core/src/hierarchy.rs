//! Hierarchical coordination costs.
//!
//! Splitting N agents into M groups trades the quadratic all-pairs
//! communication term for within-group and between-representative terms;
//! multi-level trees push the cost down to linear in N. The brute-force
//! integer minimizer over M is the source of truth for the optimal group
//! count; the closed forms are large-N approximations.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    check_overlap, check_precision, model_sharing_bits, objective_param_count, protocol_length, CoordinationParams,
};
use crate::error::{CoordError, Result};
use crate::exec::Execution;

/// Separate between-group model parameters. `None` means "same as in-group".
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupOverrides {
    pub k_bar_out: Option<f64>,
    pub rho_out: Option<f64>,
}

fn check_d_h(d_h: u64) -> Result<()> {
    if d_h < 1 {
        return Err(CoordError::invalid("d_h", "must be at least 1"));
    }
    Ok(())
}

fn comm_unit(d_h: u64, epsilon: f64) -> f64 {
    objective_param_count(d_h) * (1.0 / epsilon).log2()
}

/// Single-level grouping cost with M groups of (possibly fractional) size N/M.
pub fn single_level_cost(params: &CoordinationParams, m: u64, d_h: u64) -> Result<f64> {
    single_level_cost_with(params, m, d_h, GroupOverrides::default())
}

pub fn single_level_cost_with(params: &CoordinationParams, m: u64, d_h: u64, overrides: GroupOverrides) -> Result<f64> {
    params.validate()?;
    check_d_h(d_h)?;
    let n = params.n_agents;
    if m < 1 || m > n {
        return Err(CoordError::invalid("groups", format!("must lie in [1, {n}], got {m}")));
    }
    let k_out = overrides.k_bar_out.unwrap_or(params.mean_model_complexity);
    let rho_out = overrides.rho_out.unwrap_or(params.overlap);
    if !(k_out > 0.0 && k_out.is_finite()) {
        return Err(CoordError::invalid(
            "k_bar_out",
            format!("must be positive, got {k_out}"),
        ));
    }
    check_overlap(rho_out)?;
    Ok(single_level_cost_unchecked(params, m, d_h, k_out, rho_out))
}

fn single_level_cost_unchecked(params: &CoordinationParams, m: u64, d_h: u64, k_out: f64, rho_out: f64) -> f64 {
    let nf = params.n_agents as f64;
    let mf = m as f64;
    let models =
        model_sharing_bits(nf, params.mean_model_complexity, params.overlap) + model_sharing_bits(mf, k_out, rho_out);
    let pair_count = (nf * nf - nf * mf) / (2.0 * mf) + mf * (mf - 1.0) / 2.0;
    models + pair_count * comm_unit(d_h, params.precision)
}

/// Analytic and brute-force optimal group counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupOptimum {
    /// `N^(2/3) / 2^(1/3)`, the large-N stationary point.
    pub analytic: f64,
    /// Integer argmin of [`single_level_cost`] over `1..=N`.
    pub exact: u64,
    pub exact_cost: f64,
}

pub fn analytic_group_count(n: u64) -> f64 {
    (n as f64).powf(2.0 / 3.0) / 2f64.cbrt()
}

pub fn optimal_group_count(params: &CoordinationParams, d_h: u64) -> Result<GroupOptimum> {
    optimal_group_count_with(params, d_h, Execution::default())
}

pub fn optimal_group_count_with(params: &CoordinationParams, d_h: u64, exec: Execution) -> Result<GroupOptimum> {
    params.validate()?;
    check_d_h(d_h)?;
    if params.n_agents < 2 {
        return Err(CoordError::invalid("n_agents", "grouping needs at least 2 agents"));
    }
    let k = params.mean_model_complexity;
    let rho = params.overlap;
    let (exact, exact_cost) = exec
        .argmin_range(1, params.n_agents + 1, |m| {
            single_level_cost_unchecked(params, m, d_h, k, rho)
        })
        .expect("nonempty range");
    Ok(GroupOptimum {
        analytic: analytic_group_count(params.n_agents),
        exact,
        exact_cost,
    })
}

/// Large-N closed form `N·K̄·log₂K̄·(1−ρ) + ½·N^(4/3)·d_H(d_H+3)·log₂(1/ε)`.
pub fn single_level_min_cost(params: &CoordinationParams, d_h: u64) -> Result<f64> {
    params.validate()?;
    check_d_h(d_h)?;
    if params.n_agents < 2 {
        return Err(CoordError::invalid("n_agents", "grouping needs at least 2 agents"));
    }
    let nf = params.n_agents as f64;
    let d = d_h as f64;
    Ok(model_sharing_bits(nf, params.mean_model_complexity, params.overlap)
        + 0.5 * nf.powf(4.0 / 3.0) * d * (d + 3.0) * params.precision_bits())
}

fn check_branching(b: u64, n: u64) -> Result<()> {
    if b < 2 {
        return Err(CoordError::invalid(
            "branching_factor",
            format!("must be at least 2, got {b}"),
        ));
    }
    if n < b {
        return Err(CoordError::invalid(
            "n_agents",
            format!("must be at least the branching factor {b}, got {n}"),
        ));
    }
    Ok(())
}

/// Smallest D with b^D ≥ N (exact integer arithmetic).
pub fn tree_depth(n: u64, b: u64) -> u32 {
    let mut depth = 0u32;
    let mut reach: u128 = 1;
    while reach < n as u128 {
        reach *= b as u128;
        depth += 1;
    }
    depth
}

/// Multi-level tree cost, large-N form.
pub fn multi_level_cost(params: &CoordinationParams, b: u64, d_h: u64) -> Result<f64> {
    params.validate()?;
    check_d_h(d_h)?;
    check_branching(b, params.n_agents)?;
    let nf = params.n_agents as f64;
    let bf = b as f64;
    let d = d_h as f64;
    let models = model_sharing_bits(nf, params.mean_model_complexity, params.overlap) * bf * bf / (bf - 1.0);
    let comm = 0.25 * nf * bf * bf * d * (d + 3.0) * params.precision_bits();
    Ok(models + comm)
}

/// Multi-level tree cost as an explicit sum over `⌈log_b N⌉` levels.
///
/// Level ℓ has `⌈N/b^ℓ⌉` nodes, each coordinating b children; the top level
/// is ragged when N is not a power of b. `k_bar_per_level`, when given,
/// replaces K̄ level by level (the last entry repeats).
pub fn multi_level_cost_exact(
    params: &CoordinationParams,
    b: u64,
    d_h: u64,
    k_bar_per_level: Option<&[f64]>,
) -> Result<f64> {
    params.validate()?;
    check_d_h(d_h)?;
    check_branching(b, params.n_agents)?;
    if let Some(ks) = k_bar_per_level {
        if ks.is_empty() || ks.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(CoordError::invalid("k_bar_per_level", "entries must be positive"));
        }
    }
    let depth = tree_depth(params.n_agents, b);
    let bf = b as f64;
    let comm_per_node = bf * (bf - 1.0) / 2.0 * comm_unit(d_h, params.precision);
    let mut total = 0.0;
    let mut nodes = params.n_agents;
    for level in 0..depth as usize {
        let k = match k_bar_per_level {
            Some(ks) => ks[level.min(ks.len() - 1)],
            None => params.mean_model_complexity,
        };
        let c_level = bf * k * k.log2().max(0.0) * (1.0 - params.overlap) + comm_per_node;
        total += nodes as f64 * c_level;
        nodes = nodes.div_ceil(b);
    }
    Ok(total)
}

/// Per-level error budget for a target end-to-end error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPropagation {
    pub epsilon_level: f64,
    pub epsilon_total: f64,
    pub levels: u32,
    /// `ε_level · levels`, the small-ε approximation of the total.
    pub linear_total: f64,
}

pub fn error_propagation(epsilon_total_target: f64, b: u64, n: u64) -> Result<ErrorPropagation> {
    check_precision(epsilon_total_target)?;
    check_branching(b, n)?;
    let levels = tree_depth(n, b);
    let l = levels as f64;
    let epsilon_level = 1.0 - (1.0 - epsilon_total_target).powf(1.0 / l);
    let epsilon_total = 1.0 - (1.0 - epsilon_level).powf(l);
    Ok(ErrorPropagation {
        epsilon_level,
        epsilon_total,
        levels,
        linear_total: epsilon_level * l,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Flat,
    SingleLevel,
    MultiLevel,
    Star,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyRow {
    pub kind: TopologyKind,
    /// Group count for single-level, branching factor for multi-level.
    pub parameter: Option<u64>,
    pub total_bits: f64,
    /// Dominant power of N in the communication term.
    pub exponent: f64,
    /// Reported from the scaling argument only, not a lower bound we derive.
    pub analytic_only: bool,
}

/// Flat vs single-level (optimal M) vs multi-level trees (b = 2..=b_max) vs star.
pub fn compare_topologies(params: &CoordinationParams, d_h: u64, b_max: u64) -> Result<Vec<TopologyRow>> {
    params.validate()?;
    check_d_h(d_h)?;
    let mut rows = vec![TopologyRow {
        kind: TopologyKind::Flat,
        parameter: None,
        total_bits: protocol_length(params)?.total,
        exponent: 2.0,
        analytic_only: false,
    }];
    if params.n_agents >= 2 {
        let opt = optimal_group_count(params, d_h)?;
        rows.push(TopologyRow {
            kind: TopologyKind::SingleLevel,
            parameter: Some(opt.exact),
            total_bits: opt.exact_cost,
            exponent: 4.0 / 3.0,
            analytic_only: false,
        });
    }
    for b in 2..=b_max.min(params.n_agents) {
        rows.push(TopologyRow {
            kind: TopologyKind::MultiLevel,
            parameter: Some(b),
            total_bits: multi_level_cost_exact(params, b, d_h, None)?,
            exponent: 1.0,
            analytic_only: false,
        });
    }
    // Center processes N·d²·log(1/ε); messages are O(N).
    let d = params.n_objectives as f64;
    rows.push(TopologyRow {
        kind: TopologyKind::Star,
        parameter: None,
        total_bits: params.n_agents as f64 * d * d * params.precision_bits(),
        exponent: 1.0,
        analytic_only: true,
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::pairs;

    fn p(n: u64) -> CoordinationParams {
        CoordinationParams::new(n, 2, 100.0, 0.9, 0.01).unwrap()
    }

    /// Plain loop over every m, independent of the Execution path.
    fn brute_force_argmin(params: &CoordinationParams, d_h: u64, comm_only: bool) -> u64 {
        let mut best = (0, f64::INFINITY);
        for m in 1..=params.n_agents {
            let n = params.n_agents as f64;
            let mf = m as f64;
            let comm = ((n * n - n * mf) / (2.0 * mf) + mf * (mf - 1.0) / 2.0) * (d_h * (d_h + 3)) as f64 / 2.0
                * (1.0 / params.precision).log2();
            let models =
                (n + mf) * params.mean_model_complexity * params.mean_model_complexity.log2() * (1.0 - params.overlap);
            let c = if comm_only { comm } else { comm + models };
            if c < best.1 {
                best = (m, c);
            }
        }
        best.0
    }

    #[test]
    fn endpoints_recover_flat_pair_count() {
        let params = p(50);
        let unit = comm_unit(2, 0.01);
        let model = 100.0 * 100f64.log2() * 0.1;
        let c1 = single_level_cost(&params, 1, 2).unwrap();
        assert!((c1 - (51.0 * model + pairs(50) * unit)).abs() < 1e-6);
        let cn = single_level_cost(&params, 50, 2).unwrap();
        assert!((cn - (100.0 * model + pairs(50) * unit)).abs() < 1e-6);
        assert!(single_level_cost(&params, 0, 2).is_err());
        assert!(single_level_cost(&params, 51, 2).is_err());
    }

    #[test]
    fn interior_minimum_near_79() {
        let params = p(1000);
        let c79 = single_level_cost(&params, 79, 2).unwrap();
        assert!(c79 <= single_level_cost(&params, 100, 2).unwrap());
        assert!(c79 <= single_level_cost(&params, 50, 2).unwrap());
    }

    #[test]
    fn optimum_matches_brute_force() {
        for n in [2, 8, 100, 1000] {
            let params = p(n);
            let opt = optimal_group_count(&params, 2).unwrap();
            assert_eq!(opt.exact, brute_force_argmin(&params, 2, false), "n={n}");
        }
        let opt = optimal_group_count(&p(1000), 2).unwrap();
        assert!((opt.analytic - 79.37).abs() < 0.01);
        assert!([79, 80].contains(&opt.exact));
        assert!([79, 80].contains(&brute_force_argmin(&p(1000), 2, true)));
        assert!((analytic_group_count(8) - 3.17).abs() < 0.01);
    }

    #[test]
    fn min_cost_closed_forms() {
        let params = CoordinationParams::new(64, 1, 10.0, 1.0, 0.5).unwrap();
        assert!((single_level_min_cost(&params, 1).unwrap() - 512.0).abs() < 1e-9);
        let big = p(10_000);
        let exact = optimal_group_count(&big, 2).unwrap().exact_cost;
        let approx = single_level_min_cost(&big, 2).unwrap();
        assert!((approx / exact - 1.0).abs() < 0.15);
    }

    #[test]
    fn multi_level_hand_case() {
        let params = CoordinationParams::new(100, 1, 10.0, 0.0, 0.1).unwrap();
        let total = multi_level_cost(&params, 2, 1).unwrap();
        let model = 100.0 * 10.0 * 10f64.log2() * 4.0;
        let comm = 0.25 * 100.0 * 4.0 * 4.0 * 10f64.log2();
        assert!((model - 13287.7).abs() < 0.1 && (comm - 1328.8).abs() < 0.1);
        assert!((total - 14616.5).abs() < 0.1);
        let full = CoordinationParams::new(100, 1, 10.0, 1.0, 0.1).unwrap();
        assert!((multi_level_cost(&full, 2, 1).unwrap() - comm).abs() < 1e-9);
        assert!(multi_level_cost(&params, 1, 1).is_err());
    }

    #[test]
    fn exact_sum_approaches_large_n_form() {
        let params = CoordinationParams::new(1 << 20, 2, 50.0, 0.5, 0.05).unwrap();
        let exact = multi_level_cost_exact(&params, 2, 2, None).unwrap();
        let approx = multi_level_cost(&params, 2, 2).unwrap();
        assert!((exact / approx - 1.0).abs() < 0.02);
    }

    #[test]
    fn per_level_k_override() {
        let params = CoordinationParams::new(16, 1, 10.0, 0.0, 0.5).unwrap();
        let same = multi_level_cost_exact(&params, 2, 1, Some(&[10.0])).unwrap();
        assert_eq!(same, multi_level_cost_exact(&params, 2, 1, None).unwrap());
        let saturating = multi_level_cost_exact(&params, 2, 1, Some(&[10.0, 20.0])).unwrap();
        assert!(saturating > same);
    }

    #[test]
    fn depth_is_exact_for_powers() {
        assert_eq!(tree_depth(1024, 2), 10);
        assert_eq!(tree_depth(1025, 2), 11);
        assert_eq!(tree_depth(1000, 10), 3);
        assert_eq!(tree_depth(1001, 10), 4);
    }

    #[test]
    fn error_budget() {
        let e = error_propagation(0.01, 2, 1024).unwrap();
        assert_eq!(e.levels, 10);
        assert!((e.epsilon_level - 1.0045e-3).abs() < 1e-7);
        assert!((e.epsilon_total - 0.01).abs() / 0.01 < 1e-9);
        assert!((e.linear_total - 0.01).abs() / 0.01 < 0.01);
        assert!(error_propagation(1.0, 2, 1024).is_err());
    }

    #[test]
    fn topology_table() {
        let params = CoordinationParams::new(1000, 2, 100.0, 0.9, 0.01).unwrap();
        let rows = compare_topologies(&params, 2, 4).unwrap();
        let flat = &rows[0];
        assert_eq!(flat.total_bits, protocol_length(&params).unwrap().total);
        let single = rows.iter().find(|r| r.kind == TopologyKind::SingleLevel).unwrap();
        assert!(single.total_bits < flat.total_bits);
        assert!(rows.iter().any(|r| r.kind == TopologyKind::Star && r.analytic_only));

        let big = CoordinationParams::new(10_000, 2, 100.0, 0.9, 0.01).unwrap();
        let rows = compare_topologies(&big, 2, 2).unwrap();
        let single = rows.iter().find(|r| r.kind == TopologyKind::SingleLevel).unwrap();
        let multi = rows.iter().find(|r| r.kind == TopologyKind::MultiLevel).unwrap();
        assert!(multi.total_bits < single.total_bits);
    }
}

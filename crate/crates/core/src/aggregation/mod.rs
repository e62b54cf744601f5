//! Aggregation of conflicting preferences.
//!
//! Two settings share one obstruction. Discrete rankings aggregated by
//! pairwise majority can cycle (`A>B>C>A`), and small instances can be
//! enumerated exhaustively to find which of anonymity and unanimity a rule
//! gives up. Continuous gradient aggregation in multi-objective descent can
//! orbit instead of settling, which [`run_mogd`] detects from the trajectory.

mod gradient;
mod voting;

pub use gradient::{
    aggregate_gradients, conflict_detect, diagnose, min_norm_weights, perturbation_lipschitz, project_simplex,
    run_mogd, Aggregator, DiagnosticThresholds, GradientProblem, Quadratic, Trajectory, TrajectoryDiagnostics,
    TrajectoryStatus, SIMPLEX_TOL,
};
pub use voting::{
    all_rankings, check_axioms, nth_profile, pairwise_majority, profile_count, AggregationRule, AxiomOutcome,
    AxiomReport, Counterexample, MajorityRelation, PreferenceProfile, ENUMERATION_CAP,
};

#[cfg(test)]
mod tests {
    use super::*;

    fn round_robin_orbit(problem: &GradientProblem, start: [f64; 2], eta: f64, steps: usize) -> Vec<[f64; 2]> {
        let mut out = vec![start];
        let mut p = start;
        for k in 0..steps {
            let c = &problem.objectives()[k % 3].center;
            p = [p[0] - 2.0 * eta * (p[0] - c[0]), p[1] - 2.0 * eta * (p[1] - c[1])];
            out.push(p);
        }
        out
    }

    #[test]
    fn rotational_triple_orbit_then_diagnostic() {
        let problem = GradientProblem::rotational_triple();
        let orbit = round_robin_orbit(&problem, [2.0, -1.0], 0.25, 100_000);
        let tail = &orbit[orbit.len() - 9..];
        for k in 0..6 {
            assert!((tail[k][0] - tail[k + 3][0]).abs() < 1e-12 && (tail[k][1] - tail[k + 3][1]).abs() < 1e-12);
        }
        assert!((tail[0][0] - tail[1][0]).abs() + (tail[0][1] - tail[1][1]).abs() > 0.1);
        assert!(orbit.iter().all(|p| p[0].abs() <= 2.0 && p[1].abs() <= 2.0));
        let winding: f64 = tail
            .windows(2)
            .map(|w| (w[0][0] * w[1][1] - w[0][1] * w[1][0]).signum())
            .sum();
        assert_eq!(winding.abs(), 8.0);

        let (traj, diag) = run_mogd(
            &problem,
            &Aggregator::RoundRobin,
            &[2.0, -1.0],
            0.25,
            3000,
            &DiagnosticThresholds::default(),
        )
        .unwrap();
        assert!(diag.cycling(), "{diag:?}");
        assert_eq!(diag.recurrence_period_estimate, Some(3.0));
        let last = traj.points.last().unwrap();
        let reference = orbit[3000];
        assert!((last[0] - reference[0]).abs() < 1e-12 && (last[1] - reference[1]).abs() < 1e-12);
    }

    #[test]
    fn min_norm_on_triple_converges_to_pareto_point() {
        let problem = GradientProblem::rotational_triple();
        let (_, diag) = run_mogd(
            &problem,
            &Aggregator::MinNorm,
            &[2.0, -1.0],
            0.1,
            2000,
            &DiagnosticThresholds::default(),
        )
        .unwrap();
        assert!(diag.converged(), "{diag:?}");
    }
}

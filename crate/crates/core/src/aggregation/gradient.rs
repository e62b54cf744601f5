use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};

/// Weight vectors may miss the simplex by this much.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Quadratic bowl `(θ−c)ᵀ H (θ−c)` with symmetric positive semidefinite `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub curvature: Vec<Vec<f64>>,
}

impl Quadratic {
    pub fn isotropic(center: Vec<f64>) -> Self {
        let n = center.len();
        let curvature = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Quadratic { center, curvature }
    }

    /// Diagonal curvature `scales` rotated by `angle` in the plane. Two dimensions only.
    pub fn rotated(center: [f64; 2], scales: [f64; 2], angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let h00 = scales[0] * c * c + scales[1] * s * s;
        let h11 = scales[0] * s * s + scales[1] * c * c;
        let h01 = (scales[0] - scales[1]) * s * c;
        Quadratic {
            center: center.to_vec(),
            curvature: vec![vec![h00, h01], vec![h01, h11]],
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let d: Vec<f64> = theta.iter().zip(&self.center).map(|(t, c)| t - c).collect();
        mat_vec(&self.curvature, &d).iter().zip(&d).map(|(a, b)| a * b).sum()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = theta.iter().zip(&self.center).map(|(t, c)| t - c).collect();
        mat_vec(&self.curvature, &d).into_iter().map(|v| 2.0 * v).collect()
    }
}

/// A set of objectives over a common parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientProblem {
    dimension: usize,
    objectives: Vec<Quadratic>,
}

impl GradientProblem {
    pub fn new(objectives: Vec<Quadratic>) -> Result<Self> {
        let dimension = objectives
            .first()
            .map(|q| q.center.len())
            .ok_or_else(|| CoordError::invalid("objectives", "at least one objective is required"))?;
        if dimension == 0 {
            return Err(CoordError::invalid("dimension", "must be positive"));
        }
        for q in &objectives {
            let square = q.curvature.len() == dimension && q.curvature.iter().all(|row| row.len() == dimension);
            if q.center.len() != dimension || !square {
                return Err(CoordError::invalid(
                    "objectives",
                    "all objectives must share one dimension",
                ));
            }
            if q.center
                .iter()
                .chain(q.curvature.iter().flatten())
                .any(|v| !v.is_finite())
            {
                return Err(CoordError::invalid("objectives", "coefficients must be finite"));
            }
        }
        Ok(GradientProblem { dimension, objectives })
    }

    /// `(x−1)²` and `(x+1)²` on the line.
    pub fn conflicting_pair() -> Self {
        GradientProblem::shifted_quadratics(&[vec![1.0], vec![-1.0]]).expect("static problem is valid")
    }

    pub fn shifted_quadratics(centers: &[Vec<f64>]) -> Result<Self> {
        GradientProblem::new(centers.iter().cloned().map(Quadratic::isotropic).collect())
    }

    /// Two anisotropic bowls whose long axes cross at right angles.
    pub fn rotated_pair() -> Self {
        GradientProblem::new(vec![
            Quadratic::rotated([1.0, 0.0], [1.0, 0.1], std::f64::consts::FRAC_PI_4),
            Quadratic::rotated([-1.0, 0.0], [1.0, 0.1], -std::f64::consts::FRAC_PI_4),
        ])
        .expect("static problem is valid")
    }

    /// Three isotropic bowls centred on an equilateral triangle around the
    /// origin. Visiting them in turn with a finite step carries the iterate
    /// round a closed orbit that encircles the Pareto set's centroid.
    pub fn rotational_triple() -> Self {
        let centers: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                let a = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        GradientProblem::shifted_quadratics(&centers).expect("static problem is valid")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn objectives(&self) -> &[Quadratic] {
        &self.objectives
    }

    pub fn losses(&self, theta: &[f64]) -> Vec<f64> {
        self.objectives.iter().map(|q| q.value(theta)).collect()
    }

    pub fn gradients(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        self.objectives.iter().map(|q| q.gradient(theta)).collect()
    }

    /// Largest eigenvalue of the Hessian of `Σ wᵢLᵢ`, by power iteration.
    pub fn curvature_bound(&self, weights: &[f64]) -> Result<f64> {
        check_simplex(weights, self.objectives.len())?;
        let n = self.dimension;
        let mut h = vec![vec![0.0; n]; n];
        for (q, w) in self.objectives.iter().zip(weights) {
            for (row, q_row) in h.iter_mut().zip(&q.curvature) {
                for (hij, qij) in row.iter_mut().zip(q_row) {
                    *hij += 2.0 * w * qij;
                }
            }
        }
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let mut lambda = 0.0;
        for _ in 0..1000 {
            let hv = mat_vec(&h, &v);
            let norm = norm(&hv);
            if norm == 0.0 {
                return Ok(0.0);
            }
            let next = hv.iter().map(|x| x / norm).collect::<Vec<_>>();
            let converged = (norm - lambda).abs() <= 1e-14 * norm;
            lambda = norm;
            v = next;
            if converged {
                break;
            }
        }
        Ok(lambda)
    }

    /// Fixed-weight descent on the summed quadratic is stable for step sizes below `2/L`.
    pub fn stability_bound(&self, weights: &[f64]) -> Result<f64> {
        Ok(2.0 / self.curvature_bound(weights)?)
    }
}

/// Pairs `(i, j)`, `i < j`, whose gradients have a negative inner product at `point`.
pub fn conflict_detect(problem: &GradientProblem, point: &[f64]) -> Vec<(usize, usize)> {
    let g = problem.gradients(point);
    let mut out = Vec::new();
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if dot(&g[i], &g[j]) < 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

fn check_simplex(weights: &[f64], len: usize) -> Result<()> {
    if weights.len() != len {
        return Err(CoordError::ModelLengthMismatch {
            expected: len,
            got: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= -SIMPLEX_TOL)) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(CoordError::invalid("weights", "must be nonnegative and sum to 1"));
    }
    Ok(())
}

/// `Σ αᵢ gᵢ` for simplex weights `α`.
pub fn aggregate_gradients(gradients: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    check_simplex(weights, gradients.len())?;
    let n = gradients.first().map_or(0, Vec::len);
    if let Some(g) = gradients.iter().find(|g| g.len() != n) {
        return Err(CoordError::ModelLengthMismatch {
            expected: n,
            got: g.len(),
        });
    }
    let mut out = vec![0.0; n];
    for (g, w) in gradients.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(g) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// Simplex weights minimizing `‖Σ αᵢ gᵢ‖`, by projected gradient descent on
/// the Gram quadratic.
pub fn min_norm_weights(gradients: &[Vec<f64>]) -> Vec<f64> {
    let d = gradients.len();
    if d <= 1 {
        return vec![1.0; d];
    }
    let gram: Vec<Vec<f64>> = gradients
        .iter()
        .map(|a| gradients.iter().map(|b| dot(a, b)).collect())
        .collect();
    let trace: f64 = (0..d).map(|i| gram[i][i]).sum();
    let mut alpha = vec![1.0 / d as f64; d];
    if trace == 0.0 {
        return alpha;
    }
    let step = 1.0 / (2.0 * trace);
    for _ in 0..200_000 {
        let grad = mat_vec(&gram, &alpha);
        let next = project_simplex(
            &alpha
                .iter()
                .zip(&grad)
                .map(|(a, g)| a - step * 2.0 * g)
                .collect::<Vec<_>>(),
        );
        let moved = alpha.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        alpha = next;
        if moved < 1e-15 {
            break;
        }
    }
    alpha
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// How per-objective gradients are combined at each step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Aggregator {
    Fixed {
        weights: Vec<f64>,
    },
    MinNorm,
    /// Step `k` follows objective `k mod d` alone.
    RoundRobin,
}

impl Aggregator {
    pub fn equal(d: usize) -> Self {
        Aggregator::Fixed {
            weights: vec![1.0 / d as f64; d],
        }
    }

    pub fn weights(&self, step: usize, gradients: &[Vec<f64>]) -> Vec<f64> {
        match self {
            Aggregator::Fixed { weights } => weights.clone(),
            Aggregator::MinNorm => min_norm_weights(gradients),
            Aggregator::RoundRobin => {
                let mut w = vec![0.0; gradients.len()];
                w[step % gradients.len()] = 1.0;
                w
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticThresholds {
    /// Convergence: largest step over the trailing window stays below this.
    pub tol_conv: f64,
    pub window: usize,
    /// Recurrence: a later point this close to an earlier one.
    pub tol_rec: f64,
    /// Recurrence only counts beyond this index gap.
    pub min_gap: usize,
    /// The iterate must stay within this multiple of the start box.
    pub box_factor: f64,
}

impl Default for DiagnosticThresholds {
    fn default() -> Self {
        DiagnosticThresholds {
            tol_conv: 1e-8,
            window: 100,
            tol_rec: 1e-3,
            min_gap: 10,
            box_factor: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryStatus {
    Converged,
    Cycling,
    Diverged,
    /// Bounded, still moving, no recurrence found.
    Wandering,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDiagnostics {
    pub status: TrajectoryStatus,
    /// Largest single-step displacement over the trailing window.
    pub displacement_window: f64,
    /// Smallest index gap at which the final point recurs.
    pub recurrence_period_estimate: Option<f64>,
}

impl TrajectoryDiagnostics {
    pub fn converged(&self) -> bool {
        self.status == TrajectoryStatus::Converged
    }

    pub fn cycling(&self) -> bool {
        self.status == TrajectoryStatus::Cycling
    }

    pub fn diverged(&self) -> bool {
        self.status == TrajectoryStatus::Diverged
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `points[k]` is θ after `k` steps.
    pub points: Vec<Vec<f64>>,
    pub losses: Vec<Vec<f64>>,
    /// Weights used for the step leaving `points[k]`.
    pub weights: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Writes `step,theta_*,loss_*,weight_*` rows. The final point has empty weights.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let n = self.points.first().map_or(0, Vec::len);
        let d = self.losses.first().map_or(0, Vec::len);
        let mut header = vec!["step".to_string()];
        header.extend((0..n).map(|i| format!("theta_{i}")));
        header.extend((0..d).map(|i| format!("loss_{i}")));
        header.extend((0..d).map(|i| format!("weight_{i}")));
        wtr.write_record(&header)?;
        for (k, (p, l)) in self.points.iter().zip(&self.losses).enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(p.iter().chain(l).map(f64::to_string));
            match self.weights.get(k) {
                Some(w) => row.extend(w.iter().map(f64::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), d)),
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Gradient descent `θ ← θ − η Σ αᵢ∇Lᵢ` with the chosen aggregator.
/// Stops early if the iterate leaves the box.
pub fn run_mogd(
    problem: &GradientProblem,
    aggregator: &Aggregator,
    start: &[f64],
    step_size: f64,
    steps: usize,
    thresholds: &DiagnosticThresholds,
) -> Result<(Trajectory, TrajectoryDiagnostics)> {
    if !(step_size > 0.0) || !step_size.is_finite() {
        return Err(CoordError::invalid("step_size", "must be positive"));
    }
    if start.len() != problem.dimension {
        return Err(CoordError::ModelLengthMismatch {
            expected: problem.dimension,
            got: start.len(),
        });
    }
    if let Aggregator::Fixed { weights } = aggregator {
        check_simplex(weights, problem.objectives.len())?;
    }
    let bound = thresholds.box_factor * start.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut theta = start.to_vec();
    let mut traj = Trajectory {
        points: vec![theta.clone()],
        losses: vec![problem.losses(&theta)],
        weights: Vec::with_capacity(steps),
    };
    let mut diverged = false;
    for k in 0..steps {
        let grads = problem.gradients(&theta);
        let w = aggregator.weights(k, &grads);
        let dir = aggregate_gradients(&grads, &w)?;
        for (t, g) in theta.iter_mut().zip(&dir) {
            *t -= step_size * g;
        }
        traj.weights.push(w);
        traj.points.push(theta.clone());
        traj.losses.push(problem.losses(&theta));
        if theta.iter().any(|x| !x.is_finite() || x.abs() > bound) {
            diverged = true;
            break;
        }
    }
    let diag = diagnose(&traj.points, diverged, thresholds);
    Ok((traj, diag))
}

/// Classifies a trajectory as converged, cycling, diverged or wandering.
pub fn diagnose(points: &[Vec<f64>], diverged: bool, t: &DiagnosticThresholds) -> TrajectoryDiagnostics {
    let last = points.len() - 1;
    let from = last.saturating_sub(t.window);
    let displacement_window = (from..last)
        .map(|k| distance(&points[k], &points[k + 1]))
        .fold(0.0, f64::max);
    if diverged {
        return TrajectoryDiagnostics {
            status: TrajectoryStatus::Diverged,
            displacement_window,
            recurrence_period_estimate: None,
        };
    }
    if last >= t.window && displacement_window < t.tol_conv {
        return TrajectoryDiagnostics {
            status: TrajectoryStatus::Converged,
            displacement_window,
            recurrence_period_estimate: None,
        };
    }
    let recurs = (t.min_gap + 1..=last).any(|gap| distance(&points[last], &points[last - gap]) < t.tol_rec);
    let period = recurs
        .then(|| (1..=last).find(|&gap| distance(&points[last], &points[last - gap]) < t.tol_rec))
        .flatten();
    TrajectoryDiagnostics {
        status: if recurs {
            TrajectoryStatus::Cycling
        } else {
            TrajectoryStatus::Wandering
        },
        displacement_window,
        recurrence_period_estimate: period.map(|p| p as f64),
    }
}

/// Empirical Lipschitz constant of a gradient aggregator: the largest
/// `‖f(G+Δ) − f(G)‖ / ‖Δ‖` over random standard-normal gradient sets `G` and
/// perturbations `Δ` of Frobenius norm `scale`.
pub fn perturbation_lipschitz<F, R>(
    f: F,
    objectives: usize,
    dimension: usize,
    samples: usize,
    scale: f64,
    rng: &mut R,
) -> f64
where
    F: Fn(&[Vec<f64>]) -> Vec<f64>,
    R: Rng + ?Sized,
{
    let sample = |rng: &mut R| -> Vec<Vec<f64>> {
        (0..objectives)
            .map(|_| (0..dimension).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    };
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let g = sample(rng);
        let delta = sample(rng);
        let size = delta.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        if size == 0.0 {
            continue;
        }
        let moved: Vec<Vec<f64>> = g
            .iter()
            .zip(&delta)
            .map(|(gi, di)| gi.iter().zip(di).map(|(a, b)| a + b * scale / size).collect())
            .collect();
        worst = worst.max(distance(&f(&moved), &f(&g)) / scale);
    }
    worst
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

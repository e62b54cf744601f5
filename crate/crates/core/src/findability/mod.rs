//! Findability versus accuracy.
//!
//! A solution's utility is `Ω(A)·∏Fᵢ`: accuracy weighted by how likely every
//! required agent is to find and accept it. The marginal utility of any one
//! agent's findability does not depend on that agent's own `Fᵢ`, while the
//! marginal utility of accuracy vanishes wherever `Ω′` does, so the ratio of
//! the two pressures diverges at accuracy extrema.

mod lattice;

pub use lattice::{cascade, cascade_many, Acceptance, CascadeJob, CascadeResult, Lattice, SolutionKind};

use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};

/// Step for central finite differences on tabulated Ω.
pub const FD_STEP: f64 = 1e-6;

/// A candidate solution: accuracy `A` and per-agent findability `F₁..F_M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    accuracy: f64,
    findability: Vec<f64>,
}

impl Solution {
    pub fn new(accuracy: f64, findability: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(CoordError::invalid(
                "accuracy",
                format!("must lie in [0, 1], got {accuracy}"),
            ));
        }
        if let Some(f) = findability.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(CoordError::invalid("findability", format!("{f} outside [0, 1]")));
        }
        Ok(Solution { accuracy, findability })
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn findability(&self) -> &[f64] {
        &self.findability
    }

    /// Number of agents whose acceptance is required.
    pub fn agents(&self) -> usize {
        self.findability.len()
    }

    pub fn with_findability(&self, i: usize, f: f64) -> Result<Self> {
        self.check_index(i)?;
        let mut fs = self.findability.clone();
        fs[i] = f;
        Solution::new(self.accuracy, fs)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.findability.len() {
            return Err(CoordError::IndexOutOfRange {
                index: i,
                len: self.findability.len(),
            });
        }
        Ok(())
    }

    fn product_except(&self, skip: Option<usize>) -> f64 {
        self.findability
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, f)| f)
            .product()
    }
}

/// Shape of the accuracy weighting Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum OmegaFamily {
    /// `A^γ`.
    Power { gamma: f64 },
    /// `A(2 − A)`, flat at `A = 1`.
    Concave,
    /// Piecewise-linear through `(xs[k], ys[k])`, xs increasing over `[0, 1]`.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

/// Ω with an optional agent-count factor `M^m_exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSpec {
    pub family: OmegaFamily,
    #[serde(default)]
    pub m_exponent: f64,
}

impl OmegaSpec {
    pub fn identity() -> Self {
        Self::power(1.0)
    }

    pub fn power(gamma: f64) -> Self {
        OmegaSpec {
            family: OmegaFamily::Power { gamma },
            m_exponent: 0.0,
        }
    }

    pub fn concave() -> Self {
        OmegaSpec {
            family: OmegaFamily::Concave,
            m_exponent: 0.0,
        }
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let spec = OmegaSpec {
            family: OmegaFamily::Tabulated { xs, ys },
            m_exponent: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            OmegaFamily::Power { gamma } => {
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(CoordError::invalid("gamma", format!("must be positive, got {gamma}")));
                }
            }
            OmegaFamily::Concave => {}
            OmegaFamily::Tabulated { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(CoordError::invalid("omega table", "needs at least two (x, y) points"));
                }
                if xs[0] != 0.0 || xs[xs.len() - 1] != 1.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CoordError::invalid("omega table", "xs must increase from 0 to 1"));
                }
                if ys.iter().any(|y| *y < 0.0) || ys.windows(2).any(|w| w[1] < w[0]) {
                    return Err(CoordError::invalid(
                        "omega table",
                        "ys must be nonnegative and nondecreasing",
                    ));
                }
            }
        }
        Ok(())
    }

    fn agent_factor(&self, m: usize) -> f64 {
        if self.m_exponent == 0.0 {
            1.0
        } else {
            (m as f64).powf(self.m_exponent)
        }
    }

    fn base_value(&self, a: f64) -> f64 {
        match &self.family {
            OmegaFamily::Power { gamma } => a.powf(*gamma),
            OmegaFamily::Concave => a * (2.0 - a),
            OmegaFamily::Tabulated { xs, ys } => interpolate(xs, ys, a),
        }
    }

    fn base_derivative(&self, a: f64) -> f64 {
        match &self.family {
            OmegaFamily::Power { gamma } => gamma * a.powf(gamma - 1.0),
            OmegaFamily::Concave => 2.0 - 2.0 * a,
            OmegaFamily::Tabulated { .. } => {
                let lo = (a - FD_STEP).max(0.0);
                let hi = (a + FD_STEP).min(1.0);
                (self.base_value(hi) - self.base_value(lo)) / (hi - lo)
            }
        }
    }

    /// Ω(A) for a solution needing `m` agents.
    pub fn value(&self, a: f64, m: usize) -> f64 {
        self.base_value(a) * self.agent_factor(m)
    }

    /// Ω′(A).
    pub fn derivative(&self, a: f64, m: usize) -> f64 {
        self.base_derivative(a) * self.agent_factor(m)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], a: f64) -> f64 {
    let a = a.clamp(0.0, 1.0);
    let k = xs.partition_point(|x| *x <= a).clamp(1, xs.len() - 1);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    y0 + (y1 - y0) * (a - x0) / (x1 - x0)
}

/// `P = ∏Fᵢ`.
pub fn coordination_probability(sol: &Solution) -> f64 {
    sol.product_except(None)
}

/// `U = Ω(A)·∏Fᵢ`.
pub fn utility(sol: &Solution, omega: &OmegaSpec) -> f64 {
    omega.value(sol.accuracy, sol.agents()) * coordination_probability(sol)
}

/// `∂U/∂Fᵢ = Ω(A)·∏_{j≠i} Fⱼ`.
pub fn marginal_findability(sol: &Solution, omega: &OmegaSpec, i: usize) -> Result<f64> {
    sol.check_index(i)?;
    Ok(omega.value(sol.accuracy, sol.agents()) * sol.product_except(Some(i)))
}

/// Central finite-difference slope of U in `Fᵢ`, for cross-checking.
pub fn marginal_findability_fd(sol: &Solution, omega: &OmegaSpec, i: usize, h: f64) -> Result<f64> {
    sol.check_index(i)?;
    let f = sol.findability[i];
    let lo = (f - h).max(0.0);
    let hi = (f + h).min(1.0);
    let u_lo = utility(&sol.with_findability(i, lo)?, omega);
    let u_hi = utility(&sol.with_findability(i, hi)?, omega);
    Ok((u_hi - u_lo) / (hi - lo))
}

/// `∂U/∂A = Ω′(A)·∏Fⱼ`.
pub fn marginal_accuracy(sol: &Solution, omega: &OmegaSpec) -> f64 {
    omega.derivative(sol.accuracy, sol.agents()) * coordination_probability(sol)
}

/// `Ω(A) / (Fᵢ·Ω′(A))`; `f64::INFINITY` where `Ω′(A) = 0` or `Fᵢ = 0`.
pub fn pressure_ratio(sol: &Solution, omega: &OmegaSpec, i: usize) -> Result<f64> {
    sol.check_index(i)?;
    let m = sol.agents();
    let denom = sol.findability[i] * omega.derivative(sol.accuracy, m);
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(omega.value(sol.accuracy, m) / denom)
}

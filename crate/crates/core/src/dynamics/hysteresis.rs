use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::population::{critical_temperature, order_parameter, LogBase};

/// Agents that each hold either their full model (`K̄` bits) or a shared
/// focal simplification (`K₀` bits). Agent `i` prefers the focal point above
/// its own switching temperature `Tᵢ = T_c·exp(σ·zᵢ)` and only changes state
/// once `|ln(T/Tᵢ)|` exceeds the barrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisScenario {
    pub n_agents: usize,
    pub k_bar: f64,
    pub k0: f64,
    /// Switching cost as a log-temperature margin.
    pub barrier: f64,
    /// Log-normal spread σ of the per-agent switching temperatures.
    pub threshold_spread: f64,
    pub seed: u64,
    #[serde(default)]
    pub log_base: LogBase,
}

impl Default for HysteresisScenario {
    fn default() -> Self {
        HysteresisScenario {
            n_agents: 50,
            k_bar: 20.0,
            k0: 10.0,
            barrier: 1.0,
            threshold_spread: 0.1,
            seed: 7,
            log_base: LogBase::Natural,
        }
    }
}

/// Linear ramp from `t_min` to `t_max` in `steps` points, then back down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureRamp {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl Default for TemperatureRamp {
    fn default() -> Self {
        TemperatureRamp {
            t_min: 0.01,
            t_max: 1.0,
            steps: 200,
        }
    }
}

impl TemperatureRamp {
    pub fn temperatures(&self) -> Vec<f64> {
        let span = self.t_max - self.t_min;
        (0..self.steps)
            .map(|i| self.t_min + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisResult {
    pub t_c: f64,
    /// `ΔT = √T_c`.
    pub width: f64,
    pub temperatures: Vec<f64>,
    pub psi_up: Vec<f64>,
    /// Indexed like `temperatures`, not in sweep order.
    pub psi_down: Vec<f64>,
    /// `∫(ψ_down − ψ_up) dT`, the area enclosed by the loop.
    pub loop_area: f64,
    /// Temperature where the heating branch crosses half the full ψ jump.
    pub midpoint_up: Option<f64>,
    pub midpoint_down: Option<f64>,
    /// Temperatures at which any agent switched, in sweep order.
    pub switch_temperatures: Vec<f64>,
}

/// Two-state single-agent caricature: switches up at `T_c·e^h` and down at `T_c·e^(−h)`.
pub fn two_state_midpoints(t_c: f64, barrier: f64) -> (f64, f64) {
    (t_c * barrier.exp(), t_c * (-barrier).exp())
}

/// Heats along the ramp from the all-detailed state, then cools back,
/// recording ψ = (K̄ − K_rel)/K̄ with `K_rel` the population's mean held
/// complexity.
pub fn hysteresis_sweep(ramp: &TemperatureRamp, scenario: &HysteresisScenario) -> Result<HysteresisResult> {
    if !(ramp.t_min > 0.0 && ramp.t_max > ramp.t_min && ramp.t_max.is_finite()) || ramp.steps < 2 {
        return Err(CoordError::invalid(
            "ramp",
            "need 0 < t_min < t_max and at least 2 steps",
        ));
    }
    if scenario.n_agents < 2 {
        return Err(CoordError::TooFewAgents {
            needed: 2,
            got: scenario.n_agents,
        });
    }
    if !(scenario.barrier >= 0.0) || !(scenario.threshold_spread >= 0.0) {
        return Err(CoordError::invalid("barrier", "barrier and spread must be nonnegative"));
    }
    if !(scenario.k0 <= scenario.k_bar) {
        return Err(CoordError::invalid("k0", "must not exceed k_bar"));
    }
    let cp = critical_temperature(scenario.n_agents as f64, scenario.k_bar, scenario.k0, scenario.log_base)?;
    if !(ramp.t_min < cp.t_c && cp.t_c < ramp.t_max) {
        return Err(CoordError::invalid(
            "ramp",
            format!("[{}, {}] does not straddle T_c = {}", ramp.t_min, ramp.t_max, cp.t_c),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let thresholds: Vec<f64> = (0..scenario.n_agents)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            cp.t_c * (scenario.threshold_spread * z).exp()
        })
        .collect();

    let temps = ramp.temperatures();
    let mut focal = vec![false; scenario.n_agents];
    let mut switches = Vec::new();
    let psi_at = |t: f64, focal: &mut [bool], switches: &mut Vec<f64>| -> Result<f64> {
        for (state, ti) in focal.iter_mut().zip(&thresholds) {
            let drive = (t / ti).ln();
            let next = if *state {
                drive >= -scenario.barrier
            } else {
                drive > scenario.barrier
            };
            if next != *state {
                *state = next;
                switches.push(t);
            }
        }
        let x = focal.iter().filter(|f| **f).count() as f64 / focal.len() as f64;
        let k_rel = (1.0 - x) * scenario.k_bar + x * scenario.k0;
        order_parameter(scenario.k_bar, k_rel)
    };

    let psi_up = temps
        .iter()
        .map(|&t| psi_at(t, &mut focal, &mut switches))
        .collect::<Result<Vec<_>>>()?;
    let mut psi_down = temps
        .iter()
        .rev()
        .map(|&t| psi_at(t, &mut focal, &mut switches))
        .collect::<Result<Vec<_>>>()?;
    psi_down.reverse();

    let loop_area = temps
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let gap = |j: usize| psi_down[j] - psi_up[j];
            0.5 * (gap(i) + gap(i + 1)) * (w[1] - w[0])
        })
        .sum::<f64>();

    let half = 0.5 * (scenario.k_bar - scenario.k0) / scenario.k_bar;
    let midpoint_up = crossing(&temps, &psi_up, half);
    let midpoint_down = crossing(&temps, &psi_down, half);
    Ok(HysteresisResult {
        t_c: cp.t_c,
        width: cp.width,
        temperatures: temps,
        psi_up,
        psi_down,
        loop_area,
        midpoint_up,
        midpoint_down,
        switch_temperatures: switches,
    })
}

/// First temperature, scanning upward, where the branch reaches `level`,
/// linearly interpolated.
fn crossing(temps: &[f64], psi: &[f64], level: f64) -> Option<f64> {
    if level <= 0.0 {
        return None;
    }
    (1..temps.len()).find_map(|i| {
        let (a, b) = (psi[i - 1], psi[i]);
        (a < level && b >= level).then(|| temps[i - 1] + (level - a) / (b - a) * (temps[i] - temps[i - 1]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_loop_opens() {
        let r = hysteresis_sweep(&TemperatureRamp::default(), &HysteresisScenario::default()).unwrap();
        assert!(r.loop_area > 0.0);
        let (up, down) = (r.midpoint_up.unwrap(), r.midpoint_down.unwrap());
        assert!(up - down > r.width / 2.0, "{up} {down}");
        let (oracle_up, oracle_down) = two_state_midpoints(r.t_c, 1.0);
        assert!((up / oracle_up - 1.0).abs() < 0.1);
        assert!((down / oracle_down - 1.0).abs() < 0.1);
        let near = r
            .switch_temperatures
            .iter()
            .filter(|t| (**t - r.t_c).abs() < 2.0 * r.width)
            .count();
        assert_eq!(near, r.switch_temperatures.len());
        assert_eq!(r.switch_temperatures.len(), 100);
    }

    #[test]
    fn zero_barrier_closes_loop() {
        let s = HysteresisScenario {
            barrier: 0.0,
            ..HysteresisScenario::default()
        };
        let r = hysteresis_sweep(&TemperatureRamp::default(), &s).unwrap();
        assert_eq!(r.loop_area, 0.0);
        assert_eq!(r.psi_up, r.psi_down);
    }

    #[test]
    fn degenerate_ramps() {
        let s = HysteresisScenario::default();
        for ramp in [
            TemperatureRamp {
                t_min: 0.5,
                t_max: 0.2,
                steps: 10,
            },
            TemperatureRamp {
                t_min: 0.0,
                t_max: 1.0,
                steps: 10,
            },
            TemperatureRamp {
                t_min: 0.01,
                t_max: 1.0,
                steps: 1,
            },
            TemperatureRamp {
                t_min: 0.2,
                t_max: 1.0,
                steps: 10,
            },
        ] {
            assert!(hysteresis_sweep(&ramp, &s).is_err(), "{ramp:?}");
        }
    }
}

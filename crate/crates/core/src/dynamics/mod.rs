//! Reflexive coordination dynamics.
//!
//! The state `{N, d, T, E}` evolves under forward Euler: agents drop out while
//! the protocol outgrows `L_critical`, objectives appear and resolve through
//! pluggable drivers, temperature relaxes at rate `λ` and is heated by changes
//! in the agents' model spread, and failures build environmental pressure that
//! shrinks the capacity available for coordination. Each step picks the focal
//! regime the current protocol length affords.

mod flow;
mod focal;
mod hysteresis;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{check_overlap, check_precision, ConflictTerm};
use crate::error::{CoordError, Result};
use crate::population::{coordination_temperature, order_parameter, AgentModel, Population};

pub use flow::{rg_flow, rg_flow_exact};
pub use focal::{
    focal_complexity_from_length, focal_matrix, focal_point_complexity, select_focal_point, Escalation,
    FocalCoefficients, FocalConfig, FocalKind, FocalPoint, LpEstimator,
};
pub use hysteresis::{hysteresis_sweep, two_state_midpoints, HysteresisResult, HysteresisScenario, TemperatureRamp};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemState {
    #[serde(default)]
    pub time: f64,
    /// Agent count; whole numbers only, since dropouts are discrete.
    pub n: f64,
    /// Objective count, real-valued between integer reports.
    pub d: f64,
    pub t_co: f64,
    #[serde(default)]
    pub env: f64,
}

impl SystemState {
    pub fn new(n: u64, d: f64, t_co: f64) -> Self {
        SystemState {
            time: 0.0,
            n: n as f64,
            d,
            t_co,
            env: 0.0,
        }
    }

    pub fn agents(&self) -> u64 {
        self.n.max(0.0).round() as u64
    }

    pub fn objectives(&self) -> u64 {
        self.d.round().max(1.0) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 0.0 && self.n.fract() == 0.0) {
            return Err(CoordError::invalid("n", "must be a nonnegative whole number"));
        }
        if !(self.d >= 1.0 && self.d.is_finite()) {
            return Err(CoordError::invalid("d", "must be at least 1"));
        }
        if !(self.t_co >= 0.0 && self.t_co.is_finite()) {
            return Err(CoordError::invalid("t_co", "must be nonnegative"));
        }
        if !(self.env >= 0.0 && self.env.is_finite()) {
            return Err(CoordError::invalid("env", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Rate at which conflicts surface or get resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Driver {
    Constant {
        rate: f64,
    },
    /// Event counts per step drawn from `Poisson(rate·dt)`.
    Poisson {
        rate: f64,
    },
    /// `gain·T`.
    TcoProportional {
        gain: f64,
    },
}

impl Driver {
    pub fn rate<R: Rng + ?Sized>(&self, state: &SystemState, dt: f64, rng: &mut R) -> Result<f64> {
        match *self {
            Driver::Constant { rate } => Ok(rate),
            Driver::TcoProportional { gain } => Ok(gain * state.t_co),
            Driver::Poisson { rate } => {
                if rate * dt <= 0.0 {
                    return Ok(0.0);
                }
                let dist = Poisson::new(rate * dt).map_err(|e| CoordError::invalid("rate", e.to_string()))?;
                Ok(dist.sample(rng) / dt)
            }
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let v = match *self {
            Driver::Constant { rate } | Driver::Poisson { rate } => rate,
            Driver::TcoProportional { gain } => gain,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CoordError::invalid(name, "driver rates must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drivers {
    pub conflicts: Driver,
    pub resolutions: Driver,
}

impl Default for Drivers {
    fn default() -> Self {
        Drivers {
            conflicts: Driver::TcoProportional { gain: 1.0 },
            resolutions: Driver::Constant { rate: 1.0 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Dropout rate γ_N while the protocol exceeds `L_critical`.
    pub gamma_n: f64,
    /// Objective emergence rate α.
    pub alpha: f64,
    /// Objective resolution rate β.
    pub beta: f64,
    /// Cooling rate λ.
    pub lambda: f64,
    /// Working memory per agent, bits.
    pub capacity_b: f64,
    /// Defaults to `capacity_b · N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_critical: Option<f64>,
    pub dt: f64,
    pub seed: u64,
    pub k_bar: f64,
    /// Focal-point model complexity, used to price cooling work.
    pub k0: f64,
    /// Reference complexity for ψ; defaults to `capacity_b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_absolute: Option<f64>,
    pub epsilon: f64,
    pub rho: f64,
    /// Environmental pressure gained per unit time of failed coordination.
    pub env_gain: f64,
    pub focal: FocalConfig,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            gamma_n: 1.0,
            alpha: 0.0,
            beta: 0.0,
            lambda: 0.5,
            capacity_b: 100.0,
            l_critical: None,
            dt: 0.01,
            seed: 0,
            k_bar: 10.0,
            k0: 5.0,
            k_absolute: None,
            epsilon: 0.01,
            rho: 0.0,
            env_gain: 0.5,
            focal: FocalConfig::default(),
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_n", self.gamma_n),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("env_gain", self.env_gain),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CoordError::invalid(name, format!("must be nonnegative, got {v}")));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CoordError::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.gamma_n * self.dt > 1.0 {
            return Err(CoordError::invalid("dt", "gamma_n·dt must not exceed 1"));
        }
        if self.lambda * self.dt >= 1.0 {
            return Err(CoordError::invalid("dt", "lambda·dt must be below 1"));
        }
        if !(self.capacity_b > 0.0) {
            return Err(CoordError::invalid("capacity_b", "must be positive"));
        }
        if let Some(l) = self.l_critical {
            if !(l >= 0.0) {
                return Err(CoordError::invalid("l_critical", "must be nonnegative"));
            }
        }
        if !(self.k_bar > 0.0 && self.k0 > 0.0 && self.k0 <= self.k_bar) {
            return Err(CoordError::invalid("k0", "need 0 < k0 <= k_bar"));
        }
        if let Some(k) = self.k_absolute {
            if !(k > 0.0) {
                return Err(CoordError::invalid("k_absolute", "must be positive"));
            }
        }
        check_precision(self.epsilon)?;
        check_overlap(self.rho)?;
        self.focal.validate()
    }

    pub fn critical_length(&self, n: u64) -> f64 {
        self.l_critical.unwrap_or(self.capacity_b * n as f64)
    }

    /// Coordination capacity after environmental pressure: `L_capacity/(1 + E)`.
    pub fn effective_capacity(&self, env: f64) -> f64 {
        self.focal.l_capacity / (1.0 + env)
    }

    pub fn protocol_length(&self, state: &SystemState) -> Result<f64> {
        self.focal.estimator.evaluate(
            state.agents(),
            state.objectives(),
            state.t_co,
            self.k_bar,
            self.rho,
            self.epsilon,
        )
    }

    /// Regime and its complexity for the current state.
    pub fn focal_point(&self, state: &SystemState, l_p: f64) -> Result<FocalPoint> {
        let cap = self.effective_capacity(state.env);
        Ok(FocalPoint {
            kind: select_focal_point(l_p, cap, &self.focal.escalation),
            complexity: focal_complexity_from_length(l_p, self.capacity_b, cap)?,
        })
    }

    /// ψ with the focal complexity as the coordinated model size.
    pub fn psi(&self, focal: &FocalPoint) -> Result<f64> {
        let k_abs = self.k_absolute.unwrap_or(self.capacity_b);
        order_parameter(k_abs, focal.complexity.min(k_abs))
    }
}

/// What happened during one Euler step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub state: SystemState,
    pub l_p: f64,
    pub failed: bool,
    pub dropped: bool,
}

/// One Euler step. `heating` is the change in the population's model
/// temperature since the previous step; a static population contributes 0.
pub fn step_detailed<R: Rng + ?Sized>(
    state: &SystemState,
    heating: f64,
    config: &DynamicsConfig,
    drivers: &Drivers,
    rng: &mut R,
) -> Result<StepReport> {
    let dt = config.dt;
    let l_p = config.protocol_length(state)?;
    let failed = l_p > config.critical_length(state.agents());
    let conflicts = drivers.conflicts.rate(state, dt, rng)?;
    let resolutions = drivers.resolutions.rate(state, dt, rng)?;
    let dropped = failed && state.n > 0.0 && rng.random::<f64>() < config.gamma_n * dt;

    let mut next = *state;
    next.time = state.time + dt;
    if dropped {
        next.n -= 1.0;
    }
    next.d = (state.d + dt * (config.alpha * conflicts - config.beta * resolutions)).max(1.0);
    next.t_co = (state.t_co + heating - dt * config.lambda * state.t_co).max(0.0);
    if failed {
        next.env += dt * config.env_gain;
    }
    Ok(StepReport {
        state: next,
        l_p,
        failed,
        dropped,
    })
}

/// Advances `state` by one step against a population that has not changed
/// since the previous step.
pub fn step<R: Rng + ?Sized>(
    state: &SystemState,
    config: &DynamicsConfig,
    drivers: &Drivers,
    rng: &mut R,
) -> Result<SystemState> {
    config.validate()?;
    state.validate()?;
    Ok(step_detailed(state, 0.0, config, drivers, rng)?.state)
}

/// How agent models are generated: `model_len` components scattered by
/// `spread` around 0.5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub model_len: usize,
    pub spread: f64,
}

impl PopulationSpec {
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Population> {
        if self.model_len == 0 {
            return Err(CoordError::invalid("model_len", "must be positive"));
        }
        let center = AgentModel::new(vec![0.5; self.model_len])?;
        Population::scattered(n.max(1), &center, self.spread, rng)
    }
}

/// Instantaneous change applied once simulation time reaches `time`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_co: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Redraw the agents' models with this spread.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub initial: SystemState,
    pub config: DynamicsConfig,
    #[serde(default)]
    pub drivers: Drivers,
    pub population: PopulationSpec,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    /// Record every `record_every`-th step.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl Scenario {
    /// Six diners splitting a bill evenly until, at `t = 1`, one objects and
    /// the table suddenly cares about four things at once.
    pub fn bistromathics() -> Self {
        Scenario {
            initial: SystemState::new(6, 1.0, 0.0),
            config: DynamicsConfig {
                seed: 42,
                beta: 0.5,
                focal: FocalConfig {
                    estimator: LpEstimator::bill_splitting(ConflictTerm::Full, true),
                    ..FocalConfig::default()
                },
                ..DynamicsConfig::default()
            },
            drivers: Drivers {
                conflicts: Driver::Constant { rate: 0.0 },
                resolutions: Driver::Constant { rate: 1.0 },
            },
            population: PopulationSpec {
                model_len: 4,
                spread: 0.0,
            },
            perturbations: vec![Perturbation {
                time: 1.0,
                d: Some(4.0),
                t_co: Some(1.0),
                spread: Some(0.2),
                n: None,
            }],
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.initial.validate()?;
        self.drivers.conflicts.validate("conflicts")?;
        self.drivers.resolutions.validate("resolutions")?;
        if self.record_every == 0 {
            return Err(CoordError::invalid("record_every", "must be positive"));
        }
        for p in &self.perturbations {
            if !(p.time >= 0.0 && p.time.is_finite()) {
                return Err(CoordError::invalid("perturbations", "times must be nonnegative"));
            }
            if p.d.is_some_and(|d| !(d >= 1.0)) || p.t_co.is_some_and(|t| !(t >= 0.0)) {
                return Err(CoordError::invalid("perturbations", "need d >= 1 and t_co >= 0"));
            }
            if p.spread.is_some_and(|s| !(s >= 0.0)) {
                return Err(CoordError::invalid("perturbations", "spread must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Perturbation,
    Dropout,
    FocalTransition,
    ThresholdCrossing,
    LpChange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub event_type: EventType,
    pub payload: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub n: u64,
    pub d: u64,
    pub t_co: f64,
    pub env: f64,
    pub l_p_bits: f64,
    pub focal_kind: FocalKind,
    pub psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub rows: Vec<TrajectoryRow>,
    pub events: Vec<Event>,
    pub final_state: SystemState,
    /// Bits of work charged for every temperature decrease along the run.
    pub cumulative_work: f64,
}

impl SimulationOutput {
    /// Writes `time,n,d,t_co,env,l_p_bits,focal_kind,psi` rows.
    pub fn write_trajectory_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// One JSON object per line: `time`, `event_type`, `payload`.
    pub fn write_events_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut writer, e).map_err(|e| CoordError::Io(e.to_string()))?;
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Runs a scenario to `horizon`. The same scenario always yields the same output.
pub fn simulate(scenario: &Scenario, horizon: f64) -> Result<SimulationOutput> {
    scenario.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(CoordError::invalid("horizon", "must be nonnegative"));
    }
    let config = &scenario.config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = scenario.initial;
    let mut pop = scenario.population.generate(state.agents() as usize, &mut rng)?;
    let mut pop_temp = coordination_temperature(&pop);
    let mut pending: Vec<&Perturbation> = scenario.perturbations.iter().collect();
    pending.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut pending = pending.into_iter().peekable();

    let steps = (horizon / config.dt).round() as u64;
    let mut rows = Vec::new();
    let mut events = Vec::new();
    let mut work = 0.0;
    let mut heating = 0.0;
    let mut prev: Option<(f64, FocalKind, bool)> = None;

    for k in 0..=steps {
        let t = k as f64 * config.dt;
        state.time = t;
        while let Some(p) = pending.next_if(|p| p.time <= t + 0.5 * config.dt) {
            apply_perturbation(p, &mut state, &mut pop, &mut pop_temp, &mut heating, scenario, &mut rng)?;
            events.push(Event {
                time: t,
                event_type: EventType::Perturbation,
                payload: serde_json::to_value(p).map_err(|e| CoordError::Io(e.to_string()))?,
            });
        }

        let l_p = config.protocol_length(&state)?;
        let focal = config.focal_point(&state, l_p)?;
        let over = l_p > config.critical_length(state.agents());
        if let Some((prev_l, prev_kind, prev_over)) = prev {
            if l_p != prev_l {
                events.push(Event {
                    time: t,
                    event_type: EventType::LpChange,
                    payload: json!({ "from_bits": prev_l, "to_bits": l_p }),
                });
            }
            if focal.kind != prev_kind {
                events.push(Event {
                    time: t,
                    event_type: EventType::FocalTransition,
                    payload: json!({ "from": prev_kind, "to": focal.kind }),
                });
            }
            if over != prev_over {
                events.push(Event {
                    time: t,
                    event_type: EventType::ThresholdCrossing,
                    payload: json!({
                        "direction": if over { "above" } else { "below" },
                        "l_p_bits": l_p,
                        "l_critical_bits": config.critical_length(state.agents()),
                    }),
                });
            }
        }
        prev = Some((l_p, focal.kind, over));
        if k % scenario.record_every as u64 == 0 || k == steps {
            rows.push(TrajectoryRow {
                time: t,
                n: state.agents(),
                d: state.objectives(),
                t_co: state.t_co,
                env: state.env,
                l_p_bits: l_p,
                focal_kind: focal.kind,
                psi: config.psi(&focal)?,
            });
        }
        if k == steps {
            break;
        }

        let report = step_detailed(&state, heating, config, &scenario.drivers, &mut rng)?;
        heating = 0.0;
        let next = report.state;
        if next.t_co < state.t_co && next.t_co > 0.0 {
            work += next.agents() as f64 * (config.k_bar - config.k0) * (state.t_co / next.t_co).log2();
        }
        if report.dropped {
            if pop.len() > 1 {
                let who = rng.random_range(0..pop.len());
                pop.remove(who)?;
                let t_new = coordination_temperature(&pop);
                heating = t_new - pop_temp;
                pop_temp = t_new;
            }
            events.push(Event {
                time: next.time,
                event_type: EventType::Dropout,
                payload: json!({ "remaining": next.agents(), "l_p_bits": report.l_p }),
            });
        }
        state = next;
    }

    Ok(SimulationOutput {
        rows,
        events,
        final_state: state,
        cumulative_work: work,
    })
}

fn apply_perturbation<R: Rng + ?Sized>(
    p: &Perturbation,
    state: &mut SystemState,
    pop: &mut Population,
    pop_temp: &mut f64,
    heating: &mut f64,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<()> {
    if let Some(n) = p.n {
        state.n = n as f64;
    }
    if let Some(d) = p.d {
        state.d = d;
    }
    if p.n.is_some() || p.spread.is_some() {
        let spec = PopulationSpec {
            spread: p.spread.unwrap_or(scenario.population.spread),
            ..scenario.population
        };
        *pop = spec.generate(state.agents() as usize, rng)?;
        let t_new = coordination_temperature(pop);
        *heating += t_new - *pop_temp;
        *pop_temp = t_new;
    }
    if let Some(t) = p.t_co {
        state.t_co = t;
        *heating = 0.0;
    }
    Ok(())
}

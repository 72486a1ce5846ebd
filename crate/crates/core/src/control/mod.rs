//! Closed-loop cane assistance: intent detection, force control and a
//! pneumatic cylinder plant.
//!
//! The plant is a single-acting cylinder whose chamber pressure follows the
//! valve setpoint with a first-order lag and a slew limit. Its axial force is
//! pressure times piston area. The stroke follows the vertical motion of the
//! vest attachment and stops hard at both ends.
//!
//! The controller tracks a desired axial force. After sit-to-stand onset the
//! desired force follows a schedule: it ramps in, scales with how far trunk
//! flexion speed sits above the onset threshold, and is gone before the trunk
//! stops flexing, so the seat hands its load to the feet rather than the
//! cane. Once the trunk stops flexing a model-based floor takes over: a
//! margin above whatever part of the predicted no-cane ground force exceeds
//! body weight. A feedforward term inverts the plant lag and a PI
//! term with conditional integration trims the remaining error.

mod episode;

pub use episode::{run_episode, EpisodeLog, Scenario, SCENARIO_KEYS};

use crate::anthro::AnthropometricModel;
use crate::dynamics::{solve_frame, CaneForce};
use crate::kinematics::{ChainPose, PoseTrajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    /// Cylinder bore, m.
    pub bore_diameter: f64,
    /// Pa.
    pub max_pressure: f64,
    /// m.
    pub max_stroke: f64,
    /// Pressure lag, s.
    pub time_constant: f64,
    /// Largest pressure change rate, Pa/s.
    pub slew_rate: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            bore_diameter: 0.032,
            max_pressure: 0.8e6,
            max_stroke: 0.5,
            time_constant: 0.08,
            slew_rate: 25e6,
        }
    }
}

impl PlantConfig {
    pub fn piston_area(&self) -> f64 {
        std::f64::consts::PI * (0.5 * self.bore_diameter).powi(2)
    }

    /// Axial thrust at full pressure.
    pub fn max_force(&self) -> f64 {
        self.max_pressure * self.piston_area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Pa.
    pub pressure: f64,
    /// m.
    pub stroke: f64,
    /// N.
    pub axial_force: f64,
    pub stroke_saturated: bool,
}

impl PlantState {
    pub fn at_rest(stroke: f64, cfg: &PlantConfig) -> Self {
        PlantState {
            pressure: 0.0,
            stroke: stroke.clamp(0.0, cfg.max_stroke),
            axial_force: 0.0,
            stroke_saturated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CaneCommand {
    /// Valve pressure setpoint after clamping, Pa.
    pub pressure_setpoint: f64,
    /// Load-side stroke velocity for the coming step, m/s.
    pub stroke_rate: f64,
    /// Force the controller is aiming for, N.
    pub desired_force: f64,
    /// The unclamped setpoint was outside the pressure range.
    pub saturated: bool,
}

impl CaneCommand {
    /// Hold `pressure` with no stroke motion.
    pub fn hold(pressure: f64) -> Self {
        CaneCommand {
            pressure_setpoint: pressure,
            ..Default::default()
        }
    }
}

/// Advances the cylinder by `dt` seconds, `0 < dt ≤ 0.05`.
pub fn plant_step(state: &PlantState, cmd: &CaneCommand, cfg: &PlantConfig, dt: f64) -> PlantState {
    assert!(dt > 0.0 && dt <= 0.05, "plant step {dt} s outside (0, 0.05]");
    let sp = cmd.pressure_setpoint.clamp(0.0, cfg.max_pressure);
    let target = sp + (state.pressure - sp) * (-dt / cfg.time_constant).exp();
    let max_step = cfg.slew_rate * dt;
    let p = (state.pressure + (target - state.pressure).clamp(-max_step, max_step)).clamp(0.0, cfg.max_pressure);
    let raw = state.stroke + cmd.stroke_rate * dt;
    let stroke = raw.clamp(0.0, cfg.max_stroke);
    PlantState {
        pressure: p,
        stroke,
        axial_force: p * cfg.piston_area(),
        stroke_saturated: raw != stroke,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Proportional gain on force error, N/N.
    pub kp: f64,
    /// Integral gain, 1/s.
    pub ki: f64,
    /// Peak scheduled force as a share of body weight.
    pub target_fraction: f64,
    /// Share above the predicted excess ground force the cane must cover.
    pub margin: f64,
    /// The schedule reaches zero once trunk speed falls to this share of
    /// its peak, or to the onset rate if that is higher.
    pub release_fraction: f64,
    /// Schedule ramp-in time after onset, s.
    pub ramp_in: f64,
    /// Invert the plant lag in the setpoint.
    pub feedforward: bool,
    /// Cap on the desired force, N. The plant limit applies regardless.
    pub max_force: Option<f64>,
    pub intent: IntentConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            kp: 0.2,
            ki: 2.0,
            target_fraction: 0.52,
            margin: 0.1,
            release_fraction: 0.5,
            ramp_in: 0.4,
            feedforward: true,
            max_force: None,
            intent: IntentConfig::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.kp >= 0.0 && self.ki >= 0.0) {
            return Err(Error::invalid("controller.kp/ki", "gains must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.target_fraction) {
            return Err(Error::invalid("controller.target_fraction", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.release_fraction) {
            return Err(Error::invalid("controller.release_fraction", "must lie in [0, 1)"));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::invalid("controller.margin", "must be non-negative"));
        }
        if !(self.ramp_in > 0.0) {
            return Err(Error::invalid("controller.ramp_in", "must be positive"));
        }
        if let Some(m) = self.max_force {
            if !(m >= 0.0) {
                return Err(Error::invalid("controller.max_force", "must be non-negative"));
            }
        }
        self.intent.validate()
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

/// Stateful force controller for one episode.
#[derive(Debug, Clone)]
pub struct CaneController {
    cfg: ControllerConfig,
    plant: PlantConfig,
    body_weight: f64,
    integral: f64,
    prev_desired: Option<f64>,
    prev_schedule: Option<f64>,
    prev_excess: [Option<f64>; 2],
    onset: Option<f64>,
    armed_at: Option<f64>,
    peak_rate: f64,
    flexion_done: bool,
    finished: bool,
}

impl CaneController {
    pub fn new(cfg: ControllerConfig, plant: PlantConfig, model: &AnthropometricModel) -> Self {
        CaneController {
            cfg,
            plant,
            body_weight: model.body_weight(),
            integral: 0.0,
            prev_desired: None,
            prev_schedule: None,
            prev_excess: [None; 2],
            onset: None,
            armed_at: None,
            peak_rate: 0.0,
            flexion_done: false,
            finished: false,
        }
    }

    /// Feeds a detected intent event; `now` is when it was detected.
    pub fn on_event(&mut self, event: &IntentEvent, now: f64) {
        match event.kind {
            IntentKind::StsOnset => {
                self.onset = Some(event.timestamp);
                self.armed_at = Some(now);
                self.peak_rate = 0.0;
                self.flexion_done = false;
                self.finished = false;
            }
            IntentKind::StsComplete | IntentKind::Abort => {
                self.onset = None;
                self.armed_at = None;
                self.finished = true;
            }
        }
    }

    /// Scheduled force at time `t`, the predicted no-cane ground force in
    /// excess of body weight, and whether the floor applies yet.
    fn targets(&mut self, t: f64, pose: &ChainPose, model: &AnthropometricModel) -> (f64, Option<f64>, bool) {
        let (Some(onset), Some(armed)) = (self.onset, self.armed_at) else {
            return (0.0, None, false);
        };
        if t < armed || self.finished {
            return (0.0, None, false);
        }
        let w = pose.trunk_vel;
        self.peak_rate = self.peak_rate.max(w);
        let off = self
            .cfg
            .intent
            .onset_rate
            .max(self.cfg.release_fraction * self.peak_rate);
        let shape = if self.peak_rate > off {
            ((w - off) / (self.peak_rate - off)).max(0.0)
        } else {
            0.0
        };
        let schedule = self.cfg.target_fraction * self.body_weight * smoothstep((t - onset) / self.cfg.ramp_in) * shape;
        // Until the trunk stops flexing the seat still carries the excess.
        self.flexion_done |= self.peak_rate > self.cfg.intent.onset_rate && w <= 0.0;
        let excess = solve_frame(pose, &CaneForce::zero(), model, None).loads.f_g.y - self.body_weight;
        (schedule, Some(excess), self.flexion_done)
    }

    /// Range of forces the plant can reach in `dt` from the last schedule.
    fn reachable(&self, dt: f64) -> (f64, f64) {
        let Some(d0) = self.prev_schedule else {
            return (0.0, f64::INFINITY);
        };
        let decay = (-dt / self.plant.time_constant).exp();
        let slew = self.plant.slew_rate * self.plant.piston_area() * dt;
        let fmax = self.plant.max_force();
        let lo = (d0 * decay).max(d0 - slew);
        let hi = (fmax + (d0 - fmax) * decay).min(d0 + slew);
        (lo, hi)
    }

    /// Pressure command for the coming `dt`, given the current plant state.
    ///
    /// The schedule is held to what the plant can follow; the model floor
    /// is not, so an unreachable floor shows up as tracking error.
    pub fn step(
        &mut self,
        t: f64,
        state: &PlantState,
        pose: &ChainPose,
        model: &AnthropometricModel,
        dt: f64,
    ) -> CaneCommand {
        let (schedule, excess, floor_on) = self.targets(t, pose, model);
        let (lo, hi) = self.reachable(dt);
        let schedule = schedule.clamp(lo, hi.max(lo));
        let cap = self.cfg.max_force.unwrap_or(f64::INFINITY);
        let floor = |e: f64| {
            if floor_on {
                (1.0 + self.cfg.margin) * e.max(0.0)
            } else {
                0.0
            }
        };
        let desired = schedule.max(floor(excess.unwrap_or(0.0))).min(cap);
        // The excess is extrapolated before clamping, and quadratically, so
        // a zero crossing is seen one step early.
        let linear = |now: f64, prev: Option<f64>| 2.0 * now - prev.unwrap_or(now);
        let excess_ahead = excess.map_or(0.0, |e| match self.prev_excess {
            [Some(e1), Some(e2)] => 3.0 * e - 3.0 * e1 + e2,
            [e1, _] => linear(e, e1),
        });
        let ahead = linear(schedule, self.prev_schedule).max(floor(excess_ahead)).min(cap);
        self.prev_schedule = Some(schedule);
        self.prev_excess = [excess, self.prev_excess[0]];
        self.drive(desired, ahead, state, dt)
    }

    /// PI with lag-inverting feedforward towards `desired` newtons.
    pub fn command(&mut self, desired: f64, state: &PlantState, dt: f64) -> CaneCommand {
        let ahead = desired + self.prev_desired.map_or(0.0, |p| desired - p);
        self.drive(desired, ahead, state, dt)
    }

    /// `ahead` is the force expected one step from now; the feedforward
    /// aims the plant at it so the force lands on target without a lag.
    fn drive(&mut self, desired: f64, ahead: f64, state: &PlantState, dt: f64) -> CaneCommand {
        let area = self.plant.piston_area();
        let base = if self.cfg.feedforward {
            let decay = (-dt / self.plant.time_constant).exp();
            (ahead.max(0.0) / area - state.pressure * decay) / (1.0 - decay)
        } else {
            state.pressure
        };
        self.prev_desired = Some(desired);
        let error = desired - state.axial_force;
        let raw = base + (self.cfg.kp * error + self.cfg.ki * self.integral) / area;
        let sp = raw.clamp(0.0, self.plant.max_pressure);
        let saturated = sp != raw;
        let pushing_into_limit = (raw > sp && error > 0.0) || (raw < sp && error < 0.0);
        if !pushing_into_limit {
            self.integral += error * dt;
        }
        CaneCommand {
            pressure_setpoint: sp,
            stroke_rate: 0.0,
            desired_force: desired,
            saturated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntentKind {
    StsOnset,
    StsComplete,
    Abort,
}

impl IntentKind {
    pub fn name(self) -> &'static str {
        match self {
            IntentKind::StsOnset => "sts_onset",
            IntentKind::StsComplete => "sts_complete",
            IntentKind::Abort => "abort",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentEvent {
    pub timestamp: f64,
    pub kind: IntentKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentConfig {
    /// Trunk flexion speed that counts as rising, rad/s.
    pub onset_rate: f64,
    /// How long that speed must be held, s.
    pub onset_hold: f64,
    /// Knee angle below which the subject counts as seated, rad.
    pub seated_knee_max: f64,
    /// Knee and hip angles above which the subject counts as upright, rad.
    pub upright_knee_min: f64,
    pub upright_hip_min: f64,
    /// Largest trunk tilt still counted as upright, rad.
    pub upright_trunk_max: f64,
    /// Joint speed below which a pose is still, rad/s.
    pub still_rate: f64,
    /// Time a pose must stay still to count, s.
    pub still_hold: f64,
    /// Time seated, trunk back near vertical and still, after an onset,
    /// before declaring an abort, s.
    pub abort_hold: f64,
    /// Shortest usable window, s.
    pub min_window: f64,
}

impl Default for IntentConfig {
    fn default() -> Self {
        IntentConfig {
            onset_rate: 0.3,
            onset_hold: 0.2,
            seated_knee_max: 2.3,
            upright_knee_min: std::f64::consts::PI - 0.2,
            upright_hip_min: std::f64::consts::PI - 0.3,
            upright_trunk_max: 0.25,
            still_rate: 0.15,
            still_hold: 0.2,
            abort_hold: 0.5,
            min_window: 0.5,
        }
    }
}

impl IntentConfig {
    fn validate(&self) -> crate::Result<()> {
        if !(self.onset_rate > 0.0 && self.onset_hold > 0.0 && self.still_hold > 0.0) {
            return Err(crate::Error::invalid(
                "controller.onset_rate/onset_hold",
                "must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Rising,
    Standing,
}

/// Turns a sliding pose window into at most one event per call.
#[derive(Debug, Clone)]
pub struct IntentDetector {
    cfg: IntentConfig,
    phase: Phase,
    last: Option<f64>,
}

const EPS: f64 = 1e-9;

impl IntentDetector {
    pub fn new(cfg: IntentConfig) -> Self {
        IntentDetector {
            cfg,
            phase: Phase::Idle,
            last: None,
        }
    }

    fn seated(&self, traj: &PoseTrajectory, i: usize) -> bool {
        traj.frames[i].knee < self.cfg.seated_knee_max
    }

    fn upright(&self, traj: &PoseTrajectory, i: usize) -> bool {
        let q = &traj.frames[i];
        q.knee >= self.cfg.upright_knee_min
            && q.hip >= self.cfg.upright_hip_min
            && q.trunk_abs.abs() <= self.cfg.upright_trunk_max
    }

    fn still(&self, traj: &PoseTrajectory, i: usize) -> bool {
        traj.velocities[i]
            .to_array()
            .iter()
            .all(|v| v.abs() < self.cfg.still_rate)
    }

    /// Start time of the trailing run satisfying `pred`, if it lasts `hold`.
    fn trailing_run(&self, traj: &PoseTrajectory, hold: f64, pred: impl Fn(usize) -> bool) -> Option<usize> {
        let n = traj.len();
        let mut start = n;
        while start > 0 && pred(start - 1) {
            start -= 1;
        }
        if start == n {
            return None;
        }
        (traj.timestamps[n - 1] - traj.timestamps[start] >= hold - EPS).then_some(start)
    }

    pub fn detect(&mut self, window: &PoseTrajectory) -> Option<IntentEvent> {
        if window.len() < 2 || window.duration() < self.cfg.min_window - EPS {
            return None;
        }
        let after_last = |t: f64, last: Option<f64>| last.is_none_or(|l| t > l);
        let event = if self.phase == Phase::Rising {
            let abort = self.trailing_run(window, self.cfg.abort_hold, |i| {
                self.seated(window, i)
                    && window.frames[i].trunk_abs.abs() <= self.cfg.upright_trunk_max
                    && self.still(window, i)
            });
            let done = self.trailing_run(window, self.cfg.still_hold, |i| {
                self.upright(window, i) && self.still(window, i)
            });
            if let Some(i) = abort {
                Some((i, IntentKind::Abort, Phase::Idle))
            } else {
                done.map(|i| (i, IntentKind::StsComplete, Phase::Standing))
            }
        } else {
            let onset = self
                .trailing_run(window, self.cfg.onset_hold, |i| {
                    window.velocities[i].trunk_abs > self.cfg.onset_rate
                })
                .filter(|&i| self.seated(window, i));
            let done = (self.phase != Phase::Standing)
                .then(|| {
                    self.trailing_run(window, self.cfg.still_hold, |i| {
                        self.upright(window, i) && self.still(window, i)
                    })
                })
                .flatten();
            if let Some(i) = onset {
                Some((i, IntentKind::StsOnset, Phase::Rising))
            } else {
                done.map(|i| (i, IntentKind::StsComplete, Phase::Standing))
            }
        };
        let (i, kind, next) = event?;
        let timestamp = window.timestamps[i];
        if !after_last(timestamp, self.last) {
            return None;
        }
        self.phase = next;
        self.last = Some(timestamp);
        Some(IntentEvent { timestamp, kind })
    }
}

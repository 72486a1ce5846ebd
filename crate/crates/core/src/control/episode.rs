use std::io::Write;

use super::{
    plant_step, CaneCommand, CaneController, ControllerConfig, IntentDetector, IntentEvent, PlantConfig, PlantState,
};
use crate::anthro::{scale_anthropometrics, AnthroTable, AnthropometricModel, Sex, Subject};
use crate::config::KeyValues;
use crate::dynamics::{implied_cop_x, inverse_dynamics, Attachment, CaneForce, CaneProfile, DynamicsFrame};
use crate::grf::GrfProfile;
use crate::kinematics::{chain_pose, generate_sts_trajectory, PhaseTimings, PoseTrajectory, StsPlan};
use crate::table;
use crate::{Error, Result};

/// Keys a scenario file may contain. Entries ending in `*` are prefixes.
pub const SCENARIO_KEYS: &[&str] = &[
    "subject.height",
    "subject.mass",
    "subject.sex",
    "chair.height",
    "phase.trunk_flexion",
    "phase.hip_liftoff",
    "phase.extension",
    "posture.shank_lean_deg",
    "posture.trunk_flexion_deg",
    "episode.lead_in",
    "episode.tail",
    "episode.rate",
    "assist",
    "controller.kp",
    "controller.ki",
    "controller.target_fraction",
    "controller.margin",
    "controller.ramp_in",
    "controller.release_fraction",
    "controller.feedforward",
    "controller.max_force",
    "controller.onset_rate",
    "controller.onset_hold",
    "plant.bore_diameter",
    "plant.max_pressure",
    "plant.max_stroke",
    "plant.time_constant",
    "plant.slew_rate",
    "plant.initial_stroke",
    "cane.attach_fraction",
    "cane.lateral_offset",
    "cane.tilt_deg",
    "seat.initial_share",
    "segment.*",
    "foot.*",
];

/// Everything needed to simulate one sit-to-stand episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub subject: Subject,
    pub table: AnthroTable,
    pub plan: StsPlan,
    /// Control rate, Hz.
    pub rate: f64,
    pub assist: bool,
    pub controller: ControllerConfig,
    pub plant: PlantConfig,
    pub initial_stroke: f64,
    pub attach: Attachment,
    /// Cane axis tilt from vertical, rad.
    pub cane_tilt: f64,
    /// Share of the ground load carried by the seat at the start of the rise.
    pub seat_share: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        let mut plan = StsPlan::new(PhaseTimings::new(1.0, 0.6, 1.0));
        plan.lead_in = 0.5;
        plan.tail = 1.5;
        Scenario {
            subject: Subject::reference(),
            table: AnthroTable::de_leva(Sex::Male),
            plan,
            rate: 100.0,
            assist: true,
            controller: ControllerConfig::default(),
            plant: PlantConfig::default(),
            initial_stroke: 0.12,
            attach: Attachment::default(),
            cane_tilt: 0.0,
            seat_share: 0.575,
        }
    }
}

impl Scenario {
    /// Reads a scenario from `key = value` text. Missing keys keep their
    /// defaults; bad values are reported against their line.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(SCENARIO_KEYS)?;
        let mut s = Scenario::default();
        let f = |key: &str, slot: &mut f64| -> Result<()> {
            if let Some(v) = kv.f64(key)? {
                *slot = v;
            }
            Ok(())
        };
        f("subject.height", &mut s.subject.height)?;
        f("subject.mass", &mut s.subject.mass)?;
        if let Some(raw) = kv.raw("subject.sex") {
            s.subject.sex = raw.parse().map_err(|e| kv.error_at("subject.sex", e))?;
            s.table = AnthroTable::de_leva(s.subject.sex);
        }
        s.table = s.table.with_overrides(kv)?;
        f("chair.height", &mut s.plan.chair_height)?;
        f("phase.trunk_flexion", &mut s.plan.timings.trunk_flexion)?;
        f("phase.hip_liftoff", &mut s.plan.timings.hip_liftoff)?;
        f("phase.extension", &mut s.plan.timings.extension)?;
        let deg = |key: &str, slot: &mut f64| -> Result<()> {
            if let Some(v) = kv.f64(key)? {
                *slot = v.to_radians();
            }
            Ok(())
        };
        deg("posture.shank_lean_deg", &mut s.plan.shank_lean)?;
        deg("posture.trunk_flexion_deg", &mut s.plan.trunk_flexion)?;
        deg("cane.tilt_deg", &mut s.cane_tilt)?;
        f("episode.lead_in", &mut s.plan.lead_in)?;
        f("episode.tail", &mut s.plan.tail)?;
        f("episode.rate", &mut s.rate)?;
        if let Some(b) = kv.bool("assist")? {
            s.assist = b;
        }
        let c = &mut s.controller;
        f("controller.kp", &mut c.kp)?;
        f("controller.ki", &mut c.ki)?;
        f("controller.target_fraction", &mut c.target_fraction)?;
        f("controller.margin", &mut c.margin)?;
        f("controller.ramp_in", &mut c.ramp_in)?;
        f("controller.release_fraction", &mut c.release_fraction)?;
        f("controller.onset_rate", &mut c.intent.onset_rate)?;
        f("controller.onset_hold", &mut c.intent.onset_hold)?;
        if let Some(b) = kv.bool("controller.feedforward")? {
            c.feedforward = b;
        }
        c.max_force = kv.f64("controller.max_force")?.or(c.max_force);
        let p = &mut s.plant;
        f("plant.bore_diameter", &mut p.bore_diameter)?;
        f("plant.max_pressure", &mut p.max_pressure)?;
        f("plant.max_stroke", &mut p.max_stroke)?;
        f("plant.time_constant", &mut p.time_constant)?;
        f("plant.slew_rate", &mut p.slew_rate)?;
        f("plant.initial_stroke", &mut s.initial_stroke)?;
        f("cane.attach_fraction", &mut s.attach.fraction)?;
        f("cane.lateral_offset", &mut s.attach.lateral)?;
        f("seat.initial_share", &mut s.seat_share)?;
        s.validate().map_err(|e| locate(kv, e))?;
        Ok(s)
    }

    /// Checks every field, including that the chair height is reachable.
    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        self.plan.seated_tilts(&model)?;
        if !(self.rate >= 30.0 && self.rate <= 1000.0) {
            return Err(Error::invalid(
                "episode.rate",
                format!("{} Hz outside [30, 1000] Hz", self.rate),
            ));
        }
        self.controller.validate()?;
        let p = &self.plant;
        for (key, v) in [
            ("plant.bore_diameter", p.bore_diameter),
            ("plant.max_pressure", p.max_pressure),
            ("plant.max_stroke", p.max_stroke),
            ("plant.time_constant", p.time_constant),
            ("plant.slew_rate", p.slew_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(key, format!("{v} must be positive")));
            }
        }
        if !(0.0..=p.max_stroke).contains(&self.initial_stroke) {
            return Err(Error::invalid("plant.initial_stroke", "must lie within the stroke"));
        }
        if !(0.0..=1.0).contains(&self.seat_share) {
            return Err(Error::invalid("seat.initial_share", "must lie in [0, 1]"));
        }
        CaneForce::tilted(0.0, self.cane_tilt, self.attach)
            .validate()
            .map_err(|_| Error::invalid("cane.attach_fraction", "must lie in [0, 1]"))?;
        if !(self.cane_tilt.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("cane.tilt_deg", "must lie in (-90, 90)"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<AnthropometricModel> {
        scale_anthropometrics(&self.subject, &self.table)
    }

    /// Resolved scalar settings, for manifests and round trips.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let t = &self.plan.timings;
        let c = &self.controller;
        let p = &self.plant;
        let mut out: Vec<(String, f64)> = [
            ("subject.height", self.subject.height),
            ("subject.mass", self.subject.mass),
            ("chair.height", self.plan.chair_height),
            ("phase.trunk_flexion", t.trunk_flexion),
            ("phase.hip_liftoff", t.hip_liftoff),
            ("phase.extension", t.extension),
            ("posture.shank_lean_deg", self.plan.shank_lean.to_degrees()),
            ("posture.trunk_flexion_deg", self.plan.trunk_flexion.to_degrees()),
            ("episode.lead_in", self.plan.lead_in),
            ("episode.tail", self.plan.tail),
            ("episode.rate", self.rate),
            ("controller.kp", c.kp),
            ("controller.ki", c.ki),
            ("controller.target_fraction", c.target_fraction),
            ("controller.margin", c.margin),
            ("controller.ramp_in", c.ramp_in),
            ("controller.release_fraction", c.release_fraction),
            ("controller.onset_rate", c.intent.onset_rate),
            ("controller.onset_hold", c.intent.onset_hold),
            ("plant.bore_diameter", p.bore_diameter),
            ("plant.max_pressure", p.max_pressure),
            ("plant.max_stroke", p.max_stroke),
            ("plant.time_constant", p.time_constant),
            ("plant.slew_rate", p.slew_rate),
            ("plant.initial_stroke", self.initial_stroke),
            ("cane.attach_fraction", self.attach.fraction),
            ("cane.lateral_offset", self.attach.lateral),
            ("cane.tilt_deg", self.cane_tilt.to_degrees()),
            ("seat.initial_share", self.seat_share),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        if let Some(m) = c.max_force {
            out.push(("controller.max_force".into(), m));
        }
        out.extend(self.table.entries());
        out
    }
}

fn locate(kv: &KeyValues, e: Error) -> Error {
    let key_for = |field: &str| {
        [field.to_string(), format!("{field}_deg")]
            .into_iter()
            .find(|k| kv.line_of(k).is_some())
    };
    match e {
        Error::Invalid { field, reason } => match key_for(&field) {
            Some(k) => kv.error_at(&k, reason),
            None => Error::Invalid { field, reason },
        },
        Error::Unreachable(msg) if kv.line_of("chair.height").is_some() => kv.error_at("chair.height", msg),
        other => other,
    }
}

/// Time series from one simulated episode.
#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub assisted: bool,
    pub trajectory: PoseTrajectory,
    /// Plant state acting during each sample.
    pub plant: Vec<PlantState>,
    pub commands: Vec<CaneCommand>,
    pub dynamics: Vec<DynamicsFrame>,
    /// Plate, seat and cane channels as an instrumented chair would record.
    pub grf: GrfProfile,
    pub events: Vec<IntentEvent>,
    pub body_weight: f64,
}

impl EpisodeLog {
    pub fn timestamps(&self) -> &[f64] {
        &self.trajectory.timestamps
    }

    pub fn cane_force(&self) -> Vec<f64> {
        self.plant.iter().map(|s| s.axial_force).collect()
    }

    pub fn desired_force(&self) -> Vec<f64> {
        self.commands.iter().map(|c| c.desired_force).collect()
    }

    pub const CSV_HEADERS: [&'static str; 17] = [
        "t",
        "trunk",
        "hip",
        "knee",
        "ankle",
        "pressure",
        "stroke",
        "cane_force",
        "setpoint",
        "desired_force",
        "saturated",
        "stroke_saturated",
        "seat_fz",
        "foot_fz",
        "tau_hip",
        "tau_knee",
        "tau_ankle",
    ];

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let tr = &self.trajectory;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        let cols: Vec<Vec<f64>> = vec![
            tr.timestamps.clone(),
            tr.frames.iter().map(|q| q.trunk_abs).collect(),
            tr.frames.iter().map(|q| q.hip).collect(),
            tr.frames.iter().map(|q| q.knee).collect(),
            tr.frames.iter().map(|q| q.ankle).collect(),
            self.plant.iter().map(|s| s.pressure).collect(),
            self.plant.iter().map(|s| s.stroke).collect(),
            self.cane_force(),
            self.commands.iter().map(|c| c.pressure_setpoint).collect(),
            self.desired_force(),
            self.commands.iter().map(|c| flag(c.saturated)).collect(),
            self.plant.iter().map(|s| flag(s.stroke_saturated)).collect(),
            self.grf.seat.clone().unwrap_or_default(),
            self.grf.vertical.clone(),
            self.dynamics.iter().map(|d| d.loads.tau_hip).collect(),
            self.dynamics.iter().map(|d| d.loads.tau_knee).collect(),
            self.dynamics.iter().map(|d| d.loads.tau_ankle).collect(),
        ];
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        table::write_columns(writer, &Self::CSV_HEADERS, &refs)
    }

    pub fn write_events_csv(&self, mut writer: impl Write) -> Result<()> {
        writeln!(writer, "t,event")?;
        for e in &self.events {
            writeln!(writer, "{},{}", table::fmt_num(e.timestamp), e.kind.name())?;
        }
        Ok(())
    }
}

/// Seat share of the ground load at `t`; it unloads as the trunk flexes.
fn seat_share(scenario: &Scenario, t: f64) -> f64 {
    let x = ((t - scenario.plan.lead_in) / scenario.plan.timings.trunk_flexion).clamp(0.0, 1.0);
    scenario.seat_share * (1.0 - x * x)
}

/// Simulates one episode with `cfg` driving the cane. With
/// `scenario.assist` off the plant is held at zero pressure.
pub fn run_episode(model: &AnthropometricModel, cfg: &ControllerConfig, scenario: &Scenario) -> Result<EpisodeLog> {
    scenario.validate()?;
    cfg.validate()?;
    let traj = generate_sts_trajectory(model, &scenario.plan, scenario.rate)?;
    let dt = 1.0 / scenario.rate;
    let n = traj.len();
    let plant_cfg = &scenario.plant;
    let mut controller = CaneController::new(*cfg, *plant_cfg, model);
    let mut detector = IntentDetector::new(cfg.intent);
    let mut state = PlantState::at_rest(scenario.initial_stroke, plant_cfg);
    let poses: Vec<_> = (0..n).map(|i| chain_pose(&traj, i, model)).collect();
    let attach_z: Vec<f64> = poses
        .iter()
        .map(|p| p.point_on_hat(scenario.attach.fraction, scenario.attach.lateral).y)
        .collect();

    let mut plant = Vec::with_capacity(n);
    let mut commands = Vec::with_capacity(n);
    let mut events = Vec::new();
    let mut lo = 0;
    for i in 0..n {
        let t = traj.timestamps[i];
        while traj.timestamps[lo] < t - cfg.intent.min_window - 1e-9 {
            lo += 1;
        }
        if let Some(ev) = detector.detect(&traj.slice(lo..i + 1)) {
            events.push(ev);
            controller.on_event(&ev, t);
        }
        let mut cmd = if scenario.assist {
            controller.step(t, &state, &poses[i], model, dt)
        } else {
            CaneCommand::hold(0.0)
        };
        cmd.stroke_rate = if i + 1 < n {
            (attach_z[i + 1] - attach_z[i]) / dt
        } else {
            0.0
        };
        plant.push(state);
        commands.push(cmd);
        state = plant_step(&state, &cmd, plant_cfg, dt);
    }

    let cane: Vec<CaneForce> = plant
        .iter()
        .map(|s| CaneForce::tilted(s.axial_force, scenario.cane_tilt, scenario.attach))
        .collect();
    let dynamics = inverse_dynamics(&traj, &CaneProfile::PerFrame(cane), model)?;
    let mut seat = Vec::with_capacity(n);
    let mut foot = Vec::with_capacity(n);
    for (t, d) in traj.timestamps.iter().zip(&dynamics) {
        let load = d.loads.f_g.y;
        let s = seat_share(scenario, *t) * load;
        seat.push(s);
        foot.push(load - s);
    }
    let cane_z: Vec<f64> = dynamics.iter().map(|d| d.cane.force().y).collect();
    // where a plate under the foot would see the pressure centre, ankle relative
    let cop_x: Vec<f64> = dynamics
        .iter()
        .map(|d| implied_cop_x(&d.pose, &d.loads, model).map_or(0.0, |x| x - d.pose.ankle.x))
        .collect();
    let mut grf = GrfProfile::new(traj.timestamps.clone(), foot, model.body_weight())
        .with_seat(seat)
        .with_cane(cane_z);
    grf.cop_x = Some(cop_x);
    Ok(EpisodeLog {
        assisted: scenario.assist,
        trajectory: traj,
        plant,
        commands,
        dynamics,
        grf,
        events,
        body_weight: model.body_weight(),
    })
}

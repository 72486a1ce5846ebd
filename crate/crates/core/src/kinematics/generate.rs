//! Synthetic sit-to-stand trajectories.
//!
//! The seated start has the shank leaning forward, the trunk vertical and the
//! thigh angle chosen so the hip joint sits at chair height. Three phases
//! follow:
//!
//! 1. trunk flexion: a quintic takes the HAT from vertical to the flexion
//!    angle while the legs stay put;
//! 2. hip lift-off and 3. knee-hip extension: a rise progress `s` goes from
//!    0 to 1 and every segment tilt scales by `1 − s`.
//!
//! `s` is two quintic pieces joined where phase 2 meets phase 3. The joint
//! state at that knot is picked so jerk is zero at the start of the rise and
//! continuous at the knot, which makes the whole profile C³.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::{JointAngles, PoseTrajectory};
use crate::anthro::AnthropometricModel;
use crate::error::{Error, Result};

/// Durations of the three movement phases, s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTimings {
    pub trunk_flexion: f64,
    pub hip_liftoff: f64,
    pub extension: f64,
}

impl PhaseTimings {
    pub fn new(trunk_flexion: f64, hip_liftoff: f64, extension: f64) -> Self {
        PhaseTimings {
            trunk_flexion,
            hip_liftoff,
            extension,
        }
    }

    pub fn total(&self) -> f64 {
        self.trunk_flexion + self.hip_liftoff + self.extension
    }
}

/// Everything that shapes a generated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StsPlan {
    pub timings: PhaseTimings,
    /// Seat height, m.
    pub chair_height: f64,
    /// Forward shank tilt while seated, rad.
    pub shank_lean: f64,
    /// Peak trunk flexion from vertical, rad.
    pub trunk_flexion: f64,
    /// Still seated time before the movement, s.
    pub lead_in: f64,
    /// Still standing time after the movement, s.
    pub tail: f64,
}

impl StsPlan {
    pub fn new(timings: PhaseTimings) -> Self {
        StsPlan {
            timings,
            chair_height: 0.40,
            shank_lean: 10f64.to_radians(),
            trunk_flexion: 40f64.to_radians(),
            lead_in: 0.0,
            tail: 0.0,
        }
    }

    pub fn duration(&self) -> f64 {
        self.lead_in + self.timings.total() + self.tail
    }

    /// Seated tilts `[shank, thigh, hat]` that put the hip at chair height.
    pub fn seated_tilts(&self, model: &AnthropometricModel) -> Result<[f64; 3]> {
        let above_ankle = self.chair_height - model.ankle_height - model.shank.length * self.shank_lean.cos();
        let c = above_ankle / model.thigh.length;
        if !(-1.0..1.0).contains(&c) {
            let lowest = model.ankle_height + model.shank.length * self.shank_lean.cos() - model.thigh.length;
            let highest = lowest + 2.0 * model.thigh.length;
            return Err(Error::Unreachable(format!(
                "chair height {} m unreachable: seated hip height must lie in ({:.3}, {:.3}) m for this subject",
                self.chair_height, lowest, highest
            )));
        }
        Ok([self.shank_lean, -c.acos(), 0.0])
    }

    fn validate(&self) -> Result<()> {
        let t = &self.timings;
        for (name, v) in [
            ("phase.trunk_flexion", t.trunk_flexion),
            ("phase.hip_liftoff", t.hip_liftoff),
            ("phase.extension", t.extension),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} s must be positive")));
            }
        }
        if !(self.lead_in >= 0.0 && self.tail >= 0.0) {
            return Err(Error::invalid("lead_in/tail", "must be non-negative"));
        }
        if !(self.chair_height > 0.0) {
            return Err(Error::invalid("chair.height", "must be positive"));
        }
        if !(self.trunk_flexion >= 0.0 && self.trunk_flexion < PI / 2.0) {
            return Err(Error::invalid("posture.trunk_flexion", "must lie in [0, π/2)"));
        }
        if !(self.shank_lean.abs() < PI / 4.0) {
            return Err(Error::invalid("posture.shank_lean", "must lie in (-π/4, π/4)"));
        }
        Ok(())
    }
}

/// Quintic segment on `[0, duration]` matching position, velocity and
/// acceleration at both ends.
#[derive(Debug, Clone, Copy)]
struct Quintic {
    c: [f64; 6],
    duration: f64,
}

impl Quintic {
    fn hermite(start: [f64; 3], end: [f64; 3], t: f64) -> Self {
        let [p0, v0, a0] = start;
        let [p1, v1, a1] = end;
        let h0 = p1 - (p0 + v0 * t + 0.5 * a0 * t * t);
        let h1 = v1 - (v0 + a0 * t);
        let h2 = a1 - a0;
        Quintic {
            c: [
                p0,
                v0,
                0.5 * a0,
                (20.0 * h0 - 8.0 * h1 * t + h2 * t * t) / (2.0 * t.powi(3)),
                (-30.0 * h0 + 14.0 * h1 * t - 2.0 * h2 * t * t) / (2.0 * t.powi(4)),
                (12.0 * h0 - 6.0 * h1 * t + h2 * t * t) / (2.0 * t.powi(5)),
            ],
            duration: t,
        }
    }

    /// Position, velocity and acceleration at `t`.
    fn eval(&self, t: f64) -> [f64; 3] {
        let c = &self.c;
        let p = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let v = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let a = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        [p, v, a]
    }
}

/// Knot `[s, ṡ, s̈]` joining the two rise pieces of durations `d1` and `d2`.
fn rise_knot(d1: f64, d2: f64) -> [f64; 3] {
    #[rustfmt::skip]
    let m = Matrix3::new(
        60.0, -36.0 * d1, 9.0 * d1 * d1,
        -60.0, -36.0 * d2, -9.0 * d2 * d2,
        10.0, -4.0 * d1, 0.5 * d1 * d1,
    );
    let rhs = Vector3::new(0.0, -60.0, 0.0);
    let x = m
        .lu()
        .solve(&rhs)
        .expect("rise knot system is regular for positive durations");
    [x[0], x[1], x[2]]
}

struct Profile {
    t0: f64,
    flexion: Quintic,
    rise_a: Quintic,
    rise_b: Quintic,
    t1: f64,
    t2: f64,
    t3: f64,
}

impl Profile {
    fn new(plan: &StsPlan) -> Self {
        let t = &plan.timings;
        let knot = rise_knot(t.hip_liftoff, t.extension);
        Profile {
            t0: plan.lead_in,
            flexion: Quintic::hermite([0.0; 3], [1.0, 0.0, 0.0], t.trunk_flexion),
            rise_a: Quintic::hermite([0.0; 3], knot, t.hip_liftoff),
            rise_b: Quintic::hermite(knot, [1.0, 0.0, 0.0], t.extension),
            t1: t.trunk_flexion,
            t2: t.hip_liftoff,
            t3: t.extension,
        }
    }

    /// (trunk flexion share, rise progress) with their derivatives.
    fn at(&self, time: f64) -> ([f64; 3], [f64; 3]) {
        let x = time - self.t0;
        if x <= 0.0 {
            ([0.0; 3], [0.0; 3])
        } else if x < self.t1 {
            (self.flexion.eval(x), [0.0; 3])
        } else if x < self.t1 + self.t2 {
            ([1.0, 0.0, 0.0], self.rise_a.eval(x - self.t1))
        } else if x < self.t1 + self.t2 + self.t3 {
            let y = (x - self.t1 - self.t2).min(self.rise_b.duration);
            ([1.0, 0.0, 0.0], self.rise_b.eval(y))
        } else {
            ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        }
    }
}

/// Samples a seated-to-upright trajectory at `rate` Hz with exact derivatives.
pub fn generate_sts_trajectory(model: &AnthropometricModel, plan: &StsPlan, rate: f64) -> Result<PoseTrajectory> {
    if !(rate >= 30.0 && rate.is_finite()) {
        return Err(Error::invalid("rate", format!("{rate} Hz below 30 Hz")));
    }
    plan.validate()?;
    let [ps0, pt0, _] = plan.seated_tilts(model)?;
    let flex = plan.trunk_flexion;
    let deepest_hip = PI - (flex - pt0);
    if deepest_hip <= 0.0 {
        return Err(Error::Unreachable(format!(
            "trunk flexion {flex} rad folds the hip shut at this chair height"
        )));
    }

    let profile = Profile::new(plan);
    let n = (plan.duration() * rate).round() as usize;
    let mut timestamps = Vec::with_capacity(n + 1);
    let mut frames = Vec::with_capacity(n + 1);
    let mut vel = Vec::with_capacity(n + 1);
    let mut acc = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let time = k as f64 / rate;
        let ([f, fd, fdd], [s, sd, sdd]) = profile.at(time);
        let r = 1.0 - s;
        // tilts and their derivatives
        let shank = [ps0 * r, -ps0 * sd, -ps0 * sdd];
        let thigh = [pt0 * r, -pt0 * sd, -pt0 * sdd];
        let hat = [
            flex * f * r,
            flex * (fd * r - f * sd),
            flex * (fdd * r - 2.0 * fd * sd - f * sdd),
        ];
        let joint = |d: usize| {
            let base = if d == 0 { PI } else { 0.0 };
            JointAngles {
                trunk_abs: hat[d],
                hip: base - (hat[d] - thigh[d]),
                knee: base - (shank[d] - thigh[d]),
                ankle: base - shank[d],
            }
        };
        timestamps.push(time);
        frames.push(joint(0));
        vel.push(joint(1));
        acc.push(joint(2));
    }
    Ok(PoseTrajectory {
        timestamps,
        frames,
        velocities: vel,
        accelerations: acc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anthro::{default_table, scale_anthropometrics, Subject};
    use crate::kinematics::forward_kinematics;

    fn model() -> AnthropometricModel {
        scale_anthropometrics(&Subject::reference(), &default_table()).unwrap()
    }

    #[test]
    fn knot_for_equal_phases() {
        let [s, v, a] = rise_knot(1.0, 1.0);
        assert!((s - 0.25).abs() < 1e-12);
        assert!((v - 5.0 / 6.0).abs() < 1e-12);
        assert!((a - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn quintic_meets_boundary_conditions() {
        let q = Quintic::hermite([0.2, -1.0, 3.0], [1.5, 0.5, -2.0], 0.7);
        let [p, v, a] = q.eval(0.7);
        assert!((p - 1.5).abs() < 1e-12 && (v - 0.5).abs() < 1e-12 && (a + 2.0).abs() < 1e-10);
    }

    #[test]
    fn starts_at_chair_height_and_ends_upright() {
        let m = model();
        let plan = StsPlan::new(PhaseTimings::new(1.0, 1.0, 1.0));
        let traj = generate_sts_trajectory(&m, &plan, 100.0).unwrap();
        assert_eq!(traj.len(), 301);
        assert_eq!(*traj.timestamps.last().unwrap(), 3.0);
        let first = forward_kinematics(&traj.frames[0], &m);
        assert!((first.hip.y - 0.40).abs() < 1e-12);
        let last = traj.frames.last().unwrap();
        assert_eq!(*last, JointAngles::UPRIGHT);
    }

    #[test]
    fn unreachable_chair() {
        let m = model();
        let mut plan = StsPlan::new(PhaseTimings::new(1.0, 1.0, 1.0));
        plan.chair_height = 3.0;
        let e = generate_sts_trajectory(&m, &plan, 100.0).unwrap_err();
        assert!(e.to_string().contains("unreachable"));
    }

    #[test]
    fn trunk_matches_chain() {
        let m = model();
        let plan = StsPlan::new(PhaseTimings::new(0.9, 0.6, 1.1));
        let traj = generate_sts_trajectory(&m, &plan, 120.0).unwrap();
        for q in &traj.frames {
            assert!((q.tilts()[2] - q.trunk_abs).abs() < 1e-12);
            q.validate().unwrap();
        }
    }
}

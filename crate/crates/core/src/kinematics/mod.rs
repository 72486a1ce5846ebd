//! The four-link sagittal chain.
//!
//! Frame: `x` forward, `z` up, origin on the ground directly below the ankle.
//! A planar vector is stored as [`Vec2`] with `.x` forward and `.y` holding
//! the vertical `z` component.
//!
//! Joint angles are inter-segment angles with π meaning fully extended, so the
//! upright stance is `hip = knee = ankle = π` and `trunk_abs = 0`. Each
//! segment's tilt from vertical (forward positive) follows from the chain:
//!
//! ```text
//! shank = π − ankle
//! thigh = shank − (π − knee)
//! hat   = thigh + (π − hip)
//! ```
//!
//! `trunk_abs` repeats the HAT tilt. Positions use the three joint angles;
//! `trunk_abs` drives only the trunk angular acceleration term.

mod diff;
mod filter;
mod generate;

use std::f64::consts::PI;
use std::io::{Read, Write};

pub use diff::{differentiate, differentiate_with};
pub use filter::LowPass;
pub use generate::{generate_sts_trajectory, PhaseTimings, StsPlan};

use crate::anthro::AnthropometricModel;
use crate::error::{Error, Result};
use crate::table::{self, NumericTable};

pub type Vec2 = nalgebra::Vector2<f64>;

/// Planar vector from forward and vertical components.
pub fn vec2(x: f64, z: f64) -> Vec2 {
    Vec2::new(x, z)
}

/// Scalar moment of `f` applied at lever `r`, counter-clockwise positive.
pub fn cross2(r: &Vec2, f: &Vec2) -> f64 {
    r.x * f.y - r.y * f.x
}

/// Unit vector tilted `phi` from vertical towards +x.
fn tilt_unit(phi: f64) -> Vec2 {
    vec2(phi.sin(), phi.cos())
}

fn tilt_unit_prime(phi: f64) -> Vec2 {
    vec2(phi.cos(), -phi.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointAngles {
    pub trunk_abs: f64,
    pub hip: f64,
    pub knee: f64,
    pub ankle: f64,
}

impl JointAngles {
    pub const UPRIGHT: JointAngles = JointAngles {
        trunk_abs: 0.0,
        hip: PI,
        knee: PI,
        ankle: PI,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.trunk_abs, self.hip, self.knee, self.ankle]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        JointAngles {
            trunk_abs: a[0],
            hip: a[1],
            knee: a[2],
            ankle: a[3],
        }
    }

    /// Forward tilt from vertical of shank, thigh and HAT.
    pub fn tilts(&self) -> [f64; 3] {
        let shank = PI - self.ankle;
        let thigh = shank - (PI - self.knee);
        let hat = thigh + (PI - self.hip);
        [shank, thigh, hat]
    }

    /// Angles whose tilts are `[shank, thigh, hat]`, trunk set to the HAT tilt.
    pub fn from_tilts(t: [f64; 3]) -> Self {
        JointAngles {
            trunk_abs: t[2],
            hip: PI - (t[2] - t[1]),
            knee: PI - (t[0] - t[1]),
            ankle: PI - t[0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hip", self.hip), ("knee", self.knee), ("ankle", self.ankle)] {
            if !(v > 0.0 && v <= PI) {
                return Err(Error::invalid(name, format!("{v} rad outside (0, π]")));
            }
        }
        if !self.trunk_abs.is_finite() {
            return Err(Error::invalid("trunk_abs", "not finite"));
        }
        Ok(())
    }
}

/// Joint-angle samples with their first and second time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory {
    pub timestamps: Vec<f64>,
    pub frames: Vec<JointAngles>,
    pub velocities: Vec<JointAngles>,
    pub accelerations: Vec<JointAngles>,
}

impl PoseTrajectory {
    /// Angles only; derivatives start at zero until [`differentiate`] fills them.
    pub fn new(timestamps: Vec<f64>, frames: Vec<JointAngles>) -> Result<Self> {
        if timestamps.len() != frames.len() {
            return Err(Error::LengthMismatch {
                what: "frames",
                got: frames.len(),
                expected: timestamps.len(),
            });
        }
        check_increasing(&timestamps)?;
        let zeros = vec![JointAngles::default(); frames.len()];
        Ok(PoseTrajectory {
            timestamps,
            frames,
            velocities: zeros.clone(),
            accelerations: zeros,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.timestamps.first(), self.timestamps.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Frames `range` as a new trajectory.
    pub fn slice(&self, range: std::ops::Range<usize>) -> PoseTrajectory {
        PoseTrajectory {
            timestamps: self.timestamps[range.clone()].to_vec(),
            frames: self.frames[range.clone()].to_vec(),
            velocities: self.velocities[range.clone()].to_vec(),
            accelerations: self.accelerations[range].to_vec(),
        }
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut cols: Vec<Vec<f64>> = vec![self.timestamps.clone()];
        for series in [&self.frames, &self.velocities, &self.accelerations] {
            for k in 0..4 {
                cols.push(series.iter().map(|a| a.to_array()[k]).collect());
            }
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        table::write_columns(writer, &CSV_HEADERS, &refs)
    }

    /// Reads `t,trunk,hip,knee,ankle` with optional derivative columns.
    /// Missing derivatives are computed on load.
    pub fn read_csv(source: &str, reader: impl Read) -> Result<Self> {
        let t = NumericTable::read(source, reader)?;
        let time = t.require_finite(source, "t")?.to_vec();
        let mut angle_cols = Vec::new();
        for name in &CSV_HEADERS[1..5] {
            angle_cols.push(t.require_finite(source, name)?);
        }
        let frames: Vec<JointAngles> = (0..time.len())
            .map(|i| JointAngles::from_array(std::array::from_fn(|k| angle_cols[k][i])))
            .collect();
        if let Some(i) = (1..time.len()).find(|&i| time[i] <= time[i - 1]) {
            return Err(table::parse_err(source, i + 2, Some("t"), "timestamps must increase"));
        }
        let has_derivs = CSV_HEADERS[5..].iter().all(|h| t.column(h).is_some());
        let mut traj = PoseTrajectory::new(time, frames)?;
        if has_derivs {
            let mut cols = Vec::new();
            for name in &CSV_HEADERS[5..] {
                cols.push(t.require_finite(source, name)?);
            }
            for (i, (v, a)) in traj.velocities.iter_mut().zip(&mut traj.accelerations).enumerate() {
                *v = JointAngles::from_array(std::array::from_fn(|k| cols[k][i]));
                *a = JointAngles::from_array(std::array::from_fn(|k| cols[4 + k][i]));
            }
            Ok(traj)
        } else {
            differentiate(&traj)
        }
    }
}

const CSV_HEADERS: [&str; 13] = [
    "t", "trunk", "hip", "knee", "ankle", "dtrunk", "dhip", "dknee", "dankle", "ddtrunk", "ddhip", "ddknee", "ddankle",
];

pub(crate) fn check_increasing(t: &[f64]) -> Result<()> {
    for (i, w) in t.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonIncreasingTime { index: i + 1 });
        }
    }
    if let Some(i) = t.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonIncreasingTime { index: i });
    }
    Ok(())
}

/// Joint and mass-centre positions of one frame, plus the HAT motion terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainPose {
    /// Ankle C.
    pub ankle: Vec2,
    /// Knee B.
    pub knee: Vec2,
    /// Hip A.
    pub hip: Vec2,
    pub hat_top: Vec2,
    pub heel: Vec2,
    pub toe: Vec2,
    /// G1 (HAT), G2 (thigh), G3 (shank), G4 (foot).
    pub com: [Vec2; 4],
    /// Forward tilt of shank, thigh and HAT from vertical.
    pub tilts: [f64; 3],
    /// Acceleration of the HAT centre of mass.
    pub hat_com_acc: Vec2,
    /// Trunk angular velocity.
    pub trunk_vel: f64,
    /// Trunk angular acceleration α̈.
    pub trunk_acc: f64,
}

impl ChainPose {
    pub fn ag1(&self) -> Vec2 {
        self.com[0] - self.hip
    }
    pub fn bg2(&self) -> Vec2 {
        self.com[1] - self.knee
    }
    pub fn cg3(&self) -> Vec2 {
        self.com[2] - self.ankle
    }
    pub fn cg4(&self) -> Vec2 {
        self.com[3] - self.ankle
    }
    pub fn ba(&self) -> Vec2 {
        self.hip - self.knee
    }
    pub fn cb(&self) -> Vec2 {
        self.knee - self.ankle
    }

    /// Point `fraction` of the way from hip to HAT top, shifted `lateral`
    /// metres along the forward normal of the HAT axis.
    pub fn point_on_hat(&self, fraction: f64, lateral: f64) -> Vec2 {
        let axis = self.hat_top - self.hip;
        let len = axis.norm();
        let u = if len > 0.0 { axis / len } else { vec2(0.0, 1.0) };
        let normal = vec2(u.y, -u.x);
        self.hip + axis * fraction + normal * lateral
    }
}

/// Positions for a static pose; motion terms are zero.
pub fn forward_kinematics(angles: &JointAngles, model: &AnthropometricModel) -> ChainPose {
    pose_from(angles, &JointAngles::default(), &JointAngles::default(), model)
}

/// Full pose of frame `i`, including HAT acceleration from the derivatives.
pub fn chain_pose(traj: &PoseTrajectory, i: usize, model: &AnthropometricModel) -> ChainPose {
    pose_from(&traj.frames[i], &traj.velocities[i], &traj.accelerations[i], model)
}

pub fn pose_from(q: &JointAngles, qd: &JointAngles, qdd: &JointAngles, model: &AnthropometricModel) -> ChainPose {
    let [ps, pt, ph] = q.tilts();
    // tilt rates follow the same linear map as the tilts
    let rate = |d: &JointAngles| {
        let s = -d.ankle;
        let t = s + d.knee;
        let h = t - d.hip;
        [s, t, h]
    };
    let w = rate(qd);
    let al = rate(qdd);

    let ls = model.shank.length;
    let lt = model.thigh.length;
    let lh = model.hat.length;
    let d1 = model.hat.com_distance();

    let ankle = vec2(0.0, model.ankle_height);
    let knee = ankle + tilt_unit(ps) * ls;
    let hip = knee + tilt_unit(pt) * lt;
    let hat_top = hip + tilt_unit(ph) * lh;

    let heel = vec2(-model.heel_to_ankle, 0.0);
    let toe = vec2(model.foot.length - model.heel_to_ankle, 0.0);

    let g1 = hip + tilt_unit(ph) * d1;
    let g2 = hip + (knee - hip) * model.thigh.com_offset;
    let g3 = knee + (ankle - knee) * model.shank.com_offset;
    let g4 = vec2(heel.x + model.foot.com_distance(), 0.5 * model.ankle_height);

    let acc_term = |len: f64, phi: f64, w: f64, a: f64| (tilt_unit_prime(phi) * a - tilt_unit(phi) * (w * w)) * len;
    let hat_com_acc = acc_term(ls, ps, w[0], al[0]) + acc_term(lt, pt, w[1], al[1]) + acc_term(d1, ph, w[2], al[2]);

    ChainPose {
        ankle,
        knee,
        hip,
        hat_top,
        heel,
        toe,
        com: [g1, g2, g3, g4],
        tilts: [ps, pt, ph],
        hat_com_acc,
        trunk_vel: qd.trunk_abs,
        trunk_acc: qdd.trunk_abs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anthro::{default_table, scale_anthropometrics, Subject};

    fn model() -> AnthropometricModel {
        scale_anthropometrics(&Subject::reference(), &default_table()).unwrap()
    }

    #[test]
    fn upright_is_stacked() {
        let m = model();
        let p = forward_kinematics(&JointAngles::UPRIGHT, &m);
        assert!(p.knee.x.abs() < 1e-15 && p.hip.x.abs() < 1e-15 && p.hat_top.x.abs() < 1e-15);
        let d = (p.hip - p.ankle).norm();
        assert!((d - m.thigh.length - m.shank.length).abs() < 1e-12);
    }

    #[test]
    fn right_angle_seat_puts_hip_at_shank_height() {
        let m = model();
        // vertical shank, horizontal thigh pointing back from the knee
        let q = JointAngles::from_tilts([0.0, -PI / 2.0, 0.0]);
        assert!((q.knee - PI / 2.0).abs() < 1e-15);
        let p = forward_kinematics(&q, &m);
        assert!((p.hip.y - p.knee.y).abs() < 1e-12);
        assert!((p.hip.y - (m.ankle_height + m.shank.length)).abs() < 1e-12);
    }

    #[test]
    fn tilts_round_trip() {
        let q = JointAngles {
            trunk_abs: 0.3,
            hip: 1.2,
            knee: 1.9,
            ankle: 2.8,
        };
        let back = JointAngles::from_tilts(q.tilts());
        for (a, b) in back.to_array()[1..].iter().zip(&q.to_array()[1..]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_without_derivatives_computes_them() {
        let text =
            "t,trunk,hip,knee,ankle\n0,0,3,3,3\n0.01,0.01,3,3,3\n0.02,0.02,3,3,3\n0.03,0.03,3,3,3\n0.04,0.04,3,3,3\n";
        let traj = PoseTrajectory::read_csv("tr.csv", text.as_bytes()).unwrap();
        for v in &traj.velocities {
            assert!((v.trunk_abs - 1.0).abs() < 1e-9);
        }
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let again = PoseTrajectory::read_csv("tr.csv", buf.as_slice()).unwrap();
        assert_eq!(again, traj);
    }
}

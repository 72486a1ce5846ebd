//! Segment-by-segment inverse dynamics with an external cane force.
//!
//! Moments are the scalar `z·(r × F)` of the planar frame (x forward, z up),
//! so counter-clockwise, i.e. backward rotation in a right-facing sagittal
//! view, is positive. `G1..G4` are the segment weights (pointing down).
//! `F_t`, `F_l` and `F_a` are the forces transmitted through hip, knee and
//! ankle. `τ1..τ3` are the joint torques at hip, knee and ankle.
//!
//! HAT (only body with inertia):
//!
//! ```text
//! F_t = m1·a − F_s − G1
//! τ1  = J1·α̈ + AG1 × m1·a − AG1 × G1 − AS × F_s
//! ```
//!
//! Thigh, shank and foot are quasi-static:
//!
//! ```text
//! τ2  = τ1 − BG2 × G2 + BA × F_t          F_l = F_t − G2
//! τ3  = τ2 − CG3 × G3 + CB × F_l          F_a = F_l − G3
//! F_g = F_a − G4     M_c = CP × F_g       M_plate = τ3 − CG4 × G4 − M_c
//! ```
//!
//! so that `F_g + F_s + ΣG − m1·a = 0` for every frame.

use std::io::Write;

use crate::anthro::AnthropometricModel;
use crate::error::{Error, Result};
use crate::kinematics::{chain_pose, cross2, vec2, ChainPose, PoseTrajectory, Vec2};
use crate::table;

/// Default attachment: share of HAT length above the hip.
pub const DEFAULT_ATTACH_FRACTION: f64 = 0.6;

/// Where the cane pushes on the HAT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attachment {
    /// Share of HAT length from the hip.
    pub fraction: f64,
    /// Offset along the forward normal of the HAT axis, m.
    pub lateral: f64,
}

impl Default for Attachment {
    fn default() -> Self {
        Attachment {
            fraction: DEFAULT_ATTACH_FRACTION,
            lateral: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaneForce {
    /// N, never negative.
    pub magnitude: f64,
    /// Unit vector of the push on the body.
    pub direction: Vec2,
    pub attach: Attachment,
}

impl CaneForce {
    pub fn zero() -> Self {
        CaneForce::vertical(0.0)
    }

    /// Straight up at the default attachment.
    pub fn vertical(magnitude: f64) -> Self {
        CaneForce {
            magnitude,
            direction: vec2(0.0, 1.0),
            attach: Attachment::default(),
        }
    }

    /// Push tilted `tilt` rad forward of vertical.
    pub fn tilted(magnitude: f64, tilt: f64, attach: Attachment) -> Self {
        CaneForce {
            magnitude,
            direction: vec2(tilt.sin(), tilt.cos()),
            attach,
        }
    }

    pub fn force(&self) -> Vec2 {
        self.direction * self.magnitude
    }

    pub fn point(&self, pose: &ChainPose) -> Vec2 {
        pose.point_on_hat(self.attach.fraction, self.attach.lateral)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude >= 0.0 && self.magnitude.is_finite()) {
            return Err(Error::invalid("cane.magnitude", "must be finite and non-negative"));
        }
        if (self.direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("cane.direction", "must be a unit vector"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentLoads {
    pub tau_hip: f64,
    pub tau_knee: f64,
    pub tau_ankle: f64,
    pub f_t: Vec2,
    pub f_l: Vec2,
    pub f_a: Vec2,
    pub f_g: Vec2,
    pub m_c: f64,
    pub m_plate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsFrame {
    pub pose: ChainPose,
    pub cane: CaneForce,
    pub loads: SegmentLoads,
    /// Centre of pressure used for `M_c`.
    pub cop: Vec2,
    /// Norm of `F_g + F_s + ΣG − m1·a`.
    pub residual: f64,
    /// Centre of pressure outside the heel–toe span.
    pub tipping: bool,
}

fn weight(mass: f64, model: &AnthropometricModel) -> Vec2 {
    vec2(0.0, -mass * model.gravity)
}

/// Hip torque and hip transmission force from the HAT.
pub fn hat_balance(pose: &ChainPose, cane: &CaneForce, model: &AnthropometricModel) -> (f64, Vec2) {
    let m1 = model.hat.mass;
    let g1 = weight(m1, model);
    let fs = cane.force();
    let inertial = pose.hat_com_acc * m1;
    let f_t = inertial - fs - g1;
    let ag1 = pose.ag1();
    let as_ = cane.point(pose) - pose.hip;
    let tau1 =
        model.hat.inertia_sagittal * pose.trunk_acc + cross2(&ag1, &inertial) - cross2(&ag1, &g1) - cross2(&as_, &fs);
    (tau1, f_t)
}

/// Knee torque and knee transmission force.
pub fn thigh_balance(pose: &ChainPose, tau1: f64, f_t: Vec2, model: &AnthropometricModel) -> (f64, Vec2) {
    let g2 = weight(model.thigh.mass, model);
    let tau2 = tau1 - cross2(&pose.bg2(), &g2) + cross2(&pose.ba(), &f_t);
    (tau2, f_t - g2)
}

/// Ankle torque and ankle transmission force.
pub fn shank_balance(pose: &ChainPose, tau2: f64, f_l: Vec2, model: &AnthropometricModel) -> (f64, Vec2) {
    let g3 = weight(model.shank.mass, model);
    let tau3 = tau2 - cross2(&pose.cg3(), &g3) + cross2(&pose.cb(), &f_l);
    (tau3, f_l - g3)
}

/// Ground reaction, its moment about the ankle and the leftover plate moment.
pub fn foot_closure(
    pose: &ChainPose,
    tau3: f64,
    f_a: Vec2,
    model: &AnthropometricModel,
    cop: Vec2,
) -> (Vec2, f64, f64) {
    let g4 = weight(model.foot.mass, model);
    let f_g = f_a - g4;
    let m_c = cross2(&(cop - pose.ankle), &f_g);
    let m_plate = tau3 - cross2(&pose.cg4(), &g4) - m_c;
    (f_g, m_c, m_plate)
}

/// The ground point below the ankle.
pub fn default_cop(pose: &ChainPose) -> Vec2 {
    vec2(pose.ankle.x, 0.0)
}

/// Forward position of the centre of pressure that leaves no plate moment.
pub fn implied_cop_x(pose: &ChainPose, loads: &SegmentLoads, model: &AnthropometricModel) -> Option<f64> {
    if loads.f_g.y.abs() < 1e-9 {
        return None;
    }
    let g4 = weight(model.foot.mass, model);
    let m = loads.tau_ankle - cross2(&pose.cg4(), &g4);
    // m = (P − C) × F_g with P on the ground
    let dz = -pose.ankle.y;
    Some(pose.ankle.x + (m + dz * loads.f_g.x) / loads.f_g.y)
}

/// All four balances for one pose.
pub fn solve_frame(
    pose: &ChainPose,
    cane: &CaneForce,
    model: &AnthropometricModel,
    cop: Option<Vec2>,
) -> DynamicsFrame {
    let (tau_hip, f_t) = hat_balance(pose, cane, model);
    let (tau_knee, f_l) = thigh_balance(pose, tau_hip, f_t, model);
    let (tau_ankle, f_a) = shank_balance(pose, tau_knee, f_l, model);
    let cop = cop.unwrap_or_else(|| default_cop(pose));
    let (f_g, m_c, m_plate) = foot_closure(pose, tau_ankle, f_a, model, cop);
    let loads = SegmentLoads {
        tau_hip,
        tau_knee,
        tau_ankle,
        f_t,
        f_l,
        f_a,
        f_g,
        m_c,
        m_plate,
    };
    let weights = weight(model.segment_mass_sum(), model);
    let residual = (f_g + cane.force() + weights - pose.hat_com_acc * model.hat.mass).norm();
    let tipping = cop.x < pose.heel.x || cop.x > pose.toe.x;
    DynamicsFrame {
        pose: *pose,
        cane: *cane,
        loads,
        cop,
        residual,
        tipping,
    }
}

/// Cane input for [`inverse_dynamics`].
#[derive(Debug, Clone, PartialEq)]
pub enum CaneProfile {
    Zero,
    PerFrame(Vec<CaneForce>),
}

/// Solves every frame of `traj`.
pub fn inverse_dynamics(
    traj: &PoseTrajectory,
    cane: &CaneProfile,
    model: &AnthropometricModel,
) -> Result<Vec<DynamicsFrame>> {
    if let CaneProfile::PerFrame(v) = cane {
        if v.len() != traj.len() {
            return Err(Error::LengthMismatch {
                what: "cane profile",
                got: v.len(),
                expected: traj.len(),
            });
        }
        for c in v {
            c.validate()?;
        }
    }
    Ok((0..traj.len())
        .map(|i| {
            let pose = chain_pose(traj, i, model);
            let c = match cane {
                CaneProfile::Zero => CaneForce::zero(),
                CaneProfile::PerFrame(v) => v[i],
            };
            solve_frame(&pose, &c, model, None)
        })
        .collect())
}

pub const LOADS_HEADERS: [&str; 14] = [
    "t",
    "tau_hip",
    "tau_knee",
    "tau_ankle",
    "Ftx",
    "Ftz",
    "Flx",
    "Flz",
    "Fax",
    "Faz",
    "Fgx",
    "Fgz",
    "Mc",
    "residual",
];

pub fn write_loads_csv(writer: impl Write, timestamps: &[f64], frames: &[DynamicsFrame]) -> Result<()> {
    let col = |f: &dyn Fn(&DynamicsFrame) -> f64| frames.iter().map(f).collect::<Vec<f64>>();
    let cols = [
        timestamps.to_vec(),
        col(&|d| d.loads.tau_hip),
        col(&|d| d.loads.tau_knee),
        col(&|d| d.loads.tau_ankle),
        col(&|d| d.loads.f_t.x),
        col(&|d| d.loads.f_t.y),
        col(&|d| d.loads.f_l.x),
        col(&|d| d.loads.f_l.y),
        col(&|d| d.loads.f_a.x),
        col(&|d| d.loads.f_a.y),
        col(&|d| d.loads.f_g.x),
        col(&|d| d.loads.f_g.y),
        col(&|d| d.loads.m_c),
        col(&|d| d.residual),
    ];
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    table::write_columns(writer, &LOADS_HEADERS, &refs)
}

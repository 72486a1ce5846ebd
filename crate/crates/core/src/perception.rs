//! Skeleton frames to sagittal joint angles.
//!
//! Input frames carry 3-D joint positions (m) and per-joint confidences from
//! a body tracker. Five roles are needed: shoulder centre, hip (pelvis), knee,
//! ankle and foot. A role resolves to its own joint name, an alias, or the
//! midpoint of its `_left`/`_right` pair.
//!
//! The sagittal plane is fitted once over a batch. Each frame is then
//! projected onto it independently. In-plane axes are "up" (the world
//! vertical projected into the plane) and "forward" = normal × up, with the
//! normal oriented so the feet point forward.
//!
//! Angles follow the model conventions: hip and knee are unsigned
//! inter-segment angles, trunk_abs is the signed trunk tilt from up (forward
//! positive) and the chain ankle angle is π minus the signed shank tilt, which
//! assumes the foot flat on the ground. The raw shank-to-foot angle is kept as
//! `ankle_anatomical`.

use std::collections::BTreeMap;
use std::io::BufRead;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::{vec2, JointAngles, LowPass, PoseTrajectory, Vec2};
use crate::table::parse_err;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub position: Vec3,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkeletonFrame {
    pub timestamp: f64,
    pub joints: BTreeMap<String, Joint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Shoulder,
    Hip,
    Knee,
    Ankle,
    Foot,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Shoulder, Role::Hip, Role::Knee, Role::Ankle, Role::Foot];

    fn names(self) -> (&'static [&'static str], &'static str) {
        match self {
            Role::Shoulder => (&["shoulder_center", "neck"], "shoulder"),
            Role::Hip => (&["hip", "pelvis"], "hip"),
            Role::Knee => (&["knee"], "knee"),
            Role::Ankle => (&["ankle"], "ankle"),
            Role::Foot => (&["foot"], "foot"),
        }
    }

    pub fn name(self) -> &'static str {
        self.names().0[0]
    }
}

impl SkeletonFrame {
    pub fn new(timestamp: f64) -> Self {
        SkeletonFrame {
            timestamp,
            joints: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, position: Vec3, confidence: f64) -> Self {
        self.joints.insert(name.to_string(), Joint { position, confidence });
        self
    }

    pub fn resolve(&self, role: Role) -> Option<Joint> {
        let (names, stem) = role.names();
        for n in names {
            if let Some(j) = self.joints.get(*n) {
                return Some(*j);
            }
        }
        let l = self.joints.get(&format!("{stem}_left"))?;
        let r = self.joints.get(&format!("{stem}_right"))?;
        Some(Joint {
            position: (l.position + r.position) * 0.5,
            confidence: l.confidence.min(r.confidence),
        })
    }

    fn required(&self) -> Result<[Joint; 5]> {
        let mut out = [Joint {
            position: Vec3::zeros(),
            confidence: 0.0,
        }; 5];
        for (k, role) in Role::ALL.into_iter().enumerate() {
            let j = self.resolve(role).ok_or_else(|| {
                Error::invalid(
                    format!("joint '{}'", role.name()),
                    format!("missing from frame at t = {}", self.timestamp),
                )
            })?;
            if !j.position.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(
                    format!("joint '{}'", role.name()),
                    format!("non-finite position at t = {}", self.timestamp),
                ));
            }
            out[k] = j;
        }
        Ok(out)
    }

    /// One record line: `t name:x,y,z,conf ...`.
    pub fn to_record(&self) -> String {
        let mut s = format!("{:?}", self.timestamp);
        for (name, j) in &self.joints {
            let p = j.position;
            s.push_str(&format!(" {name}:{:?},{:?},{:?},{:?}", p.x, p.y, p.z, j.confidence));
        }
        s
    }
}

/// Parses one record line. `None` for blank and comment lines.
pub fn parse_record(source: &str, line_no: usize, line: &str) -> Result<Option<SkeletonFrame>> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let mut tokens = body.split_whitespace();
    let t_tok = tokens.next().expect("non-empty");
    let timestamp: f64 = t_tok
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| parse_err(source, line_no, Some("t"), format!("'{t_tok}' is not a time")))?;
    let mut frame = SkeletonFrame::new(timestamp);
    for tok in tokens {
        let (name, rest) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(source, line_no, None, format!("'{tok}' is not name:x,y,z,conf")))?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(source, line_no, Some(name), format!("bad numbers in '{rest}'")))?;
        if nums.len() != 4 || !nums.iter().all(|v| v.is_finite()) {
            return Err(parse_err(
                source,
                line_no,
                Some(name),
                "expected four finite numbers x,y,z,conf",
            ));
        }
        if !(0.0..=1.0).contains(&nums[3]) {
            return Err(parse_err(source, line_no, Some(name), "confidence outside [0, 1]"));
        }
        let name = name.to_ascii_lowercase();
        if frame.joints.contains_key(&name) {
            return Err(parse_err(source, line_no, Some(&name), "joint repeated"));
        }
        frame = frame.with(&name, Vec3::new(nums[0], nums[1], nums[2]), nums[3]);
    }
    Ok(Some(frame))
}

/// Streams frames from a record source.
pub struct SkeletonReader<R> {
    source: String,
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> SkeletonReader<R> {
    pub fn new(source: &str, reader: R) -> Self {
        SkeletonReader {
            source: source.to_string(),
            lines: reader.lines(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for SkeletonReader<R> {
    type Item = Result<SkeletonFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            match parse_record(&self.source, self.line_no, &line) {
                Ok(Some(f)) => return Some(Ok(f)),
                Ok(None) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn read_skeleton(source: &str, reader: impl BufRead) -> Result<Vec<SkeletonFrame>> {
    SkeletonReader::new(source, reader).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagittalPlane {
    pub origin: Vec3,
    /// Unit normal, oriented so that `forward = normal × up`.
    pub normal: Vec3,
    /// World vertical projected into the plane.
    pub up: Vec3,
    pub forward: Vec3,
}

impl SagittalPlane {
    /// Plane through `origin` with the given normal; `world_up` fixes the
    /// in-plane vertical.
    pub fn new(origin: Vec3, normal: Vec3, world_up: Vec3) -> Result<Self> {
        let n = normal
            .try_normalize(1e-12)
            .ok_or_else(|| Error::invalid("plane.normal", "zero vector"))?;
        let up = (world_up - n * world_up.dot(&n))
            .try_normalize(1e-9)
            .ok_or_else(|| Error::invalid("plane.normal", "parallel to vertical"))?;
        Ok(SagittalPlane {
            origin,
            normal: n,
            up,
            forward: n.cross(&up),
        })
    }

    pub fn flipped(&self) -> Self {
        SagittalPlane {
            normal: -self.normal,
            forward: -self.forward,
            ..*self
        }
    }

    /// Orthogonal projection onto the plane, in 3-D.
    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * (p - self.origin).dot(&self.normal)
    }

    /// In-plane coordinates (forward, up).
    pub fn coords(&self, p: &Vec3) -> Vec2 {
        let d = p - self.origin;
        vec2(d.dot(&self.forward), d.dot(&self.up))
    }
}

pub const MIN_PLANE_FRAMES: usize = 10;

/// Fits the sagittal plane with +z as world vertical.
pub fn fit_sagittal_plane(frames: &[SkeletonFrame]) -> Result<SagittalPlane> {
    fit_sagittal_plane_with(frames, Vec3::z())
}

pub fn fit_sagittal_plane_with(frames: &[SkeletonFrame], world_up: Vec3) -> Result<SagittalPlane> {
    if frames.len() < MIN_PLANE_FRAMES {
        return Err(Error::TooFewFrames {
            needed: MIN_PLANE_FRAMES,
            got: frames.len(),
        });
    }
    let up = world_up
        .try_normalize(1e-12)
        .ok_or_else(|| Error::invalid("up", "zero vector"))?;
    let joints: Vec<[Joint; 5]> = frames.iter().map(SkeletonFrame::required).collect::<Result<_>>()?;
    let count = (joints.len() * 5) as f64;
    let origin = joints.iter().flat_map(|js| js.iter().map(|j| j.position)).sum::<Vec3>() / count;

    let normal = match pair_direction(frames, &up) {
        Some(n) => n,
        None => least_variance_direction(&joints, &up)?,
    };
    let plane = SagittalPlane::new(origin, normal, up)?;

    let foot_forward: f64 = joints
        .iter()
        .map(|js| (js[4].position - js[3].position).dot(&plane.forward))
        .sum();
    Ok(if foot_forward < 0.0 { plane.flipped() } else { plane })
}

fn horizontal(v: &Vec3, up: &Vec3) -> Vec3 {
    v - up * v.dot(up)
}

fn pair_direction(frames: &[SkeletonFrame], up: &Vec3) -> Option<Vec3> {
    let stems = ["shoulder", "hip", "knee", "ankle", "foot"];
    let mut sum = Vec3::zeros();
    let mut pairs = 0usize;
    for f in frames {
        for s in stems {
            let (Some(l), Some(r)) = (f.joints.get(&format!("{s}_left")), f.joints.get(&format!("{s}_right"))) else {
                continue;
            };
            sum += horizontal(&(r.position - l.position), up);
            pairs += 1;
        }
    }
    if pairs == 0 || sum.norm() < 1e-6 * pairs as f64 {
        return None;
    }
    sum.try_normalize(1e-12)
}

fn least_variance_direction(joints: &[[Joint; 5]], up: &Vec3) -> Result<Vec3> {
    let n = joints.len() as f64;
    let mut cov = Matrix3::zeros();
    for k in 0..5 {
        let mean = joints.iter().map(|js| js[k].position).sum::<Vec3>() / n;
        for js in joints {
            let d = js[k].position - mean;
            cov += d * d.transpose();
        }
    }
    cov /= n * 5.0;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let [l0, l1, l2] = order.map(|i| eig.eigenvalues[i]);
    if l2 <= 1e-12 {
        return Err(Error::DegeneratePlane("joints do not move".into()));
    }
    if l1 <= 1e-6 * l2 {
        return Err(Error::DegeneratePlane("joint motion is collinear".into()));
    }
    if l0 > 0.5 * l1 {
        return Err(Error::DegeneratePlane("no dominant plane of motion".into()));
    }
    let least: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
    let h = horizontal(&least, up);
    if h.norm() < 0.5 {
        return Err(Error::DegeneratePlane("motion lies in a horizontal plane".into()));
    }
    Ok(h.normalize())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleConfig {
    /// Joints below this confidence flag the frame.
    pub confidence_threshold: f64,
}

impl Default for AngleConfig {
    fn default() -> Self {
        AngleConfig {
            confidence_threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SagittalFrame {
    pub timestamp: f64,
    /// Shoulder, hip, knee, ankle, foot in plane coordinates (forward, up).
    pub points: [Vec2; 5],
    pub angles: JointAngles,
    /// Angle between shank (ankle→knee) and foot (ankle→foot) vectors.
    pub ankle_anatomical: f64,
    /// Roles whose confidence fell below the threshold.
    pub low_confidence: Vec<Role>,
}

impl SagittalFrame {
    pub fn is_flagged(&self) -> bool {
        !self.low_confidence.is_empty()
    }
}

fn angle_between(a: &Vec2, b: &Vec2) -> f64 {
    (a.x * b.y - a.y * b.x).abs().atan2(a.dot(b))
}

/// Signed tilt of `v` from in-plane up, forward positive.
fn tilt(v: &Vec2) -> f64 {
    v.x.atan2(v.y)
}

pub fn project_and_angles(frame: &SkeletonFrame, plane: &SagittalPlane) -> Result<SagittalFrame> {
    project_and_angles_with(frame, plane, &AngleConfig::default())
}

pub fn project_and_angles_with(
    frame: &SkeletonFrame,
    plane: &SagittalPlane,
    cfg: &AngleConfig,
) -> Result<SagittalFrame> {
    let joints = frame.required()?;
    let points = joints.map(|j| plane.coords(&j.position));
    let [sh, hp, kn, an, ft] = points;
    let hip = angle_between(&(sh - hp), &(kn - hp));
    let knee = angle_between(&(hp - kn), &(an - kn));
    let ankle_anatomical = angle_between(&(kn - an), &(ft - an));
    let angles = JointAngles {
        trunk_abs: tilt(&(sh - hp)),
        hip,
        knee,
        ankle: std::f64::consts::PI - tilt(&(kn - an)),
    };
    let low_confidence = Role::ALL
        .into_iter()
        .zip(joints)
        .filter(|(_, j)| j.confidence < cfg.confidence_threshold)
        .map(|(r, _)| r)
        .collect();
    Ok(SagittalFrame {
        timestamp: frame.timestamp,
        points,
        angles,
        ankle_anatomical,
        low_confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    /// Longest tolerated run without a usable frame, s.
    pub max_gap: f64,
    pub smoothing: Option<LowPass>,
    /// Chain ankle angle to use when only ankle or foot confidence is low.
    /// Without it such frames are dropped and bridged like any other gap.
    pub ankle_prior: Option<f64>,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            max_gap: 0.25,
            smoothing: Some(LowPass::default()),
            ankle_prior: None,
        }
    }
}

pub const MIN_VALID_FRAMES: usize = 5;

pub fn smooth_and_resample(frames: &[SagittalFrame], rate: f64) -> Result<PoseTrajectory> {
    smooth_and_resample_with(frames, rate, &ResampleConfig::default())
}

pub fn smooth_and_resample_with(frames: &[SagittalFrame], rate: f64, cfg: &ResampleConfig) -> Result<PoseTrajectory> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid("rate", "must be positive"));
    }
    let mut t = Vec::new();
    let mut q: Vec<[f64; 4]> = Vec::new();
    for f in frames {
        let ankle_only = f.low_confidence.iter().all(|r| matches!(r, Role::Ankle | Role::Foot));
        let mut a = f.angles;
        if f.is_flagged() {
            match (ankle_only, cfg.ankle_prior) {
                (true, Some(prior)) => a.ankle = prior,
                _ => continue,
            }
        }
        t.push(f.timestamp);
        q.push(a.to_array());
    }
    if t.len() < MIN_VALID_FRAMES {
        return Err(Error::TooFewFrames {
            needed: MIN_VALID_FRAMES,
            got: t.len(),
        });
    }
    crate::kinematics::check_increasing(&t)?;
    if let Some(w) = t.windows(2).find(|w| w[1] - w[0] > cfg.max_gap) {
        return Err(Error::Gap {
            from: w[0],
            to: w[1],
            limit: cfg.max_gap,
        });
    }

    let t0 = t[0];
    let n = ((t[t.len() - 1] - t0) * rate + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|k| t0 + k as f64 / rate).collect();
    let mut channels: [Vec<f64>; 4] = Default::default();
    let mut j = 0;
    for &x in &grid {
        while j + 2 < t.len() && t[j + 1] <= x {
            j += 1;
        }
        let w = ((x - t[j]) / (t[j + 1] - t[j])).clamp(0.0, 1.0);
        for k in 0..4 {
            channels[k].push(q[j][k] + w * (q[j + 1][k] - q[j][k]));
        }
    }
    if let Some(lp) = cfg.smoothing {
        for ch in channels.iter_mut() {
            *ch = lp.apply(ch, rate)?;
        }
    }
    let frames: Vec<JointAngles> = (0..n)
        .map(|i| JointAngles::from_array(std::array::from_fn(|k| channels[k][i])))
        .collect();
    crate::kinematics::differentiate(&PoseTrajectory::new(grid, frames)?)
}

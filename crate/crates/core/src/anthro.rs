//! Subject-scaled segment parameters for the four-link sagittal model.
//!
//! Fractions come from de Leva (1996), "Adjustments to Zatsiorsky-Seluyanov's
//! segment inertia parameters", Table 4: mass as a share of body mass,
//! longitudinal length over stature (1741 mm male, 1735 mm female), centre of
//! mass as a share of length from the proximal end, and the sagittal radius of
//! gyration as a share of length.
//!
//! The model has four bodies. HAT (head, arms, trunk) is one rigid body hinged
//! at the hip. Thigh, shank and foot are bilateral: left and right are summed
//! into a single planar segment, so their masses and inertias are twice the
//! single-limb values.
//!
//! The HAT composite is built from the head, trunk and both arms with the arms
//! folded across the chest: the upper arm hangs from the shoulder and the
//! forearm and hand sit at elbow height. Its length runs from the hip to the
//! vertex. Centre-of-mass reference ends are the hip for HAT and thigh, the
//! knee for the shank and the heel for the foot.

use crate::config::{self, KeyValues};
use crate::error::{Error, Result};

/// Standard gravity used unless a model overrides it.
pub const GRAVITY: f64 = 9.81;

/// Share of stature at which the cane attaches under the arm.
pub const SHOULDER_HEIGHT_FRACTION: f64 = 0.53;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sex {
    Male,
    Female,
}

impl std::str::FromStr for Sex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Sex::Male),
            "female" | "f" => Ok(Sex::Female),
            other => Err(format!("'{other}' is not male or female")),
        }
    }
}

impl std::fmt::Display for Sex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sex::Male => "male",
            Sex::Female => "female",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subject {
    /// Stature, m.
    pub height: f64,
    /// Body mass, kg.
    pub mass: f64,
    pub sex: Sex,
}

impl Subject {
    /// The 173.4 cm, 88.3 kg male used throughout the cane design.
    pub fn reference() -> Self {
        Subject {
            height: 1.734,
            mass: 88.3,
            sex: Sex::Male,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height > 0.5 && self.height < 2.5) {
            return Err(Error::invalid(
                "subject.height",
                format!("{} m outside (0.5, 2.5) m", self.height),
            ));
        }
        if !(self.mass > 20.0 && self.mass < 250.0) {
            return Err(Error::invalid(
                "subject.mass",
                format!("{} kg outside (20, 250) kg", self.mass),
            ));
        }
        Ok(())
    }
}

/// Dimensionless fractions for one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFractions {
    pub mass_fraction: f64,
    pub length_fraction: f64,
    pub com_fraction: f64,
    pub gyration_fraction: f64,
}

/// Where the ankle sits on the foot, as fractions of stature and foot length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootFractions {
    pub ankle_height_fraction: f64,
    pub ankle_position_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnthroTable {
    pub hat: SegmentFractions,
    pub thigh: SegmentFractions,
    pub shank: SegmentFractions,
    pub foot: SegmentFractions,
    pub foot_geometry: FootFractions,
}

pub const SEGMENT_NAMES: [&str; 4] = ["hat", "thigh", "shank", "foot"];
const FIELD_NAMES: [&str; 4] = ["mass_fraction", "length_fraction", "com_fraction", "gyration_fraction"];

// One de Leva row: mass %, length mm, CM % from proximal, sagittal r %.
#[derive(Clone, Copy)]
struct Row {
    mass: f64,
    length: f64,
    com: f64,
    r_sag: f64,
}

const fn row(mass: f64, length: f64, com: f64, r_sag: f64) -> Row {
    Row {
        mass,
        length,
        com,
        r_sag,
    }
}

struct DeLeva {
    stature: f64,
    head: Row,
    trunk: Row,
    upper_arm: Row,
    forearm: Row,
    hand: Row,
    thigh: Row,
    shank: Row,
    foot: Row,
}

const DE_LEVA_MALE: DeLeva = DeLeva {
    stature: 1741.0,
    head: row(6.94, 203.3, 59.76, 36.2),
    trunk: row(43.46, 603.3, 44.86, 37.2),
    upper_arm: row(2.71, 281.7, 57.72, 28.5),
    forearm: row(1.62, 268.9, 45.74, 27.6),
    hand: row(0.61, 86.2, 79.00, 62.8),
    thigh: row(14.16, 422.2, 40.95, 32.9),
    shank: row(4.33, 434.0, 44.59, 25.5),
    foot: row(1.37, 258.1, 44.15, 25.7),
};

const DE_LEVA_FEMALE: DeLeva = DeLeva {
    stature: 1735.0,
    head: row(6.68, 200.2, 58.94, 33.0),
    trunk: row(42.57, 529.3, 41.51, 35.7),
    upper_arm: row(2.55, 275.1, 57.54, 27.8),
    forearm: row(1.38, 264.3, 45.59, 26.1),
    hand: row(0.56, 78.0, 74.74, 53.1),
    thigh: row(14.78, 368.5, 36.12, 36.9),
    shank: row(4.81, 432.3, 44.16, 27.1),
    foot: row(1.29, 228.3, 40.14, 29.9),
};

const DEFAULT_FOOT: FootFractions = FootFractions {
    ankle_height_fraction: 0.039,
    ankle_position_fraction: 0.25,
};

fn bilateral(r: Row, stature: f64) -> SegmentFractions {
    SegmentFractions {
        mass_fraction: 2.0 * r.mass / 100.0,
        length_fraction: r.length / stature,
        com_fraction: r.com / 100.0,
        gyration_fraction: r.r_sag / 100.0,
    }
}

fn hat_composite(d: &DeLeva, lower_mass: f64) -> SegmentFractions {
    let s = d.stature;
    let l_trunk = d.trunk.length / s;
    let l_head = d.head.length / s;
    let l_ua = d.upper_arm.length / s;
    // (mass, height above hip, own length, own gyration fraction)
    let parts = [
        (
            d.trunk.mass,
            l_trunk * (1.0 - d.trunk.com / 100.0),
            l_trunk,
            d.trunk.r_sag,
        ),
        (
            d.head.mass,
            l_trunk + l_head * (1.0 - d.head.com / 100.0),
            l_head,
            d.head.r_sag,
        ),
        (
            2.0 * d.upper_arm.mass,
            l_trunk - l_ua * d.upper_arm.com / 100.0,
            l_ua,
            d.upper_arm.r_sag,
        ),
        (
            2.0 * d.forearm.mass,
            l_trunk - l_ua,
            d.forearm.length / s,
            d.forearm.r_sag,
        ),
        (2.0 * d.hand.mass, l_trunk - l_ua, d.hand.length / s, d.hand.r_sag),
    ];
    let m: f64 = parts.iter().map(|p| p.0).sum();
    let z: f64 = parts.iter().map(|p| p.0 * p.1).sum::<f64>() / m;
    let inertia: f64 = parts
        .iter()
        .map(|&(mi, zi, li, ri)| mi * ((ri / 100.0 * li).powi(2) + (zi - z).powi(2)))
        .sum();
    let length = l_trunk + l_head;
    SegmentFractions {
        mass_fraction: 1.0 - lower_mass,
        length_fraction: length,
        com_fraction: z / length,
        gyration_fraction: (inertia / m).sqrt() / length,
    }
}

impl AnthroTable {
    /// de Leva (1996) adjusted fractions for the given sex.
    pub fn de_leva(sex: Sex) -> Self {
        let d = match sex {
            Sex::Male => &DE_LEVA_MALE,
            Sex::Female => &DE_LEVA_FEMALE,
        };
        let thigh = bilateral(d.thigh, d.stature);
        let shank = bilateral(d.shank, d.stature);
        let foot = bilateral(d.foot, d.stature);
        let lower = thigh.mass_fraction + shank.mass_fraction + foot.mass_fraction;
        AnthroTable {
            hat: hat_composite(d, lower),
            thigh,
            shank,
            foot,
            foot_geometry: DEFAULT_FOOT,
        }
    }

    pub fn segment(&self, name: &str) -> Option<&SegmentFractions> {
        match name {
            "hat" => Some(&self.hat),
            "thigh" => Some(&self.thigh),
            "shank" => Some(&self.shank),
            "foot" => Some(&self.foot),
            _ => None,
        }
    }

    fn segment_mut(&mut self, name: &str) -> Option<&mut SegmentFractions> {
        match name {
            "hat" => Some(&mut self.hat),
            "thigh" => Some(&mut self.thigh),
            "shank" => Some(&mut self.shank),
            "foot" => Some(&mut self.foot),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for name in SEGMENT_NAMES {
            let s = self.segment(name).expect("known segment");
            let field = |f: &str| format!("segment.{name}.{f}");
            if !(s.mass_fraction >= 0.0 && s.mass_fraction <= 1.0) {
                return Err(Error::invalid(field("mass_fraction"), "must lie in [0, 1]"));
            }
            if !(s.length_fraction > 0.0 && s.length_fraction < 1.0) {
                return Err(Error::invalid(field("length_fraction"), "must lie in (0, 1)"));
            }
            if !(0.0..=1.0).contains(&s.com_fraction) {
                return Err(Error::invalid(field("com_fraction"), "must lie in [0, 1]"));
            }
            if !(s.gyration_fraction >= 0.0 && s.gyration_fraction.is_finite()) {
                return Err(Error::invalid(field("gyration_fraction"), "must be >= 0"));
            }
            sum += s.mass_fraction;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "segment.*.mass_fraction",
                format!("fractions sum to {sum}, expected 1"),
            ));
        }
        let g = &self.foot_geometry;
        if !(g.ankle_height_fraction > 0.0 && g.ankle_height_fraction < 0.2) {
            return Err(Error::invalid("foot.ankle_height_fraction", "must lie in (0, 0.2)"));
        }
        if !(0.0..=1.0).contains(&g.ankle_position_fraction) {
            return Err(Error::invalid("foot.ankle_position_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Entries in file order.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(18);
        for name in SEGMENT_NAMES {
            let s = self.segment(name).expect("known segment");
            let values = [s.mass_fraction, s.length_fraction, s.com_fraction, s.gyration_fraction];
            for (field, v) in FIELD_NAMES.iter().zip(values) {
                out.push((format!("segment.{name}.{field}"), v));
            }
        }
        out.push((
            "foot.ankle_height_fraction".into(),
            self.foot_geometry.ankle_height_fraction,
        ));
        out.push((
            "foot.ankle_position_fraction".into(),
            self.foot_geometry.ankle_position_fraction,
        ));
        out
    }

    pub fn to_text(&self) -> String {
        config::render(&self.entries())
    }

    /// Applies `segment.*` and `foot.*` keys on top of `self`; other keys
    /// are ignored so a scenario file can carry overrides inline.
    pub fn with_overrides(mut self, kv: &KeyValues) -> Result<Self> {
        for key in kv.keys() {
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["segment", name, field] => {
                    let v = kv.f64(key)?.expect("key present");
                    let Some(seg) = self.segment_mut(name) else {
                        return Err(kv.error_at(key, format!("unknown segment '{name}'")));
                    };
                    match *field {
                        "mass_fraction" => seg.mass_fraction = v,
                        "length_fraction" => seg.length_fraction = v,
                        "com_fraction" => seg.com_fraction = v,
                        "gyration_fraction" => seg.gyration_fraction = v,
                        _ => return Err(kv.error_at(key, "unknown segment field")),
                    }
                }
                ["foot", "ankle_height_fraction"] => {
                    self.foot_geometry.ankle_height_fraction = kv.f64(key)?.expect("key present")
                }
                ["foot", "ankle_position_fraction"] => {
                    self.foot_geometry.ankle_position_fraction = kv.f64(key)?.expect("key present")
                }
                ["segment", ..] | ["foot", ..] => return Err(kv.error_at(key, "unknown key")),
                _ => {}
            }
        }
        self.validate().map_err(|e| match e {
            Error::Invalid { field, reason } if kv.line_of(&field).is_some() => kv.error_at(&field, reason),
            other => other,
        })?;
        Ok(self)
    }

    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let kv = KeyValues::parse(source, text)?;
        kv.reject_unknown(&["segment.*", "foot.*"])?;
        default_table().with_overrides(&kv)
    }
}

/// The built-in table: de Leva adjusted male fractions.
pub fn default_table() -> AnthroTable {
    AnthroTable::de_leva(Sex::Male)
}

/// Mass, length, centre-of-mass position and sagittal inertia of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// Share of length from the reference end.
    pub com_offset: f64,
    /// About the centre of mass, kg·m².
    pub inertia_sagittal: f64,
}

impl SegmentParams {
    /// Distance from the reference end to the centre of mass.
    pub fn com_distance(&self) -> f64 {
        self.com_offset * self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnthropometricModel {
    pub hat: SegmentParams,
    pub thigh: SegmentParams,
    pub shank: SegmentParams,
    pub foot: SegmentParams,
    pub total_mass: f64,
    pub gravity: f64,
    /// Stature the model was scaled from.
    pub height: f64,
    /// Ankle joint centre above the ground.
    pub ankle_height: f64,
    /// Heel to ankle, measured forward along the foot.
    pub heel_to_ankle: f64,
}

impl AnthropometricModel {
    pub fn body_weight(&self) -> f64 {
        self.total_mass * self.gravity
    }

    /// Height of the under-arm cane attachment for a standing subject.
    pub fn shoulder_height(&self) -> f64 {
        SHOULDER_HEIGHT_FRACTION * self.height
    }

    pub fn segment_mass_sum(&self) -> f64 {
        self.hat.mass + self.thigh.mass + self.shank.mass + self.foot.mass
    }
}

fn scale(f: &SegmentFractions, subject: &Subject) -> SegmentParams {
    let mass = f.mass_fraction * subject.mass;
    let length = f.length_fraction * subject.height;
    SegmentParams {
        mass,
        length,
        com_offset: f.com_fraction,
        inertia_sagittal: mass * (f.gyration_fraction * length).powi(2),
    }
}

/// Scales a fraction table to a subject.
pub fn scale_anthropometrics(subject: &Subject, table: &AnthroTable) -> Result<AnthropometricModel> {
    subject.validate()?;
    table.validate()?;
    let foot = scale(&table.foot, subject);
    Ok(AnthropometricModel {
        hat: scale(&table.hat, subject),
        thigh: scale(&table.thigh, subject),
        shank: scale(&table.shank, subject),
        foot,
        total_mass: subject.mass,
        gravity: GRAVITY,
        height: subject.height,
        ankle_height: table.foot_geometry.ankle_height_fraction * subject.height,
        heel_to_ankle: table.foot_geometry.ankle_position_fraction * foot.length,
    })
}

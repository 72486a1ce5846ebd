//! Analysis settings from an optional `key = value` file.

use std::collections::BTreeMap;
use std::path::Path;

use sit2stand::anthro::Subject;
use sit2stand::config::KeyValues;
use sit2stand::grf::EventConfig;
use sit2stand::kinematics::LowPass;
use sit2stand::perception::{AngleConfig, ResampleConfig};
use sit2stand::table::fmt_num;

use crate::{Failure, Inputs};

pub const SETTINGS_KEYS: &[&str] = &[
    "events.seat_threshold",
    "events.liftoff_fraction",
    "events.settle_band",
    "events.settle_hold",
    "events.min_duration",
    "grf.body_weight",
    "subject.height",
    "subject.mass",
    "subject.sex",
    "skeleton.rate",
    "skeleton.max_gap",
    "skeleton.confidence_threshold",
    "skeleton.cutoff",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub events: EventConfig,
    /// Body weight for plate files, N. Inferred from each file when unset.
    pub body_weight: Option<f64>,
    /// Subject behind a skeleton recording.
    pub subject: Subject,
    /// Rate the skeleton is resampled to, Hz.
    pub skeleton_rate: f64,
    pub angles: AngleConfig,
    pub resample: ResampleConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            events: EventConfig::default(),
            body_weight: None,
            subject: Subject::reference(),
            skeleton_rate: 100.0,
            angles: AngleConfig::default(),
            // moments need second derivatives, so smooth harder than for angles
            resample: ResampleConfig {
                smoothing: Some(LowPass { cutoff: 2.0 }),
                ..ResampleConfig::default()
            },
        }
    }
}

impl Settings {
    pub fn from_key_values(kv: &KeyValues) -> sit2stand::Result<Self> {
        kv.reject_unknown(SETTINGS_KEYS)?;
        let mut s = Settings::default();
        let positive = |key: &str, slot: &mut f64| -> sit2stand::Result<()> {
            if let Some(v) = kv.f64(key)? {
                if v <= 0.0 {
                    return Err(kv.error_at(key, "must be positive"));
                }
                *slot = v;
            }
            Ok(())
        };
        let e = &mut s.events;
        positive("events.seat_threshold", &mut e.seat_threshold)?;
        positive("events.liftoff_fraction", &mut e.liftoff_fraction)?;
        positive("events.settle_band", &mut e.settle_band)?;
        positive("events.settle_hold", &mut e.settle_hold)?;
        positive("events.min_duration", &mut e.min_duration)?;
        if let Some(bw) = kv.f64("grf.body_weight")? {
            if bw <= 0.0 {
                return Err(kv.error_at("grf.body_weight", "must be positive"));
            }
            s.body_weight = Some(bw);
        }
        positive("subject.height", &mut s.subject.height)?;
        positive("subject.mass", &mut s.subject.mass)?;
        if let Some(raw) = kv.raw("subject.sex") {
            s.subject.sex = raw.parse().map_err(|e| kv.error_at("subject.sex", e))?;
        }
        s.subject
            .validate()
            .map_err(|e| match kv.keys().find(|k| k.starts_with("subject.")) {
                Some(k) => kv.error_at(k, e),
                None => e,
            })?;
        positive("skeleton.rate", &mut s.skeleton_rate)?;
        positive("skeleton.max_gap", &mut s.resample.max_gap)?;
        if let Some(v) = kv.f64("skeleton.confidence_threshold")? {
            if !(0.0..=1.0).contains(&v) {
                return Err(kv.error_at("skeleton.confidence_threshold", "must lie in [0, 1]"));
            }
            s.angles.confidence_threshold = v;
        }
        if let Some(v) = kv.f64("skeleton.cutoff")? {
            // zero switches the filter off
            if v < 0.0 {
                return Err(kv.error_at("skeleton.cutoff", "must not be negative"));
            }
            s.resample.smoothing = (v > 0.0).then_some(LowPass { cutoff: v });
        }
        Ok(s)
    }

    /// Reads `path` when given; defaults otherwise.
    pub fn load(path: Option<&Path>, inputs: &mut Inputs) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = inputs.read_text("config", path)?;
        let kv = KeyValues::parse(&path.display().to_string(), &text).map_err(Failure::input)?;
        Settings::from_key_values(&kv).map_err(Failure::input)
    }

    /// Every resolved setting, for the manifest.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let e = &self.events;
        let mut m: BTreeMap<String, String> = [
            ("events.seat_threshold", e.seat_threshold),
            ("events.liftoff_fraction", e.liftoff_fraction),
            ("events.settle_band", e.settle_band),
            ("events.settle_hold", e.settle_hold),
            ("events.min_duration", e.min_duration),
            ("subject.height", self.subject.height),
            ("subject.mass", self.subject.mass),
            ("skeleton.rate", self.skeleton_rate),
            ("skeleton.max_gap", self.resample.max_gap),
            ("skeleton.confidence_threshold", self.angles.confidence_threshold),
            ("skeleton.cutoff", self.resample.smoothing.map_or(0.0, |lp| lp.cutoff)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), fmt_num(v)))
        .collect();
        m.insert("subject.sex".into(), self.subject.sex.to_string());
        m.insert(
            "grf.body_weight".into(),
            self.body_weight.map_or_else(|| "inferred".to_string(), fmt_num),
        );
        m
    }
}

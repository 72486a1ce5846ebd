//! Sit-to-stand events and the ten ground-reaction-force parameters.
//!
//! Events:
//!
//! * lift-off: where the seat force falls through the threshold, found on
//!   the line between the bracketing samples. With no seat channel, where
//!   foot force (plus cane force, if recorded) rises through a share of body
//!   weight.
//! * completion: the record must end in a run of samples within the settle
//!   band around body weight. Completion is where the force enters the first
//!   in-band run lasting at least `hold` after it has left the band following
//!   the peak.
//! * peak: the largest sample after lift-off, up to the start of the final
//!   settled run.
//!
//! Parameters are taken from the piecewise-linear interpolant of the
//! samples. F1 and F2 are the forces at lift-off and peak, T1..T3 the
//! intervals start→lift-off→peak→completion, P1..P3 the impulses over those
//! intervals, V1 = (F2 − F1)/T2 and V2 the least-squares slope over the T3
//! interval.

use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::table::{self, parse_err, NumericTable};

#[derive(Debug, Clone, PartialEq)]
pub struct GrfProfile {
    pub timestamps: Vec<f64>,
    /// Vertical foot force, N.
    pub vertical: Vec<f64>,
    pub seat: Option<Vec<f64>>,
    pub cane: Option<Vec<f64>>,
    /// Forward centre-of-pressure position relative to the ankle, m.
    pub cop_x: Option<Vec<f64>>,
    /// N.
    pub body_weight: f64,
}

impl GrfProfile {
    pub fn new(timestamps: Vec<f64>, vertical: Vec<f64>, body_weight: f64) -> Self {
        GrfProfile {
            timestamps,
            vertical,
            seat: None,
            cane: None,
            cop_x: None,
            body_weight,
        }
    }

    pub fn with_seat(mut self, seat: Vec<f64>) -> Self {
        self.seat = Some(seat);
        self
    }

    pub fn with_cane(mut self, cane: Vec<f64>) -> Self {
        self.cane = Some(cane);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        let chans = [
            ("vertical force", Some(&self.vertical)),
            ("seat force", self.seat.as_ref()),
            ("cane force", self.cane.as_ref()),
            ("centre of pressure", self.cop_x.as_ref()),
        ];
        for (what, ch) in chans {
            if let Some(ch) = ch {
                if ch.len() != n {
                    return Err(Error::LengthMismatch {
                        what,
                        got: ch.len(),
                        expected: n,
                    });
                }
            }
        }
        if !(self.body_weight > 0.0 && self.body_weight.is_finite()) {
            return Err(Error::invalid("body_weight", "must be positive"));
        }
        crate::kinematics::check_increasing(&self.timestamps)
    }

    /// Multiplies every force channel by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x * k).collect::<Vec<_>>();
        GrfProfile {
            timestamps: self.timestamps.clone(),
            vertical: s(&self.vertical),
            seat: self.seat.as_ref().map(s),
            cane: self.cane.as_ref().map(s),
            cop_x: self.cop_x.clone(),
            body_weight: self.body_weight * k,
        }
    }

    /// Adds `dt` to every timestamp.
    pub fn shifted(&self, dt: f64) -> Self {
        let mut p = self.clone();
        for t in &mut p.timestamps {
            *t += dt;
        }
        p
    }

    /// Reads `t,fz[,seat_fz][,cane_fz][,cop_x]`. Without `body_weight`, it is
    /// taken as the mean total support over the last half second.
    pub fn read_csv(source: &str, reader: impl Read, body_weight: Option<f64>) -> Result<Self> {
        let t = NumericTable::read(source, reader)?;
        let known = ["t", "fz", "seat_fz", "cane_fz", "cop_x"];
        if let Some(h) = t.headers.iter().find(|h| !known.contains(&h.as_str())) {
            return Err(parse_err(source, 1, Some(h), "unknown column"));
        }
        let time = t.require_finite(source, "t")?.to_vec();
        let fz = t.require_finite(source, "fz")?.to_vec();
        let opt = |name: &str| -> Result<Option<Vec<f64>>> {
            match t.column(name) {
                Some(_) => Ok(Some(t.require_finite(source, name)?.to_vec())),
                None => Ok(None),
            }
        };
        let seat = opt("seat_fz")?;
        let cane = opt("cane_fz")?;
        let cop_x = opt("cop_x")?;
        if time.len() < 2 {
            return Err(parse_err(source, 2, None, "need at least two samples"));
        }
        if let Some(i) = (1..time.len()).find(|&i| time[i] <= time[i - 1]) {
            return Err(parse_err(source, i + 2, Some("t"), "timestamps must increase"));
        }
        let mean_dt = (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64;
        if mean_dt > 0.01 * (1.0 + 1e-6) {
            return Err(parse_err(
                source,
                2,
                Some("t"),
                format!("sampling rate {:.1} Hz below 100 Hz", 1.0 / mean_dt),
            ));
        }
        let bw = match body_weight {
            Some(bw) => bw,
            None => {
                let t_end = time[time.len() - 1];
                let idx: Vec<usize> = (0..time.len()).filter(|&i| time[i] >= t_end - 0.5).collect();
                let total = |i: usize| fz[i] + cane.as_ref().map_or(0.0, |c| c[i]);
                idx.iter().map(|&i| total(i)).sum::<f64>() / idx.len() as f64
            }
        };
        let p = GrfProfile {
            timestamps: time,
            vertical: fz,
            seat,
            cane,
            cop_x,
            body_weight: bw,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut headers = vec!["t", "fz"];
        let mut cols: Vec<&[f64]> = vec![&self.timestamps, &self.vertical];
        for (name, ch) in [("seat_fz", &self.seat), ("cane_fz", &self.cane), ("cop_x", &self.cop_x)] {
            if let Some(ch) = ch {
                headers.push(name);
                cols.push(ch);
            }
        }
        table::write_columns(writer, &headers, &cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventConfig {
    /// Seat force below this means the seat is unloaded, N.
    pub seat_threshold: f64,
    /// Lift-off share of body weight when there is no seat channel.
    pub liftoff_fraction: f64,
    /// Half-width of the settle band as a share of body weight.
    pub settle_band: f64,
    /// How long the force must stay in the band, s.
    pub settle_hold: f64,
    /// Shortest record accepted, s.
    pub min_duration: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            seat_threshold: 5.0,
            liftoff_fraction: 0.95,
            settle_band: 0.02,
            settle_hold: 0.2,
            min_duration: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StsEvents {
    pub t_start: f64,
    pub t_liftoff: f64,
    pub t_peak: f64,
    pub t_end: f64,
}

// hold comparisons tolerate grid rounding
const HOLD_EPS: f64 = 1e-9;

/// Time at which the line through samples `i - 1` and `i` reaches `level`.
fn crossing(t: &[f64], y: &[f64], i: usize, level: f64) -> f64 {
    let (y0, y1) = (y[i - 1], y[i]);
    if y1 == y0 {
        return t[i];
    }
    let frac = ((level - y0) / (y1 - y0)).clamp(0.0, 1.0);
    t[i - 1] + frac * (t[i] - t[i - 1])
}

pub fn detect_events(profile: &GrfProfile, cfg: &EventConfig) -> Result<StsEvents> {
    profile.validate()?;
    let t = &profile.timestamps;
    let f = &profile.vertical;
    let n = t.len();
    if n < 3 || t[n - 1] - t[0] < cfg.min_duration {
        return Err(Error::invalid(
            "profile",
            format!("need at least {} s of data", cfg.min_duration),
        ));
    }
    let bw = profile.body_weight;

    let t_lo = match &profile.seat {
        Some(seat) => {
            if seat[0] < cfg.seat_threshold {
                return Err(Error::IncompleteMovement(
                    "seat is unloaded from the first sample".into(),
                ));
            }
            let i = seat
                .iter()
                .position(|&s| s < cfg.seat_threshold)
                .ok_or_else(|| Error::IncompleteMovement("seat force never drops below threshold".into()))?;
            crossing(t, seat, i, cfg.seat_threshold)
        }
        None => {
            let support: Vec<f64> = match &profile.cane {
                Some(c) => f.iter().zip(c).map(|(a, b)| a + b).collect(),
                None => f.clone(),
            };
            let level = cfg.liftoff_fraction * bw;
            if support[0] >= level {
                return Err(Error::IncompleteMovement(
                    "foot force starts above the lift-off level; no seated baseline".into(),
                ));
            }
            let i = (1..n)
                .find(|&i| support[i] >= level)
                .ok_or_else(|| Error::IncompleteMovement("foot force never rises to lift-off".into()))?;
            crossing(t, &support, i, level)
        }
    };

    let band = cfg.settle_band * bw;
    let inb = |i: usize| (f[i] - bw).abs() <= band;
    if !inb(n - 1) {
        return Err(Error::IncompleteMovement("force does not settle at body weight".into()));
    }
    let mut settle = n - 1;
    while settle > 0 && inb(settle - 1) {
        settle -= 1;
    }
    if t[n - 1] - t[settle] < cfg.settle_hold - HOLD_EPS {
        return Err(Error::IncompleteMovement("final settled stretch is too short".into()));
    }
    let first = t.partition_point(|&x| x <= t_lo);
    if settle < first {
        return Err(Error::IncompleteMovement(
            "no rise between lift-off and settling".into(),
        ));
    }

    let mut i_pk = first;
    for i in first..=settle {
        if f[i] > f[i_pk] {
            i_pk = i;
        }
    }

    let mut q = i_pk;
    while q < n && inb(q) {
        q += 1;
    }
    let mut t_end = t[i_pk];
    let mut run: Option<f64> = None;
    while q < n {
        if inb(q) {
            let entry = *run.get_or_insert_with(|| {
                let level = if f[q - 1] > bw { bw + band } else { bw - band };
                crossing(t, f, q, level)
            });
            if t[q] - entry >= cfg.settle_hold - HOLD_EPS {
                t_end = entry;
                break;
            }
        } else {
            run = None;
        }
        q += 1;
    }

    Ok(StsEvents {
        t_start: t[0],
        t_liftoff: t_lo,
        t_peak: t[i_pk],
        t_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    F1,
    F2,
    T1,
    T2,
    T3,
    P1,
    P2,
    P3,
    V1,
    V2,
}

impl Param {
    pub const ALL: [Param; 10] = [
        Param::F1,
        Param::F2,
        Param::T1,
        Param::T2,
        Param::T3,
        Param::P1,
        Param::P2,
        Param::P3,
        Param::V1,
        Param::V2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::F1 => "F1",
            Param::F2 => "F2",
            Param::T1 => "T1",
            Param::T2 => "T2",
            Param::T3 => "T3",
            Param::P1 => "P1",
            Param::P2 => "P2",
            Param::P3 => "P3",
            Param::V1 => "V1",
            Param::V2 => "V2",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrfParameters {
    pub f1: f64,
    pub f2: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub v1: f64,
    pub v2: f64,
    pub body_weight: f64,
    /// Parameters left NaN and why.
    pub undefined: Vec<(Param, String)>,
}

impl GrfParameters {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::F1 => self.f1,
            Param::F2 => self.f2,
            Param::T1 => self.t1,
            Param::T2 => self.t2,
            Param::T3 => self.t3,
            Param::P1 => self.p1,
            Param::P2 => self.p2,
            Param::P3 => self.p3,
            Param::V1 => self.v1,
            Param::V2 => self.v2,
        }
    }

    pub fn f1_pct_bw(&self) -> f64 {
        100.0 * self.f1 / self.body_weight
    }

    pub fn f2_pct_bw(&self) -> f64 {
        100.0 * self.f2 / self.body_weight
    }
}

/// The piecewise-linear interpolant of the samples, held constant outside
/// the record.
struct Interpolant<'a> {
    t: &'a [f64],
    f: &'a [f64],
}

impl Interpolant<'_> {
    fn at(&self, x: f64) -> f64 {
        let (t, f) = (self.t, self.f);
        let i = t.partition_point(|&s| s <= x);
        if i == 0 {
            return f[0];
        }
        if i == t.len() {
            return f[i - 1];
        }
        let w = (x - t[i - 1]) / (t[i] - t[i - 1]);
        f[i - 1] + w * (f[i] - f[i - 1])
    }

    /// Pieces of `[a, b]` on which the interpolant is linear.
    fn pieces(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let lo = self.t.partition_point(|&s| s <= a);
        let hi = self.t.partition_point(|&s| s < b).max(lo);
        let cuts = std::iter::once(a)
            .chain(self.t[lo..hi].iter().copied())
            .chain(std::iter::once(b));
        cuts.clone().zip(cuts.skip(1)).filter(|(x, y)| y > x)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.pieces(a, b)
            .map(|(x, y)| 0.5 * (self.at(x) + self.at(y)) * (y - x))
            .sum()
    }

    /// Least-squares slope of the interpolant over `[a, b]`, weighting time
    /// evenly rather than samples.
    fn slope(&self, a: f64, b: f64) -> Option<f64> {
        if !(b > a) {
            return None;
        }
        // moments of time (from a) and force; Simpson is exact for these
        let (mut s0, mut s1, mut s2, mut sf, mut sxf) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, y) in self.pieces(a, b) {
            let m = 0.5 * (x + y);
            let w = (y - x) / 6.0;
            let (u0, um, u1) = (x - a, m - a, y - a);
            let (f0, fm, f1) = (self.at(x), self.at(m), self.at(y));
            s0 += y - x;
            s1 += w * (u0 + 4.0 * um + u1);
            s2 += w * (u0 * u0 + 4.0 * um * um + u1 * u1);
            sf += w * (f0 + 4.0 * fm + f1);
            sxf += w * (u0 * f0 + 4.0 * um * fm + u1 * f1);
        }
        let den = s0 * s2 - s1 * s1;
        (den > 0.0).then(|| (s0 * sxf - s1 * sf) / den)
    }
}

pub fn extract_parameters(profile: &GrfProfile, events: &StsEvents) -> Result<GrfParameters> {
    profile.validate()?;
    let t = &profile.timestamps;
    let g = Interpolant {
        t,
        f: &profile.vertical,
    };
    let StsEvents {
        t_start: e0,
        t_liftoff: e1,
        t_peak: e2,
        t_end: e3,
    } = *events;
    if !(t[0] <= e0 && e0 <= e1 && e1 <= e2 && e2 <= e3 && e3 <= t[t.len() - 1]) {
        return Err(Error::invalid("events", "out of order or outside the profile"));
    }
    let mut undefined = Vec::new();
    let (f1, f2) = (g.at(e1), g.at(e2));
    let t2 = e2 - e1;
    let v1 = if t2 > 0.0 {
        (f2 - f1) / t2
    } else {
        undefined.push((Param::V1, "lift-off and peak coincide (T2 = 0)".to_string()));
        f64::NAN
    };
    let v2 = g.slope(e2, e3).unwrap_or_else(|| {
        undefined.push((Param::V2, "peak and completion coincide (T3 = 0)".to_string()));
        f64::NAN
    });
    Ok(GrfParameters {
        f1,
        f2,
        t1: e1 - e0,
        t2,
        t3: e3 - e2,
        p1: g.integral(e0, e1),
        p2: g.integral(e1, e2),
        p3: g.integral(e2, e3),
        v1,
        v2,
        body_weight: profile.body_weight,
        undefined,
    })
}

/// Trapezoid impulse of the vertical force between two instants.
pub fn impulse(profile: &GrfProfile, a: f64, b: f64) -> f64 {
    Interpolant {
        t: &profile.timestamps,
        f: &profile.vertical,
    }
    .integral(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub param: String,
    pub mean: f64,
    pub sd: f64,
    /// Trials with a finite value.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub n: usize,
    pub single_trial: bool,
    pub rows: Vec<StatRow>,
}

impl TrialStats {
    pub fn row(&self, param: &str) -> Option<&StatRow> {
        self.rows.iter().find(|r| r.param == param)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_stat_rows(writer, &self.rows)
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64, usize) {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    // shifted by the first value so identical trials give exactly zero spread
    let k = v[0];
    let s1: f64 = v.iter().map(|x| x - k).sum();
    let s2: f64 = v.iter().map(|x| (x - k).powi(2)).sum();
    let mean = k + s1 / n as f64;
    let sd = if n > 1 {
        ((s2 - s1 * s1 / n as f64).max(0.0) / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, sd, n)
}

/// Row names in output order: the ten parameters plus F1 and F2 in %BW.
pub fn stat_row_names() -> Vec<String> {
    let mut names = Vec::new();
    for p in Param::ALL {
        names.push(p.name().to_string());
        if matches!(p, Param::F1 | Param::F2) {
            names.push(format!("{}_pct_bw", p.name()));
        }
    }
    names
}

pub fn trial_statistics(params: &[GrfParameters]) -> Result<TrialStats> {
    if params.is_empty() {
        return Err(Error::invalid("trials", "no trials given"));
    }
    let mut rows = Vec::new();
    for p in Param::ALL {
        let vals: Vec<f64> = params.iter().map(|x| x.get(p)).collect();
        let (mean, sd, n) = mean_sd(&vals);
        rows.push(StatRow {
            param: p.name().to_string(),
            mean,
            sd,
            n,
        });
        let pct = match p {
            Param::F1 => Some(params.iter().map(GrfParameters::f1_pct_bw).collect::<Vec<_>>()),
            Param::F2 => Some(params.iter().map(GrfParameters::f2_pct_bw).collect::<Vec<_>>()),
            _ => None,
        };
        if let Some(vals) = pct {
            let (mean, sd, n) = mean_sd(&vals);
            rows.push(StatRow {
                param: format!("{}_pct_bw", p.name()),
                mean,
                sd,
                n,
            });
        }
    }
    Ok(TrialStats {
        n: params.len(),
        single_trial: params.len() == 1,
        rows,
    })
}

pub fn write_stat_rows(writer: impl Write, rows: &[StatRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["param", "mean", "sd", "n"])?;
    for r in rows {
        w.write_record([
            r.param.clone(),
            table::fmt_num(r.mean),
            table::fmt_num(r.sd),
            r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `param,mean,sd,n` table.
pub fn read_stat_rows(source: &str, reader: impl Read) -> Result<Vec<StatRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers != ["param", "mean", "sd", "n"] {
        return Err(parse_err(
            source,
            1,
            None,
            format!("expected header param,mean,sd,n, found {}", headers.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(source, line, None, e.to_string()))?;
        let num = |j: usize, col: &str| -> Result<f64> {
            let cell = &rec[j];
            if cell.is_empty() {
                return Ok(f64::NAN);
            }
            cell.parse::<f64>()
                .map_err(|_| parse_err(source, line, Some(col), format!("'{cell}' is not a number")))
        };
        let n = rec[3]
            .parse::<usize>()
            .map_err(|_| parse_err(source, line, Some("n"), format!("'{}' is not a count", &rec[3])))?;
        rows.push(StatRow {
            param: rec[0].to_string(),
            mean: num(1, "mean")?,
            sd: num(2, "sd")?,
            n,
        });
    }
    Ok(rows)
}

use std::io::Write;
use std::path::PathBuf;

use sit2stand::anthro::{scale_anthropometrics, AnthroTable};
use sit2stand::dynamics::{inverse_dynamics, CaneForce, CaneProfile};
use sit2stand::grf::{
    detect_events, extract_parameters, stat_row_names, trial_statistics, GrfParameters, GrfProfile, StsEvents,
};
use sit2stand::kinematics::PoseTrajectory;
use sit2stand::perception::{fit_sagittal_plane, project_and_angles_with, read_skeleton, smooth_and_resample_with};
use sit2stand::table::{fmt_num, write_columns};

use crate::manifest::RunManifest;
use crate::plot::{force_chart, Series};
use crate::{param_values, warn_undefined, Failure, Inputs, Outputs, Settings, PARAMETERS_FILE};

#[derive(Debug, Clone)]
pub struct AnalyzeArgs {
    /// One plate recording per trial.
    pub grf: Vec<PathBuf>,
    pub skeleton: Option<PathBuf>,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

/// Lowest skeleton frame rate accepted, Hz.
const MIN_SKELETON_RATE: f64 = 30.0;
/// Largest lag tried when aligning measured and modelled moments, s.
const MAX_LAG: f64 = 0.3;

struct Trial {
    profile: GrfProfile,
    events: StsEvents,
    params: GrfParameters,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    if args.grf.is_empty() {
        return Err(Failure::Input("no GRF file given".into()));
    }
    if args.skeleton.is_some() && args.grf.len() != 1 {
        return Err(Failure::Input(
            "a skeleton recording pairs with exactly one GRF file".into(),
        ));
    }
    let mut inputs = Inputs::default();
    let settings = Settings::load(args.config.as_deref(), &mut inputs)?;
    let mut trials = Vec::new();
    for path in &args.grf {
        let name = path.display().to_string();
        let bytes = inputs.read("grf", path)?;
        let profile = GrfProfile::read_csv(&name, bytes.as_slice(), settings.body_weight).map_err(Failure::input)?;
        let events = detect_events(&profile, &settings.events).map_err(|e| Failure::from_toolkit(e).context(&name))?;
        let params = extract_parameters(&profile, &events).map_err(|e| Failure::from_toolkit(e).context(&name))?;
        warn_undefined(&name, &params);
        trials.push(Trial {
            profile,
            events,
            params,
        });
    }
    let all: Vec<GrfParameters> = trials.iter().map(|t| t.params.clone()).collect();
    let stats = trial_statistics(&all).map_err(Failure::input)?;
    if stats.single_trial {
        eprintln!("warning: single trial, SD reported as 0");
    }

    let mut out = Outputs::default();
    out.with("events.csv", |w| {
        writeln!(w, "trial,t_start,t_liftoff,t_peak,t_end")?;
        for (k, t) in trials.iter().enumerate() {
            let e = &t.events;
            writeln!(
                w,
                "{},{},{},{},{}",
                k + 1,
                fmt_num(e.t_start),
                fmt_num(e.t_liftoff),
                fmt_num(e.t_peak),
                fmt_num(e.t_end)
            )?;
        }
        Ok(())
    })?;
    out.with("trial_parameters.csv", |w| {
        writeln!(w, "trial,{}", stat_row_names().join(","))?;
        for (k, t) in trials.iter().enumerate() {
            let vals: Vec<String> = param_values(&t.params).into_iter().map(|(_, v)| fmt_num(v)).collect();
            writeln!(w, "{},{}", k + 1, vals.join(","))?;
        }
        Ok(())
    })?;
    out.with(PARAMETERS_FILE, |w| stats.write_csv(w))?;
    let series: Vec<Series> = trials
        .iter()
        .enumerate()
        .map(|(k, t)| Series {
            label: format!("trial {}", k + 1),
            t: &t.profile.timestamps,
            y: &t.profile.vertical,
        })
        .collect();
    let svg = force_chart(
        "Vertical ground reaction force",
        &series,
        Some(("body weight", trials[0].profile.body_weight)),
    );
    out.add("grf.svg", svg.into_bytes());

    if let Some(path) = &args.skeleton {
        let bytes = inputs.read("skeleton", path)?;
        let cmp = moment_comparison(&path.display().to_string(), &bytes, &trials[0], &settings)?;
        out.with("angles.csv", |w| cmp.trajectory.write_csv(w))?;
        out.with("moment.csv", |w| {
            let diff: Vec<f64> = cmp.model.iter().zip(&cmp.measured).map(|(m, p)| m - p).collect();
            write_columns(
                w,
                &["t", "model_mc", "measured_mc", "difference"],
                &[&cmp.t, &cmp.model, &cmp.measured, &diff],
            )
        })?;
        out.with("moment_summary.csv", |w| {
            writeln!(w, "metric,value")?;
            for (k, v) in [
                ("samples", cmp.t.len() as f64),
                ("rms", cmp.rms),
                ("rms_after_liftoff", cmp.rms_after_liftoff),
                ("best_lag", cmp.best_lag),
                ("rms_after_liftoff_at_best_lag", cmp.rms_at_best_lag),
            ] {
                writeln!(w, "{k},{}", fmt_num(v))?;
            }
            Ok(())
        })?;
    }

    let manifest = RunManifest::new("analyze", inputs.records()).with_config("settings", settings.entries());
    out.write(&args.out, manifest)?;
    Ok(())
}

struct MomentComparison {
    trajectory: PoseTrajectory,
    t: Vec<f64>,
    model: Vec<f64>,
    measured: Vec<f64>,
    rms: f64,
    rms_after_liftoff: f64,
    /// Shift of the measured series that best matches the model after
    /// lift-off, s. Positive when the plate lags the model.
    best_lag: f64,
    rms_at_best_lag: f64,
}

/// Linear interpolation of `(t, y)` at `x`; `None` outside the record.
fn sample(t: &[f64], y: &[f64], x: f64) -> Option<f64> {
    if t.is_empty() || x < t[0] || x > t[t.len() - 1] {
        return None;
    }
    let i = t.partition_point(|&v| v <= x);
    if i == t.len() {
        return Some(y[t.len() - 1]);
    }
    let w = (x - t[i - 1]) / (t[i] - t[i - 1]);
    Some(y[i - 1] + w * (y[i] - y[i - 1]))
}

fn rms(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (a, b) in pairs {
        s += (a - b).powi(2);
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        (s / n as f64).sqrt()
    }
}

/// Ankle moment of the ground reaction from the model driven by the
/// skeleton, against the one the plate measured (`cop_x · fz`).
fn moment_comparison(
    source: &str,
    bytes: &[u8],
    trial: &Trial,
    settings: &Settings,
) -> Result<MomentComparison, Failure> {
    let grf = &trial.profile;
    let Some(cop) = &grf.cop_x else {
        return Err(Failure::Input(format!(
            "the moment comparison needs a cop_x column in the GRF file, none found for {source}"
        )));
    };
    let frames = read_skeleton(source, bytes).map_err(Failure::input)?;
    if frames.len() >= 2 {
        let span = frames[frames.len() - 1].timestamp - frames[0].timestamp;
        let rate = (frames.len() - 1) as f64 / span;
        if !(rate >= MIN_SKELETON_RATE * (1.0 - 1e-6)) {
            return Err(Failure::Input(format!(
                "{source}: frame rate {rate:.1} Hz below {MIN_SKELETON_RATE} Hz"
            )));
        }
    }
    let ctx = |e: sit2stand::Error| Failure::from_toolkit(e).context(source);
    let plane = fit_sagittal_plane(&frames).map_err(ctx)?;
    let sagittal = frames
        .iter()
        .map(|f| project_and_angles_with(f, &plane, &settings.angles))
        .collect::<sit2stand::Result<Vec<_>>>()
        .map_err(ctx)?;
    let trajectory = smooth_and_resample_with(&sagittal, settings.skeleton_rate, &settings.resample).map_err(ctx)?;

    let model = scale_anthropometrics(&settings.subject, &AnthroTable::de_leva(settings.subject.sex))
        .map_err(Failure::input)?;
    let cane = match &grf.cane {
        Some(c) => CaneProfile::PerFrame(
            trajectory
                .timestamps
                .iter()
                .map(|&x| CaneForce::vertical(sample(&grf.timestamps, c, x).unwrap_or(0.0).max(0.0)))
                .collect(),
        ),
        None => CaneProfile::Zero,
    };
    let frames = inverse_dynamics(&trajectory, &cane, &model).map_err(Failure::runtime)?;

    let plate: Vec<f64> = cop.iter().zip(&grf.vertical).map(|(x, f)| x * f).collect();
    let mut t = Vec::new();
    let mut modelled = Vec::new();
    let mut measured = Vec::new();
    for (x, d) in trajectory.timestamps.iter().zip(&frames) {
        if let Some(m) = sample(&grf.timestamps, &plate, *x) {
            t.push(*x);
            // the moment the ground must supply when the plate carries no free moment
            modelled.push(d.loads.m_c + d.loads.m_plate);
            measured.push(m);
        }
    }
    if t.is_empty() {
        return Err(Failure::Input(format!(
            "{source}: no overlap in time with the GRF record"
        )));
    }
    let rms_all = rms(modelled.iter().copied().zip(measured.iter().copied()));
    // before lift-off the seat carries load the plate never sees
    let lift = trial.events.t_liftoff;
    let after: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= lift).collect();
    let rms_at = |lag: f64| {
        rms(after
            .iter()
            .filter_map(|&i| sample(&grf.timestamps, &plate, t[i] + lag).map(|p| (modelled[i], p))))
    };
    let rms_after = rms_at(0.0);
    let dt = 1.0 / settings.skeleton_rate;
    let steps = (MAX_LAG / dt).round() as i64;
    let (mut best_lag, mut best_rms) = (0.0, rms_after);
    for k in -steps..=steps {
        let lag = k as f64 * dt;
        let r = rms_at(lag);
        if r < best_rms {
            best_rms = r;
            best_lag = lag;
        }
    }

    Ok(MomentComparison {
        trajectory,
        t,
        model: modelled,
        measured,
        rms: rms_all,
        rms_after_liftoff: rms_after,
        best_lag,
        rms_at_best_lag: best_rms,
    })
}

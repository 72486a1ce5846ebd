use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use sit2stand::config::KeyValues;
use sit2stand::control::{run_episode, EpisodeLog, Scenario};
use sit2stand::dynamics::write_loads_csv;
use sit2stand::grf::{detect_events, extract_parameters, trial_statistics, GrfParameters, StsEvents};
use sit2stand::table::fmt_num;

use crate::manifest::RunManifest;
use crate::plot::{force_chart, Series};
use crate::{param_values, warn_undefined, Failure, Inputs, Outputs, Settings, PARAMETERS_FILE};

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

struct Run {
    log: EpisodeLog,
    events: StsEvents,
    params: GrfParameters,
}

fn label(assisted: bool) -> &'static str {
    if assisted {
        "assisted"
    } else {
        "unassisted"
    }
}

/// Simulates the scenario and its counterpart with assistance toggled.
///
/// The scenario's own condition gets the full log set; both conditions get
/// GRF events and parameters, and the paired table puts them side by side.
pub fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut inputs = Inputs::default();
    let text = inputs.read_text("scenario", &args.scenario)?;
    let settings = Settings::load(args.config.as_deref(), &mut inputs)?;
    let source = args.scenario.display().to_string();
    let kv = KeyValues::parse(&source, &text).map_err(Failure::input)?;
    let scenario = Scenario::from_key_values(&kv).map_err(Failure::input)?;
    let model = scenario.model().map_err(Failure::input)?;

    let run = |assist: bool| -> Result<Run, Failure> {
        let sc = Scenario {
            assist,
            ..scenario.clone()
        };
        let log = run_episode(&model, &sc.controller, &sc).map_err(|e| Failure::runtime(e).context(label(assist)))?;
        let events = detect_events(&log.grf, &settings.events)
            .map_err(|e| Failure::runtime(e).context(format!("{} episode", label(assist))))?;
        let params = extract_parameters(&log.grf, &events).map_err(Failure::runtime)?;
        warn_undefined(label(assist), &params);
        Ok(Run { log, events, params })
    };
    let own = run(scenario.assist)?;
    let other = run(!scenario.assist)?;
    let (on, off) = if scenario.assist {
        (&own, &other)
    } else {
        (&other, &own)
    };

    let mut out = Outputs::default();
    out.with("episode.csv", |w| own.log.write_csv(w))?;
    out.with("intent_events.csv", |w| own.log.write_events_csv(w))?;
    out.with("loads.csv", |w| {
        write_loads_csv(w, own.log.timestamps(), &own.log.dynamics)
    })?;
    out.with("grf.csv", |w| own.log.grf.write_csv(w))?;
    out.with("paired_grf.csv", |w| other.log.grf.write_csv(w))?;
    out.with("grf_events.csv", |w| {
        writeln!(w, "condition,t_start,t_liftoff,t_peak,t_end")?;
        for r in [on, off] {
            let e = &r.events;
            writeln!(
                w,
                "{},{},{},{},{}",
                label(r.log.assisted),
                fmt_num(e.t_start),
                fmt_num(e.t_liftoff),
                fmt_num(e.t_peak),
                fmt_num(e.t_end)
            )?;
        }
        Ok(())
    })?;
    let stats = trial_statistics(std::slice::from_ref(&own.params)).map_err(Failure::runtime)?;
    out.with(PARAMETERS_FILE, |w| stats.write_csv(w))?;
    out.with("paired_parameters.csv", |w| {
        writeln!(w, "param,assisted,unassisted,delta,reduced")?;
        for ((name, a), (_, u)) in param_values(&on.params).into_iter().zip(param_values(&off.params)) {
            let reduced = if a.is_finite() && u.is_finite() {
                if a.abs() < u.abs() {
                    "1"
                } else {
                    "0"
                }
            } else {
                ""
            };
            writeln!(w, "{name},{},{},{},{reduced}", fmt_num(a), fmt_num(u), fmt_num(a - u))?;
        }
        Ok(())
    })?;
    let svg = force_chart(
        "Vertical foot force",
        &[
            Series {
                label: "assisted".into(),
                t: &on.log.grf.timestamps,
                y: &on.log.grf.vertical,
            },
            Series {
                label: "unassisted".into(),
                t: &off.log.grf.timestamps,
                y: &off.log.grf.vertical,
            },
            Series {
                label: "cane".into(),
                t: &on.log.grf.timestamps,
                y: on.log.grf.cane.as_deref().unwrap_or(&[]),
            },
        ],
        Some(("body weight", own.log.body_weight)),
    );
    out.add("grf.svg", svg.into_bytes());

    let mut resolved: BTreeMap<String, String> = scenario.entries().into_iter().map(|(k, v)| (k, fmt_num(v))).collect();
    resolved.insert("assist".into(), scenario.assist.to_string());
    resolved.insert("subject.sex".into(), scenario.subject.sex.to_string());
    let manifest = RunManifest::new("simulate", inputs.records())
        .with_config("scenario", resolved)
        .with_config("settings", settings.entries());
    out.write(&args.out, manifest)?;
    Ok(())
}

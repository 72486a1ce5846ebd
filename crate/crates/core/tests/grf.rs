use proptest::prelude::*;
use sit2stand::control::{run_episode, Scenario};
use sit2stand::grf::*;
use sit2stand::Error;

const BW: f64 = 866.0;

/// 500 N seated, rising to 600 N at lift-off (0.5 s), 900 N at the peak
/// (0.8 s), easing to body weight at 1.5 s and holding it to 2 s. The seat
/// channel unloads to the 5 N threshold exactly at 0.5 s.
fn trapezoid(rate: f64) -> GrfProfile {
    let n = (2.0 * rate).round() as usize;
    let t: Vec<f64> = (0..=n).map(|i| i as f64 / rate).collect();
    let fz = t
        .iter()
        .map(|&x| {
            if x <= 0.4 {
                500.0
            } else if x <= 0.5 {
                500.0 + 1000.0 * (x - 0.4)
            } else if x <= 0.8 {
                600.0 + 1000.0 * (x - 0.5)
            } else if x < 1.5 {
                900.0 - 34.0 / 0.7 * (x - 0.8)
            } else {
                BW
            }
        })
        .collect();
    let seat = t
        .iter()
        .map(|&x| {
            if x <= 0.4 {
                300.0
            } else if x <= 0.5 {
                5.0 + 2950.0 * (0.5 - x)
            } else {
                0.0
            }
        })
        .collect();
    GrfProfile::new(t, fz, BW).with_seat(seat)
}

fn tight() -> EventConfig {
    EventConfig {
        settle_band: 1e-12,
        ..EventConfig::default()
    }
}

fn params(p: &GrfProfile, cfg: &EventConfig) -> (StsEvents, GrfParameters) {
    let ev = detect_events(p, cfg).unwrap();
    let par = extract_parameters(p, &ev).unwrap();
    (ev, par)
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}

#[test]
fn trapezoid_recovers_closed_form_values() {
    let (ev, p) = params(&trapezoid(1000.0), &tight());
    assert!(close(ev.t_liftoff, 0.5, 1e-9));
    assert!(close(ev.t_peak, 0.8, 1e-9));
    assert!(close(ev.t_end, 1.5, 1e-9));
    let want = [
        (p.t1, 0.5),
        (p.t2, 0.3),
        (p.t3, 0.7),
        (p.f1, 600.0),
        (p.f2, 900.0),
        (p.p1, 500.0 * 0.4 + 550.0 * 0.1),
        (p.p2, 225.0),
        (p.p3, 0.5 * (900.0 + BW) * 0.7),
        (p.v1, 1000.0),
        (p.v2, -34.0 / 0.7),
    ];
    for (got, w) in want {
        assert!(close(got, w, 1e-9), "{got} vs {w}");
    }
    assert!(p.undefined.is_empty());
}

#[test]
fn trapezoid_sums_are_consistent() {
    for rate in [100.0, 250.0, 1000.0] {
        let prof = trapezoid(rate);
        let (ev, p) = params(&prof, &tight());
        assert!(close(p.t1 + p.t2 + p.t3, ev.t_end - ev.t_start, 1e-12));
        let total = impulse(&prof, ev.t_start, ev.t_end);
        assert!(close(p.p1 + p.p2 + p.p3, total, 1e-9));
    }
}

#[test]
fn impulses_are_non_negative_and_ordered_events() {
    let (ev, p) = params(&trapezoid(500.0), &EventConfig::default());
    assert!(ev.t_start <= ev.t_liftoff && ev.t_liftoff <= ev.t_peak && ev.t_peak <= ev.t_end);
    assert!(p.t1 >= 0.0 && p.t2 >= 0.0 && p.t3 >= 0.0);
    assert!(p.p1 >= 0.0 && p.p2 >= 0.0 && p.p3 >= 0.0);
    assert!(p.f2 >= p.f1);
}

#[test]
fn constant_force_impulse_is_force_times_duration() {
    let t: Vec<f64> = (0..=300).map(|i| i as f64 / 100.0).collect();
    let prof = GrfProfile::new(t, vec![700.0; 301], BW);
    assert!(close(impulse(&prof, 0.25, 2.5), 700.0 * 2.25, 1e-12));
}

#[test]
fn body_weight_throughout_is_incomplete() {
    let t: Vec<f64> = (0..=300).map(|i| i as f64 / 100.0).collect();
    let prof = GrfProfile::new(t, vec![BW; 301], BW);
    let e = detect_events(&prof, &EventConfig::default()).unwrap_err();
    assert!(matches!(e, Error::IncompleteMovement(_)));
}

#[test]
fn short_record_is_rejected() {
    let t: Vec<f64> = (0..50).map(|i| i as f64 / 100.0).collect();
    let prof = GrfProfile::new(t, vec![BW; 50], BW);
    assert!(detect_events(&prof, &EventConfig::default()).is_err());
}

#[test]
fn peak_at_lift_off_leaves_v1_undefined() {
    let prof = trapezoid(1000.0);
    let ev = StsEvents {
        t_start: 0.0,
        t_liftoff: 0.8,
        t_peak: 0.8,
        t_end: 1.5,
    };
    let p = extract_parameters(&prof, &ev).unwrap();
    assert!(p.v1.is_nan());
    assert_eq!(p.undefined.len(), 1);
    assert_eq!(p.undefined[0].0, Param::V1);
    assert!(p.v2.is_finite());
}

#[test]
fn events_outside_the_record_are_rejected() {
    let prof = trapezoid(100.0);
    let ev = StsEvents {
        t_start: 0.0,
        t_liftoff: 0.5,
        t_peak: 0.8,
        t_end: 2.5,
    };
    assert!(extract_parameters(&prof, &ev).is_err());
}

#[test]
fn foot_only_record_finds_lift_off_by_force_rise() {
    let mut prof = trapezoid(1000.0);
    prof.seat = None;
    let ev = detect_events(&prof, &EventConfig::default()).unwrap();
    // 0.95 of body weight is first reached on the rise towards the peak
    let want = 0.5 + (0.95 * BW - 600.0) / 1000.0;
    assert!(close(ev.t_liftoff, want, 1e-9));
}

#[test]
fn six_identical_trials_have_no_spread() {
    let (_, p) = params(&trapezoid(1000.0), &tight());
    let s = trial_statistics(&vec![p; 6]).unwrap();
    assert_eq!(s.n, 6);
    assert!(!s.single_trial);
    assert!(s.rows.iter().all(|r| r.sd == 0.0 && r.n == 6));
}

#[test]
fn two_trials_statistics() {
    let (_, a) = params(&trapezoid(1000.0), &tight());
    let b = GrfParameters {
        f2: 1000.0,
        ..a.clone()
    };
    let a = GrfParameters { f2: 900.0, ..a };
    let s = trial_statistics(&[a, b]).unwrap();
    let r = s.row("F2").unwrap();
    assert!(close(r.mean, 950.0, 1e-12));
    assert!(close(r.sd, 70.71, 1e-4));
}

#[test]
fn single_trial_is_flagged() {
    let (_, p) = params(&trapezoid(1000.0), &tight());
    let s = trial_statistics(std::slice::from_ref(&p)).unwrap();
    assert!(s.single_trial);
    assert!(close(s.row("F1").unwrap().mean, p.f1, 0.0));
    assert!(trial_statistics(&[]).is_err());
}

#[test]
fn profile_csv_round_trips() {
    let prof = trapezoid(200.0);
    let mut buf = Vec::new();
    prof.write_csv(&mut buf).unwrap();
    let back = GrfProfile::read_csv("grf.csv", buf.as_slice(), Some(BW)).unwrap();
    assert_eq!(back, prof);
}

#[test]
fn malformed_csv_names_the_cell() {
    let text = "t,fz\n0,800\n0.01,oops\n";
    let e = GrfProfile::read_csv("grf.csv", text.as_bytes(), Some(BW)).unwrap_err();
    let msg = e.to_string();
    assert!(
        msg.contains("grf.csv") && msg.contains('3') && msg.contains("fz"),
        "{msg}"
    );
}

fn all(p: &GrfParameters) -> Vec<f64> {
    Param::ALL.iter().map(|&q| p.get(q)).collect()
}

fn unassisted(rate: f64) -> GrfProfile {
    let sc = Scenario {
        assist: false,
        rate,
        ..Scenario::default()
    };
    let model = sc.model().unwrap();
    run_episode(&model, &sc.controller, &sc).unwrap().grf
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn time_shift_changes_nothing(dt in -100.0..100.0f64) {
        let prof = trapezoid(500.0);
        let (_, a) = params(&prof, &EventConfig::default());
        let (_, b) = params(&prof.shifted(dt), &EventConfig::default());
        for (x, y) in all(&a).iter().zip(all(&b)) {
            prop_assert!(close(*x, y, 1e-6), "{} vs {}", x, y);
        }
    }

    #[test]
    fn force_scale_is_equivariant(k in 0.2..5.0f64) {
        let prof = trapezoid(500.0);
        let (_, a) = params(&prof, &EventConfig::default());
        // a change of force units moves the seat threshold with it
        let cfg = EventConfig { seat_threshold: k * 5.0, ..EventConfig::default() };
        let (_, b) = params(&prof.scaled(k), &cfg);
        for q in Param::ALL {
            let want = match q {
                Param::T1 | Param::T2 | Param::T3 => a.get(q),
                _ => k * a.get(q),
            };
            prop_assert!(close(b.get(q), want, 1e-9), "{}: {} vs {}", q, b.get(q), want);
        }
    }

    #[test]
    fn sample_rate_barely_moves_the_parameters(rate in 100.0..1000.0f64) {
        let (_, base) = params(&unassisted(1000.0), &EventConfig::default());
        let (_, p) = params(&unassisted(rate), &EventConfig::default());
        for q in Param::ALL {
            let drift = (p.get(q) - base.get(q)).abs() / base.get(q).abs();
            prop_assert!(drift < 0.01, "{} drifts {:.3}% at {} Hz", q, 100.0 * drift, rate);
        }
    }
}

#[test]
fn detection_is_deterministic() {
    let prof = unassisted(100.0);
    assert_eq!(
        params(&prof, &EventConfig::default()),
        params(&prof, &EventConfig::default())
    );
}

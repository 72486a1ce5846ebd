//! Fixture generators. `cargo run -p sit2stand-cli --example make_fixtures`
//! writes them into `tests/fixtures`; the fixture test checks the committed
//! copies still match.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sit2stand::control::{run_episode, Scenario};
use sit2stand::kinematics::{forward_kinematics, generate_sts_trajectory, Vec2};
use sit2stand::perception::{SkeletonFrame, Vec3};
use sit2stand::table::{fmt_num, write_columns};

pub const BW: f64 = 866.0;

/// Delay applied to the plate in the model-vs-measured pair, s.
pub const PLATE_DELAY: f64 = 0.06;

/// Plate record: 500 N seated, 600 N at lift-off (0.5 s), `peak` N at
/// `t_peak`, easing to body weight at 1.5 s and holding it to 2 s. The seat
/// unloads to the 5 N threshold exactly at 0.5 s.
pub fn trapezoid(rate: f64, peak: f64, t_peak: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = (2.0 * rate).round() as usize;
    let t: Vec<f64> = (0..=n).map(|i| i as f64 / rate).collect();
    let rise = (peak - 600.0) / (t_peak - 0.5);
    let fall = (peak - BW) / (1.5 - t_peak);
    let fz = t
        .iter()
        .map(|&x| {
            if x <= 0.4 {
                500.0
            } else if x <= 0.5 {
                500.0 + 1000.0 * (x - 0.4)
            } else if x <= t_peak {
                600.0 + rise * (x - 0.5)
            } else if x < 1.5 {
                peak - fall * (x - t_peak)
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
    (t, fz, seat)
}

pub fn trapezoid_csv(rate: f64, peak: f64, t_peak: f64) -> Vec<u8> {
    let (t, fz, seat) = trapezoid(rate, peak, t_peak);
    let mut buf = Vec::new();
    write_columns(&mut buf, &["t", "fz", "seat_fz"], &[&t, &fz, &seat]).unwrap();
    buf
}

/// Peak force and time of each of the six trials.
pub const SIX_TRIALS: [(f64, f64); 6] = [
    (900.0, 0.80),
    (920.0, 0.78),
    (905.0, 0.82),
    (910.0, 0.76),
    (895.0, 0.84),
    (930.0, 0.80),
];

/// A tracked skeleton of the unassisted reference rise at 30 Hz with 5 mm
/// noise, and the plate record of the same rise delayed by [`PLATE_DELAY`].
pub fn model_vs_measured() -> (Vec<u8>, Vec<u8>) {
    let sc = Scenario {
        assist: false,
        ..Scenario::default()
    };
    let model = sc.model().unwrap();
    let traj = generate_sts_trajectory(&model, &sc.plan, 30.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let jitter = Normal::new(0.0, 0.005).unwrap();
    // camera frame: x forward, y lateral, z up; positions to 0.1 mm
    let mut noisy = |p: Vec2| {
        let r = |v: f64| (v * 1e4).round() / 1e4;
        Vec3::new(
            r(p.x + jitter.sample(&mut rng)),
            r(0.12 + jitter.sample(&mut rng)),
            r(p.y + jitter.sample(&mut rng)),
        )
    };
    let mut skeleton = String::from("# t joint:x,y,z,confidence ... (m)\n");
    for (q, &t) in traj.frames.iter().zip(&traj.timestamps) {
        let p = forward_kinematics(q, &model);
        let f = SkeletonFrame::new((t * 1e6).round() / 1e6)
            .with("shoulder_center", noisy(p.point_on_hat(0.9, 0.0)), 0.95)
            .with("pelvis", noisy(p.hip), 0.9)
            .with("knee", noisy(p.knee), 0.9)
            .with("ankle", noisy(p.ankle), 0.85)
            .with("foot", noisy(p.toe), 0.8);
        let _ = writeln!(skeleton, "{}", f.to_record());
    }

    let log = run_episode(&model, &sc.controller, &sc).unwrap();
    let g = &log.grf;
    let shift = (PLATE_DELAY * sc.rate).round() as usize;
    let delayed = |v: &[f64]| -> Vec<f64> { (0..v.len()).map(|i| v[i.saturating_sub(shift)]).collect() };
    let seat = g.seat.as_ref().unwrap();
    let cop = g.cop_x.as_ref().unwrap();
    let round = |v: Vec<f64>, k: f64| v.into_iter().map(|x| (x * k).round() / k).collect::<Vec<_>>();
    let mut plate = Vec::new();
    write_columns(
        &mut plate,
        &["t", "fz", "seat_fz", "cop_x"],
        &[
            &g.timestamps,
            &round(delayed(&g.vertical), 100.0),
            &round(delayed(seat), 100.0),
            &round(delayed(cop), 1e5),
        ],
    )
    .unwrap();
    (skeleton.into_bytes(), plate)
}

/// Illustrative parameter tables for a control group and a cane group,
/// shaped so the cane group has smaller F1, F2, |V1|, |V2|, T1 and T3 and a
/// longer T2.
pub fn cane_pair() -> (Vec<u8>, Vec<u8>) {
    let rows = |v: [(f64, f64); 12]| {
        let names = [
            "F1",
            "F1_pct_bw",
            "F2",
            "F2_pct_bw",
            "T1",
            "T2",
            "T3",
            "P1",
            "P2",
            "P3",
            "V1",
            "V2",
        ];
        let mut s = String::from("param,mean,sd,n\n");
        for (name, (m, sd)) in names.iter().zip(v) {
            let _ = writeln!(s, "{name},{},{},6", fmt_num(m), fmt_num(sd));
        }
        s.into_bytes()
    };
    let control = rows([
        (845.0, 21.0),
        (97.6, 2.4),
        (1012.0, 35.0),
        (116.9, 4.0),
        (1.42, 0.11),
        (0.38, 0.05),
        (0.95, 0.09),
        (905.0, 60.0),
        (352.0, 41.0),
        (880.0, 52.0),
        (440.0, 70.0),
        (-155.0, 24.0),
    ]);
    let cane = rows([
        (612.0, 30.0),
        (70.7, 3.5),
        (701.0, 28.0),
        (80.9, 3.2),
        (1.31, 0.10),
        (0.55, 0.07),
        (0.82, 0.08),
        (640.0, 44.0),
        (361.0, 38.0),
        (590.0, 47.0),
        (162.0, 33.0),
        (-61.0, 15.0),
    ]);
    (control, cane)
}

/// Every fixture file, named relative to the fixture directory.
pub fn all() -> Vec<(String, Vec<u8>)> {
    let mut out = vec![("trapezoid.csv".to_string(), trapezoid_csv(1000.0, 900.0, 0.8))];
    for (k, (peak, t_peak)) in SIX_TRIALS.iter().enumerate() {
        out.push((
            format!("trials/trial_{}.csv", k + 1),
            trapezoid_csv(500.0, *peak, *t_peak),
        ));
    }
    let (skeleton, plate) = model_vs_measured();
    out.push(("model_vs_measured/skeleton.txt".into(), skeleton));
    out.push(("model_vs_measured/plate.csv".into(), plate));
    let (control, cane) = cane_pair();
    out.push(("compare/control/parameters.csv".into(), control));
    out.push(("compare/cane/parameters.csv".into(), cane));
    out
}

pub fn fixture_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

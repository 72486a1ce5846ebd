mod common;

use common::reference_model;
use proptest::prelude::*;
use sit2stand::kinematics::*;
use sit2stand::Error;
use std::f64::consts::PI;

fn uniform(rate: f64, n: usize, f: impl Fn(f64) -> f64) -> PoseTrajectory {
    let t: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
    let frames = t
        .iter()
        .map(|&x| JointAngles {
            trunk_abs: f(x),
            hip: 2.0,
            knee: 2.0,
            ankle: 2.0,
        })
        .collect();
    PoseTrajectory::new(t, frames).unwrap()
}

fn reference_plan(t: (f64, f64, f64)) -> StsPlan {
    StsPlan::new(PhaseTimings::new(t.0, t.1, t.2))
}

#[test]
fn constant_angles_have_no_motion() {
    let d = differentiate(&uniform(100.0, 20, |_| 0.7)).unwrap();
    for (v, a) in d.velocities.iter().zip(&d.accelerations) {
        assert!(v.trunk_abs.abs() < 1e-12);
        assert!(a.trunk_abs.abs() < 1e-9);
    }
}

#[test]
fn linear_ramp_is_differentiated_exactly() {
    let d = differentiate(&uniform(100.0, 30, |t| 0.8 * t)).unwrap();
    for i in 1..29 {
        assert!((d.velocities[i].trunk_abs - 0.8).abs() < 1e-9);
        assert!(d.accelerations[i].trunk_abs.abs() < 1e-9);
    }
}

#[test]
fn quadratic_is_exact_on_a_ragged_grid() {
    let t: Vec<f64> = (0..12)
        .map(|i| i as f64 * 0.01 + if i % 2 == 1 { 0.003 } else { 0.0 })
        .collect();
    let frames = t
        .iter()
        .map(|&x| JointAngles {
            trunk_abs: 1.5 * x * x - x,
            ..JointAngles::UPRIGHT
        })
        .collect();
    let d = differentiate(&PoseTrajectory::new(t.clone(), frames).unwrap()).unwrap();
    for (i, &x) in t.iter().enumerate() {
        assert!((d.velocities[i].trunk_abs - (3.0 * x - 1.0)).abs() < 1e-9);
        assert!((d.accelerations[i].trunk_abs - 3.0).abs() < 1e-7);
    }
}

#[test]
fn sine_at_120_hz() {
    let d = differentiate(&uniform(120.0, 600, f64::sin)).unwrap();
    let worst = d
        .timestamps
        .iter()
        .zip(&d.accelerations)
        .map(|(t, a)| (a.trunk_abs + t.sin()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "acceleration error {worst}");
}

#[test]
fn too_few_frames_is_an_error() {
    let e = differentiate(&uniform(100.0, 4, |_| 0.0)).unwrap_err();
    assert!(matches!(e, Error::TooFewFrames { needed: 5, got: 4 }));
}

#[test]
fn seated_start_at_chair_height() {
    let m = reference_model();
    let traj = generate_sts_trajectory(&m, &reference_plan((1.0, 0.6, 1.0)), 100.0).unwrap();
    let p = forward_kinematics(&traj.frames[0], &m);
    assert!((p.hip.y - 0.40).abs() < 1e-9);
}

#[test]
fn duration_follows_the_phases() {
    let m = reference_model();
    let traj = generate_sts_trajectory(&m, &reference_plan((1.0, 1.0, 1.0)), 100.0).unwrap();
    assert!((traj.duration() - 3.0).abs() < 1e-12);
    assert_eq!(traj.len(), 301);
}

#[test]
fn ends_upright() {
    let m = reference_model();
    let traj = generate_sts_trajectory(&m, &reference_plan((1.0, 0.6, 1.0)), 100.0).unwrap();
    let last = traj.frames.last().unwrap();
    assert!(last.trunk_abs.abs() < 1e-6);
    assert!((last.knee - PI).abs() < 1e-6);
    assert!((last.hip - PI).abs() < 1e-6);
}

#[test]
fn impossible_chair_is_unreachable() {
    let m = reference_model();
    let mut plan = reference_plan((1.0, 0.6, 1.0));
    plan.chair_height = 3.0;
    let e = generate_sts_trajectory(&m, &plan, 100.0).unwrap_err();
    assert!(matches!(e, Error::Unreachable(_)));
    assert!(e.to_string().contains("unreachable"));
}

#[test]
fn slow_rate_is_rejected() {
    let m = reference_model();
    assert!(generate_sts_trajectory(&m, &reference_plan((1.0, 0.6, 1.0)), 20.0).is_err());
}

#[test]
fn generated_trajectory_is_smooth_and_rigid() {
    let m = reference_model();
    let mut plan = reference_plan((1.0, 0.6, 1.0));
    plan.lead_in = 0.3;
    plan.tail = 0.3;
    let rate = 200.0;
    let traj = generate_sts_trajectory(&m, &plan, rate).unwrap();
    let numeric = differentiate(&traj).unwrap();
    let ankle0 = forward_kinematics(&traj.frames[0], &m).ankle;
    for i in 0..traj.len() {
        let p = chain_pose(&traj, i, &m);
        assert_eq!(p.ankle, ankle0);
        assert!(((p.knee - p.ankle).norm() - m.shank.length).abs() < 1e-9 * m.shank.length);
        assert!(((p.hip - p.knee).norm() - m.thigh.length).abs() < 1e-9 * m.thigh.length);
        for x in numeric.velocities[i]
            .to_array()
            .iter()
            .chain(&numeric.accelerations[i].to_array())
        {
            assert!(x.is_finite());
        }
    }
    // a velocity jump per frame is bounded by the peak acceleration times dt
    let peak_acc = traj
        .accelerations
        .iter()
        .flat_map(|a| a.to_array())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    for w in traj.velocities.windows(2) {
        for (a, b) in w[0].to_array().iter().zip(w[1].to_array()) {
            assert!((a - b).abs() <= peak_acc / rate + 1e-9);
        }
    }
}

#[test]
fn trajectory_csv_round_trips() {
    let m = reference_model();
    let traj = generate_sts_trajectory(&m, &reference_plan((0.5, 0.3, 0.5)), 50.0).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"t,trunk,hip,knee,ankle,"));
    let back = PoseTrajectory::read_csv("traj.csv", buf.as_slice()).unwrap();
    assert_eq!(back, traj);
}

fn angles() -> impl Strategy<Value = JointAngles> {
    (-0.3..1.2f64, 0.2..PI, 0.2..PI, 0.2..PI).prop_map(|(trunk_abs, hip, knee, ankle)| JointAngles {
        trunk_abs,
        hip,
        knee,
        ankle,
    })
}

proptest! {
    #[test]
    fn links_keep_their_length(q in angles()) {
        let m = reference_model();
        let p = forward_kinematics(&q, &m);
        prop_assert!(((p.hip - p.knee).norm() - m.thigh.length).abs() < 1e-12);
        prop_assert!(((p.knee - p.ankle).norm() - m.shank.length).abs() < 1e-12);
        prop_assert!(((p.hat_top - p.hip).norm() - m.hat.length).abs() < 1e-12);
    }

    #[test]
    fn com_vectors_follow_the_offsets(q in angles()) {
        let m = reference_model();
        let p = forward_kinematics(&q, &m);
        prop_assert!((p.ag1().norm() - m.hat.com_distance()).abs() < 1e-12);
        prop_assert!((p.bg2().norm() - (m.thigh.length - m.thigh.com_distance())).abs() < 1e-12);
        prop_assert!((p.cg3().norm() - (m.shank.length - m.shank.com_distance())).abs() < 1e-12);
    }

    #[test]
    fn quadratics_differentiate_exactly(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64) {
        let d = differentiate(&uniform(100.0, 15, |t| a * t * t + b * t + c)).unwrap();
        for i in 1..14 {
            let t = d.timestamps[i];
            prop_assert!((d.velocities[i].trunk_abs - (2.0 * a * t + b)).abs() < 1e-9);
            prop_assert!((d.accelerations[i].trunk_abs - 2.0 * a).abs() < 1e-7);
        }
    }
}

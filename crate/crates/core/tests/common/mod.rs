#![allow(dead_code)]

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use sit2stand::anthro::{default_table, scale_anthropometrics, AnthropometricModel, Subject};
use sit2stand::dynamics::{Attachment, CaneForce};
use sit2stand::kinematics::{cross2, ChainPose, JointAngles, Vec2};

pub fn reference_model() -> AnthropometricModel {
    scale_anthropometrics(&Subject::reference(), &default_table()).unwrap()
}

/// Angles covering seated through standing, trunk leaning back or forward.
pub fn random_angles(rng: &mut impl Rng) -> JointAngles {
    JointAngles {
        trunk_abs: rng.random_range(-0.3..1.2),
        hip: rng.random_range(1.2..std::f64::consts::PI),
        knee: rng.random_range(1.3..std::f64::consts::PI),
        ankle: rng.random_range(2.2..std::f64::consts::PI),
    }
}

pub fn random_rates(rng: &mut impl Rng, scale: f64) -> JointAngles {
    JointAngles::from_array(std::array::from_fn(|_| rng.random_range(-scale..scale)))
}

pub fn random_cane(rng: &mut impl Rng, body_weight: f64) -> CaneForce {
    let attach = Attachment {
        fraction: rng.random_range(0.0..1.0),
        lateral: rng.random_range(-0.1..0.1),
    };
    CaneForce::tilted(
        rng.random_range(0.0..0.6) * body_weight,
        rng.random_range(-0.4..0.4),
        attach,
    )
}

/// Joint torques and transmission forces of a static pose from one linear
/// solve of all segment equilibria in world coordinates.
///
/// Unknowns are `[τ1, τ2, τ3, Ftx, Ftz, Flx, Flz, Fax, Faz]`. Ft acts on the
/// HAT at the hip, Fl on the thigh at the knee and Fa on the shank at the
/// ankle. The torques act on those same segments at those same joints.
pub fn statics_oracle(pose: &ChainPose, cane: &CaneForce, model: &AnthropometricModel) -> [f64; 9] {
    let g = |m: f64| Vec2::new(0.0, -m * model.gravity);
    let (g1, g2, g3) = (g(model.hat.mass), g(model.thigh.mass), g(model.shank.mass));
    let [p1, p2, p3, _] = pose.com;
    let fs = cane.force();
    let s = cane.point(pose);
    let (a, b, c) = (pose.hip, pose.knee, pose.ankle);

    let mut m = SMatrix::<f64, 9, 9>::zeros();
    let mut rhs = SVector::<f64, 9>::zeros();
    // moment of a force at r about the origin, as coefficients on (Fx, Fz)
    let lever = |r: Vec2| (-r.y, r.x);

    m[(0, 3)] = 1.0;
    rhs[0] = -fs.x - g1.x;
    m[(1, 4)] = 1.0;
    rhs[1] = -fs.y - g1.y;
    let (ax, az) = lever(a);
    m[(2, 0)] = 1.0;
    m[(2, 3)] = ax;
    m[(2, 4)] = az;
    rhs[2] = -cross2(&p1, &g1) - cross2(&s, &fs);

    m[(3, 3)] = -1.0;
    m[(3, 5)] = 1.0;
    rhs[3] = -g2.x;
    m[(4, 4)] = -1.0;
    m[(4, 6)] = 1.0;
    rhs[4] = -g2.y;
    let (bx, bz) = lever(b);
    m[(5, 0)] = -1.0;
    m[(5, 1)] = 1.0;
    m[(5, 3)] = -ax;
    m[(5, 4)] = -az;
    m[(5, 5)] = bx;
    m[(5, 6)] = bz;
    rhs[5] = -cross2(&p2, &g2);

    m[(6, 5)] = -1.0;
    m[(6, 7)] = 1.0;
    rhs[6] = -g3.x;
    m[(7, 6)] = -1.0;
    m[(7, 8)] = 1.0;
    rhs[7] = -g3.y;
    let (cx, cz) = lever(c);
    m[(8, 1)] = -1.0;
    m[(8, 2)] = 1.0;
    m[(8, 5)] = -bx;
    m[(8, 6)] = -bz;
    m[(8, 7)] = cx;
    m[(8, 8)] = cz;
    rhs[8] = -cross2(&p3, &g3);

    let x = m
        .lu()
        .solve(&rhs)
        .expect("equilibrium system is triangular and non-singular");
    std::array::from_fn(|i| x[i])
}

/// Relative difference with a floor of 1 on the scale, so quantities that
/// vanish in a pose are compared absolutely.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

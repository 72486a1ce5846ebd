//! Finite-difference velocities and accelerations.
//!
//! Interior samples use the three-point stencil centred on the sample, exact
//! for quadratics on any grid. The two end samples use a one-sided four-point
//! stencil, exact for cubics, so the end accelerations keep second-order
//! accuracy too. Weights come from Fornberg's recursion and so handle
//! non-uniform grids.

use super::{check_increasing, JointAngles, LowPass, PoseTrajectory};
use crate::error::{Error, Result};

const MIN_FRAMES: usize = 5;

/// Fills velocities and accelerations from the angle samples.
pub fn differentiate(traj: &PoseTrajectory) -> Result<PoseTrajectory> {
    differentiate_with(traj, None)
}

/// As [`differentiate`], low-pass filtering each angle first. Filtering
/// needs a uniform grid.
pub fn differentiate_with(traj: &PoseTrajectory, smoothing: Option<LowPass>) -> Result<PoseTrajectory> {
    let n = traj.len();
    if n < MIN_FRAMES {
        return Err(Error::TooFewFrames {
            needed: MIN_FRAMES,
            got: n,
        });
    }
    check_increasing(&traj.timestamps)?;
    let t = &traj.timestamps;

    let mut channels: [Vec<f64>; 4] = std::array::from_fn(|k| traj.frames.iter().map(|a| a.to_array()[k]).collect());
    if let Some(lp) = smoothing {
        let rate =
            uniform_rate(t).ok_or_else(|| Error::invalid("timestamps", "smoothing needs uniformly spaced samples"))?;
        for ch in channels.iter_mut() {
            *ch = lp.apply(ch, rate)?;
        }
    }

    let mut out = traj.clone();
    for i in 0..n {
        let (lo, hi) = if i == 0 {
            (0, 4)
        } else if i == n - 1 {
            (n - 4, n)
        } else {
            (i - 1, i + 2)
        };
        let w = fornberg(t[i], &t[lo..hi], 2);
        let mut q = [0.0; 4];
        let mut v = [0.0; 4];
        let mut a = [0.0; 4];
        for k in 0..4 {
            let x = &channels[k][lo..hi];
            q[k] = channels[k][i];
            v[k] = dot(&w[1], x);
            a[k] = dot(&w[2], x);
        }
        out.frames[i] = JointAngles::from_array(q);
        out.velocities[i] = JointAngles::from_array(v);
        out.accelerations[i] = JointAngles::from_array(a);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sampling rate when the grid is uniform to 1e-6 of a step.
pub(crate) fn uniform_rate(t: &[f64]) -> Option<f64> {
    let n = t.len();
    if n < 2 {
        return None;
    }
    let h = (t[n - 1] - t[0]) / (n - 1) as f64;
    let uniform = t.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-6 * h);
    uniform.then_some(1.0 / h)
}

/// Weights `w[m][j]` so that `Σ_j w[m][j]·f(xs[j])` approximates the m-th
/// derivative of `f` at `x0`.
pub(crate) fn fornberg(x0: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj_of(t: Vec<f64>, f: impl Fn(f64) -> f64) -> PoseTrajectory {
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

    #[test]
    fn central_weights_on_uniform_grid() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn quadratic_exact_on_nonuniform_grid() {
        let t: Vec<f64> = (0..12).map(|i| i as f64 * 0.1 + 0.013 * (i as f64).sin()).collect();
        let d = differentiate(&traj_of(t.clone(), |x| 3.0 * x * x - x + 0.5)).unwrap();
        for (i, &x) in t.iter().enumerate() {
            assert!((d.velocities[i].trunk_abs - (6.0 * x - 1.0)).abs() < 1e-9);
            assert!((d.accelerations[i].trunk_abs - 6.0).abs() < 1e-7);
        }
    }

    #[test]
    fn too_few_frames() {
        let t: Vec<f64> = (0..4).map(|i| i as f64).collect();
        assert!(matches!(
            differentiate(&traj_of(t, |x| x)),
            Err(Error::TooFewFrames { .. })
        ));
    }

    #[test]
    fn smoothing_needs_uniform_grid() {
        let t = vec![0.0, 0.1, 0.25, 0.3, 0.4, 0.5];
        assert!(differentiate_with(&traj_of(t, |x| x), Some(LowPass::default())).is_err());
    }
}

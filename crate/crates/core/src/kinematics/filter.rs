//! Zero-phase second-order Butterworth low-pass.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    /// Cutoff frequency, Hz.
    pub cutoff: f64,
}

impl Default for LowPass {
    fn default() -> Self {
        LowPass { cutoff: 6.0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn butterworth(cutoff: f64, rate: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff / rate).tan();
        let q = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + q * k + k * k);
        let b0 = k * k * norm;
        Biquad {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - q * k + k * k) * norm],
        }
    }

    /// Direct form II transposed, state primed to a constant input `x0`.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let mut z1 = x0 * (1.0 - b0);
        let mut z2 = x0 * (b2 - a2);
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + z1;
            z1 = b1 * xin - a1 * y + z2;
            z2 = b2 * xin - a2 * y;
            *v = y;
        }
    }
}

impl LowPass {
    /// Forward-backward filtering of a uniformly sampled signal.
    ///
    /// The straight line through the end samples is removed first and added
    /// back afterwards, and the residual is padded by odd reflection. Linear
    /// signals therefore pass through unchanged.
    pub fn apply(&self, x: &[f64], rate: f64) -> Result<Vec<f64>> {
        if !(self.cutoff > 0.0 && self.cutoff < 0.5 * rate) {
            return Err(Error::invalid(
                "cutoff",
                format!("{} Hz must lie in (0, {}) Hz", self.cutoff, 0.5 * rate),
            ));
        }
        let n = x.len();
        if n < 3 {
            return Ok(x.to_vec());
        }
        let slope = (x[n - 1] - x[0]) / (n - 1) as f64;
        let trend = |i: usize| x[0] + slope * i as f64;
        let r: Vec<f64> = (0..n).map(|i| x[i] - trend(i)).collect();

        let pad = (n - 1).min(((3.0 * rate / self.cutoff).ceil() as usize).max(12));
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * r[0] - r[i]);
        }
        ext.extend_from_slice(&r);
        for i in 1..=pad {
            ext.push(2.0 * r[n - 1] - r[n - 1 - i]);
        }

        let f = Biquad::butterworth(self.cutoff, rate);
        f.run(&mut ext);
        ext.reverse();
        f.run(&mut ext);
        ext.reverse();
        Ok((0..n).map(|i| ext[pad + i] + trend(i)).collect())
    }
}

//! Brute-force references shared by the oracle and acceptance targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use holovlc::cgh::Hologram;
use holovlc::scene::{Luminaire, Receiver};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_phases(rows: usize, cols: usize, seed: u64) -> Hologram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (0..rows * cols)
        .map(|_| rng.gen_range(0.0..2.0 * PI))
        .collect();
    Hologram::phase_only(rows, cols, p).unwrap()
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Direct double sum over cells for every reconstruction sample.
pub fn brute_far_field(h: &Hologram, rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let p = i as f64 - (rows / 2) as f64;
        for j in 0..cols {
            let q = j as f64 - (cols / 2) as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h.rows {
                let k = r as f64 - (h.rows / 2) as f64;
                for c in 0..h.cols {
                    let l = c as f64 - (h.cols / 2) as f64;
                    let arg = 2.0 * PI * (p * k / rows as f64 + q * l / cols as f64);
                    let t = Complex64::from_polar(
                        h.amplitudes[r * h.cols + c],
                        h.phases[r * h.cols + c],
                    );
                    acc += t * Complex64::from_polar(1.0, arg);
                }
            }
            let env = h.pitch_r * sinc(p / rows as f64) * h.pitch_s * sinc(q / cols as f64);
            out.push(acc * env);
        }
    }
    out
}

/// Sum over the 3 x 3 emitters of A (n+1)/(2 pi d^2) cos^n(phi) cos(theta),
/// for a downward luminaire and an upward receiver with a 40 degree FOV.
pub fn analytic_los(l: &Luminaire, rx: &Receiver) -> f64 {
    let n = l.lambertian_order;
    let mut expect = 0.0;
    for e in l.emitters() {
        let d = rx.position - e;
        let dist = d.norm();
        let cos = -d.z / dist;
        if cos >= (40f64).to_radians().cos() {
            expect += l.power_w / 9.0 * rx.area_m2 * (n + 1.0) / (2.0 * PI * dist * dist)
                * cos.powf(n)
                * cos;
        }
    }
    expect
}

/// Mean delay and RMS spread with P^2 weights, computed in two passes.
pub fn two_pass(taps: &[(f64, f64)]) -> (f64, f64) {
    let w: f64 = taps.iter().map(|(_, p)| p * p).sum();
    let mu = taps.iter().map(|(t, p)| t * p * p).sum::<f64>() / w;
    let var = taps
        .iter()
        .map(|(t, p)| (t - mu) * (t - mu) * p * p)
        .sum::<f64>()
        / w;
    (mu, var.sqrt())
}

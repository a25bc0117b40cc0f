//! Figures of merit computed from an impulse response.
//!
//! Delay moments weight each bin by the square of its power. The 3 dB
//! bandwidth uses the optical convention, 10 log10(|H(f)| / |H(0)|) = -3.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::ImpulseResponse;
use crate::{Error, Result};

/// Zero-padding factor applied before the coarse FFT search.
pub const PAD_FACTOR: usize = 16;
/// Step of the direct transform used to refine the crossing, Hz.
pub const REFINE_STEP_HZ: f64 = 1e6;
/// Bandwidth-to-rate ratio for OOK signalling.
pub const OOK_BANDWIDTH_PER_BIT: f64 = 0.7;

const MIN_FFT_LEN: usize = 4096;

fn squared_weights(ir: &ImpulseResponse) -> Result<f64> {
    let s: f64 = ir.bins.iter().map(|p| p * p).sum();
    if !(s > 0.0) {
        return Err(Error::domain("impulse response carries no power"));
    }
    Ok(s)
}

/// Power-squared weighted mean arrival time, seconds.
pub fn mean_delay(ir: &ImpulseResponse) -> Result<f64> {
    let norm = squared_weights(ir)?;
    let num: f64 = ir
        .bins
        .iter()
        .enumerate()
        .map(|(k, p)| ir.time(k) * p * p)
        .sum();
    Ok(num / norm)
}

/// Power-squared weighted RMS spread about the mean delay, seconds.
pub fn delay_spread(ir: &ImpulseResponse) -> Result<f64> {
    let norm = squared_weights(ir)?;
    let mu = mean_delay(ir)?;
    let num: f64 = ir
        .bins
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let d = ir.time(k) - mu;
            d * d * p * p
        })
        .sum();
    Ok((num / norm).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub hz: f64,
    /// No crossing below Nyquist; `hz` is then the Nyquist frequency.
    pub saturated: bool,
}

/// |H(f)| by direct summation over the nonzero bins.
fn dtft_magnitude(taps: &[(f64, f64)], f: f64) -> f64 {
    let w = -2.0 * std::f64::consts::PI * f;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(t, p) in taps {
        acc += Complex64::from_polar(p, w * t);
    }
    acc.norm()
}

fn db(mag: f64, dc: f64) -> f64 {
    10.0 * (mag / dc).log10()
}

/// Lowest frequency at which the response falls 3 dB below its DC value.
pub fn bandwidth_3db(ir: &ImpulseResponse) -> Result<Bandwidth> {
    let dc: f64 = ir.bins.iter().sum();
    if !(dc > 0.0) {
        return Err(Error::domain("|H(0)| is zero"));
    }
    let nyquist = 0.5 / ir.dt;
    let len = (ir.bins.len().next_power_of_two() * PAD_FACTOR).max(MIN_FFT_LEN);
    let mut buf: Vec<Complex64> = ir.bins.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let df = 1.0 / (len as f64 * ir.dt);
    let Some(m) = (1..=len / 2).find(|&m| db(buf[m].norm(), dc) <= -3.0) else {
        return Ok(Bandwidth {
            hz: nyquist,
            saturated: true,
        });
    };

    // refine between the bracketing FFT samples on a 1 MHz grid
    let taps: Vec<(f64, f64)> = ir.taps().map(|(t, p)| (t - ir.t0, p)).collect();
    let lo = (m - 1) as f64 * df;
    let hi = m as f64 * df;
    let mut f_prev = lo;
    let mut l_prev = db(dtft_magnitude(&taps, lo), dc);
    let mut f = lo;
    loop {
        f = (f + REFINE_STEP_HZ).min(hi);
        let l = db(dtft_magnitude(&taps, f), dc);
        if l <= -3.0 {
            let hz = if l_prev > -3.0 {
                f_prev + (f - f_prev) * (l_prev + 3.0) / (l_prev - l)
            } else {
                f_prev
            };
            return Ok(Bandwidth {
                hz,
                saturated: false,
            });
        }
        if f >= hi {
            // the coarse sample said hi is below -3 dB; trust it
            return Ok(Bandwidth {
                hz: hi,
                saturated: false,
            });
        }
        f_prev = f;
        l_prev = l;
    }
}

/// 10 log10(p_with / p_without), dB.
pub fn power_gain_db(p_with: f64, p_without: f64) -> Result<f64> {
    if !(p_with > 0.0) || !(p_without > 0.0) {
        return Err(Error::domain(format!(
            "power gain needs positive powers, got {p_with} and {p_without}"
        )));
    }
    Ok(10.0 * (p_with / p_without).log10())
}

/// OOK bit rate supported by a channel bandwidth, bit/s.
pub fn ook_data_rate(bandwidth_hz: f64) -> f64 {
    bandwidth_hz / OOK_BANDWIDTH_PER_BIT
}

/// Optical path loss, dB.
pub fn path_loss_db(ir: &ImpulseResponse, transmitted_w: f64) -> Result<f64> {
    let received = ir.received_power();
    if !(transmitted_w > 0.0) || !(received > 0.0) {
        return Err(Error::domain(format!(
            "path loss needs positive powers, got received {received} W and transmitted {transmitted_w} W"
        )));
    }
    Ok(-10.0 * (received / transmitted_w).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub mean_delay_s: f64,
    pub delay_spread_s: f64,
    pub bandwidth_hz: f64,
    pub bandwidth_saturated: bool,
    pub path_loss_db: f64,
    pub received_power_w: f64,
    pub data_rate_bps: f64,
}

impl ChannelMetrics {
    pub fn from_ir(ir: &ImpulseResponse, transmitted_w: f64) -> Result<Self> {
        let bw = bandwidth_3db(ir)?;
        Ok(ChannelMetrics {
            mean_delay_s: mean_delay(ir)?,
            delay_spread_s: delay_spread(ir)?,
            bandwidth_hz: bw.hz,
            bandwidth_saturated: bw.saturated,
            path_loss_db: path_loss_db(ir, transmitted_w)?,
            received_power_w: ir.received_power(),
            data_rate_bps: ook_data_rate(bw.hz),
        })
    }
}

//! Best-light-source selection.
//!
//! Luminaires are switched on one at a time in ascending id order, the
//! receiver reports an SNR for each over an ideal uplink, and the controller
//! keeps the highest. The controller never sees the receiver position.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{EmitterModel, ImpulseResponse, TraceSettings, Tracer};
use crate::scene::{Luminaire, Receiver, Scene};
use crate::{Error, Result};

/// Relative SNR difference below which two probes count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub luminaire_id: u32,
    pub snr: f64,
    pub received_power_w: f64,
}

/// Photodetector responsivity and total noise variance, identical for every
/// probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// A/W.
    pub responsivity: f64,
    /// A^2.
    pub variance: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            responsivity: 0.5,
            variance: 1e-16,
        }
    }
}

/// Electrical SNR, (R * Pr)^2 / sigma^2.
pub fn snr(ir: &ImpulseResponse, noise: &NoiseModel) -> Result<f64> {
    if !(noise.variance > 0.0) {
        return Err(Error::config(format!(
            "noise variance must be positive, got {}",
            noise.variance
        )));
    }
    let i = noise.responsivity * ir.received_power();
    Ok(i * i / noise.variance)
}

/// Highest SNR wins; near-ties go to the lowest id.
pub fn select_best(reports: &[ProbeReport]) -> Result<u32> {
    let max = reports
        .iter()
        .map(|r| r.snr)
        .fold(f64::NEG_INFINITY, f64::max);
    reports
        .iter()
        .filter(|r| r.snr >= max - TIE_TOLERANCE * max.abs())
        .map(|r| r.luminaire_id)
        .min()
        .ok_or_else(|| Error::domain("no probe reports to select from"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Probing(u32),
    Selected(u32),
}

/// Controller state machine: idle, then one probe per luminaire, then a
/// single selected source.
#[derive(Debug, Clone)]
pub struct SelectionState {
    phase: Phase,
    pending: Vec<u32>,
    reports: Vec<ProbeReport>,
}

impl Default for SelectionState {
    fn default() -> Self {
        SelectionState::new()
    }
}

impl SelectionState {
    pub fn new() -> Self {
        SelectionState {
            phase: Phase::Idle,
            pending: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn reports(&self) -> &[ProbeReport] {
        &self.reports
    }

    /// Starts a probing round over `ids`; returns the first source to light.
    pub fn start(&mut self, ids: &[u32]) -> Result<u32> {
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("luminaire ids must be distinct"));
        }
        sorted.reverse();
        let first = sorted
            .pop()
            .ok_or_else(|| Error::config("no luminaires to probe"))?;
        self.pending = sorted;
        self.reports.clear();
        self.phase = Phase::Probing(first);
        Ok(first)
    }

    /// Records the report for the active source. Returns the next source to
    /// light, or `None` once a source has been selected.
    pub fn report(&mut self, r: ProbeReport) -> Result<Option<u32>> {
        match self.phase {
            Phase::Probing(active) if active == r.luminaire_id => {}
            Phase::Probing(active) => {
                return Err(Error::domain(format!(
                    "report from luminaire {} while {} is active",
                    r.luminaire_id, active
                )))
            }
            _ => return Err(Error::domain("no probe in progress")),
        }
        if !(r.snr >= 0.0) {
            return Err(Error::domain(format!("negative snr {}", r.snr)));
        }
        self.reports.push(r);
        match self.pending.pop() {
            Some(next) => {
                self.phase = Phase::Probing(next);
                Ok(Some(next))
            }
            None => {
                self.phase = Phase::Selected(select_best(&self.reports)?);
                Ok(None)
            }
        }
    }

    pub fn selected(&self) -> Option<u32> {
        match self.phase {
            Phase::Selected(id) => Some(id),
            _ => None,
        }
    }
}

/// Produces the impulse response seen while only `luminaire` is lit.
pub trait ChannelEvaluator: Sync {
    fn evaluate(&self, luminaire: &Luminaire, receiver: &Receiver) -> Result<ImpulseResponse>;
}

/// Plain Lambertian ray tracing at fixed settings.
pub struct TracerEvaluator<'a> {
    pub tracer: &'a Tracer<'a>,
    pub settings: TraceSettings,
}

impl ChannelEvaluator for TracerEvaluator<'_> {
    fn evaluate(&self, luminaire: &Luminaire, receiver: &Receiver) -> Result<ImpulseResponse> {
        self.tracer.impulse_response(
            luminaire,
            &EmitterModel::Lambertian,
            receiver,
            &self.settings,
        )
    }
}

/// Outcome of a full probing round.
#[derive(Debug, Clone)]
pub struct ProbeCycle {
    pub reports: Vec<ProbeReport>,
    pub selected: u32,
    /// Impulse responses in report order.
    pub responses: Vec<ImpulseResponse>,
}

/// Probes every luminaire and selects one. Links may be evaluated in
/// parallel; reports are committed in ascending id order.
pub fn probe_cycle(
    scene: &Scene,
    receiver: &Receiver,
    evaluator: &dyn ChannelEvaluator,
    noise: &NoiseModel,
) -> Result<ProbeCycle> {
    let mut lums: Vec<&Luminaire> = scene.luminaires.iter().collect();
    lums.sort_by_key(|l| l.id);
    let responses: Vec<ImpulseResponse> = lums
        .par_iter()
        .map(|l| evaluator.evaluate(l, receiver))
        .collect::<Result<_>>()?;

    let ids: Vec<u32> = lums.iter().map(|l| l.id).collect();
    let mut state = SelectionState::new();
    let mut active = Some(state.start(&ids)?);
    let mut k = 0;
    while let Some(id) = active {
        let ir = &responses[k];
        active = state.report(ProbeReport {
            luminaire_id: id,
            snr: snr(ir, noise)?,
            received_power_w: ir.received_power(),
        })?;
        k += 1;
    }
    Ok(ProbeCycle {
        reports: state.reports().to_vec(),
        selected: state.selected().expect("round finished"),
        responses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub receiver_x: f64,
    pub receiver_y: f64,
    pub selected_id: u32,
    pub snr: f64,
}

pub fn write_selection_trace(path: &Path, rows: &[SelectionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(id: u32, snr: f64) -> ProbeReport {
        ProbeReport {
            luminaire_id: id,
            snr,
            received_power_w: 0.0,
        }
    }

    #[test]
    fn argmax_and_ties() {
        assert_eq!(
            select_best(&[rep(1, 10.0), rep(2, 20.0), rep(3, 15.0)]).unwrap(),
            2
        );
        assert_eq!(select_best(&[rep(7, 20.0), rep(4, 20.0)]).unwrap(), 4);
        assert_eq!(select_best(&[rep(5, 0.0)]).unwrap(), 5);
        assert!(select_best(&[]).is_err());
    }

    #[test]
    fn snr_square_law() {
        let noise = NoiseModel::default();
        let a = ImpulseResponse::new(1e-11, 0.0, vec![1e-6]).unwrap();
        let b = ImpulseResponse::new(1e-11, 0.0, vec![2e-6]).unwrap();
        let ratio = snr(&b, &noise).unwrap() / snr(&a, &noise).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
        let z = ImpulseResponse::new(1e-11, 0.0, vec![0.0]).unwrap();
        assert_eq!(snr(&z, &noise).unwrap(), 0.0);
        let bad = NoiseModel {
            variance: 0.0,
            ..noise
        };
        assert!(snr(&a, &bad).is_err());
    }

    #[test]
    fn controller_walks_ids_in_order() {
        let mut s = SelectionState::new();
        assert_eq!(s.phase(), Phase::Idle);
        assert_eq!(s.start(&[3, 1, 2]).unwrap(), 1);
        assert!(s.report(rep(2, 1.0)).is_err());
        assert_eq!(s.report(rep(1, 1.0)).unwrap(), Some(2));
        assert_eq!(s.report(rep(2, 5.0)).unwrap(), Some(3));
        assert_eq!(s.report(rep(3, 2.0)).unwrap(), None);
        assert_eq!(s.selected(), Some(2));
        assert!(s.start(&[1, 1]).is_err());
    }
}

//! Batch runners behind the `holovlc` command line tool.
//!
//! Every runner is deterministic for a given [`RunConfig`]: receiver positions
//! are processed in order, hologram design is seeded, and no output carries a
//! timestamp.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cgh::{
    self, AnnealOutcome, AnnealSchedule, BeamMap, Hologram, HologramHeader, TargetPattern,
    DEFAULT_HOLOGRAM_SIZE,
};
use crate::channel::{
    BeamPattern, EmitterModel, FloorCell, ImpulseResponse, TraceSettings, Tracer,
};
use crate::metrics::{self, ChannelMetrics};
use crate::photometry::{self, Grid, Redirection};
use crate::sbls::{self, NoiseModel, SelectionRow, TracerEvaluator};
use crate::scene::{self, Receiver, Scene};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Scene file; room A when absent.
    pub scene: Option<PathBuf>,
    pub x_values: Vec<f64>,
    /// Inclusive y range of the sweep lines.
    pub y_range: (f64, f64),
    pub step: f64,
    pub order: u8,
    pub dt: f64,
    pub cgh: bool,
    /// Design share of the selected luminaire's power sent as a beam.
    pub fraction: f64,
    /// Precomputed hologram; designed from `schedule` when absent.
    pub hologram: Option<PathBuf>,
    pub schedule: AnnealSchedule,
    pub seed: u64,
    pub noise: NoiseModel,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: None,
            x_values: vec![1.0, 2.0],
            y_range: (1.0, 7.0),
            step: 1.0,
            order: 2,
            dt: crate::channel::DEFAULT_BIN_WIDTH,
            cgh: true,
            fraction: 0.3,
            hologram: None,
            schedule: AnnealSchedule::default(),
            seed: 1,
            noise: NoiseModel::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::config(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::config(format!(
                "fraction {} outside [0, 1]",
                self.fraction
            )));
        }
        if self.x_values.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("x values must be finite"));
        }
        let (y0, y1) = self.y_range;
        if !(y0.is_finite() && y1.is_finite() && y0 <= y1) {
            return Err(Error::config(format!("bad y range {y0}..{y1}")));
        }
        self.settings().validate()?;
        self.schedule.validate()
    }

    pub fn settings(&self) -> TraceSettings {
        TraceSettings {
            max_order: self.order,
            dt: self.dt,
        }
    }

    /// Receiver (x, y) positions, x-major.
    pub fn positions(&self) -> Vec<(f64, f64)> {
        let (y0, y1) = self.y_range;
        let n = ((y1 - y0) / self.step + 1e-9).floor() as usize + 1;
        self.x_values
            .iter()
            .flat_map(|&x| (0..n).map(move |k| (x, y0 + k as f64 * self.step)))
            .collect()
    }

    pub fn load_scene(&self) -> Result<Scene> {
        match &self.scene {
            Some(p) => Scene::load(p),
            None => Ok(scene::build_room_a()),
        }
    }

    fn anneal_schedule(&self) -> AnnealSchedule {
        AnnealSchedule {
            seed: self.seed,
            ..self.schedule.clone()
        }
    }
}

/// Hologram behind the beam map, with the annealing outcome when it was
/// designed in this run.
pub struct BeamDesign {
    pub hologram: Hologram,
    pub map: BeamMap,
    pub outcome: Option<AnnealOutcome>,
}

pub fn design_beam(config: &RunConfig) -> Result<BeamDesign> {
    let target = TargetPattern::default_cell(config.fraction);
    let (hologram, outcome) = match &config.hologram {
        Some(path) => (Hologram::load(path)?.0, None),
        None => {
            let out = cgh::optimize(
                &target,
                &config.anneal_schedule(),
                DEFAULT_HOLOGRAM_SIZE,
                DEFAULT_HOLOGRAM_SIZE,
            )?;
            (out.hologram.clone(), Some(out))
        }
    };
    let map = cgh::beam_intensity_map(&hologram, &target)?;
    Ok(BeamDesign {
        hologram,
        map,
        outcome,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub selected_id: u32,
    pub cgh: bool,
    #[serde(rename = "Pr_W")]
    pub pr_w: f64,
    #[serde(rename = "PL_dB")]
    pub pl_db: f64,
    pub mu_s: f64,
    #[serde(rename = "D_s")]
    pub d_s: f64,
    #[serde(rename = "BW_Hz")]
    pub bw_hz: f64,
    pub rate_bps: f64,
}

impl MetricsRow {
    fn new(rx: &Receiver, id: u32, cgh: bool, m: &ChannelMetrics) -> Self {
        MetricsRow {
            x: rx.position.x,
            y: rx.position.y,
            z: rx.position.z,
            selected_id: id,
            cgh,
            pr_w: m.received_power_w,
            pl_db: m.path_loss_db,
            mu_s: m.mean_delay_s,
            d_s: m.delay_spread_s,
            bw_hz: m.bandwidth_hz,
            rate_bps: m.data_rate_bps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub selected_id: u32,
    #[serde(rename = "Pr_without_W")]
    pub pr_without_w: f64,
    #[serde(rename = "Pr_with_W")]
    pub pr_with_w: f64,
    #[serde(rename = "gain_dB")]
    pub gain_db: f64,
    /// Receiver lies inside the selected luminaire's beam cell.
    pub in_cell: bool,
}

/// One receiver position of a sweep.
#[derive(Debug, Clone)]
pub struct PositionResult {
    pub receiver: Receiver,
    pub selected_id: u32,
    pub snr: f64,
    pub without: ChannelMetrics,
    pub with: Option<ChannelMetrics>,
    pub ir_without: ImpulseResponse,
    pub ir_with: Option<ImpulseResponse>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub positions: Vec<PositionResult>,
    /// Share of the selected luminaire's power actually carried by the beam.
    pub beam_fraction: Option<f64>,
}

impl SweepResult {
    /// Without-CGH row followed by the with-CGH row for every position.
    pub fn metrics_rows(&self) -> Vec<MetricsRow> {
        let mut rows = Vec::new();
        for p in &self.positions {
            rows.push(MetricsRow::new(
                &p.receiver,
                p.selected_id,
                false,
                &p.without,
            ));
            if let Some(w) = &p.with {
                rows.push(MetricsRow::new(&p.receiver, p.selected_id, true, w));
            }
        }
        rows
    }

    pub fn gain_rows(&self, scene: &Scene) -> Result<Vec<GainRow>> {
        self.positions
            .iter()
            .filter_map(|p| p.with.as_ref().map(|w| (p, w)))
            .map(|(p, w)| {
                let l = scene.luminaire(p.selected_id).expect("selected from scene");
                let pos = p.receiver.position;
                Ok(GainRow {
                    x: pos.x,
                    y: pos.y,
                    z: pos.z,
                    selected_id: p.selected_id,
                    pr_without_w: p.without.received_power_w,
                    pr_with_w: w.received_power_w,
                    gain_db: metrics::power_gain_db(
                        w.received_power_w,
                        p.without.received_power_w,
                    )?,
                    in_cell: FloorCell::under(l).contains_xy(pos.x, pos.y),
                })
            })
            .collect()
    }

    pub fn selection_rows(&self) -> Vec<SelectionRow> {
        self.positions
            .iter()
            .map(|p| SelectionRow {
                receiver_x: p.receiver.position.x,
                receiver_y: p.receiver.position.y,
                selected_id: p.selected_id,
                snr: p.snr,
            })
            .collect()
    }
}

fn checked_receivers(config: &RunConfig, scene: &Scene) -> Result<Vec<Receiver>> {
    config
        .positions()
        .into_iter()
        .map(|(x, y)| {
            let rx = Receiver::at(x, y);
            if !scene.contains(rx.position) {
                return Err(Error::config(format!(
                    "receiver position ({x}, {y}, {}) lies outside the room",
                    rx.position.z
                )));
            }
            Ok(rx)
        })
        .collect()
}

/// Selects a source per position and traces it without and (optionally) with
/// the hologram beam.
pub fn run_sweep_on(
    config: &RunConfig,
    scene: &Scene,
    beam: Option<&BeamMap>,
) -> Result<SweepResult> {
    config.validate()?;
    scene.validate()?;
    let receivers = checked_receivers(config, scene)?;
    let tracer = Tracer::new(scene)?;
    let settings = config.settings();
    let evaluator = TracerEvaluator {
        tracer: &tracer,
        settings,
    };
    let mut positions = Vec::with_capacity(receivers.len());
    let mut beam_fraction = None;
    for rx in receivers {
        let cycle = sbls::probe_cycle(scene, &rx, &evaluator, &config.noise)?;
        let k = cycle
            .reports
            .iter()
            .position(|r| r.luminaire_id == cycle.selected)
            .expect("selected id was probed");
        let l = scene.luminaire(cycle.selected).expect("probed id exists");
        let ir_without = cycle.responses[k].clone();
        let without = ChannelMetrics::from_ir(&ir_without, l.power_w)?;
        let (with, ir_with) = match beam {
            Some(map) => {
                let pattern =
                    BeamPattern::from_design(config.fraction, FloorCell::under(l), map.clone())?;
                beam_fraction = Some(pattern.fraction);
                let ir = tracer.impulse_response(l, &EmitterModel::Cgh(pattern), &rx, &settings)?;
                (Some(ChannelMetrics::from_ir(&ir, l.power_w)?), Some(ir))
            }
            None => (None, None),
        };
        positions.push(PositionResult {
            receiver: rx,
            selected_id: cycle.selected,
            snr: cycle.reports[k].snr,
            without,
            with,
            ir_without,
            ir_with,
        });
    }
    Ok(SweepResult {
        positions,
        beam_fraction,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    extra: T,
}

pub fn write_manifest<T: Serialize>(config: &RunConfig, command: &str, extra: T) -> Result<()> {
    let path = config.out_dir.join("manifest.json");
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        extra,
    };
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Full sweep: loads inputs, runs, and writes `metrics.csv`, `gain.csv`,
/// `selection.csv` and `manifest.json` into the output directory.
pub fn run_sweep(config: &RunConfig) -> Result<SweepResult> {
    config.validate()?;
    let scene = config.load_scene()?;
    let design = if config.cgh {
        Some(design_beam(config)?)
    } else {
        None
    };
    let result = run_sweep_on(config, &scene, design.as_ref().map(|d| &d.map))?;
    ensure_dir(&config.out_dir)?;
    write_rows(&config.out_dir.join("metrics.csv"), &result.metrics_rows())?;
    if config.cgh {
        write_rows(&config.out_dir.join("gain.csv"), &result.gain_rows(&scene)?)?;
    }
    sbls::write_selection_trace(
        &config.out_dir.join("selection.csv"),
        &result.selection_rows(),
    )?;
    write_manifest(
        config,
        "sweep",
        serde_json::json!({
            "beam_efficiency": design.as_ref().map(|d| d.map.efficiency),
            "beam_fraction": result.beam_fraction,
        }),
    )?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IllumRow {
    pub fraction: f64,
    pub min_lux: f64,
    pub compliant: bool,
}

/// Luminaire whose beam the illumination study redirects: the one nearest the
/// room origin.
pub fn corner_luminaire(scene: &Scene) -> Result<u32> {
    scene
        .luminaires
        .iter()
        .min_by(|a, b| {
            let da = a.center.x.hypot(a.center.y);
            let db = b.center.x.hypot(b.center.y);
            da.total_cmp(&db).then(a.id.cmp(&b.id))
        })
        .map(|l| l.id)
        .ok_or_else(|| Error::config("scene has no luminaires"))
}

/// Baseline row (fraction 0) followed by one row per requested fraction, on
/// a scene calibrated to the baseline minimum.
pub fn run_illumination_on(
    scene: &Scene,
    fractions: &[f64],
    map: &BeamMap,
) -> Result<Vec<IllumRow>> {
    let scene = photometry::calibrated(scene, photometry::BASELINE_MIN_LUX)?;
    let id = corner_luminaire(&scene)?;
    let l = scene.luminaire(id).expect("exists");
    let base = photometry::compliance_min(&scene, None);
    let mut rows = vec![IllumRow {
        fraction: 0.0,
        min_lux: base.min_lux,
        compliant: base.compliant,
    }];
    for &f in fractions {
        let beam = BeamPattern::from_design(f, FloorCell::under(l), map.clone())?;
        let c = photometry::compliance_min(
            &scene,
            Some(&Redirection {
                luminaire_id: id,
                beam,
            }),
        );
        rows.push(IllumRow {
            fraction: f,
            min_lux: c.min_lux,
            compliant: c.compliant,
        });
    }
    Ok(rows)
}

/// Writes `illum.csv`, the baseline map (matrix and long form), one long-form
/// map per fraction, and `manifest.json`.
pub fn run_illumination(config: &RunConfig, fractions: &[f64]) -> Result<Vec<IllumRow>> {
    config.validate()?;
    let scene = config.load_scene()?;
    let map = match &config.hologram {
        Some(_) => design_beam(config)?.map,
        None => BeamMap::uniform(cgh::DEFAULT_WINDOW, cgh::DEFAULT_WINDOW),
    };
    let rows = run_illumination_on(&scene, fractions, &map)?;
    ensure_dir(&config.out_dir)?;
    write_rows(&config.out_dir.join("illum.csv"), &rows)?;

    let cal = photometry::calibrated(&scene, photometry::BASELINE_MIN_LUX)?;
    let grid = Grid::communication_plane(&cal);
    let base = photometry::illuminance_map(&cal, &grid, None);
    base.write_matrix_csv(&config.out_dir.join("illuminance_baseline.csv"))?;
    base.write_long_csv(&config.out_dir.join("illuminance_baseline_long.csv"))?;
    let id = corner_luminaire(&cal)?;
    let l = cal.luminaire(id).expect("exists");
    for &f in fractions {
        let beam = BeamPattern::from_design(f, FloorCell::under(l), map.clone())?;
        let m = photometry::illuminance_map(
            &cal,
            &grid,
            Some(&Redirection {
                luminaire_id: id,
                beam,
            }),
        );
        m.write_long_csv(&config.out_dir.join(format!("illuminance_f{f:.2}_long.csv")))?;
    }
    let flux = cal.luminaires.first().map(|l| l.flux_lm);
    write_manifest(
        config,
        "illum",
        serde_json::json!({ "fractions": fractions, "calibrated_flux_lm": flux }),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CghReport {
    pub seed: u64,
    pub initial_cf: f64,
    pub best_cf: f64,
    /// In-window share of the far-field energy.
    pub efficiency: f64,
    pub design_fraction: f64,
    pub actual_fraction: f64,
}

/// Designs a hologram and writes `hologram.csv` (+ sidecar), `far_field.csv`,
/// `cf_trace.csv`, `cgh_report.json` and `manifest.json`.
pub fn run_cgh_design(config: &RunConfig) -> Result<CghReport> {
    config.validate()?;
    let target = TargetPattern::default_cell(config.fraction);
    let out = cgh::optimize(
        &target,
        &config.anneal_schedule(),
        DEFAULT_HOLOGRAM_SIZE,
        DEFAULT_HOLOGRAM_SIZE,
    )?;
    let map = cgh::beam_intensity_map(&out.hologram, &target)?;
    let report = CghReport {
        seed: out.seed,
        initial_cf: out.initial_cf,
        best_cf: out.best_cf,
        efficiency: map.efficiency,
        design_fraction: config.fraction,
        actual_fraction: config.fraction * map.efficiency,
    };

    let dir = &config.out_dir;
    ensure_dir(dir)?;
    let h = &out.hologram;
    h.save(
        &dir.join("hologram.csv"),
        &HologramHeader {
            m: h.rows,
            n: h.cols,
            r: h.pitch_r,
            s: h.pitch_s,
            seed: out.seed,
            cf: out.best_cf,
        },
    )?;
    cgh::far_field(h, target.rows, target.cols)?.write_intensity_csv(&dir.join("far_field.csv"))?;
    write_rows(&dir.join("cf_trace.csv"), &out.trace)?;
    let path = dir.join("cgh_report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    write_manifest(config, "cgh-design", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct IrReport {
    pub x: f64,
    pub y: f64,
    pub luminaire_id: u32,
    pub cgh: bool,
    pub metrics: ChannelMetrics,
}

/// Single-link dump: `ir.csv`, `ir.bin`, `ir_metrics.json`, `manifest.json`.
/// The luminaire is chosen by probing when `luminaire` is `None`.
pub fn run_ir(config: &RunConfig, x: f64, y: f64, luminaire: Option<u32>) -> Result<IrReport> {
    config.validate()?;
    let scene = config.load_scene()?;
    scene.validate()?;
    let rx = Receiver::at(x, y);
    if !scene.contains(rx.position) {
        return Err(Error::config(format!(
            "receiver position ({x}, {y}) lies outside the room"
        )));
    }
    let tracer = Tracer::new(&scene)?;
    let settings = config.settings();
    let id = match luminaire {
        Some(id) => id,
        None => {
            let evaluator = TracerEvaluator {
                tracer: &tracer,
                settings,
            };
            sbls::probe_cycle(&scene, &rx, &evaluator, &config.noise)?.selected
        }
    };
    let l = scene
        .luminaire(id)
        .ok_or_else(|| Error::config(format!("no luminaire with id {id}")))?;
    let model = if config.cgh {
        let map = design_beam(config)?.map;
        EmitterModel::Cgh(BeamPattern::from_design(
            config.fraction,
            FloorCell::under(l),
            map,
        )?)
    } else {
        EmitterModel::Lambertian
    };
    let ir = tracer.impulse_response(l, &model, &rx, &settings)?;
    let report = IrReport {
        x,
        y,
        luminaire_id: id,
        cgh: config.cgh,
        metrics: ChannelMetrics::from_ir(&ir, l.power_w)?,
    };
    let dir = &config.out_dir;
    ensure_dir(dir)?;
    ir.write_csv(&dir.join("ir.csv"))?;
    ir.write_binary(&dir.join("ir.bin"))?;
    let path = dir.join("ir_metrics.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    write_manifest(config, "ir", &report)?;
    Ok(report)
}

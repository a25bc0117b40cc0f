//! Direct-component illuminance on the communication plane.
//!
//! A luminaire fitted with a hologram sends part of its flux as a beam onto
//! its floor cell; the rest leaves through the Lambertian pattern. Reflected
//! light is not counted.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::BeamPattern;
use crate::scene::{self, lambertian_intensity, Luminaire, Occluders, Scene};
use crate::{Error, Result, Vec3};

/// Workplace minimum, lux.
pub const COMPLIANCE_LUX: f64 = 300.0;
/// Calibration anchor for the unmodified room, lux.
pub const BASELINE_MIN_LUX: f64 = 338.0;
pub const DEFAULT_GRID_PITCH: f64 = 0.1;

/// Share of one luminaire's flux that is redirected as a beam.
#[derive(Debug, Clone, PartialEq)]
pub struct Redirection {
    pub luminaire_id: u32,
    pub beam: BeamPattern,
}

/// Regular grid of evaluation points, edges included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub pitch: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(width: f64, length: f64, pitch: f64, height: f64) -> Result<Self> {
        if !(pitch > 0.0) {
            return Err(Error::config(format!(
                "grid pitch must be positive, got {pitch}"
            )));
        }
        Ok(Grid {
            pitch,
            height,
            nx: (width / pitch + 1e-9).floor() as usize + 1,
            ny: (length / pitch + 1e-9).floor() as usize + 1,
        })
    }

    /// 10 cm grid over the whole communication plane.
    pub fn communication_plane(scene: &Scene) -> Self {
        Grid::new(
            scene.bounds.x,
            scene.bounds.y,
            DEFAULT_GRID_PITCH,
            scene::COMMUNICATION_PLANE,
        )
        .expect("positive pitch")
    }

    pub fn point(&self, ix: usize, iy: usize) -> Vec3 {
        Vec3::new(ix as f64 * self.pitch, iy as f64 * self.pitch, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminanceMap {
    pub grid: Grid,
    /// Lux, `values[ix * ny + iy]`.
    pub values: Vec<f64>,
}

impl IlluminanceMap {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.grid.ny + iy]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid point of the minimum (first in x-major order).
    pub fn argmin(&self) -> Vec3 {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc },
            );
        self.grid.point(k / self.grid.ny, k % self.grid.ny)
    }

    /// One row per y, one column per x, no header.
    pub fn write_matrix_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for iy in 0..self.grid.ny {
            let row: Vec<String> = (0..self.grid.nx)
                .map(|ix| self.get(ix, iy).to_string())
                .collect();
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// `x,y,lux` with a blank line between x columns, as gnuplot expects.
    pub fn write_long_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,y,lux\n");
        for ix in 0..self.grid.nx {
            if ix > 0 {
                out.push('\n');
            }
            for iy in 0..self.grid.ny {
                let p = self.grid.point(ix, iy);
                out.push_str(&format!("{},{},{}\n", p.x, p.y, self.get(ix, iy)));
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn luminaire_lux(
    point: Vec3,
    l: &Luminaire,
    redirection: Option<&Redirection>,
    occluders: Option<&Occluders>,
) -> f64 {
    let beam = redirection
        .filter(|r| r.luminaire_id == l.id)
        .map(|r| &r.beam);
    let lambertian_share = 1.0 - beam.map_or(0.0, |b| b.fraction);
    let flux = l.emitter_flux() * lambertian_share;
    let mut e = 0.0;
    if flux > 0.0 {
        for m in l.emitters() {
            let d = point - m;
            let dist2 = d.norm_sq();
            let dist = dist2.sqrt();
            let cos_phi = -d.z / dist;
            if cos_phi <= 0.0 {
                continue;
            }
            if occluders.is_some_and(|o| !o.visible(m, point)) {
                continue;
            }
            // evaluation plane faces up, so the incidence cosine equals cos_phi
            e += flux * lambertian_intensity(l.lambertian_order, cos_phi) * cos_phi / dist2;
        }
    }
    if let Some(b) = beam {
        if occluders.is_none_or(|o| o.visible(l.center, point)) {
            if let Some(density) = b.density_at(l.center, point, Vec3::UP) {
                e += l.flux_lm * density;
            }
        }
    }
    e
}

/// Illuminance at `point` on an upward-facing plane, without occlusion.
pub fn illuminance_at(
    point: Vec3,
    luminaires: &[Luminaire],
    redirection: Option<&Redirection>,
) -> f64 {
    luminaires
        .iter()
        .map(|l| luminaire_lux(point, l, redirection, None))
        .sum()
}

/// Illuminance map over `grid` with occlusion by the scene's obstacles.
pub fn illuminance_map(
    scene: &Scene,
    grid: &Grid,
    redirection: Option<&Redirection>,
) -> IlluminanceMap {
    let occluders = scene.occluders();
    let occ = (!occluders.is_empty()).then_some(&occluders);
    let values = (0..grid.nx * grid.ny)
        .into_par_iter()
        .map(|k| {
            let p = grid.point(k / grid.ny, k % grid.ny);
            scene
                .luminaires
                .iter()
                .map(|l| luminaire_lux(p, l, redirection, occ))
                .sum()
        })
        .collect();
    IlluminanceMap {
        grid: *grid,
        values,
    }
}

/// Per-luminaire flux (equal for all luminaires) that puts the minimum of the
/// unmodified map at `target_min_lux`.
pub fn calibrate_flux(scene: &Scene, target_min_lux: f64) -> Result<f64> {
    if !(target_min_lux >= 0.0) {
        return Err(Error::config(format!(
            "target {target_min_lux} lx must be >= 0"
        )));
    }
    let mut unit = scene.clone();
    for l in &mut unit.luminaires {
        l.flux_lm = 1.0;
    }
    let min = illuminance_map(&unit, &Grid::communication_plane(scene), None).min();
    if !(min > 0.0) {
        return Err(Error::numeric(
            "some grid point receives no light; the target minimum is unreachable",
        ));
    }
    Ok(target_min_lux / min)
}

/// Copy of `scene` with every luminaire set to the calibrated flux.
pub fn calibrated(scene: &Scene, target_min_lux: f64) -> Result<Scene> {
    let flux = calibrate_flux(scene, target_min_lux)?;
    let mut out = scene.clone();
    for l in &mut out.luminaires {
        l.flux_lm = flux;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compliance {
    pub min_lux: f64,
    pub compliant: bool,
}

pub fn compliance_min(scene: &Scene, redirection: Option<&Redirection>) -> Compliance {
    let min_lux = illuminance_map(scene, &Grid::communication_plane(scene), redirection).min();
    Compliance {
        min_lux,
        compliant: min_lux >= COMPLIANCE_LUX,
    }
}

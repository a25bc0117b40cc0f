//! Time-resolved luminaire-to-receiver impulse responses.
//!
//! Paths are traced per emitter of the transmitting luminaire: the direct
//! (order 0) path, one bounce off the fine first-order element set, and two
//! bounces over the coarse second-order set. A hologram-equipped luminaire
//! sends part of its power as a beam onto its floor cell; that beam reaches
//! the receiver directly when the receiver sits inside the footprint, and
//! again after one or two diffuse bounces from wherever it lands.
//!
//! Work is split into fixed-size element chunks whose partial histograms are
//! merged in chunk order, so results do not depend on the thread count.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgh::BeamMap;
use crate::scene::{
    self, lambertian_intensity, Luminaire, Occluders, Partition, Receiver, Scene, SurfaceElement,
};
use crate::{Error, Result, Vec3, SPEED_OF_LIGHT};

pub const DEFAULT_BIN_WIDTH: f64 = 10e-12;

const CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    /// Bin width, seconds.
    pub dt: f64,
    /// Time of bin 0, seconds.
    pub t0: f64,
    /// Received optical power per bin, watts.
    pub bins: Vec<f64>,
}

impl ImpulseResponse {
    pub fn new(dt: f64, t0: f64, bins: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config(format!(
                "bin width must be positive, got {dt}"
            )));
        }
        if bins.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(Error::domain(
                "impulse response bins must be finite and nonnegative",
            ));
        }
        Ok(ImpulseResponse { dt, t0, bins })
    }

    /// Start time of bin `k`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Nonzero bins as (time, power) pairs.
    pub fn taps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.bins
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, &p)| (self.time(k), p))
    }

    pub fn received_power(&self) -> f64 {
        received_power(self)
    }

    /// `t_seconds,power_watts` for every nonzero bin.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t_seconds", "power_watts"])?;
        for (t, p) in self.taps() {
            w.write_record([t.to_string(), p.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Little-endian f64 (time, power) pairs for every nonzero bin.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        for (t, p) in self.taps() {
            buf.extend_from_slice(&t.to_le_bytes());
            buf.extend_from_slice(&p.to_le_bytes());
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    /// Rebuilds a response from a binary tap dump on a grid of width `dt`
    /// starting at t = 0.
    pub fn read_binary(path: &Path, dt: f64) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % 16 != 0 {
            return Err(Error::config(format!(
                "{}: length {} is not a multiple of 16",
                path.display(),
                bytes.len()
            )));
        }
        let mut bins = Bins::new(dt);
        for pair in bytes.chunks_exact(16) {
            let t = f64::from_le_bytes(pair[..8].try_into().unwrap());
            let p = f64::from_le_bytes(pair[8..].try_into().unwrap());
            // taps are stored at bin starts; nudge into the bin
            bins.add(t + 0.5 * dt, p);
        }
        ImpulseResponse::new(dt, 0.0, bins.into_vec())
    }
}

/// Total received power, the sum over all bins.
pub fn received_power(ir: &ImpulseResponse) -> f64 {
    ir.bins.iter().sum()
}

/// Histogram with bin 0 starting at t = 0.
#[derive(Debug, Clone)]
struct Bins {
    inv_dt: f64,
    v: Vec<f64>,
}

impl Bins {
    fn new(dt: f64) -> Self {
        Bins {
            inv_dt: 1.0 / dt,
            v: Vec::new(),
        }
    }

    #[inline]
    fn add(&mut self, t: f64, w: f64) {
        let k = (t * self.inv_dt) as usize;
        if k >= self.v.len() {
            self.v.resize(k + 1, 0.0);
        }
        self.v[k] += w;
    }

    fn merge(&mut self, other: &Bins) {
        if other.v.len() > self.v.len() {
            self.v.resize(other.v.len(), 0.0);
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += b;
        }
    }

    fn into_vec(self) -> Vec<f64> {
        self.v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    /// Fraction of the emitter's power collected by the receiver.
    pub gain: f64,
    /// Propagation delay, seconds.
    pub delay: f64,
}

/// Direct-path gain of a generalized Lambertian emitter of order `order`.
/// Visibility is not checked here.
pub fn los_gain(
    emitter: Vec3,
    emitter_normal: Vec3,
    order: f64,
    receiver: &Receiver,
) -> Result<LinkGain> {
    let d = receiver.position - emitter;
    let dist = d.norm();
    if dist == 0.0 {
        return Err(Error::domain("emitter and receiver coincide"));
    }
    let delay = dist / SPEED_OF_LIGHT;
    let cos_phi = d.dot(emitter_normal) / dist;
    let gain = match receiver.accept(emitter) {
        Some(cos_theta) if cos_phi > 0.0 => {
            receiver.area_m2 * lambertian_intensity(order, cos_phi) * cos_theta / (dist * dist)
        }
        _ => 0.0,
    };
    Ok(LinkGain { gain, delay })
}

/// Rectangle on a horizontal plane that a beam is aimed at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorCell {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub height: f64,
}

impl FloorCell {
    /// The 2 m x 2 m cell on the communication plane centered under `l`.
    pub fn under(l: &Luminaire) -> Self {
        FloorCell {
            x0: l.center.x - 1.0,
            y0: l.center.y - 1.0,
            x1: l.center.x + 1.0,
            y1: l.center.y + 1.0,
            height: scene::COMMUNICATION_PLANE,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Closed containment on the plane.
    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        let tol = 1e-9;
        x >= self.x0 - tol && x <= self.x1 + tol && y >= self.y0 - tol && y <= self.y1 + tol
    }
}

/// Redirected share of a luminaire's output, spread over a floor cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    /// Share of the luminaire output carried by the beam into the cell.
    pub fraction: f64,
    pub cell: FloorCell,
    pub map: BeamMap,
}

impl BeamPattern {
    /// Beam whose delivered share is the design fraction scaled by the
    /// hologram's in-window efficiency.
    pub fn from_design(design_fraction: f64, cell: FloorCell, map: BeamMap) -> Result<Self> {
        if !(0.0..=1.0).contains(&design_fraction) {
            return Err(Error::config(format!(
                "beam fraction {design_fraction} outside [0, 1]"
            )));
        }
        let fraction = design_fraction * map.efficiency;
        let total: f64 = map.weights.iter().sum();
        if map.weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("beam map must be nonnegative and sum to 1"));
        }
        Ok(BeamPattern {
            fraction,
            cell,
            map,
        })
    }

    /// Ideal flat-top beam over the cell under `l`.
    pub fn uniform(fraction: f64, l: &Luminaire, samples: usize) -> Result<Self> {
        BeamPattern::from_design(
            fraction,
            FloorCell::under(l),
            BeamMap::uniform(samples, samples),
        )
    }

    fn sample_area(&self) -> f64 {
        self.cell.area() / (self.map.nx * self.map.ny) as f64
    }

    /// Center of map sample (ix, iy) on the cell plane.
    pub fn sample_point(&self, ix: usize, iy: usize) -> Vec3 {
        let c = &self.cell;
        Vec3::new(
            c.x0 + (ix as f64 + 0.5) / self.map.nx as f64 * (c.x1 - c.x0),
            c.y0 + (iy as f64 + 0.5) / self.map.ny as f64 * (c.y1 - c.y0),
            c.height,
        )
    }

    /// Beam power per unit area, as a share of the source output, arriving on
    /// a small surface at `point` with unit normal `normal`; `None` outside the
    /// footprint.
    pub fn density_at(&self, source: Vec3, point: Vec3, normal: Vec3) -> Option<f64> {
        let drop_to_plane = source.z - self.cell.height;
        let drop_to_point = source.z - point.z;
        if drop_to_plane <= 0.0 || drop_to_point <= 0.0 {
            return None;
        }
        let s = drop_to_plane / drop_to_point;
        let proj = source + (point - source) * s;
        if !self.cell.contains_xy(proj.x, proj.y) {
            return None;
        }
        let c = &self.cell;
        let ix =
            (((proj.x - c.x0) / (c.x1 - c.x0) * self.map.nx as f64) as usize).min(self.map.nx - 1);
        let iy =
            (((proj.y - c.y0) / (c.y1 - c.y0) * self.map.ny as f64) as usize).min(self.map.ny - 1);
        let to_source = source - point;
        let dist = to_source.norm();
        let cos_vertical = to_source.z / dist;
        let cos_surface = to_source.dot(normal) / dist;
        if !(cos_surface > 0.0) {
            return None;
        }
        let horizontal = self.fraction * self.map.weight(ix, iy) * s * s / self.sample_area();
        Some(horizontal * cos_surface / cos_vertical)
    }
}

/// How a luminaire distributes its power.
#[derive(Debug, Clone, PartialEq)]
pub enum EmitterModel {
    Lambertian,
    Cgh(BeamPattern),
}

impl EmitterModel {
    pub fn beam_fraction(&self) -> f64 {
        match self {
            EmitterModel::Lambertian => 0.0,
            EmitterModel::Cgh(b) => b.fraction,
        }
    }

    pub fn lambertian_fraction(&self) -> f64 {
        1.0 - self.beam_fraction()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSettings {
    /// Highest reflection order, 0..=2.
    pub max_order: u8,
    /// Bin width, seconds.
    pub dt: f64,
}

impl Default for TraceSettings {
    fn default() -> Self {
        TraceSettings {
            max_order: 2,
            dt: DEFAULT_BIN_WIDTH,
        }
    }
}

impl TraceSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_order > 2 {
            return Err(Error::config(format!(
                "reflection order must be 0, 1 or 2, got {}",
                self.max_order
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config(format!(
                "bin width must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Receiver-side view of one element: what reaches the detector after a
/// reflection there.
#[derive(Debug, Clone, Copy)]
struct Collector {
    center: Vec3,
    normal: Vec3,
    area: f64,
    surface: usize,
    /// rho * A_r cos cos / (pi d^2)
    gain: f64,
    delay: f64,
}

/// Source-side power landing on an element (before its reflection).
#[derive(Debug, Clone, Copy)]
struct Arrival {
    power: f64,
    delay: f64,
}

/// Ray tracer bound to an immutable scene and its element sets.
pub struct Tracer<'a> {
    scene: &'a Scene,
    partition: Partition,
    occluders: Occluders,
}

impl<'a> Tracer<'a> {
    /// Tracer with the default 5 cm / 20 cm element pitches.
    pub fn new(scene: &'a Scene) -> Result<Self> {
        Tracer::with_pitches(scene, scene::FIRST_ORDER_PITCH, scene::SECOND_ORDER_PITCH)
    }

    pub fn with_pitches(scene: &'a Scene, first: f64, second: f64) -> Result<Self> {
        let partition = scene::partition(scene, first, second)?;
        Ok(Tracer::with_partition(scene, partition))
    }

    pub fn with_partition(scene: &'a Scene, partition: Partition) -> Self {
        Tracer {
            scene,
            partition,
            occluders: scene.occluders(),
        }
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Element-to-receiver transfer for every element that can see the
    /// detector.
    fn collectors(&self, elements: &[SurfaceElement], rx: &Receiver) -> Vec<Collector> {
        elements
            .iter()
            .filter(|e| e.rho > 0.0)
            .filter_map(|e| {
                let d = rx.position - e.center;
                let dist = d.norm();
                if dist == 0.0 {
                    return None;
                }
                let cos_e = d.dot(e.normal) / dist;
                if cos_e <= 0.0 {
                    return None;
                }
                let cos_r = rx.accept(e.center)?;
                if !self.occluders.visible(e.center, rx.position) {
                    return None;
                }
                Some(Collector {
                    center: e.center,
                    normal: e.normal,
                    area: e.area,
                    surface: e.surface,
                    gain: e.rho * rx.area_m2 * cos_e * cos_r / (PI * dist * dist),
                    delay: dist / SPEED_OF_LIGHT,
                })
            })
            .collect()
    }

    /// Power from one emitter landing on an element, or `None` when no light
    /// arrives.
    #[inline]
    fn arrival(
        &self,
        emitter: Vec3,
        power: f64,
        order: f64,
        e: &SurfaceElement,
    ) -> Option<Arrival> {
        let d = e.center - emitter;
        let dist2 = d.norm_sq();
        if dist2 == 0.0 {
            return None;
        }
        let dist = dist2.sqrt();
        let cos_phi = -d.z / dist;
        let cos_in = -d.dot(e.normal) / dist;
        if cos_phi <= 0.0 || cos_in <= 0.0 || !self.occluders.visible(emitter, e.center) {
            return None;
        }
        Some(Arrival {
            power: power * lambertian_intensity(order, cos_phi) * cos_in * e.area / dist2,
            delay: dist / SPEED_OF_LIGHT,
        })
    }

    /// Diffuse transfer from a point source at `from` (normal `n_from`) via a
    /// collector, as a fraction of the power leaving `from`.
    #[inline]
    fn bounce(&self, from: Vec3, n_from: Vec3, c: &Collector) -> Option<(f64, f64)> {
        let d = c.center - from;
        let dist2 = d.norm_sq();
        if dist2 == 0.0 {
            return None;
        }
        let dist = dist2.sqrt();
        let cos_out = d.dot(n_from) / dist;
        let cos_in = -d.dot(c.normal) / dist;
        if cos_out <= 0.0 || cos_in <= 0.0 || !self.occluders.visible(from, c.center) {
            return None;
        }
        Some((
            cos_out * cos_in * c.area / (PI * dist2) * c.gain,
            dist / SPEED_OF_LIGHT + c.delay,
        ))
    }

    pub fn impulse_response(
        &self,
        luminaire: &Luminaire,
        emitter: &EmitterModel,
        receiver: &Receiver,
        settings: &TraceSettings,
    ) -> Result<ImpulseResponse> {
        settings.validate()?;
        receiver.validate()?;
        let dt = settings.dt;
        let order = luminaire.lambertian_order;
        let emitters = luminaire.emitters();
        let p_emitter = luminaire.emitter_power() * emitter.lambertian_fraction();
        let mut bins = Bins::new(dt);

        // order 0
        for &m in &emitters {
            let link = los_gain(m, luminaire.normal(), order, receiver)?;
            if link.gain > 0.0 && self.occluders.visible(m, receiver.position) {
                bins.add(link.delay, p_emitter * link.gain);
            }
        }

        // order 1
        if settings.max_order >= 1 && p_emitter > 0.0 {
            let collectors = self.collectors(&self.partition.first, receiver);
            let partials: Vec<Bins> = collectors
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut local = Bins::new(dt);
                    for c in chunk {
                        let e = SurfaceElement {
                            center: c.center,
                            area: c.area,
                            normal: c.normal,
                            rho: 1.0,
                            lambertian_order: 1.0,
                            surface: c.surface,
                        };
                        for &m in &emitters {
                            if let Some(a) = self.arrival(m, p_emitter, order, &e) {
                                local.add(a.delay + c.delay, a.power * c.gain);
                            }
                        }
                    }
                    local
                })
                .collect();
            for p in &partials {
                bins.merge(p);
            }
        }

        // order 2
        if settings.max_order >= 2 && p_emitter > 0.0 {
            let collectors = self.collectors(&self.partition.second, receiver);
            let sources: Vec<&SurfaceElement> = self
                .partition
                .second
                .iter()
                .filter(|e| e.rho > 0.0)
                .collect();
            let partials: Vec<Bins> = sources
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut local = Bins::new(dt);
                    let mut arrivals = Vec::with_capacity(emitters.len());
                    for e1 in chunk {
                        arrivals.clear();
                        arrivals.extend(
                            emitters
                                .iter()
                                .filter_map(|&m| self.arrival(m, p_emitter, order, e1)),
                        );
                        if arrivals.is_empty() {
                            continue;
                        }
                        for c in &collectors {
                            if c.surface == e1.surface {
                                continue;
                            }
                            if let Some((g, t)) = self.bounce(e1.center, e1.normal, c) {
                                for a in &arrivals {
                                    local.add(a.delay + t, a.power * e1.rho * g);
                                }
                            }
                        }
                    }
                    local
                })
                .collect();
            for p in &partials {
                bins.merge(p);
            }
        }

        if let EmitterModel::Cgh(beam) = emitter {
            self.trace_beam(luminaire, beam, receiver, settings, &mut bins);
        }

        ImpulseResponse::new(dt, 0.0, bins.into_vec())
    }

    fn trace_beam(
        &self,
        luminaire: &Luminaire,
        beam: &BeamPattern,
        receiver: &Receiver,
        settings: &TraceSettings,
        bins: &mut Bins,
    ) {
        let source = luminaire.center;
        let p_beam = luminaire.power_w * beam.fraction;
        if p_beam <= 0.0 {
            return;
        }

        // direct incidence inside the footprint
        if let (Some(density), Some(_)) = (
            beam.density_at(source, receiver.position, receiver.normal),
            receiver.accept(source),
        ) {
            if self.occluders.visible(source, receiver.position) {
                let delay = (receiver.position - source).norm() / SPEED_OF_LIGHT;
                bins.add(delay, luminaire.power_w * density * receiver.area_m2);
            }
        }
        if settings.max_order == 0 {
            return;
        }

        // where each beam sample lands, and the power it deposits there
        struct Landing {
            point: Vec3,
            normal: Vec3,
            surface: usize,
            power: f64,
            delay: f64,
        }
        let mut landings = Vec::with_capacity(beam.map.nx * beam.map.ny);
        for ix in 0..beam.map.nx {
            for iy in 0..beam.map.ny {
                let w = beam.map.weight(ix, iy);
                if w <= 0.0 {
                    continue;
                }
                let dir = beam.sample_point(ix, iy) - source;
                if let Some((surface, point)) = self.scene.first_hit(source, dir) {
                    let rho = self.scene.rho_at(surface, point);
                    if rho > 0.0 {
                        landings.push(Landing {
                            point,
                            normal: self.scene.surfaces[surface].normal,
                            surface,
                            power: p_beam * w * rho,
                            delay: (point - source).norm() / SPEED_OF_LIGHT,
                        });
                    }
                }
            }
        }

        // landing -> receiver
        for l in &landings {
            let d = receiver.position - l.point;
            let dist = d.norm();
            let cos_out = d.dot(l.normal) / dist;
            if !(cos_out > 0.0) {
                continue;
            }
            if let Some(cos_r) = receiver.accept(l.point) {
                if self.occluders.visible(l.point, receiver.position) {
                    let g = receiver.area_m2 * cos_out * cos_r / (PI * dist * dist);
                    bins.add(l.delay + dist / SPEED_OF_LIGHT, l.power * g);
                }
            }
        }

        // landing -> element -> receiver
        if settings.max_order >= 2 {
            let collectors = self.collectors(&self.partition.second, receiver);
            let partials: Vec<Bins> = landings
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut local = Bins::new(settings.dt);
                    for l in chunk {
                        for c in &collectors {
                            if c.surface == l.surface {
                                continue;
                            }
                            if let Some((g, t)) = self.bounce(l.point, l.normal, c) {
                                local.add(l.delay + t, l.power * g);
                            }
                        }
                    }
                    local
                })
                .collect();
            for p in &partials {
                bins.merge(p);
            }
        }
    }
}

/// One-shot convenience wrapper that partitions the scene with the default
/// element pitches and traces a single link.
pub fn impulse_response(
    scene: &Scene,
    luminaire: &Luminaire,
    emitter: &EmitterModel,
    receiver: &Receiver,
    settings: &TraceSettings,
) -> Result<ImpulseResponse> {
    Tracer::new(scene)?.impulse_response(luminaire, emitter, receiver, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::build_room_a;
    use approx::assert_relative_eq;

    #[test]
    fn los_directly_below() {
        let mut rx = Receiver::new(Vec3::new(0.0, 0.0, 1.0));
        rx.area_m2 = 1e-4;
        let g = los_gain(Vec3::new(0.0, 0.0, 3.0), Vec3::DOWN, 1.0, &rx).unwrap();
        assert_relative_eq!(g.gain, 2.0 * 1e-4 / (2.0 * PI * 4.0), max_relative = 1e-12);
        assert_relative_eq!(g.delay, 2.0 / SPEED_OF_LIGHT, max_relative = 1e-12);
        assert_relative_eq!(g.delay, 6.671e-9, max_relative = 1e-3);
    }

    #[test]
    fn los_outside_fov_is_zero() {
        let rx = Receiver::new(Vec3::new(0.0, 0.0, 1.0));
        let t = 50f64.to_radians();
        let e = rx.position + Vec3::new(2.0 * t.sin(), 0.0, 2.0 * t.cos());
        assert_eq!(los_gain(e, Vec3::DOWN, 1.0, &rx).unwrap().gain, 0.0);
    }

    #[test]
    fn los_zero_distance_is_domain_error() {
        let rx = Receiver::new(Vec3::new(0.0, 0.0, 1.0));
        assert!(matches!(
            los_gain(rx.position, Vec3::DOWN, 1.0, &rx),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn received_power_sums_bins() {
        let ir = ImpulseResponse::new(1e-11, 0.0, vec![0.0; 5]).unwrap();
        assert_eq!(received_power(&ir), 0.0);
        let ir = ImpulseResponse::new(1e-11, 0.0, vec![0.0, 1e-6]).unwrap();
        assert_eq!(received_power(&ir), 1e-6);
    }

    #[test]
    fn settings_are_validated() {
        let scene = build_room_a();
        let t = Tracer::with_pitches(&scene, 0.5, 1.0).unwrap();
        let l = &scene.luminaires[0];
        let rx = Receiver::at(1.0, 1.0);
        let bad_order = TraceSettings {
            max_order: 3,
            dt: 1e-11,
        };
        assert!(t
            .impulse_response(l, &EmitterModel::Lambertian, &rx, &bad_order)
            .is_err());
        let bad_dt = TraceSettings {
            max_order: 1,
            dt: 0.0,
        };
        assert!(t
            .impulse_response(l, &EmitterModel::Lambertian, &rx, &bad_dt)
            .is_err());
    }

    #[test]
    fn beam_density_of_uniform_cell() {
        let scene = build_room_a();
        let l = &scene.luminaires[0];
        let b = BeamPattern::uniform(0.3, l, 8).unwrap();
        let d = b
            .density_at(l.center, Vec3::new(1.2, 0.7, 1.0), Vec3::UP)
            .unwrap();
        assert_relative_eq!(d, 0.3 / 4.0, max_relative = 1e-12);
        assert!(b
            .density_at(l.center, Vec3::new(2.5, 0.7, 1.0), Vec3::UP)
            .is_none());
        // half-way down to the plane the footprint is smaller, density higher
        let d2 = b
            .density_at(l.center, Vec3::new(1.0, 1.0, 2.0), Vec3::UP)
            .unwrap();
        assert_relative_eq!(d2, 0.3 / 4.0 * 4.0, max_relative = 1e-12);
    }

    #[test]
    fn binary_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ir.bin");
        let ir = ImpulseResponse::new(1e-11, 0.0, vec![0.0, 0.0, 2e-7, 0.0, 1e-9]).unwrap();
        ir.write_binary(&path).unwrap();
        let back = ImpulseResponse::read_binary(&path, 1e-11).unwrap();
        assert_eq!(back.bins, ir.bins);
    }
}

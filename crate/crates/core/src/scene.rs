//! Rooms, reflective surfaces, luminaires and receivers.
//!
//! Surfaces are rectangles given by an origin corner and two orthogonal edge
//! vectors. Boundary walls, ceiling and floor are plain reflectors. Doors and
//! windows are *insets*: coplanar rectangles that override the reflectance of
//! the host surface underneath them and are never tiled on their own.
//! Furniture and cubicle panels are occluding surfaces.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

pub const ROOM_WIDTH: f64 = 4.0;
pub const ROOM_LENGTH: f64 = 8.0;
pub const ROOM_HEIGHT: f64 = 3.0;

/// Height of the plane receivers sit on and beams are aimed at.
pub const COMMUNICATION_PLANE: f64 = 1.0;

/// Spacing of the 3x3 emitter grid inside a luminaire.
pub const EMITTER_PITCH: f64 = 0.02;
pub const EMITTERS_PER_LUMINAIRE: usize = 9;

pub const DEFAULT_SEMI_ANGLE_DEG: f64 = 70.0;
pub const DEFAULT_LUMINAIRE_POWER_W: f64 = 1.0;
/// Aggregate luminous efficacy used to derive a nominal flux from optical power.
pub const DEFAULT_EFFICACY_LM_PER_W: f64 = 300.0;

pub const DEFAULT_RECEIVER_AREA_M2: f64 = 0.5e-6;
pub const DEFAULT_FOV_DEG: f64 = 40.0;

pub const WALL_RHO: f64 = 0.8;
pub const FLOOR_RHO: f64 = 0.3;
pub const SHELF_WALL_RHO: f64 = 0.4;
pub const FURNITURE_RHO: f64 = 0.3;

/// First-order and second-order element pitches.
pub const FIRST_ORDER_PITCH: f64 = 0.05;
pub const SECOND_ORDER_PITCH: f64 = 0.20;

/// Lambertian order with the given half-power semi-angle.
pub fn lambertian_order(semi_angle_deg: f64) -> f64 {
    -(2f64.ln()) / semi_angle_deg.to_radians().cos().ln()
}

fn default_source_order() -> f64 {
    lambertian_order(DEFAULT_SEMI_ANGLE_DEG)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    #[serde(default)]
    pub name: String,
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    /// Unit normal pointing to the side that reflects.
    pub normal: Vec3,
    pub rho: f64,
    #[serde(default)]
    pub occluding: bool,
    #[serde(default)]
    pub inset: bool,
}

impl Surface {
    pub fn new(name: &str, origin: Vec3, u: Vec3, v: Vec3, normal: Vec3, rho: f64) -> Self {
        Surface {
            name: name.to_string(),
            origin,
            u,
            v,
            normal,
            rho,
            occluding: false,
            inset: false,
        }
    }

    pub fn occluding(mut self) -> Self {
        self.occluding = true;
        self
    }

    pub fn inset(mut self) -> Self {
        self.inset = true;
        self
    }

    pub fn area(&self) -> f64 {
        self.u.norm() * self.v.norm()
    }

    pub fn center(&self) -> Vec3 {
        self.origin + self.u * 0.5 + self.v * 0.5
    }

    fn validate(&self, index: usize) -> Result<()> {
        let label = if self.name.is_empty() {
            format!("surface #{index}")
        } else {
            format!("surface '{}'", self.name)
        };
        for (what, v) in [
            ("origin", self.origin),
            ("u", self.u),
            ("v", self.v),
            ("normal", self.normal),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{label}: {what} is not finite")));
            }
        }
        let (lu, lv) = (self.u.norm(), self.v.norm());
        if lu <= 0.0 || lv <= 0.0 {
            return Err(Error::config(format!("{label}: zero-length edge")));
        }
        if self.u.dot(self.v).abs() > 1e-9 * lu * lv {
            return Err(Error::config(format!("{label}: edges are not orthogonal")));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("{label}: normal is not unit length")));
        }
        if self.normal.dot(self.u).abs() > 1e-9 * lu || self.normal.dot(self.v).abs() > 1e-9 * lv {
            return Err(Error::config(format!(
                "{label}: normal is not perpendicular to the edges"
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::config(format!(
                "{label}: reflection coefficient {} outside [0, 1]",
                self.rho
            )));
        }
        Ok(())
    }

    /// Edge coordinates of `p` projected onto the surface plane, each in [0, 1]
    /// when inside.
    #[inline]
    fn local(&self, p: Vec3) -> (f64, f64) {
        let d = p - self.origin;
        (
            d.dot(self.u) / self.u.norm_sq(),
            d.dot(self.v) / self.v.norm_sq(),
        )
    }

    fn coplanar_with(&self, other: &Surface) -> bool {
        self.normal.dot(other.normal) > 1.0 - 1e-9
            && self.normal.dot(other.origin - self.origin).abs() < 1e-9
    }

    /// Closed containment test for a point already on the plane.
    fn covers(&self, p: Vec3) -> bool {
        let (a, b) = self.local(p);
        let tol = 1e-12;
        (-tol..=1.0 + tol).contains(&a) && (-tol..=1.0 + tol).contains(&b)
    }
}

/// Square (or clipped) tile of a reflective surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceElement {
    pub center: Vec3,
    pub area: f64,
    pub normal: Vec3,
    pub rho: f64,
    pub lambertian_order: f64,
    /// Index of the host surface in `Scene::surfaces`.
    pub surface: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Luminaire {
    pub id: u32,
    pub center: Vec3,
    pub power_w: f64,
    pub flux_lm: f64,
    #[serde(default = "default_source_order")]
    pub lambertian_order: f64,
}

impl Luminaire {
    pub fn new(id: u32, center: Vec3) -> Self {
        Luminaire {
            id,
            center,
            power_w: DEFAULT_LUMINAIRE_POWER_W,
            flux_lm: DEFAULT_LUMINAIRE_POWER_W * DEFAULT_EFFICACY_LM_PER_W,
            lambertian_order: default_source_order(),
        }
    }

    /// Emitter positions of the 3x3 grid, row-major in (x, y).
    pub fn emitters(&self) -> [Vec3; EMITTERS_PER_LUMINAIRE] {
        let mut out = [Vec3::ZERO; EMITTERS_PER_LUMINAIRE];
        for (n, slot) in out.iter_mut().enumerate() {
            let i = (n / 3) as f64 - 1.0;
            let j = (n % 3) as f64 - 1.0;
            *slot = self.center + Vec3::new(i * EMITTER_PITCH, j * EMITTER_PITCH, 0.0);
        }
        out
    }

    pub fn emitter_power(&self) -> f64 {
        self.power_w / EMITTERS_PER_LUMINAIRE as f64
    }

    pub fn emitter_flux(&self) -> f64 {
        self.flux_lm / EMITTERS_PER_LUMINAIRE as f64
    }

    /// Emitters face straight down.
    pub fn normal(&self) -> Vec3 {
        Vec3::DOWN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub position: Vec3,
    pub area_m2: f64,
    /// Half-angle field of view.
    pub fov_deg: f64,
    pub normal: Vec3,
}

impl Receiver {
    pub fn new(position: Vec3) -> Self {
        Receiver {
            position,
            area_m2: DEFAULT_RECEIVER_AREA_M2,
            fov_deg: DEFAULT_FOV_DEG,
            normal: Vec3::UP,
        }
    }

    pub fn at(x: f64, y: f64) -> Self {
        Receiver::new(Vec3::new(x, y, COMMUNICATION_PLANE))
    }

    pub fn cos_fov(&self) -> f64 {
        self.fov_deg.to_radians().cos()
    }

    /// Cosine of the incidence angle for light travelling from `from`, or
    /// `None` when it falls outside the field of view.
    #[inline]
    pub fn accept(&self, from: Vec3) -> Option<f64> {
        let d = from - self.position;
        let cos = d.dot(self.normal) / d.norm();
        (cos > 0.0 && cos >= self.cos_fov() - 1e-12).then_some(cos)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::config("receiver position is not finite"));
        }
        if self.area_m2 <= 0.0 || !self.area_m2.is_finite() {
            return Err(Error::config("receiver area must be positive"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 90.0) {
            return Err(Error::config(
                "receiver field of view must be in (0, 90] degrees",
            ));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config("receiver orientation is not unit length"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoomLabel {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub label: RoomLabel,
    #[serde(default)]
    pub description: String,
    /// Room extent (width, length, height); the room spans [0, bounds].
    pub bounds: Vec3,
    pub surfaces: Vec<Surface>,
    pub luminaires: Vec<Luminaire>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if !(self.bounds.x > 0.0 && self.bounds.y > 0.0 && self.bounds.z > 0.0) {
            return Err(Error::config("room bounds must be positive"));
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            s.validate(i)?;
        }
        let mut ids: Vec<u32> = self.luminaires.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("luminaire ids must be distinct"));
        }
        for l in &self.luminaires {
            if !self.contains(l.center) {
                return Err(Error::config(format!(
                    "luminaire {}: center lies outside the room",
                    l.id
                )));
            }
            if !(l.lambertian_order > 0.0) || l.power_w < 0.0 || l.flux_lm < 0.0 {
                return Err(Error::config(format!(
                    "luminaire {}: order must be positive and power/flux nonnegative",
                    l.id
                )));
            }
        }
        Ok(())
    }

    /// Closed bounds check.
    pub fn contains(&self, p: Vec3) -> bool {
        let tol = 1e-9;
        p.x >= -tol
            && p.y >= -tol
            && p.z >= -tol
            && p.x <= self.bounds.x + tol
            && p.y <= self.bounds.y + tol
            && p.z <= self.bounds.z + tol
    }

    pub fn luminaire(&self, id: u32) -> Option<&Luminaire> {
        self.luminaires.iter().find(|l| l.id == id)
    }

    /// Reflection coefficient at a point of surface `index`, honoring insets.
    pub fn rho_at(&self, index: usize, p: Vec3) -> f64 {
        let host = &self.surfaces[index];
        self.surfaces
            .iter()
            .rev()
            .find(|s| s.inset && s.coplanar_with(host) && s.covers(p))
            .map_or(host.rho, |s| s.rho)
    }

    pub fn occluders(&self) -> Occluders {
        Occluders::new(self)
    }

    /// Nearest surface hit by the ray `origin + t * dir`, t > 0, ignoring insets.
    pub fn first_hit(&self, origin: Vec3, dir: Vec3) -> Option<(usize, Vec3)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, s) in self.surfaces.iter().enumerate() {
            if s.inset {
                continue;
            }
            let denom = s.normal.dot(dir);
            if denom.abs() < 1e-15 {
                continue;
            }
            let t = s.normal.dot(s.origin - origin) / denom;
            if t <= 1e-9 || best.is_some_and(|(bt, _)| t >= bt) {
                continue;
            }
            let (a, b) = s.local(origin + dir * t);
            let tol = 1e-12;
            if (-tol..=1.0 + tol).contains(&a) && (-tol..=1.0 + tol).contains(&b) {
                best = Some((t, i));
            }
        }
        best.map(|(t, i)| (i, origin + dir * t))
    }

    pub fn from_json_str(text: &str) -> Result<Scene> {
        let scene: Scene = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<inline>".into(),
            source: e,
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scene: Scene = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("scene serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// The six inward-facing boundary surfaces of a box room.
fn shell(w: f64, l: f64, h: f64, rho_x_max: f64, rho_y_max: f64) -> Vec<Surface> {
    let o = Vec3::ZERO;
    let ex = Vec3::new(w, 0.0, 0.0);
    let ey = Vec3::new(0.0, l, 0.0);
    let ez = Vec3::new(0.0, 0.0, h);
    vec![
        Surface::new("floor", o, ex, ey, Vec3::UP, FLOOR_RHO),
        Surface::new("ceiling", ez, ex, ey, Vec3::DOWN, WALL_RHO),
        Surface::new("wall x=0", o, ey, ez, Vec3::new(1.0, 0.0, 0.0), WALL_RHO),
        Surface::new(
            "wall x=max",
            ex,
            ey,
            ez,
            Vec3::new(-1.0, 0.0, 0.0),
            rho_x_max,
        ),
        Surface::new("wall y=0", o, ex, ez, Vec3::new(0.0, 1.0, 0.0), WALL_RHO),
        Surface::new(
            "wall y=max",
            ey,
            ex,
            ez,
            Vec3::new(0.0, -1.0, 0.0),
            rho_y_max,
        ),
    ]
}

/// Eight luminaires centered over the 2 m x 2 m floor cells, ids 1..=8
/// ordered by x then y.
fn ceiling_luminaires() -> Vec<Luminaire> {
    let mut out = Vec::with_capacity(8);
    for x in [1.0, 3.0] {
        for y in [1.0, 3.0, 5.0, 7.0] {
            let id = out.len() as u32 + 1;
            out.push(Luminaire::new(id, Vec3::new(x, y, ROOM_HEIGHT)));
        }
    }
    out
}

/// Empty room: 4 m x 8 m x 3 m, walls and ceiling 0.8, floor 0.3.
pub fn build_room_a() -> Scene {
    Scene {
        label: RoomLabel::A,
        description: "empty office room".into(),
        bounds: Vec3::new(ROOM_WIDTH, ROOM_LENGTH, ROOM_HEIGHT),
        surfaces: shell(ROOM_WIDTH, ROOM_LENGTH, ROOM_HEIGHT, WALL_RHO, WALL_RHO),
        luminaires: ceiling_luminaires(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wall {
    X0,
    XMax,
    Y0,
    YMax,
}

/// Door or window cut into a boundary wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallOpening {
    pub name: String,
    pub wall: Wall,
    /// Horizontal extent along the wall (x for y-walls, y for x-walls).
    pub along: [f64; 2],
    pub height: [f64; 2],
}

/// Box-shaped furniture standing on the floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Desk {
    pub name: String,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub height: f64,
}

/// Thin vertical panel from the floor up to `height`, reflecting on both faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubiclePanel {
    pub name: String,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomBLayout {
    pub doors: Vec<WallOpening>,
    pub windows: Vec<WallOpening>,
    /// Reflectance of the two shelf-lined walls (x = max and y = max).
    pub shelf_wall_rho: f64,
    pub furniture_rho: f64,
    pub desks: Vec<Desk>,
    pub panels: Vec<CubiclePanel>,
}

impl Default for RoomBLayout {
    /// Approximate office layout: one door, two windows, four desks, four
    /// 1.5 m cubicle panels.
    fn default() -> Self {
        let desk = |name: &str, x: [f64; 2], y: [f64; 2]| Desk {
            name: name.into(),
            x,
            y,
            height: 0.75,
        };
        let panel = |name: &str, start: [f64; 2], end: [f64; 2]| CubiclePanel {
            name: name.into(),
            start,
            end,
            height: 1.5,
        };
        RoomBLayout {
            doors: vec![WallOpening {
                name: "door".into(),
                wall: Wall::Y0,
                along: [2.8, 3.8],
                height: [0.0, 2.1],
            }],
            windows: vec![
                WallOpening {
                    name: "window-1".into(),
                    wall: Wall::X0,
                    along: [1.0, 3.0],
                    height: [1.0, 2.2],
                },
                WallOpening {
                    name: "window-2".into(),
                    wall: Wall::X0,
                    along: [5.0, 7.0],
                    height: [1.0, 2.2],
                },
            ],
            shelf_wall_rho: SHELF_WALL_RHO,
            furniture_rho: FURNITURE_RHO,
            desks: vec![
                desk("desk-1", [3.2, 3.9], [0.6, 2.0]),
                desk("desk-2", [3.2, 3.9], [6.0, 7.4]),
                desk("desk-3", [0.1, 0.8], [3.4, 4.6]),
                desk("desk-4", [1.4, 2.6], [7.3, 7.9]),
            ],
            panels: vec![
                panel("panel-1", [0.0, 2.5], [1.5, 2.5]),
                panel("panel-2", [2.5, 2.5], [4.0, 2.5]),
                panel("panel-3", [0.0, 5.5], [1.5, 5.5]),
                panel("panel-4", [2.5, 5.5], [4.0, 5.5]),
            ],
        }
    }
}

fn ordered(range: [f64; 2], lo: f64, hi: f64) -> bool {
    range[0].is_finite()
        && range[1].is_finite()
        && lo <= range[0]
        && range[0] < range[1]
        && range[1] <= hi
}

fn opening_surface(o: &WallOpening, rho: f64, kind: &str) -> Result<Surface> {
    let (w, l, h) = (ROOM_WIDTH, ROOM_LENGTH, ROOM_HEIGHT);
    let span = match o.wall {
        Wall::X0 | Wall::XMax => l,
        Wall::Y0 | Wall::YMax => w,
    };
    if !ordered(o.along, 0.0, span) {
        return Err(Error::config(format!(
            "{kind} '{}': horizontal range {:?} must be increasing within [0, {span}]",
            o.name, o.along
        )));
    }
    if !ordered(o.height, 0.0, h) {
        return Err(Error::config(format!(
            "{kind} '{}': height range {:?} must be increasing within [0, {h}]",
            o.name, o.height
        )));
    }
    let (a0, a1) = (o.along[0], o.along[1]);
    let (z0, z1) = (o.height[0], o.height[1]);
    let dz = Vec3::new(0.0, 0.0, z1 - z0);
    let (origin, u, normal) = match o.wall {
        Wall::X0 => (
            Vec3::new(0.0, a0, z0),
            Vec3::new(0.0, a1 - a0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        ),
        Wall::XMax => (
            Vec3::new(w, a0, z0),
            Vec3::new(0.0, a1 - a0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
        ),
        Wall::Y0 => (
            Vec3::new(a0, 0.0, z0),
            Vec3::new(a1 - a0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ),
        Wall::YMax => (
            Vec3::new(a0, l, z0),
            Vec3::new(a1 - a0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
        ),
    };
    Ok(Surface::new(&o.name, origin, u, dz, normal, rho).inset())
}

fn desk_surfaces(d: &Desk, rho: f64) -> Result<Vec<Surface>> {
    if !ordered(d.x, 0.0, ROOM_WIDTH) || !ordered(d.y, 0.0, ROOM_LENGTH) {
        return Err(Error::config(format!(
            "desk '{}': footprint x {:?} y {:?} must be increasing and inside the room",
            d.name, d.x, d.y
        )));
    }
    if !(d.height > 0.0 && d.height < ROOM_HEIGHT) {
        return Err(Error::config(format!(
            "desk '{}': height {} must be in (0, {ROOM_HEIGHT})",
            d.name, d.height
        )));
    }
    let (x0, x1, y0, y1, h) = (d.x[0], d.x[1], d.y[0], d.y[1], d.height);
    let ex = Vec3::new(x1 - x0, 0.0, 0.0);
    let ey = Vec3::new(0.0, y1 - y0, 0.0);
    let ez = Vec3::new(0.0, 0.0, h);
    let n = &d.name;
    let faces = [
        Surface::new(
            &format!("{n} top"),
            Vec3::new(x0, y0, h),
            ex,
            ey,
            Vec3::UP,
            rho,
        ),
        Surface::new(
            &format!("{n} side x0"),
            Vec3::new(x0, y0, 0.0),
            ey,
            ez,
            Vec3::new(-1.0, 0.0, 0.0),
            rho,
        ),
        Surface::new(
            &format!("{n} side x1"),
            Vec3::new(x1, y0, 0.0),
            ey,
            ez,
            Vec3::new(1.0, 0.0, 0.0),
            rho,
        ),
        Surface::new(
            &format!("{n} side y0"),
            Vec3::new(x0, y0, 0.0),
            ex,
            ez,
            Vec3::new(0.0, -1.0, 0.0),
            rho,
        ),
        Surface::new(
            &format!("{n} side y1"),
            Vec3::new(x0, y1, 0.0),
            ex,
            ez,
            Vec3::new(0.0, 1.0, 0.0),
            rho,
        ),
    ];
    Ok(faces.into_iter().map(Surface::occluding).collect())
}

fn panel_surfaces(p: &CubiclePanel, rho: f64) -> Result<Vec<Surface>> {
    let inside = |q: [f64; 2]| {
        q[0].is_finite()
            && q[1].is_finite()
            && (0.0..=ROOM_WIDTH).contains(&q[0])
            && (0.0..=ROOM_LENGTH).contains(&q[1])
    };
    if !inside(p.start) || !inside(p.end) {
        return Err(Error::config(format!(
            "panel '{}': end points {:?} -> {:?} must lie inside the room",
            p.name, p.start, p.end
        )));
    }
    let u = Vec3::new(p.end[0] - p.start[0], p.end[1] - p.start[1], 0.0);
    if u.norm() < 1e-6 {
        return Err(Error::config(format!("panel '{}': zero length", p.name)));
    }
    if !(p.height > 0.0 && p.height < ROOM_HEIGHT) {
        return Err(Error::config(format!(
            "panel '{}': height {} must be in (0, {ROOM_HEIGHT})",
            p.name, p.height
        )));
    }
    let origin = Vec3::new(p.start[0], p.start[1], 0.0);
    let ez = Vec3::new(0.0, 0.0, p.height);
    let n = u.cross(Vec3::UP).normalized();
    Ok(vec![
        Surface::new(&format!("{} face a", p.name), origin, u, ez, n, rho).occluding(),
        Surface::new(&format!("{} face b", p.name), origin, u, ez, -n, rho).occluding(),
    ])
}

/// Furnished office: room A's shell with zero-reflectance door and windows,
/// 0.4 shelf walls, and occluding furniture and cubicle panels.
pub fn build_room_b(layout: &RoomBLayout) -> Result<Scene> {
    for (what, rho) in [
        ("shelf_wall_rho", layout.shelf_wall_rho),
        ("furniture_rho", layout.furniture_rho),
    ] {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::config(format!("{what}: {rho} outside [0, 1]")));
        }
    }
    let mut surfaces = shell(
        ROOM_WIDTH,
        ROOM_LENGTH,
        ROOM_HEIGHT,
        layout.shelf_wall_rho,
        layout.shelf_wall_rho,
    );
    for d in &layout.doors {
        surfaces.push(opening_surface(d, 0.0, "door")?.occluding());
    }
    for w in &layout.windows {
        surfaces.push(opening_surface(w, 0.0, "window")?);
    }
    for d in &layout.desks {
        surfaces.extend(desk_surfaces(d, layout.furniture_rho)?);
    }
    for p in &layout.panels {
        surfaces.extend(panel_surfaces(p, layout.furniture_rho)?);
    }
    let scene = Scene {
        label: RoomLabel::B,
        description: "furnished office (approximate layout)".into(),
        bounds: Vec3::new(ROOM_WIDTH, ROOM_LENGTH, ROOM_HEIGHT),
        surfaces,
        luminaires: ceiling_luminaires(),
    };
    scene.validate()?;
    Ok(scene)
}

/// Element sets for the two reflection orders.
#[derive(Debug, Clone)]
pub struct Partition {
    pub first: Vec<SurfaceElement>,
    pub second: Vec<SurfaceElement>,
}

pub fn partition(scene: &Scene, first_pitch: f64, second_pitch: f64) -> Result<Partition> {
    Ok(Partition {
        first: tile(scene, first_pitch)?,
        second: tile(scene, second_pitch)?,
    })
}

fn tile_count(len: f64, pitch: f64) -> usize {
    ((len / pitch) - 1e-9).ceil().max(1.0) as usize
}

/// Tiles every non-inset surface with `pitch`-sized squares. The last row
/// and column are clipped when the pitch does not divide an edge.
pub fn tile(scene: &Scene, pitch: f64) -> Result<Vec<SurfaceElement>> {
    if !(pitch > 0.0) || !pitch.is_finite() {
        return Err(Error::config(format!(
            "element size must be positive, got {pitch}"
        )));
    }
    let mut out = Vec::new();
    for (index, s) in scene.surfaces.iter().enumerate() {
        if s.inset {
            continue;
        }
        let insets: Vec<&Surface> = scene
            .surfaces
            .iter()
            .filter(|o| o.inset && o.coplanar_with(s))
            .collect();
        let (lu, lv) = (s.u.norm(), s.v.norm());
        let (du, dv) = (s.u * (1.0 / lu), s.v * (1.0 / lv));
        let (nu, nv) = (tile_count(lu, pitch), tile_count(lv, pitch));
        out.reserve(nu * nv);
        for i in 0..nu {
            let a0 = i as f64 * pitch;
            let a1 = ((i + 1) as f64 * pitch).min(lu);
            for j in 0..nv {
                let b0 = j as f64 * pitch;
                let b1 = ((j + 1) as f64 * pitch).min(lv);
                let center = s.origin + du * (0.5 * (a0 + a1)) + dv * (0.5 * (b0 + b1));
                let rho = insets
                    .iter()
                    .rev()
                    .find(|o| o.covers(center))
                    .map_or(s.rho, |o| o.rho);
                out.push(SurfaceElement {
                    center,
                    area: (a1 - a0) * (b1 - b0),
                    normal: s.normal,
                    rho,
                    lambertian_order: 1.0,
                    surface: index,
                });
            }
        }
    }
    Ok(out)
}

/// Precomputed occluding rectangles for fast segment tests.
#[derive(Debug, Clone)]
pub struct Occluders {
    rects: Vec<OccluderRect>,
}

#[derive(Debug, Clone)]
struct OccluderRect {
    origin: Vec3,
    u: Vec3,
    v: Vec3,
    normal: Vec3,
    inv_u2: f64,
    inv_v2: f64,
    lo: Vec3,
    hi: Vec3,
}

/// Relative tolerance keeping intersections strictly inside segment and rectangle.
const INTERIOR_EPS: f64 = 1e-9;

impl Occluders {
    pub fn new(scene: &Scene) -> Self {
        let rects = scene
            .surfaces
            .iter()
            .filter(|s| s.occluding)
            .map(|s| {
                let corners = [
                    s.origin,
                    s.origin + s.u,
                    s.origin + s.v,
                    s.origin + s.u + s.v,
                ];
                let lo = corners.iter().fold(corners[0], |m, c| {
                    Vec3::new(m.x.min(c.x), m.y.min(c.y), m.z.min(c.z))
                });
                let hi = corners.iter().fold(corners[0], |m, c| {
                    Vec3::new(m.x.max(c.x), m.y.max(c.y), m.z.max(c.z))
                });
                OccluderRect {
                    origin: s.origin,
                    u: s.u,
                    v: s.v,
                    normal: s.normal,
                    inv_u2: 1.0 / s.u.norm_sq(),
                    inv_v2: 1.0 / s.v.norm_sq(),
                    lo,
                    hi,
                }
            })
            .collect();
        Occluders { rects }
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    /// True iff the open segment p-q crosses no occluder's interior.
    #[inline]
    pub fn visible(&self, p: Vec3, q: Vec3) -> bool {
        if self.rects.is_empty() {
            return true;
        }
        let d = q - p;
        let lo = Vec3::new(p.x.min(q.x), p.y.min(q.y), p.z.min(q.z));
        let hi = Vec3::new(p.x.max(q.x), p.y.max(q.y), p.z.max(q.z));
        for r in &self.rects {
            if hi.x < r.lo.x
                || lo.x > r.hi.x
                || hi.y < r.lo.y
                || lo.y > r.hi.y
                || hi.z < r.lo.z
                || lo.z > r.hi.z
            {
                continue;
            }
            let denom = r.normal.dot(d);
            if denom == 0.0 {
                continue;
            }
            let t = r.normal.dot(r.origin - p) / denom;
            if t <= INTERIOR_EPS || t >= 1.0 - INTERIOR_EPS {
                continue;
            }
            let h = p + d * t - r.origin;
            let a = h.dot(r.u) * r.inv_u2;
            let b = h.dot(r.v) * r.inv_v2;
            if a > INTERIOR_EPS
                && a < 1.0 - INTERIOR_EPS
                && b > INTERIOR_EPS
                && b < 1.0 - INTERIOR_EPS
            {
                return false;
            }
        }
        true
    }
}

/// Line-of-sight test between two points of the scene.
pub fn visible(p: Vec3, q: Vec3, scene: &Scene) -> bool {
    Occluders::new(scene).visible(p, q)
}

/// Solid-angle style factor shared by photometry and the tracer:
/// generalized Lambertian radiant intensity per unit power, `(n+1)/(2 pi) cos^n`.
#[inline]
pub fn lambertian_intensity(order: f64, cos_phi: f64) -> f64 {
    (order + 1.0) / (2.0 * PI) * cos_phi.powf(order)
}

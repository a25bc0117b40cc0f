//! Phase-only hologram design.
//!
//! A hologram is an M x N grid of rectangular cells with complex transmittance
//! `A e^{j phi}`. Its far field is sampled on a zero-padded P x Q grid:
//!
//! ```text
//! g[p, q] = R S sinc(p / P) sinc(q / Q) * sum_kl H[k, l] exp(j 2 pi (p k / P + q l / Q))
//! ```
//!
//! with `k in [-M/2, M/2)`, `l in [-N/2, N/2)` and `p, q` centered the same
//! way. The designer anneals the cell phases so that the normalized far-field
//! energy matches a uniform window.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_HOLOGRAM_SIZE: usize = 64;
pub const DEFAULT_RECON_SIZE: usize = 256;
/// Window edge in reconstruction samples; a quarter of the grid.
pub const DEFAULT_WINDOW: usize = 64;
pub const PHASE_LEVELS: u16 = 256;

#[inline]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let a = PI * x;
        a.sin() / a
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2 pi
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hologram {
    /// Cells along x (index k).
    pub rows: usize,
    /// Cells along y (index l).
    pub cols: usize,
    pub pitch_r: f64,
    pub pitch_s: f64,
    /// Row-major, radians in [0, 2 pi).
    pub phases: Vec<f64>,
    /// Row-major; all ones for a phase-only hologram.
    pub amplitudes: Vec<f64>,
}

impl Hologram {
    pub fn phase_only(rows: usize, cols: usize, phases: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || phases.len() != rows * cols {
            return Err(Error::config(format!(
                "hologram needs {rows} x {cols} phases, got {}",
                phases.len()
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("hologram phase is not finite"));
        }
        Ok(Hologram {
            rows,
            cols,
            pitch_r: 1.0,
            pitch_s: 1.0,
            phases: phases.into_iter().map(wrap_phase).collect(),
            amplitudes: vec![1.0; rows * cols],
        })
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Hologram::phase_only(rows, cols, vec![0.0; rows * cols]).expect("nonempty")
    }

    fn from_levels(rows: usize, cols: usize, levels: &[u16]) -> Self {
        let step = 2.0 * PI / PHASE_LEVELS as f64;
        let phases = levels.iter().map(|&q| q as f64 * step).collect();
        Hologram::phase_only(rows, cols, phases).expect("sized")
    }

    #[inline]
    pub fn transmittance(&self, r: usize, c: usize) -> Complex64 {
        let i = r * self.cols + c;
        Complex64::from_polar(self.amplitudes[i], self.phases[i])
    }

    pub fn is_phase_only(&self) -> bool {
        self.amplitudes.iter().all(|&a| a == 1.0)
    }

    /// Sum of |H|^2 over all cells.
    pub fn energy(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    /// Writes the phases as an M-line CSV (one row of N values per line) and a
    /// JSON sidecar next to it carrying the header fields.
    pub fn save(&self, path: &Path, header: &HologramHeader) -> Result<()> {
        let mut text = String::with_capacity(self.phases.len() * 20);
        for row in self.phases.chunks(self.cols) {
            for (i, p) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                write!(text, "{p}").unwrap();
            }
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(header).expect("header serializes");
        std::fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
    }

    pub fn load(path: &Path) -> Result<(Hologram, HologramHeader)> {
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let header: HologramHeader = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: side.clone(),
            source: e,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        let mut phases = Vec::with_capacity(header.m * header.n);
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != header.n {
                return Err(Error::config(format!(
                    "{}: line {} has {} values, expected {}",
                    path.display(),
                    line + 1,
                    record.len(),
                    header.n
                )));
            }
            for field in record.iter() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::config(format!("{}: bad phase value '{field}'", path.display()))
                })?;
                phases.push(v);
            }
        }
        let mut h = Hologram::phase_only(header.m, header.n, phases)?;
        h.pitch_r = header.r;
        h.pitch_s = header.s;
        Ok((h, header))
    }
}

/// Sidecar metadata stored next to a hologram CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HologramHeader {
    pub m: usize,
    pub n: usize,
    pub r: f64,
    pub s: f64,
    pub seed: u64,
    pub cf: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Sampled far field. Index (i, j) holds p = i - P/2, q = j - Q/2.
#[derive(Debug, Clone)]
pub struct FarFieldPattern {
    pub rows: usize,
    pub cols: usize,
    pub field: Vec<Complex64>,
    /// `R sinc(p / P)` per row.
    pub envelope_x: Vec<f64>,
    /// `S sinc(q / Q)` per column.
    pub envelope_y: Vec<f64>,
}

impl FarFieldPattern {
    pub fn intensity(&self) -> Vec<f64> {
        self.field.iter().map(|g| g.norm_sqr()).collect()
    }

    pub fn energy(&self) -> f64 {
        self.field.iter().map(|g| g.norm_sqr()).sum()
    }

    /// Energy of the cell-sum with the sinc envelope divided out. Equals
    /// `P Q sum |H|^2` by Parseval.
    pub fn array_factor_energy(&self) -> f64 {
        let mut e = 0.0;
        for (i, row) in self.field.chunks(self.cols).enumerate() {
            for (j, g) in row.iter().enumerate() {
                let w = self.envelope_x[i] * self.envelope_y[j];
                e += g.norm_sqr() / (w * w);
            }
        }
        e
    }

    /// Intensity as a CSV matrix, one grid row per line.
    pub fn write_intensity_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for row in self.field.chunks(self.cols) {
            for (j, g) in row.iter().enumerate() {
                if j > 0 {
                    text.push(',');
                }
                write!(text, "{}", g.norm_sqr()).unwrap();
            }
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn envelope(n: usize, pitch: f64) -> Vec<f64> {
    let half = (n / 2) as isize;
    (0..n)
        .map(|i| pitch * sinc((i as isize - half) as f64 / n as f64))
        .collect()
}

fn check_grid(h: &Hologram, rows: usize, cols: usize) -> Result<()> {
    if !rows.is_power_of_two() || !cols.is_power_of_two() {
        return Err(Error::config(format!(
            "reconstruction grid {rows} x {cols} must be powers of two"
        )));
    }
    if rows < h.rows || cols < h.cols {
        return Err(Error::config(format!(
            "reconstruction grid {rows} x {cols} is smaller than the hologram {} x {}",
            h.rows, h.cols
        )));
    }
    if !(h.pitch_r > 0.0 && h.pitch_s > 0.0) {
        return Err(Error::config("cell pitch must be positive"));
    }
    Ok(())
}

/// Far field of `h` on a `rows x cols` grid via two passes of inverse FFTs.
pub fn far_field(h: &Hologram, rows: usize, cols: usize) -> Result<FarFieldPattern> {
    check_grid(h, rows, cols)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); rows * cols];
    let (hm, hn) = ((h.rows / 2) as isize, (h.cols / 2) as isize);
    for r in 0..h.rows {
        let k = r as isize - hm;
        let i = k.rem_euclid(rows as isize) as usize;
        for c in 0..h.cols {
            let l = c as isize - hn;
            let j = l.rem_euclid(cols as isize) as usize;
            buf[i * cols + j] = h.transmittance(r, c);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_inverse(cols);
    for row in buf.chunks_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_inverse(rows);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for j in 0..cols {
        for i in 0..rows {
            column[i] = buf[i * cols + j];
        }
        col_fft.process(&mut column);
        for i in 0..rows {
            buf[i * cols + j] = column[i];
        }
    }

    let envelope_x = envelope(rows, h.pitch_r);
    let envelope_y = envelope(cols, h.pitch_s);
    let mut field = vec![Complex64::new(0.0, 0.0); rows * cols];
    let (hp, hq) = ((rows / 2) as isize, (cols / 2) as isize);
    for i in 0..rows {
        let si = (i as isize - hp).rem_euclid(rows as isize) as usize;
        for j in 0..cols {
            let sj = (j as isize - hq).rem_euclid(cols as isize) as usize;
            field[i * cols + j] = buf[si * cols + sj] * (envelope_x[i] * envelope_y[j]);
        }
    }
    Ok(FarFieldPattern {
        rows,
        cols,
        field,
        envelope_x,
        envelope_y,
    })
}

/// Rectangle of reconstruction samples, `[row0, row0 + rows) x [col0, col0 + cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Window {
    pub fn centered(grid_rows: usize, grid_cols: usize, rows: usize, cols: usize) -> Self {
        Window {
            row0: (grid_rows - rows) / 2,
            col0: (grid_cols - cols) / 2,
            rows,
            cols,
        }
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.row0 && i < self.row0 + self.rows && j >= self.col0 && j < self.col0 + self.cols
    }
}

/// Desired normalized far-field energy: uniform inside a window, zero outside.
#[derive(Debug, Clone)]
pub struct TargetPattern {
    pub rows: usize,
    pub cols: usize,
    pub window: Window,
    /// Share of the luminaire's power the hologram is meant to carry.
    pub design_fraction: f64,
    pub energy: Vec<f64>,
}

impl TargetPattern {
    pub fn uniform_window(
        rows: usize,
        cols: usize,
        window: Window,
        design_fraction: f64,
    ) -> Result<Self> {
        if window.rows == 0
            || window.cols == 0
            || window.row0 + window.rows > rows
            || window.col0 + window.cols > cols
        {
            return Err(Error::config(format!(
                "window {window:?} does not fit a {rows} x {cols} grid"
            )));
        }
        if !(0.0..=1.0).contains(&design_fraction) {
            return Err(Error::config(format!(
                "design fraction {design_fraction} outside [0, 1]"
            )));
        }
        let level = 1.0 / (window.rows * window.cols) as f64;
        let mut energy = vec![0.0; rows * cols];
        for i in window.row0..window.row0 + window.rows {
            for j in window.col0..window.col0 + window.cols {
                energy[i * cols + j] = level;
            }
        }
        Ok(TargetPattern {
            rows,
            cols,
            window,
            design_fraction,
            energy,
        })
    }

    /// Default 2 m x 2 m cell target: 64-sample window centered in a 256 grid.
    pub fn default_cell(design_fraction: f64) -> Self {
        let w = Window::centered(
            DEFAULT_RECON_SIZE,
            DEFAULT_RECON_SIZE,
            DEFAULT_WINDOW,
            DEFAULT_WINDOW,
        );
        TargetPattern::uniform_window(DEFAULT_RECON_SIZE, DEFAULT_RECON_SIZE, w, design_fraction)
            .expect("default window fits")
    }
}

/// Root-sum-square difference between the target energy and the
/// reconstruction energy normalized to unit total.
pub fn cost(g: &FarFieldPattern, target: &TargetPattern) -> Result<f64> {
    if g.rows != target.rows || g.cols != target.cols {
        return Err(Error::config(format!(
            "far field {} x {} does not match target {} x {}",
            g.rows, g.cols, target.rows, target.cols
        )));
    }
    cost_of_intensity(&g.intensity(), &target.energy)
}

pub fn cost_of_intensity(intensity: &[f64], target: &[f64]) -> Result<f64> {
    if intensity.len() != target.len() {
        return Err(Error::config("intensity and target sizes differ"));
    }
    let total: f64 = intensity.iter().sum();
    let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
    let sq: f64 = intensity
        .iter()
        .zip(target)
        .map(|(i, t)| {
            let d = t - i * scale;
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// Starting temperature; `None` calibrates it so that about half of the
    /// uphill moves from the initial state would be accepted.
    pub initial_temperature: Option<f64>,
    /// Temperature multiplier per stage, in (0, 1).
    pub cooling: f64,
    pub iterations_per_stage: usize,
    /// Annealing stops once T < stop_ratio * T0.
    pub stop_ratio: f64,
    pub seed: u64,
    /// Keep a per-proposal record (memory heavy, for diagnostics and tests).
    #[serde(default)]
    pub record_moves: bool,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            initial_temperature: None,
            cooling: 0.8,
            iterations_per_stage: DEFAULT_HOLOGRAM_SIZE * DEFAULT_HOLOGRAM_SIZE / 2,
            stop_ratio: 1e-4,
            seed: 1,
            record_moves: false,
        }
    }
}

impl AnnealSchedule {
    /// Zero-temperature descent: only moves with dCF <= 0 are kept.
    pub fn greedy(iterations: usize, seed: u64) -> Self {
        AnnealSchedule {
            initial_temperature: Some(0.0),
            cooling: 0.5,
            iterations_per_stage: iterations,
            stop_ratio: 1.0,
            seed,
            record_moves: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.initial_temperature {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::config(format!(
                    "initial temperature {t} must be >= 0"
                )));
            }
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::config(format!(
                "cooling factor {} outside (0, 1)",
                self.cooling
            )));
        }
        if self.iterations_per_stage == 0 {
            return Err(Error::config("iterations per stage must be positive"));
        }
        if !(self.stop_ratio > 0.0 && self.stop_ratio <= 1.0) {
            return Err(Error::config(format!(
                "stop ratio {} outside (0, 1]",
                self.stop_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub temperature: f64,
    pub proposals: usize,
    pub accepted: usize,
    pub uphill_proposed: usize,
    pub uphill_accepted: usize,
    pub current_cf: f64,
    pub best_cf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveRecord {
    pub temperature: f64,
    pub delta: f64,
    pub accepted: bool,
    /// CF of the current state after the move was decided.
    pub cf_after: f64,
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub hologram: Hologram,
    pub initial_cf: f64,
    pub best_cf: f64,
    pub trace: Vec<StageRecord>,
    pub moves: Vec<MoveRecord>,
    pub seed: u64,
}

/// Incremental far-field state: the envelope-free cell sum on the padded grid
/// plus running sums needed by the cost.
struct AnnealState<'a> {
    target: &'a TargetPattern,
    rows: usize,
    cols: usize,
    holo_cols: usize,
    /// Squared envelope per axis.
    wx: Vec<f64>,
    wy: Vec<f64>,
    /// exp(j 2 pi p k / P) per hologram row k, stored as split re/im.
    ex_re: Vec<f64>,
    ex_im: Vec<f64>,
    ey_re: Vec<f64>,
    ey_im: Vec<f64>,
    a_re: Vec<f64>,
    a_im: Vec<f64>,
    s_re: Vec<f64>,
    s_im: Vec<f64>,
    level: f64,
    cf: f64,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
    levels: Vec<u16>,
}

impl<'a> AnnealState<'a> {
    fn new(
        target: &'a TargetPattern,
        holo_rows: usize,
        holo_cols: usize,
        levels: Vec<u16>,
    ) -> Self {
        let (rows, cols) = (target.rows, target.cols);
        let wx: Vec<f64> = envelope(rows, 1.0).iter().map(|e| e * e).collect();
        let wy: Vec<f64> = envelope(cols, 1.0).iter().map(|e| e * e).collect();
        let phasors = |n_cells: usize, n: usize| {
            let mut re = vec![0.0; n_cells * n];
            let mut im = vec![0.0; n_cells * n];
            for c in 0..n_cells {
                let k = c as i64 - (n_cells / 2) as i64;
                for i in 0..n {
                    let p = i as i64 - (n / 2) as i64;
                    let m = (p * k).rem_euclid(n as i64) as f64;
                    let ang = 2.0 * PI * m / n as f64;
                    re[c * n + i] = ang.cos();
                    im[c * n + i] = ang.sin();
                }
            }
            (re, im)
        };
        let (ex_re, ex_im) = phasors(holo_rows, rows);
        let (ey_re, ey_im) = phasors(holo_cols, cols);
        let step = 2.0 * PI / PHASE_LEVELS as f64;
        let cos_table = (0..PHASE_LEVELS).map(|q| (q as f64 * step).cos()).collect();
        let sin_table = (0..PHASE_LEVELS).map(|q| (q as f64 * step).sin()).collect();

        let holo = Hologram::from_levels(holo_rows, holo_cols, &levels);
        let ff = far_field(&holo, rows, cols).expect("grid checked by caller");
        let mut a_re = vec![0.0; rows * cols];
        let mut a_im = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                let idx = i * cols + j;
                let w = ff.envelope_x[i] * ff.envelope_y[j];
                a_re[idx] = ff.field[idx].re / w;
                a_im[idx] = ff.field[idx].im / w;
            }
        }
        let level = 1.0 / (target.window.rows * target.window.cols) as f64;
        let mut st = AnnealState {
            target,
            rows,
            cols,
            holo_cols,
            wx,
            wy,
            ex_re,
            ex_im,
            ey_re,
            ey_im,
            s_re: a_re.clone(),
            s_im: a_im.clone(),
            a_re,
            a_im,
            level,
            cf: 0.0,
            cos_table,
            sin_table,
            levels,
        };
        st.cf = st.full_cost();
        st
    }

    fn cf_from_sums(&self, total: f64, window_sum: f64, sq_sum: f64) -> f64 {
        if total <= 0.0 {
            return self.level.sqrt();
        }
        let cf2 = self.level - 2.0 * self.level * window_sum / total + sq_sum / (total * total);
        cf2.max(0.0).sqrt()
    }

    fn full_cost(&self) -> f64 {
        let w = self.target.window;
        let (mut total, mut win, mut sq) = (0.0, 0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let idx = i * self.cols + j;
                let v = self.wx[i] * self.wy[j] * (self.a_re[idx].powi(2) + self.a_im[idx].powi(2));
                total += v;
                sq += v * v;
                if w.contains(i, j) {
                    win += v;
                }
            }
        }
        self.cf_from_sums(total, win, sq)
    }

    /// Cost after setting `cell` to `new_level`; the candidate field is left in
    /// the scratch buffers.
    fn propose(&mut self, cell: usize, new_level: u16) -> f64 {
        let (r, c) = (cell / self.holo_cols, cell % self.holo_cols);
        let old = self.levels[cell] as usize;
        let dh_re = self.cos_table[new_level as usize] - self.cos_table[old];
        let dh_im = self.sin_table[new_level as usize] - self.sin_table[old];
        let cols = self.cols;
        let win = self.target.window;
        let ey_re = &self.ey_re[c * cols..(c + 1) * cols];
        let ey_im = &self.ey_im[c * cols..(c + 1) * cols];
        let (mut total, mut win_sum, mut sq) = (0.0, 0.0, 0.0);
        for i in 0..self.rows {
            let er = self.ex_re[r * self.rows + i];
            let ei = self.ex_im[r * self.rows + i];
            let ur = dh_re * er - dh_im * ei;
            let ui = dh_re * ei + dh_im * er;
            let wx = self.wx[i];
            let base = i * cols;
            let a_re = &self.a_re[base..base + cols];
            let a_im = &self.a_im[base..base + cols];
            let s_re = &mut self.s_re[base..base + cols];
            let s_im = &mut self.s_im[base..base + cols];
            let in_rows = i >= win.row0 && i < win.row0 + win.rows;
            let mut row_total = 0.0;
            let mut row_sq = 0.0;
            let mut row_win = 0.0;
            for j in 0..cols {
                let nr = a_re[j] + (ur * ey_re[j] - ui * ey_im[j]);
                let ni = a_im[j] + (ur * ey_im[j] + ui * ey_re[j]);
                s_re[j] = nr;
                s_im[j] = ni;
                let v = self.wy[j] * (nr * nr + ni * ni);
                row_total += v;
                row_sq += v * v;
            }
            if in_rows {
                for j in win.col0..win.col0 + win.cols {
                    row_win += self.wy[j] * (s_re[j] * s_re[j] + s_im[j] * s_im[j]);
                }
            }
            total += wx * row_total;
            sq += wx * wx * row_sq;
            win_sum += wx * row_win;
        }
        self.cf_from_sums(total, win_sum, sq)
    }

    fn commit(&mut self, cell: usize, new_level: u16, cf: f64) {
        std::mem::swap(&mut self.a_re, &mut self.s_re);
        std::mem::swap(&mut self.a_im, &mut self.s_im);
        self.levels[cell] = new_level;
        self.cf = cf;
    }
}

/// Anneals a phase-only `rows x cols` hologram toward `target`.
///
/// Each proposal moves one random cell to a different random level out of
/// [`PHASE_LEVELS`]; it is accepted when dCF <= 0, otherwise with probability
/// exp(-dCF / T). The returned hologram is the best state seen.
pub fn optimize(
    target: &TargetPattern,
    schedule: &AnnealSchedule,
    rows: usize,
    cols: usize,
) -> Result<AnnealOutcome> {
    schedule.validate()?;
    check_grid(
        &Hologram::uniform(rows.max(1), cols.max(1)),
        target.rows,
        target.cols,
    )?;
    if rows == 0 || cols == 0 {
        return Err(Error::config("hologram must have at least one cell"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let levels: Vec<u16> = (0..rows * cols)
        .map(|_| rng.gen_range(0..PHASE_LEVELS))
        .collect();
    let mut st = AnnealState::new(target, rows, cols, levels);
    let initial_cf = st.cf;
    let n_cells = rows * cols;

    let t0 = match schedule.initial_temperature {
        Some(t) => t,
        None => {
            // mean uphill step from the start state, accepted with p = 0.5
            let mut probe = ChaCha8Rng::seed_from_u64(schedule.seed ^ 0x9e37_79b9_7f4a_7c15);
            let (mut sum, mut n) = (0.0, 0usize);
            for _ in 0..200 {
                let cell = probe.gen_range(0..n_cells);
                let lvl = (st.levels[cell] + probe.gen_range(1..PHASE_LEVELS)) % PHASE_LEVELS;
                let d = st.propose(cell, lvl) - st.cf;
                if d > 0.0 {
                    sum += d;
                    n += 1;
                }
            }
            if n == 0 {
                0.0
            } else {
                (sum / n as f64) / 2f64.ln()
            }
        }
    };

    let mut best_cf = st.cf;
    let mut best_levels = st.levels.clone();
    let mut trace = Vec::new();
    let mut moves = Vec::new();
    let mut temperature = t0;
    let t_min = t0 * schedule.stop_ratio;
    let mut stage = 0;
    loop {
        let mut rec = StageRecord {
            stage,
            temperature,
            proposals: 0,
            accepted: 0,
            uphill_proposed: 0,
            uphill_accepted: 0,
            current_cf: st.cf,
            best_cf,
        };
        for _ in 0..schedule.iterations_per_stage {
            let cell = rng.gen_range(0..n_cells);
            let lvl = (st.levels[cell] + rng.gen_range(1..PHASE_LEVELS)) % PHASE_LEVELS;
            let cf = st.propose(cell, lvl);
            let delta = cf - st.cf;
            let accept = if delta <= 0.0 {
                true
            } else {
                rec.uphill_proposed += 1;
                // always draw so the stream does not depend on the outcome
                let u: f64 = rng.gen();
                temperature > 0.0 && u < (-delta / temperature).exp()
            };
            rec.proposals += 1;
            if accept {
                if delta > 0.0 {
                    rec.uphill_accepted += 1;
                }
                rec.accepted += 1;
                st.commit(cell, lvl, cf);
                if cf < best_cf {
                    best_cf = cf;
                    best_levels.copy_from_slice(&st.levels);
                }
            }
            if schedule.record_moves {
                moves.push(MoveRecord {
                    temperature,
                    delta,
                    accepted: accept,
                    cf_after: st.cf,
                });
            }
        }
        rec.current_cf = st.cf;
        rec.best_cf = best_cf;
        trace.push(rec);
        stage += 1;
        if temperature <= 0.0 {
            break;
        }
        temperature *= schedule.cooling;
        if temperature < t_min {
            break;
        }
    }

    let mut hologram = Hologram::from_levels(rows, cols, &best_levels);
    hologram.pitch_r = 1.0;
    hologram.pitch_s = 1.0;
    Ok(AnnealOutcome {
        hologram,
        initial_cf,
        best_cf,
        trace,
        moves,
        seed: schedule.seed,
    })
}

/// Normalized far-field distribution over the target window.
///
/// `weights[ix * ny + iy]` is the share of the in-window energy landing in
/// sample (ix, iy); ix runs along x, iy along y. `efficiency` is the in-window
/// share of the total far-field energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamMap {
    pub nx: usize,
    pub ny: usize,
    pub weights: Vec<f64>,
    pub efficiency: f64,
}

impl BeamMap {
    /// Ideal flat-top beam with unit efficiency.
    pub fn uniform(nx: usize, ny: usize) -> Self {
        let w = 1.0 / (nx * ny) as f64;
        BeamMap {
            nx,
            ny,
            weights: vec![w; nx * ny],
            efficiency: 1.0,
        }
    }

    #[inline]
    pub fn weight(&self, ix: usize, iy: usize) -> f64 {
        self.weights[ix * self.ny + iy]
    }
}

pub fn beam_intensity_map(h: &Hologram, target: &TargetPattern) -> Result<BeamMap> {
    let ff = far_field(h, target.rows, target.cols)?;
    let w = target.window;
    let mut weights = Vec::with_capacity(w.rows * w.cols);
    let mut total = 0.0;
    let mut inside = 0.0;
    for i in 0..ff.rows {
        for j in 0..ff.cols {
            let v = ff.field[i * ff.cols + j].norm_sqr();
            total += v;
            if w.contains(i, j) {
                inside += v;
                weights.push(v);
            }
        }
    }
    if !(inside > 0.0) {
        return Err(Error::numeric(
            "hologram puts no energy inside the target window",
        ));
    }
    for v in &mut weights {
        *v /= inside;
    }
    Ok(BeamMap {
        nx: w.rows,
        ny: w.cols,
        weights,
        efficiency: inside / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_hologram(rows: usize, cols: usize, seed: u64) -> Hologram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases = (0..rows * cols)
            .map(|_| rng.gen_range(0.0..2.0 * PI))
            .collect();
        Hologram::phase_only(rows, cols, phases).unwrap()
    }

    #[test]
    fn zero_phase_concentrates_in_dc() {
        let h = Hologram::uniform(8, 8);
        let ff = far_field(&h, 8, 8).unwrap();
        let i = ff.intensity();
        let dc = 4 * 8 + 4;
        assert_relative_eq!(i[dc], 64.0 * 64.0, max_relative = 1e-12);
        let rest: f64 = i
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != dc)
            .map(|(_, v)| v)
            .sum();
        assert!(rest < 1e-18);
    }

    #[test]
    fn parseval_holds_for_random_phases() {
        let h = random_hologram(16, 8, 3);
        let ff = far_field(&h, 64, 32).unwrap();
        assert_relative_eq!(
            ff.array_factor_energy(),
            64.0 * 32.0 * h.energy(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn cost_zero_for_exact_match() {
        let i = vec![0.0, 2.0, 2.0, 0.0];
        let t = vec![0.0, 0.5, 0.5, 0.0];
        assert_eq!(cost_of_intensity(&i, &t).unwrap(), 0.0);
    }

    #[test]
    fn cost_of_empty_reconstruction() {
        let p = 16;
        let w = Window::centered(8, 8, 4, 4);
        let t = TargetPattern::uniform_window(8, 8, w, 0.3).unwrap();
        let cf = cost_of_intensity(&[0.0; 64], &t.energy).unwrap();
        assert_relative_eq!(cf, 1.0 / (p as f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn cost_rejects_grid_mismatch() {
        let h = Hologram::uniform(4, 4);
        let ff = far_field(&h, 8, 8).unwrap();
        let t = TargetPattern::default_cell(0.3);
        assert!(cost(&ff, &t).is_err());
    }

    #[test]
    fn incremental_cost_matches_full_evaluation() {
        let w = Window::centered(32, 32, 8, 8);
        let t = TargetPattern::uniform_window(32, 32, w, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let levels = (0..64).map(|_| rng.gen_range(0..PHASE_LEVELS)).collect();
        let mut st = AnnealState::new(&t, 8, 8, levels);
        for _ in 0..50 {
            let cell = rng.gen_range(0..64);
            let lvl = rng.gen_range(0..PHASE_LEVELS);
            let cf = st.propose(cell, lvl);
            st.commit(cell, lvl, cf);
            let h = Hologram::from_levels(8, 8, &st.levels);
            let direct = cost(&far_field(&h, 32, 32).unwrap(), &t).unwrap();
            assert_relative_eq!(cf, direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn beam_map_of_flat_top_is_uniform() {
        let m = BeamMap::uniform(4, 4);
        assert!(m.weights.iter().all(|&w| w == 1.0 / 16.0));
        assert_eq!(m.efficiency, 1.0);
    }

    #[test]
    fn beam_map_sums_to_one() {
        let h = random_hologram(16, 16, 5);
        let w = Window::centered(64, 64, 16, 16);
        let t = TargetPattern::uniform_window(64, 64, w, 0.3).unwrap();
        let m = beam_intensity_map(&h, &t).unwrap();
        assert_relative_eq!(m.weights.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
        assert!(m.efficiency > 0.0 && m.efficiency < 1.0);
    }

    #[test]
    fn schedule_validation() {
        let s = AnnealSchedule {
            cooling: 1.0,
            ..AnnealSchedule::default()
        };
        assert!(s.validate().is_err());
        let s = AnnealSchedule {
            iterations_per_stage: 0,
            ..AnnealSchedule::default()
        };
        assert!(s.validate().is_err());
        assert!(AnnealSchedule::greedy(10, 1).validate().is_ok());
    }

    #[test]
    fn non_power_of_two_grid_is_rejected() {
        let h = Hologram::uniform(4, 4);
        assert!(far_field(&h, 12, 16).is_err());
        assert!(far_field(&h, 2, 16).is_err());
    }

    #[test]
    fn hologram_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let h = random_hologram(4, 8, 11);
        let header = HologramHeader {
            m: 4,
            n: 8,
            r: 1.0,
            s: 1.0,
            seed: 11,
            cf: 0.5,
        };
        h.save(&path, &header).unwrap();
        let (back, hdr) = Hologram::load(&path).unwrap();
        assert_eq!(hdr, header);
        assert_eq!(back, h);
    }
}

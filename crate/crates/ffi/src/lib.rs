//! C interface to `holovlc`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! style calls and released with the matching `*_free`. Every fallible call
//! returns an [`HvStatus`]; the message of the most recent failure on the
//! calling thread is available through [`hv_last_error`]. Panics never cross
//! the boundary and are reported as [`HvStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use holovlc::channel::{BeamPattern, EmitterModel, ImpulseResponse, TraceSettings, Tracer};
use holovlc::metrics::{self, ChannelMetrics};
use holovlc::scene::{self, Receiver, Scene};
use holovlc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Numeric = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque scene handle.
pub struct HvScene(Scene);

/// Opaque impulse-response handle.
pub struct HvImpulseResponse(ImpulseResponse);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HvMetrics {
    pub mean_delay_s: f64,
    pub delay_spread_s: f64,
    pub bandwidth_hz: f64,
    /// 1 when no 3 dB crossing exists below Nyquist.
    pub bandwidth_saturated: i32,
    pub path_loss_db: f64,
    pub received_power_w: f64,
    pub data_rate_bps: f64,
}

impl From<ChannelMetrics> for HvMetrics {
    fn from(m: ChannelMetrics) -> Self {
        HvMetrics {
            mean_delay_s: m.mean_delay_s,
            delay_spread_s: m.delay_spread_s,
            bandwidth_hz: m.bandwidth_hz,
            bandwidth_saturated: m.bandwidth_saturated as i32,
            path_loss_db: m.path_loss_db,
            received_power_w: m.received_power_w,
            data_rate_bps: m.data_rate_bps,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: HvStatus, msg: impl Into<String>) -> HvStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> HvStatus {
    let status = match &e {
        Error::Config(_) | Error::Json { .. } | Error::Csv(_) => HvStatus::Config,
        Error::Domain(_) => HvStatus::Domain,
        Error::Numeric(_) => HvStatus::Numeric,
        Error::Io { .. } => HvStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> HvStatus) -> HvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(HvStatus::Panic, msg)
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(HvStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hv_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds the empty reference room.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn hv_scene_room_a(out: *mut *mut HvScene) -> HvStatus {
    non_null!(out);
    guard(|| {
        *out = Box::into_raw(Box::new(HvScene(scene::build_room_a())));
        HvStatus::Ok
    })
}

/// Builds the furnished room with its default layout.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn hv_scene_room_b(out: *mut *mut HvScene) -> HvStatus {
    non_null!(out);
    guard(
        || match scene::build_room_b(&scene::RoomBLayout::default()) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(HvScene(s)));
                HvStatus::Ok
            }
            Err(e) => from_error(e),
        },
    )
}

/// Loads a scene from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn hv_scene_load(path: *const c_char, out: *mut *mut HvScene) -> HvStatus {
    non_null!(path, out);
    guard(|| {
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            return fail(HvStatus::InvalidArgument, "path is not UTF-8");
        };
        match Scene::load(&PathBuf::from(p)) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(HvScene(s)));
                HvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `scene` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_scene_free(scene: *mut HvScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// # Safety
/// `scene` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hv_scene_luminaire_count(
    scene: *const HvScene,
    out: *mut usize,
) -> HvStatus {
    non_null!(scene, out);
    *out = (*scene).0.luminaires.len();
    HvStatus::Ok
}

/// Traces one luminaire-to-receiver link. The receiver sits at (x, y) on the
/// communication plane with default optics. A positive `beam_fraction` adds a
/// flat-top beam carrying that share of the luminaire power onto the 2 m cell
/// below it.
///
/// # Safety
/// `scene` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn hv_impulse_response(
    scene: *const HvScene,
    luminaire_id: u32,
    x: f64,
    y: f64,
    max_order: u8,
    dt: f64,
    beam_fraction: f64,
    out: *mut *mut HvImpulseResponse,
) -> HvStatus {
    non_null!(scene, out);
    guard(|| {
        let scene = &(*scene).0;
        let Some(l) = scene.luminaire(luminaire_id) else {
            return fail(
                HvStatus::InvalidArgument,
                format!("no luminaire with id {luminaire_id}"),
            );
        };
        let rx = Receiver::at(x, y);
        if !scene.contains(rx.position) {
            return fail(HvStatus::InvalidArgument, "receiver lies outside the room");
        }
        let model = if beam_fraction > 0.0 {
            match BeamPattern::uniform(beam_fraction, l, holovlc::cgh::DEFAULT_WINDOW) {
                Ok(b) => EmitterModel::Cgh(b),
                Err(e) => return from_error(e),
            }
        } else {
            EmitterModel::Lambertian
        };
        let settings = TraceSettings { max_order, dt };
        let res = Tracer::new(scene).and_then(|t| t.impulse_response(l, &model, &rx, &settings));
        match res {
            Ok(ir) => {
                *out = Box::into_raw(Box::new(HvImpulseResponse(ir)));
                HvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `ir` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hv_ir_free(ir: *mut HvImpulseResponse) {
    if !ir.is_null() {
        drop(Box::from_raw(ir));
    }
}

/// Number of bins and bin width in seconds.
///
/// # Safety
/// `ir` must be a live handle; `len` and `dt` writable.
#[no_mangle]
pub unsafe extern "C" fn hv_ir_shape(
    ir: *const HvImpulseResponse,
    len: *mut usize,
    dt: *mut f64,
) -> HvStatus {
    non_null!(ir, len, dt);
    *len = (*ir).0.bins.len();
    *dt = (*ir).0.dt;
    HvStatus::Ok
}

/// Copies up to `len` bins (watts) into `buf`.
///
/// # Safety
/// `ir` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hv_ir_bins(
    ir: *const HvImpulseResponse,
    buf: *mut f64,
    len: usize,
) -> HvStatus {
    non_null!(ir, buf);
    let bins = &(*ir).0.bins;
    let n = bins.len().min(len);
    ptr::copy_nonoverlapping(bins.as_ptr(), buf, n);
    HvStatus::Ok
}

/// # Safety
/// `ir` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hv_ir_received_power(
    ir: *const HvImpulseResponse,
    out: *mut f64,
) -> HvStatus {
    non_null!(ir, out);
    *out = (*ir).0.received_power();
    HvStatus::Ok
}

/// Channel figures for a response, with `transmitted_w` as the path-loss
/// reference.
///
/// # Safety
/// `ir` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hv_ir_metrics(
    ir: *const HvImpulseResponse,
    transmitted_w: f64,
    out: *mut HvMetrics,
) -> HvStatus {
    non_null!(ir, out);
    guard(|| match ChannelMetrics::from_ir(&(*ir).0, transmitted_w) {
        Ok(m) => {
            *out = m.into();
            HvStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// OOK bit rate supported by a bandwidth, bit/s.
#[no_mangle]
pub extern "C" fn hv_ook_data_rate(bandwidth_hz: f64) -> f64 {
    metrics::ook_data_rate(bandwidth_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_a_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, HvStatus::Panic);
        let mut buf = [0 as c_char; 16];
        let n = unsafe { hv_last_error(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, 4);
        assert_eq!(
            buf[..4].iter().map(|&c| c as u8).collect::<Vec<_>>(),
            b"boom"
        );
    }
}

//! C ABI over `tactile-core`.
//!
//! Every function returns a [`TactileStatus`]; results go through out
//! pointers. Handles are opaque and must be released with the matching
//! `_free` function. After a non-`Ok` status, `tactile_last_error` returns
//! a description for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tactile_core::channel::{ChannelConfig, ChannelError, ChannelState, DelayProfile, Variance};
use tactile_core::kinematics::{
    forward_kinematics, inverse_kinematics, Backend, CartesianPosition, DeviceGeometry, JointAngles,
};
use tactile_core::numerics::{float_to_fixed, QFormat};
use tactile_core::pipeline::{hardware_time_limit, run_pipeline, speedup_report, SimulationTrace};
use tactile_core::scenario::Scenario;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TactileStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfOrderSample = 3,
    Unreachable = 4,
    OutOfRange = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TactileBackend {
    Oracle = 0,
    /// binary32 datapath with the default CORDIC configuration.
    Hybrid = 1,
}

/// Signals stored per sample in a trace.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TactileSignal {
    B = 0,
    C = 1,
    V = 2,
    ThetaHsd = 3,
    ThetaSd = 4,
    L = 5,
    SObj = 6,
    H = 7,
    Q = 8,
    P = 9,
}

/// Channel parameters. `delay_min == delay_max` gives a constant delay,
/// otherwise a bounded random walk.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TactileChannelConfig {
    pub sigma2: [f64; 3],
    pub delay_min: u32,
    pub delay_max: u32,
    pub seed: u64,
    /// Non-zero to use `initial_hold` instead of the first input.
    pub has_initial_hold: u8,
    pub initial_hold: [f64; 3],
}

/// Opaque channel handle.
pub struct TactileChannel {
    state: ChannelState,
}

/// Opaque simulation trace handle.
pub struct TactileTrace {
    trace: SimulationTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: TactileStatus, msg: impl Into<String>) -> TactileStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> TactileStatus) -> TactileStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(TactileStatus::Internal, "internal panic"),
    }
}

fn backend(b: TactileBackend) -> Backend {
    match b {
        TactileBackend::Oracle => Backend::Oracle,
        TactileBackend::Hybrid => Backend::hybrid_default(),
    }
}

/// Copy the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tactile_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Quantize `x` to a signed fixed-point word of `total_bits` bits with
/// `frac_bits` fractional bits (round to nearest even, saturating).
///
/// # Safety
/// `out_raw` must be null or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tactile_float_to_fixed(
    x: f64,
    total_bits: u8,
    frac_bits: u8,
    out_raw: *mut i64,
) -> TactileStatus {
    guard(|| {
        if out_raw.is_null() {
            return fail(TactileStatus::NullPointer, "out_raw is null");
        }
        let fmt = match QFormat::new(total_bits, frac_bits) {
            Ok(f) => f,
            Err(e) => return fail(TactileStatus::InvalidArgument, e.to_string()),
        };
        *out_raw = float_to_fixed(x, fmt).raw();
        TactileStatus::Ok
    })
}

/// Tool position for joint angles `q` on the default device geometry.
///
/// # Safety
/// `q` must point to 3 readable doubles and `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tactile_forward_kinematics(
    q: *const f64,
    b: TactileBackend,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        if q.is_null() || out.is_null() {
            return fail(TactileStatus::NullPointer, "null argument");
        }
        let q = JointAngles::from_array(*(q as *const [f64; 3]));
        let p = forward_kinematics(q, &DeviceGeometry::default(), &backend(b));
        *(out as *mut [f64; 3]) = p.to_array();
        TactileStatus::Ok
    })
}

/// Joint angles placing the tool at `p` on the default device geometry.
///
/// # Safety
/// `p` must point to 3 readable doubles and `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tactile_inverse_kinematics(
    p: *const f64,
    b: TactileBackend,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return fail(TactileStatus::NullPointer, "null argument");
        }
        let p = CartesianPosition::from_array(*(p as *const [f64; 3]));
        match inverse_kinematics(p, &DeviceGeometry::default(), &backend(b)) {
            Ok(q) => {
                *(out as *mut [f64; 3]) = q.to_array();
                TactileStatus::Ok
            }
            Err(e) => fail(TactileStatus::Unreachable, e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tactile_channel_new(
    cfg: *const TactileChannelConfig,
    out: *mut *mut TactileChannel,
) -> TactileStatus {
    guard(|| {
        if cfg.is_null() || out.is_null() {
            return fail(TactileStatus::NullPointer, "null argument");
        }
        let c = *cfg;
        let delay = if c.delay_min == c.delay_max {
            DelayProfile::Constant {
                samples: c.delay_min as usize,
            }
        } else {
            DelayProfile::RandomWalk {
                min: c.delay_min as usize,
                max: c.delay_max as usize,
            }
        };
        let config = ChannelConfig {
            sigma2: Variance::PerComponent(c.sigma2),
            delay,
            seed: c.seed,
            initial_hold: (c.has_initial_hold != 0).then_some(c.initial_hold),
        };
        match ChannelState::new(config) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(TactileChannel { state }));
                TactileStatus::Ok
            }
            Err(e) => fail(TactileStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Feed sample `n` (0, 1, 2, ...) and read the channel output.
///
/// # Safety
/// `ch` must come from `tactile_channel_new`; `input`/`out` must hold 3
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn tactile_channel_step(
    ch: *mut TactileChannel,
    input: *const f64,
    n: u64,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        if ch.is_null() || input.is_null() || out.is_null() {
            return fail(TactileStatus::NullPointer, "null argument");
        }
        match (*ch).state.step(*(input as *const [f64; 3]), n) {
            Ok(v) => {
                *(out as *mut [f64; 3]) = v;
                TactileStatus::Ok
            }
            Err(e @ ChannelError::OutOfOrderSample { .. }) => {
                fail(TactileStatus::OutOfOrderSample, e.to_string())
            }
            Err(e) => fail(TactileStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `ch` must be null or come from `tactile_channel_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn tactile_channel_free(ch: *mut TactileChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Run the loop described by a TOML scenario on one backend. Output paths
/// in the scenario are ignored; nothing is written to disk.
///
/// # Safety
/// `scenario_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tactile_simulation_run(
    scenario_toml: *const c_char,
    b: TactileBackend,
    out: *mut *mut TactileTrace,
) -> TactileStatus {
    guard(|| {
        if scenario_toml.is_null() || out.is_null() {
            return fail(TactileStatus::NullPointer, "null argument");
        }
        let text = match CStr::from_ptr(scenario_toml).to_str() {
            Ok(t) => t,
            Err(_) => return fail(TactileStatus::InvalidArgument, "scenario is not UTF-8"),
        };
        let loaded = match Scenario::from_toml(text).and_then(|s| s.resolve(Path::new("."))) {
            Ok(l) => l,
            Err(e) => return fail(TactileStatus::InvalidArgument, e.to_string()),
        };
        let be = match b {
            TactileBackend::Oracle => Backend::Oracle,
            TactileBackend::Hybrid => Backend::Hybrid(loaded.cordic.clone()),
        };
        match run_pipeline(&loaded.pipeline, &be) {
            Ok(trace) => {
                *out = Box::into_raw(Box::new(TactileTrace { trace }));
                TactileStatus::Ok
            }
            Err(e) => fail(TactileStatus::Unreachable, e.to_string()),
        }
    })
}

/// # Safety
/// `t` must come from `tactile_simulation_run`; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tactile_trace_len(
    t: *const TactileTrace,
    out_len: *mut usize,
) -> TactileStatus {
    guard(|| {
        if t.is_null() || out_len.is_null() {
            return fail(TactileStatus::NullPointer, "null argument");
        }
        *out_len = (*t).trace.len();
        TactileStatus::Ok
    })
}

/// Three components of `signal` at sample `n`.
///
/// # Safety
/// `t` must come from `tactile_simulation_run`; `out` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn tactile_trace_get(
    t: *const TactileTrace,
    n: usize,
    signal: TactileSignal,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        if t.is_null() || out.is_null() {
            return fail(TactileStatus::NullPointer, "null argument");
        }
        let trace = &(*t).trace;
        let Some(r) = trace.records.get(n) else {
            return fail(
                TactileStatus::OutOfRange,
                format!("sample {n} out of range"),
            );
        };
        *(out as *mut [f64; 3]) = r.signals()[signal as usize];
        TactileStatus::Ok
    })
}

/// # Safety
/// `t` must be null or come from `tactile_simulation_run`, freed once.
#[no_mangle]
pub unsafe extern "C" fn tactile_trace_free(t: *mut TactileTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Per-device compute time allowed for a round-trip budget, seconds.
#[no_mangle]
pub extern "C" fn tactile_hardware_time_limit(t_latency: f64) -> f64 {
    hardware_time_limit(t_latency)
}

/// Whole-number speedup of hardware taking `t_hardware` seconds against
/// the round-trip budget `t_latency`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tactile_speedup(
    t_hardware: f64,
    t_latency: f64,
    out: *mut u64,
) -> TactileStatus {
    guard(|| {
        if out.is_null() {
            return fail(TactileStatus::NullPointer, "out is null");
        }
        match speedup_report(t_hardware, &[t_latency]) {
            Ok(rows) => {
                *out = rows[0].speedup;
                TactileStatus::Ok
            }
            Err(e) => fail(TactileStatus::InvalidArgument, e.to_string()),
        }
    })
}

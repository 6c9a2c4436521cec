//! C ABI for the `timebin` library.
//!
//! Objects cross the boundary as opaque handles created by a `*_new` (or
//! producing) function and released with the matching `*_free`. Every
//! fallible function returns a [`TbStatus`]; on failure a description is
//! available from [`tb_last_error`] on the same thread. Results are written
//! through caller-provided out-pointers, which are left untouched on error.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use timebin::analysis::{self, FitResult, FringePoint};
use timebin::analyzers::{self, Arm, LoopConfig, TwoWayConfig};
use timebin::state::{BinPair, DEFAULT_BIN_SPACING_NS};
use timebin::{AmplitudeSpec, Complex64, Error, PhaseSpec, PulseTrain, TwoPhotonState};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    ZeroNorm = 4,
    NoSignal = 5,
    FitFailed = 6,
    VisibilityTooHigh = 7,
    IndexOutOfRange = 8,
    Panic = 99,
}

/// Opaque pulse train.
pub struct TbPulseTrain(PulseTrain);

/// Opaque two-photon amplitude map.
pub struct TbState {
    state: TwoPhotonState,
    entries: Vec<(BinPair, Complex64)>,
}

impl TbState {
    fn new(state: TwoPhotonState) -> Self {
        let entries = state.iter().collect();
        TbState { state, entries }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TbDimensionBound {
    pub bound: f64,
    pub claimed_dimension: u64,
    pub lower: f64,
    /// Meaningful only when `upper_unbounded` is 0.
    pub upper: f64,
    pub upper_unbounded: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TbFitResult {
    pub visibility: f64,
    pub visibility_err: f64,
    pub phase_offset: f64,
    pub baseline: f64,
    pub baseline_err: f64,
    pub residual_rms: f64,
}

impl From<FitResult> for TbFitResult {
    fn from(f: FitResult) -> Self {
        TbFitResult {
            visibility: f.visibility,
            visibility_err: f.visibility_err,
            phase_offset: f.phase_offset,
            baseline: f.baseline,
            baseline_err: f.baseline_err,
            residual_rms: f.residual_rms,
        }
    }
}

impl From<TbFitResult> for FitResult {
    fn from(f: TbFitResult) -> Self {
        FitResult {
            visibility: f.visibility,
            visibility_err: f.visibility_err,
            phase_offset: f.phase_offset,
            baseline: f.baseline,
            baseline_err: f.baseline_err,
            residual_rms: f.residual_rms,
            frequency: 2.0,
            converged: true,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TbStatus {
    match err {
        Error::ZeroDimension | Error::InvalidParameter { .. } | Error::NoInteriorBins(_) => TbStatus::InvalidArgument,
        Error::LengthMismatch { .. } => TbStatus::LengthMismatch,
        Error::ZeroNorm => TbStatus::ZeroNorm,
        Error::VisibilityTooHigh(_) => TbStatus::VisibilityTooHigh,
        Error::Fit(_) => TbStatus::FitFailed,
        Error::NoSignal(_) => TbStatus::NoSignal,
    }
}

struct Failure(TbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TbStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TbStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a pulse train of `dimension` pulses. Pass `n_amplitudes = 0` for
/// uniform amplitudes and `n_phases = 0` for constant phases; otherwise the
/// array length must equal `dimension`. A nonpositive `bin_spacing_ns`
/// selects the default of 13 ns.
///
/// # Safety
/// `amplitudes` and `phases` must point to at least `n_amplitudes` and
/// `n_phases` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_pulse_train_new(
    dimension: usize,
    amplitudes: *const f64,
    n_amplitudes: usize,
    phases: *const f64,
    n_phases: usize,
    bin_spacing_ns: f64,
    out: *mut *mut TbPulseTrain,
) -> TbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let amps = unsafe { slice(amplitudes, n_amplitudes, "amplitudes") }?;
        let phs = unsafe { slice(phases, n_phases, "phases") }?;
        let amp_spec = if amps.is_empty() { AmplitudeSpec::Uniform } else { AmplitudeSpec::Explicit(amps.to_vec()) };
        let phase_spec = if phs.is_empty() { PhaseSpec::Constant } else { PhaseSpec::Explicit(phs.to_vec()) };
        let dt = if bin_spacing_ns > 0.0 { bin_spacing_ns } else { DEFAULT_BIN_SPACING_NS };
        let train = timebin::make_pulse_train(dimension, amp_spec, phase_spec, dt)?;
        *out = Box::into_raw(Box::new(TbPulseTrain(train)));
        Ok(())
    })
}

/// # Safety
/// `train` must be null or a handle from `tb_pulse_train_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_pulse_train_free(train: *mut TbPulseTrain) {
    if !train.is_null() {
        drop(unsafe { Box::from_raw(train) });
    }
}

/// # Safety
/// `train` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_pulse_train_dimension(train: *const TbPulseTrain, out: *mut usize) -> TbStatus {
    guard(|| {
        let t = unsafe { train.as_ref() }.ok_or_else(|| null("train"))?;
        *unsafe { out_ref(out, "out") }? = t.0.dimension();
        Ok(())
    })
}

/// Writes 1 if the supplied amplitudes had to be rescaled to unit norm.
///
/// # Safety
/// `train` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_pulse_train_was_renormalized(train: *const TbPulseTrain, out: *mut u8) -> TbStatus {
    guard(|| {
        let t = unsafe { train.as_ref() }.ok_or_else(|| null("train"))?;
        *unsafe { out_ref(out, "out") }? = u8::from(t.0.was_renormalized());
        Ok(())
    })
}

/// Pair state `sum_j c_j e^{i phi_j} |j, j>` of the train.
///
/// # Safety
/// `train` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_pdc_state(train: *const TbPulseTrain, out: *mut *mut TbState) -> TbStatus {
    guard(|| {
        let t = unsafe { train.as_ref() }.ok_or_else(|| null("train"))?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = Box::into_raw(Box::new(TbState::new(timebin::pdc_state(&t.0))));
        Ok(())
    })
}

/// Sends both photons of `state` through the monitored port of a two-way
/// analyzer with long-arm phase `delta` and per-path amplitude
/// `per_path_amplitude` (0.5 for a balanced analyzer).
///
/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_apply_two_way(
    state: *const TbState,
    delta: f64,
    per_path_amplitude: f64,
    out: *mut *mut TbState,
) -> TbStatus {
    guard(|| {
        let s = unsafe { state.as_ref() }.ok_or_else(|| null("state"))?;
        let out = unsafe { out_ref(out, "out") }?;
        let cfg = TwoWayConfig { delta, per_path_amplitude, discard_edges: false };
        cfg.validate()?;
        *out = Box::into_raw(Box::new(TbState::new(analyzers::apply_two_way(&s.state, &cfg))));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_state_free(state: *mut TbState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Number of stored bin pairs.
///
/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_state_len(state: *const TbState, out: *mut usize) -> TbStatus {
    guard(|| {
        let s = unsafe { state.as_ref() }.ok_or_else(|| null("state"))?;
        *unsafe { out_ref(out, "out") }? = s.entries.len();
        Ok(())
    })
}

/// Entry `index` in ascending `(bin_a, bin_b)` order.
///
/// # Safety
/// `state` must be a live handle; all out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_state_entry(
    state: *const TbState,
    index: usize,
    bin_a: *mut usize,
    bin_b: *mut usize,
    re: *mut f64,
    im: *mut f64,
) -> TbStatus {
    guard(|| {
        let s = unsafe { state.as_ref() }.ok_or_else(|| null("state"))?;
        let (ba, bb, r, i) = unsafe { (out_ref(bin_a, "bin_a")?, out_ref(bin_b, "bin_b")?, out_ref(re, "re")?, out_ref(im, "im")?) };
        let &((a, b), amp) = s.entries.get(index).ok_or_else(|| {
            Failure(TbStatus::IndexOutOfRange, format!("index {index} out of range for {} entries", s.entries.len()))
        })?;
        (*ba, *bb, *r, *i) = (a, b, amp.re, amp.im);
        Ok(())
    })
}

/// Amplitude of `|bin_a, bin_b>` (1-based bins); zero when absent.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tb_state_amplitude(
    state: *const TbState,
    bin_a: usize,
    bin_b: usize,
    re: *mut f64,
    im: *mut f64,
) -> TbStatus {
    guard(|| {
        let s = unsafe { state.as_ref() }.ok_or_else(|| null("state"))?;
        let (r, i) = unsafe { (out_ref(re, "re")?, out_ref(im, "im")?) };
        let amp = s.state.amplitude((bin_a, bin_b));
        (*r, *i) = (amp.re, amp.im);
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_total_probability(state: *const TbState, out: *mut f64) -> TbStatus {
    guard(|| {
        let s = unsafe { state.as_ref() }.ok_or_else(|| null("state"))?;
        *unsafe { out_ref(out, "out") }? = timebin::total_probability(&s.state);
        Ok(())
    })
}

/// `tau = 0` coincidence probability of the balanced two-way analyzer.
///
/// # Safety
/// `train` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_coincidence_probability_two_way(
    train: *const TbPulseTrain,
    delta: f64,
    discard_edges: u8,
    out: *mut f64,
) -> TbStatus {
    guard(|| {
        let t = unsafe { train.as_ref() }.ok_or_else(|| null("train"))?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = analyzers::coincidence_probability_two_way(&t.0, delta, discard_edges != 0)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_max_visibility(dimension: usize, out: *mut f64) -> TbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = analysis::max_visibility(dimension)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_dimension_bound(visibility: f64, visibility_err: f64, out: *mut TbDimensionBound) -> TbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let b = analysis::dimension_bound(visibility, visibility_err)?;
        *out = TbDimensionBound {
            bound: b.bound,
            claimed_dimension: b.claimed_dimension,
            lower: b.lower,
            upper: b.upper.unwrap_or(f64::INFINITY),
            upper_unbounded: u8::from(b.upper.is_none()),
        };
        Ok(())
    })
}

fn loop_config(t2: f64, phi_sum: f64, max_loops: usize) -> Result<LoopConfig, Failure> {
    let cfg = LoopConfig { max_loops, ..LoopConfig::new(t2, phi_sum, 0.0) };
    cfg.validate()?;
    Ok(cfg)
}

/// Amplitude for one photon to leave the fiber loop after `n` round trips,
/// with round-trip phase `phase`.
///
/// # Safety
/// `re` and `im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tb_loop_exit_amplitude(n: usize, t2: f64, phase: f64, re: *mut f64, im: *mut f64) -> TbStatus {
    guard(|| {
        let (r, i) = unsafe { (out_ref(re, "re")?, out_ref(im, "im")?) };
        let cfg = loop_config(t2, phase, analyzers::fiber_loop::DEFAULT_MAX_LOOPS)?;
        let amp = analyzers::loop_exit_amplitude(n, &cfg, Arm::A);
        (*r, *i) = (amp.re, amp.im);
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_fp_coincidence_closed(t2: f64, phi_sum: f64, out: *mut f64) -> TbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = analyzers::fp_coincidence_closed(&loop_config(t2, phi_sum, analyzers::fiber_loop::DEFAULT_MAX_LOOPS)?);
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_fp_coincidence_series(t2: f64, phi_sum: f64, max_loops: usize, out: *mut f64) -> TbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = analyzers::fp_coincidence_series(&loop_config(t2, phi_sum, max_loops)?);
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_fp_visibility(t2: f64, grid_points: usize, out: *mut f64) -> TbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = analyzers::fp_visibility(t2, grid_points)?;
        Ok(())
    })
}

/// Fits `B (1 + V cos(2 delta + phase))` to `n` points. `count_errs` may be
/// null, in which case Poisson errors `sqrt(max(count, 1))` are used.
///
/// # Safety
/// `deltas` and `counts` (and `count_errs` if non-null) must point to `n`
/// doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_fit_fringe(
    deltas: *const f64,
    counts: *const f64,
    count_errs: *const f64,
    n: usize,
    out: *mut TbFitResult,
) -> TbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let d = unsafe { slice(deltas, n, "deltas") }?;
        let c = unsafe { slice(counts, n, "counts") }?;
        let points: Vec<FringePoint> = if count_errs.is_null() {
            d.iter().zip(c).map(|(&d, &c)| FringePoint::poisson(d, c)).collect()
        } else {
            let e = unsafe { slice(count_errs, n, "count_errs") }?;
            d.iter().zip(c).zip(e).map(|((&delta, &count), &count_err)| FringePoint { delta, count, count_err }).collect()
        };
        *out = analysis::fit_fringe(&points)?.into();
        Ok(())
    })
}

/// Removes a flat accidental level (counts per point) from a fit.
///
/// # Safety
/// `raw` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tb_net_visibility(raw: *const TbFitResult, accidental_rate: f64, out: *mut TbFitResult) -> TbStatus {
    guard(|| {
        let raw = unsafe { raw.as_ref() }.ok_or_else(|| null("raw"))?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = analysis::net_visibility(&(*raw).into(), accidental_rate)?.into();
        Ok(())
    })
}

//! C ABI over `gazekit`.
//!
//! Grids and grid stacks cross the boundary as opaque handles created by
//! `gk_*_new`/`gk_fgrid_read` and released with the matching `gk_*_free`.
//! Every fallible call returns a [`GkStatus`]; on failure
//! [`gk_last_error_message`] describes the error for the calling thread.
//! Pixel coordinates are `x` = column, `y` = row.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gazekit::attend::{sample_patch, soft_attention, wta_select, AffineParams, AttendError, DotScorer, PoolingMode};
use gazekit::grid::{FloatGridStack, Grid, GridError, Pixel, SaliencyMap};
use gazekit::ingest::{read_fgrid, write_fgrid, IngestError};
use gazekit::metrics::{auc_judd, nss, shuffled_auc, sim, spearman, MetricError};
use gazekit::salmap::{fixations_to_salmap, SalmapError};
use gazekit::temporal::{dtw_distance, AttentionSequence, PathNormalization, TemporalError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EmptyInput = 4,
    ZeroVariance = 5,
    NotNormalized = 6,
    OutOfBounds = 7,
    Format = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A 2-D grid of doubles.
pub struct GkGrid(Grid);

/// `count` grids of one size.
pub struct GkStack(FloatGridStack);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkNormalization {
    AlignedPairs = 0,
    Steps = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkPooling {
    MeanScaled = 0,
    Convex = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (GkStatus, String);

fn fail(status: GkStatus, msg: impl ToString) -> Failure {
    (status, msg.to_string())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GkStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GkStatus::Panic
        }
    }
}

fn metric(e: MetricError) -> Failure {
    let status = match e {
        MetricError::ZeroVariance => GkStatus::ZeroVariance,
        MetricError::EmptyFixations | MetricError::EmptyPool | MetricError::AllPixelsFixated => GkStatus::EmptyInput,
        MetricError::DimensionMismatch | MetricError::LengthMismatch(..) => GkStatus::DimensionMismatch,
        MetricError::NotNormalized(_) => GkStatus::NotNormalized,
        MetricError::OutOfBounds(_) => GkStatus::OutOfBounds,
        MetricError::NoSplits | MetricError::TooFew(_) | MetricError::NonFinite => GkStatus::InvalidArgument,
    };
    fail(status, e)
}

fn grid_err(e: GridError) -> Failure {
    let status = match e {
        GridError::EmptyGrid => GkStatus::EmptyInput,
        GridError::LengthMismatch { .. } => GkStatus::DimensionMismatch,
        GridError::InvalidValue(_) | GridError::ZeroMass => GkStatus::InvalidArgument,
    };
    fail(status, e)
}

fn salmap_err(e: SalmapError) -> Failure {
    let status = match e {
        SalmapError::EmptyFixations | SalmapError::EmptyList => GkStatus::EmptyInput,
        SalmapError::OutOfBounds(..) => GkStatus::OutOfBounds,
        SalmapError::DimensionMismatch => GkStatus::DimensionMismatch,
        SalmapError::InvalidSigma(_) | SalmapError::InvalidWeights | SalmapError::Grid(_) => GkStatus::InvalidArgument,
    };
    fail(status, e)
}

fn temporal_err(e: TemporalError) -> Failure {
    match e {
        TemporalError::Metric(m) => metric(m),
        TemporalError::Salmap(s) => salmap_err(s),
        TemporalError::DimensionMismatch => fail(GkStatus::DimensionMismatch, e),
        TemporalError::EmptySequence | TemporalError::EmptyFixations => fail(GkStatus::EmptyInput, e),
        TemporalError::InvalidBin(_) | TemporalError::Frame(..) => fail(GkStatus::InvalidArgument, e),
    }
}

fn attend_err(e: AttendError) -> Failure {
    let status = match e {
        AttendError::NoWinner | AttendError::EmptyFeatureSet => GkStatus::EmptyInput,
        AttendError::OutOfBounds(_) => GkStatus::OutOfBounds,
        AttendError::InconsistentLength { .. } => GkStatus::DimensionMismatch,
        AttendError::InvalidParameter(_) | AttendError::NonFiniteScore(_) => GkStatus::InvalidArgument,
    };
    fail(status, e)
}

fn ingest_err(e: IngestError) -> Failure {
    fail(GkStatus::Format, e)
}

fn null() -> Failure {
    fail(GkStatus::NullPointer, "null pointer argument")
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

unsafe fn points(xs: *const usize, ys: *const usize, n: usize) -> Result<Vec<Pixel>, Failure> {
    let (xs, ys) = (slice(xs, n)?, slice(ys, n)?);
    Ok(xs.iter().zip(ys).map(|(&x, &y)| Pixel::new(x, y)).collect())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a `width × height` grid from `width * height` row-major values.
///
/// # Safety
/// `values` must point to `width * height` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_grid_new(
    width: usize,
    height: usize,
    values: *const f64,
    out: *mut *mut GkGrid,
) -> GkStatus {
    guard(|| {
        let n = width.checked_mul(height).ok_or_else(|| fail(GkStatus::InvalidArgument, "size overflow"))?;
        let v = slice(values, n)?.to_vec();
        let g = Grid::new(width, height, v).map_err(grid_err)?;
        put(out, Box::into_raw(Box::new(GkGrid(g))))
    })
}

/// # Safety
/// `grid` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gk_grid_free(grid: *mut GkGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gk_grid_width(grid: *const GkGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.width())
}

/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gk_grid_height(grid: *const GkGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.height())
}

/// Copies the grid's row-major values into `out` (`len` doubles).
///
/// # Safety
/// `grid` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gk_grid_copy_values(grid: *const GkGrid, out: *mut f64, len: usize) -> GkStatus {
    guard(|| {
        let g = &borrow(grid)?.0;
        if len < g.len() {
            return Err(fail(GkStatus::BufferTooSmall, format!("need {} values", g.len())));
        }
        slice_mut(out, g.len())?.copy_from_slice(g.values());
        Ok(())
    })
}

/// Gaussian saliency map (unit sum) of `n` fixations.
///
/// # Safety
/// `xs` and `ys` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_salmap_from_fixations(
    xs: *const usize,
    ys: *const usize,
    n: usize,
    width: usize,
    height: usize,
    sigma: f64,
    out: *mut *mut GkGrid,
) -> GkStatus {
    guard(|| {
        let pts = points(xs, ys, n)?;
        let map = fixations_to_salmap(&pts, width, height, sigma).map_err(salmap_err)?;
        put(out, Box::into_raw(Box::new(GkGrid(map.into_grid()))))
    })
}

/// # Safety
/// `map` must be a live handle, `xs`/`ys` hold `n` entries, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_nss(
    map: *const GkGrid,
    xs: *const usize,
    ys: *const usize,
    n: usize,
    out: *mut f64,
) -> GkStatus {
    guard(|| {
        let v = nss(&borrow(map)?.0, &points(xs, ys, n)?).map_err(metric)?;
        put(out, v)
    })
}

/// # Safety
/// As [`gk_nss`].
#[no_mangle]
pub unsafe extern "C" fn gk_auc_judd(
    map: *const GkGrid,
    xs: *const usize,
    ys: *const usize,
    n: usize,
    out: *mut f64,
) -> GkStatus {
    guard(|| {
        let v = auc_judd(&borrow(map)?.0, &points(xs, ys, n)?).map_err(metric)?;
        put(out, v)
    })
}

/// Shuffled AUC with negatives drawn from the pool; deterministic in `seed`.
///
/// # Safety
/// As [`gk_nss`]; `pool_xs`/`pool_ys` hold `pool_n` entries.
#[no_mangle]
pub unsafe extern "C" fn gk_shuffled_auc(
    map: *const GkGrid,
    xs: *const usize,
    ys: *const usize,
    n: usize,
    pool_xs: *const usize,
    pool_ys: *const usize,
    pool_n: usize,
    n_splits: usize,
    seed: u64,
    out: *mut f64,
) -> GkStatus {
    guard(|| {
        let fix = points(xs, ys, n)?;
        let pool = points(pool_xs, pool_ys, pool_n)?;
        let v = shuffled_auc(&borrow(map)?.0, &fix, &pool, n_splits, seed).map_err(metric)?;
        put(out, v)
    })
}

/// SIM of two unit-sum grids.
///
/// # Safety
/// Both handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_sim(a: *const GkGrid, b: *const GkGrid, out: *mut f64) -> GkStatus {
    guard(|| {
        let v = sim(&borrow(a)?.0, &borrow(b)?.0).map_err(metric)?;
        put(out, v)
    })
}

/// Spearman rank correlation of two length-`n` samples.
///
/// # Safety
/// `xs` and `ys` must hold `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_spearman(xs: *const f64, ys: *const f64, n: usize, out: *mut f64) -> GkStatus {
    guard(|| {
        let v = spearman(slice(xs, n)?, slice(ys, n)?).map_err(metric)?;
        put(out, v)
    })
}

/// Winner-take-all selection. Writes up to `capacity` locations and the
/// number selected to `out_count`.
///
/// # Safety
/// `map` must be live; `out_xs`/`out_ys` hold `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn gk_wta(
    map: *const GkGrid,
    n: usize,
    suppress_radius: f64,
    floor: f64,
    out_xs: *mut usize,
    out_ys: *mut usize,
    capacity: usize,
    out_count: *mut usize,
) -> GkStatus {
    guard(|| {
        let set = wta_select(&borrow(map)?.0, n, suppress_radius, floor).map_err(attend_err)?;
        let locs = set.locations();
        if capacity < locs.len() {
            return Err(fail(GkStatus::BufferTooSmall, format!("need room for {} locations", locs.len())));
        }
        let (xs, ys) = (slice_mut(out_xs, locs.len())?, slice_mut(out_ys, locs.len())?);
        for (i, p) in locs.iter().enumerate() {
            xs[i] = p.x;
            ys[i] = p.y;
        }
        put(out_count, locs.len())
    })
}

/// Creates a stack of `count` grids of `width × height` from grid-major,
/// row-major data.
///
/// # Safety
/// `data` must hold `count * width * height` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_stack_new(
    count: usize,
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut GkStack,
) -> GkStatus {
    guard(|| {
        let n = count
            .checked_mul(width)
            .and_then(|v| v.checked_mul(height))
            .ok_or_else(|| fail(GkStatus::InvalidArgument, "size overflow"))?;
        let s = FloatGridStack::new(count, width, height, slice(data, n)?.to_vec()).map_err(grid_err)?;
        put(out, Box::into_raw(Box::new(GkStack(s))))
    })
}

/// # Safety
/// `stack` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gk_stack_free(stack: *mut GkStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

/// # Safety
/// `stack` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gk_stack_count(stack: *const GkStack) -> usize {
    stack.as_ref().map_or(0, |s| s.0.count())
}

/// # Safety
/// `stack` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gk_stack_width(stack: *const GkStack) -> usize {
    stack.as_ref().map_or(0, |s| s.0.width())
}

/// # Safety
/// `stack` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gk_stack_height(stack: *const GkStack) -> usize {
    stack.as_ref().map_or(0, |s| s.0.height())
}

/// Copies all values (grid-major, row-major) into `out`.
///
/// # Safety
/// `stack` must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gk_stack_copy_data(stack: *const GkStack, out: *mut f64, len: usize) -> GkStatus {
    guard(|| {
        let d = borrow(stack)?.0.data();
        if len < d.len() {
            return Err(fail(GkStatus::BufferTooSmall, format!("need {} values", d.len())));
        }
        slice_mut(out, d.len())?.copy_from_slice(d);
        Ok(())
    })
}

/// Parses FGRID bytes into a stack.
///
/// # Safety
/// `bytes` must hold `len` bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_fgrid_read(bytes: *const u8, len: usize, out: *mut *mut GkStack) -> GkStatus {
    guard(|| {
        let s = read_fgrid(slice(bytes, len)?).map_err(ingest_err)?;
        put(out, Box::into_raw(Box::new(GkStack(s))))
    })
}

/// Serializes a stack as FGRID. Release the buffer with [`gk_bytes_free`].
///
/// # Safety
/// `stack` must be live; `out_bytes` and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_fgrid_write(
    stack: *const GkStack,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> GkStatus {
    guard(|| {
        if out_bytes.is_null() || out_len.is_null() {
            return Err(null());
        }
        let bytes = write_fgrid(&borrow(stack)?.0).into_boxed_slice();
        let len = bytes.len();
        put(out_len, len)?;
        put(out_bytes, Box::into_raw(bytes).cast::<u8>())
    })
}

/// # Safety
/// `bytes`/`len` must come from [`gk_fgrid_write`]. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gk_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(bytes, len)));
    }
}

/// DTW distance between two attention sequences, each grid one frame
/// (renormalized to unit sum). Optionally reports the path length.
///
/// # Safety
/// Both handles must be live; `out_distance` writable; `out_path_len` may be null.
#[no_mangle]
pub unsafe extern "C" fn gk_dtw(
    a: *const GkStack,
    b: *const GkStack,
    normalization: GkNormalization,
    out_distance: *mut f64,
    out_path_len: *mut usize,
) -> GkStatus {
    guard(|| {
        let sa = AttentionSequence::from_stack(&borrow(a)?.0).map_err(temporal_err)?;
        let sb = AttentionSequence::from_stack(&borrow(b)?.0).map_err(temporal_err)?;
        let norm = match normalization {
            GkNormalization::AlignedPairs => PathNormalization::AlignedPairs,
            GkNormalization::Steps => PathNormalization::Steps,
        };
        let r = dtw_distance(&sa, &sb, norm).map_err(temporal_err)?;
        if !out_path_len.is_null() {
            out_path_len.write(r.path.len());
        }
        put(out_distance, r.distance)
    })
}

/// Samples a `size × size` patch from every grid through the affine map
/// `[t0 t1 t2; t3 t4 t5]` in normalized coordinates (`t2`, `t5` = centre).
///
/// # Safety
/// `stack` must be live, `theta` must hold 6 doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_sample_patch(
    stack: *const GkStack,
    theta: *const f64,
    size: usize,
    out: *mut *mut GkStack,
) -> GkStatus {
    guard(|| {
        let t = slice(theta, 6)?;
        let affine = AffineParams { theta: [[t[0], t[1]], [t[3], t[4]]], center: (t[2], t[5]) };
        let s = sample_patch(&borrow(stack)?.0, &affine, size).map_err(attend_err)?;
        put(out, Box::into_raw(Box::new(GkStack(s))))
    })
}

/// Soft attention with a dot-product scorer over `n` feature vectors of
/// length `k` (row-major in `features`) and a length-`k` state. Writes `n`
/// weights and `k` pooled values.
///
/// # Safety
/// Buffers must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn gk_soft_attention(
    features: *const f64,
    n: usize,
    k: usize,
    state: *const f64,
    pooling: GkPooling,
    out_weights: *mut f64,
    out_pooled: *mut f64,
) -> GkStatus {
    guard(|| {
        if n == 0 || k == 0 {
            return Err(fail(GkStatus::EmptyInput, "need at least one feature of length at least one"));
        }
        let total = n.checked_mul(k).ok_or_else(|| fail(GkStatus::InvalidArgument, "size overflow"))?;
        let flat = slice(features, total)?;
        let fvs: Vec<Vec<f64>> = flat.chunks(k).map(<[f64]>::to_vec).collect();
        let mode = match pooling {
            GkPooling::MeanScaled => PoolingMode::MeanScaled,
            GkPooling::Convex => PoolingMode::Convex,
        };
        let r = soft_attention(&fvs, slice(state, k)?, &DotScorer, mode).map_err(attend_err)?;
        slice_mut(out_weights, n)?.copy_from_slice(&r.weights);
        slice_mut(out_pooled, k)?.copy_from_slice(&r.pooled);
        Ok(())
    })
}

/// Unit-sum copy of a grid as a new handle.
///
/// # Safety
/// `grid` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_grid_normalized(grid: *const GkGrid, out: *mut *mut GkGrid) -> GkStatus {
    guard(|| {
        let m = SaliencyMap::normalize(borrow(grid)?.0.clone()).map_err(grid_err)?;
        put(out, Box::into_raw(Box::new(GkGrid(m.into_grid()))))
    })
}

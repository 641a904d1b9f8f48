//! C ABI over `manifold-kde`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and released with the
//! matching `*_free`. Every fallible call returns a [`KdeStatus`]; on failure the message is
//! kept per thread and can be copied out with [`kde_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use manifold_kde::error::Error;
use manifold_kde::estimators::{Bandwidth, Estimator, EstimatorKernel, PreparedSamples};
use manifold_kde::geometry::EmbeddedManifold;
use manifold_kde::sampling::{self, DensityModel, SampleSet};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Argument = 4,
    Configuration = 5,
    Unsupported = 6,
    DegenerateKernel = 7,
    PartitionNotFound = 8,
    Numerical = 9,
    DimensionMismatch = 10,
    Panic = 11,
}

impl From<&Error> for KdeStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => KdeStatus::Domain,
            Error::Argument(_) => KdeStatus::Argument,
            Error::Configuration(_) => KdeStatus::Configuration,
            Error::Unsupported(_) => KdeStatus::Unsupported,
            Error::DegenerateKernel(_) => KdeStatus::DegenerateKernel,
            Error::PartitionNotFound { .. } => KdeStatus::PartitionNotFound,
            Error::Numerical(_) => KdeStatus::Numerical,
            Error::Context { source, .. } => KdeStatus::from(source.as_ref()),
        }
    }
}

/// A manifold from a descriptor such as `sphere:d=2`.
pub struct KdeManifold(Arc<EmbeddedManifold>);

/// A sampling density on a manifold.
pub struct KdeDensity(DensityModel);

/// A batch of points, stored row-major with `kde_manifold_point_dim` coordinates each.
pub struct KdeSampleSet(SampleSet);

/// An estimator bound to a kernel, a bandwidth and a prepared sample.
pub struct KdeEstimator {
    estimator: Estimator,
    prepared: PreparedSamples,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(KdeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(KdeStatus::from(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> KdeStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => (KdeStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(_) => (KdeStatus::Panic, "internal panic".to_owned()),
    };
    LAST_ERROR.with(|l| *l.borrow_mut() = message);
    status
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(KdeStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(KdeStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(KdeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(KdeStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(KdeStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn dimension(expected: usize, got: usize) -> Result<(), Failure> {
    if expected == got {
        Ok(())
    } else {
        Err(Failure(
            KdeStatus::DimensionMismatch,
            format!("points have {got} coordinates, the manifold uses {expected}"),
        ))
    }
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated, truncated to fit)
/// and returns the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn kde_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|l| {
        let msg = l.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `descriptor` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kde_manifold_new(descriptor: *const c_char, out: *mut *mut KdeManifold) -> KdeStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let m = EmbeddedManifold::from_descriptor(text(descriptor, "descriptor")?)?;
        *out = Box::into_raw(Box::new(KdeManifold(Arc::new(m))));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from `kde_manifold_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kde_manifold_free(m: *mut KdeManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Intrinsic dimension, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kde_manifold_intrinsic_dim(m: *const KdeManifold) -> usize {
    m.as_ref().map_or(0, |m| m.0.intrinsic_dim())
}

/// Coordinates per point, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kde_manifold_point_dim(m: *const KdeManifold) -> usize {
    m.as_ref().map_or(0, |m| m.0.param_dim())
}

/// # Safety
/// `manifold` must be a live handle, `descriptor` a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kde_density_new(
    manifold: *const KdeManifold,
    descriptor: *const c_char,
    out: *mut *mut KdeDensity,
) -> KdeStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let m = handle(manifold, "manifold")?;
        let d = DensityModel::from_descriptor(m.0.clone(), text(descriptor, "descriptor")?)?;
        *out = Box::into_raw(Box::new(KdeDensity(d)));
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kde_density_free(d: *mut KdeDensity) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Density value at one point of `dim` coordinates.
///
/// # Safety
/// `point` must be valid for `dim` reads and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kde_density_evaluate(
    density: *const KdeDensity,
    point: *const f64,
    dim: usize,
    out: *mut f64,
) -> KdeStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let d = handle(density, "density")?;
        dimension(d.0.manifold().param_dim(), dim)?;
        *out = d.0.evaluate(slice(point, dim, "point")?);
        Ok(())
    })
}

/// Draws `n` points by rejection sampling; the same seed gives the same points.
///
/// # Safety
/// `density` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kde_sample(
    density: *const KdeDensity,
    n: usize,
    seed: u64,
    out: *mut *mut KdeSampleSet,
) -> KdeStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let s = sampling::sample(&handle(density, "density")?.0, n, seed)?;
        *out = Box::into_raw(Box::new(KdeSampleSet(s)));
        Ok(())
    })
}

/// Wraps caller-provided points, `n` rows of `dim` coordinates.
///
/// # Safety
/// `points` must be valid for `n * dim` reads and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kde_samples_from_points(
    points: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut KdeSampleSet,
) -> KdeStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let len = n.checked_mul(dim).ok_or_else(|| Failure(KdeStatus::Argument, "n * dim overflows".to_owned()))?;
        let s = SampleSet::from_points(slice(points, len, "points")?.to_vec(), dim, "external")?;
        *out = Box::into_raw(Box::new(KdeSampleSet(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kde_samples_free(s: *mut KdeSampleSet) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kde_samples_len(s: *const KdeSampleSet) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Coordinates per point, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kde_samples_dim(s: *const KdeSampleSet) -> usize {
    s.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the points row-major into `buf`, which must hold `len * dim` values.
///
/// # Safety
/// `buf` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn kde_samples_copy(s: *const KdeSampleSet, buf: *mut f64, capacity: usize) -> KdeStatus {
    guard(|| {
        let flat = handle(s, "samples")?.0.as_flat();
        if capacity < flat.len() {
            return Err(Failure(KdeStatus::Argument, format!("buffer holds {capacity} values, {} needed", flat.len())));
        }
        if !flat.is_empty() {
            out_ptr(buf, "buf")?;
            ptr::copy_nonoverlapping(flat.as_ptr(), buf, flat.len());
        }
        Ok(())
    })
}

/// Builds an estimator from a kernel descriptor and bandwidth, and indexes the samples.
/// The sample set is copied, so it may be freed afterwards.
///
/// # Safety
/// Handles must be live, `kernel` NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kde_estimator_new(
    manifold: *const KdeManifold,
    kernel: *const c_char,
    eps: f64,
    samples: *const KdeSampleSet,
    out: *mut *mut KdeEstimator,
) -> KdeStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let m = handle(manifold, "manifold")?;
        let s = handle(samples, "samples")?;
        if !s.0.is_empty() {
            dimension(m.0.param_dim(), s.0.dim())?;
        }
        let k = EstimatorKernel::from_descriptor(text(kernel, "kernel")?, &m.0, eps)?;
        let estimator = Estimator::new(m.0.clone(), k, Bandwidth::new(eps)?);
        let prepared = estimator.prepare(s.0.clone())?;
        *out = Box::into_raw(Box::new(KdeEstimator { estimator, prepared }));
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kde_estimator_free(e: *mut KdeEstimator) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Estimates the density at `n` points of `dim` coordinates, writing `n` values to `out`.
///
/// # Safety
/// `points` must be valid for `n * dim` reads and `out` for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn kde_estimate(
    estimator: *const KdeEstimator,
    points: *const f64,
    n: usize,
    dim: usize,
    out: *mut f64,
) -> KdeStatus {
    guard(|| {
        let e = handle(estimator, "estimator")?;
        dimension(e.estimator.manifold().param_dim(), dim)?;
        let len = n.checked_mul(dim).ok_or_else(|| Failure(KdeStatus::Argument, "n * dim overflows".to_owned()))?;
        let pts = slice(points, len, "points")?;
        if n > 0 {
            out_ptr(out, "out")?;
        }
        let rows: Vec<Vec<f64>> = pts.chunks_exact(dim).map(<[f64]>::to_vec).collect();
        let values = e.estimator.estimate_many(&e.prepared, &rows)?;
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

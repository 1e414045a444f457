//! C interface to `fatigue_core`.
//!
//! Objects cross the boundary as opaque pointers owned by the caller and
//! released with the matching `ft_*_free`. Every fallible call returns an
//! [`FtStatus`]; on failure the message is available from
//! [`ft_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fatigue_core::gp::{GpModel, LoadType, MaterialFeatures};
use fatigue_core::inference::{
    self, Discretization, EntropyOptions, GridOptions, PriorSpec, SigmaPrior, WidthScale,
};
use fatigue_core::model::{self, ExperimentSeries, MaterialParams, Outcome};
use fatigue_core::simulator::SimulatorState;
use fatigue_core::staircase::{generate_levels, LevelRounding, StaircaseConfig};
use fatigue_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    DegeneratePosterior = 4,
    Numerical = 5,
    Io = 6,
    Parse = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtWidthScale {
    Load = 0,
    Log10Exponent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtLoadType {
    Bending = 0,
    Stress = 1,
    Strain = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtDiscretization {
    None = 0,
    Ten = 1,
}

/// Prior over the mean fatigue strength with a fixed scatter.
pub struct FtPrior(PriorSpec);
/// Ordered list of (load, outcome) experiments.
pub struct FtSeries(ExperimentSeries);
/// Seeded ground-truth specimen generator.
pub struct FtSimulator(SimulatorState);
/// Trained GP regression model.
pub struct FtGpModel(GpModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: FtStatus, msg: impl Into<String>) -> FtStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> FtStatus {
    let status = match &e {
        Error::Domain(_) => FtStatus::Domain,
        Error::Config(_) => FtStatus::Config,
        Error::DegeneratePosterior(_) => FtStatus::DegeneratePosterior,
        Error::Numerical(_) => FtStatus::Numerical,
        Error::Io(_) => FtStatus::Io,
        Error::Json(_) | Error::Csv(_) => FtStatus::Parse,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), FtStatus>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FtStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(FtStatus::Panic, msg)
        }
    }
}

trait OrStatus<T> {
    fn st(self) -> Result<T, FtStatus>;
}

impl<T> OrStatus<T> for fatigue_core::Result<T> {
    fn st(self) -> Result<T, FtStatus> {
        self.map_err(from_error)
    }
}

unsafe fn r<'a, T>(p: *const T, name: &str) -> Result<&'a T, FtStatus> {
    p.as_ref().ok_or_else(|| fail(FtStatus::NullPointer, format!("{name} is null")))
}

unsafe fn m<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, FtStatus> {
    p.as_mut().ok_or_else(|| fail(FtStatus::NullPointer, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut T, v: T, name: &str) -> Result<(), FtStatus> {
    if out.is_null() {
        return Err(fail(FtStatus::NullPointer, format!("{name} is null")));
    }
    out.write(v);
    Ok(())
}

unsafe fn boxed<T>(out: *mut *mut T, v: T) -> Result<(), FtStatus> {
    put(out, Box::into_raw(Box::new(v)), "out")
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Version string of the library, statically allocated.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Failure probability of a specimen with median strength `mu_l` and scatter
/// `sigma_l` loaded at `load`.
///
/// # Safety
/// `out` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn ft_failure_probability(mu_l: f64, sigma_l: f64, load: f64, out: *mut f64) -> FtStatus {
    guard(|| {
        let p = MaterialParams::new(mu_l, sigma_l).st()?;
        put(out, model::failure_probability(&p, load).st()?, "out")
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_prior_new(
    mean_log10: f64,
    std_log10: f64,
    sigma_l: f64,
    out: *mut *mut FtPrior,
) -> FtStatus {
    guard(|| boxed(out, FtPrior(PriorSpec::fixed(mean_log10, std_log10, sigma_l).st()?)))
}

/// Prior centred on `mean_load` with a width in load units.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_prior_from_width(
    mean_load: f64,
    width: f64,
    scale: FtWidthScale,
    sigma_l: f64,
    out: *mut *mut FtPrior,
) -> FtStatus {
    guard(|| {
        let scale = match scale {
            FtWidthScale::Load => WidthScale::Load,
            FtWidthScale::Log10Exponent => WidthScale::Log10Exponent,
        };
        let p = PriorSpec::from_width(mean_load, width, scale, SigmaPrior::Fixed { sigma_l }).st()?;
        boxed(out, FtPrior(p))
    })
}

/// Mean and standard deviation of the prior on `log10 mu`.
///
/// # Safety
/// `prior` must come from `ft_prior_*`; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_prior_params(prior: *const FtPrior, mean_log10: *mut f64, std_log10: *mut f64) -> FtStatus {
    guard(|| {
        let p = r(prior, "prior")?;
        put(mean_log10, p.0.mu_prior.mean_log10, "mean_log10")?;
        put(std_log10, p.0.mu_prior.std_log10, "std_log10")
    })
}

/// # Safety
/// `prior` must be null or come from `ft_prior_*`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ft_prior_free(prior: *mut FtPrior) {
    free(prior)
}

#[no_mangle]
pub extern "C" fn ft_series_new() -> *mut FtSeries {
    Box::into_raw(Box::new(FtSeries(ExperimentSeries::new(""))))
}

/// Appends one experiment. `failed` is nonzero for a failure.
///
/// # Safety
/// `series` must come from `ft_series_new`.
#[no_mangle]
pub unsafe extern "C" fn ft_series_push(series: *mut FtSeries, load: f64, failed: i32) -> FtStatus {
    guard(|| {
        let s = m(series, "series")?;
        let outcome = if failed != 0 { Outcome::Failure } else { Outcome::Runout };
        s.0.push(load, outcome).st()?;
        Ok(())
    })
}

/// Number of experiments, 0 for a null series.
///
/// # Safety
/// `series` must be null or come from `ft_series_new`.
#[no_mangle]
pub unsafe extern "C" fn ft_series_len(series: *const FtSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `series` must be null or come from `ft_series_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ft_series_free(series: *mut FtSeries) {
    free(series)
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_simulator_new(mu_l: f64, sigma_l: f64, seed: u64, out: *mut *mut FtSimulator) -> FtStatus {
    guard(|| {
        let truth = MaterialParams::new(mu_l, sigma_l).st()?;
        boxed(out, FtSimulator(SimulatorState::new(truth, seed)))
    })
}

/// Tests one fresh specimen at `load`; `failed` receives 1 or 0.
///
/// # Safety
/// `sim` must come from `ft_simulator_new`; `failed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_simulator_step(sim: *mut FtSimulator, load: f64, failed: *mut i32) -> FtStatus {
    guard(|| {
        let s = m(sim, "simulator")?;
        let o = s.0.step(load).st()?;
        put(failed, o.is_failure() as i32, "failed")
    })
}

/// # Safety
/// `sim` must be null or come from `ft_simulator_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ft_simulator_free(sim: *mut FtSimulator) {
    free(sim)
}

/// Maximum a posteriori estimate of `(mu_l, sigma_l)`.
///
/// # Safety
/// Handles must be valid; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_map_estimate(
    prior: *const FtPrior,
    series: *const FtSeries,
    restarts: usize,
    mu_hat: *mut f64,
    sigma_hat: *mut f64,
) -> FtStatus {
    guard(|| {
        let est = inference::map_estimate(&r(prior, "prior")?.0, &r(series, "series")?.0, restarts).st()?;
        put(mu_hat, est.mu_hat, "mu_hat")?;
        put(sigma_hat, est.sigma_hat, "sigma_hat")
    })
}

/// Posterior standard deviation of the mean strength on a grid of
/// `grid_points` points, both in `log10` units and in N.
///
/// # Safety
/// Handles must be valid; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_posterior_std(
    prior: *const FtPrior,
    series: *const FtSeries,
    grid_points: usize,
    std_log10: *mut f64,
    std_load: *mut f64,
) -> FtStatus {
    guard(|| {
        let opts = GridOptions { n_points: grid_points, allow_degenerate: false };
        let grid = inference::evaluate_grid(&r(prior, "prior")?.0, &r(series, "series")?.0, opts).st()?;
        let s = inference::posterior_std(&grid).st()?;
        put(std_log10, s.std_log10, "std_log10")?;
        put(std_load, s.std_load, "std_load")
    })
}

/// Next load recommended by the entropy acquisition.
///
/// # Safety
/// Handles must be valid; `load` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_acquire_entropy(
    prior: *const FtPrior,
    series: *const FtSeries,
    grid_points: usize,
    restarts: usize,
    seed: u64,
    load: *mut f64,
) -> FtStatus {
    guard(|| {
        let prior = &r(prior, "prior")?.0;
        let series = &r(series, "series")?.0;
        let map = inference::map_estimate(prior, series, restarts).st()?;
        let opts = GridOptions { n_points: grid_points, allow_degenerate: false };
        put(load, inference::acquire_entropy(prior, series, &map, opts, EntropyOptions::sampled(seed)).st()?, "load")
    })
}

#[no_mangle]
pub extern "C" fn ft_discretize_load(load: f64, factor: FtDiscretization) -> f64 {
    let f = match factor {
        FtDiscretization::None => Discretization::None,
        FtDiscretization::Ten => Discretization::MinusOne,
    };
    inference::discretize_load(load, f)
}

/// Staircase levels `lo..=hi` around `l_ini` on the integer-rounded lattice.
/// `written` receives the number of levels; if `cap` is too small nothing is
/// copied and the required size is still reported.
///
/// # Safety
/// `out` must point to `cap` doubles (may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn ft_staircase_levels(
    l_ini: f64,
    d: f64,
    lo: i64,
    hi: i64,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> FtStatus {
    guard(|| {
        let cfg = StaircaseConfig::new(l_ini, d, LevelRounding::SequentialInteger).st()?;
        let levels = generate_levels(&cfg, lo..=hi).st()?;
        put(written, levels.len(), "written")?;
        if levels.len() > cap {
            return Err(fail(FtStatus::BufferTooSmall, format!("need {} slots, got {cap}", levels.len())));
        }
        if out.is_null() {
            return Err(fail(FtStatus::NullPointer, "out is null"));
        }
        std::ptr::copy_nonoverlapping(levels.as_ptr(), out, levels.len());
        Ok(())
    })
}

/// Loads a GP model saved as JSON.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_gp_load_json(path: *const c_char, out: *mut *mut FtGpModel) -> FtStatus {
    guard(|| {
        if path.is_null() {
            return Err(fail(FtStatus::NullPointer, "path is null"));
        }
        let p = CStr::from_ptr(path).to_str().map_err(|e| fail(FtStatus::Parse, e.to_string()))?;
        boxed(out, FtGpModel(GpModel::load_json(Path::new(p)).st()?))
    })
}

/// Predictive normal on `log10 mu` for one material.
///
/// # Safety
/// `model` must come from `ft_gp_load_json`; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_gp_predict(
    model: *const FtGpModel,
    v90: f64,
    edge_hardness: f64,
    load_type: FtLoadType,
    load_ratio_r: f64,
    mean_log10: *mut f64,
    std_log10: *mut f64,
) -> FtStatus {
    guard(|| {
        let lt = match load_type {
            FtLoadType::Bending => LoadType::Bending,
            FtLoadType::Stress => LoadType::Stress,
            FtLoadType::Strain => LoadType::Strain,
        };
        let f = MaterialFeatures::new(v90, edge_hardness, lt, load_ratio_r).st()?;
        let pred = r(model, "model")?.0.predict(&f).st()?;
        put(mean_log10, pred.mean_log10, "mean_log10")?;
        put(std_log10, pred.std_log10, "std_log10")
    })
}

/// # Safety
/// `model` must be null or come from `ft_gp_load_json`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ft_gp_free(model: *mut FtGpModel) {
    free(model)
}

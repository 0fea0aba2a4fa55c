//! C interface to the miner.
//!
//! Every fallible function returns an [`RdStatus`]. On failure,
//! [`rd_last_error`] returns a message for the calling thread. Handles are
//! opaque; release them with their `_free` function. Strings handed out by the
//! library are released with [`rd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use redescribe::dataio::{load_config, RunConfig};
use redescribe::metrics::{set_scores, MeasureScores};
use redescribe::multiview::{run_restart, FrameworkOptions};
use redescribe::naive::{run_naive, NaiveOptions};
use redescribe::query::{format_query, Redescription};
use redescribe::report::SetFile;
use redescribe::Error;

/// Result code of every fallible call. Codes 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    /// Null pointer, bad index or non-UTF-8 string.
    InvalidArgument = 1,
    Config = 2,
    /// The call succeeded but produced no redescription.
    Empty = 3,
    Io = 4,
    /// A query failed to parse or referenced an unknown attribute.
    Query = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// A loaded configuration and its dataset.
pub struct RdConfig {
    run: Arc<RunConfig>,
}

/// A redescription set tied to the dataset it was mined from.
pub struct RdSet {
    run: Arc<RunConfig>,
    set: Vec<Redescription>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RdMeasures {
    pub j_sc: f64,
    pub p_sc: f64,
    pub aaj_sc: f64,
    pub aej_sc: f64,
    pub comp_sc: f64,
    pub total_sc: f64,
}

impl From<MeasureScores> for RdMeasures {
    fn from(m: MeasureScores) -> Self {
        RdMeasures {
            j_sc: m.j_sc,
            p_sc: m.p_sc,
            aaj_sc: m.aaj_sc,
            aej_sc: m.aej_sc,
            comp_sc: m.comp_sc,
            total_sc: m.total_sc,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RdScores {
    pub size: usize,
    pub entity_coverage: f64,
    pub attribute_coverage: f64,
    pub underlined: RdMeasures,
    /// Unpadded means; all zero when `has_plain` is false (empty set).
    pub plain: RdMeasures,
    pub has_plain: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (RdStatus, String);

fn status_of(e: &Error) -> RdStatus {
    match e {
        Error::Io { .. } => RdStatus::Io,
        Error::Query { .. } | Error::QuerySyntax { .. } => RdStatus::Query,
        Error::Usage(_) => RdStatus::InvalidArgument,
        _ => RdStatus::Config,
    }
}

fn fail(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn invalid(msg: &str) -> Failure {
    (RdStatus::InvalidArgument, msg.to_string())
}

/// Runs `f`, recording any failure or panic for [`rd_last_error`].
fn guard(f: impl FnOnce() -> Result<RdStatus, Failure>) -> RdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(&format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid("output pointer is null"))
}

fn member(set: &RdSet, index: usize) -> Result<&Redescription, Failure> {
    set.set
        .get(index)
        .ok_or_else(|| invalid(&format!("index {index} out of range (set has {})", set.set.len())))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn rd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a TOML config and the dataset it names.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_config_load(path: *const c_char, out: *mut *mut RdConfig) -> RdStatus {
    guard(|| {
        let out = out_arg(out)?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let run = load_config(&path).map_err(fail)?;
        *out = Box::into_raw(Box::new(RdConfig { run: Arc::new(run) }));
        Ok(RdStatus::Ok)
    })
}

/// Overrides the master seed.
///
/// # Safety
/// `config` must be null or a handle from [`rd_config_load`].
#[no_mangle]
pub unsafe extern "C" fn rd_config_set_seed(config: *mut RdConfig, seed: u64) -> RdStatus {
    guard(|| {
        let c = out_arg(config)?;
        Arc::make_mut(&mut c.run).settings.seed = seed;
        Ok(RdStatus::Ok)
    })
}

/// Number of views in the config's dataset; 0 for a null handle.
///
/// # Safety
/// `config` must be null or a handle from [`rd_config_load`].
#[no_mangle]
pub unsafe extern "C" fn rd_config_n_views(config: *const RdConfig) -> usize {
    config.as_ref().map_or(0, |c| c.run.dataset.n_views())
}

/// Number of weight rows, i.e. of output sets per restart; 0 for a null handle.
///
/// # Safety
/// `config` must be null or a handle from [`rd_config_load`].
#[no_mangle]
pub unsafe extern "C" fn rd_config_weight_rows(config: *const RdConfig) -> usize {
    config.as_ref().map_or(0, |c| c.run.settings.weights.rows().len())
}

/// # Safety
/// `config` must be null or a handle from [`rd_config_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_config_free(config: *mut RdConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

fn finish_set(out: &mut *mut RdSet, run: Arc<RunConfig>, set: Vec<Redescription>) -> RdStatus {
    let empty = set.is_empty();
    *out = Box::into_raw(Box::new(RdSet { run, set }));
    if empty {
        set_error("no redescription satisfied the constraints".into());
        RdStatus::Empty
    } else {
        RdStatus::Ok
    }
}

/// Runs restart `restart` of the multi-view framework and returns the set
/// selected under weight row `weight_row`. An empty result yields
/// `RD_STATUS_EMPTY` together with a valid, empty set.
///
/// # Safety
/// `config` must be a handle from [`rd_config_load`] and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_mine(
    config: *const RdConfig,
    restart: usize,
    weight_row: usize,
    out: *mut *mut RdSet,
) -> RdStatus {
    guard(|| {
        let c = ref_arg(config, "config")?;
        let out = out_arg(out)?;
        let run = &c.run;
        run.settings.validate(run.dataset.n_views()).map_err(fail)?;
        if weight_row >= run.settings.weights.rows().len() {
            return Err(invalid(&format!("weight row {weight_row} out of range")));
        }
        let mut res = run_restart(&run.dataset, &run.constraints, &run.settings, restart, &FrameworkOptions::default());
        Ok(finish_set(out, Arc::clone(run), res.sets.swap_remove(weight_row)))
    })
}

/// Runs restart `restart` of the naive baseline.
///
/// # Safety
/// `config` must be a handle from [`rd_config_load`] and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_naive(config: *const RdConfig, restart: usize, out: *mut *mut RdSet) -> RdStatus {
    guard(|| {
        let c = ref_arg(config, "config")?;
        let out = out_arg(out)?;
        let run = &c.run;
        run.settings.validate(run.dataset.n_views()).map_err(fail)?;
        let res = run_naive(&run.dataset, &run.constraints, &run.settings, restart, &NaiveOptions::default());
        Ok(finish_set(out, Arc::clone(run), res.redescriptions))
    })
}

/// Reads a redescription set file against the config's dataset.
///
/// # Safety
/// `config` must be a handle from [`rd_config_load`], `path` a valid
/// NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_set_read(config: *const RdConfig, path: *const c_char, out: *mut *mut RdSet) -> RdStatus {
    guard(|| {
        let c = ref_arg(config, "config")?;
        let out = out_arg(out)?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let set = SetFile::read(&path)
            .and_then(|f| f.redescriptions(&c.run.dataset))
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(RdSet {
            run: Arc::clone(&c.run),
            set,
        }));
        Ok(RdStatus::Ok)
    })
}

/// Number of redescriptions; 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live set handle.
#[no_mangle]
pub unsafe extern "C" fn rd_set_len(set: *const RdSet) -> usize {
    set.as_ref().map_or(0, |s| s.set.len())
}

/// # Safety
/// `set` must be a live set handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_set_jaccard(set: *const RdSet, index: usize, out: *mut f64) -> RdStatus {
    guard(|| {
        let v = member(ref_arg(set, "set")?, index)?.jaccard();
        *out_arg(out)? = v;
        Ok(RdStatus::Ok)
    })
}

/// # Safety
/// `set` must be a live set handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_set_pvalue(set: *const RdSet, index: usize, out: *mut f64) -> RdStatus {
    guard(|| {
        let v = member(ref_arg(set, "set")?, index)?.pvalue();
        *out_arg(out)? = v;
        Ok(RdStatus::Ok)
    })
}

/// # Safety
/// `set` must be a live set handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_set_support_size(set: *const RdSet, index: usize, out: *mut usize) -> RdStatus {
    guard(|| {
        let v = member(ref_arg(set, "set")?, index)?.support().len();
        *out_arg(out)? = v;
        Ok(RdStatus::Ok)
    })
}

/// Query text of one view, or null when the redescription has no query there.
///
/// # Safety
/// `set` must be a live set handle and `out` a valid pointer. A non-null
/// result must be released with [`rd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rd_set_query(set: *const RdSet, index: usize, view: usize, out: *mut *mut c_char) -> RdStatus {
    guard(|| {
        let s = ref_arg(set, "set")?;
        let r = member(s, index)?;
        let out = out_arg(out)?;
        if view >= s.run.dataset.n_views() {
            return Err(invalid(&format!("view {view} out of range")));
        }
        *out = r
            .query(view)
            .map_or(ptr::null_mut(), |q| owned_string(format_query(q, &s.run.dataset)));
        Ok(RdStatus::Ok)
    })
}

/// The set in the TOML set-file format.
///
/// # Safety
/// `set` must be a live set handle and `out` a valid pointer. Release the
/// result with [`rd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rd_set_to_toml(set: *const RdSet, out: *mut *mut c_char) -> RdStatus {
    guard(|| {
        let s = ref_arg(set, "set")?;
        *out_arg(out)? = owned_string(SetFile::from_set(&s.set, &s.run.dataset).to_toml());
        Ok(RdStatus::Ok)
    })
}

/// Set scores under weight row `weight_row`. `expected_size` 0 uses the configured expected output size.
///
/// # Safety
/// `set` must be a live set handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_set_scores(
    set: *const RdSet,
    weight_row: usize,
    expected_size: usize,
    out: *mut RdScores,
) -> RdStatus {
    guard(|| {
        let s = ref_arg(set, "set")?;
        let out = out_arg(out)?;
        let st = &s.run.settings;
        let w = st
            .weights
            .rows()
            .get(weight_row)
            .ok_or_else(|| invalid(&format!("weight row {weight_row} out of range")))?;
        let expected = if expected_size == 0 { st.expected_out_size } else { expected_size };
        let d = &s.run.dataset;
        let sc = set_scores(&s.set, w, expected, st.k_c, d.n_entities(), d.n_attributes());
        *out = RdScores {
            size: sc.size,
            entity_coverage: sc.entity_coverage,
            attribute_coverage: sc.attribute_coverage,
            underlined: sc.underlined.into(),
            plain: sc.plain.map(Into::into).unwrap_or_default(),
            has_plain: sc.plain.is_some(),
        };
        Ok(RdStatus::Ok)
    })
}

/// # Safety
/// `set` must be null or a set handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_set_free(set: *mut RdSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

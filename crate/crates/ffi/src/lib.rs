//! C ABI over the trepac library.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`TrepacStatus`]; on failure the message is available through
//! [`trepac_last_error`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trepac::bounds::{sample_size, tree_size_estimate, HypothesisCount, Rounding};
use trepac::case_study::{builtin_fixture, feature_space};
use trepac::extraction::{trepac, ExtractionConfig, TerminationReason};
use trepac::feature::{enumerate_candidate_splits, FeatureSpace, TabularExample, Value};
use trepac::tree::{TreeDocument, TreeMeta};
use trepac::{Distribution, Error, MembershipOracle};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrepacStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad parameters, unknown names or unsupported requests.
    InvalidArgument = 2,
    /// Malformed or structurally invalid tree documents.
    Parse = 3,
    /// The oracle could not label an example.
    Oracle = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrepacRounding {
    Nearest = 0,
    Ceil = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrepacTermination {
    QueueEmpty = 0,
    SizeLimit = 1,
    ErrorBudgetMet = 2,
}

/// Opaque decision tree with its metadata.
pub struct TrepacTree {
    doc: TreeDocument,
}

/// Opaque membership oracle together with the feature space it labels.
pub struct TrepacOracle {
    oracle: MembershipOracle,
    space: FeatureSpace,
}

/// Opaque result of an extraction.
pub struct TrepacReport {
    tree: TreeDocument,
    training_misclassified: usize,
    training_size: usize,
    termination: TrepacTermination,
    queue_exhausted: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TrepacStatus {
    if err.is_oracle_failure() {
        return TrepacStatus::Oracle;
    }
    match err {
        Error::Parse { .. } | Error::Structure(_) | Error::Json(_) => TrepacStatus::Parse,
        Error::Io(_) => TrepacStatus::Io,
        _ => TrepacStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, clears or records the last error and maps panics.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TrepacStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TrepacStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            TrepacStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(&msg);
            TrepacStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            TrepacStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg(format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Arg("string contains NUL".into()))
}

/// Message of the last failed call on this thread, or NULL. Borrowed; valid
/// until the next trepac call on this thread.
#[no_mangle]
pub extern "C" fn trepac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be NULL or come from a trepac function that returns an owned string.
#[no_mangle]
pub unsafe extern "C" fn trepac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Training-set size for `n` internal nodes over `num_features` binary features.
///
/// # Safety
/// `out` must be NULL or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn trepac_sample_size(
    epsilon: f64,
    delta: f64,
    k: u64,
    n: u64,
    num_features: u32,
    rounding: TrepacRounding,
    out: *mut u64,
) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let rounding = match rounding {
            TrepacRounding::Nearest => Rounding::Nearest,
            TrepacRounding::Ceil => Rounding::Ceil,
        };
        *out = sample_size(epsilon, delta, k, &HypothesisCount::trees(n, num_features), rounding)?;
        Ok(())
    })
}

/// Number of internal nodes suggested for constant `c` and accuracy `epsilon`.
///
/// # Safety
/// `out` must be NULL or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn trepac_tree_size_estimate(c: f64, epsilon: f64, out: *mut u64) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = tree_size_estimate(c, epsilon)?;
        Ok(())
    })
}

/// Parses a tree document.
///
/// # Safety
/// `json` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_tree_from_json(json: *const c_char, out: *mut *mut TrepacTree) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let doc = TreeDocument::from_json_str(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(TrepacTree { doc }));
        Ok(())
    })
}

/// Serializes a tree document. Free the result with [`trepac_string_free`].
///
/// # Safety
/// `tree` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_tree_to_json(tree: *const TrepacTree, out: *mut *mut c_char) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let tree = handle(tree, "tree")?;
        *out = into_c_string(tree.doc.to_json_string()?)?;
        Ok(())
    })
}

/// Number of internal nodes.
///
/// # Safety
/// `tree` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_tree_size(tree: *const TrepacTree, out: *mut usize) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = handle(tree, "tree")?.doc.tree.size_of();
        Ok(())
    })
}

/// Classifies an example given as `len` integer feature values.
///
/// # Safety
/// `values` must point to `len` readable integers (or be NULL when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn trepac_tree_classify(
    tree: *const TrepacTree,
    values: *const i64,
    len: usize,
    out: *mut u8,
) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let tree = handle(tree, "tree")?;
        let values = if len == 0 {
            &[][..]
        } else if values.is_null() {
            return Err(Failure::Null("values"));
        } else {
            std::slice::from_raw_parts(values, len)
        };
        let example = TabularExample::new(values.iter().map(|&v| Value::Int(v)).collect());
        *out = tree.doc.tree.classify(&example)?;
        Ok(())
    })
}

/// # Safety
/// `tree` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trepac_tree_free(tree: *mut TrepacTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Oracle backed by one of the bundled occupation fixtures.
///
/// # Safety
/// `name` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_oracle_builtin(name: *const c_char, out: *mut *mut TrepacOracle) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let table = builtin_fixture(str_arg(name, "name")?)?;
        let oracle = MembershipOracle::from_fixture(table);
        *out = Box::into_raw(Box::new(TrepacOracle {
            oracle,
            space: feature_space(),
        }));
        Ok(())
    })
}

/// Oracle that answers with a tree over the occupation feature space. The
/// tree is copied; the caller keeps ownership of `tree`.
///
/// # Safety
/// `tree` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_oracle_from_tree(tree: *const TrepacTree, out: *mut *mut TrepacOracle) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let tree = handle(tree, "tree")?;
        *out = Box::into_raw(Box::new(TrepacOracle {
            oracle: MembershipOracle::from_tree(tree.doc.tree.clone()),
            space: feature_space(),
        }));
        Ok(())
    })
}

/// # Safety
/// `oracle` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trepac_oracle_free(oracle: *mut TrepacOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Extracts a tree with at most `size_limit` internal nodes from `m` samples
/// drawn uniformly over the oracle's feature space.
///
/// # Safety
/// `oracle` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_extract(
    oracle: *const TrepacOracle,
    size_limit: usize,
    k: u64,
    m: usize,
    seed: u64,
    out: *mut *mut TrepacReport,
) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let oracle = handle(oracle, "oracle")?;
        let dist = Distribution::uniform_over(&oracle.space)?;
        let splits = enumerate_candidate_splits(&oracle.space)?;
        let config = ExtractionConfig::new(size_limit, k, m, splits, seed);
        let report = trepac(&oracle.oracle, &config, &dist)?;
        let termination = match report.termination_reason {
            TerminationReason::QueueEmpty => TrepacTermination::QueueEmpty,
            TerminationReason::SizeLimit => TrepacTermination::SizeLimit,
            TerminationReason::ErrorBudgetMet => TrepacTermination::ErrorBudgetMet,
        };
        let meta = TreeMeta {
            feature_space_id: oracle.space.id.clone(),
            k: Some(k),
            m: Some(m as u64),
            n: Some(size_limit as u64),
            seed: Some(seed),
            model_id: Some(oracle.oracle.model_id().to_owned()),
            ..Default::default()
        };
        *out = Box::into_raw(Box::new(TrepacReport {
            tree: TreeDocument::new(report.tree, meta),
            training_misclassified: report.training_misclassified,
            training_size: report.training_size,
            termination,
            queue_exhausted: report.queue_exhausted,
        }));
        Ok(())
    })
}

/// Copies the extracted tree into a new handle.
///
/// # Safety
/// `report` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_report_tree(report: *const TrepacReport, out: *mut *mut TrepacTree) -> TrepacStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let report = handle(report, "report")?;
        *out = Box::into_raw(Box::new(TrepacTree {
            doc: report.tree.clone(),
        }));
        Ok(())
    })
}

/// Training misclassifications and training-set size.
///
/// # Safety
/// `report` must be NULL or a live handle; outputs must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_report_training(
    report: *const TrepacReport,
    misclassified: *mut usize,
    training_size: *mut usize,
) -> TrepacStatus {
    guard(|| {
        let report = handle(report, "report")?;
        *out_arg(misclassified, "misclassified")? = report.training_misclassified;
        *out_arg(training_size, "training_size")? = report.training_size;
        Ok(())
    })
}

/// Why the loop stopped, and whether the queue was empty at that point.
///
/// # Safety
/// `report` must be NULL or a live handle; outputs must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn trepac_report_termination(
    report: *const TrepacReport,
    reason: *mut TrepacTermination,
    queue_exhausted: *mut bool,
) -> TrepacStatus {
    guard(|| {
        let report = handle(report, "report")?;
        *out_arg(reason, "reason")? = report.termination;
        *out_arg(queue_exhausted, "queue_exhausted")? = report.queue_exhausted;
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trepac_report_free(report: *mut TrepacReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

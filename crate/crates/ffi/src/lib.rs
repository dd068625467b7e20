//! C ABI over the linkgraph library.
//!
//! Every fallible call returns an [`LgStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`lg_last_error`]. Handles are opaque and must be released with their
//! matching `*_free` function; strings returned by the library are released
//! with [`lg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use linkgraph::graph::{build_graph, metrics_report, IssueGraph, Slice};
use linkgraph::ingest::{load_repository, Repository};
use linkgraph::pipeline::{load_taxonomy, run_pipeline, PipelineConfig};
use linkgraph::taxonomy::{LinkCategory, LinkTaxonomy};
use linkgraph::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Integrity = 5,
    UnknownType = 6,
    InvalidSlice = 7,
    Undefined = 8,
    Config = 9,
    InsufficientData = 10,
    /// A pipeline stage failed; the partial manifest was still written.
    StageFailed = 11,
    Other = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgCategory {
    Relation = 0,
    Duplication = 1,
    Composition = 2,
    TemporalCausal = 3,
    Workflow = 4,
}

impl From<LinkCategory> for LgCategory {
    fn from(c: LinkCategory) -> Self {
        match c {
            LinkCategory::Relation => LgCategory::Relation,
            LinkCategory::Duplication => LgCategory::Duplication,
            LinkCategory::Composition => LgCategory::Composition,
            LinkCategory::TemporalCausal => LgCategory::TemporalCausal,
            LinkCategory::Workflow => LgCategory::Workflow,
        }
    }
}

/// Graph metrics. A `has_*` flag of `false` means the metric is undefined
/// and the value field is NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgMetrics {
    pub pct_isolated: f64,
    pub has_pct_isolated: bool,
    pub pct_2comp: f64,
    pub has_pct_2comp: bool,
    pub pct_3comp_plus: f64,
    pub has_pct_3comp_plus: bool,
    pub avg_density: f64,
    pub has_avg_density: bool,
    pub pct_trees: f64,
    pub has_pct_trees: bool,
    pub pct_stars: f64,
    pub has_pct_stars: bool,
    pub assortativity: f64,
    pub has_assortativity: bool,
    pub transitivity: f64,
}

pub struct LgRepository {
    inner: Repository,
}

pub struct LgTaxonomy {
    inner: LinkTaxonomy,
}

pub struct LgGraph {
    inner: IssueGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => LgStatus::Io,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => LgStatus::Parse,
            Error::Integrity(_) => LgStatus::Integrity,
            Error::UnknownType(_) => LgStatus::UnknownType,
            Error::InvalidSlice(_) => LgStatus::InvalidSlice,
            Error::Undefined(_) => LgStatus::Undefined,
            Error::Config(_) => LgStatus::Config,
            Error::InsufficientData(_)
            | Error::Exhausted { .. }
            | Error::SplitTolerance { .. }
            | Error::EmptyVocabulary => LgStatus::InsufficientData,
            _ => LgStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            set_last_error(&format!("internal panic: {msg}"));
            LgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LgStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(LgStatus::Other, "string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a repository export without cleaning it.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_repository_load(path: *const c_char, out: *mut *mut LgRepository) -> LgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let repo = load_repository(path, "")?;
        write_out(out, Box::into_raw(Box::new(LgRepository { inner: repo })), "out")
    })
}

/// Parses a repository export held in memory.
///
/// # Safety
/// `json` and `name` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_repository_from_json(
    json: *const c_char,
    name: *const c_char,
    out: *mut *mut LgRepository,
) -> LgStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let name = str_arg(name, "name")?;
        let repo = Repository::from_json_str(text, name)?;
        write_out(out, Box::into_raw(Box::new(LgRepository { inner: repo })), "out")
    })
}

/// Applies the cleaning rules in place.
///
/// # Safety
/// `repo` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_repository_clean(repo: *mut LgRepository) -> LgStatus {
    guard(|| {
        let repo = repo.as_mut().ok_or_else(|| null("repo"))?;
        repo.inner = repo.inner.clone().clean();
        Ok(())
    })
}

/// # Safety
/// `repo` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_repository_counts(
    repo: *const LgRepository,
    issues: *mut usize,
    links: *mut usize,
) -> LgStatus {
    guard(|| {
        let repo = ref_arg(repo, "repo")?;
        write_out(issues, repo.inner.issues.len(), "issues")?;
        write_out(links, repo.inner.links.len(), "links")
    })
}

/// Share of issues incident to at least one link.
///
/// # Safety
/// `repo` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_repository_coverage(repo: *const LgRepository, out: *mut f64) -> LgStatus {
    guard(|| {
        let repo = ref_arg(repo, "repo")?;
        write_out(out, repo.inner.coverage()?, "out")
    })
}

/// Cleaning report as JSON; free the string with [`lg_string_free`].
///
/// # Safety
/// `repo` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_repository_cleaning_report_json(
    repo: *const LgRepository,
    out: *mut *mut c_char,
) -> LgStatus {
    guard(|| {
        let repo = ref_arg(repo, "repo")?;
        let text = serde_json::to_string(&repo.inner.cleaning_report).map_err(Error::from)?;
        write_out(out, to_c_string(text)?, "out")
    })
}

/// # Safety
/// `repo` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_repository_free(repo: *mut LgRepository) {
    if !repo.is_null() {
        drop(Box::from_raw(repo));
    }
}

/// The bundled 30-type taxonomy. Unknown types are errors.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_taxonomy_bundled(out: *mut *mut LgTaxonomy) -> LgStatus {
    guard(|| write_out(out, Box::into_raw(Box::new(LgTaxonomy { inner: LinkTaxonomy::bundled() })), "out"))
}

/// Loads a taxonomy file, or the bundled one when `path` is NULL. With
/// `fallback_relation`, unknown types map to the Relation category.
///
/// # Safety
/// `path` must be NULL or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_taxonomy_load(
    path: *const c_char,
    fallback_relation: bool,
    out: *mut *mut LgTaxonomy,
) -> LgStatus {
    guard(|| {
        let path = if path.is_null() { None } else { Some(Path::new(str_arg(path, "path")?)) };
        let taxonomy = load_taxonomy(path, fallback_relation)?;
        write_out(out, Box::into_raw(Box::new(LgTaxonomy { inner: taxonomy })), "out")
    })
}

/// Canonical type name of a raw link type; free it with [`lg_string_free`].
///
/// # Safety
/// `taxonomy` must be a live handle, `raw` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lg_taxonomy_normalize(
    taxonomy: *const LgTaxonomy,
    raw: *const c_char,
    out: *mut *mut c_char,
) -> LgStatus {
    guard(|| {
        let taxonomy = ref_arg(taxonomy, "taxonomy")?;
        let canonical = taxonomy.inner.normalize_type(str_arg(raw, "raw")?)?;
        write_out(out, to_c_string(canonical)?, "out")
    })
}

/// Category of a raw link type.
///
/// # Safety
/// `taxonomy` must be a live handle, `raw` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lg_taxonomy_categorize(
    taxonomy: *const LgTaxonomy,
    raw: *const c_char,
    out: *mut LgCategory,
) -> LgStatus {
    guard(|| {
        let taxonomy = ref_arg(taxonomy, "taxonomy")?;
        let (_, category) = taxonomy.inner.classify(str_arg(raw, "raw")?)?;
        write_out(out, category.into(), "out")
    })
}

/// # Safety
/// `taxonomy` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_taxonomy_free(taxonomy: *mut LgTaxonomy) {
    if !taxonomy.is_null() {
        drop(Box::from_raw(taxonomy));
    }
}

/// Builds the issue graph of a slice: `all`, `type:<name>` or
/// `category:<name>`.
///
/// # Safety
/// `repo` and `taxonomy` must be live handles, `slice` a NUL-terminated
/// string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_build(
    repo: *const LgRepository,
    taxonomy: *const LgTaxonomy,
    slice: *const c_char,
    out: *mut *mut LgGraph,
) -> LgStatus {
    guard(|| {
        let repo = ref_arg(repo, "repo")?;
        let taxonomy = ref_arg(taxonomy, "taxonomy")?;
        let slice: Slice = str_arg(slice, "slice")?.parse()?;
        let g = build_graph(&repo.inner, &taxonomy.inner, &slice)?;
        write_out(out, Box::into_raw(Box::new(LgGraph { inner: g })), "out")
    })
}

/// # Safety
/// `graph` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_size(graph: *const LgGraph, vertices: *mut usize, edges: *mut usize) -> LgStatus {
    guard(|| {
        let g = ref_arg(graph, "graph")?;
        write_out(vertices, g.inner.vertex_count(), "vertices")?;
        write_out(edges, g.inner.edge_count(), "edges")
    })
}

fn split(v: Option<f64>) -> (f64, bool) {
    v.map_or((f64::NAN, false), |x| (x, true))
}

/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_metrics(graph: *const LgGraph, out: *mut LgMetrics) -> LgStatus {
    guard(|| {
        let r = metrics_report(&ref_arg(graph, "graph")?.inner);
        let (pct_isolated, has_pct_isolated) = split(r.pct_isolated);
        let (pct_2comp, has_pct_2comp) = split(r.pct_2comp);
        let (pct_3comp_plus, has_pct_3comp_plus) = split(r.pct_3comp_plus);
        let (avg_density, has_avg_density) = split(r.avg_density);
        let (pct_trees, has_pct_trees) = split(r.pct_trees);
        let (pct_stars, has_pct_stars) = split(r.pct_stars);
        let (assortativity, has_assortativity) = split(r.assortativity);
        let m = LgMetrics {
            pct_isolated,
            has_pct_isolated,
            pct_2comp,
            has_pct_2comp,
            pct_3comp_plus,
            has_pct_3comp_plus,
            avg_density,
            has_avg_density,
            pct_trees,
            has_pct_trees,
            pct_stars,
            has_pct_stars,
            assortativity,
            has_assortativity,
            transitivity: r.transitivity,
        };
        write_out(out, m, "out")
    })
}

/// Metrics as a JSON object, undefined values as `null`; free it with
/// [`lg_string_free`].
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_metrics_json(graph: *const LgGraph, out: *mut *mut c_char) -> LgStatus {
    guard(|| {
        let r = metrics_report(&ref_arg(graph, "graph")?.inner);
        let text = serde_json::to_string(&r).map_err(Error::from)?;
        write_out(out, to_c_string(text)?, "out")
    })
}

/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_free(graph: *mut LgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Runs the whole pipeline for a JSON config file. On success or stage
/// failure `manifest_path` (if not NULL) receives the manifest location; free
/// it with [`lg_string_free`]. A stage failure returns
/// [`LgStatus::StageFailed`] and keeps the partial manifest.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `manifest_path` must be
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lg_pipeline_run(config_path: *const c_char, manifest_path: *mut *mut c_char) -> LgStatus {
    guard(|| {
        let cfg = PipelineConfig::load(Path::new(str_arg(config_path, "config_path")?))?;
        let outcome = run_pipeline(&cfg)?;
        if !manifest_path.is_null() {
            let path = to_c_string(outcome.manifest_path.display().to_string())?;
            manifest_path.write(path);
        }
        match outcome.failure {
            None => Ok(()),
            Some(e) => Err(Failure(LgStatus::StageFailed, e.to_string())),
        }
    })
}

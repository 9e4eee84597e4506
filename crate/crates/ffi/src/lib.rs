//! C ABI for dynares-core.
//!
//! Every function returns a [`DynaresStatus`]; on failure a message is
//! available from [`dynares_last_error`] on the calling thread. Graphs and
//! training runs are opaque handles released with their `_free` functions.
//! Panics never cross the boundary; they surface as `DYNARES_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dynares_core::metrics::{self, MetricReport};
use dynares_core::{
    train, train_free_variable_baseline, Cover, Error, Graph, LossMode, ModelConfig, NodeFeatures, RunResult,
    TrainConfig,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynaresStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Io = 3,
    Parse = 4,
    EmptyEdgeSet = 5,
    EmptyCover = 6,
    /// Training diverged or produced a non-finite value.
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

impl From<&Error> for DynaresStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => DynaresStatus::Io,
            Error::Parse { .. } | Error::Json(_) => DynaresStatus::Parse,
            Error::EmptyEdgeSet => DynaresStatus::EmptyEdgeSet,
            Error::EmptyCover => DynaresStatus::EmptyCover,
            e if e.is_numerical() => DynaresStatus::Numerical,
            _ => DynaresStatus::InvalidInput,
        }
    }
}

/// An undirected simple graph.
pub struct DynaresGraph {
    inner: Graph,
}

/// The outcome of one training run.
pub struct DynaresRun {
    inner: RunResult,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DynaresTrainOptions {
    pub depth: usize,
    pub width: usize,
    pub k: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Exact balanced loss instead of the sampled estimate.
    pub balanced_loss: bool,
    pub edge_batch: usize,
    pub nonedge_batch: usize,
    pub batch_norm: bool,
    pub resample_per_epoch: bool,
    /// Optimize F directly; depth, width and batch_norm are ignored.
    pub free_variable: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DynaresMetrics {
    pub conductance: f64,
    pub coverage: f64,
    pub density: f64,
    pub clustering_coefficient: f64,
    /// Valid only when `has_nmi` is set.
    pub nmi: f64,
    pub has_nmi: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DynaresTTest {
    pub t: f64,
    pub df: usize,
    pub critical: f64,
    pub significant: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(DynaresStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DynaresStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> DynaresStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            DynaresStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            DynaresStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dynares_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or "" after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn dynares_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a graph on nodes `0..n` from `m` pairs stored as
/// `edges[2i], edges[2i + 1]`. Self-loops are dropped, duplicates collapsed.
///
/// # Safety
/// `edges` must point to `2 * m` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_graph_from_edges(
    n: usize,
    edges: *const usize,
    m: usize,
    out: *mut *mut DynaresGraph,
) -> DynaresStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let flat = slice(edges, 2 * m, "edges")?;
        let g = Graph::from_edges(n, flat.chunks_exact(2).map(|p| (p[0], p[1])))?;
        *out = Box::into_raw(Box::new(DynaresGraph { inner: g }));
        Ok(())
    })
}

/// Loads a whitespace-separated edge list. Node ids are numbered in order
/// of first appearance.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_graph_load(path: *const c_char, out: *mut *mut DynaresGraph) -> DynaresStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Failure(DynaresStatus::InvalidInput, format!("path is not UTF-8: {e}")))?;
        let (g, _) = Graph::load_edge_list(path)?;
        *out = Box::into_raw(Box::new(DynaresGraph { inner: g }));
        Ok(())
    })
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dynares_graph_num_nodes(graph: *const DynaresGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.n())
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dynares_graph_num_edges(graph: *const DynaresGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.num_edges())
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dynares_graph_free(graph: *mut DynaresGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Library defaults for `k` communities.
#[no_mangle]
pub extern "C" fn dynares_train_options_default(k: usize) -> DynaresTrainOptions {
    let t = TrainConfig::default();
    DynaresTrainOptions {
        depth: 3,
        width: 32,
        k,
        max_epochs: t.max_epochs,
        patience: t.patience,
        lr: t.lr,
        weight_decay: t.weight_decay,
        seed: t.seed,
        balanced_loss: false,
        edge_batch: LossMode::DEFAULT_BATCH,
        nonedge_batch: LossMode::DEFAULT_BATCH,
        batch_norm: true,
        resample_per_epoch: false,
        free_variable: false,
    }
}

/// Trains on `graph` with identity node features.
///
/// # Safety
/// `graph` and `options` must be live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_train(
    graph: *const DynaresGraph,
    options: *const DynaresTrainOptions,
    out: *mut *mut DynaresRun,
) -> DynaresStatus {
    guard(|| {
        let g = &graph.as_ref().ok_or_else(|| null("graph"))?.inner;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = TrainConfig {
            lr: o.lr,
            weight_decay: o.weight_decay,
            max_epochs: o.max_epochs,
            patience: o.patience,
            loss: if o.balanced_loss {
                LossMode::Balanced
            } else {
                LossMode::Stochastic {
                    edge_batch: o.edge_batch,
                    nonedge_batch: o.nonedge_batch,
                }
            },
            seed: o.seed,
            resample_per_epoch: o.resample_per_epoch,
            ..TrainConfig::default()
        };
        let run = if o.free_variable {
            train_free_variable_baseline(g, &cfg, o.k)?
        } else {
            let mcfg = ModelConfig {
                use_batch_norm: o.batch_norm,
                ..ModelConfig::new(o.depth, o.width, o.k)
            };
            train(g, &NodeFeatures::identity(g.n()), &cfg, &mcfg)?
        };
        *out = Box::into_raw(Box::new(DynaresRun { inner: run }));
        Ok(())
    })
}

/// Writes the affiliation matrix dimensions.
///
/// # Safety
/// `run` must be live; `n` and `k` writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_run_shape(run: *const DynaresRun, n: *mut usize, k: *mut usize) -> DynaresStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| null("run"))?.inner;
        if n.is_null() || k.is_null() {
            return Err(null("n or k"));
        }
        *n = r.affiliations.n();
        *k = r.affiliations.k();
        Ok(())
    })
}

/// Copies F, row-major, into `out` which holds `len >= n * k` doubles.
///
/// # Safety
/// `run` must be live and `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dynares_run_affiliations(run: *const DynaresRun, out: *mut f64, len: usize) -> DynaresStatus {
    guard(|| {
        let f = run.as_ref().ok_or_else(|| null("run"))?.inner.affiliations.values();
        if len < f.len() {
            return Err(Failure(
                DynaresStatus::BufferTooSmall,
                format!("need {} values, buffer holds {len}", f.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, f.len());
        for (d, s) in dst.iter_mut().zip(f.iter()) {
            *d = *s;
        }
        Ok(())
    })
}

/// Best loss reached, and the number of epochs run.
///
/// # Safety
/// `run` must be live; `best_loss` and `epochs` writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_run_loss(
    run: *const DynaresRun,
    best_loss: *mut f64,
    epochs: *mut usize,
) -> DynaresStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| null("run"))?.inner;
        if best_loss.is_null() || epochs.is_null() {
            return Err(null("best_loss or epochs"));
        }
        *best_loss = r.best_loss;
        *epochs = r.trace.len();
        Ok(())
    })
}

unsafe fn cover_from_membership(m: *const u8, n: usize, k: usize, what: &str) -> Result<Cover, Failure> {
    let b = slice(m, n * k, what)?;
    let communities = (0..k)
        .map(|c| (0..n).filter(|&u| b[u * k + c] != 0).collect())
        .collect();
    Ok(Cover::new(n, communities)?)
}

fn fill_metrics(report: &MetricReport, out: &mut DynaresMetrics) {
    *out = DynaresMetrics {
        conductance: report.conductance,
        coverage: report.coverage,
        density: report.density,
        clustering_coefficient: report.clustering_coefficient,
        nmi: report.nmi.unwrap_or(f64::NAN),
        has_nmi: report.nmi.is_some(),
    };
}

/// Thresholds the run's F at `threshold` and scores the cover on `graph`.
/// When `truth` is non-null it is an `n × truth_k` row-major 0/1 membership
/// matrix and NMI is reported.
///
/// # Safety
/// `run` and `graph` must be live, `truth` null or holding `n * truth_k`
/// bytes, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_run_metrics(
    run: *const DynaresRun,
    graph: *const DynaresGraph,
    threshold: f64,
    truth: *const u8,
    truth_k: usize,
    out: *mut DynaresMetrics,
) -> DynaresStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| null("run"))?.inner;
        let g = &graph.as_ref().ok_or_else(|| null("graph"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let truth = if truth.is_null() {
            None
        } else {
            Some(cover_from_membership(truth, g.n(), truth_k, "truth")?)
        };
        let cover = r.affiliations.threshold(threshold)?;
        fill_metrics(&metrics::evaluate(g, &cover, truth.as_ref())?, out);
        Ok(())
    })
}

/// Overlapping NMI of two covers over `n` nodes, each given as a row-major
/// 0/1 membership matrix (`n × ka` and `n × kb`).
///
/// # Safety
/// `a` must hold `n * ka` bytes, `b` `n * kb` bytes, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_nmi(
    n: usize,
    a: *const u8,
    ka: usize,
    b: *const u8,
    kb: usize,
    out: *mut f64,
) -> DynaresStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ca = cover_from_membership(a, n, ka, "a")?;
        let cb = cover_from_membership(b, n, kb, "b")?;
        *out = metrics::overlapping_nmi(&ca, &cb)?;
        Ok(())
    })
}

/// Two-sample t-test from `(mean, se, n)` summaries at α = 0.05.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dynares_t_test(
    mean1: f64,
    se1: f64,
    n1: usize,
    mean2: f64,
    se2: f64,
    n2: usize,
    out: *mut DynaresTTest,
) -> DynaresStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = metrics::t_test(mean1, se1, n1, mean2, se2, n2)?;
        *out = DynaresTTest {
            t: r.t,
            df: r.df,
            critical: r.critical,
            significant: r.significant,
        };
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dynares_run_free(run: *mut DynaresRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

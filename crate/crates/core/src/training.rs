//! Training loop, free-variable baseline and grid search.

use std::time::Instant;

use ndarray::Array2;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_graph, build_layer_plan, LayerPlan};
use crate::encoder::{init_model, Mode, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::graph::{AffiliationMatrix, Cover, Graph, NodeFeatures};
use crate::loss::{loss_with_grad, LossMode, LossReport};
use crate::metrics::{self, MetricReport};
use crate::optim::{adam_step, Adam, AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Improvement smaller than this does not reset the patience counter.
    pub min_delta: f64,
    pub loss: LossMode,
    pub seed: u64,
    /// Redraw the layer plan every epoch instead of once per run.
    pub resample_per_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            weight_decay: 1e-2,
            max_epochs: 500,
            patience: 50,
            min_delta: 1e-4,
            loss: LossMode::stochastic(),
            seed: 0,
            resample_per_epoch: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidInput(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::InvalidInput("weight decay must be nonnegative".into()));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidInput("max epochs and patience must be at least 1".into()));
        }
        if let LossMode::Stochastic { edge_batch, nonedge_batch } = self.loss {
            if edge_batch == 0 || nonedge_batch == 0 {
                return Err(Error::InvalidInput("batch sizes must be at least 1".into()));
            }
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent seeds for every random stream of a run, derived from the run
/// seed so that one number reproduces the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub run: u64,
    pub augment: u64,
    pub plan: u64,
    pub model: u64,
    pub loss: u64,
}

impl RunSeeds {
    pub fn derive(run: u64) -> Self {
        let s = |tag: u64| splitmix64(run ^ splitmix64(tag));
        RunSeeds {
            run,
            augment: s(1),
            plan: s(2),
            model: s(3),
            loss: s(4),
        }
    }

    fn plan_for_epoch(&self, epoch: usize) -> u64 {
        if epoch == 0 {
            self.plan
        } else {
            splitmix64(self.plan ^ splitmix64(epoch as u64 + 0x100))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub edge_term: f64,
    pub nonedge_term: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// `None` for the free-variable baseline.
    pub model: Option<Model>,
    /// The layer operators the returned model was evaluated with.
    pub plan: Option<LayerPlan>,
    pub affiliations: AffiliationMatrix,
    pub trace: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub stopped_early: bool,
    pub seeds: RunSeeds,
    pub wall_ms: f64,
    pub threshold: Option<f64>,
    pub metrics: Option<MetricReport>,
}

impl RunResult {
    /// Thresholds the affiliations and records the resulting metrics.
    pub fn evaluate(&mut self, g: &Graph, tau: f64, truth: Option<&Cover>) -> Result<&MetricReport> {
        let cover = self.affiliations.threshold(tau)?;
        let report = metrics::evaluate(g, &cover, truth)?;
        self.threshold = Some(tau);
        Ok(self.metrics.insert(report))
    }

    pub fn initial_loss(&self) -> f64 {
        self.trace.first().map_or(f64::NAN, |e| e.loss)
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Keeps the best state seen and decides when progress has stalled.
struct EarlyStopping {
    best: f64,
    best_epoch: usize,
    reference: f64,
    stale: usize,
    patience: usize,
    min_delta: f64,
}

impl EarlyStopping {
    fn new(cfg: &TrainConfig) -> Self {
        EarlyStopping {
            best: f64::INFINITY,
            best_epoch: 0,
            reference: f64::INFINITY,
            stale: 0,
            patience: cfg.patience,
            min_delta: cfg.min_delta,
        }
    }

    /// Returns whether `loss` is a new best.
    fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        let improved = loss < self.best;
        if improved {
            self.best = loss;
            self.best_epoch = epoch;
        }
        if loss < self.reference - self.min_delta {
            self.reference = loss;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        improved
    }

    fn exhausted(&self) -> bool {
        self.stale >= self.patience
    }
}

fn check_loss(report: LossReport, epoch: usize) -> Result<LossReport> {
    if report.value.is_finite() {
        Ok(report)
    } else {
        Err(Error::Diverged {
            epoch,
            loss: report.value,
        })
    }
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite { .. } => Error::Diverged {
            epoch,
            loss: f64::NAN,
        },
        other => other,
    }
}

/// Augments once, builds the layer plan once (or per epoch when
/// `resample_per_epoch` is set), then runs forward → loss → backward → Adam
/// until `max_epochs` or early stopping. Returns the best-loss state.
///
/// All randomness derives from `cfg.seed`; `mcfg.seed` is replaced by the
/// derived model seed.
pub fn train(g: &Graph, x: &NodeFeatures, cfg: &TrainConfig, mcfg: &ModelConfig) -> Result<RunResult> {
    cfg.validate()?;
    mcfg.validate()?;
    if g.num_edges() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    if x.rows() != g.n() {
        return Err(Error::Shape(format!("{} feature rows for {} nodes", x.rows(), g.n())));
    }
    let start = Instant::now();
    let seeds = RunSeeds::derive(cfg.seed);
    let aug = augment_graph(g, seeds.augment);
    let mut plan = build_layer_plan(g, &aug, mcfg.depth, seeds.plan)?;
    let mcfg = ModelConfig {
        seed: seeds.model,
        use_features: !x.is_identity(),
        ..mcfg.clone()
    };
    let mut model = init_model(&mcfg, x.dim())?;
    let sizes: Vec<usize> = model.param_slices_mut().iter().map(|(p, _)| p.len()).collect();
    let mut opt = Adam::new(cfg.adam(), &sizes);
    let mut loss_rng = ChaCha8Rng::seed_from_u64(seeds.loss);

    let mut stopper = EarlyStopping::new(cfg);
    let mut best_model = model.clone();
    let mut best_plan: Option<LayerPlan> = None;
    let mut trace = Vec::new();
    let mut stopped_early = false;
    for epoch in 0..cfg.max_epochs {
        if cfg.resample_per_epoch && epoch > 0 {
            plan = build_layer_plan(g, &aug, mcfg.depth, seeds.plan_for_epoch(epoch))?;
        }
        let (f, tape) = model.forward(&plan, x, Mode::Train).map_err(diverged(epoch))?;
        let (report, d_f) = loss_with_grad(g, f.view(), cfg.loss, &mut loss_rng).map_err(diverged(epoch))?;
        let report = check_loss(report, epoch)?;
        trace.push(EpochLog {
            epoch,
            loss: report.value,
            edge_term: report.edge_term,
            nonedge_term: report.nonedge_term,
            wall_ms: elapsed_ms(start),
        });
        if stopper.observe(epoch, report.value) {
            best_model = model.clone();
            if cfg.resample_per_epoch {
                best_plan = Some(plan.clone());
            }
        }
        let grads = model.backward(&plan, x, &tape, d_f.view()).map_err(diverged(epoch))?;
        model.update_running_statistics(&tape, g.n());
        opt.step(model.param_slices_mut(), &grads.slices()).map_err(diverged(epoch))?;
        if stopper.exhausted() {
            stopped_early = true;
            break;
        }
    }

    let plan = best_plan.unwrap_or(plan);
    best_model.freeze_norm_statistics(&plan, x)?;
    let f = best_model.affiliations(&plan, x)?;
    Ok(RunResult {
        affiliations: AffiliationMatrix::with_ids(f, g.node_ids().to_vec())?,
        model: Some(best_model),
        plan: Some(plan),
        trace,
        best_epoch: stopper.best_epoch,
        best_loss: stopper.best,
        stopped_early,
        seeds,
        wall_ms: elapsed_ms(start),
        threshold: None,
        metrics: None,
    })
}

/// Optimizes `F` directly (projected onto `F ≥ 0` after every step) under the
/// same loss and optimizer. Entries start uniform in `[0, 1)`.
pub fn train_free_variable_baseline(g: &Graph, cfg: &TrainConfig, k: usize) -> Result<RunResult> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if g.num_edges() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let start = Instant::now();
    let seeds = RunSeeds::derive(cfg.seed);
    let mut init_rng = ChaCha8Rng::seed_from_u64(seeds.model);
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let mut f = Array2::from_shape_simple_fn((g.n(), k), || unit.sample(&mut init_rng));
    let mut state = AdamState::new(f.len());
    let adam = cfg.adam();
    let mut loss_rng = ChaCha8Rng::seed_from_u64(seeds.loss);

    let mut stopper = EarlyStopping::new(cfg);
    let mut best_f = f.clone();
    let mut trace = Vec::new();
    let mut stopped_early = false;
    for epoch in 0..cfg.max_epochs {
        let (report, grad) = loss_with_grad(g, f.view(), cfg.loss, &mut loss_rng).map_err(diverged(epoch))?;
        let report = check_loss(report, epoch)?;
        trace.push(EpochLog {
            epoch,
            loss: report.value,
            edge_term: report.edge_term,
            nonedge_term: report.nonedge_term,
            wall_ms: elapsed_ms(start),
        });
        if stopper.observe(epoch, report.value) {
            best_f.assign(&f);
        }
        adam_step(
            f.as_slice_mut().expect("standard layout"),
            grad.as_slice().expect("standard layout"),
            &mut state,
            &adam,
            adam.weight_decay,
        )
        .map_err(diverged(epoch))?;
        project_nonnegative(&mut f);
        if stopper.exhausted() {
            stopped_early = true;
            break;
        }
    }
    Ok(RunResult {
        model: None,
        plan: None,
        affiliations: AffiliationMatrix::with_ids(best_f, g.node_ids().to_vec())?,
        trace,
        best_epoch: stopper.best_epoch,
        best_loss: stopper.best,
        stopped_early,
        seeds,
        wall_ms: elapsed_ms(start),
        threshold: None,
        metrics: None,
    })
}

/// Clamps negative entries to zero.
pub fn project_nonnegative(f: &mut Array2<f64>) {
    f.mapv_inplace(|v| v.max(0.0));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub restarts: usize,
}

impl GridSpec {
    pub const SMALL_DEPTHS: [usize; 6] = [2, 3, 5, 7, 10, 15];
    pub const THRESHOLDS: [f64; 8] = [0.05, 0.10, 0.125, 0.20, 0.30, 0.35, 0.40, 0.50];
    pub const WIDTHS: [usize; 4] = [16, 32, 64, 128];
    pub const RESTARTS: usize = 50;

    /// Depths 10, 20, ..., 90 used for the topic network.
    pub fn topic_depths() -> Vec<usize> {
        (1..=9).map(|i| 10 * i).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() || self.widths.is_empty() || self.thresholds.is_empty() {
            return Err(Error::InvalidInput("grid sets must be non-empty".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("restarts must be at least 1".into()));
        }
        if let Some(t) = self.thresholds.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidInput(format!("threshold {t} outside (0, 1]")));
        }
        if self.depths.contains(&0) || self.widths.contains(&0) {
            return Err(Error::InvalidInput("depths and widths must be positive".into()));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            depths: Self::SMALL_DEPTHS.to_vec(),
            widths: Self::WIDTHS.to_vec(),
            thresholds: Self::THRESHOLDS.to_vec(),
            restarts: Self::RESTARTS,
        }
    }
}

/// What a grid cell is scored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Overlapping NMI against ground truth; higher is better.
    Nmi,
    /// Average conductance; lower is better.
    Conductance,
}

impl SelectionMetric {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            SelectionMetric::Nmi => a > b,
            SelectionMetric::Conductance => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub depth: usize,
    pub width: usize,
    pub threshold: f64,
    pub seed: u64,
    pub metric: f64,
    pub loss: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub depth: usize,
    pub width: usize,
    pub threshold: f64,
    pub mean: f64,
    pub std_error: f64,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub metric: SelectionMetric,
    pub rows: Vec<GridRow>,
    pub cells: Vec<CellSummary>,
    pub best: CellSummary,
    /// The best restart of the best cell, retrained and evaluated at the
    /// selected threshold.
    pub best_run: RunResult,
    pub training_runs: usize,
}

impl GridResult {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "depth,width,threshold,seed,metric,loss,wall_ms")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.3}",
                r.depth, r.width, r.threshold, r.seed, r.metric, r.loss, r.wall_ms
            )?;
        }
        Ok(())
    }
}

/// Score of one thresholded cover. Empty covers get the worst value.
fn score(g: &Graph, f: &AffiliationMatrix, tau: f64, truth: Option<&Cover>) -> Result<f64> {
    let cover = f.threshold(tau)?;
    if cover.is_empty() {
        return Ok(if truth.is_some() { 0.0 } else { 1.0 });
    }
    match truth {
        Some(t) => metrics::overlapping_nmi(&cover, t),
        None => metrics::conductance(g, &cover),
    }
}

/// Trains every `(depth, width)` cell `restarts` times (run seeds
/// `cfg.seed + r`), scores every threshold on each resulting `F`, and
/// selects the cell with the best mean score. Runs execute on `workers`
/// threads; results do not depend on the worker count.
pub fn grid_search(
    g: &Graph,
    x: &NodeFeatures,
    grid: &GridSpec,
    cfg: &TrainConfig,
    base: &ModelConfig,
    truth: Option<&Cover>,
    workers: usize,
) -> Result<GridResult> {
    grid.validate()?;
    cfg.validate()?;
    let metric = if truth.is_some() {
        SelectionMetric::Nmi
    } else {
        SelectionMetric::Conductance
    };
    let jobs: Vec<(usize, usize, u64)> = grid
        .depths
        .iter()
        .flat_map(|&d| {
            grid.widths.iter().flat_map(move |&w| {
                (0..grid.restarts as u64).map(move |r| (d, w, cfg.seed.wrapping_add(r)))
            })
        })
        .collect();
    let run_one = |&(depth, width, seed): &(usize, usize, u64)| -> Result<Vec<GridRow>> {
        let run = train(
            g,
            x,
            &TrainConfig { seed, ..cfg.clone() },
            &ModelConfig {
                depth,
                width,
                ..base.clone()
            },
        )?;
        grid.thresholds
            .iter()
            .map(|&threshold| {
                Ok(GridRow {
                    depth,
                    width,
                    threshold,
                    seed,
                    metric: score(g, &run.affiliations, threshold, truth)?,
                    loss: run.best_loss,
                    wall_ms: run.wall_ms,
                })
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let per_job: Vec<Result<Vec<GridRow>>> = pool.install(|| jobs.par_iter().map(run_one).collect());
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }

    let mut cells: Vec<CellSummary> = Vec::new();
    for &depth in &grid.depths {
        for &width in &grid.widths {
            for &threshold in &grid.thresholds {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.depth == depth && r.width == width && r.threshold == threshold)
                    .map(|r| r.metric)
                    .collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let std_error = if vals.len() > 1 {
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    (var / n).sqrt()
                } else {
                    0.0
                };
                cells.push(CellSummary {
                    depth,
                    width,
                    threshold,
                    mean,
                    std_error,
                    runs: vals.len(),
                });
            }
        }
    }
    let best = cells
        .iter()
        .skip(1)
        .fold(&cells[0], |acc, c| if metric.better(c.mean, acc.mean) { c } else { acc })
        .clone();

    let best_seed = rows
        .iter()
        .filter(|r| r.depth == best.depth && r.width == best.width && r.threshold == best.threshold)
        .fold(None::<&GridRow>, |acc, r| match acc {
            Some(a) if !metric.better(r.metric, a.metric) => Some(a),
            _ => Some(r),
        })
        .map(|r| r.seed)
        .expect("best cell has runs");
    let mut best_run = train(
        g,
        x,
        &TrainConfig {
            seed: best_seed,
            ..cfg.clone()
        },
        &ModelConfig {
            depth: best.depth,
            width: best.width,
            ..base.clone()
        },
    )?;
    best_run.threshold = Some(best.threshold);
    let cover = best_run.affiliations.threshold(best.threshold)?;
    if !cover.is_empty() {
        best_run.metrics = Some(metrics::evaluate(g, &cover, truth)?);
    }

    Ok(GridResult {
        metric,
        rows,
        cells,
        best,
        best_run,
        training_runs: jobs.len(),
    })
}

mod config;
mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dynares_core::encoder::Checkpoint;
use dynares_core::metrics;
use dynares_core::training::{GridResult, GridSpec};
use dynares_core::{
    grid_search, layer_plan_stats, train, train_free_variable_baseline, AffiliationMatrix, Cover, Error, Graph,
    LossMode, ModelConfig, NodeFeatures, NormPlacement, Result, RunResult, TrainConfig,
};

use manifest::{Output, RunManifest};

const OUT_ENV: &str = "DYNARES_OUT";

#[derive(Parser)]
#[command(name = "dynares", version, about = "Overlapping community detection with deep residual GCNs")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write its affiliations, cover and metrics.
    Train(TrainFlags),
    /// Train every depth × width cell with several restarts and pick the best.
    Gridsearch(GridFlags),
    /// Score a cover, or thresholded affiliations, on a graph.
    Eval(EvalFlags),
    /// Normalized community-overlap matrix for an ordered list of nodes.
    Heatmap(HeatmapFlags),
    /// Two-sample t-test from (mean, se, n) triples or raw sample files.
    Ttest(TTestFlags),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayFlags),
}

#[derive(Args, Clone)]
struct Common {
    /// Settings file: a JSON object or key=value lines. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $DYNARES_OUT, else ./dynares-out].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LossKind {
    Balanced,
    #[default]
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NormKind {
    Pre,
    #[default]
    Post,
}

#[derive(Args, Serialize)]
struct RunFlags {
    /// Edge list: one whitespace-separated pair of node ids per line.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Node features CSV (`node_id,x1,...`); identity features if absent.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Ground-truth cover (`node_id label...` lines) for NMI.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Number of communities.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long, value_enum)]
    loss: Option<LossKind>,
    #[arg(long)]
    edge_batch: Option<usize>,
    #[arg(long)]
    nonedge_batch: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    batch_norm: Option<bool>,
    /// Batch normalization before (`pre`) or after (`post`) the hidden ReLU.
    #[arg(long, value_enum)]
    norm: Option<NormKind>,
    /// Draw new layer operators every epoch instead of once per run.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    resample_per_epoch: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct RunSettings {
    edges: PathBuf,
    features: Option<PathBuf>,
    truth: Option<PathBuf>,
    k: usize,
    seed: u64,
    epochs: usize,
    patience: usize,
    lr: f64,
    weight_decay: f64,
    loss: LossKind,
    edge_batch: usize,
    nonedge_batch: usize,
    batch_norm: bool,
    norm: NormKind,
    resample_per_epoch: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunSettings {
            edges: PathBuf::new(),
            features: None,
            truth: None,
            k: 0,
            seed: t.seed,
            epochs: t.max_epochs,
            patience: t.patience,
            lr: t.lr,
            weight_decay: t.weight_decay,
            loss: LossKind::Stochastic,
            edge_batch: LossMode::DEFAULT_BATCH,
            nonedge_batch: LossMode::DEFAULT_BATCH,
            batch_norm: true,
            norm: NormKind::Post,
            resample_per_epoch: false,
        }
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    })
}

impl RunSettings {
    fn check(&mut self) -> Result<()> {
        if self.edges.as_os_str().is_empty() {
            return Err(Error::InvalidInput("--edges is required".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidInput("--k is required and must be at least 1".into()));
        }
        self.edges = absolute(&self.edges)?;
        self.features = self.features.as_deref().map(absolute).transpose()?;
        self.truth = self.truth.as_deref().map(absolute).transpose()?;
        Ok(())
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            max_epochs: self.epochs,
            patience: self.patience,
            loss: match self.loss {
                LossKind::Balanced => LossMode::Balanced,
                LossKind::Stochastic => LossMode::Stochastic {
                    edge_batch: self.edge_batch,
                    nonedge_batch: self.nonedge_batch,
                },
            },
            seed: self.seed,
            resample_per_epoch: self.resample_per_epoch,
            ..TrainConfig::default()
        }
    }

    fn model_config(&self, depth: usize, width: usize, x: &NodeFeatures) -> ModelConfig {
        ModelConfig {
            use_features: !x.is_identity(),
            use_batch_norm: self.batch_norm,
            norm_placement: match self.norm {
                NormKind::Pre => NormPlacement::PreActivation,
                NormKind::Post => NormPlacement::PostActivation,
            },
            ..ModelConfig::new(depth, width, self.k)
        }
    }
}

#[derive(Args, Serialize)]
struct TrainFlags {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunFlags,
    /// Number of graph convolution layers.
    #[arg(long)]
    depth: Option<usize>,
    /// Hidden width.
    #[arg(long)]
    width: Option<usize>,
    /// Membership threshold applied to F.
    #[arg(long)]
    threshold: Option<f64>,
    /// Optimize F directly instead of training an encoder.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    free_variable: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct TrainSettings {
    #[serde(flatten)]
    run: RunSettings,
    depth: usize,
    width: usize,
    threshold: f64,
    free_variable: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            run: RunSettings::default(),
            depth: 3,
            width: 32,
            threshold: 0.5,
            free_variable: false,
        }
    }
}

#[derive(Args, Serialize)]
struct GridFlags {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunFlags,
    /// Comma-separated depths.
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// Comma-separated hidden widths.
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Runs per cell, with seeds seed, seed+1, ...
    #[arg(long)]
    restarts: Option<usize>,
    /// Parallel training runs [default: available cores].
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct GridSettings {
    #[serde(flatten)]
    run: RunSettings,
    depths: Vec<usize>,
    widths: Vec<usize>,
    thresholds: Vec<f64>,
    restarts: usize,
    workers: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        let g = GridSpec::default();
        GridSettings {
            run: RunSettings::default(),
            depths: g.depths,
            widths: g.widths,
            thresholds: g.thresholds,
            restarts: g.restarts,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Args, Serialize)]
struct EvalFlags {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Cover file (`node_id label...` lines).
    #[arg(long)]
    cover: Option<PathBuf>,
    /// Affiliation TSV to threshold instead of a cover.
    #[arg(long)]
    affiliations: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct EvalSettings {
    edges: PathBuf,
    cover: Option<PathBuf>,
    affiliations: Option<PathBuf>,
    threshold: Option<f64>,
    truth: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct HeatmapFlags {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    affiliations: Option<PathBuf>,
    /// Comma-separated node ids, in display order.
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<String>>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct HeatmapSettings {
    affiliations: PathBuf,
    nodes: Vec<String>,
    threshold: f64,
}

#[derive(Args, Serialize)]
struct TTestFlags {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// First group as mean,se,n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<f64>>,
    /// Second group as mean,se,n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    b: Option<Vec<f64>>,
    /// First group as a file of whitespace-separated samples.
    #[arg(long)]
    a_file: Option<PathBuf>,
    #[arg(long)]
    b_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct TTestSettings {
    a: Option<Vec<f64>>,
    b: Option<Vec<f64>>,
    a_file: Option<PathBuf>,
    b_file: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayFlags {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory [default: $DYNARES_OUT, else ./dynares-out].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("dynares-out"))
}

struct Inputs {
    graph: Graph,
    features: NodeFeatures,
    truth: Option<Cover>,
}

fn load_graph(path: &Path, out: &mut Output) -> Result<Graph> {
    out.input("edges", path)?;
    let (g, stats) = Graph::load_edge_list(path)?;
    log::info!(
        "{}: {} nodes, {} edges ({} self-loops dropped, {} duplicates collapsed)",
        path.display(),
        g.n(),
        g.num_edges(),
        stats.self_loops_dropped,
        stats.duplicates_collapsed
    );
    Ok(g)
}

fn load_truth(path: Option<&Path>, g: &Graph, out: &mut Output) -> Result<Option<Cover>> {
    path.map(|p| {
        out.input("truth", p)?;
        Cover::load(p, g)
    })
    .transpose()
}

fn load_inputs(s: &RunSettings, out: &mut Output) -> Result<Inputs> {
    let graph = load_graph(&s.edges, out)?;
    let features = match &s.features {
        Some(p) => {
            out.input("features", p)?;
            NodeFeatures::load_csv(p, &graph)?
        }
        None => NodeFeatures::identity(graph.n()),
    };
    let truth = load_truth(s.truth.as_deref(), &graph, out)?;
    Ok(Inputs { graph, features, truth })
}

/// Writes the artifacts of one run. Returns the seeds it used.
fn write_run(g: &Graph, mut run: RunResult, tau: f64, truth: Option<&Cover>, out: &mut Output) -> Result<Value> {
    if let (Some(model), Some(plan)) = (&run.model, &run.plan) {
        let ckpt = Checkpoint::new(model.clone(), run.seeds.augment, run.seeds.plan);
        out.json("checkpoint.json", &ckpt)?;
        out.json("plan_stats.json", &layer_plan_stats(g, plan))?;
    }
    out.write_with("affiliations.tsv", |w| run.affiliations.write_tsv(w))?;
    let cover = run.affiliations.threshold(tau)?;
    out.write_with("cover.txt", |w| cover.write(g.node_ids(), w))?;
    let metrics = match run.evaluate(g, tau, truth) {
        Ok(m) => Some(m.clone()),
        Err(Error::EmptyCover) => {
            log::warn!("no node reaches threshold {tau}; metrics are undefined");
            None
        }
        Err(e) => return Err(e),
    };
    out.json("metrics.json", &metrics)?;
    out.write_with("train_log.jsonl", |w| {
        for e in &run.trace {
            writeln!(w, "{}", serde_json::to_string(e).map_err(std::io::Error::other)?)?;
        }
        Ok(())
    })?;
    out.json(
        "summary.json",
        &json!({
            "threshold": tau,
            "initial_loss": run.initial_loss(),
            "best_loss": run.best_loss,
            "best_epoch": run.best_epoch,
            "epochs_run": run.trace.len(),
            "stopped_early": run.stopped_early,
            "communities_found": cover.num_nonempty(),
        }),
    )?;
    if let Some(m) = &metrics {
        println!(
            "loss {:.6} (epoch {}), conductance {:.4}, coverage {:.4}, density {:.4}, clustering {:.4}{}",
            run.best_loss,
            run.best_epoch,
            m.conductance,
            m.coverage,
            m.density,
            m.clustering_coefficient,
            m.nmi.map(|v| format!(", nmi {v:.4}")).unwrap_or_default()
        );
    }
    Ok(serde_json::to_value(run.seeds)?)
}

fn cmd_train(s: &TrainSettings, out: &mut Output) -> Result<Value> {
    let inputs = load_inputs(&s.run, out)?;
    let cfg = s.run.train_config();
    let run = if s.free_variable {
        train_free_variable_baseline(&inputs.graph, &cfg, s.run.k)?
    } else {
        let mcfg = s.run.model_config(s.depth, s.width, &inputs.features);
        train(&inputs.graph, &inputs.features, &cfg, &mcfg)?
    };
    write_run(&inputs.graph, run, s.threshold, inputs.truth.as_ref(), out)
}

fn write_grid(grid: &GridResult, out: &mut Output) -> Result<()> {
    out.write_with("grid.csv", |w| grid.write_csv(w))?;
    out.write_with("cells.csv", |w| {
        writeln!(w, "depth,width,threshold,mean,std_error,runs")?;
        for c in &grid.cells {
            writeln!(w, "{},{},{},{},{},{}", c.depth, c.width, c.threshold, c.mean, c.std_error, c.runs)?;
        }
        Ok(())
    })?;
    out.json(
        "best.json",
        &json!({
            "metric": grid.metric,
            "cell": grid.best,
            "seed": grid.best_run.seeds.run,
            "training_runs": grid.training_runs,
        }),
    )?;
    println!(
        "best cell: depth {} width {} threshold {} ({:?} {:.4} ± {:.4} over {} runs)",
        grid.best.depth,
        grid.best.width,
        grid.best.threshold,
        grid.metric,
        grid.best.mean,
        grid.best.std_error,
        grid.best.runs
    );
    Ok(())
}

fn cmd_gridsearch(s: &GridSettings, out: &mut Output) -> Result<Value> {
    let inputs = load_inputs(&s.run, out)?;
    let spec = GridSpec {
        depths: s.depths.clone(),
        widths: s.widths.clone(),
        thresholds: s.thresholds.clone(),
        restarts: s.restarts,
    };
    let base = s.run.model_config(1, 1, &inputs.features);
    let grid = grid_search(
        &inputs.graph,
        &inputs.features,
        &spec,
        &s.run.train_config(),
        &base,
        inputs.truth.as_ref(),
        s.workers,
    )?;
    write_grid(&grid, out)?;
    let tau = grid.best.threshold;
    write_run(&inputs.graph, grid.best_run, tau, inputs.truth.as_ref(), out)?;
    Ok(json!({ "base_seed": s.run.seed, "restarts": s.restarts }))
}

fn cmd_eval(s: &EvalSettings, out: &mut Output) -> Result<Value> {
    let g = load_graph(&s.edges, out)?;
    let cover = match (&s.cover, &s.affiliations) {
        (Some(c), None) => {
            out.input("cover", c)?;
            Cover::load(c, &g)?
        }
        (None, Some(a)) => {
            let tau = s
                .threshold
                .ok_or_else(|| Error::InvalidInput("--affiliations needs --threshold".into()))?;
            out.input("affiliations", a)?;
            AffiliationMatrix::load_tsv(a)?.align_to(&g)?.threshold(tau)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of --cover or --affiliations".into(),
            ))
        }
    };
    let truth = load_truth(s.truth.as_deref(), &g, out)?;
    let report = metrics::evaluate(&g, &cover, truth.as_ref())?;
    out.json("metrics.json", &report)?;
    println!(
        "{}",
        serde_json::to_string(&json!({
            "conductance": report.conductance,
            "coverage": report.coverage,
            "density": report.density,
            "clustering_coefficient": report.clustering_coefficient,
            "nmi": report.nmi,
        }))?
    );
    Ok(Value::Null)
}

fn cmd_heatmap(s: &HeatmapSettings, out: &mut Output) -> Result<Value> {
    out.input("affiliations", &s.affiliations)?;
    let f = AffiliationMatrix::load_tsv(&s.affiliations)?;
    if s.nodes.is_empty() {
        return Err(Error::InvalidInput("--nodes is required".into()));
    }
    let nodes = s
        .nodes
        .iter()
        .map(|id| {
            f.node_ids()
                .iter()
                .position(|x| x == id)
                .ok_or_else(|| Error::InvalidInput(format!("unknown node id {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let hm = metrics::overlap_heatmap_matrix(&f, &nodes, s.threshold)?;
    out.write_with("heatmap.csv", |w| hm.write_csv(f.node_ids(), w))?;
    Ok(Value::Null)
}

fn read_samples(path: &Path, out: &mut Output) -> Result<Vec<f64>> {
    out.input("samples", path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("{}: {t:?}: {e}", path.display())))
        })
        .collect()
}

fn triple(v: &[f64], name: &str) -> Result<(f64, f64, usize)> {
    match *v {
        [m, s, n] if n >= 0.0 && n.fract() == 0.0 => Ok((m, s, n as usize)),
        _ => Err(Error::InvalidInput(format!("--{name} expects mean,se,n with integer n"))),
    }
}

fn cmd_ttest(s: &TTestSettings, out: &mut Output) -> Result<Value> {
    let result = match (&s.a, &s.b, &s.a_file, &s.b_file) {
        (Some(a), Some(b), None, None) => {
            let (m1, s1, n1) = triple(a, "a")?;
            let (m2, s2, n2) = triple(b, "b")?;
            metrics::t_test(m1, s1, n1, m2, s2, n2)?
        }
        (None, None, Some(fa), Some(fb)) => {
            let a = read_samples(fa, out)?;
            let b = read_samples(fb, out)?;
            metrics::t_test_from_samples(&a, &b)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "give either --a and --b triples or --a-file and --b-file".into(),
            ))
        }
    };
    out.json("ttest.json", &result)?;
    println!("{}", serde_json::to_string(&result)?);
    Ok(Value::Null)
}

/// Runs `command` with fully resolved `settings`, writing into `out`.
fn execute(command: &str, settings: Value, out: &mut Output) -> Result<Value> {
    fn parse<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
        serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("settings: {e}")))
    }
    match command {
        "train" => cmd_train(&parse(settings)?, out),
        "gridsearch" => cmd_gridsearch(&parse(settings)?, out),
        "eval" => cmd_eval(&parse(settings)?, out),
        "heatmap" => cmd_heatmap(&parse(settings)?, out),
        "ttest" => cmd_ttest(&parse(settings)?, out),
        other => Err(Error::InvalidInput(format!("unknown command {other:?}"))),
    }
}

fn run_and_record(command: &str, settings: Value, dir: PathBuf) -> Result<()> {
    let start = Instant::now();
    let mut out = Output::create(dir)?;
    let seeds = execute(command, settings.clone(), &mut out)?;
    let path = out.finish(command, settings, seeds, start.elapsed().as_secs_f64() * 1e3)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn resolve_paths(paths: &mut [&mut Option<PathBuf>]) -> Result<()> {
    for p in paths.iter_mut() {
        if let Some(path) = p.as_deref() {
            **p = Some(absolute(path)?);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (command, settings, out) = match cli.command {
        Command::Train(f) => {
            let mut s: TrainSettings = config::resolve(f.common.config.as_deref(), &f)?;
            s.run.check()?;
            ("train", serde_json::to_value(s)?, f.common.out)
        }
        Command::Gridsearch(f) => {
            let mut s: GridSettings = config::resolve(f.common.config.as_deref(), &f)?;
            s.run.check()?;
            ("gridsearch", serde_json::to_value(s)?, f.common.out)
        }
        Command::Eval(f) => {
            let mut s: EvalSettings = config::resolve(f.common.config.as_deref(), &f)?;
            if s.edges.as_os_str().is_empty() {
                return Err(Error::InvalidInput("--edges is required".into()));
            }
            s.edges = absolute(&s.edges)?;
            resolve_paths(&mut [&mut s.cover, &mut s.affiliations, &mut s.truth])?;
            ("eval", serde_json::to_value(s)?, f.common.out)
        }
        Command::Heatmap(f) => {
            let mut s: HeatmapSettings = config::resolve(f.common.config.as_deref(), &f)?;
            if s.affiliations.as_os_str().is_empty() {
                return Err(Error::InvalidInput("--affiliations is required".into()));
            }
            s.affiliations = absolute(&s.affiliations)?;
            ("heatmap", serde_json::to_value(s)?, f.common.out)
        }
        Command::Ttest(f) => {
            let mut s: TTestSettings = config::resolve(f.common.config.as_deref(), &f)?;
            resolve_paths(&mut [&mut s.a_file, &mut s.b_file])?;
            ("ttest", serde_json::to_value(s)?, f.common.out)
        }
        Command::Replay(f) => {
            let m = RunManifest::load(&f.manifest)?;
            m.verify_inputs()?;
            let command = match m.command.as_str() {
                "train" => "train",
                "gridsearch" => "gridsearch",
                "eval" => "eval",
                "heatmap" => "heatmap",
                "ttest" => "ttest",
                other => return Err(Error::InvalidInput(format!("manifest records unknown command {other:?}"))),
            };
            (command, m.settings, f.out)
        }
    };
    run_and_record(command, settings, out_dir(out.as_deref()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

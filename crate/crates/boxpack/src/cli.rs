//! Command-line interface: dataset generation, packing, training,
//! evaluation tables, and SVG rendering.
//!
//! Option precedence is flags over config file over built-in defaults.
//! The config file is flat TOML whose keys mirror the long flag names.
//!
//! Exit codes: 0 success, 1 usage error (bad flags or option values),
//! 2 data error (unreadable or malformed files, mismatched shapes),
//! 3 internal invariant violation.

use crate::baselines::{bbox_seq_order, brkga_order, random_order, BrkgaConfig};
use crate::dataset::{read_dataset, read_results, write_dataset, write_results, ResultRecord};
use crate::error::{Error, Result};
use crate::instance::{mix_seed, GenConfig, Instance, PackingOrder};
use crate::metrics::{evaluate, RewardConfig};
use crate::placement::pack_sequence;
use crate::policy::{decode_greedy, Model};
use crate::train::{self, TrainConfig, TrainRecord, TrainSinks};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

const DEFAULT_SEED: u64 = 7;

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print to stdout and succeed;
            // actual usage errors go to stderr with exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Parse { .. } | Error::Io(_) | Error::Instance(_) | Error::Checkpoint(_) => 2,
        Error::Training(_) | Error::Contract(_) => 3,
    }
}

#[derive(Parser)]
#[command(name = "boxpack", version, about = "Regular bin packing: generate, pack, train, evaluate, render")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset of random instances.
    Gen(GenArgs),
    /// Pack a dataset with one method and write the placements.
    Pack(PackArgs),
    /// Train the policy and write checkpoints plus a training log.
    Train(TrainArgs),
    /// Evaluate packing methods over a dataset and print a metrics table.
    Eval(EvalArgs),
    /// Render a result file to one SVG per box.
    Render(RenderArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Random,
    Bbox,
    Brkga,
    Drl,
}

impl Method {
    fn label(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Bbox => "bbox",
            Method::Brkga => "brkga",
            Method::Drl => "drl",
        }
    }
}

/// Flat config file; keys mirror the long flag names.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    n: Option<usize>,
    count: Option<usize>,
    seed: Option<u64>,
    dim_low: Option<u32>,
    dim_high: Option<u32>,
    #[serde(rename = "box")]
    box_dims: Option<Vec<u32>>,
    method: Option<String>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    train_size: Option<usize>,
    val_size: Option<usize>,
    d_h: Option<usize>,
    init_seed: Option<u64>,
    clip_norm: Option<f64>,
    population: Option<usize>,
    generations: Option<usize>,
    elite_frac: Option<f64>,
    mutant_frac: Option<f64>,
    elite_inherit_prob: Option<f64>,
    scale: Option<f64>,
    compactness_weight: Option<f64>,
    pyramid_weight: Option<f64>,
    limit: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = crate::dataset::read_named(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse { line: 1, msg: format!("{e}") })
}

fn parse_mode(name: &str) -> Result<Mode> {
    match name {
        "2d" => Ok(Mode::TwoD),
        "3d" => Ok(Mode::ThreeD),
        other => Err(Error::Config(format!("unknown mode {other:?}, expected 2d or 3d"))),
    }
}

fn parse_method(name: &str) -> Result<Method> {
    match name {
        "random" => Ok(Method::Random),
        "bbox" => Ok(Method::Bbox),
        "brkga" => Ok(Method::Brkga),
        "drl" => Ok(Method::Drl),
        other => Err(Error::Config(format!(
            "unknown method {other:?}, expected random, bbox, brkga, or drl"
        ))),
    }
}

fn parse_box_flag(text: &str) -> Result<Vec<u32>> {
    let dims: std::result::Result<Vec<u32>, _> =
        text.split(',').map(|p| p.trim().parse::<u32>()).collect();
    dims.map_err(|_| Error::Config(format!("cannot parse box dimensions from {text:?}")))
}

/// Flags shared by every command that reads instance-generation settings.
#[derive(Args)]
struct GenOpts {
    /// 2d or 3d.
    #[arg(long)]
    mode: Option<Mode>,
    /// Objects per instance.
    #[arg(long)]
    n: Option<usize>,
    /// Smallest object dimension.
    #[arg(long)]
    dim_low: Option<u32>,
    /// Largest object dimension.
    #[arg(long)]
    dim_high: Option<u32>,
    /// Box dimensions, comma separated, e.g. 10,10 or 10,10,10.
    #[arg(long, value_name = "DIMS")]
    r#box: Option<String>,
}

impl GenOpts {
    /// Builds a generator config from flags, file settings, and defaults.
    fn resolve(&self, file: &FileConfig, seed: u64) -> Result<GenConfig> {
        let mode = match (&self.mode, &file.mode, &self.r#box, &file.box_dims) {
            (Some(m), _, _, _) => *m,
            (None, Some(name), _, _) => parse_mode(name)?,
            // No explicit mode: infer from a box flag if present.
            (None, None, Some(text), _) => {
                if parse_box_flag(text)?.len() == 3 { Mode::ThreeD } else { Mode::TwoD }
            }
            (None, None, None, Some(dims)) => {
                if dims.len() == 3 { Mode::ThreeD } else { Mode::TwoD }
            }
            _ => Mode::TwoD,
        };
        let mut gen = match mode {
            Mode::TwoD => GenConfig::default_2d(seed),
            Mode::ThreeD => GenConfig::default_3d(seed),
        };
        if let Some(n) = self.n.or(file.n) {
            gen.n = n;
        }
        if let Some(low) = self.dim_low.or(file.dim_low) {
            gen.dim_low = low;
        }
        if let Some(high) = self.dim_high.or(file.dim_high) {
            gen.dim_high = high;
        }
        let box_dims = match (&self.r#box, &file.box_dims) {
            (Some(text), _) => Some(parse_box_flag(text)?),
            (None, Some(dims)) => Some(dims.clone()),
            (None, None) => None,
        };
        if let Some(dims) = box_dims {
            if dims.len() != gen.box_dims.len() {
                return Err(Error::Config(format!(
                    "box {:?} does not match mode {}",
                    dims,
                    if mode == Mode::TwoD { "2d" } else { "3d" }
                )));
            }
            gen.box_dims = dims;
        }
        gen.validate()?;
        Ok(gen)
    }
}

fn resolve_reward(file: &FileConfig) -> RewardConfig {
    let mut reward = RewardConfig::default();
    if let Some(s) = file.scale {
        reward.scale = s;
    }
    if let Some(w) = file.compactness_weight {
        reward.compactness_weight = w;
    }
    if let Some(w) = file.pyramid_weight {
        reward.pyramid_weight = w;
    }
    reward
}

#[derive(Args)]
struct BrkgaOpts {
    /// Population size (default: 10n capped at 500).
    #[arg(long)]
    population: Option<usize>,
    /// Generations to evolve.
    #[arg(long)]
    generations: Option<usize>,
}

impl BrkgaOpts {
    fn resolve(&self, file: &FileConfig) -> Result<BrkgaConfig> {
        let mut cfg = BrkgaConfig::default();
        cfg.population = self.population.or(file.population).or(cfg.population);
        if let Some(g) = self.generations.or(file.generations) {
            cfg.generations = g;
        }
        if let Some(f) = file.elite_frac {
            cfg.elite_frac = f;
        }
        if let Some(f) = file.mutant_frac {
            cfg.mutant_frac = f;
        }
        if let Some(p) = file.elite_inherit_prob {
            cfg.elite_inherit_prob = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenArgs {
    /// Output dataset path (one instance per line).
    #[arg(long)]
    out: PathBuf,
    /// Number of instances.
    #[arg(long)]
    count: Option<usize>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    gen: GenOpts,
    /// Flat TOML config file; flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let count = args.count.or(file.count).unwrap_or(1000);
    let gen = args.gen.resolve(&file, seed)?;
    let instances = crate::instance::generate_dataset(&gen, count)?;
    write_dataset(&instances, &args.out)?;
    println!("wrote {} instances to {} (seed {seed})", instances.len(), args.out.display());
    Ok(())
}

/// Loads a model checkpoint and checks it fits the dataset's dimensionality.
fn load_model_for(instances: &[Instance], path: &Path) -> Result<Model> {
    let (model, _) = crate::checkpoint::load(path)?;
    if let Some(inst) = instances.first() {
        if model.config.m != inst.box_spec().m() {
            return Err(Error::Checkpoint(format!(
                "model expects {}-dimensional objects but the dataset is {}-dimensional",
                model.config.m,
                inst.box_spec().m()
            )));
        }
    }
    Ok(model)
}

/// Produces the packing order for one instance under the given method.
/// Seeded methods derive their stream from (seed, instance position).
fn order_for(
    method: Method,
    inst: &Instance,
    index: usize,
    seed: u64,
    brkga: &BrkgaConfig,
    reward: &RewardConfig,
    model: Option<&Model>,
) -> Result<PackingOrder> {
    match method {
        Method::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[3, index as u64]));
            Ok(random_order(inst.len(), &mut rng))
        }
        Method::Bbox => Ok(bbox_seq_order(inst)),
        Method::Brkga => {
            Ok(brkga_order(inst, brkga, reward, mix_seed(seed, &[4, index as u64]))?.best_order)
        }
        Method::Drl => {
            let model = model.ok_or_else(|| {
                Error::Config("method drl requires --checkpoint".to_string())
            })?;
            Ok(decode_greedy(inst, &model.actor)?.order)
        }
    }
}

#[derive(Args)]
struct PackArgs {
    /// Input dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Packing method.
    #[arg(long)]
    method: Option<Method>,
    /// Model checkpoint (required for --method drl).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Seed for seeded methods.
    #[arg(long)]
    seed: Option<u64>,
    /// Output result path (one packed instance per line).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    brkga: BrkgaOpts,
    /// Flat TOML config file; flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_pack(args: PackArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let method = match (args.method, &file.method) {
        (Some(m), _) => m,
        (None, Some(name)) => parse_method(name)?,
        (None, None) => return Err(Error::Config("pack requires --method".to_string())),
    };
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let brkga = args.brkga.resolve(&file)?;
    let reward = resolve_reward(&file);
    let instances = read_dataset(&args.data)?;
    let model = match (&args.checkpoint, method) {
        (Some(path), _) => Some(load_model_for(&instances, path)?),
        (None, Method::Drl) => {
            return Err(Error::Config("method drl requires --checkpoint".to_string()))
        }
        (None, _) => None,
    };

    let mut records = Vec::with_capacity(instances.len());
    let mut boxes_total = 0usize;
    for (i, inst) in instances.iter().enumerate() {
        let order = order_for(method, inst, i, seed, &brkga, &reward, model.as_ref())?;
        let result = pack_sequence(inst, &order)?;
        boxes_total += result.boxes_used();
        records.push(ResultRecord::from_packing(inst, &result));
    }
    write_results(&records, &args.out)?;
    let mean_boxes = boxes_total as f64 / instances.len().max(1) as f64;
    println!(
        "packed {} instances with {} into {} (mean boxes {mean_boxes:.3})",
        instances.len(),
        method.label(),
        args.out.display()
    );
    Ok(())
}

/// One row of the evaluation table.
#[derive(Serialize)]
struct EvalRow {
    method: &'static str,
    compactness: f64,
    pyramid: f64,
    boxes: f64,
    latency_ms: f64,
}

#[derive(Serialize)]
struct EvalReport {
    instances: usize,
    seed: u64,
    rows: Vec<EvalRow>,
}

fn eval_method(
    method: Method,
    instances: &[Instance],
    seed: u64,
    brkga: &BrkgaConfig,
    reward: &RewardConfig,
    model: Option<&Model>,
) -> Result<EvalRow> {
    let (mut c_sum, mut p_sum, mut boxes_sum, mut elapsed) = (0.0, 0.0, 0usize, 0.0);
    for (i, inst) in instances.iter().enumerate() {
        // Latency covers order generation plus placement, single-threaded.
        let start = Instant::now();
        let order = order_for(method, inst, i, seed, brkga, reward, model)?;
        let result = pack_sequence(inst, &order)?;
        elapsed += start.elapsed().as_secs_f64();
        let metrics = evaluate(inst, &result)?;
        c_sum += metrics.avg_compactness;
        p_sum += metrics.avg_pyramid;
        boxes_sum += metrics.boxes_used;
    }
    let k = instances.len() as f64;
    Ok(EvalRow {
        method: method.label(),
        compactness: c_sum / k,
        pyramid: p_sum / k,
        boxes: boxes_sum as f64 / k,
        latency_ms: elapsed * 1000.0 / k,
    })
}

#[derive(Args)]
struct EvalArgs {
    /// Input dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Packing method to evaluate.
    #[arg(long, conflicts_with = "all")]
    method: Option<Method>,
    /// Evaluate random, bbox, brkga, and (with --checkpoint) drl.
    #[arg(long)]
    all: bool,
    /// Model checkpoint for the drl method.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Seed for seeded methods.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate only the first K instances.
    #[arg(long, value_name = "K")]
    limit: Option<usize>,
    /// Also write the table as JSON for scripted checks.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    #[command(flatten)]
    brkga: BrkgaOpts,
    /// Flat TOML config file; flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let brkga = args.brkga.resolve(&file)?;
    let reward = resolve_reward(&file);
    let mut instances = read_dataset(&args.data)?;
    if let Some(limit) = args.limit.or(file.limit) {
        instances.truncate(limit);
    }
    if instances.is_empty() {
        return Err(Error::Parse { line: 1, msg: "dataset is empty".to_string() });
    }

    let methods: Vec<Method> = if args.all {
        let mut ms = vec![Method::Random, Method::Bbox, Method::Brkga];
        if args.checkpoint.is_some() {
            ms.push(Method::Drl);
        } else {
            eprintln!("note: no --checkpoint given, skipping the drl row");
        }
        ms
    } else {
        match (args.method, &file.method) {
            (Some(m), _) => vec![m],
            (None, Some(name)) => vec![parse_method(name)?],
            (None, None) => {
                return Err(Error::Config("eval requires --method or --all".to_string()))
            }
        }
    };

    let model = match &args.checkpoint {
        Some(path) => Some(load_model_for(&instances, path)?),
        None => None,
    };

    let mut rows = Vec::new();
    for method in methods {
        rows.push(eval_method(method, &instances, seed, &brkga, &reward, model.as_ref())?);
    }

    println!("{:<8} {:>7} {:>7} {:>7} {:>12}", "method", "C", "P", "Num.", "Lat. (ms)");
    for row in &rows {
        println!(
            "{:<8} {:>7.3} {:>7.3} {:>7.3} {:>12.3}",
            row.method, row.compactness, row.pyramid, row.boxes, row.latency_ms
        );
    }

    if let Some(path) = &args.json {
        let report = EvalReport { instances: instances.len(), seed, rows };
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Contract(format!("cannot serialize eval report: {e}")))?;
        crate::dataset::atomic_write(path, json.as_bytes())?;
    }
    Ok(())
}

#[derive(Args)]
struct TrainArgs {
    /// 2d or 3d (full-scale recipe for that mode).
    #[arg(long)]
    mode: Option<Mode>,
    /// Use the small 2D recipe that trains in minutes on one core.
    #[arg(long)]
    desk: bool,
    /// Output directory for checkpoints and the training log.
    #[arg(long)]
    out: PathBuf,
    /// Resume from a checkpoint written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Seed for datasets, initialization, and sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Learning rate for both parameter groups.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    val_size: Option<usize>,
    /// Hidden width of the policy.
    #[arg(long)]
    d_h: Option<usize>,
    /// Objects per instance.
    #[arg(long)]
    n: Option<usize>,
    /// Clip gradients to this norm.
    #[arg(long)]
    clip_norm: Option<f64>,
    /// Flat TOML config file; flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn resolve_train_config(args: &TrainArgs, file: &FileConfig) -> Result<TrainConfig> {
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let mode = match (&args.mode, &file.mode) {
        (Some(m), _) => Some(*m),
        (None, Some(name)) => Some(parse_mode(name)?),
        (None, None) => None,
    };
    if args.desk && mode == Some(Mode::ThreeD) {
        return Err(Error::Config("the desk recipe is 2d; drop --mode 3d".to_string()));
    }
    let mut cfg = if args.desk {
        TrainConfig::desk_2d(seed)
    } else {
        match mode.unwrap_or(Mode::TwoD) {
            Mode::TwoD => TrainConfig::default_2d(seed),
            Mode::ThreeD => TrainConfig::default_3d(seed),
        }
    };
    if let Some(n) = args.n.or(file.n) {
        cfg.gen.n = n;
    }
    if let Some(lr) = args.lr.or(file.learning_rate) {
        cfg.learning_rate = lr;
    }
    if let Some(e) = args.epochs.or(file.epochs) {
        cfg.epochs = e;
    }
    if let Some(b) = args.batch.or(file.batch_size) {
        cfg.batch_size = b;
    }
    if let Some(t) = args.train_size.or(file.train_size) {
        cfg.train_size = t;
    }
    if let Some(v) = args.val_size.or(file.val_size) {
        cfg.val_size = v;
    }
    if let Some(d) = args.d_h.or(file.d_h) {
        cfg.d_h = d;
    }
    if let Some(s) = file.init_seed {
        cfg.init_seed = s;
    }
    if let Some(c) = args.clip_norm.or(file.clip_norm) {
        cfg.clip_norm = Some(c);
    }
    cfg.reward = resolve_reward(file);
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let cfg = resolve_train_config(&args, &file)?;
    std::fs::create_dir_all(&args.out)?;
    let log_path = args.out.join("train.log");
    let sinks = TrainSinks { checkpoint_dir: Some(&args.out), log_path: Some(&log_path) };

    println!(
        "training: {}d objects, n={}, d_h={}, {} epochs x {} instances, batch {}, lr {}",
        cfg.gen.m, cfg.gen.n, cfg.d_h, cfg.epochs, cfg.train_size, cfg.batch_size,
        cfg.learning_rate
    );
    let (train_set, val_set) = cfg.make_datasets()?;

    let start = Instant::now();
    let outcome = match &args.resume {
        Some(path) => {
            let (model, state) = crate::checkpoint::load(path)?;
            let state = state.ok_or_else(|| {
                Error::Checkpoint(format!(
                    "{} has no trainer state; it cannot seed a resumed run",
                    path.display()
                ))
            })?;
            println!("resuming after {} finished epochs", state.epochs_done);
            train::resume(&cfg, model, state, &train_set, &val_set, sinks)?
        }
        None => train::train(&cfg, &train_set, &val_set, sinks)?,
    };

    for rec in &outcome.log {
        if let TrainRecord::Epoch { epoch, val_penalty } = rec {
            println!("epoch {epoch}: validation penalty {val_penalty:.4}");
        }
    }
    let model_path = args.out.join("model.ckpt");
    crate::checkpoint::save(&model_path, &outcome.model, Some(outcome.state))?;
    println!(
        "finished in {:.1}s; final model at {}",
        start.elapsed().as_secs_f64(),
        model_path.display()
    );
    Ok(())
}

#[derive(Args)]
struct RenderArgs {
    /// Result file produced by `pack`.
    #[arg(long)]
    results: PathBuf,
    /// Output directory for the SVG files.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let records = read_results(&args.results)?;
    if records.is_empty() {
        return Err(Error::Parse { line: 1, msg: "result file is empty".to_string() });
    }
    std::fs::create_dir_all(&args.out)?;
    let mut files = 0usize;
    for record in &records {
        for (k, svg) in crate::render::render_record(record)?.iter().enumerate() {
            let path = args.out.join(format!("{}-box{k}.svg", record.id));
            crate::dataset::atomic_write(&path, svg.as_bytes())?;
            files += 1;
        }
    }
    println!("rendered {} boxes from {} instances into {}", files, records.len(), args.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Pack(args) => cmd_pack(args),
        Cmd::Train(args) => cmd_train(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Render(args) => cmd_render(args),
    }
}

//! The six pipeline commands. Every command resolves its configuration
//! first, computes everything, and only then writes its outputs (each one
//! atomically), so a failing run leaves no partial files behind.

use crate::config::{parse_pairs, write_atomic, ConfigOverrides, RunConfig};
use anyhow::{bail, Context, Result};
use clap::Args;
use mpsqc::ansatz::TrainedModel;
use mpsqc::data::{self, BinaryTask, CsvOptions, Schema, Split};
use mpsqc::metrics::EvalReport;
use mpsqc::pipeline;
use mpsqc::xcheck;
use serde::Serialize;
use std::path::{Path, PathBuf};

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_task(path: &Path) -> Result<BinaryTask> {
    BinaryTask::from_json(&read_to_string(path)?)
        .with_context(|| format!("invalid task manifest {}", path.display()))
}

fn load_model(path: &Path) -> Result<TrainedModel> {
    TrainedModel::from_json(&read_to_string(path)?)
        .with_context(|| format!("invalid model file {}", path.display()))
}

fn format_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "NaN".to_string(),
    }
}

/// Buffered outputs, flushed atomically once the whole command succeeded.
struct Outputs {
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, path: PathBuf, content: String) {
        self.files.push((path, content));
    }

    fn flush(self) -> Result<()> {
        for (path, content) in &self.files {
            write_atomic(path, content)?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    /// Input data file (delimited text with a header row).
    #[arg(long, required_unless_present = "synth")]
    pub data: Option<PathBuf>,
    /// Column layout of the input: iris, agri or generic.
    #[arg(long, default_value = "iris")]
    pub schema: Schema,
    /// Class pairs as a:b,...; the first of each pair becomes label 0.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Train fraction of each task's rows.
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    /// Label column name (defaults to the schema's convention).
    #[arg(long)]
    pub label_column: Option<String>,
    /// Comma-separated feature column names (defaults per schema).
    #[arg(long)]
    pub features: Option<String>,
    /// Field delimiter of the input file.
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    /// Generate a synthetic agri-shaped dataset with this many rows per
    /// class instead of reading --data.
    #[arg(long)]
    pub synth: Option<usize>,
    /// Noise scale (in feature SDs) for the synthetic generator.
    #[arg(long, default_value_t = 0.75)]
    pub noise_sigma: f64,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Serialize)]
struct PrepareEcho<'a> {
    command: &'static str,
    data: Option<&'a PathBuf>,
    schema: String,
    pairs: Vec<(u32, u32)>,
    ratio: f64,
    label_column: Option<&'a String>,
    features: Option<Vec<String>>,
    synth: Option<usize>,
    noise_sigma: f64,
    config: &'a RunConfig,
}

pub fn prepare(args: &PrepareArgs) -> Result<()> {
    let config = RunConfig::resolve(&args.overrides)?;
    let delimiter = parse_delimiter(&args.delimiter)?;
    let feature_columns = args
        .features
        .as_ref()
        .map(|f| f.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());

    let dataset = match args.synth {
        Some(n) => {
            if args.schema != Schema::Agri {
                bail!("--synth generates agri-shaped data; use --schema agri");
            }
            data::synth_agri(n, config.seed, args.noise_sigma)?
        }
        None => {
            let path = args.data.as_ref().expect("clap enforces --data");
            let mut options = CsvOptions::new(args.schema);
            options.delimiter = delimiter;
            options.label_column = args.label_column.clone();
            options.feature_columns = feature_columns.clone();
            data::load_csv(path, &options)?
        }
    };
    if dataset.dropped_rows > 0 {
        println!(
            "ingestion: dropped {} row(s) with missing fields",
            dataset.dropped_rows
        );
    }

    let pairs = match &args.pairs {
        Some(text) => parse_pairs(text)?,
        None => default_pairs(&dataset)?,
    };
    let tasks = data::make_pairwise_tasks(&dataset, &pairs, args.ratio, config.seed)?;

    let mut outputs = Outputs::new();
    for task in &tasks {
        println!(
            "task {}: {} rows ({} train / {} test), {} → 0, {} → 1",
            task.name,
            task.len(),
            task.train_idx.len(),
            task.test_idx.len(),
            task.negative_name,
            task.positive_name
        );
        outputs.add(
            config.out_path(&format!("{}.task.json", task.name)),
            task.to_json(),
        );
    }
    if args.synth.is_some() {
        outputs.add(config.out_path("synth-agri.csv"), dataset.to_csv());
    }
    let echo = PrepareEcho {
        command: "prepare",
        data: args.data.as_ref(),
        schema: args.schema.to_string(),
        pairs,
        ratio: args.ratio,
        label_column: args.label_column.as_ref(),
        features: feature_columns,
        synth: args.synth,
        noise_sigma: args.noise_sigma,
        config: &config,
    };
    outputs.add(
        config.out_path("prepare.config.json"),
        serde_json::to_string_pretty(&echo)?,
    );
    outputs.flush()
}

fn parse_delimiter(text: &str) -> Result<u8> {
    let bytes = text.as_bytes();
    if bytes.len() != 1 {
        bail!("--delimiter must be a single byte, got '{text}'");
    }
    Ok(bytes[0])
}

/// Without an explicit pair list: all consecutive-and-outer pairs for a
/// three-class dataset (the usual 1:2, 2:3, 1:3), or the single pair for
/// a two-class one.
fn default_pairs(dataset: &data::RawDataset) -> Result<Vec<(u32, u32)>> {
    let classes: Vec<u32> = dataset.class_counts().keys().copied().collect();
    match classes.as_slice() {
        [a, b] => Ok(vec![(*a, *b)]),
        [a, b, c] => Ok(vec![(*a, *b), (*b, *c), (*a, *c)]),
        _ => bail!(
            "dataset has {} classes; pass --pairs explicitly",
            classes.len()
        ),
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Task manifest produced by `prepare`.
    #[arg(long)]
    pub task: PathBuf,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Serialize)]
struct TrainEcho<'a> {
    command: &'static str,
    task: &'a PathBuf,
    config: &'a RunConfig,
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let config = RunConfig::resolve(&args.overrides)?;
    let task = load_task(&args.task)?;
    let train_config = config.train_config()?;
    let (model, run) = pipeline::train_task(&task, &train_config, config.use_ancilla)?;
    let train_report = pipeline::evaluate_split(&model, &task, Split::Train, config.backend)?;
    println!(
        "trained {}: final cost {:.4} after {} iteration(s) (best of {} restart(s), winner {})",
        task.name,
        run.final_cost,
        run.history.len() - 1,
        train_config.restarts,
        run.restart
    );
    println!(
        "train split: accuracy {:.2}%, sensitivity {}, specificity {}",
        train_report.accuracy,
        format_opt(train_report.sensitivity),
        format_opt(train_report.specificity)
    );

    let mut history_csv = String::from("iteration,cost\n");
    for (i, cost) in run.history.iter().enumerate() {
        history_csv.push_str(&format!("{i},{cost}\n"));
    }

    let mut outputs = Outputs::new();
    outputs.add(
        config.out_path(&format!("{}.model.json", task.name)),
        model.to_json(),
    );
    outputs.add(
        config.out_path(&format!("{}.history.csv", task.name)),
        history_csv,
    );
    let echo = TrainEcho {
        command: "train",
        task: &args.task,
        config: &config,
    };
    outputs.add(
        config.out_path("train.config.json"),
        serde_json::to_string_pretty(&echo)?,
    );
    outputs.flush()
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Model file produced by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Task manifest the model was trained from.
    #[arg(long)]
    pub task: PathBuf,
    /// Which side of the split to evaluate: train or test.
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Serialize)]
struct EvalEcho<'a> {
    command: &'static str,
    model: &'a PathBuf,
    task: &'a PathBuf,
    split: String,
    config: &'a RunConfig,
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let config = RunConfig::resolve(&args.overrides)?;
    let model = load_model(&args.model)?;
    let task = load_task(&args.task)?;
    let report = pipeline::evaluate_split(&model, &task, args.split, config.backend)?;
    print_report(&task.name, args.split, &report);

    let stem = format!("{}.{}", task.name, args.split);
    let mut outputs = Outputs::new();
    outputs.add(
        config.out_path(&format!("{stem}.report.json")),
        report.to_json(),
    );
    outputs.add(
        config.out_path(&format!("{stem}.samples.csv")),
        report.per_sample_csv(),
    );
    let echo = EvalEcho {
        command: "eval",
        model: &args.model,
        task: &args.task,
        split: args.split.to_string(),
        config: &config,
    };
    outputs.add(
        config.out_path("eval.config.json"),
        serde_json::to_string_pretty(&echo)?,
    );
    outputs.flush()
}

fn print_report(task: &str, split: Split, report: &EvalReport) {
    println!(
        "{task} {split}: n {} | cost {:.4} | ACC {:.2}% | Sens {} | Spec {} | Gini {}",
        report.per_sample.len(),
        report.cost,
        report.accuracy,
        format_opt(report.sensitivity),
        format_opt(report.specificity),
        format_opt(report.gini),
    );
    if let Some(taylor) = &report.taylor {
        println!(
            "taylor: stddev actual {:.4}, stddev predicted {:.4}, pearson r {}, centered RMSD {:.4}",
            taylor.stddev_actual,
            taylor.stddev_predicted,
            format_opt(taylor.pearson_r),
            taylor.centered_rmsd
        );
    }
    for flag in &report.flags {
        println!("note: {flag}");
    }
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model file produced by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// One feature row as comma-separated values.
    #[arg(long, conflicts_with = "input")]
    pub features: Option<String>,
    /// CSV of feature rows (header row required, features only).
    #[arg(long, required_unless_present = "features")]
    pub input: Option<PathBuf>,
    /// Field delimiter for --input.
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    /// Write predictions (CSV) here instead of stdout only.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let config = RunConfig::resolve(&args.overrides)?;
    let model = load_model(&args.model)?;
    let rows: Vec<Vec<f64>> = match (&args.features, &args.input) {
        (Some(text), _) => vec![text
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .with_context(|| format!("bad feature value '{v}'"))
            })
            .collect::<Result<_>>()?],
        (None, Some(path)) => read_feature_rows(path, parse_delimiter(&args.delimiter)?)?,
        (None, None) => unreachable!("clap enforces one of --features/--input"),
    };

    let mut table = String::from("index,label,score\n");
    for (i, row) in rows.iter().enumerate() {
        let (label, score) = model.predict_with(row, config.backend)?;
        println!("{i}\t{label}\t{score}");
        table.push_str(&format!("{i},{label},{score}\n"));
    }
    if let Some(path) = &args.output {
        write_atomic(path, &table)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn read_feature_rows(path: &Path, delimiter: u8) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Vec<f64> = record
            .iter()
            .map(|cell| {
                cell.parse()
                    .with_context(|| format!("line {line}: non-numeric value '{cell}'"))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{} has no data rows", path.display());
    }
    Ok(rows)
}

#[derive(Args, Debug)]
pub struct XcheckArgs {
    /// Total wires of the staircase (ancilla + data).
    #[arg(long, default_value_t = 5)]
    pub wires: usize,
    /// Number of random (θ, input) evaluations.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Write the JSON report here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn xcheck_cmd(args: &XcheckArgs) -> Result<()> {
    let config = RunConfig::resolve(&args.overrides)?;
    let report = xcheck::run(args.wires, args.trials, config.seed)?;
    println!("{report}");
    if let Some(path) = &args.out {
        write_atomic(path, &serde_json::to_string_pretty(&report)?)?;
        println!("wrote {}", path.display());
    }
    if !report.pass {
        bail!(
            "backends disagree: max |Δm| {:.3e} at trial {} (seed {})",
            report.max_abs_delta,
            report.worst_trial,
            report.seed
        );
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory containing *.report.json files from `eval`.
    #[arg(long, default_value = "out")]
    pub dir: PathBuf,
    /// Summary CSV path (defaults to <dir>/summary.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    let entries = std::fs::read_dir(&args.dir)
        .with_context(|| format!("cannot read directory {}", args.dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(name) => name,
            None => continue,
        };
        let Some(stem) = name.strip_suffix(".report.json") else {
            continue;
        };
        let (task, split) = stem
            .rsplit_once('.')
            .with_context(|| format!("report file name '{name}' is not <task>.<split>.report.json"))?;
        let report = EvalReport::from_json(&read_to_string(&path)?)
            .with_context(|| format!("invalid report {}", path.display()))?;
        rows.push((task.to_string(), split.to_string(), report));
    }
    if rows.is_empty() {
        bail!("no *.report.json files under {}", args.dir.display());
    }
    rows.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));

    let mut csv = String::from(
        "task,split,n,cost,accuracy,sensitivity,specificity,gini,\
         stddev_actual,stddev_predicted,pearson_r,centered_rmsd,flags\n",
    );
    println!("task      split  n    cost    ACC     Sens    Spec    Gini");
    for (task, split, report) in &rows {
        let taylor = report.taylor.as_ref();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"\n",
            task,
            split,
            report.per_sample.len(),
            report.cost,
            report.accuracy,
            format_opt(report.sensitivity),
            format_opt(report.specificity),
            format_opt(report.gini),
            taylor.map_or("NaN".into(), |t| t.stddev_actual.to_string()),
            taylor.map_or("NaN".into(), |t| t.stddev_predicted.to_string()),
            format_opt(taylor.and_then(|t| t.pearson_r)),
            taylor.map_or("NaN".into(), |t| t.centered_rmsd.to_string()),
            report.flags.join("; "),
        ));
        println!(
            "{task:<9} {split:<6} {:<4} {:<7.4} {:<7.2} {:<7} {:<7} {:<7}",
            report.per_sample.len(),
            report.cost,
            report.accuracy,
            format_opt(report.sensitivity),
            format_opt(report.specificity),
            format_opt(report.gini),
        );
    }
    let out = args.out.clone().unwrap_or_else(|| args.dir.join("summary.csv"));
    write_atomic(&out, &csv)?;
    println!("wrote {}", out.display());
    Ok(())
}

//! Run configuration: a flat JSON document merged with command-line
//! overrides, validated up front and echoed into the output directory so
//! every run is replayable.

use anyhow::{bail, Context, Result};
use mpsqc::ansatz::Backend;
use mpsqc::training::{GradientMode, OptimizerKind, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub optimizer: OptimizerKind,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// `parameter-shift` or `finite-difference`.
    pub gradient_mode: String,
    /// Step for the finite-difference mode.
    pub fd_step: f64,
    pub seed: u64,
    pub restarts: usize,
    pub backend: Backend,
    pub use_ancilla: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            optimizer: train.optimizer,
            max_iters: train.max_iters,
            grad_tol: train.grad_tol,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            gradient_mode: "parameter-shift".to_string(),
            fd_step: 1e-4,
            seed: train.seed,
            restarts: train.restarts,
            backend: Backend::Dense,
            use_ancilla: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line overrides shared by the pipeline commands; `None` keeps
/// the config-file (or default) value.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct ConfigOverrides {
    /// Flat JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root random seed for this command.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for all files the command writes.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Circuit backend: dense or mps.
    #[arg(long)]
    pub backend: Option<Backend>,
    /// Optimizer: cg or sgd.
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    /// Optimizer iterations (epochs for sgd).
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stop once the gradient infinity norm drops below this.
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// SGD learning rate.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// SGD mini-batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Gradient mode: parameter-shift or finite-difference.
    #[arg(long)]
    pub gradient_mode: Option<String>,
    /// Step size for finite-difference gradients.
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Random restarts; the best final cost wins.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Drop the ancilla wire (the default circuit keeps it).
    #[arg(long)]
    pub no_ancilla: bool,
}

impl RunConfig {
    /// Loads the config file (when given), applies flag overrides and
    /// validates the result.
    pub fn resolve(overrides: &ConfigOverrides) -> Result<Self> {
        let mut config = match &overrides.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config file {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("invalid config file {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(out_dir) = &overrides.out_dir {
            config.out_dir = out_dir.clone();
        }
        if let Some(backend) = overrides.backend {
            config.backend = backend;
        }
        if let Some(optimizer) = overrides.optimizer {
            config.optimizer = optimizer;
        }
        if let Some(max_iters) = overrides.max_iters {
            config.max_iters = max_iters;
        }
        if let Some(grad_tol) = overrides.grad_tol {
            config.grad_tol = grad_tol;
        }
        if let Some(learning_rate) = overrides.learning_rate {
            config.learning_rate = learning_rate;
        }
        if let Some(batch_size) = overrides.batch_size {
            config.batch_size = batch_size;
        }
        if let Some(mode) = &overrides.gradient_mode {
            config.gradient_mode = mode.clone();
        }
        if let Some(fd_step) = overrides.fd_step {
            config.fd_step = fd_step;
        }
        if let Some(restarts) = overrides.restarts {
            config.restarts = restarts;
        }
        if overrides.no_ancilla {
            config.use_ancilla = false;
        }
        // fail before any computation if anything is inconsistent
        config.train_config()?;
        Ok(config)
    }

    pub fn gradient_mode(&self) -> Result<GradientMode> {
        match self.gradient_mode.as_str() {
            "parameter-shift" => Ok(GradientMode::ParameterShift),
            "finite-difference" => Ok(GradientMode::FiniteDifference { h: self.fd_step }),
            other => bail!("unknown gradient mode '{other}' (expected parameter-shift or finite-difference)"),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let config = TrainConfig {
            optimizer: self.optimizer,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            gradient_mode: self.gradient_mode()?,
            seed: self.seed,
            restarts: self.restarts,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn out_path(&self, file_name: &str) -> PathBuf {
        self.out_dir.join(file_name)
    }
}

/// Parses a `--pairs` value like `1:2,2:3,1:3` into class-id pairs
/// (first of each pair becomes label 0, second label 1).
pub fn parse_pairs(text: &str) -> Result<Vec<(u32, u32)>> {
    let mut pairs = Vec::new();
    for part in text.split(',') {
        let (a, b) = part
            .split_once(':')
            .with_context(|| format!("pair '{part}' is not of the form a:b"))?;
        pairs.push((
            a.trim().parse().with_context(|| format!("bad class id '{a}'"))?,
            b.trim().parse().with_context(|| format!("bad class id '{b}'"))?,
        ));
    }
    if pairs.is_empty() {
        bail!("--pairs needs at least one a:b pair");
    }
    Ok(pairs)
}

/// Writes a file atomically: content lands in a temp file in the target
/// directory and is renamed into place, so failures leave no partial
/// output.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let mut temp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    use std::io::Write;
    temp.write_all(content.as_bytes())
        .context("cannot write temp file")?;
    temp.persist(path)
        .with_context(|| format!("cannot move output into place at {}", path.display()))?;
    Ok(())
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::pipeline::{self, Workspace};

const DEFAULT_OUT: &str = "clat-out";

#[derive(Debug, Parser)]
#[command(
    name = "clat",
    version,
    about = "Conditional latent-space analysis, editing and evaluation"
)]
pub struct Cli {
    /// JSON run configuration; unspecified fields keep their defaults.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,

    /// Root seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Workspace directory read and written by every command.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic dataset, its schema and frequency table.
    GenDataset {
        /// Dataset spec JSON; the bundled five-condition scenario when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Records per condition.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Initialise the models and fit one Gaussian per condition in P space.
    Fit,
    /// Classification, Fréchet distances, PCA and the truncation sweep.
    Analyze,
    /// Truncate latents toward a global or conditional center of mass.
    Truncate {
        #[arg(long)]
        psi: f64,
        /// Condition to sample from and truncate toward.
        #[arg(long)]
        condition: Option<String>,
        /// Truncate toward the global center even when a condition is given.
        #[arg(long)]
        global: bool,
        #[arg(long, default_value_t = 16)]
        count: usize,
        /// Latent container with a `w` block to truncate instead of fresh samples.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Move samples from one condition to another with a transformation vector.
    Arithmetic {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 16)]
        count: usize,
    },
    /// Interpolate between two conditions with z held fixed.
    Interpolate {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Recover a latent for a target image by gradient descent.
    Invert(InvertCmd),
    /// Sample with some sub-conditions replaced by wildcards.
    WildcardSample {
        #[arg(long)]
        condition: String,
        /// Sub-condition names to wildcard (comma separated or repeated).
        #[arg(long, value_delimiter = ',')]
        mask: Vec<String>,
        /// Draw the mask with the stochastic masking rule instead.
        #[arg(long)]
        stochastic: bool,
        #[arg(long, default_value_t = 64)]
        count: usize,
    },
    /// FID, FJD, intra-FID and the qualitative scores.
    Evaluate(EvaluateCmd),
}

#[derive(Debug, Args)]
pub struct InvertCmd {
    /// Image container holding the target; a generated image when omitted.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Row of the target container.
    #[arg(long, default_value_t = 0)]
    row: usize,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateCmd {
    /// Generated image container; sampled from the fitted models when omitted.
    #[arg(long)]
    fake_images: Option<PathBuf>,
    #[arg(long)]
    fake_metadata: Option<PathBuf>,
    /// 0/1 CSV with one column per sub-condition and n_qual rows.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Precomputed embeddings CSV for the real set.
    #[arg(long)]
    real_embeddings: Option<PathBuf>,
    #[arg(long)]
    fake_embeddings: Option<PathBuf>,
}

impl Cli {
    pub fn resolve_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

/// Runs one command and returns the JSON printed on stdout.
pub fn run(cli: &Cli) -> CliResult<serde_json::Value> {
    let cfg = cli.resolve_config()?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let ws = Workspace::open(&out)?;
    let v = match &cli.command {
        Command::GenDataset { spec, count } => json!(pipeline::gen_dataset(
            &cfg,
            &ws,
            &pipeline::GenDatasetArgs {
                spec: spec.clone(),
                count: *count
            }
        )?),
        Command::Fit => json!(pipeline::fit(&cfg, &ws)?),
        Command::Analyze => {
            let (m, s) = pipeline::analyze(&cfg, &ws)?;
            json!({"manifest": m, "summary": s})
        }
        Command::Truncate {
            psi,
            condition,
            global,
            count,
            input,
        } => json!(pipeline::run_truncate(
            &cfg,
            &ws,
            &pipeline::TruncateArgs {
                psi: *psi,
                condition: condition.clone(),
                global: *global,
                count: *count,
                input: input.clone(),
            }
        )?),
        Command::Arithmetic { from, to, count } => json!(pipeline::run_arithmetic(
            &cfg,
            &ws,
            &pipeline::ArithmeticArgs {
                from: from.clone(),
                to: to.clone(),
                count: *count
            }
        )?),
        Command::Interpolate { from, to, steps, count } => json!(pipeline::run_interpolate(
            &cfg,
            &ws,
            &pipeline::InterpolateArgs {
                from: from.clone(),
                to: to.clone(),
                steps: *steps,
                count: *count,
            }
        )?),
        Command::Invert(a) => json!(pipeline::run_invert(
            &cfg,
            &ws,
            &pipeline::InvertArgs {
                target: a.target.clone(),
                row: a.row,
                steps: a.steps,
                step_size: a.step_size,
            }
        )?),
        Command::WildcardSample {
            condition,
            mask,
            stochastic,
            count,
        } => json!(pipeline::run_wildcard_sample(
            &cfg,
            &ws,
            &pipeline::WildcardArgs {
                condition: condition.clone(),
                mask: mask.clone(),
                stochastic: *stochastic,
                count: *count,
            }
        )?),
        Command::Evaluate(a) => {
            let (m, r) = pipeline::evaluate(
                &cfg,
                &ws,
                &pipeline::EvaluateArgs {
                    fake_images: a.fake_images.clone(),
                    fake_metadata: a.fake_metadata.clone(),
                    labels: a.labels.clone(),
                    real_embeddings: a.real_embeddings.clone(),
                    fake_embeddings: a.fake_embeddings.clone(),
                },
            )?;
            json!({"manifest": m, "report": r})
        }
    };
    Ok(v)
}

use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;
use driftlab_core::batch::Execution;
use driftlab_core::io::MANIFEST_FILE;
use driftlab_core::simulate::{write_sweep, Corpus, PassageConfig, SweepConfig};
use serde::{Deserialize, Serialize};

use super::{create_dir, usage, Context};
use crate::config::{required, seed};
use crate::manifest::{write_json, RunManifest};

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SimulateArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Total trials; must be a multiple of the distortion grid size.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed. Falls back to DRIFTLAB_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise levels in pixels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub noise: Vec<f64>,
    /// Proportional shift levels.
    #[arg(long, value_delimiter = ',')]
    pub shift: Vec<f64>,
    /// Within-line regression probabilities.
    #[arg(long, value_delimiter = ',')]
    pub p_within: Vec<f64>,
    /// Between-line regression probabilities.
    #[arg(long, value_delimiter = ',')]
    pub p_between: Vec<f64>,
    /// Dataset name recorded in every trial.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Plain-text corpus file instead of the built-in one.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Passage layout ranges; config file only.
    #[arg(skip)]
    pub passage: Option<PassageConfig>,
}

fn or_zero(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        vec![0.0]
    } else {
        v.to_vec()
    }
}

pub fn run(ctx: &Context, args: SimulateArgs) -> anyhow::Result<()> {
    let out = required(args.out.clone(), "out")?;
    let (seed, seed_source) = seed(args.seed)?;
    let grid = SweepConfig::grid_product(
        &or_zero(&args.noise),
        &or_zero(&args.shift),
        &or_zero(&args.p_within),
        &or_zero(&args.p_between),
    );
    let trials = args.trials.unwrap_or(grid.len());
    if trials == 0 || !trials.is_multiple_of(grid.len()) {
        return Err(usage(format!(
            "--trials {trials} must be a positive multiple of the {} grid cells",
            grid.len()
        )));
    }
    let mut cfg = SweepConfig::new(trials / grid.len(), seed, grid);
    if let Some(p) = &args.passage {
        cfg.passage = p.clone();
    }
    if let Some(d) = &args.dataset {
        cfg.dataset = d.clone();
    }
    cfg.passage.validate().map_err(|e| usage(e.to_string()))?;
    for dc in &cfg.grid {
        dc.validate().map_err(|e| usage(e.to_string()))?;
    }
    let corpus = match &args.corpus {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Corpus::from_text(&text)?
        }
        None => Corpus::builtin(),
    };

    create_dir(&out)?;
    let dataset = write_sweep(&cfg, &corpus, &out, Execution::Parallel)?;
    let mut run = RunManifest::new("simulate", &args, ctx.jobs).with_seed(seed, seed_source);
    run.details = serde_json::to_value(&cfg)?;
    run.outputs = dataset
        .trials
        .iter()
        .flat_map(|e| [e.csv.display().to_string(), e.json.display().to_string()])
        .collect();
    run.outputs.sort();
    // The dataset manifest carries the run record alongside the trial list.
    let mut value = serde_json::to_value(&dataset)?;
    value["run"] = run.to_value();
    write_json(&out.join(MANIFEST_FILE), &value)?;
    println!("wrote {} trials to {}", dataset.trials.len(), out.display());
    Ok(())
}

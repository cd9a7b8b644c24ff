use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use driftlab_core::evaluate::evaluate_sources;
use driftlab_core::io::load_dataset;
use serde::{Deserialize, Serialize};

use super::{create_dir, read_runs, usage, Context};
use crate::config::required;
use crate::manifest::RunManifest;

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EvaluateArgs {
    /// Predictions directories; repeat to combine several runs.
    #[arg(long)]
    pub pred: Vec<PathBuf>,
    /// Labeled dataset directory.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Where to write report.json and per_trial.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset name in the report; defaults to the trials' own.
    #[arg(long)]
    pub dataset: Option<String>,
}

pub fn run(ctx: &Context, args: EvaluateArgs) -> anyhow::Result<()> {
    if args.pred.is_empty() {
        return Err(usage("--pred is required"));
    }
    let gold = required(args.gold.clone(), "gold")?;
    let trials = load_dataset(&gold)?;
    let mut preds = BTreeMap::new();
    for dir in &args.pred {
        for (source, list) in read_runs(dir)? {
            if preds.insert(source.name().to_string(), list).is_some() {
                anyhow::bail!("{source} predictions appear in more than one --pred directory");
            }
        }
    }
    if preds.is_empty() {
        anyhow::bail!("no predictions found");
    }
    let name = args
        .dataset
        .clone()
        .or_else(|| trials.first().map(|t| t.dataset.clone()))
        .unwrap_or_default();
    let report = evaluate_sources(&name, &preds, &trials)?;

    println!("dataset {} ({} trials)", report.dataset, report.trials);
    for s in &report.sources {
        match s.relative_to_best_classical {
            Some(r) => println!("{:<10} {:.4}  ({:+.4} vs best classical)", s.source, s.accuracy, r),
            None => println!("{:<10} {:.4}", s.source, s.accuracy),
        }
    }
    if let Some(out) = &args.out {
        create_dir(out)?;
        std::fs::write(out.join("report.json"), report.to_json())?;
        std::fs::write(out.join("per_trial.csv"), report.per_trial_csv())?;
        let mut manifest = RunManifest::new("evaluate", &args, ctx.jobs);
        manifest.outputs = vec!["per_trial.csv".into(), "report.json".into()];
        manifest.write(out)?;
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;
use driftlab_core::batch::{map_with, Execution};
use driftlab_core::correctors::{apply_corrector, Algorithm, CorrectorSpec};
use driftlab_core::io::{load_dataset, write_predictions};
use driftlab_core::trial::{Assignment, Source, Trial};
use driftlab_core::woc::{vote, PoolConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{create_dir, parse_json_arg, read_runs, usage, Context};
use crate::config::{required, seed};
use crate::manifest::RunManifest;

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct CorrectArgs {
    /// Dataset directory.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Output directory for `<source>.csv` predictions.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Algorithms to run, comma separated, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub algo: Vec<String>,
    /// Parameters for a single --algo, as a JSON object.
    #[arg(long, value_parser = parse_json_arg)]
    pub params: Option<Value>,
    /// A corrector spec file: {"algo": ..., "params": {...}}.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Seed for the randomized algorithms unless their params set one.
    /// Falls back to DRIFTLAB_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write a weighted vote: `classical`, `ensemble` or a pool file.
    #[arg(long)]
    pub woc: Option<String>,
    /// Directory of earlier predictions (such as edist.csv) the vote may use.
    #[arg(long)]
    pub runs: Option<PathBuf>,
}

fn specs(args: &CorrectArgs, seed: u64) -> anyhow::Result<Vec<CorrectorSpec>> {
    let mut specs = Vec::new();
    for name in &args.algo {
        if name == "all" {
            specs.extend(Algorithm::ALL.map(CorrectorSpec::new));
        } else {
            let algo: Algorithm = name.parse().map_err(|e: driftlab_core::correctors::CorrectorError| usage(e.to_string()))?;
            specs.push(CorrectorSpec::new(algo));
        }
    }
    if let Some(params) = &args.params {
        let [spec] = specs.as_mut_slice() else {
            return Err(usage("--params needs exactly one --algo"));
        };
        let Value::Object(map) = params else {
            return Err(usage("--params must be a JSON object"));
        };
        spec.params = map.clone();
    }
    if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let spec: CorrectorSpec =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        specs.push(spec);
    }
    for spec in &mut specs {
        if matches!(spec.algo, Algorithm::Cluster | Algorithm::Split) && !spec.params.contains_key("seed") {
            spec.params.insert("seed".into(), json!(seed));
        }
        spec.validate().map_err(|e| usage(e.to_string()))?;
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = specs.iter().find(|s| !seen.insert(s.algo)) {
        return Err(usage(format!("{} requested more than once", dup.algo)));
    }
    Ok(specs)
}

fn pool(arg: &str) -> anyhow::Result<PoolConfig> {
    let pool = match arg {
        "classical" => PoolConfig::classical(),
        "ensemble" => PoolConfig::with_ensemble(),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("--woc {path}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("--woc {path}: {e}")))?
        }
    };
    pool.validate().map_err(|e| usage(e.to_string()))?;
    Ok(pool)
}

fn run_spec(trials: &[Trial], spec: &CorrectorSpec) -> anyhow::Result<Vec<Assignment>> {
    map_with(Execution::Parallel, trials, |t| {
        if t.fixations.is_empty() {
            return Ok(Assignment::new(t.id.clone(), Vec::new(), Source::Algorithm(spec.algo)));
        }
        apply_corrector(t, spec).with_context(|| format!("{} on trial {}", spec.algo, t.id))
    })
    .into_iter()
    .collect()
}

pub fn run(ctx: &Context, args: CorrectArgs) -> anyhow::Result<()> {
    let input = required(args.input.clone(), "in")?;
    let out = required(args.out.clone(), "out")?;
    let (seed, seed_source) = seed(args.seed)?;
    let mut specs = specs(&args, seed)?;
    let pool = args.woc.as_deref().map(pool).transpose()?;
    if specs.is_empty() && pool.is_none() {
        return Err(usage("give at least one of --algo, --spec or --woc"));
    }
    // Pool members that are algorithms not requested explicitly run with defaults.
    if let Some(pool) = &pool {
        for e in &pool.0 {
            if let Source::Algorithm(a) = e.source {
                if !specs.iter().any(|s| s.algo == a) {
                    let mut spec = CorrectorSpec::new(a);
                    if matches!(a, Algorithm::Cluster | Algorithm::Split) {
                        spec.params.insert("seed".into(), json!(seed));
                    }
                    specs.push(spec);
                }
            }
        }
    }
    let earlier = match &args.runs {
        Some(dir) => read_runs(dir)?,
        None => BTreeMap::new(),
    };

    let trials = load_dataset(&input)?;
    create_dir(&out)?;
    let mut manifest = RunManifest::new("correct", &args, ctx.jobs).with_seed(seed, seed_source);
    let mut fallbacks = Vec::new();
    let mut computed: BTreeMap<Source, Vec<Assignment>> = BTreeMap::new();
    for spec in &specs {
        let preds = run_spec(&trials, spec)?;
        for a in &preds {
            if let Some(reason) = &a.fallback {
                fallbacks.push(json!({"source": spec.algo, "trial_id": a.trial_id, "reason": reason}));
            }
        }
        let name = format!("{}.csv", spec.algo);
        write_predictions(&out.join(&name), &preds)?;
        manifest.outputs.push(name);
        computed.insert(Source::Algorithm(spec.algo), preds);
    }

    if let Some(pool) = &pool {
        let mut by_trial: BTreeMap<&str, BTreeMap<Source, Assignment>> = BTreeMap::new();
        for (src, preds) in earlier.iter().chain(&computed) {
            for a in preds {
                by_trial.entry(a.trial_id.as_str()).or_default().insert(*src, a.clone());
            }
        }
        let empty = BTreeMap::new();
        let mut voted = Vec::with_capacity(trials.len());
        for t in &trials {
            let available = by_trial.get(t.id.as_str()).unwrap_or(&empty);
            for a in available.values() {
                a.check(t).map_err(anyhow::Error::msg)?;
            }
            voted.push(vote(&pool.resolve(&t.id, available)?));
        }
        write_predictions(&out.join("woc.csv"), &voted)?;
        manifest.outputs.push("woc.csv".into());
    }

    manifest.details = json!({
        "specs": specs,
        "pool": pool,
        "trials": trials.len(),
        "fallbacks": fallbacks,
    });
    manifest.write(&out)?;
    println!(
        "corrected {} trials with {} algorithm(s){}; {} fallback(s)",
        trials.len(),
        specs.len(),
        if pool.is_some() { " plus a vote" } else { "" },
        fallbacks.len()
    );
    Ok(())
}

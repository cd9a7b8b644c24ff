use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use driftlab_core::corn::{ensemble_decode, read_logit_dir, LogitTensor};
use driftlab_core::io::{load_dataset, write_predictions};
use driftlab_core::trial::{Assignment, Source};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, usage, Context};
use crate::config::required;
use crate::manifest::RunManifest;

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct DecodeArgs {
    /// Directory of logit tensor JSON files. Several tensors for one trial
    /// are averaged before decoding.
    #[arg(long)]
    pub logits: Option<PathBuf>,
    /// Output directory; predictions go to `edist.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of lines to clip to, for every trial.
    #[arg(long)]
    pub max_line: Option<usize>,
    /// Dataset directory; supplies each trial's line count when --max-line
    /// is not given and checks fixation counts.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: DecodeArgs) -> anyhow::Result<()> {
    let logits = required(args.logits.clone(), "logits")?;
    let out = required(args.out.clone(), "out")?;
    if args.max_line.is_none() && args.data.is_none() {
        return Err(usage("give --max-line or --data"));
    }
    if args.max_line == Some(0) {
        return Err(usage("--max-line must be at least 1"));
    }
    let trials = match &args.data {
        Some(d) => Some(
            load_dataset(d)?
                .into_iter()
                .map(|t| (t.id.clone(), t))
                .collect::<BTreeMap<_, _>>(),
        ),
        None => None,
    };

    let mut groups: BTreeMap<String, Vec<LogitTensor>> = BTreeMap::new();
    for t in read_logit_dir(&logits)? {
        groups.entry(t.trial_id.clone()).or_default().push(t);
    }
    let mut preds = Vec::with_capacity(groups.len());
    for (id, members) in &groups {
        let trial = match &trials {
            Some(map) => Some(map.get(id).ok_or_else(|| anyhow::anyhow!("logits for unknown trial {id}"))?),
            None => None,
        };
        let max_line = match (args.max_line, trial) {
            (Some(m), _) => m,
            (None, Some(t)) => t.line_count(),
            (None, None) => unreachable!("checked above"),
        };
        let lines = ensemble_decode(members, max_line).map_err(|e| anyhow::anyhow!("trial {id}: {e}"))?;
        let a = Assignment::new(id.clone(), lines, Source::Edist);
        if let Some(t) = trial {
            a.check(t).map_err(anyhow::Error::msg)?;
        }
        preds.push(a);
    }

    create_dir(&out)?;
    write_predictions(&out.join("edist.csv"), &preds)?;
    let mut manifest = RunManifest::new("decode", &args, ctx.jobs);
    manifest.outputs.push("edist.csv".into());
    manifest.details = json!({
        "trials": preds.len(),
        "members": groups.iter().map(|(id, m)| (id.clone(), m.len())).collect::<BTreeMap<_, _>>(),
    });
    manifest.write(&out)?;
    println!("decoded {} trials", preds.len());
    Ok(())
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use driftlab_core::batch::{map_with, Execution};
use driftlab_core::features::{first_stream, render_second_stream};
use driftlab_core::io::load_dataset;
use driftlab_core::normalize::{NormScheme, NormStats};
use serde::{Deserialize, Serialize};

use super::{create_dir, usage, Context};
use crate::config::required;
use crate::manifest::{write_json, RunManifest};

const STATS_FILE: &str = "norm_stats.json";

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FeaturesArgs {
    /// Dataset directory.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Normalization schemes (`xy`, `xy_lw`); both by default.
    #[arg(long, value_delimiter = ',')]
    pub scheme: Vec<String>,
    /// Standardization statistics from an earlier export (`norm_stats.json`),
    /// for example the training split's. Fitted on this dataset otherwise.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Pad every first-stream matrix to this many rows.
    #[arg(long)]
    pub pad_to: Option<usize>,
    /// Skip the raster images.
    #[arg(long)]
    pub no_raster: bool,
}

pub fn run(ctx: &Context, args: FeaturesArgs) -> anyhow::Result<()> {
    let input = required(args.input.clone(), "in")?;
    let out = required(args.out.clone(), "out")?;
    let schemes: Vec<NormScheme> = if args.scheme.is_empty() {
        NormScheme::ALL.to_vec()
    } else {
        args.scheme.iter().map(|s| s.parse().map_err(usage)).collect::<Result<_, _>>()?
    };
    let trials = load_dataset(&input)?;
    let given: Option<BTreeMap<NormScheme, NormStats>> = match &args.stats {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let mut stats = BTreeMap::new();
    for &scheme in &schemes {
        let s = match given.as_ref() {
            Some(g) => g
                .get(&scheme)
                .cloned()
                .ok_or_else(|| usage(format!("--stats has no entry for scheme {scheme}")))?,
            None => NormStats::fit_trials(&trials, scheme)?,
        };
        stats.insert(scheme, s);
    }

    create_dir(&out)?;
    let written = map_with(Execution::Parallel, &trials, |t| -> anyhow::Result<Vec<String>> {
        let mut names = Vec::new();
        for (scheme, s) in &stats {
            let m = first_stream(t, *scheme, s, args.pad_to)?;
            let name = format!("{}.{scheme}.csv", t.id);
            std::fs::write(out.join(&name), m.to_csv())?;
            names.push(name);
        }
        if !args.no_raster {
            let r = render_second_stream(t);
            let png = format!("{}.png", t.id);
            let side = format!("{}.raster.json", t.id);
            std::fs::write(out.join(&png), r.to_png()?)?;
            std::fs::write(out.join(&side), r.sidecar_json())?;
            names.extend([png, side]);
        }
        Ok(names)
    });
    let mut manifest = RunManifest::new("export-features", &args, ctx.jobs);
    for w in written {
        manifest.outputs.extend(w?);
    }
    write_json(&out.join(STATS_FILE), &stats)?;
    manifest.outputs.push(STATS_FILE.into());
    manifest.write(&out)?;
    println!("exported features for {} trials", trials.len());
    Ok(())
}

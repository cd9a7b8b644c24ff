use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use driftlab_review::{serve, AppState, OverrideLog, ReviewData};
use serde::{Deserialize, Serialize};

use super::Context;
use crate::config::required;

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ServeArgs {
    /// Defaults to 8080.
    #[arg(long)]
    pub port: Option<u16>,
    /// Defaults to 127.0.0.1.
    #[arg(long)]
    pub host: Option<IpAddr>,
    /// Dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory of `correct`/`decode` outputs to show.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Override log; created if missing. Defaults to overrides.jsonl in the
    /// dataset directory.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
}

pub fn run(_ctx: &Context, args: ServeArgs) -> anyhow::Result<()> {
    let data_dir = required(args.data.clone(), "data")?;
    let log_path = args.overrides.clone().unwrap_or_else(|| data_dir.join("overrides.jsonl"));
    let data = ReviewData::load(&data_dir, args.runs.as_deref())?;
    let log = OverrideLog::open(&log_path)?;
    let addr = SocketAddr::new(
        args.host.unwrap_or(IpAddr::from([127, 0, 0, 1])),
        args.port.unwrap_or(8080),
    );
    eprintln!(
        "serving {} trials on http://{addr} (overrides in {})",
        data.len(),
        log_path.display()
    );
    let state = Arc::new(AppState::new(data, log));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(serve(addr, state))?;
    Ok(())
}

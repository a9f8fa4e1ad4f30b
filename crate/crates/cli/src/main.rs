use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

use vhetnet_sim::{
    emit_csv, emit_figure_data, emit_summary_json, run_experiment, Figure, Policy, SimConfig,
};

/// Sweep a HAPS-assisted heterogeneous network across SBS counts and
/// offered demand, evaluating cell-switching policies slot by slot.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Configuration file (flat TOML key-value pairs).
    #[arg(long)]
    config: PathBuf,

    /// Directory for results.csv, summary.json and any figure data.
    #[arg(long)]
    out_dir: PathBuf,

    /// Override the configured policy set, e.g. `haps_mbs,exhaustive`.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<Policy>>,

    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Emit plot-ready data for a figure; may be given more than once.
    #[arg(long)]
    figure: Vec<Figure>,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let mut config = SimConfig::from_file(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    if let Some(policies) = args.policies {
        config.policies = policies;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().context("validating config overrides")?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let output = run_experiment(&config).context("running experiment")?;

    let results_path = args.out_dir.join("results.csv");
    emit_csv(&output.rows, &results_path).context("writing per-slot results")?;
    let summary_path = args.out_dir.join("summary.json");
    emit_summary_json(&config, &output.summaries, &summary_path)
        .context("writing run summary")?;
    for figure in &args.figure {
        let figure_path = args.out_dir.join(format!("fig_{figure}.csv"));
        emit_figure_data(&output.summaries, *figure, &figure_path)
            .with_context(|| format!("writing figure {figure}"))?;
    }

    println!(
        "wrote {} rows over {} sweep points to {}",
        output.rows.len(),
        output.summaries.len(),
        args.out_dir.display()
    );
    Ok(())
}

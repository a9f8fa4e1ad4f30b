//! File emitters: per-slot CSV, the aggregate summary, and plot-ready
//! figure data with sidecar axis metadata.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::config::SimConfig;
use crate::experiment::{ResultRow, RunSummary};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(
        "figure {figure} needs at least two distinct {axis} values, found {found}; \
         widen the sweep axis in the config"
    )]
    MissingSweepAxis {
        figure: Figure,
        axis: &'static str,
        found: usize,
    },
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the per-slot rows. Header and field order come from
/// [`ResultRow`]; line feeds, decimal points, no thousands separators.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), OutputError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error(path))?;
    for row in rows {
        writer.serialize(row).map_err(csv_error(path))?;
    }
    // An empty run still gets the header line.
    if rows.is_empty() {
        writer
            .write_record([
                "policy",
                "s",
                "total_demand_gbps",
                "slot",
                "total_power_w",
                "grid_power_w",
                "ee_gbps_per_w",
                "capacity_utilization",
                "active_sbs",
            ])
            .map_err(csv_error(path))?;
    }
    writer.flush().map_err(io_error(path))?;
    Ok(())
}

/// Reads rows back from an emitted CSV.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, OutputError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error(path))?;
    reader
        .deserialize()
        .collect::<Result<Vec<ResultRow>, csv::Error>>()
        .map_err(csv_error(path))
}

/// Writes the run summary: the full configuration echo plus per-point
/// aggregates.
pub fn emit_summary_json(
    config: &SimConfig,
    summaries: &[RunSummary],
    path: &Path,
) -> Result<(), OutputError> {
    #[derive(Serialize)]
    struct Envelope<'a> {
        seed: u64,
        config: &'a SimConfig,
        summaries: &'a [RunSummary],
    }
    let file = std::fs::File::create(path).map_err(io_error(path))?;
    let mut file = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(
        &mut file,
        &Envelope {
            seed: config.seed,
            config,
            summaries,
        },
    )?;
    file.write_all(b"\n").map_err(io_error(path))?;
    Ok(())
}

/// The three stock plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Mean energy efficiency against offered demand, one series per
    /// (policy, SBS count).
    EeVsTraffic,
    /// Mean total and grid power against the SBS count, series per
    /// (policy, demand point).
    PowerVsS,
    /// Mean capacity utilization against the SBS count, series per
    /// (policy, demand point).
    UtilizationVsS,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::EeVsTraffic, Figure::PowerVsS, Figure::UtilizationVsS];

    pub fn name(self) -> &'static str {
        match self {
            Figure::EeVsTraffic => "ee_vs_traffic",
            Figure::PowerVsS => "power_vs_s",
            Figure::UtilizationVsS => "utilization_vs_s",
        }
    }
}

impl std::fmt::Display for Figure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ee_vs_traffic" => Ok(Figure::EeVsTraffic),
            "power_vs_s" => Ok(Figure::PowerVsS),
            "utilization_vs_s" => Ok(Figure::UtilizationVsS),
            other => Err(format!(
                "unknown figure `{other}` (expected ee_vs_traffic, power_vs_s or utilization_vs_s)"
            )),
        }
    }
}

#[derive(Serialize)]
struct EeVsTrafficRow {
    policy: crate::policy::Policy,
    s: u32,
    total_demand_gbps: f64,
    ee_gbps_per_w: f64,
    ee_bits_per_joule: f64,
}

#[derive(Serialize)]
struct PowerVsSRow {
    policy: crate::policy::Policy,
    total_demand_gbps: f64,
    s: u32,
    total_power_w: f64,
    grid_power_w: f64,
}

#[derive(Serialize)]
struct UtilizationVsSRow {
    policy: crate::policy::Policy,
    total_demand_gbps: f64,
    s: u32,
    capacity_utilization: f64,
}

fn distinct_count(values: impl Iterator<Item = u64>) -> usize {
    let mut seen: Vec<u64> = values.collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Writes one figure's x/y series plus a `<stem>.meta.json` sidecar that
/// documents the axis semantics.
pub fn emit_figure_data(
    summaries: &[RunSummary],
    figure: Figure,
    path: &Path,
) -> Result<(), OutputError> {
    let demand_count = distinct_count(summaries.iter().map(|s| s.total_demand_gbps.to_bits()));
    let s_count = distinct_count(summaries.iter().map(|s| u64::from(s.s)));
    match figure {
        Figure::EeVsTraffic if demand_count < 2 => {
            return Err(OutputError::MissingSweepAxis {
                figure,
                axis: "offered-demand",
                found: demand_count,
            });
        }
        Figure::PowerVsS | Figure::UtilizationVsS if s_count < 2 => {
            return Err(OutputError::MissingSweepAxis {
                figure,
                axis: "sbs-count",
                found: s_count,
            });
        }
        _ => {}
    }

    let mut writer = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let metadata = match figure {
        Figure::EeVsTraffic => {
            for summary in summaries {
                let ee = summary.kpis.energy_efficiency_gbps_per_w.mean;
                writer
                    .serialize(EeVsTrafficRow {
                        policy: summary.policy,
                        s: summary.s,
                        total_demand_gbps: summary.total_demand_gbps,
                        ee_gbps_per_w: ee,
                        ee_bits_per_joule: ee * 1e9,
                    })
                    .map_err(csv_error(path))?;
            }
            serde_json::json!({
                "figure": figure.name(),
                "x": {"column": "total_demand_gbps", "label": "offered demand [Gbps]"},
                "y": [
                    {"column": "ee_gbps_per_w", "label": "mean energy efficiency [Gbps/W]"},
                    {"column": "ee_bits_per_joule", "label": "mean energy efficiency [bit/J]"}
                ],
                "series": ["policy", "s"],
                "statistic": "mean over slots",
            })
        }
        Figure::PowerVsS => {
            for summary in summaries {
                writer
                    .serialize(PowerVsSRow {
                        policy: summary.policy,
                        total_demand_gbps: summary.total_demand_gbps,
                        s: summary.s,
                        total_power_w: summary.kpis.total_power_w.mean,
                        grid_power_w: summary.kpis.grid_power_w.mean,
                    })
                    .map_err(csv_error(path))?;
            }
            serde_json::json!({
                "figure": figure.name(),
                "x": {"column": "s", "label": "number of SBSs"},
                "y": [
                    {"column": "total_power_w", "label": "mean network power [W]"},
                    {"column": "grid_power_w", "label": "mean grid power [W]"}
                ],
                "series": ["policy", "total_demand_gbps"],
                "statistic": "mean over slots",
            })
        }
        Figure::UtilizationVsS => {
            for summary in summaries {
                writer
                    .serialize(UtilizationVsSRow {
                        policy: summary.policy,
                        total_demand_gbps: summary.total_demand_gbps,
                        s: summary.s,
                        capacity_utilization: summary.kpis.capacity_utilization.mean,
                    })
                    .map_err(csv_error(path))?;
            }
            serde_json::json!({
                "figure": figure.name(),
                "x": {"column": "s", "label": "number of SBSs"},
                "y": [{"column": "capacity_utilization", "label": "mean capacity utilization"}],
                "series": ["policy", "total_demand_gbps"],
                "statistic": "mean over slots",
            })
        }
    };
    writer.flush().map_err(io_error(path))?;

    let sidecar = path.with_extension("meta.json");
    let file = std::fs::File::create(&sidecar).map_err(io_error(&sidecar))?;
    let mut file = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut file, &metadata)?;
    file.write_all(b"\n").map_err(io_error(&sidecar))?;
    Ok(())
}

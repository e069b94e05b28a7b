//! Result files. Two CSV schemas cover everything: a summary table with one
//! row per `(feature, k, Eb/N0)` cell and a scatter table with one row per
//! extracted feature point. Plot-data extraction reshapes those files per
//! figure. All writers format floats through `Display`, so identical
//! numbers give identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::FeatureKind;

use super::{
    CalibrationReport, ExperimentConfig, ExperimentReport, MonteCarloReport, SummaryRow,
};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const EVM_SCAN_FILE: &str = "evm_scan.csv";
pub const CALIBRATED_CONFIG_FILE: &str = "calibrated.toml";
pub const FAILURES_FILE: &str = "failures.csv";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|source| {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    })?))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "feature,k,eb_n0_db,mean_rate,std_rate,trials").map_err(io_err(path))?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.feature.as_str(),
            row.k,
            row.eb_n0_db,
            row.mean_rate,
            row.std_rate,
            row.trials
        )
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

struct ScatterRecord {
    feature: FeatureKind,
    tx_label: u32,
    coords: [f64; 2],
    eb_n0_db: f64,
    trial: usize,
    sample: usize,
}

fn write_scatter(path: &Path, records: &[ScatterRecord]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "feature,tx_label,coord1,coord2,eb_n0_db,trial,sample").map_err(io_err(path))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.feature.as_str(),
            r.tx_label,
            r.coords[0],
            r.coords[1],
            r.eb_n0_db,
            r.trial,
            r.sample
        )
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn scatter_records(
    report: &ExperimentReport,
    samples_per_tx: usize,
    trial: usize,
) -> Vec<ScatterRecord> {
    let mut records = Vec::with_capacity(report.samples.len() * 3);
    for kind in [FeatureKind::F1, FeatureKind::F2, FeatureKind::Fe] {
        for (flat, sample) in report.samples.iter().enumerate() {
            let point = sample.of_kind(kind);
            records.push(ScatterRecord {
                feature: kind,
                tx_label: point.label,
                coords: point.coords,
                eb_n0_db: report.eb_n0_db,
                trial,
                sample: flat % samples_per_tx,
            });
        }
    }
    records
}

/// Writes `summary.csv` and `scatter.csv` for one experiment.
pub fn emit_single_experiment(
    report: &ExperimentReport,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    let mut summary = Vec::new();
    for kind in [FeatureKind::F1, FeatureKind::F2, FeatureKind::Fe] {
        for entry in &report.report_for(kind).entries {
            summary.push(SummaryRow {
                feature: kind,
                k: entry.k,
                eb_n0_db: report.eb_n0_db,
                mean_rate: entry.rate,
                std_rate: 0.0,
                trials: 1,
            });
        }
    }
    write_summary(&dir.join(SUMMARY_FILE), &summary)?;
    write_scatter(
        &dir.join(SCATTER_FILE),
        &scatter_records(report, cfg.samples_per_tx, 0),
    )
}

/// Writes `summary.csv`, `scatter.csv` and, when any trial failed,
/// `failures.csv` for a Monte Carlo sweep.
pub fn emit_montecarlo(
    mc: &MonteCarloReport,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    write_summary(&dir.join(SUMMARY_FILE), &mc.summary())?;

    let mut records = Vec::new();
    for kind in [FeatureKind::F1, FeatureKind::F2, FeatureKind::Fe] {
        for trial in &mc.completed {
            for (flat, sample) in trial.report.samples.iter().enumerate() {
                let point = sample.of_kind(kind);
                records.push(ScatterRecord {
                    feature: kind,
                    tx_label: point.label,
                    coords: point.coords,
                    eb_n0_db: trial.eb_n0_db,
                    trial: trial.trial,
                    sample: flat % cfg.samples_per_tx,
                });
            }
        }
    }
    write_scatter(&dir.join(SCATTER_FILE), &records)?;

    if !mc.failures.is_empty() {
        let path = dir.join(FAILURES_FILE);
        let mut out = create(&path)?;
        writeln!(out, "eb_n0_db,trial,message").map_err(io_err(&path))?;
        for f in &mc.failures {
            writeln!(
                out,
                "{},{},{}",
                f.eb_n0_db,
                f.trial,
                f.message.replace(',', ";")
            )
            .map_err(io_err(&path))?;
        }
        out.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

/// Writes the EVM scan table and, when calibration found an in-band
/// operating point, a config copy with `input_rms` replaced.
pub fn emit_calibration(
    report: &CalibrationReport,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    let path = dir.join(EVM_SCAN_FILE);
    let mut out = create(&path)?;
    let tx_count = report.target_evm_db.len();
    let header: Vec<String> = (1..=tx_count).map(|i| format!("evm_tx{i}_db")).collect();
    writeln!(out, "input_rms,{},sse,in_band,chosen", header.join(","))
        .map_err(io_err(&path))?;
    for (i, row) in report.rows.iter().enumerate() {
        let evm: Vec<String> = row.evm_db.iter().map(|e| e.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            row.input_rms,
            evm.join(","),
            row.sse,
            row.in_band,
            report.chosen == Some(i)
        )
        .map_err(io_err(&path))?;
    }
    out.flush().map_err(io_err(&path))?;

    if let Some(row) = report.chosen_row() {
        let mut calibrated = cfg.clone();
        calibrated.input_rms = row.input_rms;
        calibrated.save_toml(&dir.join(CALIBRATED_CONFIG_FILE))?;
    }
    Ok(())
}

/// Figures the plot-data extractor knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFigure {
    ScatterF1,
    ScatterF2,
    ScatterFe,
    Rates,
}

impl PlotFigure {
    fn scatter_kind(&self) -> Option<&'static str> {
        match self {
            PlotFigure::ScatterF1 => Some("F1"),
            PlotFigure::ScatterF2 => Some("F2"),
            PlotFigure::ScatterFe => Some("Fe"),
            PlotFigure::Rates => None,
        }
    }

    pub fn output_name(&self) -> &'static str {
        match self {
            PlotFigure::ScatterF1 => "plot_scatter_f1.csv",
            PlotFigure::ScatterF2 => "plot_scatter_f2.csv",
            PlotFigure::ScatterFe => "plot_scatter_fe.csv",
            PlotFigure::Rates => "plot_rates.csv",
        }
    }
}

impl FromStr for PlotFigure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scatter-f1" => Ok(PlotFigure::ScatterF1),
            "scatter-f2" => Ok(PlotFigure::ScatterF2),
            "scatter-fe" => Ok(PlotFigure::ScatterFe),
            "rates" => Ok(PlotFigure::Rates),
            other => Err(Error::InvalidParameter(format!(
                "unknown figure {other:?}; expected scatter-f1, scatter-f2, scatter-fe or rates"
            ))),
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Reshapes previously emitted CSVs into one plot-ready file inside the
/// same directory; returns the path written.
pub fn emit_plot_data(in_dir: &Path, figure: PlotFigure) -> Result<PathBuf> {
    let out_path = in_dir.join(figure.output_name());
    match figure.scatter_kind() {
        Some(kind) => {
            let lines = read_lines(&in_dir.join(SCATTER_FILE))?;
            let mut out = create(&out_path)?;
            writeln!(out, "tx_label,coord1,coord2,eb_n0_db,trial").map_err(io_err(&out_path))?;
            for line in lines.iter().skip(1) {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() == 7 && fields[0] == kind {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        fields[1], fields[2], fields[3], fields[4], fields[5]
                    )
                    .map_err(io_err(&out_path))?;
                }
            }
            out.flush().map_err(io_err(&out_path))?;
        }
        None => {
            let lines = read_lines(&in_dir.join(SUMMARY_FILE))?;
            let mut out = create(&out_path)?;
            writeln!(out, "feature,k,eb_n0_db,mean_rate").map_err(io_err(&out_path))?;
            for line in lines.iter().skip(1) {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() == 6 {
                    writeln!(out, "{},{},{},{}", fields[0], fields[1], fields[2], fields[3])
                        .map_err(io_err(&out_path))?;
                }
            }
            out.flush().map_err(io_err(&out_path))?;
        }
    }
    Ok(out_path)
}

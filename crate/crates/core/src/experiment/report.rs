use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::{aggregates, RunRecord, RunReport, TrainConfig};
use crate::error::{Error, Result};
use crate::stats::Summary;

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryFile {
    pub model: super::ModelKind,
    /// Aggregates over all fold × seed runs.
    pub runs: Summary,
    /// Aggregates over the per-fold means.
    pub folds: Summary,
    pub sd_convention: String,
    pub wall_clock_secs: f64,
}

/// Contents of `config.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub train: TrainConfig,
    pub data_seed: u64,
    pub folds_seed: u64,
}

/// Writes `runs.csv`, `summary.json` and `config.json` under `dir`.
pub fn emit_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("runs.csv"))?;
    for r in &report.runs {
        w.serialize(r)?;
    }
    w.flush()?;
    let summary = SummaryFile {
        model: report.config.model,
        runs: report.by_run.clone(),
        folds: report.by_fold.clone(),
        sd_convention: "population (divisor n); sd_sample uses n - 1".into(),
        wall_clock_secs: report.wall_clock_secs,
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let config = ConfigFile {
        train: report.config.clone(),
        data_seed: report.data_seed,
        folds_seed: report.folds_seed,
    };
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config)?)?;
    Ok(())
}

/// Reads a report directory back and checks the stored aggregates against
/// ones recomputed from `runs.csv`.
pub fn read_report(dir: impl AsRef<Path>) -> Result<RunReport> {
    let dir = dir.as_ref();
    let mut reader = csv::Reader::from_path(dir.join("runs.csv"))?;
    let runs = reader.deserialize().collect::<std::result::Result<Vec<RunRecord>, _>>()?;
    if let Some(bad) = runs.iter().find(|r| !(0.0..=100.0).contains(&r.accuracy)) {
        return Err(Error::Data(format!("accuracy {} outside [0, 100]", bad.accuracy)));
    }
    let summary: SummaryFile = serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
    let config: ConfigFile = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
    let (by_run, by_fold) = aggregates(&runs);
    if !by_run.approx_eq(&summary.runs, 1e-9) || !by_fold.approx_eq(&summary.folds, 1e-9) {
        return Err(Error::Data("summary.json disagrees with runs.csv".into()));
    }
    Ok(RunReport::from_runs(
        config.train,
        config.data_seed,
        config.folds_seed,
        runs,
        summary.wall_clock_secs,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(accs: &[f64]) -> RunReport {
        let runs = accs
            .iter()
            .enumerate()
            .map(|(i, &a)| RunRecord {
                fold: i,
                seed: 0,
                accuracy: a,
                train_loss: 2.3,
                seconds: 0.5,
            })
            .collect();
        RunReport::from_runs(TrainConfig::default(), 1, 2, runs, 3.0)
    }

    #[test]
    fn constant_rows() {
        let r = report(&[10.0; 5]);
        assert_eq!(r.by_run.mean, 10.0);
        assert_eq!(r.by_run.sd, 0.0);
        assert_eq!(r.by_fold.count, 5);
    }

    #[test]
    fn population_sd() {
        let r = report(&[20.0, 40.0]);
        assert_eq!(r.by_run.mean, 30.0);
        assert_eq!(r.by_run.sd, 10.0);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(&[10.0, 36.7, 53.3, 23.3, 40.0]);
        emit_report(&r, dir.path()).unwrap();
        let back = read_report(dir.path()).unwrap();
        assert!(back.by_run.approx_eq(&r.by_run, 0.0));
        assert!(back.by_fold.approx_eq(&r.by_fold, 0.0));
        assert_eq!(back.runs, r.runs);
        assert_eq!(back.config, r.config);
    }

    #[test]
    fn tampered_summary_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report(&[10.0, 20.0]), dir.path()).unwrap();
        let path = dir.path().join("summary.json");
        let text = fs::read_to_string(&path).unwrap().replacen("\"mean\": 15.0", "\"mean\": 16.0", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(read_report(dir.path()), Err(Error::Data(_))));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, "x").unwrap();
        assert!(matches!(emit_report(&report(&[1.0]), file.join("sub")), Err(Error::Io(_))));
    }
}

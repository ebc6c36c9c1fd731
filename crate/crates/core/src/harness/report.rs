use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapt::{SkipReason, StepDiagnostics};
use crate::error::{Error, Result};

use super::config::{Method, RunConfig};

pub const REPORT_FILE: &str = "report.json";
pub const PER_BATCH_FILE: &str = "per_batch.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const TIMING_FILE: &str = "timing.json";

pub const PER_BATCH_COLUMNS: [&str; 12] = [
    "batch",
    "phase",
    "accuracy",
    "reliable_count",
    "mask_rate_v",
    "mask_rate_t",
    "loss_modal",
    "loss_fus",
    "w_v_mean",
    "w_t_mean",
    "tau_aff",
    "samples",
];

pub const CURVE_COLUMNS: [&str; 5] = [
    "batch",
    "phase",
    "accuracy",
    "cumulative_accuracy",
    "reliable_fraction",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub batch: usize,
    pub phase: String,
    pub phase_index: usize,
    pub samples: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub reliable_count: usize,
    pub mask_rate_v: f64,
    pub mask_rate_t: f64,
    pub loss_modal: Option<f64>,
    pub loss_fus: Option<f64>,
    pub w_v_mean: f64,
    pub w_t_mean: f64,
    pub tau_aff: f64,
    pub fusion_step: bool,
    pub skipped: Option<SkipReason>,
}

impl BatchRecord {
    pub fn new(
        batch: usize,
        phase: String,
        phase_index: usize,
        correct: usize,
        d: &StepDiagnostics,
    ) -> Self {
        Self {
            batch,
            phase,
            phase_index,
            samples: d.samples,
            correct,
            accuracy: correct as f64 / d.samples.max(1) as f64,
            reliable_count: d.reliable_count,
            mask_rate_v: d.mask_rate_vision,
            mask_rate_t: d.mask_rate_touch,
            loss_modal: d.loss_modal,
            loss_fus: d.loss_fus,
            w_v_mean: d.mean_w_vision,
            w_t_mean: d.mean_w_touch,
            tau_aff: d.tau_aff,
            fusion_step: d.fusion_step,
            skipped: d.skipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub index: usize,
    pub phase: String,
    pub batches: usize,
    pub samples: usize,
    pub accuracy: f64,
    pub w_v_mean: f64,
    pub w_t_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedBatch {
    pub batch: usize,
    pub reason: SkipReason,
}

/// Everything a run produces except wall-clock time, which lives in
/// `timing.json` so that the report itself is reproducible bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub method: Method,
    pub seed: u64,
    pub config: RunConfig,
    pub batches: Vec<BatchRecord>,
    pub phases: Vec<PhaseSummary>,
    pub samples: usize,
    pub overall_accuracy: f64,
    pub flagged: Vec<FlaggedBatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub wall_clock_secs: f64,
    pub batches: usize,
}

impl RunReport {
    pub fn new(method: Method, seed: u64, config: RunConfig, batches: Vec<BatchRecord>) -> Self {
        let samples = batches.iter().map(|b| b.samples).sum::<usize>();
        let correct = batches.iter().map(|b| b.correct).sum::<usize>();
        let flagged = batches
            .iter()
            .filter_map(|b| b.skipped.map(|reason| FlaggedBatch { batch: b.batch, reason }))
            .collect();
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            method,
            seed,
            config,
            phases: summarize_phases(&batches),
            overall_accuracy: if samples == 0 { 0.0 } else { correct as f64 / samples as f64 },
            samples,
            batches,
            flagged,
        }
    }

    /// Sample-weighted mean of the per-batch accuracies.
    pub fn weighted_batch_accuracy(&self) -> f64 {
        weighted_accuracy(self.batches.iter().map(|b| (b.accuracy, b.samples)))
    }

    pub fn phase(&self, index: usize) -> Option<&PhaseSummary> {
        self.phases.iter().find(|p| p.index == index)
    }
}

pub fn weighted_accuracy<I: IntoIterator<Item = (f64, usize)>>(items: I) -> f64 {
    let (mut acc, mut n) = (0.0, 0usize);
    for (a, s) in items {
        acc += a * s as f64;
        n += s;
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

fn summarize_phases(batches: &[BatchRecord]) -> Vec<PhaseSummary> {
    let mut out: Vec<PhaseSummary> = Vec::new();
    let mut correct: Vec<usize> = Vec::new();
    for b in batches {
        let k = match out.iter().position(|p| p.index == b.phase_index) {
            Some(k) => k,
            None => {
                out.push(PhaseSummary {
                    index: b.phase_index,
                    phase: b.phase.clone(),
                    batches: 0,
                    samples: 0,
                    accuracy: 0.0,
                    w_v_mean: 0.0,
                    w_t_mean: 0.0,
                });
                correct.push(0);
                out.len() - 1
            }
        };
        let p = &mut out[k];
        p.batches += 1;
        p.samples += b.samples;
        p.w_v_mean += b.w_v_mean;
        p.w_t_mean += b.w_t_mean;
        correct[k] += b.correct;
    }
    for (p, c) in out.iter_mut().zip(correct) {
        p.accuracy = c as f64 / p.samples.max(1) as f64;
        p.w_v_mean /= p.batches as f64;
        p.w_t_mean /= p.batches as f64;
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        context: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let wrap = |source| Error::Csv {
        context: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `report.json`, `per_batch.csv` and `curves.csv` into `dir`,
/// creating it if needed. Returns the paths written.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report_path = dir.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        context: report_path.display().to_string(),
        source,
    })?;
    fs::write(&report_path, json + "\n").map_err(|e| Error::io(&report_path, e))?;

    let per_batch = dir.join(PER_BATCH_FILE);
    let rows = report
        .batches
        .iter()
        .map(|b| {
            vec![
                b.batch.to_string(),
                b.phase.clone(),
                b.accuracy.to_string(),
                b.reliable_count.to_string(),
                b.mask_rate_v.to_string(),
                b.mask_rate_t.to_string(),
                opt(b.loss_modal),
                opt(b.loss_fus),
                b.w_v_mean.to_string(),
                b.w_t_mean.to_string(),
                b.tau_aff.to_string(),
                b.samples.to_string(),
            ]
        })
        .collect();
    write_rows(&per_batch, &PER_BATCH_COLUMNS, rows)?;

    let curves = dir.join(CURVES_FILE);
    let (mut correct, mut seen) = (0usize, 0usize);
    let rows = report
        .batches
        .iter()
        .map(|b| {
            correct += b.correct;
            seen += b.samples;
            vec![
                b.batch.to_string(),
                b.phase.clone(),
                b.accuracy.to_string(),
                (correct as f64 / seen.max(1) as f64).to_string(),
                (b.reliable_count as f64 / b.samples.max(1) as f64).to_string(),
            ]
        })
        .collect();
    write_rows(&curves, &CURVE_COLUMNS, rows)?;
    Ok(vec![report_path, per_batch, curves])
}

pub fn write_timing(timing: &RunTiming, dir: &Path) -> Result<()> {
    let path = dir.join(TIMING_FILE);
    let json = serde_json::to_string_pretty(timing).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

/// Overall accuracy recomputed from a `per_batch.csv` file.
pub fn accuracy_from_csv(path: &Path) -> Result<f64> {
    let wrap = |source| Error::Csv {
        context: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    let headers = r.headers().map_err(wrap)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{} lacks column `{name}`", path.display())))
    };
    let (ia, is) = (col("accuracy")?, col("samples")?);
    let mut items = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(wrap)?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{}: bad number `{}`: {e}", path.display(), &rec[i])))
        };
        items.push((parse(ia)?, parse(is)? as usize));
    }
    Ok(weighted_accuracy(items))
}

/// Finds every `report.json` under `root`, sorted by path.
pub fn find_reports(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if root.is_file() {
        out.push(root.to_path_buf());
        return Ok(out);
    }
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == REPORT_FILE) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub report: PathBuf,
    pub method: Method,
    pub seed: u64,
    pub lr: f64,
    pub fusion_lr: Option<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub batches: usize,
    pub overall_accuracy: f64,
    pub flagged: usize,
    pub phases: Vec<(String, f64)>,
}

/// Summary table rebuilt from stored reports. Accuracy is recomputed from
/// the per-batch records rather than copied from the report.
pub fn summarize_reports(paths: &[PathBuf]) -> Result<Vec<SummaryRow>> {
    paths
        .iter()
        .map(|p| {
            let r = read_report(p)?;
            let recomputed = summarize_phases(&r.batches);
            Ok(SummaryRow {
                report: p.clone(),
                method: r.method,
                seed: r.seed,
                lr: r.config.hyper.lr,
                fusion_lr: r.config.hyper.fusion_lr,
                alpha: r.config.hyper.alpha,
                lambda: r.config.hyper.lambda,
                batches: r.batches.len(),
                overall_accuracy: r.weighted_batch_accuracy(),
                flagged: r.flagged.len(),
                phases: recomputed.into_iter().map(|p| (p.phase, p.accuracy)).collect(),
            })
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let header = [
        "report",
        "method",
        "seed",
        "lr",
        "fusion_lr",
        "alpha",
        "lambda",
        "batches",
        "overall_accuracy",
        "flagged",
        "phases",
    ];
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.report.display().to_string(),
                r.method.to_string(),
                r.seed.to_string(),
                r.lr.to_string(),
                opt(r.fusion_lr),
                r.alpha.to_string(),
                r.lambda.to_string(),
                r.batches.to_string(),
                r.overall_accuracy.to_string(),
                r.flagged.to_string(),
                r.phases
                    .iter()
                    .map(|(p, a)| format!("{p}={a}"))
                    .collect::<Vec<_>>()
                    .join(";"),
            ]
        })
        .collect();
    write_rows(path, &header, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(batch: usize, phase: usize, correct: usize, samples: usize) -> BatchRecord {
        BatchRecord {
            batch,
            phase: format!("p{phase}"),
            phase_index: phase,
            samples,
            correct,
            accuracy: correct as f64 / samples as f64,
            reliable_count: samples / 2,
            mask_rate_v: 0.5,
            mask_rate_t: 0.75,
            loss_modal: Some(0.1),
            loss_fus: None,
            w_v_mean: 0.6,
            w_t_mean: 0.4,
            tau_aff: 2.6,
            fusion_step: false,
            skipped: (batch == 1).then_some(SkipReason::EmptyReliableSet),
        }
    }

    fn report(n: usize) -> RunReport {
        let batches = (0..n).map(|b| record(b, b / 2, (b * 7) % 11, 11 + b)).collect();
        RunReport::new(Method::Robusttouch, 3, RunConfig::default(), batches)
    }

    #[test]
    fn overall_accuracy_is_sample_weighted() {
        let r = report(5);
        let correct: usize = r.batches.iter().map(|b| b.correct).sum();
        let samples: usize = r.batches.iter().map(|b| b.samples).sum();
        assert_eq!(r.overall_accuracy, correct as f64 / samples as f64);
        assert!((r.weighted_batch_accuracy() - r.overall_accuracy).abs() < 1e-12);
        assert_eq!(r.phases.len(), 3);
        assert_eq!(r.flagged, vec![FlaggedBatch { batch: 1, reason: SkipReason::EmptyReliableSet }]);
    }

    #[test]
    fn outputs_have_one_row_per_batch_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(6);
        write_outputs(&r, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(PER_BATCH_FILE)).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().next().unwrap(), PER_BATCH_COLUMNS.join(","));
        let curves = fs::read_to_string(dir.path().join(CURVES_FILE)).unwrap();
        assert_eq!(curves.lines().count(), 7);
        assert_eq!(read_report(&dir.path().join(REPORT_FILE)).unwrap(), r);
        let from_csv = accuracy_from_csv(&dir.path().join(PER_BATCH_FILE)).unwrap();
        assert!((from_csv - r.overall_accuracy).abs() < 1e-12);
    }

    #[test]
    fn empty_run_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(0);
        assert_eq!(r.overall_accuracy, 0.0);
        write_outputs(&r, dir.path()).unwrap();
        for f in [PER_BATCH_FILE, CURVES_FILE] {
            let text = fs::read_to_string(dir.path().join(f)).unwrap();
            assert_eq!(text.lines().count(), 1, "{f}");
        }
        assert_eq!(read_report(&dir.path().join(REPORT_FILE)).unwrap(), r);
    }

    #[test]
    fn summary_reads_nested_reports() {
        let dir = tempfile::tempdir().unwrap();
        for sub in ["a", "b/c"] {
            write_outputs(&report(4), &dir.path().join(sub)).unwrap();
        }
        let found = find_reports(dir.path()).unwrap();
        assert_eq!(found.len(), 2);
        let rows = summarize_reports(&found).unwrap();
        assert_eq!(rows[0].batches, 4);
        let out = dir.path().join("summary.csv");
        write_summary_csv(&rows, &out).unwrap();
        assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 3);
    }
}

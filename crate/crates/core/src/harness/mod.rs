//! Experiment runner: drives a method over a test stream, scores it against
//! the held-back labels and writes reports.

mod config;
mod report;

pub use config::{env_overrides, ArchiveSource, Method, RunConfig, SweepAxes, ENV_PREFIX};
pub use report::{
    accuracy_from_csv, find_reports, read_report, summarize_reports, weighted_accuracy,
    write_outputs, write_summary_csv, write_timing, BatchRecord, FlaggedBatch, PhaseSummary,
    RunReport, RunTiming, SummaryRow, CURVES_FILE, CURVE_COLUMNS, PER_BATCH_COLUMNS,
    PER_BATCH_FILE, REPORT_FILE, TIMING_FILE,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::adapt::{AdaptationState, StepOutcome, UnlabeledBatch};
use crate::bench::{EmbeddingArchive, ScenarioStream};
use crate::error::{Error, Result};
use crate::fusion::FusionWeights;

/// Runs one step of `method`. The static-fusion baseline expects its
/// weights to be pinned already (see [`prepare_state`]).
pub fn baseline_step(
    method: Method,
    state: &mut AdaptationState,
    batch: &UnlabeledBatch,
) -> Result<StepOutcome> {
    match method {
        Method::Robusttouch | Method::StaticFusion => state.adapt_step(batch),
        Method::NoAdapt => state.frozen_step(batch),
        Method::EntropyMinAll => state.entropy_min_step(batch),
    }
}

/// Applies the per-method setup to a fresh state.
pub fn prepare_state(method: Method, state: &mut AdaptationState) {
    if method == Method::StaticFusion {
        state.pin_fusion_weights(Some(FusionWeights::EQUAL));
    }
}

enum Source {
    Scenario(ScenarioStream),
    Archive(EmbeddingArchive),
}

struct Prepared {
    source: Source,
    state: AdaptationState,
    batches: usize,
}

fn prepare(config: &RunConfig, seed: u64) -> Result<Prepared> {
    config.validate()?;
    let hyper = config.hyper.clone();
    match (&config.scenario, &config.archive) {
        (Some(spec), None) => {
            let mut spec = spec.clone();
            spec.seed = seed;
            spec.batch_size = hyper.batch_size;
            let stream = ScenarioStream::new(spec, hyper.patch_grid)?;
            let p = stream.prototypes();
            let state = AdaptationState::new(hyper, p.labels.clone(), Some(p.encoders.clone()), seed)?;
            Ok(Prepared {
                batches: stream.len(),
                source: Source::Scenario(stream),
                state,
            })
        }
        (None, Some(src)) => {
            let archive = EmbeddingArchive::load(&src.path)?;
            archive.validate_against(src.classes, src.dim)?;
            let state = AdaptationState::new(hyper.clone(), archive.label_matrix()?, None, seed)?;
            Ok(Prepared {
                batches: archive.batch_count(hyper.batch_size),
                source: Source::Archive(archive),
                state,
            })
        }
        _ => Err(Error::Config("config needs exactly one data source".into())),
    }
}

/// Runs `config.method` once over the stream with the given seed and also
/// returns the final adaptation state.
pub fn run_with_state(config: &RunConfig, seed: u64) -> Result<(RunReport, AdaptationState)> {
    let Prepared {
        source,
        mut state,
        batches,
    } = prepare(config, seed)?;
    let method = config.method;
    prepare_state(method, &mut state);
    let mut records = Vec::with_capacity(batches);
    for t in 0..batches {
        let (inputs, labels, phase, phase_index) = match &source {
            Source::Scenario(s) => {
                let b = s.next_batch(t)?;
                let (idx, _) = s.spec().phase_of(t).ok_or(Error::EndOfStream(t))?;
                (b.inputs, b.labels, b.phase, idx)
            }
            Source::Archive(a) => {
                let (inputs, labels) = a.batch(t, config.hyper.batch_size)?;
                (inputs, labels, "archive".to_string(), 0)
            }
        };
        let out = baseline_step(method, &mut state, &inputs)?;
        let correct = out
            .predictions
            .iter()
            .zip(&labels)
            .filter(|(p, y)| p == y)
            .count();
        records.push(BatchRecord::new(t, phase, phase_index, correct, &out.diagnostics));
    }
    Ok((RunReport::new(method, seed, config.clone(), records), state))
}

pub fn run_experiment(config: &RunConfig, seed: u64) -> Result<RunReport> {
    run_with_state(config, seed).map(|(r, _)| r)
}

/// Runs, writes the outputs and a separate timing file. Returns the report.
pub fn run_to_dir(config: &RunConfig, seed: u64, dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let report = run_experiment(config, seed)?;
    let timing = RunTiming {
        wall_clock_secs: start.elapsed().as_secs_f64(),
        batches: report.batches.len(),
    };
    write_outputs(&report, dir)?;
    write_timing(&timing, dir)?;
    Ok(report)
}

/// One point of a sweep: the config to run, its seed and a directory name.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub name: String,
    pub config: RunConfig,
    pub seed: u64,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Cartesian product of the declared axes and the seed list.
pub fn sweep_cells(config: &RunConfig) -> Vec<SweepCell> {
    let s = &config.sweep;
    let h = &config.hyper;
    let mut cells = Vec::new();
    for method in axis(&s.method, config.method) {
        for lr in axis(&s.lr, h.lr) {
            for fusion_lr in axis(&s.fusion_lr, h.fusion_lr.unwrap_or(f64::NAN)) {
                for alpha in axis(&s.alpha, h.alpha) {
                    for lambda in axis(&s.lambda, h.lambda) {
                        for &seed in &config.seeds {
                            let mut c = config.clone();
                            c.sweep = SweepAxes::default();
                            c.method = method;
                            c.hyper.lr = lr;
                            c.hyper.fusion_lr = (!fusion_lr.is_nan()).then_some(fusion_lr);
                            c.hyper.alpha = alpha;
                            c.hyper.lambda = lambda;
                            c.seeds = vec![seed];
                            let mut name = format!("{method}_lr{lr:e}");
                            if !s.fusion_lr.is_empty() {
                                name += &format!("_flr{fusion_lr:e}");
                            }
                            if !s.alpha.is_empty() {
                                name += &format!("_alpha{alpha}");
                            }
                            if !s.lambda.is_empty() {
                                name += &format!("_lambda{lambda}");
                            }
                            name += &format!("_seed{seed}");
                            cells.push(SweepCell { name, config: c, seed });
                        }
                    }
                }
            }
        }
    }
    cells
}

/// Runs every sweep cell into `out/<cell name>/`, spreading cells over the
/// available cores. Reports come back in cell order.
pub fn run_sweep(config: &RunConfig, out: &Path) -> Result<Vec<(PathBuf, RunReport)>> {
    config.validate()?;
    let cells = sweep_cells(config);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cells.len().max(1));
    let chunk = cells.len().div_ceil(workers.max(1)).max(1);
    let results: Vec<Result<(PathBuf, RunReport)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|cell| {
                            let dir = out.join(&cell.name);
                            run_to_dir(&cell.config, cell.seed, &dir).map(|r| (dir, r))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

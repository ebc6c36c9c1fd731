use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reliatta::bench::ScenarioStream;
use reliatta::error::{Error, Result};
use reliatta::harness::{
    env_overrides, find_reports, run_sweep, run_to_dir, summarize_reports, write_summary_csv,
    Method, RunConfig,
};

#[derive(Parser)]
#[command(name = "reliatta", version, about = "Reliability-aware test-time adaptation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment per configured seed.
    Run(Common),
    /// Run the cartesian product of the configured sweep axes.
    Sweep(Common),
    /// Write the effective scenario and its encoded embedding archive.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Number of batches to encode; defaults to the scenario length.
        #[arg(long)]
        batches: Option<usize>,
    },
    /// Rebuild summary tables from stored reports.
    Report {
        /// Report files or directories searched recursively.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Also write the summary as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    /// Dotted config override, e.g. `--set hyper.lr=1e-4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    /// Config file, then `RELIATTA_*` variables, then `--set`, then flags.
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut overrides = env_overrides(std::env::vars());
        overrides.extend(self.set.iter().cloned());
        let mut cfg = base.with_overrides(overrides.iter().map(String::as_str))?;
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        cfg.validate()?;
        let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
        Ok((cfg, out))
    }
}

fn run(common: &Common) -> Result<()> {
    let (cfg, out) = common.resolve()?;
    let many = cfg.seeds.len() > 1;
    for &seed in &cfg.seeds {
        let dir = if many { out.join(format!("seed{seed}")) } else { out.clone() };
        let r = run_to_dir(&cfg, seed, &dir)?;
        println!(
            "{} seed={} batches={} accuracy={:.4} flagged={} -> {}",
            r.method,
            seed,
            r.batches.len(),
            r.overall_accuracy,
            r.flagged.len(),
            dir.display()
        );
    }
    Ok(())
}

fn sweep(common: &Common) -> Result<()> {
    let (cfg, out) = common.resolve()?;
    for (dir, r) in run_sweep(&cfg, &out)? {
        println!(
            "{:<16} lr={:e} seed={} accuracy={:.4} -> {}",
            r.method.as_str(),
            r.config.hyper.lr,
            r.seed,
            r.overall_accuracy,
            dir.display()
        );
    }
    Ok(())
}

fn gen(common: &Common, batches: Option<usize>) -> Result<()> {
    let (cfg, out) = common.resolve()?;
    let mut spec = cfg
        .scenario
        .clone()
        .ok_or_else(|| Error::Config("gen needs a scenario".into()))?;
    spec.seed = cfg.seeds[0];
    spec.batch_size = cfg.hyper.batch_size;
    let stream = ScenarioStream::new(spec.clone(), cfg.hyper.patch_grid)?;
    let archive = stream.export_archive(batches.unwrap_or(stream.len()))?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let spec_path = out.join("scenario.json");
    let json = serde_json::to_string_pretty(&spec).map_err(|source| Error::Json {
        context: spec_path.display().to_string(),
        source,
    })?;
    std::fs::write(&spec_path, json + "\n").map_err(|e| Error::io(&spec_path, e))?;
    let archive_path = out.join("embeddings.rtem");
    archive.save(&archive_path)?;
    println!(
        "wrote {} and {} ({} samples, K={}, D={})",
        spec_path.display(),
        archive_path.display(),
        archive.len(),
        archive.classes,
        archive.dim
    );
    Ok(())
}

fn report(paths: &[PathBuf], csv: Option<&Path>) -> Result<()> {
    let mut found = Vec::new();
    for p in paths {
        found.extend(find_reports(p)?);
    }
    if found.is_empty() {
        return Err(Error::Config("no report.json found".into()));
    }
    let rows = summarize_reports(&found)?;
    println!(
        "{:<16} {:>6} {:>10} {:>8} {:>9} {:>8}  phases",
        "method", "seed", "lr", "batches", "accuracy", "flagged"
    );
    for r in &rows {
        let phases: Vec<String> = r.phases.iter().map(|(p, a)| format!("{p}={a:.4}")).collect();
        println!(
            "{:<16} {:>6} {:>10.1e} {:>8} {:>9.4} {:>8}  {}",
            r.method.as_str(),
            r.seed,
            r.lr,
            r.batches,
            r.overall_accuracy,
            r.flagged,
            phases.join(" ")
        );
    }
    if let Some(path) = csv {
        write_summary_csv(&rows, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep(c) => sweep(c),
        Command::Gen { common, batches } => gen(common, *batches),
        Command::Report { paths, csv } => report(paths, csv.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

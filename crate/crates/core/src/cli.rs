//! Command-line front end. The binary is a thin wrapper around [`run`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{CliConfig, DatasetSource};
use crate::error::{Error, Result};
use crate::experiments::{emit_report, fit_partition, read_report, run_experiment, table_csv, train_partition, Scenario};
use crate::ingest::load_dataset;
use crate::learners::save_model;
use crate::model::{validate_dataset, Dataset, SurgemeClass, NUM_CLASSES};
use crate::seed;
use crate::synthgen::{generate_benchmark_with, write_benchmark};

#[derive(Debug, Parser)]
#[command(name = "surgeme-kit", version, about = "Surgeme recognition from robot kinematics")]
pub struct Cli {
    /// TOML configuration file; see config.reference.toml for every key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,
    /// Print the resolved configuration and planned outputs, then stop.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic benchmark (kinematics, annotations, manifest).
    Synth,
    /// Load a manifest and report counts, dropped annotations and invariant violations.
    IngestCheck {
        /// Manifest file; defaults to `dataset.manifest` from the config.
        manifest: Option<PathBuf>,
    },
    /// Train one model and save it.
    Train,
    /// Run the configured experiment and write its report set.
    Experiment,
    /// Re-render report directories from their report.json.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

impl Cli {
    /// Loads the config file (or defaults) and applies flag overrides.
    pub fn resolve_config(&self) -> Result<CliConfig> {
        let mut cfg = match &self.config {
            Some(p) => CliConfig::load(p)?,
            None => CliConfig::default(),
        };
        if let Some(s) = self.seed.or(cfg.seed) {
            cfg.apply_seed(s);
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SURGEME_KIT_LOG", "warn")).try_init();
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            1
        }
    }
}

/// Runs a parsed command, writing human-readable output to `out`. Returns
/// the exit code for outcomes that are not errors (1 when `ingest-check`
/// finds violations).
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = cli.resolve_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| {
        let out = &mut buf;
        match &cli.command {
            Command::Synth => cmd_synth(cli, &cfg, out),
            Command::IngestCheck { manifest } => cmd_ingest_check(cli, &cfg, manifest.as_deref(), out),
            Command::Train => cmd_train(cli, &cfg, out),
            Command::Experiment => cmd_experiment(cli, &cfg, out),
            Command::Report { dirs } => cmd_report(cli, &cfg, dirs, out),
        }
    });
    out.write_all(&buf).map_err(|e| Error::io("<stdout>", e))?;
    result
}

fn w(out: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(text).map_err(|e| Error::io("<stdout>", e))
}

fn dry_run(cfg: &CliConfig, plan: &str, out: &mut dyn Write) -> Result<i32> {
    w(out, format_args!("# dry run: {plan}\n{}", cfg.to_toml()))?;
    Ok(0)
}

fn ensure_writable(dir: &Path, force: bool) -> Result<()> {
    match std::fs::read_dir(dir) {
        Ok(mut entries) => {
            if entries.next().is_some() && !force {
                return Err(Error::Config(format!(
                    "output directory {} is not empty; pass --force to write into it",
                    dir.display()
                )));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::io(dir, e)),
    }
}

fn load(cfg: &CliConfig) -> Result<Dataset> {
    let profiles = cfg.profiles()?;
    match cfg.dataset.source {
        DatasetSource::Synth => generate_benchmark_with(&cfg.synth, &profiles),
        DatasetSource::Manifest => {
            let manifest = cfg.dataset.manifest.as_deref().expect("validated");
            let (ds, report) = load_dataset(manifest, &profiles)?;
            if !report.dropped.is_empty() {
                log::warn!("{} annotations dropped while segmenting", report.dropped.len());
            }
            Ok(ds)
        }
    }
}

fn cmd_synth(cli: &Cli, cfg: &CliConfig, out: &mut dyn Write) -> Result<i32> {
    if cli.dry_run {
        return dry_run(cfg, &format!("write benchmark `{}` to {}", cfg.synth.name, cfg.out.display()), out);
    }
    ensure_writable(&cfg.out, cli.force)?;
    let profiles = cfg.profiles()?;
    let manifest = write_benchmark(&cfg.synth, &profiles, &cfg.out)?;
    let (ds, report) = load_dataset(&manifest, &profiles)?;
    w(
        out,
        format_args!(
            "wrote {} trials, {} segments; manifest {}\n",
            report.trials,
            ds.segments.len(),
            manifest.display()
        ),
    )?;
    write_class_counts(&ds, out)?;
    Ok(0)
}

fn write_class_counts(ds: &Dataset, out: &mut dyn Write) -> Result<()> {
    let mut robots: Vec<&str> = ds.segments.iter().map(|s| s.robot.as_str()).collect();
    robots.sort_unstable();
    robots.dedup();
    for robot in robots {
        let mut counts = [0usize; NUM_CLASSES];
        for s in ds.segments.iter().filter(|s| s.robot == robot) {
            counts[s.label.id()] += 1;
        }
        let per_class: Vec<String> = counts
            .iter()
            .enumerate()
            .map(|(c, n)| format!("{}={n}", SurgemeClass::from_id(c).expect("class id").name()))
            .collect();
        w(out, format_args!("robot {robot}: {}\n", per_class.join(" ")))?;
    }
    Ok(())
}

fn cmd_ingest_check(cli: &Cli, cfg: &CliConfig, manifest: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let manifest = manifest
        .or(cfg.dataset.manifest.as_deref())
        .ok_or_else(|| Error::Config("no manifest given and dataset.manifest is unset".into()))?;
    if cli.dry_run {
        return dry_run(cfg, &format!("check {}", manifest.display()), out);
    }
    let (ds, report) = load_dataset(manifest, &cfg.profiles()?)?;
    w(
        out,
        format_args!(
            "trials {}\nframes {}\nsegments {}\n",
            report.trials,
            report.frames,
            ds.segments.len()
        ),
    )?;
    write_class_counts(&ds, out)?;
    w(out, format_args!("dropped annotations {}\n", report.dropped.len()))?;
    for d in &report.dropped {
        w(
            out,
            format_args!(
                "  {} {} [{}, {}]: {} frames\n",
                d.trial_id, d.surgeme_name, d.start_ts, d.end_ts, d.frames
            ),
        )?;
    }
    let violations = validate_dataset(&ds);
    w(out, format_args!("violations {}\n", violations.len()))?;
    for v in &violations {
        w(out, format_args!("  {v}\n"))?;
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}

fn cmd_train(cli: &Cli, cfg: &CliConfig, out: &mut dyn Write) -> Result<i32> {
    let exp = &cfg.experiment;
    let ratio = match exp.scenario {
        Scenario::NoTransfer => 0.0,
        Scenario::DomainTransfer => cfg
            .train
            .ratio
            .unwrap_or_else(|| exp.ratio_grid.iter().copied().fold(0.0, f64::max)),
    };
    let path = cfg.out.join(&cfg.train.model_file);
    if cli.dry_run {
        return dry_run(cfg, &format!("train {} model into {}", exp.learner.kind().short_name(), path.display()), out);
    }
    if path.exists() && !cli.force {
        return Err(Error::Config(format!(
            "{} already exists; pass --force to overwrite it",
            path.display()
        )));
    }
    let ds = load(cfg)?;
    let part = train_partition(&ds, exp, ratio)?;
    let (model, accuracy) = fit_partition(&ds, exp, &part, seed::derive_named(exp.seeds[0], "train"))?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    save_model(&path, &model)?;
    w(
        out,
        format_args!(
            "{} trained on {} segments; held-out accuracy {:.4} on {} segments; saved {}\n",
            model.kind().short_name(),
            part.train.len(),
            accuracy,
            part.test.len(),
            path.display()
        ),
    )?;
    Ok(0)
}

fn cmd_experiment(cli: &Cli, cfg: &CliConfig, out: &mut dyn Write) -> Result<i32> {
    if cli.dry_run {
        return dry_run(cfg, &format!("run experiment, report into {}", cfg.out.display()), out);
    }
    ensure_writable(&cfg.out, cli.force)?;
    let ds = load(cfg)?;
    let report = run_experiment(&ds, &cfg.experiment)?;
    let files = emit_report(&report, &cfg.out)?;
    w(out, format_args!("{}", report.table_csv()))?;
    w(out, format_args!("wrote {} files to {}\n", files.len(), cfg.out.display()))?;
    Ok(0)
}

fn cmd_report(cli: &Cli, cfg: &CliConfig, dirs: &[PathBuf], out: &mut dyn Write) -> Result<i32> {
    if cli.dry_run {
        let list: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
        return dry_run(cfg, &format!("re-render {}", list.join(", ")), out);
    }
    let mut reports = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let report = read_report(&dir.join("report.json"))?;
        emit_report(&report, dir)?;
        reports.push(report);
    }
    let table = table_csv(&reports);
    if dirs.len() > 1 {
        if let Some(o) = &cli.out {
            std::fs::create_dir_all(o).map_err(|e| Error::io(o, e))?;
            let path = o.join("table.csv");
            std::fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
        }
    }
    w(out, format_args!("{table}"))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("surgeme-kit").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let cli = parse(&["experiment", "--seed", "9", "--jobs", "2", "--out", "x"]);
        let cfg = cli.resolve_config().unwrap();
        assert_eq!(cfg.synth.seed, 9);
        assert_eq!(cfg.experiment.seeds, vec![9, 10, 11]);
        assert_eq!(cfg.jobs, 2);
        assert_eq!(cfg.out, PathBuf::from("x"));
    }

    #[test]
    fn dry_run_touches_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("bench");
        let cli = parse(&["synth", "--dry-run", "--out", target.to_str().unwrap()]);
        let mut buf = Vec::new();
        assert_eq!(execute(&cli, &mut buf).unwrap(), 0);
        assert!(!target.exists());
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# dry run"));
        assert!(text.contains("desk-synth-v1"));
    }

    #[test]
    fn non_empty_out_needs_force() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("keep.txt"), "x").unwrap();
        let cli = parse(&["synth", "--out", dir.path().to_str().unwrap()]);
        let err = execute(&cli, &mut Vec::new()).unwrap_err();
        assert_eq!(err.tag(), "config");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_manifest_is_reported() {
        let cli = parse(&["ingest-check", "/nonexistent/manifest.csv"]);
        assert_eq!(execute(&cli, &mut Vec::new()).unwrap_err().tag(), "io");
        let cli = parse(&["ingest-check"]);
        assert_eq!(execute(&cli, &mut Vec::new()).unwrap_err().tag(), "config");
    }
}

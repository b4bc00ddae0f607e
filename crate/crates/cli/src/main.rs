//! `maxid`: simulate max-i.d. fields, check their laws and classify flows.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use maxid_core::commands::{self, RunReport};
use maxid_core::config::{parse_grid, AuditConfig, Figure1Config, ModelSpec, OutputFormat, RunConfig};
use maxid_core::flowclass::{Psi, Verdict};
use maxid_core::rng::DEFAULT_SEED;
use maxid_core::{Error, Result};

#[derive(Parser)]
#[command(name = "maxid", version, about = "Poisson spectral representations of max-i.d. processes")]
struct Cli {
    /// TOML file with a [model] table and per-command tables.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config file.
    #[arg(long, global = true, env = "MAXID_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pgm,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PsiArg {
    Square,
    ExpInv,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerdictArg {
    Conservative,
    Dissipative,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one field on a grid.
    Simulate {
        /// Axes `lo:hi:n` separated by commas, or a list of 1-D points.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        error_budget: Option<f64>,
        #[arg(long, value_enum)]
        out: Option<Format>,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Three Penrose fBm rasters, H = 0.1, 0.5, 0.9.
    Figure1 {
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value = "figure1")]
        out: PathBuf,
    },
    /// Randomized suites for the γ bound and the Ky Fan inequalities.
    MetricsAudit {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, default_value = "metrics-audit.json")]
        report: PathBuf,
    },
    /// Simulated joint CDFs against the exact finite-dimensional law.
    FddCheck {
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, default_value = "fdd-check.json")]
        report: PathBuf,
    },
    /// Field at μ against the maximum of independent fields at μ/n.
    MaxidCheck {
        #[arg(long)]
        parts: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, default_value = "maxid-check.json")]
        report: PathBuf,
    },
    /// Conservative/dissipative flow test.
    Classify {
        #[arg(long, value_enum)]
        psi: Option<PsiArg>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        divergence_ratio: Option<f64>,
        /// Fail unless this verdict is reached.
        #[arg(long, value_enum)]
        expect: Option<VerdictArg>,
        #[arg(long, default_value = "classify.json")]
        report: PathBuf,
        #[arg(long, default_value = "classify-curves.csv")]
        curves: PathBuf,
    },
}

struct Loaded {
    config: RunConfig,
    hash: Option<String>,
    seed: u64,
}

fn load(cli: &Cli) -> Result<Loaded> {
    let (config, hash) = match &cli.config {
        Some(path) => {
            let (c, h) = RunConfig::load(path)?;
            (c, Some(h))
        }
        None => (RunConfig::from_toml("")?, None),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    Ok(Loaded { config, hash, seed })
}

fn model(l: &Loaded) -> Result<&ModelSpec> {
    l.config.model()
}

fn finish(report: RunReport, hash: Option<String>, path: &Path) -> Result<bool> {
    let report = report.with_hash(hash);
    report.write(path)?;
    for c in report.failures() {
        eprintln!("FAIL {}: {} > {}", c.name, c.statistic, c.tolerance);
    }
    eprintln!("{} {} -> {}", report.command, if report.pass { "passed" } else { "failed" }, path.display());
    Ok(report.pass)
}

fn run(cli: &Cli) -> Result<bool> {
    let l = load(cli)?;
    match &cli.command {
        Command::Simulate { grid, error_budget, out, output } => {
            let base = l.config.simulate.clone().unwrap_or_default();
            let grid = grid.clone().or(base.grid).ok_or_else(|| Error::Config("no grid given".into()))?;
            let format = match out {
                Some(Format::Csv) => OutputFormat::Csv,
                Some(Format::Pgm) => OutputFormat::Pgm,
                Some(Format::Json) => OutputFormat::Json,
                None => base.out,
            };
            let budget = error_budget.unwrap_or(base.error_budget);
            let (field, bytes) = commands::simulate_cmd(model(&l)?, &parse_grid(&grid)?, budget, l.seed, format)?;
            match output {
                Some(p) => std::fs::write(p, bytes)?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes)?;
                }
            }
            eprintln!(
                "simulated {} points from {} atoms; certificate {:.3e} (budget {:.1e})",
                field.values.len(),
                field.atoms,
                field.certificate,
                field.budget
            );
            Ok(true)
        }
        Command::Figure1 { size, out } => {
            let start = Instant::now();
            let mut cfg = l.config.figure1.clone().unwrap_or_else(Figure1Config::default);
            if let Some(s) = size {
                cfg.size = *s;
            }
            let panels = commands::figure1(&cfg, l.seed)?;
            for p in commands::figure1_files(&panels, out)? {
                eprintln!("wrote {}", p.display());
            }
            let report = commands::figure1_report(&panels, l.seed, start);
            finish(report, l.hash.clone(), &out.join("figure1.json"))
        }
        Command::MetricsAudit { trials, replicates, report } => {
            let mut cfg = l.config.metrics_audit.clone().unwrap_or_else(AuditConfig::default);
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.replicates = replicates.unwrap_or(cfg.replicates);
            finish(commands::metrics_audit_cmd(&cfg, l.seed)?, l.hash.clone(), report)
        }
        Command::FddCheck { replicates, report } => {
            let mut cfg = l.config.fdd_check.clone().unwrap_or_default();
            cfg.replicates = replicates.unwrap_or(cfg.replicates);
            finish(commands::fdd_check_cmd(model(&l)?, &cfg, l.seed)?, l.hash.clone(), report)
        }
        Command::MaxidCheck { parts, replicates, report } => {
            let mut cfg = l.config.maxid_check.clone().unwrap_or_default();
            cfg.parts = parts.unwrap_or(cfg.parts);
            cfg.replicates = replicates.unwrap_or(cfg.replicates);
            finish(commands::maxid_check_cmd(model(&l)?, &cfg, l.seed)?, l.hash.clone(), report)
        }
        Command::Classify { psi, samples, divergence_ratio, expect, report, curves } => {
            let mut cfg = l.config.classify.clone().unwrap_or_default();
            if let Some(p) = psi {
                cfg.psi = match p {
                    PsiArg::Square => Psi::Square,
                    PsiArg::ExpInv => Psi::ExpInv,
                };
            }
            cfg.samples = samples.unwrap_or(cfg.samples);
            cfg.divergence_ratio = divergence_ratio.unwrap_or(cfg.divergence_ratio);
            if cli.seed.is_some() || l.config.seed.is_some() {
                cfg.seed = l.seed;
            }
            let expect = expect.map(|v| match v {
                VerdictArg::Conservative => Verdict::Conservative,
                VerdictArg::Dissipative => Verdict::Dissipative,
            });
            let (run, flow) = commands::classify_cmd(model(&l)?, &cfg, expect)?;
            std::fs::write(curves, flow.curves_csv())?;
            let mut run = run;
            run.statistics["curves_csv_path"] = serde_json::Value::String(curves.display().to_string());
            eprintln!("verdict {:?}, diverging fraction {:.3}", flow.verdict, flow.diverging_fraction);
            finish(run, l.hash.clone(), report)
        }
    }
}

/// Where a command writes its JSON report, if it has one.
fn report_path(command: &Command) -> Option<(&'static str, PathBuf)> {
    match command {
        Command::Simulate { .. } => None,
        Command::Figure1 { out, .. } => Some(("figure1", out.join("figure1.json"))),
        Command::MetricsAudit { report, .. } => Some(("metrics-audit", report.clone())),
        Command::FddCheck { report, .. } => Some(("fdd-check", report.clone())),
        Command::MaxidCheck { report, .. } => Some(("maxid-check", report.clone())),
        Command::Classify { report, .. } => Some(("classify", report.clone())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some((name, path)) = report_path(&cli.command) {
                let body = serde_json::json!({
                    "schema": commands::SCHEMA,
                    "command": name,
                    "pass": false,
                    "error": e.to_string(),
                });
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    let _ = std::fs::create_dir_all(dir);
                }
                let _ = std::fs::write(&path, body.to_string() + "\n");
            }
            ExitCode::from(2)
        }
    }
}

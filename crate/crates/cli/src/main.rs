use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hetbo::harness::{report, run_experiment, ExperimentConfig, ExperimentSummary, SuiteConfig};
use hetbo::optimizer::Variant;

#[derive(Parser)]
#[command(name = "hetbo", version, about = "Heterogeneous-cost multi-objective Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Overrides),
    /// Run every experiment of a suite file.
    Suite(Overrides),
    /// Aggregate result directories into a problem-by-variant table.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Also write the table as CSV to this file.
        #[arg(long, env = "HETBO_REPORT_CSV")]
        csv: Option<PathBuf>,
    },
}

/// Flags take precedence over the config file; each has a `HETBO_` env var.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, env = "HETBO_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "HETBO_PROBLEM")]
    problem: Option<String>,
    #[arg(long, env = "HETBO_M")]
    m: Option<usize>,
    #[arg(long, env = "HETBO_D")]
    d: Option<usize>,
    /// Comma-separated cost ratios, one per objective.
    #[arg(long, env = "HETBO_RATIOS", value_delimiter = ',')]
    ratios: Option<Vec<u32>>,
    #[arg(long, env = "HETBO_RTHRES")]
    rthres: Option<u32>,
    #[arg(long, env = "HETBO_VARIANT")]
    variant: Option<Variant>,
    #[arg(long = "fe-max", env = "HETBO_FE_MAX")]
    fe_max: Option<usize>,
    #[arg(long, env = "HETBO_RUNS")]
    runs: Option<usize>,
    #[arg(long, env = "HETBO_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "HETBO_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "HETBO_WORKERS")]
    workers: Option<usize>,
}

impl Overrides {
    fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(v) = &self.problem {
            c.problem = v.clone();
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.d {
            c.d = v;
        }
        if let Some(v) = &self.ratios {
            c.ratios = v.clone();
        }
        if let Some(v) = self.rthres {
            c.r_thres = v;
        }
        if let Some(v) = self.variant {
            c.variant = v;
        }
        if let Some(v) = self.fe_max {
            c.fe_max_expensive = v;
        }
        if let Some(v) = self.runs {
            c.runs = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
    }
}

fn print_summary(s: &ExperimentSummary) {
    match s.statistics {
        Some(st) => println!(
            "{}: {} runs, IGD+ mean {:.4e} std {:.4e} median {:.4e}",
            s.directory.display(),
            s.runs.len(),
            st.mean,
            st.std,
            st.median
        ),
        None => println!("{}: no successful runs", s.directory.display()),
    }
    for (k, reason) in &s.failures {
        eprintln!("  run {k} failed: {reason}");
    }
}

fn execute(configs: Vec<ExperimentConfig>) -> Result<bool> {
    let mut ok = true;
    for config in configs {
        let summary = run_experiment(&config)
            .with_context(|| format!("experiment {} ({})", config.problem, config.variant))?;
        print_summary(&summary);
        ok &= summary.is_success();
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(o) => {
            let mut config = match &o.config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            };
            o.apply(&mut config);
            execute(vec![config])
        }
        Command::Suite(o) => {
            let Some(path) = &o.config else {
                bail!("suite needs --config pointing at a file of [[experiment]] tables");
            };
            let mut suite = SuiteConfig::load(path)?;
            if suite.experiment.is_empty() {
                bail!("{} lists no experiments", path.display());
            }
            for c in &mut suite.experiment {
                o.apply(c);
            }
            execute(suite.experiment)
        }
        Command::Report { dirs, csv } => {
            let table = report(&dirs)?;
            print!("{}", table.to_text());
            if let Some(path) = csv {
                std::fs::write(&path, table.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config_fields() {
        let cli = Cli::parse_from([
            "hetbo", "run", "--problem", "wfg4", "--ratios", "1,10,10", "--variant", "sbp-bo-r", "--fe-max", "200",
        ]);
        let Command::Run(o) = cli.command else { panic!("expected run") };
        let mut c = ExperimentConfig::default();
        o.apply(&mut c);
        assert_eq!(c.problem, "wfg4");
        assert_eq!(c.ratios, vec![1, 10, 10]);
        assert_eq!(c.variant, Variant::SbpBoR);
        assert_eq!(c.fe_max_expensive, 200);
        assert_eq!(c.runs, ExperimentConfig::default().runs);
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qwalk::cli::{self, Assignments, CliError, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "qwalk", version, about = "Dissipative quantum walk simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write tables and plots.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated output formats (csv, json, svg).
        #[arg(long)]
        formats: Option<String>,
        /// Worker threads for sweeps (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Resolve a configuration and print the effective parameters.
    Validate {
        /// Config file (TOML or JSON).
        path: Option<PathBuf>,
        #[command(flatten)]
        source: ConfigSource,
    },
}

#[derive(Args)]
struct ConfigSource {
    /// fig2, fig3, fig4, fig5 or custom.
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Config file (TOML or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set g=0.5`. Repeatable; wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigSource {
    fn resolve(&self, path: Option<&PathBuf>, formats: Option<&str>) -> Result<RunConfig, CliError> {
        let mut a = Assignments::default();
        if let Some(p) = path.or(self.config.as_ref()) {
            a.extend(Assignments::from_file(p)?);
        }
        for s in &self.overrides {
            let (k, v) = Assignments::parse_override(s)?;
            a.push(k, v);
        }
        if let Some(f) = formats {
            let list: Vec<serde_json::Value> =
                cli::parse_formats(f)?.iter().map(|f| serde_json::to_value(f).expect("format serializes")).collect();
            a.push("output.formats", serde_json::Value::Array(list));
        }
        Ok(cli::resolve(&a, self.scenario)?)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { source, out, formats, jobs } => {
            let cfg = source.resolve(None, formats.as_deref())?;
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            let run = || cli::run(&cfg, &out);
            let report = match jobs {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Config(cli::ConfigError(format!("jobs: {e}"))))?
                    .install(run),
                None => run(),
            }?;
            let failed = report.failed();
            if failed > 0 {
                eprintln!("warning: {failed} of {} points failed; see errors.csv", report.rows.len());
            }
            println!("wrote {} files to {}", report.files.len(), out.display());
            Ok(())
        }
        Command::Validate { path, source } => {
            let cfg = source.resolve(path.as_ref(), None)?;
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            print!("{}", cli::describe(&cfg));
            Ok(())
        }
    }
}

fn main() -> anyhow::Result<ExitCode> {
    let args = Cli::parse();
    match execute(args) {
        Ok(()) => Ok(ExitCode::SUCCESS),
        Err(e) => {
            let code = e.exit_code() as u8;
            eprintln!("error: {:#}", anyhow::Error::new(e));
            Ok(ExitCode::from(code))
        }
    }
}

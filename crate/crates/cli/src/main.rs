use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stiefel_sync_cli::audit::audit_csv;
use stiefel_sync_cli::run::{batch_threads, run_batch};
use stiefel_sync_cli::{exit, generate_scenario, CliError, Template};

/// Simulate and audit heterogeneous Kuramoto ensembles on Stiefel manifolds.
#[derive(Parser)]
#[command(name = "stiefel-sync", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files; writes <name>.csv and <name>.report.json per scenario.
    ///
    /// Scenarios run in parallel, capped by STIEFEL_SYNC_THREADS.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a scenario file from a template.
    Gen {
        /// homogeneous | heterogeneous-framework | stability-pair | kuramoto-circle
        template: String,
        #[arg(long)]
        seed: u64,
        /// Override a template knob, e.g. --set kappa=0.8
        #[arg(long = "set", value_name = "KEY=VAL")]
        set: Vec<String>,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the lemma audits on an emitted series file.
    Audit {
        csv: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

fn fail(e: &CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn gen(template: &str, seed: u64, set: &[String], out: Option<PathBuf>) -> Result<(), CliError> {
    let template: Template = template.parse()?;
    let overrides = set
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
                .ok_or_else(|| CliError::Generation(format!("override `{kv}` is not KEY=VAL")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let json = generate_scenario(template, seed, &overrides)?.to_json();
    match out {
        Some(path) => std::fs::write(&path, json).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { configs, out } => {
            let mut code = exit::OK;
            for (path, result) in configs.iter().zip(run_batch(&configs, &out, batch_threads())) {
                let c = match result {
                    Ok(report) => {
                        let audits: Vec<String> = report
                            .audits
                            .iter()
                            .map(|a| format!("{:?}={}", a.lemma, if a.pass { "pass" } else { "FAIL" }))
                            .collect();
                        println!(
                            "{}: exit {} consensus={} audits=[{}]",
                            report.scenario,
                            report.outcome.exit_code,
                            report.consensus.as_ref().map_or("-", |c| c.status.as_str()),
                            audits.join(" ")
                        );
                        report.outcome.exit_code
                    }
                    Err(e) => {
                        eprint!("{}: ", path.display());
                        fail(&e)
                    }
                };
                code = code.max(c);
            }
            code
        }
        Command::Gen { template, seed, set, out } => {
            gen(&template, seed, &set, out).err().map_or(exit::OK, |e| fail(&e))
        }
        Command::Audit { csv, config } => match audit_csv(&csv, &config) {
            Ok(res) => {
                println!("{}", serde_json::to_string_pretty(&res).expect("audit results serialize"));
                if res.pass() {
                    exit::OK
                } else {
                    exit::AUDIT_FAILED
                }
            }
            Err(e) => fail(&e),
        },
    };
    ExitCode::from(code as u8)
}

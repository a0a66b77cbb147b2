mod commands;
mod config;
mod files;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use hgt_core::Error;
use serde::Serialize;
use serde_json::{json, Map, Value};

use files::Format;

#[derive(Parser, Debug)]
#[command(name = "hgt", version, about = "Strict higher gauge theory workbench")]
struct Cli {
    /// Run configuration (JSON). Command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Progress on stderr; repeat for more.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Check every axiom of a crossed or 2-crossed module.
    ValidateModule {
        /// Registry name or module description file.
        module: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized gauge identities on Taylor jets.
    CheckIdentities {
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an instance directory with known ground truth.
    Gen {
        #[arg(long, value_enum)]
        kind: commands::Kind,
        /// Instance spec (JSON).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Instance directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
        /// Self-dual (+1) or anti-self-dual (-1), for `--kind selfdual`.
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        sign: i32,
    },
    /// Canonical gauge of a 2-connection.
    FixGauge2(FixArgs),
    /// Canonical gauge of a 3-connection.
    FixGauge3(FixArgs),
    /// Fix a random gauge transform of the zero 2-connection.
    Poincare2(PoincareArgs),
    /// Fix a random gauge transform of the zero 3-connection.
    Poincare3(PoincareArgs),
    /// Build a self-dual field and check the Yang-Mills equation.
    Selfdual {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        sign: i32,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the field as a cochain file.
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical constants of the gauge estimates over many instances.
    Survey {
        #[arg(long)]
        seeds: Option<u64>,
        /// Survey configuration (JSON); flags below override it.
        #[arg(long)]
        survey: Option<PathBuf>,
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        pipeline: Option<u8>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        amplitudes: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in modules.
    Registry {
        #[command(subcommand)]
        action: RegistryAction,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RegistryAction {
    /// Write every registry module as `<name>.json`.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args, Debug, Serialize)]
struct FixArgs {
    #[arg(long)]
    module: Option<String>,
    /// Instance manifest or directory from `gen`.
    #[arg(long)]
    conn: Option<PathBuf>,
    /// Report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the canonical representative.
    #[arg(long)]
    emit_canonical: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Serialize)]
struct PoincareArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    module: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn insert<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        map.insert(
            key.into(),
            serde_json::to_value(v).expect("flag serializes"),
        );
    }
}

/// Name of the subcommand and the run-config fields its flags set.
fn flags(cli: &Cli) -> (String, Value) {
    let mut f = Map::new();
    let name = match &cli.command {
        Command::ValidateModule { module, out } => {
            insert(&mut f, "module", module.clone());
            insert(&mut f, "output", out.clone());
            "validate-module"
        }
        Command::CheckIdentities { module, out, .. } => {
            insert(&mut f, "module", module.clone());
            insert(&mut f, "output", out.clone());
            "check-identities"
        }
        Command::Gen { out, .. } => {
            insert(&mut f, "output", Some(out.clone()));
            "gen"
        }
        Command::FixGauge2(a) | Command::FixGauge3(a) => {
            insert(&mut f, "module", a.module.clone());
            insert(&mut f, "instance", a.conn.clone());
            insert(&mut f, "output", a.out.clone());
            if matches!(cli.command, Command::FixGauge2(_)) {
                "fix-gauge2"
            } else {
                "fix-gauge3"
            }
        }
        Command::Poincare2(a) | Command::Poincare3(a) => {
            insert(&mut f, "module", a.module.clone());
            insert(&mut f, "seed", a.seed);
            insert(&mut f, "output", a.out.clone());
            if matches!(cli.command, Command::Poincare2(_)) {
                "poincare2"
            } else {
                "poincare3"
            }
        }
        Command::Selfdual { seed, out, .. } => {
            insert(&mut f, "seed", *seed);
            insert(&mut f, "output", out.clone());
            "selfdual"
        }
        Command::Survey { module, out, .. } => {
            insert(&mut f, "module", module.clone());
            insert(&mut f, "output", out.clone());
            "survey"
        }
        Command::Registry {
            action: RegistryAction::Export { out },
        } => {
            insert(&mut f, "output", Some(out.clone()));
            "registry-export"
        }
    };
    f.insert("subcommand".into(), json!(name));
    if cli.verbose > 0 {
        f.insert("verbosity".into(), json!(cli.verbose));
    }
    (name.to_string(), Value::Object(f))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver { .. } => 1,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let (name, flag_values) = flags(cli);
    let env = std::env::var(config::TOL_ENV).ok();
    let loaded = config::load(cli.config.as_ref(), env, flag_values)?;
    let outcome = commands::dispatch(&cli.command, &loaded.config)?;
    let mut report = Map::new();
    report.insert("tool".into(), json!("hgt"));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("command".into(), json!(name));
    report.insert("arguments".into(), serde_json::to_value(&cli.command)?);
    report.insert("config".into(), serde_json::to_value(&loaded.config)?);
    if let Some(file) = &loaded.file {
        report.insert("config_file".into(), file.clone());
    }
    if let Some(env) = &loaded.env {
        report.insert("environment".into(), json!({ config::TOL_ENV: env }));
    }
    if let Some(h) = &outcome.module_hash {
        report.insert("module_hash".into(), json!(h));
    }
    report.insert("passed".into(), json!(outcome.passed));
    report.insert("result".into(), outcome.result);
    let text = serde_json::to_string_pretty(&Value::Object(report))? + "\n";
    // gen writes its manifest into the output directory; the report goes to stdout
    match (&loaded.config.output, name.as_str()) {
        (Some(path), n) if n != "gen" && n != "registry-export" => {
            files::write_atomic(path, text.as_bytes())?
        }
        _ => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("hgt: one or more asserted bounds failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("hgt: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

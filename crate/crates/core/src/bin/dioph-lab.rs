use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Integer;

use dioph_lab::engine::{EngineConfig, Strategy};
use dioph_lab::report::{write_json, Format, StoredArtifact};
use dioph_lab::synth::SynthConfig;
use dioph_lab::{exponents, lab, Error};

#[derive(Parser, Debug)]
#[command(name = "dioph-lab", version, about = "Best simultaneous approximations, exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args, Debug)]
struct Precision {
    /// Working precision in bits
    #[arg(long, env = "DIOPH_LAB_PRECISION", default_value_t = exponents::DEFAULT_PREC)]
    precision_bits: u32,
    /// Escalation stops here with exit code 3
    #[arg(long, default_value_t = 4096)]
    precision_cap: u32,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate g_k, G(lambda), the limit and the exponent chain on a grid
    Roots {
        /// Comma separated lambda values
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.5,0.6,0.7,0.8,0.9")]
        lambda: Vec<String>,
        /// Largest k; rows for k = 1..=K
        #[arg(long, default_value_t = 4)]
        k: u32,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        output: Output,
    },
    /// Best approximations of a target and their pattern word
    Analyze {
        /// `golden`, `sqrt:2,3,5`, `@artifact.json`, or exact coordinates such as `0.25,1/3,0.7`
        target: String,
        #[arg(long, default_value = "1000000")]
        qmax: String,
        /// Visit every denominator instead of enumerating lattice points
        #[arg(long)]
        scan: bool,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        output: Output,
    },
    /// Construct a point with a prescribed pattern and store the artifact
    Synthesize {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 1_000_000)]
        q1: u64,
        #[command(flatten)]
        precision: Precision,
        /// Artifact file; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-derive all checks of a stored artifact
    Verify {
        artifact: PathBuf,
        #[command(flatten)]
        precision: Precision,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quick end-to-end checks
    Selftest,
}

fn engine_config(p: &Precision, scan: bool) -> EngineConfig {
    EngineConfig {
        strategy: if scan { Strategy::Scan } else { Strategy::Enumerate },
        precision_bits: p.precision_bits,
        precision_cap: p.precision_cap,
        ..EngineConfig::default()
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Roots { lambda, k, precision, output } => {
            let ks: Vec<u32> = (1..=k).collect();
            let table = lab::roots(&lambda, &ks, precision.precision_bits, precision.precision_cap)?;
            table.write(output.format.into(), output.out.as_deref())?;
        }
        Command::Analyze { target, qmax, scan, precision, output } => {
            let q_max: Integer = qmax.parse().map_err(|e| Error::Domain(format!("bad --qmax {qmax:?}: {e}")))?;
            let report = lab::analyze(&target, &q_max, &engine_config(&precision, scan))?;
            report.write(output.format.into(), output.out.as_deref())?;
        }
        Command::Synthesize { lambda, k, steps, q1, precision, out } => {
            let cfg = SynthConfig {
                lambda,
                k,
                steps,
                q1,
                precision_bits: precision.precision_bits,
                precision_cap: precision.precision_cap,
                ..SynthConfig::default()
            };
            let art = lab::synthesize(&cfg)?;
            write_json(&art, out.as_deref())?;
            if !art.conditions.exact_hold() {
                eprintln!("exact conditions failed");
                return Ok(ExitCode::from(4));
            }
        }
        Command::Verify { artifact, precision, out } => {
            let stored = StoredArtifact::read(&artifact)?;
            let report = lab::verify(&stored, &engine_config(&precision, false))?;
            write_json(&report, out.as_deref())?;
            if !report.passed {
                eprintln!("verification failed");
                return Ok(ExitCode::from(4));
            }
        }
        Command::Selftest => {
            let checks = lab::selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.to_string(), "code": e.exit_code() });
            eprintln!("{msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

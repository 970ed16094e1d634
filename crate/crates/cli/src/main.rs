use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use specband_cli::config::ExperimentConfig;
use specband_cli::pipeline::prepare;
use specband_cli::report::write_atomic;
use specband_cli::{run, verify, CliError};
use specband_core::geometry::{beurling_density, WeightKind};
use specband_core::io;
use specband_core::operator::discretize;
use specband_core::symbol::make_symbol;

#[derive(Parser)]
#[command(name = "specband", version, about = "Paley-Wiener spaces of elliptic operators on a periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a config file.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
        #[arg(long, default_value = "specband-verify")]
        out: PathBuf,
    },
    /// Write the reproducing kernel (or its diagonal) of a config.
    Kernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dump: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelFormat::Csv)]
        format: KernelFormat,
        /// Only the diagonal `k(x, x)`, as CSV.
        #[arg(long)]
        diagonal: bool,
    },
    /// Beurling density curve of a point-set file.
    Density {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum, default_value_t = WeightArg::Lebesgue)]
        weight: WeightArg,
        /// Comma-separated radii (default: the config's density_radii).
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the discretized operator as COO triplets.
    ExportOperator {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelFormat {
    Csv,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Lebesgue,
    Nu,
    KernelDiagonal,
}

impl From<WeightArg> for WeightKind {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Lebesgue => WeightKind::Lebesgue,
            WeightArg::Nu => WeightKind::Nu,
            WeightArg::KernelDiagonal => WeightKind::KernelDiagonal,
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn buffer<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> specband_core::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let result = run::run(&cfg, &out)?;
            for c in &result.outcomes {
                let status = match (c.hard, c.passed) {
                    (false, _) => "INFO",
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                };
                println!("[{status}] {}", c.name);
            }
            println!("report written to {}", out.join("report.json").display());
            if !result.passed() {
                return Err(CliError::CheckFailed(result.failures().join(", ")));
            }
        }
        Command::Verify { suite, out } => {
            let summary = verify::run_suite(suite, &out)?;
            if !summary.passed() {
                return Err(CliError::CheckFailed(format!(
                    "criteria {:?} failed",
                    summary.failed_ids()
                )));
            }
        }
        Command::Kernel {
            config,
            dump,
            format,
            diagonal,
        } => {
            let p = prepare(&load(&config)?)?;
            let bytes = if diagonal {
                buffer(|b| io::write_diagonal_csv(&p.grid, &p.diagonal, b))?
            } else {
                match format {
                    KernelFormat::Csv => buffer(|b| io::write_kernel_csv(&p.kernel, b))?,
                    KernelFormat::Bin => buffer(|b| io::write_kernel_binary(&p.kernel, b))?,
                }
            };
            write_atomic(&dump, &bytes)?;
        }
        Command::Density {
            config,
            points,
            weight,
            radii,
            out,
        } => {
            let cfg = load(&config)?;
            let radii = radii.unwrap_or_else(|| cfg.density_radii.clone());
            let kind = WeightKind::from(weight);
            let grid = cfg.grid.build()?;
            let file = File::open(&points)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", points.display())))?;
            let set = io::read_pointset(&grid, BufReader::new(file))?;
            let w = if kind == WeightKind::KernelDiagonal {
                prepare(&cfg)?.weight(kind)?
            } else {
                let symbol = make_symbol(&grid, &cfg.symbol, cfg.theta)?;
                let source = match kind {
                    WeightKind::Nu => specband_core::geometry::WeightSource::Nu(&symbol),
                    _ => specband_core::geometry::WeightSource::Lebesgue(&grid),
                };
                specband_core::geometry::make_weight(source)?
            };
            let curve = beurling_density(&set, &w, &radii)?;
            let bytes = buffer(|b| io::write_density_csv(&curve, b))?;
            match out {
                Some(path) => write_atomic(&path, &bytes)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut w = BufWriter::new(stdout.lock());
                    w.write_all(&bytes)?;
                    w.flush()?;
                }
            }
        }
        Command::ExportOperator { config, out } => {
            let cfg = load(&config)?;
            let grid = cfg.grid.build()?;
            let op = discretize(&make_symbol(&grid, &cfg.symbol, cfg.theta)?)?;
            write_atomic(&out, &buffer(|b| io::write_operator_coo(&op, b))?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

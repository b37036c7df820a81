use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracwave::cli::{run, Command, EXIT_CONFIG, EXIT_EVAL};
use fracwave::config::RunConfig;

#[derive(Parser)]
#[command(name = "fracwave", version, about = "Kernels, Cauchy solves and checks for fractional diffusion-wave equations")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// Run configuration (`key = value` lines, `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path; the summary is written next to it with a `.summary.txt` suffix.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the command's main tolerance or target.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Tabulate constant-coefficient kernels.
    Kernel,
    /// Solve a Cauchy problem and report residuals and initial gaps.
    Solve,
    /// Run the identity, special-function and envelope suites.
    Verify,
    /// Compare the Cauchy solver with the finite-difference reference.
    OracleCompare,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("cannot configure {k} threads: {e}");
            return ExitCode::from(EXIT_EVAL as u8);
        }
    }
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p),
        None => RunConfig::parse(""),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let cmd = match args.cmd {
        Cmd::Kernel => Command::Kernel,
        Cmd::Solve => Command::Solve,
        Cmd::Verify => Command::Verify,
        Cmd::OracleCompare => Command::OracleCompare,
    };
    let out = match run(cmd, &cfg, args.tol) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match &args.out {
        Some(path) => {
            let mut summary = path.clone().into_os_string();
            summary.push(".summary.txt");
            let written = std::fs::write(path, &out.csv).and_then(|_| std::fs::write(&summary, &out.summary));
            if let Err(e) = written {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_EVAL as u8);
            }
            print!("{}", out.summary);
        }
        None => {
            print!("{}", out.csv);
            eprint!("{}", out.summary);
        }
    }
    ExitCode::from(out.exit_code as u8)
}

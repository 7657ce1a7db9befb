//! Command-line front end: `run` and `verify` over JSON scenarios.

pub mod report;
pub mod run;
pub mod scenario;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use report::RunReport;
use scenario::Scenario;

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser, Debug)]
#[command(name = "contact-mech", version, about = "Contact mechanics from coordinate expressions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Integrate or analyse a scenario and write its CSV and report.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_parser = parse_seed, default_value = "0x5EED")]
        seed: u64,
    },
    /// Check a property suite against a scenario.
    Verify {
        scenario: PathBuf,
        #[arg(long)]
        suite: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_parser = parse_seed, default_value = "0x5EED")]
        seed: u64,
    },
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim();
    let r = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => t.parse(),
    };
    r.map_err(|e| format!("invalid seed '{s}': {e}"))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(cmd: Cmd) -> Result<RunReport> {
    match cmd {
        Cmd::Run { scenario, out, seed } => {
            let s = Scenario::load(&scenario)?;
            let o = run::run(&s, seed)?;
            write(&out, &s.output.csv, &o.csv)?;
            write(&out, &s.output.report, &o.report.to_text())?;
            Ok(o.report)
        }
        Cmd::Verify {
            scenario,
            suite,
            out,
            seed,
        } => {
            let s = Scenario::load(&scenario)?;
            let r = verify::verify(&s, &suite, seed)?;
            write(&out, &format!("verify_{suite}.txt"), &r.to_text())?;
            Ok(r)
        }
    }
}

/// Exit code 0 when every line passes, 1 when a diagnostic fails, 2 on any error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let result = execute(cli.cmd);
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(r) => {
            print!("{}", r.to_text());
            if r.all_pass() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

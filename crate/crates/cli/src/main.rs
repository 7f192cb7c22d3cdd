//! `bgt-l0`: batch driver for feature dumps, prediction, fitting,
//! cross-validation, posterior sampling, feature selection and synthesis.
//!
//! Exit status: 0 on success, 1 on invalid input or usage, 2 on internal
//! failure. A `manifest.json` describing the run is written to `--out` even
//! when the command fails.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use output::{Manifest, OutDir};

/// Failure classes mapped to exit codes.
pub enum Failure {
    /// Bad input: malformed files, invalid parameters, inconsistent options.
    Invalid(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Internal(_) => 2,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Invalid(e) | Failure::Internal(e) => e,
        }
    }
}

impl From<bgt_l0::Error> for Failure {
    fn from(e: bgt_l0::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<bgt_l0::Error>() {
            Ok(core) => Failure::Invalid(core.into()),
            Err(e) => Failure::Internal(e),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let common = cli.command.common().clone();
    let started_at = chrono::Utc::now().to_rfc3339();

    let mut out = match OutDir::create(&common.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let threads = common.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let result = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| {
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| commands::run(&cli.command, &mut out)))
                .unwrap_or_else(|_| Err(Failure::Internal(anyhow::anyhow!("internal panic"))))
        }),
        Err(e) => Err(Failure::Internal(e.into())),
    };

    let manifest = Manifest {
        command: cli.command.name().to_string(),
        argv,
        config: serde_json::to_value(&cli.command).unwrap_or(serde_json::Value::Null),
        seed: common.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        status: if result.is_ok() { "ok" } else { "error" }.to_string(),
        error: result.as_ref().err().map(|f| format!("{:#}", f.error())),
        outputs: out.written().to_vec(),
    };
    let manifest_written = match serde_json::to_string_pretty(&manifest) {
        Ok(text) => out.write_text("manifest.json", &(text + "\n")),
        Err(e) => Err(e.into()),
    };

    match (result, manifest_written) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(f), _) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
        (Ok(()), Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

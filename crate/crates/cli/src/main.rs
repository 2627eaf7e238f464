mod args;
mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, OutputArgs};
use commands::Rendered;
use error::CliError;

fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(OsString::from).unwrap_or_default();
    name.push(".meta.json");
    output.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn emit(out: &OutputArgs, name: &str, argv: &[OsString], r: Rendered) -> Result<(), CliError> {
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let Some(path) = &out.output else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(r.data.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::io("<stdout>", e));
    };
    write_file(path, &r.data)?;
    let generated = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "arguments": argv.iter().skip(1).map(|a| a.to_string_lossy()).collect::<Vec<_>>(),
        "constants": {
            "hbar_c_ev_nm": curvcp::units::HBAR_C_EV_NM,
            "k_b_ev_per_k": curvcp::units::K_B_EV_PER_K,
            "joule_per_ev": curvcp::units::JOULE_PER_EV,
        },
        "details": r.meta,
        "warnings": r.warnings,
        "generated_unix_seconds": generated,
    });
    let mut text = serde_json::to_string_pretty(&meta).expect("serializable");
    text.push('\n');
    write_file(&sidecar_path(path), &text)
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match &cli.command {
        Command::BetaTable(a) => emit(&a.out, "beta-table", &argv, commands::beta_table(a)?),
        Command::MatsubaraCurves(a) => {
            emit(&a.out, "matsubara-curves", &argv, commands::matsubara_curves(a)?)
        }
        Command::Potential(a) => emit(&a.out, "potential", &argv, commands::potential(a)?),
        Command::OrientationScan(a) => emit(&a.out, "orientation-scan", &argv, commands::scan(a)?),
    }
}

fn main() {
    let result = config::expand(std::env::args_os().collect()).and_then(run);
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod args;
mod commands;
mod table;

use args::{Cli, Command};
use commands::{Failure, Run};

fn dispatch(cli: &Cli) -> Result<Run, Failure> {
    let c = &cli.common;
    match &cli.command {
        Command::Evolve(a) => commands::evolve(c, a),
        Command::K3(a) => commands::k3(c, a),
        Command::Sweep => commands::sweep_cmd(c),
        Command::Spectrum => commands::spectrum_cmd(c),
        Command::EpLocus => commands::ep_locus_cmd(c),
        Command::BlochTraj(s) => commands::bloch_traj(c, s),
        Command::Nsit(a) => commands::nsit(c, a),
        Command::FitCheck(a) => commands::fit_check(a),
    }
}

fn command_name(cmd: &Command) -> String {
    serde_json::to_value(cmd)
        .ok()
        .and_then(|v| match v {
            serde_json::Value::String(s) => Some(s),
            serde_json::Value::Object(m) => m.keys().next().cloned(),
            _ => None,
        })
        .unwrap_or_default()
}

fn emit(cli: &Cli, run: &Run) -> io::Result<()> {
    let mut out: Box<dyn Write> = match &cli.common.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    run.table.write(cli.common.format, &mut out)?;
    out.flush()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let mut run = match dispatch(&cli) {
        Ok(run) => run,
        Err(f) => {
            eprintln!("hlgi: {f}");
            return ExitCode::from(f.exit_code());
        }
    };
    let config = serde_json::to_value(&cli).unwrap_or(serde_json::Value::Null);
    commands::stamp(&mut run, &command_name(&cli.command), config, &cli.common);
    if let Err(e) = emit(&cli, &run) {
        eprintln!("hlgi: i/o error: {e}");
        return ExitCode::from(70);
    }
    match &run.stopped {
        Some(f) => {
            eprintln!("hlgi: {f}");
            ExitCode::from(f.exit_code())
        }
        None => ExitCode::SUCCESS,
    }
}

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use vcsp_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(&cli, &mut out) {
        Ok(status) => status as u8,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}

use choquard_cli::{parse_config, run, CliError};
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = parse_config(std::env::args_os().skip(1)).and_then(|(cmd, cfg)| run(cmd, &cfg));
    match outcome {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(CliError::Clap(msg, true)) => {
            print!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("choquard: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

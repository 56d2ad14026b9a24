use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use fgpl_cli::{error_record, exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", error_record(None, "usage", message.trim_end(), 2));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", error_record(Some(cli.command.name()), e.kind(), &e.to_string(), code));
            ExitCode::from(code as u8)
        }
    }
}

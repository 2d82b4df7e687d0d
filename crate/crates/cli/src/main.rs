use std::process::ExitCode;

fn main() -> ExitCode {
    let result = qmimo_cli::parse_args(std::env::args_os()).and_then(|cfg| qmimo_cli::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(qmimo_cli::CliError::Help(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

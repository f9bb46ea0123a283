use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(thunder::cli::run(std::env::args_os()) as u8)
}

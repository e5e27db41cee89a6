use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(hurwitz_cli::run(std::env::args_os()))
}

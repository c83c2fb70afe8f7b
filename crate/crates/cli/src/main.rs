use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(aspca_cli::run(std::env::args_os()))
}

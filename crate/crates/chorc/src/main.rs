use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(chorc::cli::run(std::env::args()) as u8)
}

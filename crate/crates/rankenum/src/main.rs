use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(rankenum::cli::run())
}

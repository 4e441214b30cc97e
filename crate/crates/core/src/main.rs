use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lexbeam::cli::main().clamp(0, 255) as u8)
}

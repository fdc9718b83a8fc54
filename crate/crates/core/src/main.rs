use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = apsquares::cli::run(std::env::args_os());
    let _ = std::io::stdout().write_all(&outcome.stdout);
    let _ = std::io::stderr().write_all(&outcome.stderr);
    ExitCode::from(outcome.code as u8)
}

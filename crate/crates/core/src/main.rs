use std::process::ExitCode;

fn main() -> ExitCode {
    annihilation::cli::run(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    mediabias_cli::main_with(std::env::args_os())
}

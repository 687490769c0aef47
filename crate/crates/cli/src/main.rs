use std::process::ExitCode;

fn main() -> ExitCode {
    itereq_cli::main_with(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    mdiqss::cli::main_with_args(std::env::args_os())
}

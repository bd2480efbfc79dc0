use std::process::ExitCode;

fn main() -> ExitCode {
    bellframe::cli::main_with_args(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ia_tails_cli::main_with_args(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(streamnet::cli::main_from_args(std::env::args_os()))
}

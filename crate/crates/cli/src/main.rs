use std::process::ExitCode;

fn main() -> ExitCode {
    qabpnp::cli::run_from(std::env::args_os())
}

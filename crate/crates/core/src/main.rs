use std::process::ExitCode;

fn main() -> ExitCode {
    segapprox::cli::run_cli()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    d3recon::cli::run()
}

use clap::Parser;

fn main() -> std::process::ExitCode {
    dg_iae::cli::execute(dg_iae::cli::Cli::parse())
}

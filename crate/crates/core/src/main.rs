use clap::Parser;
use concavity_lab::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}

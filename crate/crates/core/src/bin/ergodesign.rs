use clap::Parser;
use ergodesign::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}

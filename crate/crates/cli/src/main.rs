use clap::Parser;

use streamcart_cli::opts::Cli;

fn main() -> anyhow::Result<()> {
    streamcart_cli::run(Cli::parse())
}

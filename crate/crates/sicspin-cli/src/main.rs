mod commands;
mod output;

use clap::Parser;

use commands::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(commands::run(cli));
}

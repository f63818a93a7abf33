use clap::Parser;

use cca_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = cca_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;
use cmotion_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("cmotion: {e}");
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;
use scale_equate_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(err) = scale_equate_cli::run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

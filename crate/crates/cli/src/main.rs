use clap::Parser;
use jscc_cli::commands::{run, Command};

/// Expurgated joint source-channel exponents, partitions and simulations.
#[derive(Parser)]
#[command(name = "jscc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    for path in run(&cli.command)? {
        println!("{}", path.display());
    }
    Ok(())
}

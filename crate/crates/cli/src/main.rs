use clap::Parser;

fn main() {
    let cli = cocycle_cli::args::Cli::parse();
    std::process::exit(cocycle_cli::run(cli));
}

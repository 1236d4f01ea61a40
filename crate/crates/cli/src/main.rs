use clap::Parser;

fn main() {
    let cli = su3ff_cli::Cli::parse();
    std::process::exit(su3ff_cli::run(cli));
}

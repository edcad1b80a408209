use clap::Parser;

fn main() {
    std::process::exit(riskcap::cli::run(riskcap::cli::Cli::parse()));
}

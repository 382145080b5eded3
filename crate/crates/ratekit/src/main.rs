use clap::Parser;

fn main() {
    let cli = ratekit::Cli::parse();
    std::process::exit(ratekit::run(cli));
}

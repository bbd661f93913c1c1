use clap::Parser;

fn main() {
    let cli = wofdm::cli::Cli::parse();
    if let Err(e) = wofdm::cli::execute(&cli) {
        eprintln!("wofdm: {e}");
        std::process::exit(e.exit_code());
    }
}

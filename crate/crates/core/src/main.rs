use clap::Parser;

fn main() {
    let cli = floquet_well::cli::Cli::parse();
    std::process::exit(floquet_well::cli::run_cli(&cli));
}

use clap::Parser;

fn main() {
    let cli = ccr_fock::cli::Cli::parse();
    std::process::exit(ccr_fock::cli::main_with(cli));
}

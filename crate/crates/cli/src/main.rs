use clap::Parser;

fn main() {
    let cli = aoa_bench::Cli::parse();
    if let Err(e) = aoa_bench::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;

fn main() {
    let cli = librotor_cli::Cli::parse();
    if let Err(e) = librotor_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;

fn main() {
    let cli = edt::cli::Cli::parse();
    if let Err(e) = edt::cli::run(cli) {
        eprintln!("edt: {e}");
        std::process::exit(e.exit_code());
    }
}

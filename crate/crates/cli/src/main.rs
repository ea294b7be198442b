use clap::Parser;
use covergame_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = covergame_cli::run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock()) {
        eprintln!("covergame: {e}");
        std::process::exit(e.exit_code());
    }
}

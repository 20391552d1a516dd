use clap::Parser;
use ibvs_sim::cli::{execute, Cli, EXIT_INPUT};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = execute(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}

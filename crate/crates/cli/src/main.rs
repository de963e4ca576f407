use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use recpersist_cli::{configure_threads, execute, Cli, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("REC_PERSIST_THREADS").ok();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match configure_threads(threads.as_deref()).and_then(|_| execute(&cli, &mut out)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}

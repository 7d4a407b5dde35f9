use std::process::ExitCode;

use clap::Parser;

use placecrb_cli::{run, thread_cap, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap())
        .build()
        .expect("thread pool");
    let mut stdout = std::io::stdout();
    match pool.install(|| run(&cli, &mut stdout)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

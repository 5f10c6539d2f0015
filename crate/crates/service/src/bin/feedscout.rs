use clap::Parser;
use feedscout_service::cli::{metrics_command, run_study_command, serve, Cli, Command};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Metrics(args) => metrics_command(args).map(|out| print!("{out}")),
        Command::RunStudy(args) => run_study_command(args).map(|out| print!("{out}")),
        Command::Serve(args) => serve(args).await,
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

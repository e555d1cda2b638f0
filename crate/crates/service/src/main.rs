use clap::Parser;

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    swarmsim_service::cli::run(swarmsim_service::cli::Cli::parse()).await
}

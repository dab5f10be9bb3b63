use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use mtdfind_service::{api, Store};

#[derive(Parser)]
#[command(name = "mtdfind-service", version, about = "Trial-conduct API for early MTD identification")]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "MTDFIND_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory holding one event log per trial.
    #[arg(long, env = "MTDFIND_DATA_DIR", default_value = "mtdfind-data")]
    data_dir: PathBuf,
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).init();
    let args = Args::parse();
    let store = match Store::open(&args.data_dir) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            tracing::error!("cannot open {}: {e}", args.data_dir.display());
            return std::process::ExitCode::FAILURE;
        }
    };
    tracing::info!(trials = store.trial_ids().len(), "loaded {}", args.data_dir.display());
    let listener = match tokio::net::TcpListener::bind(args.addr).await {
        Ok(l) => l,
        Err(e) => {
            tracing::error!("cannot bind {}: {e}", args.addr);
            return std::process::ExitCode::FAILURE;
        }
    };
    tracing::info!("listening on {}", args.addr);
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, api::router(store)).with_graceful_shutdown(shutdown).await {
        tracing::error!("server error: {e}");
        return std::process::ExitCode::FAILURE;
    }
    std::process::ExitCode::SUCCESS
}

use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use epiforecast_core::Execution;
use epiforecast_service::{router, AppState, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "epiforecast-serve", version, about = "HTTP API for monthly case-count forecasting")]
struct Args {
    #[arg(long, env = "EPIFORECAST_BIND", default_value = "127.0.0.1")]
    bind: IpAddr,

    #[arg(long, env = "EPIFORECAST_PORT", default_value_t = 8080)]
    port: u16,

    /// Largest accepted request body.
    #[arg(long, env = "EPIFORECAST_MAX_UPLOAD_BYTES", default_value_t = 10 * 1024 * 1024)]
    max_upload_bytes: usize,

    /// Session lifetime in seconds.
    #[arg(long, env = "EPIFORECAST_SESSION_TTL", default_value_t = 7200)]
    session_ttl: u64,

    /// Keep sessions on disk here so they survive a restart.
    #[arg(long, env = "EPIFORECAST_PERSIST_DIR")]
    persist_dir: Option<PathBuf>,

    /// Rolling requests needing more model fits than this become background jobs.
    #[arg(long, env = "EPIFORECAST_JOB_THRESHOLD", default_value_t = 20_000)]
    job_threshold: usize,

    /// Evaluate windows one at a time.
    #[arg(long)]
    sequential: bool,
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if args.session_ttl == 0 {
        eprintln!("epiforecast-serve: --session-ttl must be positive");
        return ExitCode::from(2);
    }
    let config = ServiceConfig {
        max_upload_bytes: args.max_upload_bytes,
        session_ttl: Duration::from_secs(args.session_ttl),
        persist_dir: args.persist_dir,
        job_threshold: args.job_threshold,
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    let state = match AppState::new(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("epiforecast-serve: cannot open session directory: {e}");
            return ExitCode::from(3);
        }
    };

    let sweeper = state.clone();
    let period = Duration::from_secs(args.session_ttl.clamp(1, 60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let (sessions, jobs) = sweeper.sweep();
            if sessions + jobs > 0 {
                log::info!("expired {sessions} session(s), {jobs} job(s)");
            }
        }
    });

    let addr = SocketAddr::new(args.bind, args.port);
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("epiforecast-serve: cannot bind {addr}: {e}");
            return ExitCode::from(3);
        }
    };
    log::info!("listening on http://{addr}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
    {
        eprintln!("epiforecast-serve: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use classgit_service::auth::Pbkdf2Verifier;
use classgit_service::clock::SystemClock;
use classgit_service::config::Config;
use classgit_service::{serve, Service, ServiceOptions};

/// Runs the classgit submission server.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML config file; CLASSGIT_* environment variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match Config::load(args.config.as_deref(), |k| std::env::var(k).ok()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("classgit-server: {e}");
            return ExitCode::from(2);
        }
    };
    let options = ServiceOptions {
        verifier: Arc::new(Pbkdf2Verifier {
            rounds: config.pbkdf2_rounds,
        }),
        clock: Arc::new(SystemClock),
        token_lifetime: config.token_lifetime_secs,
    };
    let service = match Service::open_dir(&config.store_dir, options) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("classgit-server: {e}");
            return ExitCode::from(2);
        }
    };
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    let result = rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(config.listen).await?;
        eprintln!(
            "classgit-server listening on http://{} (store {})",
            listener.local_addr()?,
            config.store_dir.display()
        );
        serve(listener, service, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("classgit-server: {e}");
            ExitCode::FAILURE
        }
    }
}

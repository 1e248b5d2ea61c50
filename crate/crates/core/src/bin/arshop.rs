use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use arshopping::harness::{self, FixtureSet, ReplayError};
use arshopping::server::{self, AppState};
use arshopping::{Catalog, SessionService};
use clap::{Parser, Subcommand};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "arshop",
    version,
    about = "AR shopping engine: serve, replay and validate fixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the session API over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        catalog: PathBuf,
        /// Fixture directory exposed under /fixtures for the web UI.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Replay a fixture directory and write one overlay per frame plus summary.json.
    Replay {
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Session config JSON (fusion + layout parameters, radar features).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check fixtures and catalog for schema and reference errors.
    Validate {
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Serve {
            port,
            catalog,
            fixtures,
        } => serve(port, catalog, fixtures),
        Command::Replay {
            fixtures,
            catalog,
            out,
            config,
        } => match harness::run_replay(&fixtures, &catalog, &out, config.as_deref()) {
            Ok(summary) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary).expect("summary serializes")
                );
                ExitCode::SUCCESS
            }
            Err(ReplayError::Invalid(issues)) => {
                for issue in &issues {
                    eprintln!("{issue}");
                }
                eprintln!("{} errors", issues.len());
                ExitCode::from(EXIT_USAGE)
            }
            Err(e) => {
                eprintln!("replay failed: {e}");
                ExitCode::from(EXIT_RUNTIME)
            }
        },
        Command::Validate { fixtures, catalog } => {
            let report = harness::validate(&fixtures, &catalog);
            println!("{report}");
            if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_USAGE)
            }
        }
    }
}

fn serve(port: u16, catalog: PathBuf, fixtures: Option<PathBuf>) -> ExitCode {
    let catalog = match Catalog::from_path(&catalog) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cannot load catalog {}: {e}", catalog.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let mut state = AppState::new(Arc::new(SessionService::new(Arc::new(catalog))));
    if let Some(dir) = fixtures {
        match FixtureSet::load(&dir) {
            Ok(set) => state = state.with_fixtures(set),
            Err(issues) => {
                for issue in &issues {
                    eprintln!("{issue}");
                }
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("cannot start runtime: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(("0.0.0.0", port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("cannot bind port {port}: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        };
        if let Ok(addr) = listener.local_addr() {
            eprintln!("listening on http://{addr}");
        }
        match server::serve(listener, state).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("server error: {e}");
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    })
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use numerosity::cli::{accuracy_output, correlation_output, load_log_file};
use numerosity::log::{format_log_txt, ParsedLog};
use numerosity::repo::{router, system_clock, AppState, LogStore};
use numerosity::sim::{power_analysis, simulate_session, SimulationOptions, SubjectModel};
use numerosity::stats::{AnalysisOptions, ChanceLevel, GroupBy, ReportFormat};
use numerosity::trial::{DisplayMode, GameConfig, ValueDomain};

#[derive(Parser)]
#[command(name = "numerosity", version, about = "Forced-choice numerosity trials: analysis, simulation, repository")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Accuracy and binomial p-values per session, display mode and set size.
    Analyze {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        subject: Option<String>,
        /// Comma separated subset of session,mode,type.
        #[arg(long, default_value = "session,mode,type")]
        group_by: GroupBy,
        #[arg(long, value_delimiter = ',')]
        set_size: Option<Vec<usize>>,
        #[arg(long, default_value = "md")]
        format: ReportFormat,
        /// Use 1/k instead of the rounded chance levels.
        #[arg(long)]
        exact_chance: bool,
        /// Keep records whose correction contradicts their values.
        #[arg(long)]
        include_flagged: bool,
    },
    /// Per-pair accuracy on two-value trials and its correlations.
    Correlate {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        subject: Option<String>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
    },
    /// Writes a synthetic session log.
    Simulate {
        /// uniform, perfect, subject1, subject2 or logistic:SLOPE,INTERCEPT
        #[arg(long, default_value = "subject1")]
        model: SubjectModel,
        #[arg(long, default_value = "dice")]
        mode: DisplayMode,
        #[arg(long, default_value_t = 2)]
        set_size: usize,
        #[arg(long, default_value_t = 5)]
        max_value: u32,
        /// Trials per game.
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long, default_value_t = 5)]
        games: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "Subject")]
        learner: String,
        #[arg(long, default_value = "Experimenter")]
        trainer: String,
        /// Write the `.txt` flavor instead of `.csv`.
        #[arg(long)]
        txt: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection rate of the binomial test over simulated sessions.
    Power {
        #[arg(long, default_value = "subject1")]
        model: SubjectModel,
        /// Session lengths in trials.
        #[arg(long, value_delimiter = ',', default_value = "20,50,100,200")]
        grid: Vec<u32>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        replicates: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        set_size: usize,
        #[arg(long)]
        exact_chance: bool,
    },
    /// Runs the log repository and session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "NUMEROSITY_STORE", default_value = "numerosity-store")]
        store: PathBuf,
    },
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<ParsedLog>, String> {
    let mut logs = Vec::with_capacity(paths.len());
    for p in paths {
        let log = load_log_file(p).map_err(|e| e.to_string())?;
        for w in &log.warnings {
            eprintln!("{}:{}: {}", p.display(), w.line_no, w.message);
        }
        logs.push(log);
    }
    Ok(logs)
}

fn chance(exact: bool) -> ChanceLevel {
    if exact {
        ChanceLevel::Exact
    } else {
        ChanceLevel::Literal
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Analyze { logs, subject, group_by, set_size, format, exact_chance, include_flagged } => {
            let logs = load_all(&logs)?;
            let options =
                AnalysisOptions { subject, group_by, set_sizes: set_size, chance: chance(exact_chance), include_flagged };
            print!("{}", accuracy_output(&logs, &options, format).map_err(|e| e.to_string())?);
        }
        Command::Correlate { logs, subject, format } => {
            let logs = load_all(&logs)?;
            print!("{}", correlation_output(&logs, subject.as_deref(), format).map_err(|e| e.to_string())?);
        }
        Command::Simulate { model, mode, set_size, max_value, trials, games, seed, learner, trainer, txt, out } => {
            let config = GameConfig {
                mode,
                set_size,
                trials_per_game: trials,
                domain: ValueDomain::range(max_value).map_err(|e| e.to_string())?,
                ..GameConfig::default()
            };
            let options = SimulationOptions { seed, learner, trainer, ..SimulationOptions::default() };
            let sim = simulate_session(&model, &config, games, &options).map_err(|e| e.to_string())?;
            for note in &sim.notes {
                eprintln!("note: {note}");
            }
            let text = if txt { format_log_txt(&sim.records).map_err(|e| e.to_string())? } else { sim.log };
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?,
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())?,
            }
        }
        Command::Power { model, grid, alpha, replicates, seed, set_size, exact_chance } => {
            let config = GameConfig { set_size, ..GameConfig::default() };
            let report = power_analysis(&model, &config, &grid, alpha, replicates, seed, chance(exact_chance))
                .map_err(|e| e.to_string())?;
            print!("{}", report.render_csv());
        }
        Command::Serve { port, store } => {
            let store = LogStore::open(&store).map_err(|e| format!("{}: {e}", store.display()))?;
            let app = router(AppState::new(store, system_clock()));
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await.map_err(|e| e.to_string())?;
                eprintln!("listening on {}", listener.local_addr().map_err(|e| e.to_string())?);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
                    .map_err(|e| e.to_string())
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! `qseal` command line: scenario runs, histograms, route demos.
//!
//! Exit codes: 0 on success (whatever the seal concluded), 2 for
//! configuration and usage errors, 3 for runtime and I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qseal::config::{ConfigError, ScenarioConfig, ValidatedScenario};
use qseal::logfmt::{parse_event_log, parse_link_reports};
use qseal::network::{NetworkError, ResponseAction, RoutePolicy, TransmissionGate};
use qseal::runner::{
    execute, rebuild_histogram, route_demo, write_artifacts, RunnerError,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qseal",
    version,
    about = "Simulate entangled-photon tamper seals and route traffic on their verdicts"
)]
struct Cli {
    /// Scenario file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the scenario's master seed
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the scenario's output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Add the origin column (simulation ground truth) to the event log
    #[arg(long)]
    debug_origins: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scenario and write all artifacts
    Run,
    /// Rebuild the coincidence histogram from a previous run's event log
    Histogram,
    /// Replay link reports into the scenario's network and route a path
    RouteDemo {
        /// Source node
        #[arg(long)]
        src: String,
        /// Destination node
        #[arg(long)]
        dst: String,
    },
    /// Check the scenario file and print the resolved plan
    ValidateConfig,
}

/// A printable failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            // An unreadable file is an environment problem, not a bad
            // scenario.
            ConfigError::Io(_) => Failure::runtime(e.to_string()),
            _ => Failure::config(e.to_string()),
        }
    }
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        Failure::runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let plan = ScenarioConfig::load(&cli.config)?.validate()?;
    match &cli.command {
        Command::Run => cmd_run(cli, &plan),
        Command::Histogram => cmd_histogram(cli, &plan),
        Command::RouteDemo { src, dst } => cmd_route_demo(cli, &plan, src, dst),
        Command::ValidateConfig => cmd_validate(cli, &plan),
    }
}

fn out_dir(cli: &Cli, plan: &ValidatedScenario) -> PathBuf {
    cli.out
        .as_deref()
        .map_or_else(|| PathBuf::from(&plan.output.directory), Path::to_path_buf)
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn cmd_run(cli: &Cli, plan: &ValidatedScenario) -> Result<(), Failure> {
    let run = execute(plan, cli.seed)?;
    let paths = write_artifacts(&run, &plan.output, cli.out.as_deref(), cli.debug_origins)?;

    println!(
        "seed {}: {} windows total, {} calibration, {} monitored batches",
        run.seed,
        run.total_windows,
        run.calibration_windows,
        run.batches.len()
    );
    for b in &run.batches {
        println!(
            "batch {:>3}  windows {:>9}-{:<9}  v_hat {:>7}  verdict {:<12}  rate {:<12}  state {}",
            b.index,
            b.window_span.0,
            b.window_span.1,
            fmt_opt(b.outcome.estimate.map(|e| e.v_hat)),
            b.outcome.verdict.map_or("-", |v| v.label()),
            b.outcome.rate.label(),
            b.status_after.state.label()
        );
    }
    match run.run_estimate {
        Some(est) => println!(
            "run visibility: {:.4} +- {:.4} from {} central coincidences",
            est.v_hat, est.std_err, run.run_counts.total()
        ),
        None => println!("run visibility: insufficient fringe counts"),
    }
    println!("final seal state: {}", run.final_status.state.label());
    println!("artifacts: {}", paths.events.parent().unwrap_or(Path::new(".")).display());
    Ok(())
}

fn cmd_histogram(cli: &Cli, plan: &ValidatedScenario) -> Result<(), Failure> {
    let dir = out_dir(cli, plan);
    let events_path = dir.join(&plan.output.events_file);
    let text = std::fs::read_to_string(&events_path).map_err(|e| {
        Failure::runtime(format!(
            "cannot read {} ({e}); produce it with the run subcommand first",
            events_path.display()
        ))
    })?;
    let log = parse_event_log(&text).map_err(|e| Failure::runtime(e.to_string()))?;
    let histogram = rebuild_histogram(plan, &log.events)?;

    let histogram_path = dir.join(&plan.output.histogram_file);
    let mut buf = Vec::new();
    histogram
        .write_csv(&mut buf)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    std::fs::write(&histogram_path, buf).map_err(|e| Failure::runtime(e.to_string()))?;

    let tau = plan.setup.coincidence_window_ps();
    let delay = plan.setup.path_delay_ps();
    println!(
        "{} events in, {} coincidences binned over the monitored span",
        log.events.len(),
        histogram.total()
    );
    println!("central peak (near 0 ps): {}", histogram.mass_around(0, tau));
    println!(
        "early side peak (near -{delay} ps): {}",
        histogram.mass_around(-delay, tau)
    );
    println!(
        "late side peak (near +{delay} ps): {}",
        histogram.mass_around(delay, tau)
    );
    println!("histogram: {}", histogram_path.display());
    Ok(())
}

fn policy_label(policy: &RoutePolicy) -> String {
    match policy {
        RoutePolicy::RequireNormalSeals => "require_normal_seals".to_string(),
        RoutePolicy::AvoidCompromised => "avoid_compromised".to_string(),
        RoutePolicy::CostPenalty { factor } => format!("cost_penalty(factor {factor})"),
    }
}

fn cmd_route_demo(
    cli: &Cli,
    plan: &ValidatedScenario,
    src: &str,
    dst: &str,
) -> Result<(), Failure> {
    let Some(net) = &plan.network else {
        return Err(Failure::config(
            "scenario has no [network] section; route-demo needs one",
        ));
    };
    let dir = out_dir(cli, plan);
    let reports_path = dir.join(&plan.output.link_reports_file);
    let text = std::fs::read_to_string(&reports_path).map_err(|e| {
        Failure::runtime(format!(
            "cannot read {} ({e}); produce it with the run subcommand first",
            reports_path.display()
        ))
    })?;
    let reports = parse_link_reports(&text).map_err(|e| Failure::runtime(e.to_string()))?;

    let outcome = match route_demo(net, &reports, src, dst) {
        Ok(o) => o,
        // A node name that is not in the graph is a usage error.
        Err(RunnerError::Network(NetworkError::UnknownNode(n))) => {
            return Err(Failure::config(format!("unknown node {n:?}")));
        }
        Err(e) => return Err(e.into()),
    };

    println!(
        "ingested {} link reports ({} stale rejected)",
        outcome.applied, outcome.rejected_stale
    );
    let gate = match outcome.gate {
        TransmissionGate::Allow => "allow".to_string(),
        TransmissionGate::Block(state) => format!("blocked ({})", state.label()),
    };
    let response = match outcome.response {
        ResponseAction::Standard => "standard",
        ResponseAction::EnhancedEncryptionRequired => "enhanced-encryption-required",
        ResponseAction::SuspendTraffic => "suspend-traffic",
    };
    println!(
        "link {}: state {}, transmission {}, response {}",
        net.monitored_link_id,
        outcome.link_state.label(),
        gate,
        response
    );
    match &outcome.route {
        Some(path) => println!(
            "route {src} -> {dst} under {}: {}",
            policy_label(&net.policy),
            path.join(" -> ")
        ),
        None => println!(
            "route {src} -> {dst} under {}: no usable path",
            policy_label(&net.policy)
        ),
    }
    Ok(())
}

fn cmd_validate(cli: &Cli, plan: &ValidatedScenario) -> Result<(), Failure> {
    println!("configuration OK");
    println!(
        "  seed {} ({} windows: {} calibration + {} monitored)",
        cli.seed.unwrap_or(plan.master_seed),
        plan.total_windows,
        plan.analytics.calibration_windows,
        plan.total_windows - plan.analytics.calibration_windows
    );
    println!(
        "  window {} ps, coincidence window {} ps, path delay {} ps",
        plan.setup.window_length_ps(),
        plan.setup.coincidence_window_ps(),
        plan.setup.path_delay_ps()
    );
    println!(
        "  source: {} mean pairs/window, visibility {}",
        plan.setup.source().mean_pairs_per_window(),
        plan.setup.source().source_visibility()
    );
    println!(
        "  channels: active {} dB, reference {} dB",
        plan.setup.active_channel().loss_db(),
        plan.setup.reference_channel().loss_db()
    );
    println!(
        "  analytics: batches of {} windows, threshold {:.4}, alpha {}, hysteresis {}",
        plan.analytics.batch_windows,
        plan.analytics.visibility_threshold,
        plan.analytics.alpha,
        plan.analytics.hysteresis_k
    );
    println!("  attacks scheduled: {}", plan.setup.attacks().plans().len());
    match &plan.network {
        Some(net) => println!(
            "  network: {} nodes, {} links, monitored link {}, policy {}",
            net.graph.nodes().count(),
            net.graph.links().count(),
            net.monitored_link_id,
            policy_label(&net.policy)
        ),
        None => println!("  network: none"),
    }
    println!(
        "  output directory: {}",
        out_dir(cli, plan).display()
    );
    Ok(())
}

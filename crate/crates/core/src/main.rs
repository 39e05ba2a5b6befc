use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gems::llm::BackendKind;
use gems::metrics::PredefinedRegistry;
use gems::orchestrator::{
    build_gateway, diversity_stats_from_names, emit_report, metric_names_from_json, run_from_config, run_vanilla,
    ConfigLayer, OrchestratorError, PanelLayer, ReportFormat, RunConfig,
};
use gems::store::RepoStore;

#[derive(Parser)]
#[command(name = "gems", version, about = "Expert-panel metric synthesis and team matching")]
struct Cli {
    /// TOML file with run settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a match report.
    Run(RunArgs),
    /// Ask for metrics with the single-prompt baseline.
    Vanilla(VanillaArgs),
    /// Top-k share of metric names in a metrics or report json file.
    Stats(StatsArgs),
    /// Load repository events into a store.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    cassette: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    goal: Option<String>,
    #[arg(long)]
    perspectives: Option<usize>,
    #[arg(long)]
    experts_per_field: Option<usize>,
    #[arg(long)]
    panel_size: Option<usize>,
    #[arg(long)]
    panel_same: Option<usize>,
    #[arg(long)]
    panel_other: Option<usize>,
    #[arg(long)]
    panel_text: Option<String>,
    #[arg(long)]
    metrics_per_expert: Option<usize>,
    #[arg(long)]
    aggregation: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

#[derive(Args)]
struct VanillaArgs {
    #[arg(long)]
    goal: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    events: PathBuf,
}

fn file_layer(path: Option<&PathBuf>) -> Result<ConfigLayer, OrchestratorError> {
    path.map_or_else(|| Ok(ConfigLayer::default()), |p| ConfigLayer::load(p))
}

fn run(cli: &Cli, args: &RunArgs) -> Result<(), OrchestratorError> {
    let panel = (args.panel_same.is_some() || args.panel_other.is_some() || args.panel_text.is_some()).then(|| {
        PanelLayer {
            text: args.panel_text.clone(),
            same_field: args.panel_same,
            other_field: args.panel_other,
        }
    });
    let flags = ConfigLayer {
        goal: args.goal.clone(),
        perspectives: args.perspectives,
        experts_per_field: args.experts_per_field,
        panel,
        panel_size: args.panel_size,
        metrics_per_expert: args.metrics_per_expert,
        aggregation: args.aggregation.clone(),
        backend: args.backend.backend,
        cassette: args.backend.cassette.clone(),
        db: args.db.clone(),
        ..ConfigLayer::default()
    };
    let config = RunConfig::layered(&[&file_layer(cli.config.as_ref())?, &flags])?;
    let report = run_from_config(&config, &PredefinedRegistry::shipped())?;
    let bytes = emit_report(&report, args.format, &args.out)?;
    eprintln!(
        "{} usable metrics, partner team {}; wrote {bytes} bytes to {}",
        report.usable_metric_count(),
        report.team_y,
        args.out.display()
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn vanilla(cli: &Cli, args: &VanillaArgs) -> Result<(), OrchestratorError> {
    let file = file_layer(cli.config.as_ref())?;
    let config = RunConfig::default().apply(&file).apply(&ConfigLayer {
        goal: args.goal.clone(),
        backend: args.backend.backend,
        cassette: args.backend.cassette.clone(),
        ..ConfigLayer::default()
    });
    let gateway = build_gateway(config.backend, config.cassette_path.as_deref(), &config.model)?;
    let specs = run_vanilla(&config.goal, &gateway)?;
    let text = serde_json::to_string_pretty(&specs).map_err(|e| OrchestratorError::Io(e.to_string()))?;
    std::fs::write(&args.out, text + "\n").map_err(|e| OrchestratorError::Io(format!("{}: {e}", args.out.display())))?;
    eprintln!("{} metrics written to {}", specs.len(), args.out.display());
    Ok(())
}

fn stats(args: &StatsArgs) -> Result<(), OrchestratorError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| OrchestratorError::Io(format!("{}: {e}", args.input.display())))?;
    let names = metric_names_from_json(&text)?;
    let s = diversity_stats_from_names(names.iter().map(String::as_str), args.k)?;
    for (name, count) in s.top() {
        println!("{count:>5}  {name}");
    }
    println!("top-{} share: {:.4} of {} metrics", s.k, s.top_k_share, s.total);
    Ok(())
}

fn ingest(args: &IngestArgs) -> Result<(), OrchestratorError> {
    let store = RepoStore::open(&args.db)?;
    let summary = store.ingest(&args.events)?;
    for (table, n) in &summary.counts {
        println!("{table}: {n}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => run(&cli, a),
        Command::Vanilla(a) => vanilla(&cli, a),
        Command::Stats(a) => stats(a),
        Command::Ingest(a) => ingest(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gems: {e}");
            ExitCode::FAILURE
        }
    }
}

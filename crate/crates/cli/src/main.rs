use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fluentnet::adl::builtin_network;
use fluentnet::casas::{build_plan, parse_dataset, parse_script, Mapping, Pacing, ReplayPlan, Run, Variant, DEFAULT_GAP_MS};
use fluentnet::harness::{Session, SessionConfig, SessionOutput, DEFAULT_IDLE_RESET_MS, DEFAULT_TAIL_MS};
use fluentnet::metrics::{export, ExportOptions, ScoreConfig, Scores, DEFAULT_GRACE_MS};
use fluentnet::network::NetworkDef;
use fluentnet::rules::parse_model;
use fluentnet::time::{format_duration, parse_duration};

mod calibrate;
#[cfg(feature = "plots")]
mod plots;

#[derive(Parser)]
#[command(name = "fluentnet", version, about = "Fluent-network activity recognition over smart-home sensor logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a dataset or scripts through the network and write metrics.
    Replay(ReplayArgs),
    /// Replay one scripted scenario.
    Synth {
        #[arg(long)]
        script: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Parse and check every `.model` file in a directory.
    ValidateModels { dir: PathBuf },
    /// Sweep model thresholds against labelled data.
    Calibrate(calibrate::CalibrateArgs),
    /// Render plots from the CSV files of an earlier replay.
    Plot {
        dir: PathBuf,
        /// Network the replay used, to tell placing nodes apart.
        #[arg(long)]
        network: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Clone)]
pub struct InputArgs {
    /// Directory (or single file) of CASAS-style logs.
    #[arg(long, required_unless_present = "script")]
    dataset: Option<PathBuf>,
    #[arg(long, default_value = "interwoven", value_parser = parse_variant)]
    variant: Variant,
    /// Scripted scenario, repeatable. Used instead of or after the dataset.
    #[arg(long)]
    script: Vec<PathBuf>,
    /// Sensor mapping TOML; the bundled one by default.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Silence between concatenated runs.
    #[arg(long, default_value_t = format_duration(DEFAULT_GAP_MS as i64), value_parser = parse_ms)]
    gap: String,
    /// Shuffle seed for the run order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
pub struct RunArgs {
    /// Network definition TOML; the bundled CASAS network by default.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Pace events in real time at this speed factor. Without it the
    /// replay runs in virtual time.
    #[arg(long)]
    speed: Option<f64>,
    /// Condition polling frequency in Hz, applied to every procedure event.
    #[arg(long)]
    frequency: Option<u32>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Render trace plots next to the CSV files.
    #[arg(long)]
    plots: bool,
    /// Restrict eval_trace.csv to one node.
    #[arg(long)]
    node: Option<String>,
    /// Late-recognition allowance after a label window closes.
    #[arg(long, default_value_t = format_duration(DEFAULT_GRACE_MS as i64), value_parser = parse_ms)]
    grace: String,
    /// Reset model nodes after this much stream silence, or `off`.
    #[arg(long, default_value_t = format_duration(DEFAULT_IDLE_RESET_MS as i64))]
    idle_reset: String,
    /// Timeline kept running after the last event.
    #[arg(long, default_value_t = format_duration(DEFAULT_TAIL_MS as i64), value_parser = parse_ms)]
    tail: String,
    /// Zero wall-clock columns so identical inputs give identical files.
    #[arg(long)]
    deterministic: bool,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("expected sequential or interwoven, got `{s}`"))
}

fn parse_ms(s: &str) -> Result<String, String> {
    match parse_duration(s) {
        Ok(ms) if ms >= 0 => Ok(s.to_string()),
        Ok(_) => Err("duration must not be negative".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn ms(s: &str) -> u64 {
    // validated by clap
    parse_duration(s).map_or(0, |v| v.max(0) as u64)
}

impl InputArgs {
    pub fn runs(&self) -> Result<Vec<Run>> {
        let mapping = match &self.mapping {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Mapping::parse(&text).map_err(anyhow::Error::msg).with_context(|| format!("in {}", p.display()))?
            }
            None => Mapping::builtin(),
        };
        let mut runs = match &self.dataset {
            Some(dir) => parse_dataset(dir, Some(self.variant), &mapping)?,
            None => Vec::new(),
        };
        for path in &self.script {
            runs.push(load_script(path, &mapping)?);
        }
        if runs.is_empty() {
            bail!("no runs to replay");
        }
        Ok(runs)
    }

    pub fn plan(&self) -> Result<ReplayPlan> {
        let runs = self.runs()?;
        Ok(build_plan(&runs, ms(&self.gap), self.seed))
    }
}

fn load_script(path: &Path, mapping: &Mapping) -> Result<Run> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("script");
    Ok(parse_script(&text, name, mapping)?)
}

impl RunArgs {
    pub fn network(&self) -> Result<NetworkDef> {
        let mut def = match &self.network {
            Some(p) => NetworkDef::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => builtin_network(),
        };
        if let Some(hz) = self.frequency {
            if hz == 0 {
                bail!("--frequency must be positive");
            }
            def.set_frequency(hz);
        }
        Ok(def)
    }

    pub fn session_config(&self) -> Result<SessionConfig> {
        let idle_reset_ms = match self.idle_reset.as_str() {
            "off" | "none" => None,
            s => Some(parse_duration(s).ok().filter(|v| *v > 0).context("bad --idle-reset")? as u64),
        };
        Ok(SessionConfig { idle_reset_ms, tail_ms: ms(&self.tail) })
    }

    pub fn pacing(&self) -> Result<Pacing> {
        match self.speed {
            None => Ok(Pacing::Virtual),
            Some(s) if s.is_finite() && s > 0.0 => Ok(Pacing::wall(s)),
            Some(s) => bail!("--speed must be positive, got {s}"),
        }
    }

    pub fn score_config(&self) -> ScoreConfig {
        ScoreConfig { grace_ms: ms(&self.grace), ..ScoreConfig::default() }
    }
}

fn execute(plan: &ReplayPlan, args: &RunArgs) -> Result<(SessionOutput, Scores)> {
    let def = args.network()?;
    let mut session = Session::new(&def, args.session_config()?)?;
    log::info!("replaying {} runs, {} events", plan.runs.len(), plan.event_count());
    let out = session.run(plan, args.pacing()?);
    for f in &out.failures {
        log::warn!("procedure {} failed at {}: {}", f.procedure, f.at, f.message);
    }
    let extra = vec![
        ("runs".to_string(), plan.runs.len().to_string()),
        ("events delivered".to_string(), out.report.delivered.to_string()),
        ("events dropped".to_string(), out.report.dropped.to_string()),
        ("unknown sensors".to_string(), out.unknown_sensors.to_string()),
        ("idle resets".to_string(), out.idle_resets.to_string()),
        ("placing peak complexity".to_string(), out.placing_peak.to_string()),
        ("bound violations".to_string(), out.bound_violations.to_string()),
        ("procedure failures".to_string(), out.failures.len().to_string()),
        ("speed".to_string(), args.speed.map_or("virtual".to_string(), |s| s.to_string())),
    ];
    let options = ExportOptions { score: args.score_config(), node: args.node.clone(), deterministic: args.deterministic };
    let windows = plan.label_windows();
    let scores = export(&args.out, &out.recognitions, &out.samples, &windows, &extra, &options)
        .with_context(|| format!("writing results to {}", args.out.display()))?;
    if args.plots {
        render_plots(&args.out, &def)?;
    }
    Ok((out, scores))
}

fn render_plots(dir: &Path, def: &NetworkDef) -> Result<()> {
    #[cfg(feature = "plots")]
    {
        let placing: Vec<String> = def.placing_nodes().map(|n| n.id.clone()).collect();
        plots::render(dir, &placing)
    }
    #[cfg(not(feature = "plots"))]
    {
        let _ = (dir, def);
        bail!("built without the `plots` feature")
    }
}

fn print_rates(scores: &Scores) {
    println!("{:>3} {:>9} {:>6} {:>8} {:>8} {:>8} {:>9}", "A", "instances", "TP%", "unknown%", "miscl%", "baseline", "delay avg");
    for (row, delay) in scores.rates.iter().zip(&scores.delays) {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1}"));
        println!(
            "{:>3} {:>9} {:>6} {:>8} {:>8} {:>8} {:>8.1}s",
            row.activity,
            row.instances,
            pct(row.true_positive_pct()),
            pct(row.unknown_pct()),
            pct(row.misclassified_pct()),
            pct(row.baseline()),
            delay.average_ms / 1000.0,
        );
    }
}

fn validate_models(dir: &Path) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "model"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .model files in {}", dir.display());
    }
    let mut bad = 0;
    for path in &paths {
        let text = std::fs::read_to_string(path)?;
        match parse_model(&text) {
            Ok(m) => {
                let thresholds: Vec<String> =
                    m.thresholds.iter().map(|(k, v)| format!("{k}={}", format_duration(*v))).collect();
                println!(
                    "ok   {}: model {} ({} rules, {} dwell, final {}) {}",
                    path.display(),
                    m.name,
                    m.rules.len(),
                    m.dwells.len(),
                    m.final_name,
                    thresholds.join(" ")
                );
            }
            Err(e) => {
                bad += 1;
                println!("FAIL {}: {e}", path.display());
            }
        }
    }
    if bad > 0 {
        bail!("{bad} of {} models invalid", paths.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Replay(args) => {
            let plan = args.input.plan()?;
            let (_, scores) = execute(&plan, &args.run)?;
            print_rates(&scores);
            println!("results in {}", args.run.out.display());
        }
        Command::Synth { script, run } => {
            let plan = build_plan(&[load_script(&script, &Mapping::builtin())?], 0, 0);
            let (out, _) = execute(&plan, &run)?;
            for r in &out.recognitions {
                println!("A{} at {} by {}", r.activity, r.recognized_at, r.node);
            }
            if out.recognitions.is_empty() {
                println!("nothing recognized");
            }
        }
        Command::ValidateModels { dir } => validate_models(&dir)?,
        Command::Calibrate(args) => calibrate::run(&args)?,
        Command::Plot { dir, network } => {
            let def = match network {
                Some(p) => NetworkDef::load(&p).with_context(|| format!("loading {}", p.display()))?,
                None => builtin_network(),
            };
            render_plots(&dir, &def)?;
            println!("plots in {}", dir.display());
        }
    }
    Ok(())
}

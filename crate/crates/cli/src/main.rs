//! `squeeze-sim`: parameter sweeps for pulsed squeezed-vacuum generation,
//! written as CSV tables (optionally mirrored to JSON).

mod commands;
mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pulsed_squeezing::sweep::{with_threads, Execution};
use serde_json::{json, Map};

use config::{spanned, Layer, RunConfig};
use table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, ValueEnum)]
pub enum Command {
    /// Threshold power versus pump bandwidth.
    Threshold,
    /// Spectral amplitude and phase of the leading characteristic modes.
    Modes,
    /// Squeezing of the first mode versus power, or of each mode.
    Squeeze,
    /// Effective mode number versus power, bandwidth or pump linewidth.
    ModeNumber,
    /// Local-oscillator overlap and measured squeezing versus bandwidth.
    Lo,
    /// Key observables under grid refinement.
    Convergence,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Threshold => "threshold",
            Command::Modes => "modes",
            Command::Squeeze => "squeeze",
            Command::ModeNumber => "mode-number",
            Command::Lo => "lo",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "squeeze-sim", version, about = "Pulsed squeezed-vacuum sweeps in a ring cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat TOML config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output CSV (stdout when absent).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Also write the table as JSON.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,

    #[arg(long, global = true, value_name = "N")]
    grid_points: Option<usize>,

    #[arg(long, global = true, value_name = "SPAN")]
    grid_span: Option<f64>,

    /// peak, energy or both.
    #[arg(long, global = true, value_name = "DEF")]
    power_def: Option<String>,

    /// Override any config key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads for sweep points (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Evaluate sweep points one after another.
    #[arg(long, global = true)]
    sequential: bool,

    /// Rerun at twice the grid points and append relative changes.
    #[arg(long, global = true)]
    convergence: bool,

    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

fn layers(cli: &Cli) -> Result<Vec<Layer>, config::ConfigError> {
    let mut layers = Vec::new();
    if let Some(path) = &cli.config {
        layers.push(Layer::from_file(path)?);
    }
    for s in &cli.set {
        layers.push(Layer::from_assignment(s)?);
    }
    if let Some(n) = cli.grid_points {
        layers.push(Layer::from_flag("--grid-points", |c| {
            c.grid_points = spanned(i64::try_from(n).unwrap_or(i64::MAX))
        }));
    }
    if let Some(span) = cli.grid_span {
        layers.push(Layer::from_flag("--grid-span", |c| c.grid_span = spanned(span)));
    }
    if let Some(def) = &cli.power_def {
        layers.push(Layer::from_flag("--power-def", |c| c.power_def = spanned(def.clone())));
    }
    if let Some(out) = &cli.out {
        layers.push(Layer::from_flag("--out", |c| {
            c.out = spanned(out.display().to_string())
        }));
    }
    Ok(layers)
}

fn build(cmd: Command, cfg: &RunConfig, n: usize, exec: Execution) -> pulsed_squeezing::Result<Table> {
    match cmd {
        Command::Threshold => commands::threshold(cfg, n, exec),
        Command::Modes => commands::modes(cfg, n, exec),
        Command::Squeeze => commands::squeeze(cfg, n, exec),
        Command::ModeNumber => commands::mode_number(cfg, n, exec),
        Command::Lo => commands::lo(cfg, n, exec),
        Command::Convergence => commands::convergence(cfg, n, exec),
    }
}

fn header(cli: &Cli, cfg: &RunConfig, exec: Execution) -> Vec<String> {
    let mut h = vec![
        format!("squeeze-sim {}", env!("CARGO_PKG_VERSION")),
        format!("command = {:?}", cli.command.name()),
    ];
    h.extend(cfg.entries().into_iter().map(|(k, v)| format!("{k} = {v}")));
    h.push(format!("threads = {}", cli.threads));
    h.push(format!("execution = {:?}", format!("{exec:?}").to_lowercase()));
    h.push(format!("convergence = {}", cli.convergence && cli.command != Command::Convergence));
    h
}

fn run(cli: &Cli) -> Result<(), (u8, String)> {
    let layers = layers(cli).map_err(|e| (2, e.to_string()))?;
    let cfg = RunConfig::resolve(cli.command, &layers).map_err(|e| (2, e.to_string()))?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let runtime = |e: pulsed_squeezing::Error| (1, e.to_string());
    let table = with_threads(cli.threads, || -> pulsed_squeezing::Result<Table> {
        let base = build(cli.command, &cfg, cfg.grid_points, exec)?;
        if cli.convergence && cli.command != Command::Convergence {
            let refined = build(cli.command, &cfg, 2 * cfg.grid_points, exec)?;
            Ok(base.with_convergence(&refined))
        } else {
            Ok(base)
        }
    })
    .map_err(runtime)?
    .map_err(runtime)?;

    let header = header(cli, &cfg, exec);
    let io_err = |what: &str, e: io::Error| (1, format!("cannot write {what}: {e}"));
    match &cfg.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| io_err(&path.display().to_string(), e))?;
            table
                .write_csv(&header, BufWriter::new(f))
                .map_err(|e| io_err(&path.display().to_string(), e))?;
        }
        None => {
            let stdout = io::stdout();
            table.write_csv(&header, stdout.lock()).map_err(|e| io_err("stdout", e))?;
        }
    }
    if let Some(path) = &cli.json {
        let mut meta = Map::new();
        meta.insert("tool".into(), json!(format!("squeeze-sim {}", env!("CARGO_PKG_VERSION"))));
        meta.insert("command".into(), json!(cli.command.name()));
        let config: Map<String, serde_json::Value> = cfg
            .entries()
            .into_iter()
            .map(|(k, v)| {
                let value = toml::from_str::<toml::Table>(&format!("x = {v}"))
                    .ok()
                    .and_then(|t| serde_json::to_value(&t["x"]).ok())
                    .unwrap_or(json!(v));
                (k, value)
            })
            .collect();
        meta.insert("config".into(), serde_json::Value::Object(config));
        let doc = table.to_json(meta);
        let mut f = File::create(path).map_err(|e| io_err(&path.display().to_string(), e))?;
        serde_json::to_writer_pretty(&mut f, &doc)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(f))
            .map_err(|e| io_err(&path.display().to_string(), e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("squeeze-sim: {msg}");
            ExitCode::from(code)
        }
    }
}

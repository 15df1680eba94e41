use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use overland::calibrate::{calibrate_manning, rmse};
use overland::config::{parse_config, scenario_preset, serialize_config, RunConfig};
use overland::io::{fmt_e10, run_config, HydrographSeries};
use overland::{BoundaryTag, Error, Result};

#[derive(Parser)]
#[command(name = "overland", version, about = "Overland flow with Green-Ampt infiltration on triangular meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file.
    Run {
        config: PathBuf,
        /// Write results here instead of the configured `outdir`.
        #[arg(long)]
        outdir: Option<PathBuf>,
    },
    /// Run a built-in scenario.
    Preset {
        /// slope_runoff | conservation_one_layer | conservation_two_layer | complex_basin | lake_at_rest
        name: String,
        /// Replace a setting, e.g. `--override rain="0 3600 50mm/h"`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        outdir: Option<PathBuf>,
        /// Print the resulting configuration instead of running it.
        #[arg(long)]
        dump: bool,
    },
    /// RMSE between a simulated and an observed hydrograph CSV.
    Rmse { simulated: PathBuf, observed: PathBuf },
    /// Grid search for the Manning coefficient against an observed hydrograph.
    Calibrate {
        config: PathBuf,
        observed: PathBuf,
        /// Comma-separated coefficients, e.g. `0.38,0.43,0.48,0.53,0.58`.
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<f64>,
    },
    /// Print mesh statistics for a configuration.
    MeshInfo { config: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load(path: &Path) -> Result<(RunConfig, PathBuf)> {
    let cfg = parse_config(&read(path)?)?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((cfg, base))
}

fn execute(mut cfg: RunConfig, base: &Path, outdir: Option<PathBuf>) -> Result<()> {
    if let Some(dir) = outdir {
        cfg.outdir = dir;
    }
    let record = run_config(&cfg, base, true)?;
    let (t, ledger) = record.ledger.last().copied().unwrap_or_default();
    println!("t = {t} s after {} steps", record.steps);
    println!("surface {} m³, infiltrated {} m³, outflow {} m³", fmt_e10(ledger.surface_volume), fmt_e10(ledger.infiltrated_volume), fmt_e10(ledger.outflow_out));
    println!("rain in {} m³, mass residual {} m³", fmt_e10(ledger.rain_in), fmt_e10(ledger.residual()));
    println!("results in {}", base.join(&cfg.outdir).display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, outdir } => {
            let (cfg, base) = load(&config)?;
            execute(cfg, &base, outdir)
        }
        Command::Preset { name, overrides, outdir, dump } => {
            let pairs = overrides
                .iter()
                .map(|o| {
                    o.split_once('=')
                        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                        .ok_or_else(|| Error::config(o, "override must be KEY=VALUE"))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = scenario_preset(&name)?.with_overrides(&pairs)?;
            if dump {
                print!("{}", serialize_config(&cfg));
                return Ok(());
            }
            execute(cfg, Path::new("."), outdir)
        }
        Command::Rmse { simulated, observed } => {
            let sim = HydrographSeries::from_csv(&read(&simulated)?, &simulated.display().to_string())?;
            let obs = HydrographSeries::from_csv(&read(&observed)?, &observed.display().to_string())?;
            println!("{}", fmt_e10(rmse(&sim, &obs)?));
            Ok(())
        }
        Command::Calibrate { config, observed, n_grid } => {
            let (cfg, base) = load(&config)?;
            let obs = HydrographSeries::from_csv(&read(&observed)?, &observed.display().to_string())?;
            let result = calibrate_manning(&cfg, &base, &obs, &n_grid)?;
            println!("n,rmse_m3s");
            for (n, e) in &result.table {
                println!("{n},{}", fmt_e10(*e));
            }
            println!("best n = {}", result.n_best);
            Ok(())
        }
        Command::MeshInfo { config } => {
            let (cfg, base) = load(&config)?;
            let mesh = cfg.build_mesh(&base)?;
            let n = mesh.num_cells();
            let area = mesh.total_area();
            let count = |tag| mesh.boundary_edges().filter(|(_, e)| e.tag.unwrap_or(BoundaryTag::Wall) == tag).count();
            let min_r = mesh.cells.iter().map(|c| c.inradius).fold(f64::INFINITY, f64::min);
            let (b_lo, b_hi) = mesh.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.b), hi.max(v.b)));
            let bb = mesh.bounding_box();
            println!("vertices        {}", mesh.vertices.len());
            println!("cells           {n}");
            println!("edges           {} ({} wall, {} outflow)", mesh.edges.len(), count(BoundaryTag::Wall), count(BoundaryTag::Outflow));
            println!("extent          [{}, {}] x [{}, {}] m", bb[0], bb[2], bb[1], bb[3]);
            println!("total area      {area} m²");
            println!("mean cell area  {} m²", area / n as f64);
            println!("min inradius    {min_r} m");
            println!("bottom range    [{b_lo}, {b_hi}] m");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}

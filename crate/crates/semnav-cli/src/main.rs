//! Command-line front end: `run` executes a scenario end to end, `eval`
//! aggregates run reports, `render-map` turns map rasters into figures.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure.

use clap::{Parser, Subcommand};
use semnav::map::load_grid;
use semnav::pipeline::{run_pipeline, PipelineError, RunOptions};
use semnav::report::{aggregate, render_csv, render_table, EvalReport};
use semnav::viz::{parse_paths_csv, path_color, MapImage};
use semnav::ScenarioConfig;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "semnav", version, about = "Semantic costmap mapping over a synthetic RGB-D world")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config through the full pipeline.
    Run {
        /// Scenario config JSON.
        config: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip all semantic stages; build and plan on the metric grid only.
        #[arg(long)]
        metric_only: bool,
        /// Write per-frame track states to tracks.csv.
        #[arg(long)]
        trace: bool,
        /// Dump per-track point clouds as ASCII XYZ files.
        #[arg(long)]
        dump_clouds: bool,
    },
    /// Aggregate one or more report.json files into a table.
    Eval {
        /// Report files produced by `run`.
        reports: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render a map raster (PGM + sidecar) to a PPM image.
    RenderMap {
        /// Map raster, e.g. out/chair/costmap.pgm.
        map: PathBuf,
        /// Output PPM path.
        #[arg(short, long)]
        out: PathBuf,
        /// Overlay planned paths from a paths.csv.
        #[arg(long)]
        paths: Option<PathBuf>,
        /// Overlay registered object footprints from a registry.json.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { message, code }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_CONFIG,
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_RUNTIME,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) | PipelineError::Scene(_) | PipelineError::Detections(_) => {
                CliError::config(e.to_string())
            }
            other => CliError::runtime(other.to_string()),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            metric_only,
            trace,
            dump_clouds,
        } => {
            let config = ScenarioConfig::load(&config)
                .map_err(|e| CliError::config(format!("{}: {e}", config.display())))?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(config.label()));
            let artifacts = run_pipeline(
                &config,
                &RunOptions {
                    out_dir,
                    metric_only,
                    trace,
                    dump_clouds,
                    seed,
                },
            )?;
            let report = &artifacts.report;
            println!(
                "{}: {} frames, {} objects registered",
                report.scenario,
                report.frames,
                report.objects.len()
            );
            print_plan("metric", &report.metric_plan);
            if let Some(plan) = &report.semantic_plan {
                print_plan("semantic", plan);
            }
            println!("artifacts in {}", artifacts.out_dir.display());
            Ok(())
        }
        Command::Eval { reports, csv } => {
            if reports.is_empty() {
                return Err(CliError::config("eval needs at least one report"));
            }
            let loaded: Result<Vec<EvalReport>, _> =
                reports.iter().map(|p| EvalReport::load(p)).collect();
            let loaded = loaded.map_err(|e| CliError::config(e.to_string()))?;
            let rows = aggregate(&loaded).map_err(|e| CliError::runtime(e.to_string()))?;
            print!("{}", render_table(&rows));
            if let Some(path) = csv {
                std::fs::write(&path, render_csv(&rows))
                    .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::RenderMap {
            map,
            out,
            paths,
            registry,
        } => {
            let grid = load_grid(&map)
                .map_err(|e| CliError::config(format!("{}: {e}", map.display())))?;
            let mut image = MapImage::from_grid(&grid);
            if let Some(registry_path) = registry {
                let text = std::fs::read_to_string(&registry_path)
                    .map_err(|e| CliError::config(format!("{}: {e}", registry_path.display())))?;
                let registry = semnav::map::registry_from_json(&text)
                    .map_err(|e| CliError::config(e.to_string()))?;
                image.draw_registry(&registry);
            }
            if let Some(paths_path) = paths {
                let text = std::fs::read_to_string(&paths_path)
                    .map_err(|e| CliError::config(format!("{}: {e}", paths_path.display())))?;
                for (name, waypoints) in parse_paths_csv(&text) {
                    image.draw_path(&waypoints, path_color(&name));
                }
            }
            std::fs::write(&out, image.to_ppm())
                .map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn print_plan(name: &str, plan: &semnav::report::PlanVerdict) {
    if !plan.found {
        println!("{name} plan: NOT FOUND ({})", plan.error.as_deref().unwrap_or("?"));
        return;
    }
    let verdict = match plan.collided {
        Some(true) => format!(
            "COLLIDED at waypoint {} with object {}",
            plan.first_collision_waypoint.unwrap_or(0),
            plan.offending_object
                .map(|id| id.to_string())
                .unwrap_or_else(|| "wall".into())
        ),
        Some(false) => "collision-free".into(),
        None => "not validated".into(),
    };
    println!(
        "{name} plan: cost {:.2}, {} waypoints, {verdict}",
        plan.cost.unwrap_or(f64::NAN),
        plan.waypoints.unwrap_or(0)
    );
}

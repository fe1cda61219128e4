use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fwrl::agents::parse_snapshot_csv;
use fwrl::harness::config::load_map;
use fwrl::harness::plot::{emit_plots, heatmap_svg, snapshot_values, Overlay};
use fwrl::harness::{run_experiment, run_scenario, ResultsBundle, RunConfig, ScenarioScript};
use fwrl::mapio::{bundled_map, bundled_maps, CellCoord};

#[derive(Parser)]
#[command(name = "fwrl", version, about = "Goal-conditioned tabular RL lab on grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled maps.
    Maps {
        /// Print each map's layout as well.
        #[arg(long)]
        show: bool,
    },
    /// Run a quantitative experiment and write results.csv, summary.json and plots.
    Run {
        /// Configuration file (defaults: four_room, all agents, 100 episodes, seeds 0..10).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Replay the scripted transfer scenario (H-maze by default).
    Scenario {
        /// Scenario script file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Re-render plots from an existing results directory, or a heatmap from a snapshot CSV.
    Plot {
        /// Directory containing results.csv.
        #[arg(long, required_unless_present = "snapshot")]
        results: Option<PathBuf>,
        /// Snapshot CSV written by `scenario`.
        #[arg(long, requires_all = ["map", "goal"])]
        snapshot: Option<PathBuf>,
        /// Map of the snapshot (bundled name or file).
        #[arg(long)]
        map: Option<String>,
        /// Goal cell of the heatmap, as `x,y`.
        #[arg(long)]
        goal: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn output_dir(flag: Option<PathBuf>, configured: Option<PathBuf>) -> PathBuf {
    flag.or(configured)
        .or_else(|| std::env::var_os("FWRL_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn parse_cell(s: &str) -> Result<CellCoord> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got {s:?}"))?;
    Ok(CellCoord::new(x.trim().parse()?, y.trim().parse()?))
}

fn maps(show: bool) {
    for (name, map) in bundled_maps() {
        let winds = map.wind_cells().count();
        println!("{name}\t{}x{}\t{} free cells\t{winds} wind cells", map.width(), map.height(), map.num_states());
        if show {
            println!("{}\n", map.serialize());
        }
    }
}

fn run(config: Option<PathBuf>, out: Option<PathBuf>, seed_override: Option<u64>) -> Result<()> {
    let mut cfg = match &config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::with_map(bundled_map("four_room").expect("bundled")),
    };
    if let Some(seed) = seed_override {
        cfg.seeds = vec![seed];
    }
    let dir = output_dir(out, cfg.output_dir.clone());
    let bundle = run_experiment(&cfg)?;
    bundle.write(&dir)?;
    emit_plots(&bundle, &dir)?;
    for (kind, s) in &bundle.summary {
        let ineff = s.mean_dist_ineff.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!(
            "{kind:<6} median_reward_last20={:<8} efficiency_index={:<4} mean_dist_ineff={ineff}",
            s.median_reward_last20, s.efficiency_index
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn scenario(config: Option<PathBuf>, out: Option<PathBuf>, seed_override: Option<u64>) -> Result<()> {
    let mut script = match &config {
        Some(path) => ScenarioScript::from_file(path)?,
        None => ScenarioScript::h_maze(),
    };
    if let Some(seed) = seed_override {
        script.seed = seed;
    }
    let report = run_scenario(&script)?;
    let dir = output_dir(out, None);
    report.write(&script, &dir)?;
    let oracle = report.oracle_test_steps.map_or("unreachable".to_string(), |d| d.to_string());
    println!("test {} -> {} (shortest path {oracle})", script.test.0, script.test.1);
    for a in &report.agents {
        let verdict = if a.test.reached { "reached" } else { "did not reach" };
        println!("{:<6} {verdict} in {} steps", a.agent, a.test.steps);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn plot(
    results: Option<PathBuf>,
    snapshot: Option<PathBuf>,
    map: Option<String>,
    goal: Option<String>,
    out: Option<PathBuf>,
) -> Result<()> {
    if let Some(dir) = results {
        let path = dir.join("results.csv");
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let bundle = ResultsBundle::from_csv(&text)?;
        let out_dir = out.clone().unwrap_or(dir);
        for p in emit_plots(&bundle, &out_dir)? {
            println!("wrote {}", p.display());
        }
    }
    if let Some(path) = snapshot {
        let map = load_map(map.as_deref().unwrap_or_default(), Some(Path::new(".")))?;
        let goal = parse_cell(goal.as_deref().unwrap_or_default())?;
        if map.state_index(goal).is_none() {
            return Err(format!("goal {goal} is not a free cell of {}", map.name()).into());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let rows = parse_snapshot_csv(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let values = snapshot_values(&map, &rows, goal);
        let title = format!("{} (goal {goal})", path.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot"));
        let svg = heatmap_svg(&map, &values, &Overlay { title, goal: Some(goal), ..Overlay::default() });
        let target = match out {
            Some(dir) => {
                std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                dir.join(path.with_extension("svg").file_name().expect("file name"))
            }
            None => path.with_extension("svg"),
        };
        std::fs::write(&target, svg).map_err(|e| format!("{}: {e}", target.display()))?;
        println!("wrote {}", target.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Maps { show } => {
            maps(show);
            Ok(())
        }
        Command::Run { config, out, seed_override } => run(config, out, seed_override),
        Command::Scenario { config, out, seed_override } => scenario(config, out, seed_override),
        Command::Plot { results, snapshot, map, goal, out } => plot(results, snapshot, map, goal, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use rover_core::harness::{self, read_trace, render_path, render_trace, write_trace, Scenario};
use rover_core::navmap::{load_grid, render_grid};
use rover_core::perception::{read_replay, track_replay, LocateConfig, ReplayFrame, TrackerConfig};
use rover_core::planner::{plan, PlannerConfig};
use rover_core::pnm;

/// Output directory used by `run` when `--out` is not given.
const OUT_ENV: &str = "ROVER_OUT_DIR";

#[derive(Parser)]
#[command(name = "rover", version, about = "Multi-agent rover autonomy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and print the mission report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Tick at which the operator resets escalation.
        #[arg(long, value_name = "TICK")]
        reset_at: Option<u64>,
        /// Directory for trace.jsonl and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan a path on an occupancy grid PGM (with its JSON sidecar).
    Plan {
        grid: PathBuf,
        #[arg(long, value_parser = parse_point)]
        start: [f64; 2],
        #[arg(long, value_parser = parse_point)]
        goal: [f64; 2],
        /// Optional PPM with the path drawn over the grid.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run tracking over a detection replay file or a run trace.
    TrackReplay { input: PathBuf },
    /// Inspect one rack of a scenario and print the report.
    Inspect {
        scenario: PathBuf,
        #[arg(long)]
        rack: String,
    },
    /// Render a grid PGM or a run trace to an image.
    Render {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

type DomainResult = Result<(), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load_scenario(path: &Path) -> Result<Scenario, String> {
    Scenario::load(path).map_err(err)
}

fn cmd_run(path: &Path, seed: Option<u64>, reset_at: Option<u64>, out: Option<PathBuf>) -> DomainResult {
    let mut s = load_scenario(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if reset_at.is_some() {
        s.operator_reset_tick = reset_at;
    }
    let result = harness::run(&s).map_err(err)?;
    let out = out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from));
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(err)?;
        let mut f = File::create(dir.join("trace.jsonl")).map_err(err)?;
        write_trace(&mut f, &result.trace).map_err(err)?;
        let report = serde_json::to_string_pretty(&result.report).map_err(err)?;
        std::fs::write(dir.join("report.json"), report).map_err(err)?;
    }
    println!("{}", serde_json::to_string_pretty(&result.report).map_err(err)?);
    Ok(())
}

fn cmd_plan(grid: &Path, start: [f64; 2], goal: [f64; 2], out: Option<PathBuf>) -> DomainResult {
    let g = load_grid(grid).map_err(err)?;
    let cfg = PlannerConfig::default();
    let path = plan(&g, start, goal, &cfg).map_err(err)?;
    if let Some(o) = out {
        pnm::write_ppm(&o, &render_path(&g, &path.waypoints, &cfg)).map_err(err)?;
    }
    let summary = json!({
        "length": path.length,
        "min_clearance": path.min_clearance,
        "waypoints": path.waypoints,
    });
    println!("{summary}");
    Ok(())
}

/// Replay frames grouped by agent: a trace yields one stream per rover, a
/// replay file a single stream.
fn replay_streams(input: &Path) -> Result<Vec<(String, Vec<ReplayFrame>)>, String> {
    let text = std::fs::read_to_string(input).map_err(err)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let is_trace = serde_json::from_str::<serde_json::Value>(first)
        .ok()
        .is_some_and(|v| v.get("kind").is_some() && v.get("source").is_some());
    if !is_trace {
        return Ok(vec![(String::new(), read_replay(text.as_bytes()).map_err(err)?)]);
    }
    let trace = read_trace(text.as_bytes()).map_err(err)?;
    let mut streams: Vec<(String, Vec<ReplayFrame>)> = Vec::new();
    for e in trace.iter().filter(|e| e.kind == "perception_frame") {
        let frame: ReplayFrame = e
            .payload
            .get("frame")
            .cloned()
            .ok_or("perception_frame without frame")
            .and_then(|f| serde_json::from_value(f).map_err(|_| "bad frame"))?;
        match streams.iter_mut().find(|(a, _)| *a == e.source) {
            Some((_, v)) => v.push(frame),
            None => streams.push((e.source.clone(), vec![frame])),
        }
    }
    Ok(streams)
}

fn cmd_track_replay(input: &Path) -> DomainResult {
    let mut stdout = std::io::stdout().lock();
    for (agent, frames) in replay_streams(input)? {
        let ids = track_replay(&frames, &LocateConfig::default(), &TrackerConfig::default()).map_err(err)?;
        for (tick, track_ids) in ids {
            writeln!(stdout, "{}", json!({"agent": agent, "tick": tick, "track_ids": track_ids})).map_err(err)?;
        }
    }
    Ok(())
}

fn cmd_inspect(path: &Path, rack: &str) -> DomainResult {
    let s = load_scenario(path)?;
    let report = harness::inspect_scenario(&s, rack, &s.exec.inspection).map_err(err)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(err)?);
    Ok(())
}

fn cmd_render(input: &Path, out: &Path) -> DomainResult {
    let is_pgm = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let g = load_grid(input).map_err(err)?;
        pnm::write_pgm8(out, &render_grid(&g)).map_err(err)
    } else {
        let f = File::open(input).map_err(err)?;
        let trace = read_trace(BufReader::new(f)).map_err(err)?;
        pnm::write_ppm(out, &render_trace(&trace, 10.0)).map_err(err)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            reset_at,
            out,
        } => cmd_run(&scenario, seed, reset_at, out),
        Command::Plan { grid, start, goal, out } => cmd_plan(&grid, start, goal, out),
        Command::TrackReplay { input } => cmd_track_replay(&input),
        Command::Inspect { scenario, rack } => cmd_inspect(&scenario, &rack),
        Command::Render { input, out } => cmd_render(&input, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

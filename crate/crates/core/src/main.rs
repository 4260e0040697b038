use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ebvs::event::{read_events, write_events, EventFile};
use ebvs::harness::{load_config_dir, run_suite, run_trial_with, EventSource, TrialConfig, TrialOutput};
use ebvs::harris::CornerClass;
use ebvs::heatmap::{compute_centroid, CornerHeatMap, HeatMapConfig};
use ebvs::pipeline::{Perception, PerceptionConfig};
use ebvs::{Error, Result};

/// Event-based visual servoing on a simulated eye-in-hand camera.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one closed-loop trial.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Write the generated event stream here.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Run a trial on a recorded event stream instead of the simulator.
    Replay {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify every event of a stream and write the corner events.
    Detect {
        #[arg(long)]
        events: PathBuf,
        /// Output file for corner events; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accumulate corner events into a heat-map and print its peaks.
    Heatmap {
        #[arg(long)]
        corners: PathBuf,
        /// Evaluate the map at this time instead of the last corner, µs.
        #[arg(long)]
        at: Option<u64>,
        /// Also write the map as a PGM image.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Run every `*.toml` trial config in a directory.
    Suite {
        #[arg(long)]
        config_dir: PathBuf,
        /// Also write per-trial rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

const EXIT_TRIAL_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TRIAL_FAILED),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// `Ok(false)` means the command ran but a trial failed.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Simulate { config, record } => {
            let config = load_config(&config)?;
            let out = run_trial_with(&config, EventSource::Live, record.is_some())?;
            if let Some(path) = record {
                out.write_recording(&path, config.sensor.width, config.sensor.height)?;
                log::info!("recorded {} events to {}", out.recorded.as_ref().map_or(0, Vec::len), path.display());
            }
            report(&out)
        }
        Command::Replay { events, config } => {
            let config = load_config(&config)?;
            let file = load_events(&events)?;
            if (file.width, file.height) != (config.sensor.width, config.sensor.height) {
                return Err(Error::Config(format!(
                    "recording is {}x{} but the config sensor is {}x{}",
                    file.width, file.height, config.sensor.width, config.sensor.height
                )));
            }
            let out = run_trial_with(&config, EventSource::Recorded(&file.events), false)?;
            report(&out)
        }
        Command::Detect { events, out } => {
            let file = load_events(&events)?;
            let mut perception = Perception::new(file.width, file.height, &PerceptionConfig::default())?;
            let mut corners = Vec::new();
            for e in &file.events {
                if perception.process(e)? == CornerClass::Corner {
                    corners.push(*e);
                }
            }
            let span = match (file.events.first(), file.events.last()) {
                (Some(a), Some(b)) if b.t > a.t => (b.t - a.t) as f64 * 1e-6,
                _ => 0.0,
            };
            let summary = format!(
                "events_in={} corners_out={} corner_fraction={:.4} corners_per_s={:.1}",
                file.events.len(),
                corners.len(),
                corners.len() as f64 / file.events.len().max(1) as f64,
                if span > 0.0 { corners.len() as f64 / span } else { 0.0 }
            );
            match out {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(&path)?);
                    write_events(&mut w, file.width, file.height, &corners)?;
                    w.flush()?;
                    println!("{summary}");
                }
                None => {
                    // Standard output carries the corner stream itself.
                    let mut w = BufWriter::new(io::stdout().lock());
                    write_events(&mut w, file.width, file.height, &corners)?;
                    w.flush()?;
                    eprintln!("{summary}");
                }
            }
            Ok(true)
        }
        Command::Heatmap { corners, at, pgm } => {
            let file = load_events(&corners)?;
            let mut map = CornerHeatMap::new(file.width, file.height, HeatMapConfig::default())?;
            for e in &file.events {
                map.deposit(e.u, e.v, e.t)?;
            }
            if let Some(t) = at.or(file.events.last().map(|e| e.t)) {
                map.decay_to(t)?;
            }
            let peaks = map.extract_peaks();
            println!("x,y,value");
            for p in &peaks.peaks {
                println!("{},{},{:.6}", p.x, p.y, p.value);
            }
            match compute_centroid(&peaks.positions()) {
                Ok(c) => println!("# centroid {:.3},{:.3}", c[0], c[1]),
                Err(_) => println!("# no peaks"),
            }
            if let Some(path) = pgm {
                let mut w = BufWriter::new(File::create(&path)?);
                map.write_pgm(&mut w)?;
                w.flush()?;
            }
            Ok(true)
        }
        Command::Suite { config_dir, csv } => {
            let mut configs = load_config_dir(&config_dir)?;
            if let Some(seed) = seed_override()? {
                for (_, c) in &mut configs {
                    c.seed = seed;
                }
            }
            let report = run_suite(&configs)?;
            println!("{}", report.trial_table());
            println!("{}", report.shape_table());
            if let Some(path) = csv {
                std::fs::write(&path, report.csv())?;
            }
            Ok(report.all_succeeded())
        }
    }
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var("EBVS_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("EBVS_SEED must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn load_config(path: &Path) -> Result<TrialConfig> {
    let mut config = TrialConfig::load(path)?;
    if let Some(seed) = seed_override()? {
        config.seed = seed;
    }
    Ok(config)
}

fn load_events(path: &Path) -> Result<EventFile> {
    read_events(BufReader::new(File::open(path)?))
}

fn report(out: &TrialOutput) -> Result<bool> {
    let m = &out.metrics;
    let text = toml::to_string(m).map_err(|e| Error::Config(e.to_string()))?;
    print!("{text}");
    if m.success {
        log::info!("grasped {:.1} mm from the centroid", m.e_grasp_mm.unwrap_or(f64::NAN));
    } else {
        log::warn!("trial failed in phase {}", m.final_phase);
    }
    Ok(m.success)
}

//! `kramers-lab run <config.json>` drives the analysis stages; `kramers-lab selftest`
//! runs a quick built-in check. Thread count comes from `RAYON_NUM_THREADS`.

mod config;
mod pipeline;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use kramers_core::saddle::{random_saddle, transverse_matrices};
use kramers_core::{analyze, assemble, find_critical_points, parse, preset, small_spectrum, Form, Grid, PRESETS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use config::{RunConfig, Source, Stage};
use pipeline::{RunReport, Seeds, StageOutcome};

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "kramers-lab", version, about = "Eyring-Kramers asymptotics and their numerical cross-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stages of a JSON configuration.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated stages (overrides `stages` in the config).
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
    },
    /// Quick consistency checks on the built-in presets.
    Selftest,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    config_path: String,
    config: &'a RunConfig,
    stages_run: Vec<Stage>,
    seeds: &'a Seeds,
    threads: usize,
    started_unix: f64,
    finished_unix: f64,
    results: &'a [StageOutcome],
    pass: bool,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, stages: Option<Vec<Stage>>) -> ExitCode {
    let started = now();
    let loaded = Source::read(&config).and_then(|src| {
        let mut cfg = src.parse()?;
        if let Some(s) = stages {
            cfg.stages = s;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if out.is_some() {
            cfg.out = out;
        }
        src.validate(&cfg)?;
        Ok(cfg)
    });
    let cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("kramers-out"));
    let stages: BTreeSet<Stage> = cfg.stages.iter().copied().collect();
    let report: RunReport = match pipeline::run(&cfg, &stages, &dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let manifest = Manifest {
        tool: "kramers-lab",
        version: env!("CARGO_PKG_VERSION"),
        core_version: kramers_core::VERSION,
        config_path: config.display().to_string(),
        config: &cfg,
        stages_run: report.stages.iter().map(|s| s.stage).collect(),
        seeds: &report.seeds,
        threads: rayon::current_num_threads(),
        started_unix: started,
        finished_unix: now(),
        results: &report.stages,
        pass: report.pass(),
    };
    if let Err(e) = pipeline::write_json(&dir.join("run_manifest.json"), &manifest) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_IO);
    }
    for s in &report.stages {
        println!("{:<16} {}", s.stage.name(), if s.pass { "ok" } else { "FAILED" });
        for f in &s.failures {
            eprintln!("  {}: {f}", s.stage.name());
        }
    }
    if report.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ASSERTION)
    }
}

fn selftest() -> ExitCode {
    let mut all = true;
    let mut line = |name: &str, result: Result<String, String>| {
        match &result {
            Ok(msg) => println!("ok     {name}: {msg}"),
            Err(msg) => println!("FAILED {name}: {msg}"),
        }
        all &= result.is_ok();
    };

    line(
        "expression round trip",
        PRESETS
            .iter()
            .map(|&name| {
                let land = preset(name, None, 1.0).map_err(|e| e.to_string())?;
                let text = land.v.to_string_dim(land.dim);
                let back = parse(&text, land.dim).map_err(|e| format!("{name}: {e}"))?;
                if back == land.v {
                    Ok(())
                } else {
                    Err(format!("{name}: `{text}` reparses differently"))
                }
            })
            .collect::<Result<Vec<()>, String>>()
            .map(|v| format!("{} presets", v.len())),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    line(
        "transverse saddle data",
        (0..200)
            .map(|k| {
                let d = 2 + k % 4;
                let (hess, b) = random_saddle(&mut rng, d);
                transverse_matrices(&hess, &b).map(|_| ()).map_err(|e| format!("saddle {k}: {e}"))
            })
            .collect::<Result<Vec<()>, String>>()
            .map(|v| format!("{} random saddles", v.len())),
    );

    let (min_shrink, _, failures) = pipeline::graded_check(2, 20);
    line(
        "graded localization",
        if failures.is_empty() { Ok(format!("20 instances, min shrink {min_shrink:.2}")) } else { Err(failures.join("; ")) },
    );

    line("tilted double well", (|| {
        let land = preset("tilted_double_well", None, 1.0).map_err(|e| e.to_string())?;
        let cps = find_critical_points(&land, 32).map_err(|e| e.to_string())?;
        let lab = analyze(&land, &cps, 128).map_err(|e| e.to_string())?;
        let n0 = lab.wellmap.n0();
        let grid = Grid::new(land.half_width, 97).map_err(|e| e.to_string())?;
        let op = assemble(&land, &cps, 0.3, &grid, Form::LWeighted).map_err(|e| e.to_string())?;
        let spec = small_spectrum(&op, 6, false).map_err(|e| e.to_string())?;
        if n0 == 2 && spec.n0_observed == 2 {
            Ok(format!("n0 = 2, lambda_2 = {:.4e} at h = 0.3", spec.re(1)))
        } else {
            Err(format!("labelling n0 = {n0}, observed n0 = {}", spec.n0_observed))
        }
    })());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ASSERTION)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed, stages } => run(config, out, seed, stages),
        Command::Selftest => selftest(),
    }
}

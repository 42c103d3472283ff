use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use groupsearch::engine::Recording;
use groupsearch::experiments::{self, sweep, BatchStats, Execution};
use groupsearch::io::{self, ConfigDoc, RunManifest};
use groupsearch::metrics::{MetricsReport, DEFAULT_COVER_FRACTIONS};
use groupsearch::{run_simulation, SimConfig};

/// Group foraging simulator.
#[derive(Parser)]
#[command(name = "groupsearch", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Base seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicates per instance; overrides the config file.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One search-mode simulation, or a replicate batch with --replicates.
    Run { config: Option<PathBuf> },
    /// Every instance of a sweep file.
    Sweep { spec: PathBuf },
    /// Targets removed: group structure and coverage over a fixed budget.
    Metrics {
        config: Option<PathBuf>,
        /// Coverage fractions to report.
        #[arg(long, value_delimiter = ',')]
        cover: Option<Vec<f64>>,
    },
    /// One simulation with every agent's position dumped per tick.
    Frames { config: Option<PathBuf> },
}

fn read_text(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(String::new()),
    }
}

fn run_config(text: &str, seed: Option<u64>) -> Result<SimConfig> {
    match io::parse_config(text)? {
        ConfigDoc::Run(r) => Ok(r.resolve(seed)?),
        ConfigDoc::Sweep(_) => bail!("this is a sweep file; use the `sweep` command"),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn finish(out: &Path, text: &str, seed: u64, files: &[PathBuf]) -> Result<()> {
    let mut manifest = RunManifest::new(text, seed);
    for f in files {
        manifest.add(out, f)?;
    }
    let path = manifest.write(out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn print_batch(stats: &BatchStats) {
    let m = |s: Option<experiments::Summary>| {
        s.map(|s| format!("{:.1} ± {:.1}", s.mean, s.std))
            .unwrap_or_else(|| "-".into())
    };
    println!("replicates      {}", stats.replicates);
    println!("censored        {}", stats.censored);
    println!("S_avg [s]       {}", m(stats.s_avg));
    println!("first find [s]  {}", m(stats.first_find));
    println!("C_comp*         {}", m(stats.c_comp_star));
    println!("G_size          {}", m(stats.g_size));
    println!("C_prop          {}", m(stats.c_prop));
    for (k, s) in &stats.cover_times {
        println!("cover {k:<9} {}", m(Some(*s)));
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let g = &cli.global;
    if let Some(j) = g.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    std::fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;

    match &cli.command {
        Command::Run { config } => {
            let text = read_text(config.as_deref())?;
            let cfg = run_config(&text, g.seed)?;
            match g.replicates {
                None | Some(1) => {
                    let log = run_simulation(&cfg)?;
                    let report = MetricsReport::from_log(&log, &[]);
                    println!("ticks           {}", log.ticks_run);
                    println!("S_avg [s]       {:?}", report.s_avg);
                    println!("first find [s]  {:?}", report.first_find);
                    println!("C_comp*         {:?}", report.c_comp_star);
                    println!("C_prop          {:?}", report.c_prop);
                    let path = g.out.join("report.json");
                    write_json(&path, &report)?;
                    finish(&g.out, &text, cfg.seed, &[path])?;
                }
                Some(r) => {
                    let stats = experiments::run_batch(&cfg, r, cfg.seed, Execution::Parallel)?;
                    print_batch(&stats);
                    let path = g.out.join("batch.json");
                    write_json(&path, &stats)?;
                    finish(&g.out, &text, cfg.seed, &[path])?;
                }
            }
        }
        Command::Sweep { spec } => {
            let text = read_text(Some(spec))?;
            let ConfigDoc::Sweep(file) = io::parse_config(&text)? else {
                bail!("{} is not a sweep file (no `axes`, `base` or `replicates`)", spec.display());
            };
            let spec = file.resolve(g.seed, g.replicates)?;
            let result = sweep::run_sweep(&spec, Execution::Parallel)?;
            for inst in &result.instances {
                let s_avg = inst
                    .mean_s_avg()
                    .map(|m| format!("{m:.1}"))
                    .unwrap_or_else(|| inst.error.clone().unwrap_or_else(|| "-".into()));
                println!("{:?}  S_avg {s_avg}  norm {:?}", inst.params, inst.normalized);
            }
            let files = io::write_summary(&result, &g.out.join("summary.csv"))?;
            finish(&g.out, &text, spec.seed, &files)?;
        }
        Command::Metrics { config, cover } => {
            let text = read_text(config.as_deref())?;
            let cfg = SimConfig {
                record: Recording::lean(),
                ..run_config(&text, g.seed)?.metrics_mode()
            };
            let fractions = cover.clone().unwrap_or_else(|| DEFAULT_COVER_FRACTIONS.to_vec());
            let outcomes = experiments::run_outcomes(
                &cfg,
                g.replicates.unwrap_or(1),
                cfg.seed,
                Execution::Parallel,
                &fractions,
            )?;
            let stats = BatchStats::from_outcomes(cfg.seed, &outcomes);
            print_batch(&stats);
            let path = g.out.join("metrics.json");
            write_json(&path, &stats)?;
            finish(&g.out, &text, cfg.seed, &[path])?;
        }
        Command::Frames { config } => {
            let text = read_text(config.as_deref())?;
            let mut cfg = run_config(&text, g.seed)?;
            cfg.record.trajectory = true;
            let log = run_simulation(&cfg)?;
            let path = g.out.join("frames.csv");
            io::write_frames(&log, &path)?;
            println!("{} ticks, {} agents -> {}", log.ticks_run, cfg.agents, path.display());
            finish(&g.out, &text, cfg.seed, &[path])?;
        }
    }
    Ok(())
}

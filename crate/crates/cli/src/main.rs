//! `confmip` command-line front end: solve MPS files, generate benchmark
//! instances, run a benchmark directory and summarize its CSV.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use confmip::bench::{self, Family, Filters, RunRecord};
use confmip::model::{parse_mps, write_mps};
use confmip::search::{ConflictSource, NodeSelection, DEFAULT_NODE_LIMIT};
use confmip::{solve, Mode, Model, Settings, SolveResult};
use serde::Serialize;

const STATS_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "confmip", version, about = "Branch-and-bound MIP solver with conflict and dual-ray learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one MPS file.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "combined")]
        mode: Mode,
        #[command(flatten)]
        limits: Limits,
        #[arg(long)]
        stats_json: Option<PathBuf>,
    },
    /// Solve every MPS file of a directory under several modes.
    Bench {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "conflict,dualray,combined,combined-pool")]
        modes: Vec<Mode>,
        #[command(flatten)]
        limits: Limits,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a generated instance as MPS.
    Generate {
        family: Family,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shifted geometric means per setting relative to a base setting.
    Summarize {
        csv: PathBuf,
        #[arg(long, default_value = "conflict")]
        base: String,
        /// Keep every instance instead of applying the selection filters.
        #[arg(long)]
        no_filter: bool,
    },
}

#[derive(Args, Clone)]
struct Limits {
    #[arg(long, default_value = "both")]
    conflict_source: ConflictSource,
    #[arg(long, default_value = "hybrid")]
    node_selection: NodeSelection,
    /// Seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Limits {
    fn settings(&self, mode: Mode) -> Result<Settings> {
        if !(self.time_limit > 0.0) || !self.time_limit.is_finite() {
            bail!("--time-limit must be a positive number of seconds");
        }
        Ok(Settings {
            conflict_source: self.conflict_source,
            node_selection: self.node_selection,
            time_limit: Some(Duration::from_secs_f64(self.time_limit)),
            node_limit: Some(self.node_limit),
            seed: self.seed,
            ..Settings::with_mode(mode)
        })
    }
}

#[derive(Serialize)]
struct StatsFile<'a> {
    schema_version: u32,
    instance: &'a str,
    mode: &'a str,
    conflict_source: &'a str,
    node_selection: &'a str,
    seed: u64,
    status: &'a str,
    objective: Option<f64>,
    time_s: f64,
    stats: &'a confmip::search::SolveStats,
}

fn read_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_mps(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn print_result(name: &str, mode: Mode, res: &SolveResult) {
    let s = &res.stats;
    println!("instance          {name}");
    println!("mode              {mode}");
    println!("status            {}", res.status);
    match res.objective {
        Some(z) => println!("objective         {z}"),
        None => println!("objective         -"),
    }
    println!("nodes             {}", s.nodes);
    println!("time              {:.3} s", res.time.as_secs_f64());
    println!("conflict statistics");
    println!("  lp iterations         {}", s.lp_iterations);
    println!("  max depth             {}", s.max_depth);
    println!("  infeasible props      {}", s.infeasible_propagations);
    println!("  infeasible lps        {}", s.infeasible_lps);
    println!("  analyzed              {}", s.conflicts_analyzed);
    println!("  conflict constraints  {}", s.conflict_constraints);
    println!("  proof constraints     {}", s.proof_constraints);
    println!("  unit conflicts        {}", s.unit_conflicts);
    println!("  conflict deductions   {}", s.conflict_deductions);
    println!("  proof deductions      {}", s.proof_deductions);
    println!("  too long              {}", s.too_long);
    println!("  stalled lps           {}", s.stalled_lps);
    println!("  reason size           {:.2} -> {:.2}", s.mean_reason_before(), s.mean_reason_after());
    println!("  pool inserted         {}", s.pool.inserted);
    println!("  pool evicted          {}", s.pool.evicted);
    println!("  pool age-deleted      {}", s.pool.age_deleted);
    println!("  pool incumbent-del    {}", s.pool.incumbent_deleted);
}

fn mps_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("mps")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .mps files in {}", dir.display());
    }
    Ok(files)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { file, mode, limits, stats_json } => {
            let model = read_model(&file)?;
            let settings = limits.settings(mode)?;
            let res = solve(&model, &settings);
            print_result(&model.name, mode, &res);
            if let Some(path) = stats_json {
                let doc = StatsFile {
                    schema_version: STATS_SCHEMA_VERSION,
                    instance: &model.name,
                    mode: mode.as_str(),
                    conflict_source: limits.conflict_source.as_str(),
                    node_selection: limits.node_selection.as_str(),
                    seed: limits.seed,
                    status: res.status.as_str(),
                    objective: res.objective,
                    time_s: res.time.as_secs_f64(),
                    stats: &res.stats,
                };
                let text = serde_json::to_string_pretty(&doc)?;
                fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
        }
        Command::Bench { dir, modes, limits, out } => {
            if modes.is_empty() {
                bail!("--modes is empty");
            }
            let mut records = Vec::new();
            for path in mps_files(&dir)? {
                let model = read_model(&path)?;
                for &mode in &modes {
                    let res = solve(&model, &limits.settings(mode)?);
                    eprintln!(
                        "{:<24} {:<14} {:<10} {:>8} nodes {:>8.3} s",
                        model.name,
                        mode,
                        res.status,
                        res.stats.nodes,
                        res.time.as_secs_f64()
                    );
                    records.push(RunRecord::from_result(&model.name, mode, limits.seed, &res));
                }
            }
            let file = fs::File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
            bench::write_records(file, &records)?;
        }
        Command::Generate { family, size, seed, out } => {
            let model: Model = bench::generate_instance(family, size, seed)?;
            fs::write(&out, write_mps(&model)).with_context(|| format!("cannot write {}", out.display()))?;
        }
        Command::Summarize { csv, base, no_filter } => {
            let file = fs::File::open(&csv).with_context(|| format!("cannot read {}", csv.display()))?;
            let records = bench::read_records(file)?;
            let filters = if no_filter { Filters::none() } else { Filters::default() };
            let summary = bench::summarize(&records, &base, &filters)?;
            println!("{} instances after filtering, base {}", summary.instances.len(), summary.base);
            println!("{:<16} {:>7} {:>12} {:>10} {:>7} {:>7}", "setting", "solved", "nodes", "time", "n_Q", "t_Q");
            for r in &summary.rows {
                println!(
                    "{:<16} {:>7} {:>12.1} {:>10.3} {:>7.3} {:>7.3}",
                    r.setting, r.solved, r.nodes, r.time_s, r.n_q, r.t_q
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

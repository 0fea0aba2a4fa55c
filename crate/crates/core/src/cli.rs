//! Command-line front end: argument parsing, run orchestration and output files.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataio::{
    generate_synthetic, load_config, ConfigFile, DatasetSection, RunConfig, SyntheticSpec, ViewEntry,
};
use crate::error::{Error, Result};
use crate::metrics::{redescription_stats, set_scores, total_score};
use crate::multiview::{run_restart, FrameworkOptions};
use crate::naive::{run_naive, NaiveOptions, NaiveStats};
use crate::query::Redescription;
use crate::report::{
    compare_reports, comparison_table, digest, NaiveStatsRecord, RunReport, RunRow, ScoresRecord,
    SetFile,
};

#[derive(Debug, Parser)]
#[command(name = "redescribe", version, about = "Multi-view redescription mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine redescriptions with the multi-view framework.
    Mine(RunArgs),
    /// Mine with the naive baseline (pairwise mining plus joins).
    Naive(RunArgs),
    /// Score a redescription file against a dataset.
    Evaluate(EvaluateArgs),
    /// Compare two run reports restart by restart.
    Compare(CompareArgs),
    /// Write a planted-block synthetic dataset and a config for it.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed and REDESCRIBE_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "redescribe-out")]
    pub out: PathBuf,
    /// Restarts run concurrently on this many threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Visit only this many randomly chosen view pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Write a per-step trace log.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Config whose dataset (and scoring defaults) to use.
    #[arg(long)]
    pub config: PathBuf,
    /// Redescription set file.
    pub input: PathBuf,
    /// Expected output size used by the underlined scores.
    #[arg(long)]
    pub expected_size: Option<usize>,
    /// Five comma-separated weights (J, p, AAJ, AEJ, complexity).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Also write the table to DIR/metrics.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report file or output directory of run A.
    pub a: PathBuf,
    /// Report file or output directory of run B.
    pub b: PathBuf,
    /// Also write the table to DIR/comparison.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 200)]
    pub entities: usize,
    #[arg(long, default_value_t = 3)]
    pub views: usize,
    #[arg(long, default_value_t = 10)]
    pub attrs: usize,
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
    #[arg(long, default_value_t = 30)]
    pub block_size: usize,
}

/// How a successful command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Ran fine but produced no redescription.
    Empty,
}

pub const EXIT_EMPTY: i32 = 3;

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::Empty) => EXIT_EMPTY,
        Err(e) => e.exit_code(),
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Mine(a) => cmd_run(&a, Miner::Framework),
        Command::Naive(a) => cmd_run(&a, Miner::Naive),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

/// Runs `f(0..n)` on up to `jobs` threads; results keep index order.
pub fn run_indexed<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = f(i);
                slots.lock().unwrap()[i] = Some(v);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|v| v.unwrap()).collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Loads the config and applies command-line overrides.
pub fn prepare_config(args: &RunArgs) -> Result<RunConfig> {
    if args.jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.settings.seed = seed;
    }
    if let Some(m) = args.pairs {
        cfg.settings.view_pairs = Some(m);
    }
    cfg.settings.validate(cfg.dataset.n_views())?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Miner {
    Framework,
    Naive,
}

struct RestartOutput {
    sets: Vec<Vec<Redescription>>,
    peak: usize,
    trace: Vec<String>,
    stats: Option<NaiveStats>,
    seconds: f64,
}

#[derive(Serialize)]
struct Timing {
    total_seconds: f64,
    restart_seconds: Vec<f64>,
}

fn stats_record(s: &NaiveStats) -> NaiveStatsRecord {
    NaiveStatsRecord {
        pair_sizes: s.pair_sizes.iter().map(|((i, j), n)| (*i, *j, *n)).collect(),
        fold_sizes: s.fold_sizes.clone(),
        peak: s.peak,
        complete: s.complete,
        output: s.output,
    }
}

fn cmd_run(args: &RunArgs, miner: Miner) -> Result<Outcome> {
    let started = Instant::now();
    let cfg = prepare_config(args)?;
    let (d, c, s) = (&cfg.dataset, &cfg.constraints, &cfg.settings);
    let rows = s.weights.rows();
    let outputs = run_indexed(s.n_random_restarts, args.jobs, |r| {
        let t = Instant::now();
        let mut out = match miner {
            Miner::Framework => {
                let res = run_restart(d, c, s, r, &FrameworkOptions::default());
                RestartOutput {
                    sets: res.sets,
                    peak: res.peak_store,
                    trace: res.trace.iter().map(ToString::to_string).collect(),
                    stats: None,
                    seconds: 0.0,
                }
            }
            Miner::Naive => {
                let res = run_naive(d, c, s, r, &NaiveOptions::default());
                RestartOutput {
                    sets: vec![res.redescriptions; rows.len()],
                    peak: res.stats.peak,
                    trace: res.stats.to_string().lines().map(String::from).collect(),
                    stats: Some(res.stats),
                    seconds: 0.0,
                }
            }
        };
        out.seconds = t.elapsed().as_secs_f64();
        out
    });

    let command = match miner {
        Miner::Framework => "mine",
        Miner::Naive => "naive",
    };
    create_dir(&args.out)?;
    let resolved = cfg.resolved_toml();
    write_file(&args.out.join("config.toml"), &resolved)?;
    let mut run_rows = Vec::new();
    let mut trace = String::new();
    let mut empty = true;
    for (r, out) in outputs.iter().enumerate() {
        let dir = args.out.join(format!("restart-{r}"));
        create_dir(&dir)?;
        for (w, set) in out.sets.iter().enumerate() {
            empty &= set.is_empty();
            let sc = set_scores(set, &rows[w], s.expected_out_size, s.k_c, d.n_entities(), d.n_attributes());
            let mut file = SetFile::from_set(set, d);
            file.restart = Some(r);
            file.weight_row = Some(w);
            file.scores = Some(ScoresRecord::new(&sc, rows[w], s.expected_out_size));
            file.stats = out.stats.as_ref().map(stats_record);
            file.write(&dir.join(format!("set-{w}.toml")))?;
            run_rows.push(RunRow::new(r, w, out.peak, &sc));
        }
        for line in &out.trace {
            trace.push_str(&format!("restart={r} {line}\n"));
        }
    }
    let report = RunReport::new(command, s.seed, digest(&resolved), s.n_random_restarts, rows.len(), run_rows);
    write_file(&args.out.join("report.toml"), &report.to_toml())?;
    if args.trace {
        write_file(&args.out.join("trace.log"), &trace)?;
    }
    let timing = Timing {
        total_seconds: started.elapsed().as_secs_f64(),
        restart_seconds: outputs.iter().map(|o| o.seconds).collect(),
    };
    write_file(&args.out.join("timing.toml"), &toml::to_string(&timing).expect("timing serializes"))?;
    print!("{}", report.summary());
    if empty {
        eprintln!("no redescription satisfied the constraints");
        Ok(Outcome::Empty)
    } else {
        Ok(Outcome::Success)
    }
}

/// Per-redescription statistics and set scores as CSV.
pub fn metrics_table(set: &[Redescription], weights: &[f64; 5], expected: usize, k_c: usize, n_entities: usize, n_attributes: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "name", "size", "jaccard", "pvalue", "j_sc", "p_sc", "aaj_sc", "aej_sc", "comp_sc", "total_sc",
        "entity_coverage", "attribute_coverage",
    ];
    w.write_record(header).expect("in-memory write");
    let f = |x: f64| x.to_string();
    for (i, st) in redescription_stats(set, k_c).iter().enumerate() {
        let sc = st.scores();
        let mut rec = vec![format!("R{}", i + 1), st.support_size.to_string(), f(st.jaccard), f(st.pvalue)];
        rec.extend(sc.iter().map(|x| f(*x)));
        rec.push(f(total_score(&sc, weights)));
        rec.extend([String::new(), String::new()]);
        w.write_record(&rec).expect("in-memory write");
    }
    let s = set_scores(set, weights, expected, k_c, n_entities, n_attributes);
    let mut summary = |name: &str, m: &crate::metrics::MeasureScores| {
        let mut rec = vec![name.to_string(), s.size.to_string(), String::new(), String::new()];
        rec.extend(m.components().iter().map(|x| f(*x)));
        rec.push(f(m.total_sc));
        rec.extend([f(s.entity_coverage), f(s.attribute_coverage)]);
        w.write_record(&rec).expect("in-memory write");
    };
    if let Some(p) = &s.plain {
        summary("set_plain", p);
    }
    summary("set_underlined", &s.underlined);
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 table")
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<Outcome> {
    let cfg = load_config(&args.config)?;
    let set = SetFile::read(&args.input)?.redescriptions(&cfg.dataset)?;
    let weights: [f64; 5] = match &args.weights {
        Some(v) => {
            let row: [f64; 5] = v
                .as_slice()
                .try_into()
                .map_err(|_| Error::Usage("--weights needs five values".into()))?;
            crate::dataio::WeightMatrix::single(row)?;
            row
        }
        None => cfg.settings.weights.rows()[0],
    };
    let expected = args.expected_size.unwrap_or(cfg.settings.expected_out_size);
    if expected == 0 {
        return Err(Error::Usage("--expected-size must be positive".into()));
    }
    let d = &cfg.dataset;
    let table = metrics_table(&set, &weights, expected, cfg.settings.k_c, d.n_entities(), d.n_attributes());
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("metrics.csv"), &table)?;
    }
    print!("{table}");
    Ok(Outcome::Success)
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("report.toml")
    } else {
        p.to_path_buf()
    }
}

fn cmd_compare(args: &CompareArgs) -> Result<Outcome> {
    let a = RunReport::read(&report_path(&args.a))?;
    let b = RunReport::read(&report_path(&args.b))?;
    let rows = compare_reports(&a, &b)?;
    if a.restarts < 2 {
        eprintln!("signed-rank test skipped: needs at least two restarts per run");
    }
    let table = comparison_table(&rows);
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("comparison.csv"), &table)?;
    }
    print!("{table}");
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct BlockRecord {
    members: Vec<String>,
    queries: std::collections::BTreeMap<String, String>,
}

#[derive(Serialize)]
struct BlocksFile {
    block: Vec<BlockRecord>,
}

fn cmd_synth(args: &SynthArgs) -> Result<Outcome> {
    let spec = SyntheticSpec::blocks(args.entities, args.views, args.attrs, args.blocks, args.block_size, args.noise, args.seed);
    let data = generate_synthetic(&spec)?;
    let d = &data.dataset;
    create_dir(&args.out)?;
    d.save(&args.out)?;
    let views = d
        .views
        .iter()
        .map(|v| ViewEntry {
            name: v.name.clone(),
            path: PathBuf::from(format!("{}.csv", v.name)),
            kinds: Default::default(),
        })
        .collect();
    let config = ConfigFile {
        dataset: DatasetSection { views },
        ..Default::default()
    };
    write_file(&args.out.join("config.toml"), &config.to_toml())?;
    let blocks = BlocksFile {
        block: data
            .blocks
            .iter()
            .map(|b| BlockRecord {
                members: b.members.iter().map(|e| d.entities[e].clone()).collect(),
                queries: (0..d.n_views()).map(|v| (d.views[v].name.clone(), b.query_text(d, v))).collect(),
            })
            .collect(),
    };
    write_file(&args.out.join("blocks.toml"), &toml::to_string(&blocks).expect("blocks serialize"))?;
    println!("wrote {} views of {} entities to {}", d.n_views(), d.n_entities(), args.out.display());
    Ok(Outcome::Success)
}

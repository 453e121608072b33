// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::{
    median_by_n, run_convergence_experiment, ExperimentConfig, ExperimentMode,
};
use crate::geometry::ModelParams;
use crate::graph::{build_model_graph, Graph};
use crate::io::{
    load_edges, load_partition, load_points, save_edges, save_points, write_partition, PointsFile,
};
use crate::modularity::{
    brute_force_modularity, modularity_score, sector_partition, Partition, BRUTE_FORCE_MAX_N,
};
use crate::sampling::{sample_points, SampleMode, Seed};
use crate::stats::graph_stats;

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "HYPERMOD_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "hypermod",
    version,
    about = "Random hyperbolic graphs and the modularity of their sector partitions"
)]
struct Cli {
    /// Master seed. For `experiment` it replaces the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; HYPERMOD_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a graph and write points.tsv and edges.tsv.
    #[command(allow_negative_numbers = true)]
    Generate(GenerateArgs),
    /// Score a partition of a graph.
    Score {
        edges: PathBuf,
        /// Partition file, or `trivial` / `singletons`.
        partition: String,
    },
    /// Write the 2t-sector partition of a sampled graph.
    Sector {
        edges: PathBuf,
        #[arg(long, default_value_t = 16)]
        t: usize,
        /// Point file; defaults to points.tsv next to the edge file.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Degree, clustering and component statistics.
    Stats {
        edges: PathBuf,
        #[arg(long, default_value_t = 10)]
        d_min: usize,
    },
    /// Run a convergence experiment from a JSON config and write CSV.
    Experiment {
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ExperimentModeArg>,
    },
    /// Exact modularity of a small graph by exhaustive search.
    Oracle {
        edges: PathBuf,
        #[arg(long, default_value_t = BRUTE_FORCE_MAX_N)]
        max_n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentModeArg {
    Binomial,
    Poisson,
    Band,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    n: f64,
    /// `binomial`, `poisson` or `band:<y_max>`.
    #[arg(long, default_value = "poisson")]
    mode: String,
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code: 0 on success, 1 on a usage error, 2 when the command fails.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let outcome = match builder.build() {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(Error::contract(format!("cannot start thread pool: {e}"))),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            )),
        },
        Err(_) => match flag {
            Some(0) => Err("--threads must be positive".to_string()),
            other => Ok(other),
        },
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => generate(args, Seed(cli.seed.unwrap_or(0))),
        Command::Score { edges, partition } => {
            let g = load_edges(edges)?;
            let part = match partition.as_str() {
                "trivial" => Partition::trivial(g.vertex_count()),
                "singletons" => Partition::singletons(g.vertex_count()),
                path => load_partition(Path::new(path), g.vertex_count())?,
            };
            report(cli.format, &modularity_score(&g, &part)?)
        }
        Command::Sector {
            edges,
            t,
            points,
            output,
        } => {
            let points = points
                .clone()
                .unwrap_or_else(|| edges.with_file_name("points.tsv"));
            let g = load_with_points(edges, &points)?;
            let part = sector_partition(&g, *t)?;
            match output {
                Some(path) => crate::io::save_partition(path, &part),
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_partition(&mut lock, &part)
                        .and_then(|_| lock.flush())
                        .map_err(|e| Error::io(Path::new("<stdout>"), e))
                }
            }
        }
        Command::Stats { edges, d_min } => {
            report(cli.format, &graph_stats(&load_edges(edges)?, *d_min))
        }
        Command::Experiment {
            config,
            output,
            mode,
        } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(path) = output {
                cfg.output_path = path.to_string_lossy().into_owned();
            }
            if let Some(mode) = mode {
                cfg.mode = match mode {
                    ExperimentModeArg::Binomial => ExperimentMode::Binomial,
                    ExperimentModeArg::Poisson => ExperimentMode::Poisson,
                    ExperimentModeArg::Band => ExperimentMode::Band,
                };
            }
            if let Some(seed) = cli.seed {
                cfg.seeds = vec![seed];
            }
            let rows = run_convergence_experiment(&cfg)?;
            for (n, med) in median_by_n(&rows, |r| r.sector_score) {
                eprintln!("n={n}\tmedian sector_score={med:.6}");
            }
            Ok(())
        }
        Command::Oracle { edges, max_n } => {
            let g = load_edges(edges)?;
            let opt = brute_force_modularity(&g, *max_n)?;
            #[derive(Serialize)]
            struct OracleReport<'a> {
                score: f64,
                numerator: String,
                denominator: String,
                partition: &'a [usize],
            }
            report(
                cli.format,
                &OracleReport {
                    score: opt.score,
                    numerator: opt.numerator.to_string(),
                    denominator: opt.denominator.to_string(),
                    partition: opt.best.assignments(),
                },
            )
        }
    }
}

fn generate(args: &GenerateArgs, seed: Seed) -> Result<()> {
    let params = ModelParams::new(args.alpha, args.nu, args.n)?;
    let mode: SampleMode = args.mode.parse()?;
    let points = sample_points(&params, mode, seed)?;
    let y_max = match mode {
        SampleMode::Band { y_max } => Some(y_max),
        _ => None,
    };
    let g = build_model_graph(points.clone(), &params, y_max)?;
    std::fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    save_points(
        &args.output.join("points.tsv"),
        &PointsFile {
            params,
            mode,
            seed,
            points,
        },
    )?;
    save_edges(&args.output.join("edges.tsv"), &g)
}

fn load_with_points(edges: &Path, points: &Path) -> Result<Graph> {
    let g = load_edges(edges)?;
    let file = load_points(points)?;
    Ok(g.with_geometry(file.geometry())?.with_params(file.params))
}

fn report<T: Serialize>(format: Format, value: &T) -> Result<()> {
    let value = serde_json::to_value(value).map_err(|e| Error::contract(e.to_string()))?;
    let text = match format {
        Format::Json => value.to_string(),
        Format::Tsv => tsv_lines(&value),
    };
    println!("{text}");
    Ok(())
}

/// Flattens the scalar fields of a JSON object into `key\tvalue` lines;
/// arrays are joined with commas and nested objects are skipped.
fn tsv_lines(value: &Value) -> String {
    let Value::Object(map) = value else {
        return value.to_string();
    };
    let mut lines = Vec::new();
    for (key, v) in map {
        let text = match v {
            Value::Object(_) => continue,
            Value::Array(items) if items.iter().any(Value::is_object) => continue,
            Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
            other => scalar(other),
        };
        lines.push(format!("{key}\t{text}"));
    }
    lines.join("\n")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "NaN".to_string(),
        other => other.to_string(),
    }
}

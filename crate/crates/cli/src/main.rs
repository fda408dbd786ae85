use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdsweep_cli::bench::{run_bench, write_csv, BenchConfig};
use tdsweep_cli::{parse_range, GridSize, PruneSetting};
use tdsweep_core::graph::{generate_synthetic, parse_tdgr, write_tdgr, SynthParams, Topology};
use tdsweep_core::tch::{parse_tch, serialize_tch};
use tdsweep_core::verify::compare_with_oracle;
use tdsweep_core::{build_tch, NodeId, OrderParams, SweepOptions, Sweeper, Tch, TdGraph};

/// Exact time-dependent one-to-all travel time profiles.
#[derive(Parser)]
#[command(name = "tdsweep", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic time-dependent road network.
    Gen {
        /// Grid topology, e.g. 50x50.
        #[arg(long, conflicts_with = "geometric")]
        grid: Option<GridSize>,
        /// Random geometric topology as NODES:EDGES.
        #[arg(long)]
        geometric: Option<String>,
        /// Fraction of edges with a rush-hour profile.
        #[arg(long, default_value_t = 0.08)]
        td_share: f64,
        /// Breakpoints per time-dependent edge, `LO-HI`.
        #[arg(long, default_value = "4-12")]
        breakpoints: String,
        /// Peak travel time relative to free flow, `LO-HI`.
        #[arg(long, default_value = "1.5-2.0")]
        peak: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build a contraction hierarchy from a graph.
    Prep {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Settled-node limit of each witness search.
        #[arg(long, default_value_t = 64)]
        witness_budget: usize,
        /// Fall back to an exact profile witness search.
        #[arg(long)]
        exact_witness: bool,
    },
    /// Compute profiles from one source on a hierarchy.
    Query {
        tch: PathBuf,
        /// Source node (one-based id of the input graph).
        #[arg(long)]
        source: u64,
        /// Pruning bound width, e.g. 0.001 or 0.1%.
        #[arg(long, default_value = "0.1%")]
        epsilon: PruneSetting,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Only compute the K most important nodes.
        #[arg(long, value_name = "K")]
        core: Option<usize>,
        #[arg(long)]
        no_prune: bool,
        /// Print every profile, not just the counters.
        #[arg(long)]
        dump: bool,
    },
    /// Check a hierarchy against plain profile searches on its graph.
    Verify {
        graph: PathBuf,
        tch: PathBuf,
        /// Random sources to check; every node when at least the node count.
        #[arg(long, default_value_t = 10)]
        sources: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0.1%")]
        epsilon: PruneSetting,
    },
    /// Time queries and write CSV.
    Bench {
        graph: PathBuf,
        /// Reuse a prepared hierarchy instead of building one.
        #[arg(long)]
        tch: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        sources: usize,
        #[arg(long, value_delimiter = ',', default_value = "10%,1%,0.1%,0.01%")]
        epsilons: Vec<PruneSetting>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        core: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination, standard output if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Bad flag values that clap cannot catch on its own.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A verification run found a difference.
#[derive(Debug)]
struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Mismatch>() {
                ExitCode::from(1)
            } else if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen {
            grid,
            geometric,
            td_share,
            breakpoints,
            peak,
            seed,
            output,
        } => {
            let topology = match (grid, geometric) {
                (Some(g), None) => Topology::Grid {
                    width: g.width,
                    height: g.height,
                },
                (None, Some(text)) => {
                    let (nodes, edges) = text
                        .split_once(':')
                        .and_then(|(n, m)| Some((n.parse().ok()?, m.parse().ok()?)))
                        .ok_or_else(|| usage(format!("`{text}` is not NODES:EDGES")))?;
                    Topology::RandomGeometric { nodes, edges }
                }
                _ => return Err(usage("pass exactly one of --grid or --geometric")),
            };
            let params = SynthParams {
                topology,
                td_share,
                breakpoints: parse_range(&breakpoints).map_err(usage)?,
                peak_factor: parse_range(&peak).map_err(usage)?,
                seed,
                ..Default::default()
            };
            let g = generate_synthetic(&params).map_err(|e| usage(e.to_string()))?;
            write_file(&output, write_tdgr(&g).as_bytes())?;
            let share = g.time_dependent_edges() as f64 / g.num_edges().max(1) as f64;
            println!(
                "nodes={} edges={} td_share={share:.4}",
                g.num_nodes(),
                g.num_edges()
            );
        }
        Command::Prep {
            input,
            output,
            witness_budget,
            exact_witness,
        } => {
            let g = read_graph(&input)?;
            let params = OrderParams {
                witness_budget,
                exact_witness,
                ..Default::default()
            };
            let t = build_tch(&g, &params);
            write_file(&output, serialize_tch(&t).as_bytes())?;
            println!(
                "nodes={} edges={} shortcuts={} max_level={} breakpoints={}",
                t.num_nodes(),
                t.num_edges(),
                t.num_shortcuts(),
                t.max_level(),
                t.total_breakpoints()
            );
        }
        Command::Query {
            tch,
            source,
            epsilon,
            workers,
            core,
            no_prune,
            dump,
        } => {
            let t = read_tch(&tch)?;
            let s = NodeId::from_one_based(source)
                .filter(|s| s.index() < t.num_nodes())
                .ok_or_else(|| {
                    usage(format!(
                        "unknown source {source}, nodes are 1..={}",
                        t.num_nodes()
                    ))
                })?;
            let mut opt = SweepOptions {
                workers,
                core_k: core,
                pruning: !no_prune,
                ..Default::default()
            };
            match epsilon {
                PruneSetting::Off => opt.pruning = false,
                PruneSetting::On(e) => opt.prune_epsilon = e,
            }
            let sweeper = Sweeper::new(&t, opt).map_err(|e| usage(e.to_string()))?;
            let result = sweeper.run(s)?;
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            if dump {
                out.write_all(result.dump().as_bytes())?;
            }
            write!(out, "{}", result.stats)?;
            out.flush()?;
        }
        Command::Verify {
            graph,
            tch,
            sources,
            seed,
            epsilon,
        } => verify(&graph, &tch, sources, seed, epsilon)?,
        Command::Bench {
            graph,
            tch,
            sources,
            epsilons,
            workers,
            core,
            seed,
            output,
        } => {
            let cfg = BenchConfig {
                sources,
                epsilons,
                workers,
                core_k: core,
                seed,
            };
            cfg.validate().map_err(usage)?;
            let g = read_graph(&graph)?;
            let t = match tch {
                Some(path) => read_tch(&path)?,
                None => build_tch(&g, &OrderParams::default()),
            };
            check_pair(&g, &t)?;
            let rows = run_bench(&g, &t, &cfg)?;
            match output {
                Some(path) => {
                    let file = File::create(&path)
                        .with_context(|| format!("cannot create {}", path.display()))?;
                    write_csv(&rows, BufWriter::new(file))?;
                }
                None => write_csv(&rows, io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn verify(
    graph: &Path,
    tch: &Path,
    sources: usize,
    seed: u64,
    epsilon: PruneSetting,
) -> Result<()> {
    let g = read_graph(graph)?;
    let t = read_tch(tch)?;
    check_pair(&g, &t)?;
    if sources == 0 {
        eprintln!("warning: no sources requested, nothing was checked");
        println!("PASS 0 sources");
        return Ok(());
    }
    let opt = match epsilon {
        PruneSetting::Off => SweepOptions {
            pruning: false,
            ..Default::default()
        },
        PruneSetting::On(e) => SweepOptions {
            prune_epsilon: e,
            ..Default::default()
        },
    };
    let sweeper = Sweeper::new(&t, opt)?;
    let n = g.num_nodes() as u32;
    let picked: Vec<NodeId> = if sources >= n as usize {
        (0..n).map(NodeId).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sources).map(|_| NodeId(rng.gen_range(0..n))).collect()
    };
    for (i, &s) in picked.iter().enumerate() {
        let result = sweeper.run(s)?;
        if let Err(m) = compare_with_oracle(&g, &result, seed.wrapping_add(i as u64)) {
            println!("FAIL {m}");
            return Err(Mismatch(format!("profiles differ: {m}")).into());
        }
    }
    println!("PASS {} sources", picked.len());
    Ok(())
}

fn check_pair(g: &TdGraph, t: &Tch) -> Result<()> {
    if g.num_nodes() != t.num_nodes() {
        return Err(anyhow!(
            "graph has {} nodes but the hierarchy has {}",
            g.num_nodes(),
            t.num_nodes()
        ));
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_graph(path: &Path) -> Result<TdGraph> {
    parse_tdgr(open(path)?).with_context(|| format!("{}", path.display()))
}

fn read_tch(path: &Path) -> Result<Tch> {
    parse_tch(open(path)?).with_context(|| format!("{}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

//! Query benchmarks in the shape of a classic speed-up table: a plain
//! profile search baseline, the sweep across pruning settings, and the best
//! setting across worker counts.

use std::io::{self, Write};
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdsweep_core::profile::{one_to_all_profile, Restriction};
use tdsweep_core::sweep::SweepError;
use tdsweep_core::{NodeId, SweepOptions, Sweeper, Tch, TdGraph};

use crate::PruneSetting;

pub const CSV_HEADER: &str = "algorithm,workers,epsilon,time_ms,links,breakpoints";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sources: usize,
    pub epsilons: Vec<PruneSetting>,
    pub workers: Vec<usize>,
    /// Sweeps only compute the `core_k` most important nodes; clamped to
    /// the node count.
    pub core_k: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let eps = |e| PruneSetting::On(tdsweep_core::Epsilon::new(e).unwrap());
        BenchConfig {
            sources: 100,
            epsilons: vec![eps(0.1), eps(0.01), eps(0.001), eps(0.0001)],
            workers: vec![1, 2, 4, 8],
            core_k: 10_000,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.sources == 0 {
            return Err("need at least one source".into());
        }
        if self.epsilons.is_empty() {
            return Err("epsilon list is empty".into());
        }
        if self.workers.is_empty() {
            return Err("worker list is empty".into());
        }
        if self.workers.contains(&0) {
            return Err("worker counts must be at least 1".into());
        }
        if self.core_k == 0 {
            return Err("core size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub algorithm: &'static str,
    pub workers: usize,
    /// `-` for the baseline, `off` without pruning.
    pub epsilon: String,
    /// Mean wall time per query.
    pub time_ms: f64,
    /// Total over all sources.
    pub links: u64,
    pub breakpoints: u64,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.3},{},{}",
            self.algorithm, self.workers, self.epsilon, self.time_ms, self.links, self.breakpoints
        )
    }
}

pub fn write_csv(rows: &[BenchRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Draws `count` sources uniformly from the `k` most important nodes,
/// without repetition while the core is large enough. Returns input-graph
/// ids.
pub fn pick_sources(tch: &Tch, k: usize, count: usize, seed: u64) -> Vec<NodeId> {
    let k = k.min(tch.num_nodes());
    if k == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let internal: Vec<usize> = if count <= k {
        sample(&mut rng, k, count).into_vec()
    } else {
        (0..count).map(|_| rng.gen_range(0..k)).collect()
    };
    internal
        .into_iter()
        .map(|i| tch.original_id(NodeId(i as u32)))
        .collect()
}

pub fn run_bench(g: &TdGraph, tch: &Tch, cfg: &BenchConfig) -> Result<Vec<BenchRow>, SweepError> {
    let sources = pick_sources(tch, cfg.core_k, cfg.sources, cfg.seed);
    let count = sources.len().max(1) as f64;
    let core = Some(cfg.core_k.min(tch.num_nodes()));

    let mut rows = Vec::with_capacity(1 + cfg.epsilons.len() + cfg.workers.len());
    let (mut time, mut links, mut bps) = (0.0, 0u64, 0u64);
    for &s in &sources {
        let start = Instant::now();
        let state = one_to_all_profile(g, s, Restriction::AllEdges);
        time += start.elapsed().as_secs_f64() * 1e3;
        links += state.stats.links as u64;
        bps += state.stats.breakpoints_processed as u64;
    }
    rows.push(BenchRow {
        algorithm: "dijkstra",
        workers: 1,
        epsilon: "-".into(),
        time_ms: time / count,
        links,
        breakpoints: bps,
    });

    let sweep_row = |setting: PruneSetting, workers: usize| -> Result<BenchRow, SweepError> {
        let mut opt = SweepOptions {
            core_k: core,
            workers,
            ..Default::default()
        };
        match setting {
            PruneSetting::Off => opt.pruning = false,
            PruneSetting::On(e) => opt.prune_epsilon = e,
        }
        let sweeper = Sweeper::new(tch, opt)?;
        let mut row = BenchRow {
            algorithm: "sweep",
            workers,
            epsilon: setting.to_string(),
            time_ms: 0.0,
            links: 0,
            breakpoints: 0,
        };
        for &s in &sources {
            let stats = sweeper.run(s)?.stats;
            row.time_ms += stats.wall_time_ms;
            row.links += stats.links_exact;
            row.breakpoints += stats.breakpoints_processed;
        }
        row.time_ms /= count;
        Ok(row)
    };

    let mut best: Option<(u64, PruneSetting)> = None;
    for &setting in &cfg.epsilons {
        let row = sweep_row(setting, 1)?;
        // breakpoint totals are deterministic, unlike wall time
        if best.is_none_or(|(b, _)| row.breakpoints < b) {
            best = Some((row.breakpoints, setting));
        }
        rows.push(row);
    }
    if let Some((_, setting)) = best {
        for &w in cfg.workers.iter().filter(|&&w| w != 1) {
            rows.push(sweep_row(setting, w)?);
        }
    }
    Ok(rows)
}

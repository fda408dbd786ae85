//! Synthetic time-dependent road networks.
//!
//! Every edge gets a free-flow travel time; a seeded random subset of edges
//! additionally gets one or two rush-hour bumps. Bumps are sampled raised
//! cosines whose height is capped at half their half-width, so every segment
//! slope stays within [-0.8, 0.8] and FIFO holds by construction.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{NodeId, TdEdge, TdGraph};
use crate::ttf::{Point, Ttf, DEFAULT_PERIOD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    /// `width x height` lattice with bidirected edges between 4-neighbours.
    Grid { width: usize, height: usize },
    /// Random points in a square; a nearest-earlier-node tree keeps the
    /// graph connected and extra nearest-neighbour links bring the directed
    /// edge count close to `edges`. All links are bidirected.
    RandomGeometric { nodes: usize, edges: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub topology: Topology,
    /// Fraction of edges with a non-constant travel time.
    pub td_share: f64,
    /// Inclusive range of breakpoints per time-dependent edge.
    pub breakpoints: (usize, usize),
    /// Inclusive range of peak travel time relative to free flow.
    pub peak_factor: (f64, f64),
    pub period: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn grid(width: usize, height: usize, seed: u64) -> Self {
        SynthParams {
            topology: Topology::Grid { width, height },
            seed,
            ..Default::default()
        }
    }

    pub fn random_geometric(nodes: usize, edges: usize, seed: u64) -> Self {
        SynthParams {
            topology: Topology::RandomGeometric { nodes, edges },
            seed,
            ..Default::default()
        }
    }
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            topology: Topology::Grid {
                width: 10,
                height: 10,
            },
            td_share: 0.08,
            breakpoints: (4, 12),
            peak_factor: (1.5, 2.0),
            period: DEFAULT_PERIOD,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("td share {0} outside [0, 1]")]
    TdShare(f64),
    #[error("breakpoint range {0}..={1} invalid (need 3 <= min <= max)")]
    Breakpoints(usize, usize),
    #[error("peak factor range {0}..={1} invalid (need 1 <= min <= max)")]
    PeakFactor(f64, f64),
    #[error("period {0} must be positive")]
    Period(f64),
    #[error("{edges} edges cannot connect {nodes} nodes (need at least {needed})")]
    TooFewEdges {
        nodes: usize,
        edges: usize,
        needed: usize,
    },
    #[error("{edges} edges exceed the {max} possible on {nodes} nodes")]
    TooManyEdges {
        nodes: usize,
        edges: usize,
        max: usize,
    },
}

pub fn generate_synthetic(p: &SynthParams) -> Result<TdGraph, SynthError> {
    if !(0.0..=1.0).contains(&p.td_share) {
        return Err(SynthError::TdShare(p.td_share));
    }
    let (bmin, bmax) = p.breakpoints;
    if bmin < 3 || bmin > bmax {
        return Err(SynthError::Breakpoints(bmin, bmax));
    }
    let (fmin, fmax) = p.peak_factor;
    if !(fmin >= 1.0 && fmin <= fmax && fmax.is_finite()) {
        return Err(SynthError::PeakFactor(fmin, fmax));
    }
    if !(p.period.is_finite() && p.period > 0.0) {
        return Err(SynthError::Period(p.period));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (n, links) = match p.topology {
        Topology::Grid { width, height } => grid_links(width, height, &mut rng),
        Topology::RandomGeometric { nodes, edges } => geometric_links(nodes, edges, &mut rng)?,
    };

    let td_count = (p.td_share * links.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..links.len()).collect();
    order.shuffle(&mut rng);
    let mut is_td = vec![false; links.len()];
    for &i in &order[..td_count] {
        is_td[i] = true;
    }

    let edges = links
        .into_iter()
        .zip(is_td)
        .map(|((tail, head, free_flow), td)| {
            let ttf = if td {
                rush_hour(free_flow, p, &mut rng)
            } else {
                Ttf::constant(free_flow, p.period)
            };
            TdEdge {
                tail: NodeId(tail),
                head: NodeId(head),
                ttf,
            }
        })
        .collect();
    Ok(TdGraph::from_edges(n, p.period, edges))
}

type Link = (u32, u32, f64);

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn grid_links(width: usize, height: usize, rng: &mut impl Rng) -> (usize, Vec<Link>) {
    let id = |x: usize, y: usize| (y * width + x) as u32;
    let mut links = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let mut neighbours = Vec::with_capacity(2);
            if x + 1 < width {
                neighbours.push(id(x + 1, y));
            }
            if y + 1 < height {
                neighbours.push(id(x, y + 1));
            }
            for other in neighbours {
                links.push((id(x, y), other, round2(rng.gen_range(30.0..180.0))));
                links.push((other, id(x, y), round2(rng.gen_range(30.0..180.0))));
            }
        }
    }
    links.sort_by_key(|&(t, h, _)| (t, h));
    (width * height, links)
}

fn geometric_links(
    nodes: usize,
    edges: usize,
    rng: &mut impl Rng,
) -> Result<(usize, Vec<Link>), SynthError> {
    let needed = 2 * nodes.saturating_sub(1);
    if edges < needed {
        return Err(SynthError::TooFewEdges {
            nodes,
            edges,
            needed,
        });
    }
    let max = nodes * nodes.saturating_sub(1);
    if edges > max {
        return Err(SynthError::TooManyEdges { nodes, edges, max });
    }
    const SIDE: f64 = 20_000.0;
    const SPEED: f64 = 15.0;
    let coords: Vec<(f64, f64)> = (0..nodes)
        .map(|_| (rng.gen_range(0.0..SIDE), rng.gen_range(0.0..SIDE)))
        .collect();
    let dist = |a: usize, b: usize| {
        let (dx, dy) = (coords[a].0 - coords[b].0, coords[a].1 - coords[b].1);
        (dx * dx + dy * dy).sqrt()
    };

    let mut pairs = std::collections::BTreeSet::new();
    for i in 1..nodes {
        let j = (0..i)
            .min_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)))
            .unwrap();
        pairs.insert((j.min(i), j.max(i)));
    }
    let target_pairs = edges / 2;
    let mut k = 1;
    while pairs.len() < target_pairs && k < nodes {
        // add each node's k-th nearest neighbour until the budget is met
        for i in 0..nodes {
            if pairs.len() >= target_pairs {
                break;
            }
            let mut by_dist: Vec<usize> = (0..nodes).filter(|&j| j != i).collect();
            by_dist.select_nth_unstable_by(k - 1, |&a, &b| dist(i, a).total_cmp(&dist(i, b)));
            let j = by_dist[k - 1];
            pairs.insert((j.min(i), j.max(i)));
        }
        k += 1;
    }
    let mut links = Vec::with_capacity(2 * pairs.len());
    for (a, b) in pairs {
        let base = dist(a, b) / SPEED + 5.0;
        for (t, h) in [(a, b), (b, a)] {
            links.push((t as u32, h as u32, round2(base * rng.gen_range(0.9..1.1))));
        }
    }
    links.sort_by_key(|&(t, h, _)| (t, h));
    Ok((nodes, links))
}

/// Free flow plus one or two raised-cosine bumps.
fn rush_hour(free_flow: f64, p: &SynthParams, rng: &mut impl Rng) -> Ttf {
    let period = p.period;
    let hour = period / 24.0;
    let quantum = if period >= 1000.0 { 1.0 } else { 0.0 };
    let snap = |t: f64| {
        if quantum > 0.0 {
            (t / quantum).round() * quantum
        } else {
            t
        }
    };

    let k = rng.gen_range(p.breakpoints.0..=p.breakpoints.1);
    let (centers, sizes): (Vec<f64>, Vec<usize>) = if k >= 6 {
        (
            vec![
                rng.gen_range(6.5..8.5) * hour,
                rng.gen_range(16.5..18.5) * hour,
            ],
            vec![k / 2, k - k / 2],
        )
    } else if rng.gen_bool(0.5) {
        (vec![rng.gen_range(6.5..8.5) * hour], vec![k])
    } else {
        (vec![rng.gen_range(16.5..18.5) * hour], vec![k])
    };

    let mut points = Vec::with_capacity(k);
    for (center, size) in centers.into_iter().zip(sizes) {
        let half_width = rng.gen_range(1.0..2.5) * hour;
        let factor = rng.gen_range(p.peak_factor.0..=p.peak_factor.1);
        let height = (free_flow * (factor - 1.0)).min(0.5 * half_width);
        let start = center - half_width;
        for i in 0..size {
            let x = i as f64 / (size - 1) as f64;
            let at = snap(start + x * 2.0 * half_width);
            let bump = 0.5 * (1.0 - (2.0 * PI * x).cos());
            let val = if i == 0 || i + 1 == size {
                free_flow
            } else {
                round2(free_flow + height * bump)
            };
            points.push(Point::new(at, val));
        }
    }
    Ttf::new(points, period).expect("generated travel time functions are valid")
}

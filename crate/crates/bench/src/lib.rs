//! Fixtures shared by the benchmarks.

use tdsweep_core::graph::{generate_synthetic, SynthParams};
use tdsweep_core::{build_tch, OrderParams, Point, Tch, TdGraph, Ttf, DEFAULT_PERIOD};

/// A smooth FIFO rush-hour curve with `points` breakpoints. `phase` shifts
/// the peak so two curves cross several times.
pub fn rush_curve(points: usize, base: f64, phase: f64) -> Ttf {
    let pts = (0..points)
        .map(|i| {
            let at = i as f64 * DEFAULT_PERIOD / points as f64;
            let x = (at / DEFAULT_PERIOD + phase) * std::f64::consts::TAU;
            Point::new(at, base * (1.4 + 0.4 * x.sin() + 0.1 * (3.0 * x).cos()))
        })
        .collect();
    Ttf::new(pts, DEFAULT_PERIOD).expect("gentle slopes keep the curve FIFO")
}

/// A seeded grid and its hierarchy.
pub fn grid_fixture(side: usize, seed: u64) -> (TdGraph, Tch) {
    let g = generate_synthetic(&SynthParams::grid(side, side, seed)).expect("valid grid");
    let t = build_tch(&g, &OrderParams::default());
    (g, t)
}

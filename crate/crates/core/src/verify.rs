//! Cross-checking sweep results against a plain profile search.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeId, TdGraph};
use crate::profile::{one_to_all_profile, ProfileLabel, Restriction};
use crate::sweep::{Profile, SweepResult};
use crate::ttf::Ttf;

/// Absolute tolerance in seconds.
pub const TOLERANCE: f64 = 1e-6;

/// Random departure times checked per node on top of all breakpoints.
pub const RANDOM_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub source: NodeId,
    pub node: NodeId,
    /// `None` when one side is unreached and the other is not.
    pub departure: Option<f64>,
    pub expected: Option<f64>,
    pub found: Option<f64>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |v| v.to_string());
        write!(f, "source {} node {}", self.source, self.node)?;
        if let Some(t) = self.departure {
            write!(f, " at tau={t}")?;
        }
        write!(
            f,
            ": expected {}, found {}",
            show(self.expected),
            show(self.found)
        )
    }
}

/// First departure time at which `found` differs from `expected` by more
/// than [`TOLERANCE`], checking both breakpoint sets and random samples.
pub fn first_difference(
    expected: &Ttf,
    found: &Ttf,
    rng: &mut impl Rng,
) -> Option<(f64, f64, f64)> {
    let period = expected.period();
    let times = expected
        .points()
        .iter()
        .chain(found.points())
        .map(|p| p.at)
        .chain((0..RANDOM_SAMPLES).map(|_| rng.gen_range(0.0..period)))
        .collect::<Vec<_>>();
    times.into_iter().find_map(|t| {
        let (e, f) = (expected.evaluate(t), found.evaluate(t));
        ((e - f).abs() > TOLERANCE).then_some((t, e, f))
    })
}

/// Compares a full sweep from `result.source` with a profile search on the
/// original graph. Nodes marked as not computed are skipped.
pub fn compare_with_oracle(g: &TdGraph, result: &SweepResult, seed: u64) -> Result<(), Mismatch> {
    let oracle = one_to_all_profile(g, result.source, Restriction::AllEdges);
    compare_labels(&oracle.labels, result, seed)
}

pub(crate) fn compare_labels(
    oracle: &[ProfileLabel],
    result: &SweepResult,
    seed: u64,
) -> Result<(), Mismatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (v, (want, got)) in oracle.iter().zip(&result.profiles).enumerate() {
        let node = NodeId(v as u32);
        let mismatch = |departure, expected, found| Mismatch {
            source: result.source,
            node,
            departure,
            expected,
            found,
        };
        match (want.ttf(), got) {
            (_, Profile::NotComputed) | (None, Profile::Unreached) => {}
            (Some(e), Profile::Unreached) => return Err(mismatch(None, Some(e.min()), None)),
            (None, Profile::Reached(f)) => return Err(mismatch(None, None, Some(f.min()))),
            (Some(e), Profile::Reached(f)) => {
                if let Some((t, ev, fv)) = first_difference(e, f, &mut rng) {
                    return Err(mismatch(Some(t), Some(ev), Some(fv)));
                }
            }
        }
    }
    Ok(())
}

//! Pieces of the `tdsweep` command line that are worth testing on their own.

pub mod bench;

use std::fmt;
use std::str::FromStr;

use tdsweep_core::Epsilon;

/// A pruning setting as written on the command line: `off`, a fraction such
/// as `0.001`, or a percentage such as `0.1%`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PruneSetting {
    Off,
    On(Epsilon),
}

impl FromStr for PruneSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("off") {
            return Ok(PruneSetting::Off);
        }
        let (number, scale) = match s.strip_suffix('%') {
            Some(p) => (p, 0.01),
            None => (s, 1.0),
        };
        let value: f64 = number
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not an epsilon (try 0.001, 0.1% or off)"))?;
        Epsilon::new(value * scale)
            .map(PruneSetting::On)
            .map_err(|e| e.to_string())
    }
}

impl fmt::Display for PruneSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PruneSetting::Off => f.write_str("off"),
            PruneSetting::On(e) => write!(f, "{e}"),
        }
    }
}

/// Grid dimensions written as `WIDTHxHEIGHT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSize {
    pub width: usize,
    pub height: usize,
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("`{s}` is not a grid size like 50x50");
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: usize = w.trim().parse().map_err(|_| bad())?;
        let height: usize = h.trim().parse().map_err(|_| bad())?;
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(GridSize { width, height })
    }
}

/// A closed range written as `LO-HI` or a single value.
pub fn parse_range<T: FromStr + Copy>(s: &str) -> Result<(T, T), String> {
    let bad = || format!("`{s}` is not a value or range like 4-12");
    match s.split_once('-') {
        Some((lo, hi)) => Ok((
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        )),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            Ok((v, v))
        }
    }
}

//! Periodic piecewise-linear travel time functions.
//!
//! A [`Ttf`] maps a departure time to a travel time. It is stored as a
//! strictly increasing sequence of breakpoints inside `[0, period)`; between
//! the last breakpoint and the first one shifted by one period the function
//! wraps around. All operations are value-semantic: they never mutate their
//! inputs and always return fresh functions.
//!
//! Results of [`Ttf::link`] and [`Ttf::merge_min`] are canonical: breakpoints
//! that lie on the straight line through their neighbours are dropped, and a
//! constant function has exactly one point.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// One day in seconds.
pub const DEFAULT_PERIOD: f64 = 86_400.0;

/// Breakpoints closer than this (in seconds) are collapsed.
const TIME_EPS: f64 = 1e-7;
/// A breakpoint within this distance (in seconds) of the line through its
/// neighbours is redundant.
const COLLINEAR_EPS: f64 = 1e-8;
/// Sign threshold when looking for crossings of two functions.
const CROSSING_EPS: f64 = 1e-9;
/// Slack on slope -1 accepted by the FIFO check.
const FIFO_SLOPE_EPS: f64 = 1e-9;
/// Absolute slack (seconds) on arrival monotonicity accepted by the FIFO check.
const FIFO_ABS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    /// Departure time in `[0, period)`.
    pub at: f64,
    /// Travel time in seconds.
    pub val: f64,
}

impl Point {
    pub const fn new(at: f64, val: f64) -> Self {
        Point { at, val }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TtfError {
    #[error("a travel time function needs at least one point")]
    Empty,
    #[error("period must be finite and positive, got {0}")]
    BadPeriod(f64),
    #[error("point {index}: time {at} outside [0, {period})")]
    TimeOutOfRange { index: usize, at: f64, period: f64 },
    #[error("point {index}: times must be strictly increasing")]
    NotIncreasing { index: usize },
    #[error("point {index}: travel time {val} must be finite and non-negative")]
    BadValue { index: usize, val: f64 },
    #[error("segment starting at point {index} has slope {slope} < -1 (FIFO violated)")]
    NotFifo { index: usize, slope: f64 },
    #[error("period mismatch: {0} vs {1}")]
    PeriodMismatch(f64, f64),
    #[error("epsilon must lie in [0, 1), got {0}")]
    BadEpsilon(f64),
}

/// Relative approximation tolerance, `0 <= eps < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Epsilon(f64);

impl Epsilon {
    pub const ZERO: Epsilon = Epsilon(0.0);

    pub fn new(value: f64) -> Result<Self, TtfError> {
        if (0.0..1.0).contains(&value) {
            Ok(Epsilon(value))
        } else {
            Err(TtfError::BadEpsilon(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Epsilon {
    fn default() -> Self {
        Epsilon(0.001)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which side of the exact function an approximation may deviate to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxMode {
    /// `(1-eps) f <= result <= (1+eps) f`
    TwoSided,
    /// `(1-eps) f <= result <= f`
    Lower,
    /// `f <= result <= (1+eps) f`
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// `f(t) > g(t)` for all `t`
    Strict,
    /// `f(t) >= g(t)` for all `t`
    NonStrict,
}

/// A periodic piecewise-linear travel time function.
#[derive(Clone)]
pub struct Ttf {
    points: Vec<Point>,
    period: f64,
    min: f64,
    max: f64,
    buckets: OnceLock<Box<[u32]>>,
}

const NO_POINT: u32 = u32::MAX;

impl Ttf {
    /// Validates and builds a function. A sequence whose values are all equal
    /// collapses to its first point.
    pub fn new(points: Vec<Point>, period: f64) -> Result<Self, TtfError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(TtfError::BadPeriod(period));
        }
        if points.is_empty() {
            return Err(TtfError::Empty);
        }
        for (index, p) in points.iter().enumerate() {
            if !(p.at >= 0.0 && p.at < period) {
                return Err(TtfError::TimeOutOfRange {
                    index,
                    at: p.at,
                    period,
                });
            }
            if !(p.val.is_finite() && p.val >= 0.0) {
                return Err(TtfError::BadValue { index, val: p.val });
            }
            if index > 0 && points[index - 1].at >= p.at {
                return Err(TtfError::NotIncreasing { index });
            }
        }
        if let Some((index, slope)) = first_fifo_violation(&points, period) {
            return Err(TtfError::NotFifo { index, slope });
        }
        let mut points = points;
        if points.iter().all(|p| p.val == points[0].val) {
            points.truncate(1);
        }
        Ok(Self::from_valid(points, period))
    }

    pub fn constant(val: f64, period: f64) -> Self {
        assert!(val.is_finite() && val >= 0.0, "bad constant {val}");
        Self::from_valid(vec![Point::new(0.0, val)], period)
    }

    /// The zero function: travel time 0 at every departure.
    pub fn zero(period: f64) -> Self {
        Self::constant(0.0, period)
    }

    fn from_valid(points: Vec<Point>, period: f64) -> Self {
        debug_assert!(!points.is_empty());
        let (min, max) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.val), hi.max(p.val))
            });
        Ttf {
            points,
            period,
            min,
            max,
            buckets: OnceLock::new(),
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of breakpoints, `|f|`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_constant(&self) -> bool {
        self.points.len() == 1
    }

    /// Global minimum over one period.
    pub fn min(&self) -> f64 {
        self.min
    }

    /// Global maximum over one period.
    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn extrema(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    /// Returns `f + c` with the same breakpoint times.
    pub fn shifted(&self, c: f64) -> Ttf {
        let points = self
            .points
            .iter()
            .map(|p| Point::new(p.at, (p.val + c).max(0.0)))
            .collect();
        Self::from_valid(points, self.period)
    }

    /// Whether every segment, including the wraparound one, has slope >= -1.
    pub fn validate_fifo(&self) -> bool {
        first_fifo_violation(&self.points, self.period).is_none()
    }

    fn check_period(&self, other: &Ttf) -> Result<(), TtfError> {
        if self.period == other.period {
            Ok(())
        } else {
            Err(TtfError::PeriodMismatch(self.period, other.period))
        }
    }

    fn buckets(&self) -> &[u32] {
        self.buckets.get_or_init(|| {
            let n = self.points.len();
            let mut out = Vec::with_capacity(n);
            let mut last = NO_POINT;
            let mut i = 0;
            for b in 0..n {
                let start = b as f64 * self.period / n as f64;
                while i < n && self.points[i].at <= start {
                    last = i as u32;
                    i += 1;
                }
                out.push(last);
            }
            out.into_boxed_slice()
        })
    }

    /// Index of the last breakpoint at or before `t in [0, period)`, if any.
    fn locate(&self, t: f64) -> Option<usize> {
        let n = self.points.len();
        let buckets = self.buckets();
        let b = ((t / self.period * n as f64) as usize).min(n - 1);
        let mut idx = match buckets[b] {
            NO_POINT if self.points[0].at <= t => 0,
            NO_POINT => return None,
            i => i as usize,
        };
        while idx + 1 < n && self.points[idx + 1].at <= t {
            idx += 1;
        }
        Some(idx)
    }

    /// Travel time when departing at `t`; `t` is reduced modulo the period.
    pub fn evaluate(&self, t: f64) -> f64 {
        if self.points.len() == 1 {
            return self.points[0].val;
        }
        let t = reduce(t, self.period);
        let n = self.points.len();
        let (a, b) = match self.locate(t) {
            None => {
                let last = self.points[n - 1];
                (Point::new(last.at - self.period, last.val), self.points[0])
            }
            Some(i) if i + 1 == n => {
                let first = self.points[0];
                (
                    self.points[i],
                    Point::new(first.at + self.period, first.val),
                )
            }
            Some(i) => (self.points[i], self.points[i + 1]),
        };
        lerp(a, b, t)
    }

    /// Breakpoints covering `[from, to]` of the periodic extension: the values
    /// at both ends plus every breakpoint strictly inside.
    fn unroll(&self, from: f64, to: f64) -> Vec<Point> {
        let n = self.points.len();
        let mut out = Vec::with_capacity(n + 2 + ((to - from) / self.period) as usize * n);
        out.push(Point::new(from, self.evaluate(from)));
        if n > 1 {
            let mut shift = (from / self.period).floor() * self.period;
            let offset = from - shift;
            let mut i = self.points.partition_point(|p| p.at <= offset);
            if i == n {
                i = 0;
                shift += self.period;
            }
            loop {
                let p = self.points[i];
                let at = p.at + shift;
                if at >= to - TIME_EPS {
                    break;
                }
                if at > from + TIME_EPS {
                    out.push(Point::new(at, p.val));
                }
                i += 1;
                if i == n {
                    i = 0;
                    shift += self.period;
                }
            }
        }
        out.push(Point::new(to, self.evaluate(to)));
        out
    }

    /// Travel time of traversing `self` and then `next`:
    /// `t -> next(t + self(t)) + self(t)`.
    pub fn link(&self, next: &Ttf) -> Result<Ttf, TtfError> {
        self.check_period(next)?;
        Ok(self.link_unchecked(next))
    }

    pub(crate) fn link_unchecked(&self, next: &Ttf) -> Ttf {
        if next.is_constant() {
            return self.shifted(next.points[0].val);
        }
        let period = self.period;
        let first = self.unroll(0.0, period);
        let start = first[0].val;
        let second = next.unroll(start, start + period);

        let mut out = Vec::with_capacity(first.len() + second.len());
        let mut j = 0;
        let mut prev_arr = start;
        for (i, p) in first.iter().enumerate() {
            let arr = (p.at + p.val).max(prev_arr);
            if i > 0 {
                let q = first[i - 1];
                while j + 1 < second.len() && second[j + 1].at < arr - TIME_EPS {
                    j += 1;
                    let b = second[j];
                    if b.at > prev_arr + TIME_EPS {
                        let frac = (b.at - prev_arr) / (arr - prev_arr);
                        let at = q.at + frac * (p.at - q.at);
                        out.push(Point::new(at, (b.at - at) + b.val));
                    }
                }
            }
            while j + 1 < second.len() && second[j + 1].at <= arr {
                j += 1;
            }
            let next_val = match second.get(j + 1) {
                Some(&b) => lerp(second[j], b, arr),
                None => second[j].val,
            };
            out.push(Point::new(p.at, p.val + next_val));
            prev_arr = arr;
        }
        Self::from_unrolled(out, period)
    }

    /// Pointwise minimum `t -> min(self(t), other(t))`. On ties the result
    /// follows `self`.
    pub fn merge_min(&self, other: &Ttf) -> Result<Ttf, TtfError> {
        self.check_period(other)?;
        Ok(self.merge_min_unchecked(other))
    }

    pub(crate) fn merge_min_unchecked(&self, other: &Ttf) -> Ttf {
        if self.max <= other.min {
            return self.clone();
        }
        if other.max < self.min {
            return other.clone();
        }
        if other
            .find_violation(self, Strictness::NonStrict, 0.0)
            .is_none()
        {
            return self.clone();
        }
        if self
            .find_violation(other, Strictness::NonStrict, 0.0)
            .is_none()
        {
            return other.clone();
        }
        let period = self.period;
        let f = self.unroll(0.0, period);
        let g = other.unroll(0.0, period);
        let mut out = Vec::with_capacity(2 * (f.len() + g.len()));
        let mut prev: Option<(f64, f64, f64)> = None;
        merged_walk(&f, &g, |x, fv, gv| {
            if let Some((px, pf, pg)) = prev {
                let d0 = pf - pg;
                let d1 = fv - gv;
                if (d0 > CROSSING_EPS && d1 < -CROSSING_EPS)
                    || (d0 < -CROSSING_EPS && d1 > CROSSING_EPS)
                {
                    let s = d0 / (d0 - d1);
                    // The crossing time is rounded, so on steep segments the
                    // two lines may disagree there by more than an ulp. Take
                    // the lower one to keep the result below both inputs.
                    let t = px + s * (x - px);
                    let at_f = lerp(Point::new(px, pf), Point::new(x, fv), t);
                    let at_g = lerp(Point::new(px, pg), Point::new(x, gv), t);
                    out.push(Point::new(t, at_f.min(at_g)));
                }
            }
            out.push(Point::new(x, if gv < fv { gv } else { fv }));
            prev = Some((x, fv, gv));
        });
        Self::from_unrolled(out, period)
    }

    /// `min(self, other)`, or `None` when `other` never lies below `self`.
    pub(crate) fn merge_min_if_lower(&self, other: &Ttf) -> Option<Ttf> {
        if self.max <= other.min
            || other
                .find_violation(self, Strictness::NonStrict, 0.0)
                .is_none()
        {
            return None;
        }
        Some(self.merge_min_unchecked(other))
    }

    /// Whether `self > other + margin` everywhere.
    pub(crate) fn exceeds(&self, other: &Ttf, margin: f64) -> bool {
        self.find_violation(other, Strictness::Strict, -margin)
            .is_none()
    }

    /// Whether `self > other` (strict) or `self >= other` (non-strict)
    /// everywhere.
    pub fn dominates(&self, other: &Ttf, strictness: Strictness) -> Result<bool, TtfError> {
        self.check_period(other)?;
        Ok(self.find_violation(other, strictness, 0.0).is_none())
    }

    /// A departure time at which `self` fails to dominate `other`, if any.
    pub fn dominance_counterexample(
        &self,
        other: &Ttf,
        strictness: Strictness,
    ) -> Result<Option<f64>, TtfError> {
        self.check_period(other)?;
        Ok(self.find_violation(other, strictness, 0.0))
    }

    /// A departure time at which `self` is below `other` by more than `slack`.
    pub fn undercuts(&self, other: &Ttf, slack: f64) -> Option<f64> {
        self.find_violation(other, Strictness::NonStrict, slack)
    }

    pub(crate) fn dominates_unchecked(&self, other: &Ttf, strictness: Strictness) -> bool {
        self.find_violation(other, strictness, 0.0).is_none()
    }

    /// Scans the merged breakpoints of both functions for a time where
    /// `self + slack` does not dominate `other`. The difference is linear
    /// between merged breakpoints, so the scan is exact.
    fn find_violation(&self, other: &Ttf, strictness: Strictness, slack: f64) -> Option<f64> {
        let fails = |fv: f64, gv: f64| match strictness {
            Strictness::Strict => fv + slack <= gv,
            Strictness::NonStrict => fv + slack < gv,
        };
        match strictness {
            Strictness::Strict if self.min + slack > other.max => return None,
            Strictness::NonStrict if self.min + slack >= other.max => return None,
            _ => {}
        }
        if self.is_constant() && other.is_constant() {
            return fails(self.min, other.min).then_some(0.0);
        }
        let mut found = None;
        merged_walk_periodic(&self.points, &other.points, self.period, |x, fv, gv| {
            if found.is_none() && fails(fv, gv) {
                found = Some(x);
            }
        });
        found
    }

    /// Builds a function from points covering `[0, period]` whose last point
    /// sits at `period` and repeats the first.
    fn from_unrolled(mut points: Vec<Point>, period: f64) -> Ttf {
        debug_assert!(points.len() >= 2);
        points.pop();
        Self::canonical(points, period)
    }

    fn canonical(points: Vec<Point>, period: f64) -> Ttf {
        let mut cleaned: Vec<Point> = Vec::with_capacity(points.len());
        for mut p in points {
            if p.val < 0.0 {
                p.val = 0.0;
            }
            if p.at >= period - TIME_EPS {
                continue;
            }
            match cleaned.last() {
                Some(last) if p.at - last.at < TIME_EPS => {}
                _ => cleaned.push(p),
            }
        }
        if cleaned.is_empty() {
            unreachable!("canonical() called without points in [0, period)");
        }
        if cleaned.len() > 2 {
            let last = cleaned.len() - 1;
            let mut kept = Vec::with_capacity(cleaned.len());
            kept.push(cleaned[0]);
            for i in 1..last {
                if !collinear(*kept.last().unwrap(), cleaned[i], cleaned[i + 1]) {
                    kept.push(cleaned[i]);
                }
            }
            kept.push(cleaned[last]);
            cleaned = kept;
        }
        // wraparound
        while cleaned.len() > 1 {
            let n = cleaned.len();
            let first = cleaned[0];
            let last = cleaned[n - 1];
            let after_last = Point::new(first.at + period, first.val);
            if collinear(cleaned[n - 2], last, after_last)
                || (n == 2 && (last.val - first.val).abs() <= COLLINEAR_EPS)
            {
                cleaned.pop();
                continue;
            }
            let before_first = Point::new(last.at - period, last.val);
            if collinear(before_first, first, cleaned[1]) {
                cleaned.remove(0);
                continue;
            }
            break;
        }
        Self::from_valid(cleaned, period)
    }

    /// Approximates `self` within a relative corridor of width `eps`, keeping
    /// at most `|self|` breakpoints.
    ///
    /// Vertices are placed at breakpoint times of `self`. A greedy sweep keeps
    /// the interval of feasible slopes from the current anchor and starts a
    /// new segment once the interval becomes empty, which runs in linear
    /// time. Results that would break FIFO are repaired or, failing that,
    /// replaced by the exact function.
    pub fn approximate(&self, eps: Epsilon, mode: ApproxMode) -> Ttf {
        let e = eps.value();
        if e == 0.0 {
            return self.clone();
        }
        let corridor = |v: f64| match mode {
            ApproxMode::TwoSided => (v * (1.0 - e), v * (1.0 + e)),
            ApproxMode::Lower => (v * (1.0 - e), v),
            ApproxMode::Upper => (v, v * (1.0 + e)),
        };
        let anchor_value = |v: f64| match mode {
            ApproxMode::TwoSided => v,
            ApproxMode::Lower => v * (1.0 - e / 2.0),
            ApproxMode::Upper => v * (1.0 + e / 2.0),
        };
        let pts = &self.points;
        let n = pts.len();
        if n == 1 {
            return Self::from_valid(
                vec![Point::new(pts[0].at, anchor_value(pts[0].val))],
                self.period,
            );
        }

        let y0 = anchor_value(pts[0].val);
        // position k in 0..=n, where n is the first point shifted by a period
        let time_at = |k: usize| {
            if k == n {
                pts[0].at + self.period
            } else {
                pts[k].at
            }
        };
        let band_at = |k: usize| {
            if k == n {
                (y0, y0)
            } else {
                corridor(pts[k].val)
            }
        };

        let mut out = vec![Point::new(pts[0].at, y0)];
        let mut anchor = (pts[0].at, y0);
        let mut lo_slope = f64::NEG_INFINITY;
        let mut hi_slope = f64::INFINITY;
        let mut k = 1;
        while k <= n {
            let dt = time_at(k) - anchor.0;
            let (lo, hi) = band_at(k);
            let new_lo = lo_slope.max((lo - anchor.1) / dt);
            let new_hi = hi_slope.min((hi - anchor.1) / dt);
            if new_lo <= new_hi {
                lo_slope = new_lo;
                hi_slope = new_hi;
                k += 1;
                continue;
            }
            let end = k - 1;
            let slope = 0.5 * (lo_slope + hi_slope);
            let (lo, hi) = band_at(end);
            let y = (anchor.1 + slope * (time_at(end) - anchor.0)).clamp(lo, hi);
            anchor = (time_at(end), y);
            out.push(Point::new(anchor.0, anchor.1));
            lo_slope = f64::NEG_INFINITY;
            hi_slope = f64::INFINITY;
        }

        if first_fifo_violation(&out, self.period).is_some() {
            repair_fifo(&mut out, self.period);
            let within = pts.iter().all(|p| {
                let (lo, hi) = corridor(p.val);
                let v = eval_points(&out, self.period, p.at);
                v >= lo - COLLINEAR_EPS && v <= hi + COLLINEAR_EPS
            });
            if !within || first_fifo_violation(&out, self.period).is_some() {
                return self.clone();
            }
        }
        Self::canonical(out, self.period)
    }
}

impl PartialEq for Ttf {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period && self.points == other.points
    }
}

impl fmt::Debug for Ttf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ttf")
            .field("period", &self.period)
            .field("points", &self.points)
            .finish()
    }
}

fn reduce(t: f64, period: f64) -> f64 {
    let r = t.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

fn lerp(a: Point, b: Point, t: f64) -> f64 {
    let dt = b.at - a.at;
    if dt <= 0.0 {
        return b.val;
    }
    let frac = ((t - a.at) / dt).clamp(0.0, 1.0);
    a.val + frac * (b.val - a.val)
}

fn collinear(a: Point, b: Point, c: Point) -> bool {
    (b.val - lerp(a, c, b.at)).abs() <= COLLINEAR_EPS
}

fn first_fifo_violation(points: &[Point], period: f64) -> Option<(usize, f64)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    (0..n).find_map(|i| {
        let a = points[i];
        let b = if i + 1 == n {
            Point::new(points[0].at + period, points[0].val)
        } else {
            points[i + 1]
        };
        let dt = b.at - a.at;
        let dv = b.val - a.val;
        (dv < -dt * (1.0 + FIFO_SLOPE_EPS) - FIFO_ABS_EPS).then(|| (i, dv / dt))
    })
}

/// Lifts later points until no segment falls faster than slope -1.
fn repair_fifo(points: &mut [Point], period: f64) {
    let n = points.len();
    for _ in 0..2 {
        for i in 0..n {
            let a = points[i];
            let j = (i + 1) % n;
            let bt = if j == 0 {
                points[0].at + period
            } else {
                points[j].at
            };
            let floor = a.val - (bt - a.at);
            if points[j].val < floor {
                points[j].val = floor;
            }
        }
    }
}

/// Evaluates a raw periodic point sequence (used before it becomes a `Ttf`).
fn eval_points(points: &[Point], period: f64, t: f64) -> f64 {
    let n = points.len();
    if n == 1 {
        return points[0].val;
    }
    let t = reduce(t, period);
    let i = points.partition_point(|p| p.at <= t);
    if i == 0 {
        let last = points[n - 1];
        lerp(Point::new(last.at - period, last.val), points[0], t)
    } else if i == n {
        let first = points[0];
        lerp(points[n - 1], Point::new(first.at + period, first.val), t)
    } else {
        lerp(points[i - 1], points[i], t)
    }
}

/// Calls `visit(x, f(x), g(x))` for every time in the union of breakpoints of
/// two unrolled sequences over the same interval, in increasing order.
fn merged_walk(f: &[Point], g: &[Point], mut visit: impl FnMut(f64, f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < f.len() && j < g.len() {
        let (fa, ga) = (f[i].at, g[j].at);
        if (fa - ga).abs() < TIME_EPS {
            visit(fa, f[i].val, g[j].val);
            i += 1;
            j += 1;
        } else if fa < ga {
            visit(fa, f[i].val, lerp(g[j - 1], g[j], fa));
            i += 1;
        } else {
            visit(ga, lerp(f[i - 1], f[i], ga), g[j].val);
            j += 1;
        }
    }
}

/// Like [`merged_walk`] but over raw periodic breakpoint sequences within
/// `[0, period)`.
fn merged_walk_periodic(
    f: &[Point],
    g: &[Point],
    period: f64,
    mut visit: impl FnMut(f64, f64, f64),
) {
    let (mut i, mut j) = (0, 0);
    while i < f.len() || j < g.len() {
        let fa = f.get(i).map_or(f64::INFINITY, |p| p.at);
        let ga = g.get(j).map_or(f64::INFINITY, |p| p.at);
        if fa == ga {
            visit(fa, f[i].val, g[j].val);
            i += 1;
            j += 1;
        } else if fa < ga {
            visit(fa, f[i].val, eval_points(g, period, fa));
            i += 1;
        } else {
            visit(ga, eval_points(f, period, ga), g[j].val);
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: f64 = DEFAULT_PERIOD;

    fn ttf(points: &[(f64, f64)]) -> Ttf {
        Ttf::new(points.iter().map(|&(a, v)| Point::new(a, v)).collect(), P).unwrap()
    }

    fn pts(f: &Ttf) -> Vec<(f64, f64)> {
        f.points().iter().map(|p| (p.at, p.val)).collect()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(ttf(&[(0.0, 100.0)]).evaluate(5000.0), 100.0);
        let f = ttf(&[(0.0, 100.0), (43200.0, 200.0)]);
        assert_eq!(f.evaluate(21600.0), 150.0);
        assert_eq!(f.evaluate(86400.0 + 21600.0), 150.0);
        assert_eq!(f.evaluate(64800.0), 150.0);
        assert_eq!(f.evaluate(-21600.0), 150.0);
    }

    #[test]
    fn evaluate_before_first_breakpoint_wraps() {
        let f = ttf(&[(3600.0, 100.0), (7200.0, 200.0)]);
        // wrap segment from (7200, 200) to (3600 + P, 100)
        let expected = 200.0 + (100.0 - 200.0) * (P - 7200.0) / (P - 3600.0);
        assert!((f.evaluate(0.0) - expected).abs() < 1e-9);
        assert_eq!(f.evaluate(3600.0), 100.0);
    }

    #[test]
    fn link_examples() {
        let a = ttf(&[(0.0, 600.0)]);
        let b = ttf(&[(0.0, 300.0)]);
        assert_eq!(pts(&a.link(&b).unwrap()), vec![(0.0, 900.0)]);

        let f = ttf(&[(0.0, 100.0), (43200.0, 200.0)]);
        let shifted = f.link(&b).unwrap();
        assert_eq!(pts(&shifted), vec![(0.0, 400.0), (43200.0, 500.0)]);

        let r = f.link(&f).unwrap();
        let expected = 100.0 + 100.0 * (100.0 / 43200.0) + 100.0;
        assert!((r.evaluate(0.0) - expected).abs() < 1e-9);
        assert!((r.evaluate(0.0) - 200.2315).abs() < 1e-4);
    }

    #[test]
    fn merge_min_examples() {
        let f = ttf(&[(0.0, 100.0)]);
        let g = ttf(&[(0.0, 90.0)]);
        assert_eq!(pts(&f.merge_min(&g).unwrap()), vec![(0.0, 90.0)]);

        let f = ttf(&[(0.0, 100.0), (43200.0, 200.0)]);
        assert_eq!(f.merge_min(&f).unwrap(), f);

        let g = ttf(&[(0.0, 150.0)]);
        let m = f.merge_min(&g).unwrap();
        assert_eq!(
            pts(&m),
            vec![(0.0, 100.0), (21600.0, 150.0), (64800.0, 150.0)]
        );
    }

    #[test]
    fn merge_prefers_first_argument_on_ties() {
        let f = ttf(&[(0.0, 100.0), (100.0, 100.0 + 1e-12)]);
        let g = ttf(&[(0.0, 100.0)]);
        assert_eq!(f.merge_min(&g).unwrap(), g);
        assert_eq!(g.merge_min(&g.clone()).unwrap(), g);
    }

    #[test]
    fn period_mismatch_is_an_error() {
        let f = Ttf::constant(1.0, P);
        let g = Ttf::constant(1.0, 3600.0);
        assert!(matches!(f.link(&g), Err(TtfError::PeriodMismatch(..))));
        assert!(matches!(f.merge_min(&g), Err(TtfError::PeriodMismatch(..))));
        assert!(f.dominates(&g, Strictness::Strict).is_err());
    }

    #[test]
    fn extrema_examples() {
        assert_eq!(
            ttf(&[(0.0, 100.0), (43200.0, 200.0)]).extrema(),
            (100.0, 200.0)
        );
        assert_eq!(ttf(&[(0.0, 7.0)]).extrema(), (7.0, 7.0));
        assert_eq!(
            ttf(&[(0.0, 100.0), (100.0, 50.0), (200.0, 100.0)]).extrema(),
            (50.0, 100.0)
        );
    }

    #[test]
    fn dominance_examples() {
        let f = ttf(&[(0.0, 300.0)]);
        let g = ttf(&[(0.0, 200.0)]);
        assert!(f.dominates(&g, Strictness::Strict).unwrap());
        assert!(!f.dominates(&f, Strictness::Strict).unwrap());
        assert!(f.dominates(&f, Strictness::NonStrict).unwrap());

        let f = ttf(&[(0.0, 100.0), (43200.0, 200.0)]);
        let g = ttf(&[(0.0, 150.0)]);
        assert!(!f.dominates(&g, Strictness::Strict).unwrap());
        let x = f
            .dominance_counterexample(&g, Strictness::NonStrict)
            .unwrap()
            .unwrap();
        assert!(f.evaluate(x) < g.evaluate(x));
    }

    #[test]
    fn fifo_examples() {
        assert!(ttf(&[(0.0, 100.0)]).validate_fifo());
        assert!(ttf(&[(0.0, 100.0), (43200.0, 200.0)]).validate_fifo());
        let err = Ttf::new(vec![Point::new(0.0, 1000.0), Point::new(100.0, 500.0)], P).unwrap_err();
        assert!(
            matches!(err, TtfError::NotFifo { index: 0, slope } if (slope + 5.0).abs() < 1e-12)
        );
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(Ttf::new(vec![], P).unwrap_err(), TtfError::Empty);
        assert!(matches!(
            Ttf::new(vec![Point::new(P, 1.0)], P),
            Err(TtfError::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            Ttf::new(vec![Point::new(5.0, 1.0), Point::new(5.0, 2.0)], P),
            Err(TtfError::NotIncreasing { index: 1 })
        ));
        assert!(matches!(
            Ttf::new(vec![Point::new(0.0, -1.0)], P),
            Err(TtfError::BadValue { .. })
        ));
        assert!(Epsilon::new(1.0).is_err());
        assert!(Epsilon::new(-0.1).is_err());
    }

    #[test]
    fn constants_collapse_to_one_point() {
        let f = ttf(&[(0.0, 5.0), (100.0, 5.0), (200.0, 5.0)]);
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn approximate_constant() {
        let f = ttf(&[(0.0, 100.0)]);
        for mode in [ApproxMode::TwoSided, ApproxMode::Lower, ApproxMode::Upper] {
            let a = f.approximate(Epsilon::new(0.1).unwrap(), mode);
            assert_eq!(a.len(), 1);
            let v = a.evaluate(0.0);
            match mode {
                ApproxMode::TwoSided => assert_eq!(v, 100.0),
                ApproxMode::Lower => assert!((90.0..=100.0).contains(&v)),
                ApproxMode::Upper => assert!((100.0..=110.0).contains(&v)),
            }
        }
    }

    #[test]
    fn approximate_sawtooth_collapses() {
        let points: Vec<Point> = (0..20)
            .map(|i| Point::new(i as f64 * 4320.0, if i % 2 == 0 { 1000.0 } else { 1010.0 }))
            .collect();
        let f = Ttf::new(points, P).unwrap();
        let eps = Epsilon::new(0.1).unwrap();
        let a = f.approximate(eps, ApproxMode::TwoSided);
        assert!(a.len() < f.len());
        assert!(a.len() <= 2, "{a:?}");
        for i in 0..1000 {
            let t = i as f64 * P / 1000.0;
            let (v, w) = (f.evaluate(t), a.evaluate(t));
            assert!(w >= 0.9 * v - 1e-9 && w <= 1.1 * v + 1e-9);
        }
    }

    #[test]
    fn approximate_zero_epsilon_is_identity() {
        let f = ttf(&[(0.0, 100.0), (1000.0, 400.0), (50000.0, 120.0)]);
        for mode in [ApproxMode::TwoSided, ApproxMode::Lower, ApproxMode::Upper] {
            let a = f.approximate(Epsilon::ZERO, mode);
            for i in 0..1000 {
                let t = i as f64 * 86.4;
                assert_eq!(a.evaluate(t), f.evaluate(t));
            }
        }
    }

    #[test]
    fn shifted_keeps_breakpoints() {
        let f = ttf(&[(0.0, 100.0), (43200.0, 200.0)]);
        assert_eq!(pts(&f.shifted(300.0)), vec![(0.0, 400.0), (43200.0, 500.0)]);
    }

    #[test]
    fn link_through_steep_descent_keeps_fifo() {
        // first function drops with slope exactly -1
        let f = ttf(&[(0.0, 1000.0), (500.0, 500.0), (40000.0, 500.0)]);
        let g = ttf(&[(0.0, 10.0), (800.0, 50.0), (1200.0, 10.0)]);
        let r = f.link(&g).unwrap();
        assert!(r.validate_fifo());
        for i in 0..2000 {
            let t = i as f64 * 43.2;
            let expected = g.evaluate(t + f.evaluate(t)) + f.evaluate(t);
            assert!((r.evaluate(t) - expected).abs() < 1e-6, "t={t}");
        }
    }
}

//! Lazy snaking: a coordinate that alternates between resting at 0 and
//! tracing a tent, read off at arbitrary real locations.
//!
//! Both the fixed-cap and Lipschitz-cap procedures run on one engine
//! parameterized by rest fraction, tent width fraction, cap function and
//! start time.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::metric::{CapAssignment, Embedding, LineMetric};
use crate::rng::RngSeed;

const SEGMENT_BUDGET: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnakeParams {
    pub rest_fraction: f64,
    pub width_fraction: f64,
    /// The walk starts at `-start_factor * M(first location)`.
    pub start_factor: f64,
}

impl SnakeParams {
    pub const FIXED: SnakeParams =
        SnakeParams { rest_fraction: 0.25, width_fraction: 1.0, start_factor: 0.0 };
    pub const LIPSCHITZ: SnakeParams =
        SnakeParams { rest_fraction: 1.0 / 300.0, width_fraction: 1.0 / 100.0, start_factor: 2.0 };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Rest,
    Snake,
}

/// One piece of the walk. A rest lasts `width`; a snake lasts `2 * width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub kind: SegmentKind,
    pub width: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match self.kind {
            SegmentKind::Rest => self.width,
            SegmentKind::Snake => 2.0 * self.width,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self.kind {
            SegmentKind::Rest => 0.0,
            SegmentKind::Snake => {
                let u = t - self.start;
                u.min(2.0 * self.width - u).max(0.0)
            }
        }
    }
}

/// Lazily generated segment sequence.
pub struct SnakeTrace<R, F> {
    params: SnakeParams,
    cap: F,
    rng: R,
    t: f64,
    count: u64,
}

impl<R: Rng, F: Fn(f64) -> f64> SnakeTrace<R, F> {
    pub fn new(params: SnakeParams, cap: F, rng: R, start: f64) -> Self {
        SnakeTrace { params, cap, rng, t: start, count: 0 }
    }

    pub fn next_segment(&mut self) -> Result<Segment> {
        self.count += 1;
        if self.count > SEGMENT_BUDGET {
            return Err(Error::SegmentBudget);
        }
        let m = (self.cap)(self.t);
        if !(m > 0.0) {
            return invalid(format!("cap {m} at t = {} is not positive", self.t));
        }
        let seg = if self.rng.gen::<bool>() {
            Segment { start: self.t, kind: SegmentKind::Snake, width: self.params.width_fraction * m }
        } else {
            Segment { start: self.t, kind: SegmentKind::Rest, width: self.params.rest_fraction * m }
        };
        self.t = seg.end();
        Ok(seg)
    }
}

/// Segments from the start until one ends past `until`.
pub fn snake_trace<F: Fn(f64) -> f64>(
    params: SnakeParams,
    cap: F,
    start: f64,
    until: f64,
    seed: RngSeed,
) -> Result<Vec<Segment>> {
    let mut tr = SnakeTrace::new(params, cap, seed.rng(), start);
    let mut out = Vec::new();
    loop {
        let s = tr.next_segment()?;
        let done = s.end() > until;
        out.push(s);
        if done {
            return Ok(out);
        }
    }
}

/// Core engine: walk values at each (unsorted) location.
pub fn run_snake<F: Fn(f64) -> f64>(
    locs: &[f64],
    params: SnakeParams,
    cap: F,
    start: f64,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    if locs.iter().any(|x| !x.is_finite() || *x < start) {
        return invalid("snake location before the start of the walk");
    }
    let mut order: Vec<usize> = (0..locs.len()).collect();
    order.sort_by(|&a, &b| locs[a].total_cmp(&locs[b]));
    let mut out = vec![0.0; locs.len()];
    let mut tr = SnakeTrace::new(params, cap, seed.rng(), start);
    let mut next = 0;
    while next < order.len() {
        let seg = tr.next_segment()?;
        let end = seg.end();
        while next < order.len() && locs[order[next]] < end {
            out[order[next]] = seg.value_at(locs[order[next]]);
            next += 1;
        }
    }
    Ok(out)
}

/// Algorithm with a fixed cap `m`: rest `m/4` or a tent of width `m`, from t = 0.
///
/// Locations may be any nonnegative reals in any order.
pub fn lazy_snake_fixed(locs: &[f64], m: f64, seed: RngSeed) -> Result<Vec<f64>> {
    if !(m > 0.0) || !m.is_finite() {
        return invalid(format!("cap must be positive, got {m}"));
    }
    run_snake(locs, SnakeParams::FIXED, |_| m, 0.0, seed)
}

/// Piecewise-linear interpolation of vertex caps along a line, constant
/// outside the vertex range.
pub fn interpolated_cap(locs: &[f64], caps: &[f64], t: f64) -> f64 {
    let n = locs.len();
    if t <= locs[0] {
        return caps[0];
    }
    if t >= locs[n - 1] {
        return caps[n - 1];
    }
    let k = locs.partition_point(|&x| x <= t);
    let (x0, x1) = (locs[k - 1], locs[k]);
    if x1 == x0 {
        return caps[k];
    }
    let w = (t - x0) / (x1 - x0);
    caps[k - 1] + w * (caps[k] - caps[k - 1])
}

/// Lipschitz-cap algorithm with the published constants.
pub fn lazy_snake_lipschitz(line: &LineMetric, caps: &CapAssignment, seed: RngSeed) -> Result<Vec<f64>> {
    lazy_snake_lipschitz_with(line, caps, SnakeParams::LIPSCHITZ, seed)
}

/// Lipschitz-cap engine with explicit constants.
pub fn lazy_snake_lipschitz_with(
    line: &LineMetric,
    caps: &CapAssignment,
    params: SnakeParams,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    let c = caps.caps();
    if c.len() != line.len() {
        return invalid("cap count does not match point count");
    }
    for (index, &cap) in c.iter().enumerate() {
        if !(cap > 0.0) {
            return Err(Error::NonPositiveCap { index, cap });
        }
    }
    // Re-check so unchecked assignments cannot slip through.
    CapAssignment::lipschitz_on_line(c.to_vec(), line)?;
    let locs = line.locs();
    let start = -params.start_factor * c[0];
    run_snake(locs, params, |t| interpolated_cap(locs, c, t), start, seed)
}

/// Concatenate `copies` independent copies, each scaled by `1/copies`.
///
/// Copy `k` receives the stream `seed.derive(k)`.
pub fn boost_average<F>(copies: usize, seed: RngSeed, mut embed: F) -> Result<Embedding>
where
    F: FnMut(RngSeed) -> Result<Embedding>,
{
    if copies == 0 {
        return invalid("boosting needs at least one copy");
    }
    let scale = 1.0 / copies as f64;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for k in 0..copies {
        let e = embed(seed.derive(k as u64))?;
        if k == 0 {
            rows = vec![Vec::with_capacity(e.dim() * copies); e.len()];
        } else if e.len() != rows.len() {
            return invalid("copies disagree on point count");
        }
        for (r, row) in rows.iter_mut().zip(e.rows()) {
            r.extend(row.iter().map(|x| x * scale));
        }
    }
    Embedding::new(rows)
}

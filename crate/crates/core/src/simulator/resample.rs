use std::collections::VecDeque;

use serde::Serialize;

use super::engine::{EventRecord, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub t: f64,
    pub q: u32,
    pub s: u32,
}

/// Emits grid points `k dt` as the path advances. Sample paths are
/// right-continuous, so a grid time equal to an event time sees the new state.
#[derive(Debug, Clone)]
pub(crate) struct GridSampler {
    dt: f64,
    next: u64,
}

impl GridSampler {
    pub(crate) fn new(dt: f64) -> Self {
        Self { dt, next: 0 }
    }

    fn time(&self) -> f64 {
        self.next as f64 * self.dt
    }

    /// Grid points strictly before `t` take `state`.
    pub(crate) fn emit_before(&mut self, t: f64, state: SimState, out: &mut Vec<GridPoint>) {
        while self.time() < t {
            out.push(GridPoint {
                t: self.time(),
                q: state.q,
                s: state.s,
            });
            self.next += 1;
        }
    }

    /// Grid points up to and including `t` take `state`.
    pub(crate) fn emit_through(&mut self, t: f64, state: SimState, out: &mut Vec<GridPoint>) {
        while self.time() <= t {
            out.push(GridPoint {
                t: self.time(),
                q: state.q,
                s: state.s,
            });
            self.next += 1;
        }
    }
}

/// Samples the step path defined by `initial` and `events` at `0, dt, ...` up to `end`.
pub fn resample(initial: SimState, events: &[EventRecord], dt: f64, end: f64) -> Vec<GridPoint> {
    assert!(dt > 0.0, "grid resolution must be positive");
    let mut sampler = GridSampler::new(dt);
    let mut out = Vec::new();
    let mut state = initial;
    for e in events {
        sampler.emit_before(e.t, state, &mut out);
        state = SimState { q: e.q, s: e.s };
    }
    sampler.emit_through(end, state, &mut out);
    out
}

/// Sample moments over a trailing window of grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RollingMoments {
    pub t: f64,
    pub var_q: f64,
    pub var_s: f64,
    pub cov_qs: f64,
}

/// Unbiased sample (co)variances over the last `window` points, one entry per
/// point once the window is full.
pub fn rolling_moments(series: &[GridPoint], window: usize) -> Vec<RollingMoments> {
    assert!(window >= 2, "rolling window needs at least two points");
    let mut buf: VecDeque<(f64, f64)> = VecDeque::with_capacity(window);
    let mut out = Vec::with_capacity(series.len().saturating_sub(window - 1));
    for point in series {
        buf.push_back((f64::from(point.q), f64::from(point.s)));
        if buf.len() > window {
            buf.pop_front();
        }
        if buf.len() == window {
            let n = window as f64;
            let (mq, ms) = buf.iter().fold((0.0, 0.0), |acc, &(q, s)| (acc.0 + q, acc.1 + s));
            let (mq, ms) = (mq / n, ms / n);
            let (mut vq, mut vs, mut cqs) = (0.0, 0.0, 0.0);
            for &(q, s) in &buf {
                vq += (q - mq) * (q - mq);
                vs += (s - ms) * (s - ms);
                cqs += (q - mq) * (s - ms);
            }
            out.push(RollingMoments {
                t: point.t,
                var_q: vq / (n - 1.0),
                var_s: vs / (n - 1.0),
                cov_qs: cqs / (n - 1.0),
            });
        }
    }
    out
}

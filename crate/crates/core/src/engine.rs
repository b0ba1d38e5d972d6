//! Exact event-driven method of steps for `x'(t) = R(x(t - 1))`.
//!
//! The right-hand side only reads the sign of the delayed state, so the
//! solution is affine between consecutive "delayed switch" times `z + 1`,
//! where `z` runs over the sign changes of `x`. The integrator keeps a queue of
//! those sign changes (initial ones first, then the ones it creates) and jumps
//! from event to event; no interpolation or time stepping is involved.

use std::fmt;

use serde::Serialize;

use crate::error::{RelayError, Result};
use crate::relay::Params;
use crate::scalar::{int, one, Scalar};

/// Default number of segments a single run may produce.
pub const DEFAULT_EVENT_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }

    /// Sign of a nonzero value; `None` for zero (within tolerance).
    pub fn of<S: Scalar>(x: &S) -> Option<Self> {
        if x.near_zero() {
            None
        } else if *x > S::zero() {
            Some(Sign::Pos)
        } else {
            Some(Sign::Neg)
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Neg => "neg",
            Sign::Pos => "pos",
        })
    }
}

impl std::str::FromStr for Sign {
    type Err = RelayError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neg" | "-" | "-1" | "negative" => Ok(Sign::Neg),
            "pos" | "+" | "1" | "+1" | "positive" => Ok(Sign::Pos),
            other => Err(RelayError::Parse(format!("expected neg or pos, got {other:?}"))),
        }
    }
}

/// Canonical initial data on the unit window `[-1, 0]`.
///
/// Only the sign pattern and the endpoint value are kept: the relay reads
/// nothing else. `zeros` lists sign changes in increasing order; a trailing
/// `0` is present exactly when `value_at_end == 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState<S> {
    zeros: Vec<S>,
    sign_left: Sign,
    value_at_end: S,
}

impl<S: Scalar> InitialState<S> {
    pub fn new(zeros: Vec<S>, sign_left: Sign, value_at_end: S) -> Result<Self> {
        let bad = |msg: String| Err(RelayError::InvalidInitialState(msg));
        let lo: S = -one::<S>();
        let mut zeros = zeros;
        let mut value_at_end = value_at_end;
        for z in zeros.iter_mut() {
            if z.near_zero() {
                *z = S::zero();
            }
        }
        if value_at_end.near_zero() {
            value_at_end = S::zero();
        }
        for z in &zeros {
            if *z < lo || *z > S::zero() {
                return bad(format!("zero {z} outside [-1, 0]"));
            }
        }
        for w in zeros.windows(2) {
            if w[0] >= w[1] {
                return bad(format!("zeros not strictly increasing at {} >= {}", w[0], w[1]));
            }
        }
        let ends_at_zero = zeros.last().is_some_and(|z| z.is_zero());
        if value_at_end.is_zero() != ends_at_zero {
            return bad(format!(
                "value_at_end = {value_at_end} but trailing zero present = {ends_at_zero}"
            ));
        }
        let state = Self { zeros, sign_left, value_at_end };
        if let Some(sign) = Sign::of(&state.value_at_end) {
            if sign != state.sign_before_end() {
                return bad(format!(
                    "value_at_end = {} contradicts the sign pattern (expected {})",
                    state.value_at_end,
                    state.sign_before_end()
                ));
            }
        }
        Ok(state)
    }

    /// `x < 0` on `[-1, 0)`, `x(0) = 0`: the window of the x0 cycle at an
    /// upward zero.
    pub fn negative_to_zero() -> Self {
        Self { zeros: vec![S::zero()], sign_left: Sign::Neg, value_at_end: S::zero() }
    }

    /// `x > 0` on `[-1, 0)`, `x(0) = 0`: the window of the x0 cycle at its
    /// downward zero.
    pub fn positive_to_zero() -> Self {
        Self { zeros: vec![S::zero()], sign_left: Sign::Pos, value_at_end: S::zero() }
    }

    /// Negative, zero at `-theta`, positive, zero at `-tau`, negative, `x(0) = 0`.
    pub fn two_zero(theta: S, tau: S) -> Result<Self> {
        Self::new(vec![-theta, -tau, S::zero()], Sign::Neg, S::zero())
    }

    pub fn zeros(&self) -> &[S] {
        &self.zeros
    }

    pub fn sign_left(&self) -> Sign {
        self.sign_left
    }

    pub fn value_at_end(&self) -> &S {
        &self.value_at_end
    }

    /// Sign changes strictly inside `(-1, 0)`.
    pub fn interior_zeros(&self) -> impl Iterator<Item = &S> {
        let lo = -one::<S>();
        self.zeros.iter().filter(move |z| **z > lo && **z < S::zero())
    }

    /// Sign on the last open subinterval before `0`.
    pub fn sign_before_end(&self) -> Sign {
        if self.interior_zeros().count().is_multiple_of(2) {
            self.sign_left
        } else {
            self.sign_left.flip()
        }
    }

    /// Equality up to the backend tolerance.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.sign_left == other.sign_left
            && self.value_at_end.near(&other.value_at_end)
            && self.zeros.len() == other.zeros.len()
            && self.zeros.iter().zip(&other.zeros).all(|(x, y)| x.near(y))
    }

    /// Sign changes on `(-1, 0)` as `(time, sign after)` pairs.
    fn sign_changes(&self) -> Vec<SignChange<S>> {
        let mut sign = self.sign_left;
        self.interior_zeros()
            .map(|z| {
                sign = sign.flip();
                SignChange { time: z.clone(), after: sign }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct SignChange<S> {
    time: S,
    after: Sign,
}

/// A transversal zero of the solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Crossing<S> {
    pub time: S,
    pub rising: bool,
}

/// Zeros found on an interval: crossings plus touch points (extrema with
/// value exactly zero, which do not switch the relay).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ZeroSet<S> {
    pub crossings: Vec<S>,
    pub touches: Vec<S>,
}

/// Exact piecewise-affine solution on `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    params: Params<S>,
    history: InitialState<S>,
    times: Vec<S>,
    values: Vec<S>,
    slopes: Vec<S>,
    sign_changes: Vec<SignChange<S>>,
    crossings: Vec<Crossing<S>>,
    touches: Vec<S>,
}

#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub event_cap: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self { event_cap: DEFAULT_EVENT_CAP }
    }
}

pub fn simulate<S: Scalar>(init: &InitialState<S>, p: &Params<S>, horizon: &S) -> Result<Trajectory<S>> {
    simulate_with(init, p, horizon, &SimulateOptions::default())
}

pub fn simulate_with<S: Scalar>(
    init: &InitialState<S>,
    p: &Params<S>,
    horizon: &S,
    opts: &SimulateOptions,
) -> Result<Trajectory<S>> {
    if *horizon <= S::zero() {
        return Err(RelayError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let tol = S::tolerance();
    let unit: S = one();

    let mut sources = init.sign_changes();
    let mut next_source = 0usize;
    let mut delayed = init.sign_left;

    let mut t = S::zero();
    let mut x = init.value_at_end.clone();
    // Sign of x on the open interval just before t.
    let mut current = Sign::of(&x).unwrap_or_else(|| init.sign_before_end());

    let mut times = vec![t.clone()];
    let mut values = vec![x.clone()];
    let mut slopes: Vec<S> = Vec::new();
    let mut crossings = Vec::new();
    let mut touches = Vec::new();

    loop {
        while next_source < sources.len() && sources[next_source].time.clone() + unit.clone() <= t.clone() + tol.clone() {
            delayed = sources[next_source].after;
            next_source += 1;
        }
        let slope = match delayed {
            Sign::Neg => unit.clone(),
            Sign::Pos => p.decay_slope(),
        };
        let heading = if slope > S::zero() { Sign::Pos } else { Sign::Neg };

        if x.is_zero() {
            if heading != current {
                sources.push(SignChange { time: t.clone(), after: heading });
                crossings.push(Crossing { time: t.clone(), rising: heading == Sign::Pos });
                current = heading;
            } else {
                touches.push(t.clone());
            }
        }

        if t >= *horizon {
            break;
        }
        if slopes.len() >= opts.event_cap {
            let log = times
                .iter()
                .zip(&values)
                .rev()
                .take(8)
                .map(|(t, x)| format!("({t}, {x})"))
                .collect();
            return Err(RelayError::EventCap { cap: opts.event_cap, log });
        }

        let mut t_next = horizon.clone();
        if let Some(src) = sources.get(next_source) {
            let sw = src.time.clone() + unit.clone();
            if sw < t_next {
                t_next = sw;
            }
        }

        if !x.is_zero() && Sign::of(&x) != Some(heading) {
            let root = t.clone() - x.clone() / slope.clone();
            if root < t_next.clone() - tol.clone() {
                t_next = root;
            }
        }

        if !S::EXACT && t_next.clone() - t.clone() <= tol {
            t = t_next;
            continue;
        }

        x = x + slope.clone() * (t_next.clone() - t.clone());
        if x.near_zero() {
            x = S::zero();
        }
        t = t_next;
        times.push(t.clone());
        values.push(x.clone());
        slopes.push(slope);
    }

    Ok(Trajectory {
        params: p.clone(),
        history: init.clone(),
        times,
        values,
        slopes,
        sign_changes: sources,
        crossings,
        touches,
    })
}

impl<S: Scalar> Trajectory<S> {
    pub fn params(&self) -> &Params<S> {
        &self.params
    }

    pub fn history(&self) -> &InitialState<S> {
        &self.history
    }

    pub fn start_time(&self) -> &S {
        &self.times[0]
    }

    pub fn end_time(&self) -> &S {
        self.times.last().expect("trajectory has at least one point")
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.times
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn slopes(&self) -> &[S] {
        &self.slopes
    }

    /// Crossings on `[0, horizon]` in time order.
    pub fn crossings(&self) -> &[Crossing<S>] {
        &self.crossings
    }

    pub fn touches(&self) -> &[S] {
        &self.touches
    }

    pub fn segment_count(&self) -> usize {
        self.slopes.len()
    }

    fn check_range(&self, t: &S) -> Result<()> {
        let tol = S::tolerance();
        if *t < self.start_time().clone() - tol.clone() || *t > self.end_time().clone() + tol {
            return Err(RelayError::OutOfRange(format!(
                "{t} not in [{}, {}]",
                self.start_time(),
                self.end_time()
            )));
        }
        Ok(())
    }

    /// Index of the segment containing `t` (the last one for `t = end`).
    fn segment_index(&self, t: &S) -> usize {
        let i = self.times.partition_point(|b| b <= t);
        i.saturating_sub(1).min(self.slopes.len().saturating_sub(1))
    }

    pub fn eval(&self, t: &S) -> Result<S> {
        self.check_range(t)?;
        if self.slopes.is_empty() {
            return Ok(self.values[0].clone());
        }
        let i = self.segment_index(t);
        Ok(self.values[i].clone() + self.slopes[i].clone() * (t.clone() - self.times[i].clone()))
    }

    /// Slope on the open segment to the right of `t`.
    pub fn slope_at(&self, t: &S) -> Result<S> {
        self.check_range(t)?;
        Ok(self.slopes[self.segment_index(t)].clone())
    }

    /// Sign of `x` just to the right of `u`, for any `u >= -1` in the covered
    /// history.
    pub fn sign_after(&self, u: &S) -> Sign {
        let tol = S::tolerance();
        let k = self.sign_changes.partition_point(|c| c.time <= u.clone() + tol.clone());
        if k == 0 {
            self.history.sign_left
        } else {
            self.sign_changes[k - 1].after
        }
    }

    /// Crossings and touch points in the closed interval `[from, to]`.
    pub fn zeros_of(&self, from: &S, to: &S) -> Result<ZeroSet<S>> {
        self.check_range(from)?;
        self.check_range(to)?;
        let tol = S::tolerance();
        let inside = |t: &S| *t >= from.clone() - tol.clone() && *t <= to.clone() + tol.clone();
        Ok(ZeroSet {
            crossings: self.crossings.iter().filter(|c| inside(&c.time)).map(|c| c.time.clone()).collect(),
            touches: self.touches.iter().filter(|t| inside(t)).cloned().collect(),
        })
    }

    /// Canonical state on the window `[t - 1, t]`, shifted to `[-1, 0]`.
    ///
    /// Windows reaching into the initial interval read its sign pattern, so
    /// any `t` in `[0, horizon]` is accepted.
    pub fn window_state(&self, t: &S) -> Result<InitialState<S>> {
        self.check_range(t)?;
        let tol = S::tolerance();
        let left = t.clone() - one::<S>();
        let mut value = self.eval(t)?;
        let mut ends_at_crossing = false;
        let mut zeros = Vec::new();
        for c in &self.sign_changes {
            if c.time <= left.clone() + tol.clone() {
                continue;
            }
            if c.time >= t.clone() - tol.clone() {
                if c.time.near(t) {
                    ends_at_crossing = true;
                }
                break;
            }
            zeros.push(c.time.clone() - t.clone());
        }
        if ends_at_crossing || value.near_zero() {
            value = S::zero();
            zeros.push(S::zero());
        }
        InitialState::new(zeros, self.sign_after(&left), value)
    }

    /// Smallest period of the eventual regime, searched from `t_from` on.
    ///
    /// Returns `(period, phase)` where `phase` is an upward zero of the
    /// periodic regime reduced modulo the period.
    pub fn detect_period(&self, t_from: &S) -> Option<(S, S)> {
        let from = S::max_of(t_from.clone(), self.start_time().clone());
        let anchors: Vec<&S> = self
            .crossings
            .iter()
            .filter(|c| c.rising && c.time >= from)
            .map(|c| &c.time)
            .collect();
        for (i, anchor) in anchors.iter().enumerate() {
            let state = self.window_state(anchor).ok()?;
            for later in &anchors[i + 1..] {
                let other = self.window_state(later).ok()?;
                if !state.approx_eq(&other) {
                    continue;
                }
                let period = (*later).clone() - (*anchor).clone();
                if self.repeats_with(anchor, &period) {
                    let phase = (*anchor).clone() - ((*anchor).clone() / period.clone()).floor() * period.clone();
                    return Some((period, phase));
                }
            }
        }
        None
    }

    /// `x(b + period) == x(b)` at every breakpoint in `[from, end - period]`
    /// and `x(b - period) == x(b)` at every breakpoint in `[from + period, end]`.
    fn repeats_with(&self, from: &S, period: &S) -> bool {
        let end = self.end_time().clone();
        let tol_match = |u: &S, v: &S| (u.clone() - v.clone()).abs() <= S::tolerance() * int(1000);
        self.times.iter().all(|b| {
            if *b < *from {
                return true;
            }
            let fwd = b.clone() + period.clone();
            if fwd <= end {
                let (Ok(u), Ok(v)) = (self.eval(b), self.eval(&fwd)) else { return false };
                if !tol_match(&u, &v) {
                    return false;
                }
            }
            let back = b.clone() - period.clone();
            if back >= *from {
                let (Ok(u), Ok(v)) = (self.eval(b), self.eval(&back)) else { return false };
                if !tol_match(&u, &v) {
                    return false;
                }
            }
            true
        })
    }

    /// `(t, x)` pairs at every breakpoint.
    pub fn points(&self) -> impl Iterator<Item = (&S, &S)> {
        self.times.iter().zip(&self.values)
    }
}

/// Reduces a sampled continuous piecewise-linear function on a unit window to
/// its canonical state.
pub fn canonicalize<S: Scalar>(samples: &[(S, S)]) -> Result<InitialState<S>> {
    let bad = |msg: &str| Err(RelayError::InvalidInitialState(msg.to_string()));
    if samples.len() < 2 {
        return bad("need at least two samples");
    }
    for w in samples.windows(2) {
        if w[0].0 >= w[1].0 {
            return bad("sample times must be strictly increasing");
        }
    }
    let (t_first, t_last) = (&samples[0].0, &samples[samples.len() - 1].0);
    if !(t_last.clone() - t_first.clone()).near(&one()) {
        return bad("samples must span exactly a unit interval");
    }
    let sign: Vec<Option<Sign>> = samples.iter().map(|(_, v)| Sign::of(v)).collect();
    if sign.windows(2).any(|w| w[0].is_none() && w[1].is_none()) {
        return bad("function vanishes on a subinterval; sign pattern undefined");
    }
    let sign_left = sign[0].or(sign[1]).expect("checked: no two consecutive zeros");

    let n = samples.len();
    let mut zeros = Vec::new();
    let mut prev = sign_left;
    for i in 1..n {
        let (t0, v0) = &samples[i - 1];
        let (t1, v1) = &samples[i];
        match (sign[i - 1], sign[i]) {
            (Some(s0), Some(s1)) if s0 != s1 => {
                let root = t0.clone() - v0.clone() * (t1.clone() - t0.clone()) / (v1.clone() - v0.clone());
                zeros.push(root - t_last.clone());
                prev = s1;
            }
            (_, None) if i + 1 < n => {
                let next = sign[i + 1].expect("checked: no two consecutive zeros");
                if next != prev {
                    zeros.push(t1.clone() - t_last.clone());
                    prev = next;
                }
            }
            (_, Some(s1)) => prev = s1,
            (_, None) => {}
        }
    }
    let value = samples[n - 1].1.clone();
    if sign[n - 1].is_none() {
        zeros.push(S::zero());
    }
    InitialState::new(zeros, sign_left, value)
}

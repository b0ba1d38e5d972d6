//! Closed-form cycles, the two-dimensional return map on zero pairs, and
//! classification of initial data with at most two interior zeros.
//!
//! Two periodic regimes exist. The long cycle `x0` has period
//! `T0 = (a+1)^2 / a` and attracts every solution that leaves the two-zero
//! class. The short cycle `y0` has period `theta* < 1` and is reached only from
//! the zero pattern `(-theta*, -tau*, 0)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{simulate, InitialState, Sign, Trajectory};
use crate::error::{RelayError, Result};
use crate::relay::Params;
use crate::scalar::{int, one, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitConstants<S> {
    /// Downward zero of `x0`, `(a+1)/a`.
    pub t0: S,
    /// Period of `x0`, `(a+1)^2/a`.
    pub period: S,
    pub theta_star: S,
    pub tau_star: S,
}

pub fn constants<S: Scalar>(p: &Params<S>) -> OrbitConstants<S> {
    let a = p.a().clone();
    let a1 = a.clone() + one();
    let denom = a.clone() * a.clone() + int::<S>(3) * a.clone() + one();
    OrbitConstants {
        t0: a1.clone() / a.clone(),
        period: a1.clone() * a1.clone() / a.clone(),
        theta_star: a1.clone() * a1.clone() / denom.clone(),
        tau_star: a * a1 / denom,
    }
}

fn reduce<S: Scalar>(t: &S, period: &S) -> S {
    t.clone() - (t.clone() / period.clone()).floor() * period.clone()
}

/// The long cycle: `t` on `[0, 1]`, `-a(t - t0)` on `[1, t0 + 1]`, `t - T0`
/// on `[t0 + 1, T0]`, extended periodically.
pub fn x0_eval<S: Scalar>(t: &S, p: &Params<S>) -> S {
    let c = constants(p);
    let s = reduce(t, &c.period);
    if s <= one() {
        s
    } else if s <= c.t0.clone() + one() {
        -p.a().clone() * (s - c.t0)
    } else {
        s - c.period
    }
}

/// Slope of `x0` just to the right of `t`.
fn x0_slope<S: Scalar>(t: &S, p: &Params<S>) -> S {
    let c = constants(p);
    let s = reduce(t, &c.period);
    if s >= one() && s < c.t0 + one() {
        p.decay_slope()
    } else {
        one()
    }
}

/// The short cycle, period `theta*`.
pub fn y0_eval<S: Scalar>(t: &S, p: &Params<S>) -> S {
    let c = constants(p);
    let s = reduce(t, &c.theta_star);
    let up_end = one::<S>() - c.theta_star.clone();
    if s <= up_end {
        s
    } else if s <= one::<S>() - c.tau_star.clone() {
        -p.a().clone() * (s - up_end * c.t0)
    } else {
        s - c.theta_star
    }
}

/// Window of `y0` at its upward zero: `(-theta*, -tau*, 0)`.
pub fn y0_state<S: Scalar>(p: &Params<S>) -> InitialState<S> {
    let c = constants(p);
    InitialState::two_zero(c.theta_star, c.tau_star).expect("0 < tau* < theta* < 1")
}

/// Positions `-theta`, `-tau` of the two interior zeros of a window with
/// `x(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoincarePair<S> {
    pub theta: S,
    pub tau: S,
}

impl<S: Scalar> PoincarePair<S> {
    pub fn new(theta: S, tau: S) -> Result<Self> {
        let pair = Self { theta, tau };
        if !pair.in_domain() {
            return Err(RelayError::InvalidParameter(format!(
                "pair ({}, {}) violates 0 < tau < theta < 1",
                pair.theta, pair.tau
            )));
        }
        Ok(pair)
    }

    /// `0 < tau < theta < 1`.
    pub fn in_domain(&self) -> bool {
        S::zero() < self.tau && self.tau < self.theta && self.theta < one()
    }

    pub fn fixed(p: &Params<S>) -> Self {
        let c = constants(p);
        Self { theta: c.theta_star, tau: c.tau_star }
    }

    pub fn initial_state(&self) -> Result<InitialState<S>> {
        InitialState::two_zero(self.theta.clone(), self.tau.clone())
    }

    /// Reads the pair back from a window `(-theta, -tau, 0)` starting negative.
    pub fn from_state(state: &InitialState<S>) -> Option<Self> {
        match (state.sign_left(), state.zeros()) {
            (Sign::Neg, [z1, z2, z3]) if z3.is_zero() && state.value_at_end().is_zero() => {
                let pair = Self { theta: -z1.clone(), tau: -z2.clone() };
                pair.in_domain().then_some(pair)
            }
            _ => None,
        }
    }
}

/// `(a tau + 1)/(a + 1) < theta < ((a + 1) tau + 1)/(a + 1)`: the solution is
/// negative at `1 - tau` and positive at `1`, so it returns to the two-zero
/// class.
pub fn admissible<S: Scalar>(pair: &PoincarePair<S>, p: &Params<S>) -> bool {
    let a = p.a().clone();
    let a1 = a.clone() + one();
    let lower = (a * pair.tau.clone() + one()) / a1.clone();
    let upper = (a1.clone() * pair.tau.clone() + one()) / a1;
    lower < pair.theta && pair.theta < upper
}

/// Roots `t1 = (1 - theta) t0` and `t2 = (a + 1)(theta - tau)` of the solution
/// on `[0, 1]`.
pub fn return_roots<S: Scalar>(pair: &PoincarePair<S>, p: &Params<S>) -> (S, S) {
    let c = constants(p);
    let t1 = (one::<S>() - pair.theta.clone()) * c.t0;
    let t2 = (p.a().clone() + one()) * (pair.theta.clone() - pair.tau.clone());
    (t1, t2)
}

fn phi_unchecked<S: Scalar>(pair: &PoincarePair<S>, p: &Params<S>) -> PoincarePair<S> {
    let (t1, t2) = return_roots(pair, p);
    PoincarePair { theta: t2.clone(), tau: t2 - t1 }
}

/// Return map `(theta, tau) -> (t2, t2 - t1)`.
pub fn phi_map<S: Scalar>(pair: &PoincarePair<S>, p: &Params<S>) -> Result<PoincarePair<S>> {
    if !admissible(pair, p) {
        return Err(RelayError::ClassExit(format!(
            "pair ({}, {}) is not admissible; the solution leaves the two-zero class",
            pair.theta, pair.tau
        )));
    }
    let next = phi_unchecked(pair, p);
    if !next.in_domain() {
        return Err(RelayError::ClassExit(format!(
            "image ({}, {}) leaves 0 < tau < theta < 1",
            next.theta, next.tau
        )));
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum IterateExit {
    /// All requested iterates were formed.
    Completed,
    /// The pair with this index is not admissible, so the next one does not
    /// exist.
    Inadmissible { index: usize },
    /// The pair with this index fell outside `0 < tau < theta < 1`.
    LeftDomain { index: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateTrace<S> {
    /// Index 0 is the starting pair.
    pub pairs: Vec<PoincarePair<S>>,
    pub exit: IterateExit,
}

impl<S: Scalar> IterateTrace<S> {
    /// `Phi^1, Phi^2, ...` without the starting pair.
    pub fn iterates(&self) -> &[PoincarePair<S>] {
        &self.pairs[1..]
    }

    /// Index of the first iterate that could not be formed or was rejected.
    pub fn stopped_at(&self) -> Option<usize> {
        match self.exit {
            IterateExit::Completed => None,
            IterateExit::Inadmissible { index } => Some(index + 1),
            IterateExit::LeftDomain { index } => Some(index),
        }
    }

    pub fn is_admissible(&self, k: usize, p: &Params<S>) -> bool {
        self.pairs.get(k).is_some_and(|pair| pair.in_domain() && admissible(pair, p))
    }
}

/// Gated iteration: stops at `n` or at the first pair that is not admissible.
pub fn phi_iterate<S: Scalar>(pair: &PoincarePair<S>, p: &Params<S>, n: usize) -> IterateTrace<S> {
    let mut pairs = vec![pair.clone()];
    let mut exit = IterateExit::Completed;
    for k in 1..=n {
        let prev = &pairs[k - 1];
        if !admissible(prev, p) {
            exit = IterateExit::Inadmissible { index: k - 1 };
            break;
        }
        let next = phi_unchecked(prev, p);
        let ok = next.in_domain();
        pairs.push(next);
        if !ok {
            exit = IterateExit::LeftDomain { index: k };
            break;
        }
    }
    IterateTrace { pairs, exit }
}

/// Closed-form `Phi^n`, valid as a formula for every `n` (no gating).
///
/// With `d = (theta - theta*, tau - tau*)` and `M = [[1, -1], [t0, -1]]`:
/// `Phi^(2k+1) = (-1)^k T0^k (a+1) M d + fixed`, `Phi^(2k) = (-1)^k T0^k d + fixed`.
pub fn phi_closed_form<S: Scalar>(pair: &PoincarePair<S>, p: &Params<S>, n: usize) -> PoincarePair<S> {
    let c = constants(p);
    let k = n / 2;
    let mut scale: S = num::pow(c.period.clone(), k);
    if k % 2 == 1 {
        scale = -scale;
    }
    let dt = pair.theta.clone() - c.theta_star.clone();
    let ds = pair.tau.clone() - c.tau_star.clone();
    let (u, v) = if n % 2 == 1 {
        let a1 = p.a().clone() + one();
        (a1.clone() * (dt.clone() - ds.clone()), a1 * (c.t0 * dt - ds))
    } else {
        (dt, ds)
    };
    PoincarePair { theta: scale.clone() * u + c.theta_star, tau: scale * v + c.tau_star }
}

/// Grid scan over `theta = i/n`, `tau = j/n`: admissible pairs that survive
/// `iterations` gated applications of the return map.
///
/// Each pair is first iterated in `f64` with a running error bound; the exact
/// iteration only runs when some admissibility test falls inside that bound.
pub fn scan_surviving_pairs<S: Scalar>(p: &Params<S>, resolution: u32, iterations: usize) -> Vec<PoincarePair<S>> {
    let n = resolution as i64;
    let filter = FloatFilter::new(p);
    let mut survivors: Vec<PoincarePair<S>> = (2..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let filter = &filter;
            (1..i).filter_map(move |j| {
                let survives = filter.survives(i as f64 / n as f64, j as f64 / n as f64, iterations);
                let pair = PoincarePair { theta: S::from_ratio(i, n), tau: S::from_ratio(j, n) };
                let survives = survives.unwrap_or_else(|| {
                    admissible(&pair, p) && phi_iterate(&pair, p, iterations).exit == IterateExit::Completed
                });
                survives.then_some(pair)
            })
        })
        .collect();
    survivors.sort_by(|x, y| x.theta.partial_cmp(&y.theta).unwrap().then(x.tau.partial_cmp(&y.tau).unwrap()));
    survivors
}

/// Gated iteration in `f64` with a forward error bound.
struct FloatFilter {
    a: f64,
    a1: f64,
    t0: f64,
    /// Lipschitz constant of the map in the max norm.
    gain: f64,
    /// Rounding added per step.
    step_error: f64,
}

impl FloatFilter {
    fn new<S: Scalar>(p: &Params<S>) -> Self {
        let a = p.a().to_f64();
        let a1 = a + 1.0;
        let t0 = a1 / a;
        let eps = f64::EPSILON;
        Self { a, a1, t0, gain: a1 * (t0 + 1.0), step_error: 16.0 * eps * (a1 * (t0 + 2.0) + t0 + 1.0) }
    }

    /// `Some(outcome)` when every decision clears the error bound, `None`
    /// when the exact iteration has to decide.
    fn survives(&self, theta: f64, tau: f64, iterations: usize) -> Option<bool> {
        let eps = f64::EPSILON;
        let (mut theta, mut tau, mut err) = (theta, tau, 2.0 * eps);
        let certain = |slack: f64, err: f64| slack.abs() > (2.0 * self.a1 * err + 16.0 * eps * (2.0 * self.a + 3.0));
        for k in 0..=iterations {
            if k > 0 {
                for slack in [tau, theta - tau, 1.0 - theta] {
                    if !certain(slack, err) {
                        return None;
                    }
                    if slack < 0.0 {
                        return Some(false);
                    }
                }
            }
            if k == iterations {
                break;
            }
            let lower = self.a1 * theta - self.a * tau - 1.0;
            let upper = self.a1 * tau + 1.0 - self.a1 * theta;
            for slack in [lower, upper] {
                if !certain(slack, err) {
                    return None;
                }
                if slack < 0.0 {
                    return Some(false);
                }
            }
            let t1 = (1.0 - theta) * self.t0;
            let t2 = self.a1 * (theta - tau);
            (theta, tau) = (t2, t2 - t1);
            err = self.gain * err + self.step_error;
        }
        Some(true)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassKind<S> {
    /// Coincides with `x0(t - shift)` for `t >= settle_time`.
    PeriodicX0 { shift: S, settle_time: S },
    PeriodicY0,
    /// Left the two-zero class at this iterate of the return map but did not
    /// reach the `x0` window within the horizon.
    ExitsClass { at_iterate: usize },
}

#[derive(Clone, Debug)]
pub struct Classification<S> {
    pub kind: ClassKind<S>,
    /// Simulated witness on `[0, horizon]`.
    pub trajectory: Trajectory<S>,
    /// Return-map trace when the initial window has the form `(-theta, -tau, 0)`.
    pub trace: Option<IterateTrace<S>>,
    /// Times at which the trajectory hits the window of each traced pair.
    pub section_times: Vec<S>,
    /// The simulated windows at the section times match the traced pairs and
    /// the settle time is compatible with the exit index.
    pub theory_consistent: bool,
}

/// Iterations traced by [`classify`]; far more than any non-fixed pair needs.
const CLASSIFY_TRACE_LEN: usize = 64;

pub fn classify<S: Scalar>(init: &InitialState<S>, p: &Params<S>, horizon: &S) -> Result<Classification<S>> {
    let interior = init.interior_zeros().count();
    if interior > 2 {
        return Err(RelayError::UnsupportedClass(interior));
    }
    let trajectory = simulate(init, p, horizon)?;
    let trace = PoincarePair::from_state(init).map(|pair| phi_iterate(&pair, p, CLASSIFY_TRACE_LEN));

    let mut section_times = Vec::new();
    let mut consistent = true;
    if let Some(trace) = &trace {
        let mut t = S::zero();
        for pair in trace.iterates() {
            t = t + pair.theta.clone();
            if t > *horizon {
                break;
            }
            let w = trajectory.window_state(&t)?;
            consistent &= pair.initial_state().is_ok_and(|s| s.approx_eq(&w));
            section_times.push(t.clone());
        }
    }

    let kind = if init.approx_eq(&y0_state(p)) {
        ClassKind::PeriodicY0
    } else if let Some((settle_time, shift)) = x0_entry(&trajectory, p)? {
        if let Some(last) = section_times.last() {
            consistent &= settle_time > last.clone() - one();
        }
        ClassKind::PeriodicX0 { shift, settle_time }
    } else if let Some(at) = trace.as_ref().and_then(|t| t.stopped_at()) {
        ClassKind::ExitsClass { at_iterate: at }
    } else {
        return Err(RelayError::Inconclusive(format!(
            "no x0 window reached by t = {horizon}; rerun with a longer horizon"
        )));
    };

    Ok(Classification { kind, trajectory, trace, section_times, theory_consistent: consistent })
}

/// Earliest zero crossing whose window is a window of `x0` at one of its
/// zeros, with the corresponding shift (the next upward zero).
fn x0_entry<S: Scalar>(traj: &Trajectory<S>, p: &Params<S>) -> Result<Option<(S, S)>> {
    let up = InitialState::negative_to_zero();
    let down = InitialState::positive_to_zero();
    for c in traj.crossings() {
        let w = traj.window_state(&c.time)?;
        let shift = if w.approx_eq(&up) {
            c.time.clone()
        } else if w.approx_eq(&down) {
            c.time.clone() + p.a().clone() + one()
        } else {
            continue;
        };
        verify_x0_tail(traj, p, &c.time, &shift)?;
        return Ok(Some((c.time.clone(), shift)));
    }
    Ok(None)
}

fn verify_x0_tail<S: Scalar>(traj: &Trajectory<S>, p: &Params<S>, settle: &S, shift: &S) -> Result<()> {
    let tol = if S::EXACT { S::zero() } else { S::from_ratio(1, 1_000_000_000) };
    let times = traj.breakpoints();
    for (i, (t, x)) in traj.points().enumerate() {
        if t < settle {
            continue;
        }
        let expect = x0_eval(&(t.clone() - shift.clone()), p);
        let slope_ok = match (times.get(i + 1), traj.slopes().get(i)) {
            (Some(next), Some(slope)) => {
                let mid = (t.clone() + next.clone()) / int(2);
                *slope == x0_slope(&(mid - shift.clone()), p)
            }
            _ => true,
        };
        if (x.clone() - expect.clone()).abs() > tol || !slope_ok {
            return Err(RelayError::Inconclusive(format!(
                "trajectory leaves x0(t - {shift}) at t = {t}: {x} vs {expect}"
            )));
        }
    }
    Ok(())
}

/// Which side of the single interior zero `-tau` is negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OneZeroCase {
    /// Negative on `[-1, -tau)`, positive on `(-tau, 0]`, `x(0) = d`.
    NegThenPos,
    /// Positive on `[-1, -tau)`, negative on `(-tau, 0]`, `x(0) = -d`.
    PosThenNeg,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settling<S> {
    pub settle_time: S,
    pub shift: S,
}

pub fn one_zero_state<S: Scalar>(tau: &S, d: &S, case: OneZeroCase) -> Result<InitialState<S>> {
    let mut zeros = vec![-tau.clone()];
    if d.is_zero() {
        zeros.push(S::zero());
    }
    match case {
        OneZeroCase::NegThenPos => InitialState::new(zeros, Sign::Neg, d.clone()),
        OneZeroCase::PosThenNeg => InitialState::new(zeros, Sign::Pos, -d.clone()),
    }
}

/// Settle time and shift for one interior zero.
///
/// Negative then positive: the solution rises until `1 - tau`, then falls with
/// slope `-a` to its first zero at `(1 - tau) t0 + d/a`, which is the
/// downward zero of `x0`; the shift adds `a + 1`. Positive then negative: it
/// falls with slope `-a` until `1 - tau` and rises with slope 1 to its first
/// zero at `(a + 1)(1 - tau) + d`, an upward zero of `x0`.
pub fn predict_one_zero_settling<S: Scalar>(tau: &S, d: &S, case: OneZeroCase, p: &Params<S>) -> Result<Settling<S>> {
    if !(S::zero() < *tau && *tau < one()) || *d < S::zero() {
        return Err(RelayError::InvalidParameter(format!("need 0 < tau < 1 and d >= 0, got tau = {tau}, d = {d}")));
    }
    let a = p.a().clone();
    let rest = one::<S>() - tau.clone();
    Ok(match case {
        OneZeroCase::NegThenPos => {
            let settle = rest * constants(p).t0 + d.clone() / a.clone();
            Settling { shift: settle.clone() + a + one(), settle_time: settle }
        }
        OneZeroCase::PosThenNeg => {
            let settle = (a + one()) * rest + d.clone();
            Settling { settle_time: settle.clone(), shift: settle }
        }
    })
}

/// Settle time and shift for a sign-constant window with `|x(0)| = d`.
pub fn predict_constant_sign_settling<S: Scalar>(sign: Sign, d: &S, p: &Params<S>) -> Result<Settling<S>> {
    if *d < S::zero() {
        return Err(RelayError::InvalidParameter(format!("d must be nonnegative, got {d}")));
    }
    Ok(match sign {
        Sign::Neg => Settling { settle_time: d.clone(), shift: d.clone() },
        Sign::Pos => {
            let settle = d.clone() / p.a().clone();
            Settling { shift: settle.clone() + p.a().clone() + one(), settle_time: settle }
        }
    })
}

pub fn constant_sign_state<S: Scalar>(sign: Sign, d: &S) -> Result<InitialState<S>> {
    let zeros = if d.is_zero() { vec![S::zero()] } else { vec![] };
    let value = match sign {
        Sign::Neg => -d.clone(),
        Sign::Pos => d.clone(),
    };
    InitialState::new(zeros, sign, value)
}

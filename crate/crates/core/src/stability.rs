//! Monodromy of the short cycle `y0`.
//!
//! A perturbation that keeps the two-zero pattern is described by three
//! numbers: the value deviation `gamma0` at the window end and the shifts
//! `xi_theta`, `xi_tau` of the two interior zeros. One period of the relay
//! dynamics acts on them by the exact linear map
//!
//! ```text
//!       [ 1    a+1  -(a+1) ]
//! M3 =  [ -1   0     0     ]
//!       [ 1/a  t0    0     ]
//! ```
//!
//! whose eigenvalues are `1` and `+-i sqrt(T0)`. Since `sqrt(T0) >= 2`, the
//! cycle is unstable.
//!
//! The window sits at `[-1 - sigma, -sigma]` so that its right end lies on the
//! rising branch of `y0`, away from the zero at `0`.

use nalgebra::Matrix3;
use num::complex::Complex64;

use crate::engine::{simulate, InitialState, Sign, Trajectory};
use crate::error::{RelayError, Result};
use crate::orbit::{classify, constants, y0_eval, ClassKind};
use crate::relay::Params;
use crate::scalar::{int, one, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationVector<S> {
    pub gamma0: S,
    pub xi_theta: S,
    pub xi_tau: S,
}

impl<S: Scalar> PerturbationVector<S> {
    pub fn new(gamma0: S, xi_theta: S, xi_tau: S) -> Self {
        Self { gamma0, xi_theta, xi_tau }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    pub fn max_abs(&self) -> S {
        S::max_of(S::max_of(self.gamma0.abs(), self.xi_theta.abs()), self.xi_tau.abs())
    }

    pub fn scale(&self, k: &S) -> Self {
        Self::new(self.gamma0.clone() * k.clone(), self.xi_theta.clone() * k.clone(), self.xi_tau.clone() * k.clone())
    }

    fn components(&self) -> [S; 3] {
        [self.gamma0.clone(), self.xi_theta.clone(), self.xi_tau.clone()]
    }

    fn from_components([g, x, y]: [S; 3]) -> Self {
        Self::new(g, x, y)
    }

    fn norm_sq(&self) -> S {
        self.components().into_iter().fold(S::zero(), |acc, v| acc + v.clone() * v)
    }

    fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.gamma0.clone() - other.gamma0.clone(),
            self.xi_theta.clone() - other.xi_theta.clone(),
            self.xi_tau.clone() - other.xi_tau.clone(),
        )
    }

    fn add(&self, other: &Self) -> Self {
        Self::new(
            self.gamma0.clone() + other.gamma0.clone(),
            self.xi_theta.clone() + other.xi_theta.clone(),
            self.xi_tau.clone() + other.xi_tau.clone(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonodromyMatrix<S> {
    pub entries: [[S; 3]; 3],
}

impl<S: Scalar> MonodromyMatrix<S> {
    pub fn apply(&self, v: &PerturbationVector<S>) -> PerturbationVector<S> {
        let x = v.components();
        PerturbationVector::from_components(std::array::from_fn(|i| {
            (0..3).fold(S::zero(), |acc, j| acc + self.entries[i][j].clone() * x[j].clone())
        }))
    }

    /// Coefficients `[c3, c2, c1, c0]` of `det(M - mu I)`, computed from the
    /// trace, the principal 2x2 minors and the determinant.
    pub fn characteristic_polynomial(&self) -> [S; 4] {
        let m = &self.entries;
        let e = |i: usize, j: usize| m[i][j].clone();
        let trace = e(0, 0) + e(1, 1) + e(2, 2);
        let minor = |i: usize, j: usize| e(i, i) * e(j, j) - e(i, j) * e(j, i);
        let minors = minor(0, 1) + minor(0, 2) + minor(1, 2);
        let det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
            - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
        [-one::<S>(), trace, -minors, det]
    }

    pub fn to_f64(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i][j].to_f64())
    }
}

pub fn monodromy_matrix<S: Scalar>(p: &Params<S>) -> MonodromyMatrix<S> {
    let a = p.a().clone();
    let a1 = a.clone() + one();
    let t0 = constants(p).t0;
    MonodromyMatrix {
        entries: [
            [one(), a1.clone(), -a1],
            [-one::<S>(), S::zero(), S::zero()],
            [one::<S>() / a, t0, S::zero()],
        ],
    }
}

#[derive(Clone, Debug)]
pub struct Multipliers {
    /// `1, +i sqrt(T0), -i sqrt(T0)` from the characteristic equation
    /// `(mu - 1)(mu^2 + T0) = 0`.
    pub values: [Complex64; 3],
    pub period: f64,
    pub max_modulus: f64,
    /// Eigenvalues of the monodromy matrix from a numeric eigensolver.
    pub numeric: Vec<Complex64>,
    /// Largest distance between a closed-form value and its nearest numeric
    /// eigenvalue.
    pub cross_check_residual: f64,
}

pub fn multipliers<S: Scalar>(p: &Params<S>) -> Multipliers {
    let period = constants(p).period.to_f64();
    let root = period.sqrt();
    let values = [Complex64::new(1.0, 0.0), Complex64::new(0.0, root), Complex64::new(0.0, -root)];
    let numeric: Vec<Complex64> = monodromy_matrix(p).to_f64().complex_eigenvalues().iter().copied().collect();
    let cross_check_residual = values
        .iter()
        .map(|v| numeric.iter().map(|n| (v - n).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Multipliers { values, period, max_modulus: root, numeric, cross_check_residual }
}

/// Offset of the perturbation window: half the depth of the `y0` minimum, so
/// the window end `-sigma` lies on the rising branch `y0(t) = t`.
pub fn window_offset<S: Scalar>(p: &Params<S>) -> S {
    let c = constants(p);
    (c.theta_star + c.tau_star - one()) / int(2)
}

/// Largest perturbation (max-abs) for which the event order of one period is
/// unchanged and the period map is exactly `M3`.
pub fn linearity_bound<S: Scalar>(p: &Params<S>) -> S {
    let c = constants(p);
    let rising = one::<S>() - c.theta_star.clone();
    let depth = c.theta_star.clone() + c.tau_star.clone() - one();
    let candidates = [c.tau_star.clone(), c.theta_star.clone() - c.tau_star.clone(), rising.clone(), rising, depth];
    let min = candidates.into_iter().reduce(S::min_of).expect("nonempty");
    min * S::from_ratio(1, 20)
}

fn check_bound<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>) -> Result<()> {
    let bound = linearity_bound(p);
    if delta.max_abs() > bound {
        return Err(RelayError::Linearity(format!(
            "|delta| = {} exceeds the bound {}",
            delta.max_abs(),
            bound
        )));
    }
    Ok(())
}

/// Perturbation `h = x - y0` on `[-sigma, 1 + min(0, -gamma0)]` (times on the
/// `y0` clock). Piecewise constant with plateaus `gamma0`,
/// `gamma0 + (a+1) xi_theta`, `gamma0 + (a+1)(xi_theta - xi_tau)`, joined by
/// ramps of slope `+-(a+1)` where the delayed signs of `x` and `y0` disagree.
pub fn perturbation_profile<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>, t: &S) -> Result<S> {
    check_bound(delta, p)?;
    let c = constants(p);
    let a1 = p.a().clone() + one();
    let sigma = window_offset(p);
    let end = one::<S>() + S::min_of(S::zero(), -delta.gamma0.clone());
    if *t < -sigma.clone() || *t > end {
        return Err(RelayError::OutOfRange(format!("{t} not in [{}, {end}]", -sigma)));
    }
    let first_turn = one::<S>() - c.theta_star;
    let second_turn = one::<S>() - c.tau_star;
    let e1 = first_turn.clone() + S::min_of(S::zero(), delta.xi_theta.clone());
    let s1 = first_turn + S::max_of(S::zero(), delta.xi_theta.clone());
    let e2 = second_turn.clone() + S::min_of(S::zero(), delta.xi_tau.clone());
    let s2 = second_turn + S::max_of(S::zero(), delta.xi_tau.clone());

    let p1 = delta.gamma0.clone();
    let p2 = p1.clone() + a1.clone() * delta.xi_theta.clone();
    let p3 = p2.clone() - a1.clone() * delta.xi_tau.clone();
    let h = if *t <= e1 {
        p1
    } else if *t < s1 {
        p1 + delta.xi_theta.signum() * a1 * (t.clone() - e1)
    } else if *t <= e2 {
        p2
    } else if *t < s2 {
        p2 - delta.xi_tau.signum() * a1 * (t.clone() - e2)
    } else {
        p3
    };
    Ok(h)
}

/// Window `[-1 - sigma, -sigma]` of `y0 + gamma`, shifted to `[-1, 0]`.
pub fn perturbed_state<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>) -> Result<InitialState<S>> {
    check_bound(delta, p)?;
    perturbed_state_unchecked(delta, p)
}

fn perturbed_state_unchecked<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>) -> Result<InitialState<S>> {
    let c = constants(p);
    let sigma = window_offset(p);
    InitialState::new(
        vec![
            sigma.clone() - c.theta_star + delta.xi_theta.clone(),
            sigma.clone() - c.tau_star + delta.xi_tau.clone(),
        ],
        Sign::Neg,
        delta.gamma0.clone() - sigma,
    )
}

/// Reads the deviation triple back from a window of the perturbed solution.
fn deviation_of<S: Scalar>(state: &InitialState<S>, p: &Params<S>) -> Option<PerturbationVector<S>> {
    let c = constants(p);
    let sigma = window_offset(p);
    match (state.sign_left(), state.zeros()) {
        (Sign::Neg, [z1, z2]) if *state.value_at_end() < S::zero() => Some(PerturbationVector::new(
            state.value_at_end().clone() + sigma.clone(),
            z1.clone() - sigma.clone() + c.theta_star,
            z2.clone() - sigma + c.tau_star,
        )),
        _ => None,
    }
}

/// Slopes over `[0, until]` with runs of equal slopes merged.
fn slope_pattern<S: Scalar>(traj: &Trajectory<S>, until: &S) -> Vec<S> {
    let mut out: Vec<S> = Vec::new();
    for (t, s) in traj.breakpoints().iter().zip(traj.slopes()) {
        if t >= until {
            break;
        }
        if out.last() != Some(s) {
            out.push(s.clone());
        }
    }
    out
}

/// Simulates one period `theta*` from the perturbed window and returns the
/// new deviation triple.
pub fn one_period_map<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>) -> Result<PerturbationVector<S>> {
    let init = perturbed_state(delta, p)?;
    let period = constants(p).theta_star;
    let traj = simulate(&init, p, &period)?;
    let reference = simulate(&perturbed_state_unchecked(&PerturbationVector::zero(), p)?, p, &period)?;
    if slope_pattern(&traj, &period) != slope_pattern(&reference, &period) {
        return Err(RelayError::Linearity("switching order differs from the unperturbed cycle".into()));
    }
    let window = traj.window_state(&period)?;
    deviation_of(&window, p)
        .ok_or_else(|| RelayError::Linearity(format!("window after one period left the two-zero class: {window:?}")))
}

/// Eigenvector for the unit multiplier: a time shift of the cycle.
pub fn unit_eigenvector<S: Scalar>() -> PerturbationVector<S> {
    PerturbationVector::new(-one::<S>(), one(), one())
}

/// Component of `delta` in the invariant plane of `+-i sqrt(T0)`, obtained
/// by removing the projection `(M^2 + T0 I) delta / (1 + T0)` on the unit
/// eigenvector.
pub fn eigenplane_component<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>) -> PerturbationVector<S> {
    let m = monodromy_matrix(p);
    let period = constants(p).period;
    let shifted = m.apply(&m.apply(delta)).add(&delta.scale(&period));
    delta.sub(&shifted.scale(&(one::<S>() / (one::<S>() + period))))
}

/// `|w|^2 + |M w|^2 / T0` for the eigenplane component `w`. In this norm the
/// period map scales the eigenplane by exactly `sqrt(T0)`.
pub fn eigenplane_norm_sq<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>) -> S {
    let w = eigenplane_component(delta, p);
    let mw = monodromy_matrix(p).apply(&w);
    w.norm_sq() + mw.norm_sq() / constants(p).period
}

#[derive(Clone, Debug)]
pub struct GrowthRecord<S> {
    pub period_index: usize,
    pub delta: PerturbationVector<S>,
    pub norm: S,
    pub eigenplane_norm_sq: S,
    pub linear_valid: bool,
}

impl<S: Scalar> GrowthRecord<S> {
    pub fn eigenplane_norm(&self) -> f64 {
        self.eigenplane_norm_sq.to_f64().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct GrowthLog<S> {
    pub records: Vec<GrowthRecord<S>>,
    pub bound: S,
    /// Classification of the last linear-valid state, simulated to
    /// `fate_horizon`.
    pub fate: Option<ClassKind<S>>,
    pub fate_horizon: S,
}

impl<S: Scalar> GrowthLog<S> {
    /// Per-period growth of the eigenplane norm while both ends are linear.
    pub fn growth_factors(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .filter(|w| w[0].linear_valid && !w[0].eigenplane_norm_sq.is_zero())
            .map(|w| (w[1].eigenplane_norm_sq.clone() / w[0].eigenplane_norm_sq.clone()).to_f64().sqrt())
            .collect()
    }
}

/// Iterates the simulated period map from `delta0` until the perturbation
/// exceeds the linearity bound (or `max_periods`), then classifies where the
/// last linear state ends up.
pub fn instability_demo<S: Scalar>(
    delta0: &PerturbationVector<S>,
    p: &Params<S>,
    max_periods: usize,
) -> Result<GrowthLog<S>> {
    check_bound(delta0, p)?;
    let bound = linearity_bound(p);
    let mut records = Vec::new();
    let mut delta = delta0.clone();
    let mut last_valid = delta0.clone();
    for k in 0..=max_periods {
        let norm = delta.max_abs();
        let linear_valid = norm <= bound;
        records.push(GrowthRecord {
            period_index: k,
            delta: delta.clone(),
            norm,
            eigenplane_norm_sq: eigenplane_norm_sq(&delta, p),
            linear_valid,
        });
        if !linear_valid || k == max_periods {
            break;
        }
        last_valid = delta.clone();
        delta = one_period_map(&delta, p)?;
    }
    if records.last().is_some_and(|r| r.linear_valid) {
        last_valid = delta;
    }

    let c = constants(p);
    let start = last_valid.max_abs().to_f64().max(1e-300);
    let growth = c.period.to_f64().sqrt().ln();
    let periods = ((1.0 / start).ln() / growth).ceil().max(0.0) + 6.0;
    let steps = (periods * c.theta_star.to_f64() + 10.0 * c.period.to_f64()).ceil() as i64;
    let fate_horizon = S::from_int(steps.max(1));
    let fate = match classify(&perturbed_state(&last_valid, p)?, p, &fate_horizon) {
        Ok(c) => Some(c.kind),
        Err(RelayError::Inconclusive(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(GrowthLog { records, bound, fate, fate_horizon })
}

/// `h(t) = x(t) - y0(t)` for the simulated perturbed solution, on the `y0`
/// clock.
pub fn simulated_deviation<S: Scalar>(delta: &PerturbationVector<S>, p: &Params<S>, t: &S) -> Result<S> {
    let init = perturbed_state(delta, p)?;
    let sigma = window_offset(p);
    let horizon = one::<S>() + sigma.clone();
    let traj = simulate(&init, p, &horizon)?;
    Ok(traj.eval(&(t.clone() + sigma))? - y0_eval(t, p))
}

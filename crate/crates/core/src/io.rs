//! CSV and JSON forms of trajectories, return-map traces, classifications and
//! growth logs.
//!
//! Column orders and JSON field names are part of the external interface.
//! Floats are written in shortest round-trip form, rationals as `p/q`.

use std::io::{Read, Write};

use num::complex::Complex64;
use serde_json::{json, Map, Value};

use crate::engine::Trajectory;
use crate::error::{RelayError, Result};
use crate::orbit::{ClassKind, Classification, IterateTrace, OrbitConstants, PoincarePair};
use crate::relay::{to_potential, Params};
use crate::scalar::Scalar;
use crate::stability::{GrowthLog, Multipliers, PerturbationVector};

pub const TRAJECTORY_HEADER: [&str; 2] = ["t", "x"];
pub const POTENTIAL_HEADER: [&str; 2] = ["t", "u"];
pub const ITERATE_HEADER: [&str; 4] = ["k", "theta", "tau", "admissible"];
pub const GROWTH_HEADER: [&str; 4] = ["period_index", "norm", "eigenplane_norm", "linear_valid"];

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Breakpoints `(t, x)`; linear interpolation between rows is exact.
pub fn write_trajectory_csv<S: Scalar, W: Write>(traj: &Trajectory<S>, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for (t, x) in traj.points() {
        out.write_record([t.render(), x.render()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_breakpoints_csv<S: Scalar, R: Read>(r: R) -> Result<Vec<(S, S)>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TRAJECTORY_HEADER {
        return Err(RelayError::Parse(format!("expected header t,x, found {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 2 {
            return Err(RelayError::Parse(format!("expected 2 fields, found {}", record.len())));
        }
        points.push((S::parse(&record[0])?, S::parse(&record[1])?));
    }
    Ok(points)
}

/// Piecewise-linear interpolation of breakpoints; `None` outside their span.
pub fn interpolate<S: Scalar>(points: &[(S, S)], t: &S) -> Option<S> {
    let i = points.partition_point(|(s, _)| s <= t);
    if i == 0 {
        return None;
    }
    let (t0, x0) = &points[i - 1];
    if t0 == t {
        return Some(x0.clone());
    }
    let (t1, x1) = points.get(i)?;
    Some(x0.clone() + (x1.clone() - x0.clone()) * (t.clone() - t0.clone()) / (t1.clone() - t0.clone()))
}

pub fn trajectory_json<S: Scalar>(traj: &Trajectory<S>) -> Value {
    let history = traj.history();
    json!({
        "a": traj.params().a().to_json(),
        "initial": {
            "zeros": history.zeros().iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "sign_left": history.sign_left(),
            "x_end": history.value_at_end().to_json(),
        },
        "breakpoints": traj.points().map(|(t, x)| json!({"t": t.to_json(), "x": x.to_json()})).collect::<Vec<_>>(),
        "slopes": traj.slopes().iter().map(Scalar::to_json).collect::<Vec<_>>(),
        "crossings": traj.crossings().iter().map(|c| json!({"t": c.time.to_json(), "rising": c.rising})).collect::<Vec<_>>(),
        "touches": traj.touches().iter().map(Scalar::to_json).collect::<Vec<_>>(),
    })
}

/// Samples of `u(t) = exp(lambda x(t))` on a uniform grid of spacing `step`
/// merged with all breakpoints, so the peaks are hit exactly.
pub fn potential_samples<S: Scalar>(traj: &Trajectory<S>, step: &S) -> Result<Vec<(S, f64)>> {
    if *step <= S::zero() {
        return Err(RelayError::InvalidParameter(format!("sample step must be positive, got {step}")));
    }
    let start = traj.start_time().clone();
    let end = traj.end_time().clone();
    let mut times: Vec<S> = traj.breakpoints().to_vec();
    let mut k = 1i64;
    loop {
        let t = start.clone() + step.clone() * S::from_int(k);
        if t >= end {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.sort_by(|x, y| x.partial_cmp(y).expect("finite times"));
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let u = to_potential(&traj.eval(&t)?, traj.params())?;
            Ok((t, u))
        })
        .collect()
}

pub fn write_potential_csv<S: Scalar, W: Write>(samples: &[(S, f64)], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(POTENTIAL_HEADER)?;
    for (t, u) in samples {
        out.write_record([t.render(), u.render()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn potential_json<S: Scalar>(samples: &[(S, f64)], lambda: f64) -> Value {
    json!({
        "lambda": lambda,
        "samples": samples.iter().map(|(t, u)| json!({"t": t.to_json(), "u": u.to_json()})).collect::<Vec<_>>(),
    })
}

pub fn constants_json<S: Scalar>(c: &OrbitConstants<S>) -> Value {
    json!({
        "t0": c.t0.to_json(),
        "period": c.period.to_json(),
        "theta_star": c.theta_star.to_json(),
        "tau_star": c.tau_star.to_json(),
    })
}

pub fn pair_json<S: Scalar>(pair: &PoincarePair<S>) -> Value {
    json!({"theta": pair.theta.to_json(), "tau": pair.tau.to_json()})
}

pub fn write_iterates_csv<S: Scalar, W: Write>(trace: &IterateTrace<S>, p: &Params<S>, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(ITERATE_HEADER)?;
    for (k, pair) in trace.pairs.iter().enumerate() {
        out.write_record([k.to_string(), pair.theta.render(), pair.tau.render(), trace.is_admissible(k, p).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn iterates_json<S: Scalar>(trace: &IterateTrace<S>, p: &Params<S>) -> Value {
    let pairs: Vec<Value> = trace
        .pairs
        .iter()
        .enumerate()
        .map(|(k, pair)| {
            json!({"k": k, "theta": pair.theta.to_json(), "tau": pair.tau.to_json(), "admissible": trace.is_admissible(k, p)})
        })
        .collect();
    json!({
        "pairs": pairs,
        "exit": serde_json::to_value(&trace.exit).expect("plain enum"),
        "stopped_at": trace.stopped_at(),
    })
}

pub fn class_kind_json<S: Scalar>(kind: &ClassKind<S>) -> Value {
    match kind {
        ClassKind::PeriodicX0 { shift, settle_time } => {
            json!({"variant": "PeriodicX0", "shift": shift.to_json(), "settle_time": settle_time.to_json()})
        }
        ClassKind::PeriodicY0 => json!({"variant": "PeriodicY0"}),
        ClassKind::ExitsClass { at_iterate } => json!({"variant": "ExitsClass", "at_iterate": at_iterate}),
    }
}

pub fn classification_json<S: Scalar>(c: &Classification<S>) -> Value {
    let mut out = match class_kind_json(&c.kind) {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    let p = c.trajectory.params();
    out.insert("trace".into(), c.trace.as_ref().map_or(Value::Null, |t| iterates_json(t, p)));
    out.insert("section_times".into(), c.section_times.iter().map(Scalar::to_json).collect());
    out.insert("theory_consistent".into(), c.theory_consistent.into());
    out.insert("horizon".into(), c.trajectory.end_time().to_json());
    Value::Object(out)
}

/// One-row CSV with the classification outcome.
pub fn write_classification_csv<S: Scalar, W: Write>(c: &Classification<S>, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["variant", "shift", "settle_time", "at_iterate"])?;
    let row = match &c.kind {
        ClassKind::PeriodicX0 { shift, settle_time } => ["PeriodicX0".into(), shift.render(), settle_time.render(), String::new()],
        ClassKind::PeriodicY0 => ["PeriodicY0".into(), String::new(), String::new(), String::new()],
        ClassKind::ExitsClass { at_iterate } => ["ExitsClass".into(), String::new(), String::new(), at_iterate.to_string()],
    };
    out.write_record(row)?;
    out.flush()?;
    Ok(())
}

/// `re+imi` with shortest round-trip components, e.g. `0+2i`, `1`.
pub fn complex_text(z: Complex64) -> String {
    if z.im == 0.0 {
        return z.re.render();
    }
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{}{sign}{}i", z.re.render(), z.im.abs().render())
}

pub fn multipliers_json(m: &Multipliers) -> Value {
    json!({
        "mu": m.values.iter().map(|z| complex_text(*z)).collect::<Vec<_>>(),
        "modulus": m.max_modulus,
        "period": m.period,
        "numeric": m.numeric.iter().map(|z| complex_text(*z)).collect::<Vec<_>>(),
        "cross_check_residual": m.cross_check_residual,
    })
}

pub fn perturbation_json<S: Scalar>(d: &PerturbationVector<S>) -> Value {
    json!({"gamma0": d.gamma0.to_json(), "xi_theta": d.xi_theta.to_json(), "xi_tau": d.xi_tau.to_json()})
}

pub fn write_growth_csv<S: Scalar, W: Write>(log: &GrowthLog<S>, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(GROWTH_HEADER)?;
    for r in &log.records {
        out.write_record([
            r.period_index.to_string(),
            r.norm.render(),
            r.eigenplane_norm().render(),
            r.linear_valid.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn growth_json<S: Scalar>(log: &GrowthLog<S>) -> Value {
    let records: Vec<Value> = log
        .records
        .iter()
        .map(|r| {
            json!({
                "period_index": r.period_index,
                "delta": perturbation_json(&r.delta),
                "norm": r.norm.to_json(),
                "eigenplane_norm": r.eigenplane_norm(),
                "linear_valid": r.linear_valid,
            })
        })
        .collect();
    json!({
        "bound": log.bound.to_json(),
        "records": records,
        "growth_factors": log.growth_factors(),
        "fate": log.fate.as_ref().map_or(Value::Null, class_kind_json),
        "fate_horizon": log.fate_horizon.to_json(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, InitialState};
    use crate::scalar::Rational;

    #[test]
    fn complex_forms() {
        assert_eq!(complex_text(Complex64::new(1.0, 0.0)), "1");
        assert_eq!(complex_text(Complex64::new(0.0, 2.0)), "0+2i");
        assert_eq!(complex_text(Complex64::new(0.0, -2.0)), "0-2i");
        assert_eq!(complex_text(Complex64::new(-0.5, 1.5)), "-0.5+1.5i");
    }

    #[test]
    fn rational_csv_round_trip() {
        let p = Params::new(Rational::from_ratio(2, 3)).unwrap();
        let traj = simulate(&InitialState::negative_to_zero(), &p, &Rational::from_int(9)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x\n0,0\n1,1\n"));
        assert!(text.contains("5/2,0\n"));
        let back: Vec<(Rational, Rational)> = read_breakpoints_csv(buf.as_slice()).unwrap();
        let orig: Vec<_> = traj.points().map(|(t, x)| (t.clone(), x.clone())).collect();
        assert_eq!(back, orig);
    }

    #[test]
    fn interpolation() {
        let pts = vec![(0.0, 0.0), (1.0, 1.0), (3.0, -1.0)];
        assert_eq!(interpolate(&pts, &0.5), Some(0.5));
        assert_eq!(interpolate(&pts, &2.0), Some(0.0));
        assert_eq!(interpolate(&pts, &3.0), Some(-1.0));
        assert_eq!(interpolate(&pts, &3.5), None);
        assert_eq!(interpolate(&pts, &-0.1), None);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_breakpoints_csv::<f64, _>("time,x\n0,0\n".as_bytes()).is_err());
        assert!(read_breakpoints_csv::<f64, _>("t,x\n0,zz\n".as_bytes()).is_err());
    }
}

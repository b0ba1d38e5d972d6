use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaydelay::engine::Sign;
use relaydelay::orbit::*;
use relaydelay::relay::Params;
use relaydelay::scalar::{Rational, Scalar};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn random_a(rng: &mut ChaCha8Rng) -> Rational {
    q(rng.gen_range(5..=500), 50)
}

fn random_admissible_pair(rng: &mut ChaCha8Rng, p: &Params<Rational>) -> PoincarePair<Rational> {
    loop {
        let tau = q(rng.gen_range(1..10_000), 10_000);
        let theta = q(rng.gen_range(1..10_000), 10_000);
        if let Ok(pair) = PoincarePair::new(theta, tau) {
            if admissible(&pair, p) {
                return pair;
            }
        }
    }
}

/// Random pair within `spread` of the fixed point, so several gated
/// iterates exist.
fn pair_near_fixed(rng: &mut ChaCha8Rng, p: &Params<Rational>, spread: i64) -> PoincarePair<Rational> {
    let f = PoincarePair::fixed(p);
    loop {
        let dt = q(rng.gen_range(-1000..=1000), 1000 * spread);
        let ds = q(rng.gen_range(-1000..=1000), 1000 * spread);
        if let Ok(pair) = PoincarePair::new(f.theta.clone() + dt, f.tau.clone() + ds) {
            return pair;
        }
    }
}

#[test]
fn constants_at_reference_parameters() {
    let c = constants(&Params::new(q(1, 1)).unwrap());
    assert_eq!((c.t0, c.period, c.theta_star, c.tau_star), (q(2, 1), q(4, 1), q(4, 5), q(2, 5)));
    let c = constants(&Params::new(q(2, 1)).unwrap());
    assert_eq!((c.t0, c.period, c.theta_star, c.tau_star), (q(3, 2), q(9, 2), q(9, 11), q(6, 11)));
}

#[test]
fn fixed_point_is_exact() {
    for a in [q(1, 2), q(1, 1), q(2, 1), q(10, 1)] {
        let p = Params::new(a).unwrap();
        let f = PoincarePair::fixed(&p);
        assert_eq!(phi_map(&f, &p).unwrap(), f);
        assert_eq!(phi_iterate(&f, &p, 40).exit, IterateExit::Completed);
    }
}

#[test]
fn closed_form_matches_gated_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut deep = 0;
    for i in 0..100 {
        let p = Params::new(random_a(&mut rng)).unwrap();
        let pair = if i % 2 == 0 { random_admissible_pair(&mut rng, &p) } else { pair_near_fixed(&mut rng, &p, 10_000) };
        let trace = phi_iterate(&pair, &p, 12);
        for (k, it) in trace.pairs.iter().enumerate() {
            assert_eq!(*it, phi_closed_form(&pair, &p, k), "a = {}, k = {k}", p.a());
        }
        if trace.pairs.len() > 4 {
            deep += 1;
        }
    }
    assert!(deep >= 20);
}

/// Admissibility of `Phi^m(theta, tau)` written as a condition on the
/// starting pair. Even `m`: the known limiting inequality chains, term by
/// term. Odd `m = 2k+1`, with `C = (-1)^k T0^k (a+1)`:
/// `C (tau - tau*) < a^2/D` and `(a+1) C (theta - theta*)/a > -a/D`.
fn chain_condition(pair: &PoincarePair<Rational>, p: &Params<Rational>, m: usize) -> bool {
    let a = p.a().clone();
    let a1 = a.clone() + q(1, 1);
    let c = constants(p);
    let (th, ta) = (c.theta_star.clone(), c.tau_star.clone());
    let d = a.clone() * a.clone() + q(3, 1) * a.clone() + q(1, 1);
    let (theta, tau) = (pair.theta.clone(), pair.tau.clone());
    let k = m / 2;
    if m % 2 == 1 {
        let mut coef: Rational = num::pow(c.period.clone(), k) * a1.clone();
        if k % 2 == 1 {
            coef = -coef;
        }
        let lower = coef.clone() * (tau - ta) < a.clone() * a.clone() / d.clone();
        let upper = a1 * coef * (theta - th) / a.clone() > -a / d;
        return lower && upper;
    }
    let tp: Rational = num::pow(c.period.clone(), k);
    let frac_a = a.clone() / a1.clone();
    let g = a.clone() * ta.clone() - a1.clone() * th.clone() + q(1, 1);
    let h = a1.clone() * (ta.clone() - th.clone()) + q(1, 1);
    if m % 4 == 2 {
        let lo = th.clone() + tau.clone() - ta.clone() - h / (a1.clone() * tp.clone());
        let hi = th.clone() + frac_a * (tau - ta) - g / (a1 * tp);
        lo < theta && theta < hi
    } else {
        let lo = th.clone() + frac_a * (tau.clone() - ta.clone()) + g / (a1.clone() * tp.clone());
        let hi = th + tau - ta + h / (a1 * tp);
        lo < theta && theta < hi
    }
}

#[test]
fn inequality_chains_match_gated_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..400 {
        let p = Params::new(random_a(&mut rng)).unwrap();
        let pair = if i % 2 == 0 { random_admissible_pair(&mut rng, &p) } else { pair_near_fixed(&mut rng, &p, 1000) };
        let trace = phi_iterate(&pair, &p, 8);
        for m in 1..=8 {
            let image = phi_closed_form(&pair, &p, m);
            assert_eq!(chain_condition(&pair, &p, m), admissible(&image, &p), "a = {}, m = {m}", p.a());
            if m < trace.pairs.len() {
                assert_eq!(chain_condition(&pair, &p, m), trace.is_admissible(m, &p), "a = {}, m = {m}", p.a());
            }
        }
    }
}

#[test]
fn grid_scan_finds_only_the_fixed_point() {
    for a in [q(1, 2), q(1, 1), q(2, 1)] {
        let p = Params::new(a).unwrap();
        let survivors = scan_surviving_pairs(&p, 1000, 40);
        let f = PoincarePair::fixed(&p);
        assert!(survivors.iter().all(|s| *s == f), "a = {}: {survivors:?}", p.a());
    }
    let p = Params::new(q(1, 1)).unwrap();
    assert_eq!(scan_surviving_pairs(&p, 1000, 40), vec![PoincarePair::fixed(&p)]);
}

#[test]
fn one_zero_settling_matches_prediction() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..50 {
        let p = Params::new(random_a(&mut rng)).unwrap();
        let tau = q(rng.gen_range(1..1000), 1000);
        let d = q(rng.gen_range(0..2000), 1000);
        let case = if i % 2 == 0 { OneZeroCase::NegThenPos } else { OneZeroCase::PosThenNeg };
        let init = one_zero_state(&tau, &d, case).unwrap();
        let predicted = predict_one_zero_settling(&tau, &d, case, &p).unwrap();
        let horizon = predicted.settle_time.clone() + constants(&p).period * q(2, 1) + q(2, 1);
        let c = classify(&init, &p, &horizon).unwrap();
        assert_eq!(
            c.kind,
            ClassKind::PeriodicX0 { shift: predicted.shift.clone(), settle_time: predicted.settle_time.clone() },
            "a = {}, tau = {tau}, d = {d}, {case:?}",
            p.a()
        );
        let window = c.trajectory.window_state(&predicted.settle_time).unwrap();
        let x0_window = if case == OneZeroCase::NegThenPos {
            relaydelay::engine::InitialState::positive_to_zero()
        } else {
            relaydelay::engine::InitialState::negative_to_zero()
        };
        assert_eq!(window, x0_window);
    }
}

#[test]
fn constant_sign_settling_matches_prediction() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for i in 0..40 {
        let p = Params::new(random_a(&mut rng)).unwrap();
        let d = if i < 4 { q(0, 1) } else { q(rng.gen_range(1..3000), 1000) };
        let sign = if i % 2 == 0 { Sign::Neg } else { Sign::Pos };
        let init = constant_sign_state(sign, &d).unwrap();
        let predicted = predict_constant_sign_settling(sign, &d, &p).unwrap();
        let horizon = predicted.settle_time.clone() + constants(&p).period * q(2, 1) + q(2, 1);
        let c = classify(&init, &p, &horizon).unwrap();
        assert_eq!(c.kind, ClassKind::PeriodicX0 { shift: predicted.shift, settle_time: predicted.settle_time });
        if sign == Sign::Neg && d.is_zero() {
            assert_eq!(c.kind, ClassKind::PeriodicX0 { shift: q(0, 1), settle_time: q(0, 1) });
        }
    }
}

#[test]
fn two_zero_data_settles_or_stays_on_short_cycle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for i in 0..60 {
        let p = Params::new(random_a(&mut rng)).unwrap();
        let pair = if i % 3 == 0 { pair_near_fixed(&mut rng, &p, 1000) } else { random_admissible_pair(&mut rng, &p) };
        let c = classify(&pair.initial_state().unwrap(), &p, &q(200, 1)).unwrap();
        assert!(matches!(c.kind, ClassKind::PeriodicX0 { .. }), "a = {}, {pair:?}: {:?}", p.a(), c.kind);
        assert!(c.theory_consistent);
        let trace = c.trace.unwrap();
        assert_eq!(c.section_times.len(), trace.pairs.len() - 1);
    }
    for a in [q(1, 3), q(1, 1), q(5, 1)] {
        let p = Params::new(a).unwrap();
        let c = classify(&y0_state(&p), &p, &q(10, 1)).unwrap();
        assert_eq!(c.kind, ClassKind::PeriodicY0);
    }
}

#[test]
fn classifier_refuses_many_zeros() {
    let p = Params::new(q(1, 1)).unwrap();
    let init = relaydelay::engine::InitialState::new(vec![q(-4, 5), q(-3, 5), q(-2, 5), q(-1, 5)], Sign::Neg, q(-1, 10)).unwrap();
    assert!(matches!(classify(&init, &p, &q(20, 1)), Err(relaydelay::error::RelayError::UnsupportedClass(4))));
}

use proptest::prelude::*;

use pathhedge::calculus::{
    causality_probe, gradient_check, horizontal_derivative, library, riemann_sum, FnFunctional, Functional,
};
use pathhedge::harness::{generate_scenarios, ScenarioClass, ScenarioSpec};
use pathhedge::path::{approximate, vertical_perturb, CadlagPath, PartitionLadder, PathView, StopSide};
use pathhedge::payoff::Payoff;
use pathhedge::portfolio::{breakpoint_grid, free_lunch_strategy, self_financing_check, DEFAULT_FINANCING_STEPS};
use pathhedge::superhedge::{asian_cost_to_go, asian_delta, asian_theta, AsianParams, AsianState, CostToGo};

/// Step or piecewise-linear path on [0, 1] with levels in (0.1, 1.9).
fn arb_path() -> impl Strategy<Value = CadlagPath<f64>> {
    (
        prop::collection::vec((0.001f64..0.999, 0.1f64..1.9), 0..10),
        0.1f64..1.9,
        any::<bool>(),
    )
        .prop_map(|(mut knots, x0, linear)| {
            knots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            knots.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9);
            let mut pts = vec![(0.0, x0)];
            pts.extend(knots);
            if linear {
                pts.push((1.0, pts.last().unwrap().1));
                CadlagPath::linear(&pts).unwrap()
            } else {
                CadlagPath::step(&pts).unwrap()
            }
        })
}

fn canonical() -> AsianParams<f64> {
    AsianParams::new(1.0, 1.0, 0.0, 2.0).unwrap()
}

/// State reachable in the band `(0, 2)`.
fn arb_state() -> impl Strategy<Value = AsianState<f64>> {
    (0.0f64..1.0, 0.0f64..1.0, 0.01f64..1.99).prop_map(|(t, w, x)| AsianState::new(t, 2.0 * t * w, x))
}

fn kink_distance(p: &AsianParams<f64>, s: &AsianState<f64>) -> f64 {
    [p.a, p.b]
        .iter()
        .map(|c| (s.running + c * (p.maturity - s.t) - p.strike * p.maturity).abs())
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_of_one_telescopes(x in arb_path(), n in 0usize..12) {
        let ladder = PartitionLadder::dyadic(1.0, 12).unwrap();
        let one = library::constant(1.0);
        let s = riemann_sum(&one, &x, ladder.grid(n).unwrap(), 0.0, 1.0).unwrap();
        prop_assert!((s - (x.value(1.0, 0) - x.value(0.0, 0))).abs() <= 1e-12);
    }

    #[test]
    fn riemann_sum_is_linear(x in arb_path(), a in -3.0f64..3.0, b in -3.0f64..3.0, n in 2usize..10) {
        let ladder = PartitionLadder::dyadic(1.0, 10).unwrap();
        let g = ladder.grid(n).unwrap();
        let f = library::spot_squared::<f64>();
        let h = library::time_times_spot::<f64>();
        let combo = FnFunctional::new("combo", move |t, v: &PathView<'_, f64>| {
            a * library::spot_squared().eval(t, v) + b * library::time_times_spot().eval(t, v)
        });
        let lhs = riemann_sum(&combo, &x, g, 0.0, 1.0).unwrap();
        let rhs = a * riemann_sum(&f, &x, g, 0.0, 1.0).unwrap() + b * riemann_sum(&h, &x, g, 0.0, 1.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gradients_match_finite_differences(x in arb_path(), t in 0.01f64..0.99) {
        let v = x.view(t, StopSide::At);
        for f in [library::spot_squared(), library::time_times_spot(), library::running_mean(1.0)] {
            prop_assert!(gradient_check(&f, t, &v, None).unwrap().rel_err <= 1e-6);
            let exact = f.horizontal_derivative(t, &v).unwrap();
            let fd = horizontal_derivative(&f, t, &v, Some(1e-6)).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn causality_criteria_agree(x in arb_path(), t in 0.01f64..0.99) {
        let paths = [x];
        for f in [library::spot(), library::left_spot(), library::running_mean(1.0), library::spot_squared()] {
            let r = causality_probe(&f, &paths, &[t], None, 1e-6).unwrap();
            prop_assert_eq!(r.inconsistencies, 0);
        }
    }

    #[test]
    fn closed_form_perturbation_matches_brute_force(
        x in arb_path(),
        t in 0.01f64..0.99,
        e in -0.09f64..1.0,
        kind in 0usize..3,
    ) {
        let payoff = match kind {
            0 => Payoff::asian(1.0, 0.8).unwrap(),
            1 => Payoff::lookback(1.0).unwrap(),
            _ => Payoff::forward(1.0).unwrap(),
        };
        let fast = payoff.perturbed(&x, t, e).unwrap();
        let slow = payoff.perturbed_brute_force(&x, t, e).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow.abs()));
    }

    #[test]
    fn payoffs_ignore_the_path_after_maturity(x in arb_path(), e in -0.09f64..1.0, kind in 0usize..3) {
        let payoff = match kind {
            0 => Payoff::asian(0.5, 0.8).unwrap(),
            1 => Payoff::lookback(0.5).unwrap(),
            _ => Payoff::forward(0.5).unwrap(),
        };
        let later = vertical_perturb(&x, 0.75, &[e]).unwrap();
        let (h, h_later) = (payoff.terminal(&x), payoff.terminal(&later));
        prop_assert!((h - h_later).abs() <= 1e-14 * (1.0 + h.abs()));
    }

    #[test]
    fn theta_is_nonpositive(s in arb_state()) {
        prop_assert!(asian_theta(&canonical(), &s).unwrap() <= 0.0);
    }

    #[test]
    fn cost_to_go_decays_along_frozen_paths(s in arb_state(), h in 0.0f64..0.5) {
        let p = canonical();
        let later = AsianState::new((s.t + h).min(1.0), s.running + s.spot * ((s.t + h).min(1.0) - s.t), s.spot);
        let u0 = asian_cost_to_go(&p, &s).unwrap();
        let u1 = asian_cost_to_go(&p, &later).unwrap();
        prop_assert!(u1 <= u0 + 1e-12);
    }

    #[test]
    fn cost_to_go_reaches_the_payoff(w in 0.0f64..1.0, x in 0.01f64..1.99, k in 0.0f64..2.0) {
        let p = AsianParams::new(1.0, k, 0.0, 2.0).unwrap();
        let s = AsianState::new(1.0, 2.0 * w, x);
        prop_assert!((asian_cost_to_go(&p, &s).unwrap() - p.payoff(s.running)).abs() <= 1e-15);
    }

    #[test]
    fn delta_and_theta_match_differences(s in arb_state(), k in 0.2f64..1.8) {
        let p = AsianParams::new(1.0, k, 0.0, 2.0).unwrap();
        prop_assume!(kink_distance(&p, &s) > 1e-3 && s.t < 0.99);
        let x = if s.t > 0.0 {
            CadlagPath::step(&[(0.0, s.running / s.t), (s.t, s.spot)]).unwrap()
        } else {
            CadlagPath::constant(s.spot)
        };
        let v = x.view(s.t, StopSide::At);
        let u = CostToGo(p);
        let g = gradient_check(&u, s.t, &v, Some(1e-6)).unwrap();
        prop_assert!((g.numeric[0] - asian_delta(&p, &s).unwrap()).abs() <= 1e-6);
        let fd = horizontal_derivative(&u, s.t, &v, Some(1e-7)).unwrap();
        prop_assert!((fd - asian_theta(&p, &s).unwrap()).abs() <= 1e-6);
    }

    #[test]
    fn free_lunch_is_self_financing(x in arb_path()) {
        let s = free_lunch_strategy::<f64>();
        let r = self_financing_check(&s, &x, &breakpoint_grid(&x, 1.0), &DEFAULT_FINANCING_STEPS, 1e-10);
        prop_assert!(r.pass, "{:?}", r.records.iter().find(|q| q.residual.abs() > 1e-10));
    }

    #[test]
    fn approximation_looks_one_cell_ahead(x in arb_path(), n in 0usize..10) {
        let ladder = PartitionLadder::dyadic(1.0, 10).unwrap();
        let xn = approximate(&x, &ladder, n).unwrap();
        let g = ladder.grid(n).unwrap();
        for w in g.windows(2) {
            prop_assert_eq!(xn.value(w[0], 0), x.value(w[1], 0));
            prop_assert_eq!(xn.value(0.5 * (w[0] + w[1]), 0), x.value(w[1], 0));
        }
        prop_assert_eq!(xn.value(1.0, 0), x.value(1.0, 0));
    }

    #[test]
    fn scenario_corpora_are_deterministic_and_faithful(seed in any::<u64>(), class in 0usize..5) {
        let class = [
            ScenarioClass::Step,
            ScenarioClass::BvSampled,
            ScenarioClass::JumpDiffusionSampled,
            ScenarioClass::Adversarial,
            ScenarioClass::Mixed,
        ][class];
        let spec = ScenarioSpec { samples: 64, ..ScenarioSpec::with_class(class, 6, seed) };
        let a = generate_scenarios(&spec).unwrap();
        prop_assert_eq!(&a, &generate_scenarios(&spec).unwrap());
        for (i, p) in a.iter().enumerate() {
            prop_assert!(spec.check(i as u64, p).is_ok());
        }
    }
}

#[test]
fn single_precision_telescopes() {
    let x = CadlagPath::<f32>::step(&[(0.0, 1.0), (0.3, 0.5), (0.6, 1.5)]).unwrap();
    let ladder = PartitionLadder::<f32>::dyadic(1.0, 8).unwrap();
    let s = riemann_sum(&library::constant(1.0f32), &x, ladder.grid(8).unwrap(), 0.0, 1.0).unwrap();
    assert!((s - 0.5).abs() < 1e-6);
    let fl = riemann_sum(&library::left_spot::<f32>(), &x, ladder.grid(8).unwrap(), 0.0, 1.0).unwrap();
    assert!((fl - (1.0 * -0.5 + 0.5 * 1.0)).abs() < 1e-5);
}

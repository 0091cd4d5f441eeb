use ndde_core::delay::{solve, ScalarDelayProblem, ScalarSolution, MAX_JUMP_ORDER};
use ndde_core::HistoryFunction;
use proptest::prelude::*;

/// Below these magnitudes a measured jump counts as zero.
const ZERO_JUMP: [f64; MAX_JUMP_ORDER] = [1e-9, 1e-6, 1e-6, 1e-6];

fn generic_retarded(amp: f64, omega: f64, slope: f64, alpha: f64, beta: f64, horizon: f64) -> ScalarSolution {
    let h = HistoryFunction::c1(
        -1.0,
        move |t| amp * (omega * t).cos() + slope * t,
        move |t| -amp * omega * (omega * t).sin() + slope,
    )
    .unwrap();
    let p = ScalarDelayProblem::retarded(move |y, yd| alpha * y + beta * yd.sin(), h, 1.0, horizon).unwrap();
    solve(&p).unwrap()
}

#[test]
fn smoothing_law_on_nonlinear_problem() {
    let sol = generic_retarded(1.0, 2.0, 0.3, -0.5, 1.0, 5.0);
    let orders: Vec<_> = sol.breaking_points().iter().map(|bp| bp.first_nonzero_order(&ZERO_JUMP)).collect();
    assert_eq!(&orders[..4], &[Some(1), Some(2), Some(3), Some(4)], "{:?}", sol.breaking_points());
}

#[test]
fn persistence_law_linear_neutral() {
    for a in [0.5, -0.8, 1.1] {
        let h = HistoryFunction::c1(-1.0, |t| (t + 0.2).sin(), |t| (t + 0.2).cos()).unwrap();
        let p = ScalarDelayProblem::neutral(move |_, _, d| a * d, h, 1.0, 6.0).unwrap();
        let sol = solve(&p).unwrap();
        let jumps = sol.jump_profile(1).unwrap();
        let j0 = jumps[0].1;
        assert!((j0 - (a * 0.8f64.cos() - 0.2f64.cos())).abs() < 1e-15);
        for (n, &(t, j)) in jumps.iter().enumerate() {
            assert_eq!(t, n as f64);
            let expect = a.powi(n as i32) * j0;
            assert!((j - expect).abs() <= 1e-9 * expect.abs(), "a={a} n={n}: {j} vs {expect}");
        }
    }
}

#[test]
fn residual_small_between_breaking_points() {
    let sol = generic_retarded(0.7, 1.5, -0.2, -0.3, 0.8, 4.0);
    for i in 0..100 {
        let t = 0.013 + 3.97 * i as f64 / 100.0;
        let r = sol.residual(t);
        assert!(r <= 1e-8 * (1.0 + sol.derivative(t, ndde_core::Side::Right).abs()), "t={t}: {r}");
    }
}

#[test]
fn step_halving_is_converged() {
    let history = || HistoryFunction::c1(-1.0, |t| (2.0 * t).cos(), |t| -2.0 * (2.0 * t).sin()).unwrap();
    let run = |n| {
        let p = ScalarDelayProblem::retarded(|y, yd| -0.5 * y + yd.sin(), history(), 1.0, 5.0)
            .unwrap()
            .with_steps_per_delay(n)
            .unwrap();
        solve(&p).unwrap().value(5.0)
    };
    let (coarse, fine) = (run(200), run(400));
    assert!((coarse - fine).abs() < 1e-8, "{coarse} vs {fine}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothing_law_generic(
        amp in 0.2f64..1.5,
        omega in 0.5f64..2.0,
        slope in -1.0f64..1.0,
        alpha in -1.0f64..0.5,
        beta in prop_oneof![-1.5f64..-0.6, 0.6f64..1.5],
    ) {
        let sol = generic_retarded(amp, omega, slope, alpha, beta, 4.0);
        let bp = sol.breaking_points();
        // The history slope must disagree with the equation at t = 0.
        let j0 = bp[0].jumps[0].unwrap();
        prop_assume!(j0.abs() > 0.2);
        // Higher-order jumps are ~ beta^k * cos(...) * j0; skip near-cancellations.
        for (k, bp) in bp.iter().enumerate().take(4).skip(1) {
            let j = bp.jumps[k].unwrap();
            prop_assume!(j.abs() > 1e-3);
        }
        for (k, bp) in bp.iter().enumerate().take(4) {
            prop_assert_eq!(bp.first_nonzero_order(&ZERO_JUMP), Some(k + 1), "{:?}", bp);
        }
    }

    #[test]
    fn persistence_law_generic(a in -0.95f64..0.95, phase in 0.0f64..3.0) {
        prop_assume!(a.abs() > 0.05);
        let h = HistoryFunction::c1(-1.0, move |t| (t + phase).sin(), move |t| (t + phase).cos()).unwrap();
        let sol = solve(&ScalarDelayProblem::neutral(move |_, _, d| a * d, h, 1.0, 6.0).unwrap()).unwrap();
        let jumps = sol.jump_profile(1).unwrap();
        let j0 = jumps[0].1;
        for (n, &(_, j)) in jumps.iter().enumerate() {
            let expect = a.powi(n as i32) * j0;
            prop_assert!((j - expect).abs() <= 1e-9 * expect.abs());
        }
    }
}

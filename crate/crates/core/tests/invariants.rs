//! Property tests for the look-back map, the coupled update and the metrics
//! identities.

use approx::assert_relative_eq;
use lsam::dual_loop::{step, ChainState, RhoMode, ScheduleSpec, StepDiagnostics};
use lsam::landscapes::{make_basin_landscape, make_double_well, make_quadratic, Objective};
use lsam::metrics::should_record;
use lsam::sam_map::{lookback_map, perturbation, sam_grad, sam_loss, shift_norm, SamParams};
use lsam::ParamVec;
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = ParamVec> {
    (-4.0..4.0f64, -4.0..4.0f64).prop_map(|(a, b)| ParamVec::from([a, b]))
}

proptest! {
    #[test]
    fn lookback_shift_is_at_most_rho(x in vec2(), rho in 0.0..1.0f64) {
        let obj = make_basin_landscape(0);
        let p = SamParams::with_default_gamma(rho, 2).unwrap();
        let t = lookback_map(&obj, &p, &x);
        let shift = t.distance(&x);
        prop_assert!(shift <= rho * (1.0 + 1e-12));
        prop_assert!((shift - shift_norm(&p, obj.grad(&x).norm())).abs() <= 1e-12 * (1.0 + rho));
    }

    #[test]
    fn zero_radius_is_identity(x in vec2()) {
        let obj = make_basin_landscape(0);
        let p = SamParams::off(2);
        prop_assert_eq!(lookback_map(&obj, &p, &x), x.clone());
        prop_assert_eq!(sam_loss(&obj, &p, &x), obj.eval(&x));
        prop_assert_eq!(sam_grad(&obj, &p, &x), obj.grad(&x));
    }

    #[test]
    fn perturbation_points_along_gradient(g in vec2(), rho in 0.01..1.0f64) {
        prop_assume!(g.norm() > 1e-3);
        let p = SamParams::new(rho, 1e-12).unwrap();
        let e = perturbation(&p, &g);
        prop_assert!(e.dot(&g) >= 0.0);
        assert_relative_eq!(e.norm(), rho, max_relative = 1e-8);
    }

    #[test]
    fn quadratic_sam_loss_closed_form(x in vec2(), rho in 0.0..0.5f64) {
        // f(x) = |x|^2 / 2 moves x radially by rho: f(T(x)) = (|x| + rho)^2 / 2.
        prop_assume!(x.norm() > 1e-3);
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        let p = SamParams::new(rho, 1e-14).unwrap();
        let expected = 0.5 * (x.norm() + rho).powi(2);
        assert_relative_eq!(sam_loss(&q, &p, &x), expected, max_relative = 1e-10);
    }

    #[test]
    fn anchor_recursion_and_identity(x in vec2(), y in vec2(), alpha in 0.05..1.0f64, lambda in 0.0..2.0f64, seed in 0u64..1000) {
        let q = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.3).unwrap();
        let sched = ScheduleSpec::esgd(0.5 / (1.0 + lambda), lambda, alpha).with_rho(RhoMode::Constant, 0.0);
        let state = ChainState::new(x.clone(), y.clone(), seed);
        let (next, diag) = step(&q, &sched, &SamParams::off(2), state).unwrap();
        // y_{t+1} = alpha x_{t+1} + (1 - alpha) y_t, so z_{t+1} = (1 - alpha)(x_{t+1} - y_t).
        let z_next = next.z();
        let mut expected = &next.x - &y;
        expected.scale(1.0 - alpha);
        prop_assert!(z_next.distance(&expected) <= 1e-12 * (1.0 + expected.norm()));
        // |grad f|^2 <= 2 |G|^2 + 2 lambda^2 |z|^2.
        let rhs = 2.0 * diag.g_norm_sq + 2.0 * lambda * lambda * diag.z_norm_sq;
        prop_assert!(diag.grad_norm_sq <= rhs * (1.0 + 1e-9) + 1e-300);
    }

    #[test]
    fn noise_free_step_descends_the_coupled_energy(x in vec2(), y in vec2()) {
        // With sigma = 0 and eta below 1/(L + lambda), one step decreases
        // Phi(x, y) = f(x) + lambda/2 |x - y|^2 in x for fixed y.
        let q = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.0).unwrap();
        let lambda = 1.0;
        let sched = ScheduleSpec::esgd(0.5 / (1.0 + lambda), lambda, 1.0);
        let before = StepDiagnostics::at(&q, &x, &y, lambda);
        let (next, _) = step(&q, &sched, &SamParams::off(2), ChainState::new(x.clone(), y.clone(), 0)).unwrap();
        let after = StepDiagnostics::at(&q, &next.x, &y, lambda);
        prop_assert!(after.phi <= before.phi + 1e-12);
    }

    #[test]
    fn stochastic_gradient_is_reproducible(x in vec2(), seed in 0u64..10_000) {
        let w = make_double_well(0.5).unwrap();
        let x1 = ParamVec::from([x[0]]);
        let n = lsam::rng::NoiseSeed(seed);
        prop_assert_eq!(w.stochastic_grad(&x1, n), w.stochastic_grad(&x1, n));
    }

    #[test]
    fn downsampling_keeps_early_and_sync_rows(t in 0u64..100_000, sync in any::<bool>()) {
        let kept = should_record(t, sync);
        prop_assert_eq!(kept, sync || t < 1000 || t % 10 == 0);
    }
}

#[test]
fn step_cap_rejects_large_steps() {
    let q = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.0).unwrap();
    let lambda = 1.0;
    let plain = ScheduleSpec::esgd(1.0 / (1.0 + lambda) * 1.01, lambda, 0.5);
    assert!(plain.validate(q.smoothness()).is_err());
    let perturbed =
        ScheduleSpec::esgd(1.0 / (4.0 * (1.0 + lambda)) * 1.01, lambda, 0.5).with_rho(RhoMode::Constant, 0.1);
    let err = perturbed.validate(q.smoothness()).unwrap_err().to_string();
    assert!(err.contains("1/(4(L+λ))"), "{err}");
    let at_cap = ScheduleSpec::esgd(1.0 / (4.0 * (1.0 + lambda)), lambda, 0.5).with_rho(RhoMode::Constant, 0.1);
    assert!(at_cap.validate(q.smoothness()).is_ok());
}

use ers_core::dynamics::{empirical_settling_time, integrate_scalar, ErsConfig};
use ers_core::linalg::{norm_inf, Matrix};
use ers_core::settle::{law_settling_time, tightest_bound};
use ers_core::specfun::reg_inc_beta;
use ers_core::AttractingLaw;
use proptest::prelude::*;

fn law_catalog() -> Vec<AttractingLaw> {
    vec![
        AttractingLaw::Sprl { kappa: 1.0, gamma: 0.5 },
        AttractingLaw::SprlAlt {
            rho: 1.0,
            kappa: 0.5,
            gamma: 0.3,
        },
        AttractingLaw::Dprl {
            kappa1: 1.0,
            kappa2: 2.0,
            gamma1: 0.4,
            gamma2: 1.8,
        },
        AttractingLaw::DprlAlt {
            rho: 2.0,
            kappa1: 1.0,
            kappa2: 1.0,
            gamma1: 0.5,
            gamma2: 1.5,
        },
        AttractingLaw::TwoPhasePE {
            rho: 1.0,
            kappa: 1.0,
            gamma1: 0.5,
            gamma2: 2.0,
            estar: 1.0,
        },
        AttractingLaw::PiecewiseExpA {
            rho: 0.5,
            kappa: 1.0,
            gamma1: 0.5,
            gamma2: 2.0,
            estar: 2.0,
            delta: 0.25,
        },
        AttractingLaw::PiecewiseExpB {
            rho: 1.0,
            kappa: 1.0,
            gamma1: 0.6,
            gamma2: 1.5,
            estar: 0.5,
            delta: 0.75,
        },
        AttractingLaw::FractionalExp {
            rho: 0.0,
            kappa: 1.0,
            alpha: 0.5,
            beta: 3.0,
            m: 2,
            estar: 1.0,
        },
    ]
}

fn config(law: AttractingLaw, dt: f64, horizon: f64) -> ErsConfig {
    ErsConfig {
        dt,
        ..ErsConfig::new(law, horizon)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn undisturbed_error_never_crosses_zero_and_never_grows(
        idx in 0usize..8,
        mag in -3.0f64..2.0,
        negative in any::<bool>(),
    ) {
        let law = law_catalog()[idx];
        let e0 = if negative { -(10f64.powf(mag)) } else { 10f64.powf(mag) };
        let trace = integrate_scalar(&config(law, 1e-3, 3.0), e0).unwrap();
        for w in trace.errors.windows(2) {
            prop_assert!(w[1] * e0 >= 0.0, "sign flip {} -> {}", w[0], w[1]);
            prop_assert!(w[1].abs() <= w[0].abs() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn exact_time_never_exceeds_uniform_bound(
        k1 in 0.2f64..4.0,
        k2 in 0.2f64..4.0,
        g1 in 0.1f64..0.95,
        g2 in 1.05f64..3.0,
        mag in -3.0f64..6.0,
    ) {
        let law = AttractingLaw::Dprl { kappa1: k1, kappa2: k2, gamma1: g1, gamma2: g2 };
        let exact = law_settling_time(&law, 10f64.powf(mag)).unwrap().unwrap();
        let bound = tightest_bound(&law).unwrap().unwrap();
        prop_assert!(exact.time <= bound.time * (1.0 + 1e-9), "{exact:?} vs {bound:?}");
    }

    #[test]
    fn incomplete_beta_is_monotone_in_x(
        x in 0.0f64..0.99,
        dx in 1e-6f64..0.01,
        p in 0.1f64..20.0,
        q in 0.1f64..20.0,
    ) {
        let lo = reg_inc_beta(x, p, q).unwrap();
        let hi = reg_inc_beta(x + dx, p, q).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo - 1e-15);
    }

    #[test]
    fn lu_solve_has_small_residual(
        entries in prop::collection::vec(-1.0f64..1.0, 25),
        rhs in prop::collection::vec(-10.0f64..10.0, 5),
    ) {
        // diagonal shift keeps the matrix well conditioned
        let a = Matrix::from_fn(5, 5, |i, j| entries[5 * i + j] + if i == j { 6.0 } else { 0.0 });
        let x = a.lu().unwrap().solve(&rhs);
        let r: Vec<f64> = a.matvec(&x).iter().zip(&rhs).map(|(ax, b)| ax - b).collect();
        prop_assert!(norm_inf(&r) <= 1e-12 * (1.0 + norm_inf(&rhs)));
    }
}

#[test]
fn halving_the_step_moves_settling_by_under_five_steps() {
    let dt = 1e-3;
    for law in law_catalog() {
        for e0 in [0.05, 1.0, 20.0] {
            let t = match law_settling_time(&law, e0).unwrap() {
                Some(exact) => exact.time,
                None => tightest_bound(&law).unwrap().unwrap().time,
            };
            let horizon = 1.5 * t + 1.0;
            let coarse = integrate_scalar(&config(law, dt, horizon), e0).unwrap();
            let fine = integrate_scalar(&config(law, dt / 2.0, horizon), e0).unwrap();
            let a = empirical_settling_time(&coarse, 1e-6).unwrap();
            let b = empirical_settling_time(&fine, 1e-6).unwrap();
            assert!((a - b).abs() < 5.0 * dt, "{law:?} e0={e0}: {a} vs {b}");
        }
    }
}

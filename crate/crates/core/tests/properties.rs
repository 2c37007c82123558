//! Randomized structural invariants, checked with proptest so failures
//! shrink to small witnesses: kernel normalization, sign structure of the
//! assembled dispersal operators, coefficient-bound soundness, sampled-orbit
//! interpolation, and the competitive order predicate.

use std::sync::Arc;

use nlcomp_core::domain::{
    assemble_dispersal, build_grid, build_kernel, Grid, KernelProfile, Regime,
};
use nlcomp_core::fields::{
    field_bounds, order_compare, CoefficientField, Order, SampledField, StateField,
};
use proptest::prelude::*;

fn regimes() -> impl Strategy<Value = Regime> {
    prop_oneof![
        Just(Regime::DirichletType),
        Just(Regime::NeumannType),
        Just(Regime::Periodic),
    ]
}

fn profiles() -> impl Strategy<Value = KernelProfile> {
    prop_oneof![Just(KernelProfile::SmoothBump), Just(KernelProfile::Cosine)]
}

/// Grid plus a kernel radius that always straddles a few lattice nodes.
fn geometry() -> impl Strategy<Value = (Regime, usize, f64, f64)> {
    (regimes(), 8usize..32, 1.0f64..3.0, 0.0f64..1.0).prop_map(|(regime, n, extent, frac)| {
        let spacing = extent / n as f64;
        let lo = 1.5 * spacing;
        let hi = 0.45 * extent;
        (regime, n, extent, lo + frac * (hi - lo))
    })
}

fn build(regime: Regime, n: usize, extent: f64) -> Arc<Grid<f64>> {
    Arc::new(build_grid(1, vec![extent], vec![n], regime).unwrap())
}

proptest! {
    /// The discrete kernel is normalized so its lattice quadrature mass is
    /// one, whatever the geometry, support radius, profile, or regime.
    #[test]
    fn kernel_mass_is_one((regime, n, extent, radius) in geometry(), profile in profiles()) {
        let grid = build(regime, n, extent);
        let kernel = build_kernel(&grid, radius, profile).unwrap();
        let mass = kernel.discrete_mass();
        prop_assert!((mass - 1.0).abs() < 1e-12, "mass = {mass}");
    }

    /// Assembled operators have nonnegative off-diagonal entries, and their
    /// row sums reflect the regime: exactly zero for the no-flux and wrapped
    /// regimes (constants are annihilated), nonpositive for the absorbing
    /// regime (mass leaks through the boundary strip).
    #[test]
    fn operator_sign_structure((regime, n, extent, radius) in geometry(), profile in profiles()) {
        let grid = build(regime, n, extent);
        let kernel = Arc::new(build_kernel(&grid, radius, profile).unwrap());
        let op = assemble_dispersal(&grid, &kernel).unwrap();
        let a = op.matrix();
        for i in 0..n {
            let mut row_sum = 0.0f64;
            for j in 0..n {
                let entry = a.get(i, j);
                if i != j {
                    prop_assert!(entry >= 0.0, "negative coupling at ({i},{j}): {entry}");
                }
                row_sum += entry;
            }
            match regime {
                Regime::DirichletType => prop_assert!(
                    row_sum <= 1e-12,
                    "absorbing row {i} sums to {row_sum}"
                ),
                _ => prop_assert!(
                    row_sum.abs() <= 1e-12,
                    "conservative row {i} sums to {row_sum}"
                ),
            }
        }
    }

    /// Scanned bounds of `base + amp*sin(2 pi t/T)*cos(pi x/L)` stay inside
    /// the analytic envelope and cover most of it.
    #[test]
    fn coefficient_bounds_are_sound(
        base in -2.0f64..2.0,
        amp in 0.0f64..1.5,
        n in 8usize..24,
    ) {
        let grid = build(Regime::NeumannType, n, 2.0);
        let source = format!("{base} + {amp}*sin(2*pi*t/T)*cos(pi*x/2)");
        let field = CoefficientField::from_expr(1.0, &source).unwrap();
        let bound = field_bounds(&field, &grid, 128).unwrap();
        prop_assert!(bound.lower >= base - amp - 1e-12);
        prop_assert!(bound.upper <= base + amp + 1e-12);
        // The scan hits 128 times and every node, so it cannot miss the
        // envelope by more than the sampling defect.
        prop_assert!(bound.upper >= base + 0.9 * amp - 1e-9);
        prop_assert!(bound.lower <= base - 0.9 * amp + 1e-9);
    }

    /// Periodic interpolation reproduces the stored slices exactly at the
    /// sample times and wraps around the period.
    #[test]
    fn sampled_field_interpolates_its_own_samples(
        values in proptest::collection::vec(
            proptest::collection::vec(0.01f64..5.0, 6),
            4..12,
        ),
        period in 0.5f64..3.0,
    ) {
        let m = values.len();
        let field = SampledField::new(period, values.clone()).unwrap();
        for (k, slice) in values.iter().enumerate() {
            let t = period * k as f64 / m as f64;
            for (node, &expect) in slice.iter().enumerate() {
                let got = field.value_at(t, node);
                prop_assert!((got - expect).abs() < 1e-12 * (1.0 + expect));
                let wrapped = field.value_at(t + period, node);
                prop_assert!((wrapped - got).abs() < 1e-9 * (1.0 + got.abs()));
            }
        }
    }

    /// The competitive order is reflexive, and mutual comparability at zero
    /// slack forces equality of the two states.
    #[test]
    fn competitive_order_is_a_partial_order(
        u1 in proptest::collection::vec(0.0f64..3.0, 10),
        v1 in proptest::collection::vec(0.0f64..3.0, 10),
        bump_u in proptest::collection::vec(0.0f64..0.5, 10),
        bump_v in proptest::collection::vec(0.0f64..0.5, 10),
    ) {
        let s1 = StateField::new(0.0, u1.clone(), v1.clone());
        let refl = order_compare(&s1, &s1, Order::Competitive, 0.0);
        prop_assert!(refl.holds);
        prop_assert!(refl.worst_violation <= 0.0);

        // Push the pair upward in the competitive order: more u, less v.
        let u2: Vec<f64> = u1.iter().zip(&bump_u).map(|(a, b)| a + b).collect();
        let v2: Vec<f64> = v1
            .iter()
            .zip(&bump_v)
            .map(|(a, b)| (a - b).max(0.0))
            .collect();
        let s2 = StateField::new(0.0, u2, v2);
        prop_assert!(order_compare(&s1, &s2, Order::Competitive, 0.0).holds);

        // Mutual order at zero slack means the states coincide.
        let forward = order_compare(&s1, &s2, Order::Competitive, 0.0);
        let backward = order_compare(&s2, &s1, Order::Competitive, 0.0);
        if forward.holds && backward.holds {
            prop_assert!(s1.sup_distance(&s2) == 0.0);
        }
    }

    /// Parsed arithmetic agrees with native evaluation on a family of
    /// closed-form expressions.
    #[test]
    fn expression_evaluation_matches_native_arithmetic(
        c0 in -3.0f64..3.0,
        c1 in -2.0f64..2.0,
        t in 0.0f64..2.0,
        x in -1.0f64..1.0,
    ) {
        let source = format!("{c0} + {c1}*cos(pi*x/2)*cos(2*pi*t/T)");
        let field = CoefficientField::from_expr(2.0, &source).unwrap();
        let expect = c0
            + c1
                * (std::f64::consts::FRAC_PI_2 * x).cos()
                * (std::f64::consts::PI * t).cos();
        let got = field.value(t, 0, [x, 0.0]);
        prop_assert!(
            (got - expect).abs() < 1e-12 * (1.0 + expect.abs()),
            "{got} vs {expect}"
        );
    }
}

//! Property tests for the spectral core invariants.

use kgslab::norms::{p_variation, p_variation_exhaustive};
use kgslab::radial::{
    forward_transform, inverse_transform, l2_inner, lq_norm, make_grid, RadialField,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_roundtrip_preserves_fields(values in field_strategy(127)) {
        let grid = make_grid(16.0, 127).unwrap();
        let f = RadialField::from_values(
            &grid,
            values.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
        )
        .unwrap();
        let back = inverse_transform(&forward_transform(&f));
        let scale = f.l2_norm();
        prop_assume!(scale > 1e-6);
        let err = back.sub(&f).unwrap().l2_norm() / scale;
        prop_assert!(err <= 1e-10, "roundtrip error {err}");
    }

    #[test]
    fn plancherel_pairing(values in field_strategy(127), other in field_strategy(127)) {
        let grid = make_grid(16.0, 127).unwrap();
        let mk = |vals: &[(f64, f64)]| {
            RadialField::from_values(
                &grid,
                vals.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
            )
            .unwrap()
        };
        let f = mk(&values);
        let g = mk(&other);
        let space = l2_inner(&f, &g).unwrap();
        let ff = forward_transform(&f);
        let gg = forward_transform(&g);
        // Dual-side pairing with the weighted measure.
        let dxi = grid.dxi();
        let mut dual = Complex64::new(0.0, 0.0);
        for (m, &xi) in grid.dual_nodes().iter().enumerate() {
            dual += ff.coeffs()[m] * gg.coeffs()[m].conj() * (xi * xi);
        }
        dual *= dxi / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
        let scale = f.l2_norm() * g.l2_norm();
        prop_assume!(scale > 1e-9);
        prop_assert!((space - dual).norm() <= 1e-10 * scale);
    }

    #[test]
    fn lq_norm_monotone_under_domination(values in field_strategy(63), q in 1.0f64..6.0) {
        let grid = make_grid(8.0, 63).unwrap();
        let f = RadialField::from_values(
            &grid,
            values.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
        )
        .unwrap();
        let g = f.scaled(Complex64::new(1.25, 0.0));
        prop_assert!(lq_norm(&f, q).unwrap() <= lq_norm(&g, q).unwrap() + 1e-14);
    }

    #[test]
    fn variation_dp_is_exhaustive_max(coeffs in proptest::collection::vec(-1.0f64..1.0, 2..10)) {
        let grid = make_grid(8.0, 31).unwrap();
        let base = RadialField::from_profile(&grid, |r| {
            Complex64::new((-r * r / 2.0).exp() * r, 0.0)
        });
        let seq: Vec<RadialField> = coeffs
            .iter()
            .map(|&c| base.scaled(Complex64::new(c, 0.0)))
            .collect();
        let dp = p_variation(&seq, 2.0).unwrap();
        let brute = p_variation_exhaustive(&seq, 2.0).unwrap();
        prop_assert!((dp - brute).abs() <= 1e-12 * brute.max(1.0));
    }
}

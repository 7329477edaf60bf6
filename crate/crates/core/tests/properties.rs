//! Property tests for the spectral core and the exact propagator.

use couette_core::field::{transform_forward, transform_inverse, Frame, SpectralField};
use couette_core::grid::make_grid;
use couette_core::norms::{
    apply_x_multiplier, compute_norms, hlog_norm, l2_norm, XMultiplier,
};
use couette_core::propagator::{propagate, relative_l2_error, PropagatorSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn even_dim() -> impl Strategy<Value = usize> {
    (4usize..20).prop_map(|k| 2 * k)
}

fn field_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip_is_identity((n, seed) in (even_dim(), any::<u64>())) {
        let grid = Arc::new(make_grid(n, n, PI, 2.0 / 3.0).unwrap());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let values: Vec<f64> =
            (0..grid.len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let f = transform_forward(&grid, &values).unwrap();
        let back = transform_inverse(&f);
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        for (a, b) in values.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
        prop_assert!(f.hermitian_defect() <= 1e-13);
    }

    #[test]
    fn parseval_split_and_hlog_lower_bound(values in field_values(12)) {
        let grid = Arc::new(make_grid(12, 12, PI, 2.0 / 3.0).unwrap());
        let f = transform_forward(&grid, &values).unwrap();
        let n = compute_norms(&f).unwrap();
        let lhs = n.l2 * n.l2;
        let rhs = n.nonzero_l2 * n.nonzero_l2 + n.zero_l2 * n.zero_l2;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        prop_assert!(n.hlog >= n.l2 * (1.0 - 1e-13));
        // quadrature of |f|² matches the spectral sum
        let quad: f64 = values.iter().map(|v| v * v).sum::<f64>() * grid.cell_area();
        prop_assert!((quad - lhs).abs() <= 1e-10 * lhs.max(1e-300));
    }

    #[test]
    fn projection_algebra(values in field_values(10)) {
        let grid = Arc::new(make_grid(10, 10, PI, 2.0 / 3.0).unwrap());
        let f = transform_forward(&grid, &values).unwrap();
        let p0 = apply_x_multiplier(&f, XMultiplier::ProjectZero);
        let pn = apply_x_multiplier(&f, XMultiplier::ProjectNonzero);
        let mut sum = p0.clone();
        sum.add_assign(&pn).unwrap();
        prop_assert!(l2_norm(&sum.sub(&f).unwrap()) <= 1e-14);
        prop_assert!(l2_norm(&apply_x_multiplier(&pn, XMultiplier::ProjectZero)) == 0.0);
        // hlog(P≠0 f) >= ln(e+1) ‖f_≠‖
        let f_ne = compute_norms(&f).unwrap().nonzero_l2;
        prop_assert!(hlog_norm(&pn) >= (std::f64::consts::E + 1.0).ln() * f_ne * (1.0 - 1e-12));
    }
}

fn mean_free_field(grid: &Arc<couette_core::GridSpec>, seed: u64) -> SpectralField {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut f = SpectralField::zeros(Arc::clone(grid), Frame::Sheared { offset: 0.0 });
    let half = (grid.nx() / 2) as i64;
    for a in 1..half {
        for m in (-half + 1)..half {
            let c = Complex64::new(
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
            );
            f.set_coeff(a, m, c).unwrap();
            f.set_coeff(-a, -m, c.conj()).unwrap();
        }
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagator_semigroup_and_monotone_decay(
        (seed, nu, t1, t2) in (any::<u64>(), 1e-4f64..0.5, 0.1f64..8.0, 0.1f64..8.0)
    ) {
        let grid = Arc::new(make_grid(16, 16, PI, 2.0 / 3.0).unwrap());
        let f = mean_free_field(&grid, seed);
        let mid = t1.min(t2);
        let end = t1 + t2;
        let direct = propagate(&f, &PropagatorSpec::new(nu, 0.0, end).unwrap()).unwrap();
        let first = propagate(&f, &PropagatorSpec::new(nu, 0.0, mid).unwrap()).unwrap();
        let composed = propagate(&first, &PropagatorSpec::new(nu, mid, end).unwrap()).unwrap();
        prop_assert!(relative_l2_error(&composed, &direct).unwrap() <= 1e-12);
        prop_assert!(l2_norm(&direct) <= l2_norm(&first) * (1.0 + 1e-14));
        prop_assert!(l2_norm(&first) <= l2_norm(&f) * (1.0 + 1e-14));
    }

    #[test]
    fn completed_square_pointwise_bound(
        (seed, nu, t) in (any::<u64>(), 1e-4f64..0.5, 0.1f64..12.0)
    ) {
        // |W̃(t)| <= exp(-α²νt³/21 - α²νt - η²νt/8) |ω̃_in| per mode
        let grid = Arc::new(make_grid(16, 16, PI, 2.0 / 3.0).unwrap());
        let f = mean_free_field(&grid, seed);
        let out = propagate(&f, &PropagatorSpec::new(nu, 0.0, t).unwrap()).unwrap();
        for (ix, &a) in grid.alpha().iter().enumerate() {
            for (jy, &e) in grid.eta().iter().enumerate() {
                let idx = grid.idx(ix, jy);
                let bound =
                    (-a * a * nu * t.powi(3) / 21.0 - a * a * nu * t - e * e * nu * t / 8.0).exp();
                prop_assert!(
                    out.coeffs()[idx].norm()
                        <= bound * f.coeffs()[idx].norm() * (1.0 + 1e-12)
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dyadic_blocks_resum_and_products_stay_hermitian(seed in any::<u64>()) {
        use couette_core::dyadic::{dealiased_product, lp_block, partition_for_grid, LpDomain};
        let grid = Arc::new(make_grid(24, 24, PI, 2.0 / 3.0).unwrap());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let values: Vec<f64> =
            (0..grid.len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let mut f = transform_forward(&grid, &values).unwrap();
        f.apply_dealias_mask();
        let p = partition_for_grid(LpDomain::Plane, &grid).unwrap();
        let mut sum = SpectralField::zeros(Arc::clone(&grid), f.frame());
        for j in 0..=p.j_max {
            sum.add_assign(&lp_block(&f, j, &p).unwrap()).unwrap();
        }
        let err = l2_norm(&sum.sub(&f).unwrap()) / l2_norm(&f).max(1e-300);
        prop_assert!(err <= 1e-12);
        let prod = dealiased_product(&f, &f).unwrap();
        prop_assert!(prod.hermitian_defect() <= 1e-13);
        // dealiased modes are exactly zero after the product
        for (idx, keep) in grid.mask().iter().enumerate() {
            if !keep {
                prop_assert!(prod.coeffs()[idx].norm() == 0.0);
            }
        }
    }
}

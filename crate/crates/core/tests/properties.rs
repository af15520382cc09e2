use fcmeta::disturbances::{sample_profile, FourierProfile, RandomizationRanges};
use fcmeta::estimators::ConcurrentBuffer;
use fcmeta::linalg::Mat;
use fcmeta::metalearn::ridge_solve;
use fcmeta::representation::{difference_coordinates, embed, RepresentationParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_rows, 1..=max_cols)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-3.0f64..3.0, c), r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_satisfies_normal_equations(
        phi in matrix(25, 12),
        seed in any::<u64>(),
        log_lambda in -3.0f64..1.0,
    ) {
        let lambda = 10f64.powf(log_lambda);
        let rows = phi.len();
        let cols = phi[0].len();
        let delta: Vec<f64> = (0..rows).map(|i| ((seed as f64 + i as f64) * 0.7).sin()).collect();
        let theta = ridge_solve(&Mat::from_rows(&phi).unwrap(), &delta, lambda).unwrap();
        // (Phi^T Phi + lambda I) theta - Phi^T delta, by explicit sums.
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for a in 0..cols {
            let mut lhs = lambda * theta[a];
            let mut rhs = 0.0;
            for r in 0..rows {
                let row_dot: f64 = (0..cols).map(|b| phi[r][b] * theta[b]).sum();
                lhs += phi[r][a] * row_dot;
                rhs += phi[r][a] * delta[r];
            }
            worst = worst.max((lhs - rhs).abs());
            scale = scale.max(rhs.abs());
        }
        prop_assert!(worst <= 1e-9 * scale, "residual {worst}");
    }

    #[test]
    fn fourier_signal_within_range_bounds(
        seed in any::<u64>(),
        amp in 0.0f64..5.0,
        freq in 0.0f64..6.0,
        off in 0.0f64..2.0,
        t in 0.0f64..100.0,
    ) {
        let ranges = RandomizationRanges {
            amplitude: [0.0, amp],
            frequency: [0.0, freq],
            offset: [-off, off],
            terms: [1, 4],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile: FourierProfile<f64> = sample_profile(&mut rng, &ranges, 3);
        let cap = off + 4.0 * amp;
        for (i, v) in profile.eval(t).iter().enumerate() {
            prop_assert!(v.abs() <= profile.magnitude_bounds()[i] + 1e-12);
            prop_assert!(v.abs() <= cap + 1e-12);
        }
    }

    #[test]
    fn buffer_respects_capacity_and_never_loses_rank(
        rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..60),
        capacity in 1usize..8,
    ) {
        let mut buf = ConcurrentBuffer::<f64>::new(capacity, None);
        let mut prev = 0.0;
        for (i, phi) in rows.iter().enumerate() {
            buf.admit(phi, &[i as f64], i as f64 * 0.01);
            prop_assert!(buf.len() <= capacity);
            let s = buf.min_singular_value();
            if buf.len() == capacity {
                prop_assert!(s + 1e-12 >= prev, "sigma_min fell from {prev} to {s}");
                prev = s;
            }
        }
    }

    #[test]
    fn features_stay_within_bound(
        seed in any::<u64>(),
        window in prop::collection::vec(-50.0f64..50.0, 12),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = RepresentationParams::<f64>::init(6, 1, &[16], 4, 2.5, &mut rng).unwrap();
        let states: Vec<&[f64]> = window.chunks(6).collect();
        let z = embed(&states, 1, 6).unwrap();
        let phi = p.featurize(&z).unwrap();
        prop_assert!(phi.max_abs() <= 2.5);
    }

    #[test]
    fn difference_coordinates_of_constant_history(
        x in prop::collection::vec(-5.0f64..5.0, 2),
        depth in 0usize..5,
    ) {
        let z: Vec<f64> = (0..=depth).flat_map(|_| x.clone()).collect();
        let d = difference_coordinates(&z, 2);
        prop_assert_eq!(&d[..2], &x[..]);
        // Cancellation error is bounded by |x| times the binomial weight sum 2^depth.
        prop_assert!(d[2..].iter().all(|v| v.abs() <= 1e-14 * 5.0 * 16.0));
    }
}

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weakbias::dephasing::{sweep_grid, thermal_weights, FockCutoff, Spacing, SweepAxis, SweepRecord, SweepSpec};
use weakbias::estimation::{binomial_model, mle_oracle, systematic_error_first_order, Observation, OracleOptions, OutcomeDistribution};
use weakbias::linalg::{expm_i_hermitian, kron, partial_trace_matrix, ComplexMatrix, HermitianOperator, PureState, Subsystem};
use weakbias::quantum::{measurement_distribution, weak_value};
use weakbias::report::{read_csv, to_csv_string};
use weakbias::validate::{random_basis, random_density, random_pure};

fn hermitian(dim: usize) -> impl Strategy<Value = HermitianOperator> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |v| {
        let m = ComplexMatrix::new(dim, dim, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap();
        HermitianOperator::new(m.hermitian_part()).unwrap()
    })
}

fn same_bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn any_number() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(f64::NAN),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_is_unitary((h, scale) in (2usize..7).prop_flat_map(|d| (hermitian(d), -30.0..30.0f64))) {
        let u = expm_i_hermitian(&h, scale).unwrap();
        let id = ComplexMatrix::identity(h.dim());
        prop_assert!((&u.adjoint() * &u).max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn partial_trace_recovers_product_factors(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(&mut rng, da);
        let b = random_density(&mut rng, db);
        let ab = kron(a.matrix(), b.matrix());
        let ka = partial_trace_matrix(&ab, (da, db), Subsystem::First).unwrap();
        let kb = partial_trace_matrix(&ab, (da, db), Subsystem::Second).unwrap();
        prop_assert!(ka.max_abs_diff(a.matrix()) < 1e-14);
        prop_assert!(kb.max_abs_diff(b.matrix()) < 1e-14);
    }

    #[test]
    fn measurement_probabilities_sum_to_one(seed in any::<u64>(), dim in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, dim);
        let basis = random_basis(&mut rng, dim);
        let p = measurement_distribution(&rho, &basis).unwrap();
        prop_assert!(p.iter().all(|x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    /// Weak values over a complete postselection basis, weighted by the
    /// postselection probabilities, average to the expectation value.
    #[test]
    fn weak_values_average_to_the_expectation(seed in any::<u64>(), dim in 2usize..5, h in hermitian(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = if dim == 4 { h } else { weakbias::validate::random_hermitian(&mut rng, dim) };
        let psi = random_pure(&mut rng, dim);
        let mut avg = C64::new(0.0, 0.0);
        for f in random_basis(&mut rng, dim) {
            let w = f.inner(&psi).norm_sqr();
            if w > 1e-10 {
                avg += weak_value(&a, &psi, &f).unwrap() * w;
            }
        }
        prop_assert!((avg - psi.expectation(&a)).norm() < 1e-9);
    }

    #[test]
    fn thermal_weights_are_normalized_up_to_the_tail(beta in 0.05..40.0f64) {
        let w = thermal_weights(beta, FockCutoff::Auto).unwrap();
        let total = w.total();
        prop_assert!(total <= 1.0 + 1e-15);
        prop_assert!(1.0 - total <= 1e-12);
        prop_assert!(w.weights.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn binomial_bias_equals_the_shift(eps in -1e-3..1e-3f64) {
        let model = binomial_model();
        let expt = OutcomeDistribution::new(vec![0.5 + eps, 0.5 - eps]).unwrap();
        let b = systematic_error_first_order(&expt, &model, 0.0).unwrap().bias_first_order;
        prop_assert!((b - eps).abs() <= 1e-15);
        let obs = Observation::new(&model, 0.0, expt).unwrap();
        let est = mle_oracle(&obs, &model, &OracleOptions::default()).unwrap();
        prop_assert!((est.estimate() - eps).abs() <= 1e-12);
    }

    #[test]
    fn sweep_grid_hits_endpoints_in_order(
        from in -1.0..1.0f64,
        width in 1e-6..2.0f64,
        points in 2usize..60,
        log in any::<bool>(),
    ) {
        let (from, spacing) = if log { (from.abs() + 1e-6, Spacing::Log) } else { (from, Spacing::Linear) };
        let to = from + width;
        let grid = sweep_grid(&SweepSpec { axis: SweepAxis::G, from, to, points, spacing }).unwrap();
        prop_assert_eq!(grid.len(), points);
        prop_assert_eq!(grid[0], from);
        prop_assert_eq!(grid[points - 1], to);
        prop_assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_round_trip_is_bit_exact(
        values in prop::collection::vec(any_number(), 9),
        name in "[a-z_]{1,8}",
        oracle in any::<bool>(),
    ) {
        let r = SweepRecord {
            param_name: name,
            param_value: values[0],
            dg_n: values[1],
            dg_p: values[2],
            ratio: values[3],
            postselect_prob: values[4],
            fisher_n: values[5],
            fisher_p: values[6],
            dg_n_oracle: oracle.then_some(values[7]),
            dg_p_oracle: oracle.then_some(values[8]),
        };
        let text = to_csv_string(std::slice::from_ref(&r), oracle);
        let back = read_csv(text.as_bytes()).unwrap().pop().unwrap();
        prop_assert_eq!(&back.param_name, &r.param_name);
        let pairs = [
            (back.param_value, r.param_value),
            (back.dg_n, r.dg_n),
            (back.dg_p, r.dg_p),
            (back.ratio, r.ratio),
            (back.postselect_prob, r.postselect_prob),
            (back.fisher_n, r.fisher_n),
            (back.fisher_p, r.fisher_p),
        ];
        for (a, b) in pairs {
            prop_assert!(same_bits(a, b), "{a:e} vs {b:e}");
        }
        prop_assert_eq!(back.dg_n_oracle.is_some(), oracle);
        prop_assert_eq!(to_csv_string(&[back], oracle), text);
    }
}

#[test]
fn pure_state_rejects_unnormalized_input() {
    assert!(PureState::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
}

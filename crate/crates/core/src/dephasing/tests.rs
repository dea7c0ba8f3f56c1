use super::*;
use crate::estimation::ParametricModel;
use crate::linalg::partial_trace;
use crate::linalg::Subsystem;
use crate::quantum::measurement_distribution;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn thermal_weights_closed_form() {
    let w = thermal_weights(1.0, FockCutoff::Auto).unwrap();
    assert_eq!(w.n_max, 28);
    assert!((w.weights[0] - 0.632_120_558_828_557_7).abs() < 1e-15);
    assert!((w.weights[1] - 0.232_544_157_934_830_3).abs() < 1e-15);
    let total = w.total();
    assert!(total <= 1.0 && total >= 1.0 - 1e-12);
}

#[test]
fn ground_state_limit() {
    let w = thermal_weights(50.0, FockCutoff::Fixed(5)).unwrap();
    assert!((w.weights[0] - 1.0).abs() < 1e-15);
    assert!(w.weights[1..].iter().all(|&x| x < 2e-22));
}

#[test]
fn nonpositive_beta_is_rejected() {
    assert!(thermal_weights(0.0, FockCutoff::Auto).is_err());
    assert!(thermal_weights(-1.0, FockCutoff::Auto).is_err());
}

#[test]
fn moment_cutoff_exceeds_weight_cutoff() {
    assert_eq!(moment_cutoff(1.0).unwrap(), 36);
    assert!(moment_cutoff(0.3).unwrap() >= thermal_cutoff(0.3).unwrap());
}

#[test]
fn no_coupling_leaves_state() {
    let p = DephasingParams {
        g: 0.0,
        eps_d: 0.0,
        ..DephasingParams::default()
    };
    let phi = evolve_joint_exact(&p, &pauli::plus(), 3).unwrap();
    let start = pauli::plus().kron(&pauli::plus());
    assert!((phi.inner(&start).norm() - 1.0).abs() < 1e-15);
}

#[test]
fn pure_mixture_without_dephasing() {
    let p = DephasingParams {
        eps_d: 0.0,
        beta: 0.2,
        ..DephasingParams::default()
    };
    let rho = joint_state_exact(&p, &pauli::plus()).unwrap();
    assert!((rho.purity() - 1.0).abs() < 1e-12);
}

#[test]
fn default_joint_state_is_valid() {
    let rho = joint_state_exact(&DephasingParams::default(), &pauli::plus()).unwrap();
    assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    assert!(rho.min_eigenvalue().unwrap() >= -1e-12);
}

#[test]
fn defaults_match_high_precision_reference() {
    // references from a 40-digit evaluation of the same model
    let r = bias_point(&DephasingParams::default(), false).unwrap();
    assert!(rel(r.dg_n, 5.819_767_066_1e-6) < 1e-9, "dg_n = {:e}", r.dg_n);
    assert!(rel(r.dg_p, 5.820_932e-9) < 1e-6, "dg_p = {:e}", r.dg_p);
    assert!(rel(r.ratio, 1.0002e-3) < 1e-4, "ratio = {:e}", r.ratio);
    assert!((r.fisher_n - 2.0).abs() < 1e-3, "F_n = {}", r.fisher_n);
    assert!(rel(r.fisher_p, 1.9992e6) < 1e-4, "F_p = {}", r.fisher_p);
}

#[test]
fn zero_dephasing_has_no_bias() {
    let p = DephasingParams {
        eps_d: 0.0,
        ..DephasingParams::default()
    };
    let std_arm = distributions_standard(&p).unwrap();
    assert_eq!(
        std_arm.observation.expt().probabilities(),
        std_arm.ideal.distribution(p.g).unwrap().probabilities()
    );
    let r = bias_point(&p, true).unwrap();
    assert_eq!((r.dg_n, r.dg_p), (0.0, 0.0));
    assert!(r.ratio.is_nan());
    assert_eq!(r.dg_n_oracle, Some(0.0));
}

#[test]
fn unrotated_basis_is_uninformative() {
    let p = DephasingParams {
        theta: 0.0,
        ..DephasingParams::default()
    };
    assert!(matches!(
        distributions_standard(&p),
        Err(Error::UninformativeBasis { .. })
    ));
}

#[test]
fn postselecting_on_the_initial_state_kills_amplification() {
    let p = DephasingParams {
        delta: std::f64::consts::FRAC_PI_2,
        ..DephasingParams::default()
    };
    let setup = setup_for(&p, Arm::Postselected).unwrap();
    assert!(setup.weak_value().unwrap().norm() < 1e-12);
    assert!(matches!(
        crate::estimation::systematic_error_postselected(&setup),
        Err(Error::UninformativeModel { .. })
    ));
}

#[test]
fn postselection_probability_is_sin_squared_delta() {
    let p = DephasingParams::default();
    let arm = distributions_postselected(&p).unwrap();
    let s2 = p.delta.sin().powi(2);
    assert!(rel(arm.postselect_prob, s2) < 0.05, "{:e}", arm.postselect_prob);
}

#[test]
fn coupling_model_matches_density_pipeline() {
    // Tr_S of the mixed joint state, measured in the rotated basis
    let p = DephasingParams::default();
    let rho = joint_state_exact(&p, &Arm::Standard.initial_system()).unwrap();
    let probe = partial_trace(&rho, (2, 2), Subsystem::Second).unwrap();
    let direct = measurement_distribution(&probe, &probe_basis(p.theta)).unwrap();
    let arm = distributions_standard(&p).unwrap();
    for (a, b) in direct.iter().zip(arm.observation.expt().iter()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn first_branch_matches_taylor_series() {
    let p = DephasingParams::default();
    let phi = evolve_joint_exact(&p, &pauli::plus(), 1).unwrap();
    let generator = coupling().scale(p.g).add(&branch_generator(&p, 1));
    let start = pauli::plus().kron(&pauli::plus());
    let mut term = start.amplitudes().to_vec();
    let mut sum = term.clone();
    for k in 1..40 {
        term = generator
            .matrix()
            .apply(&term)
            .into_iter()
            .map(|z| z * crate::linalg::Complex64::new(0.0, -1.0 / k as f64))
            .collect();
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    for (a, b) in phi.amplitudes().iter().zip(&sum) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn doubling_delta_doubles_ratio() {
    let a = bias_point(&DephasingParams::default(), false).unwrap();
    let b = bias_point(
        &DephasingParams {
            delta: 2e-3,
            ..DephasingParams::default()
        },
        false,
    )
    .unwrap();
    assert!((b.ratio / a.ratio - 2.0).abs() < 0.05);
}

#[test]
fn sweep_preserves_grid_order() {
    let spec = SweepSpec {
        axis: SweepAxis::Delta,
        from: 1e-4,
        to: 1e-2,
        points: 7,
        spacing: Spacing::Log,
    };
    let rows = sweep(&DephasingParams::default(), &spec, false).unwrap();
    let grid = sweep_grid(&spec).unwrap();
    assert_eq!(rows.len(), 7);
    for (r, v) in rows.iter().zip(&grid) {
        assert_eq!(r.param_value, *v);
        assert_eq!(r.param_name, "delta");
    }
    assert_eq!(grid[0], 1e-4);
    assert_eq!(grid[6], 1e-2);
}

#[test]
fn failing_points_become_nan_rows() {
    let spec = SweepSpec {
        axis: SweepAxis::Theta,
        from: 0.0,
        to: 0.4,
        points: 3,
        spacing: Spacing::Linear,
    };
    let rows = sweep(&DephasingParams::default(), &spec, false).unwrap();
    assert!(rows[0].dg_n.is_nan());
    assert!(rows[1].dg_n.is_finite());
}

#[test]
fn sweep_spec_errors() {
    let bad_points = SweepSpec {
        axis: SweepAxis::G,
        from: 0.0,
        to: 1.0,
        points: 1,
        spacing: Spacing::Linear,
    };
    assert!(sweep_grid(&bad_points).is_err());
    let bad_log = SweepSpec {
        points: 5,
        spacing: Spacing::Log,
        ..bad_points
    };
    assert!(sweep_grid(&bad_log).is_err());
}

#[test]
fn cutoff_parses_auto_and_integers() {
    assert_eq!("auto".parse::<FockCutoff>().unwrap(), FockCutoff::Auto);
    assert_eq!("40".parse::<FockCutoff>().unwrap(), FockCutoff::Fixed(40));
    for bad in ["0", "-3", "many", ""] {
        assert!(bad.parse::<FockCutoff>().is_err(), "{bad}");
    }
    assert_eq!(FockCutoff::Fixed(7).to_string().parse::<FockCutoff>().unwrap(), FockCutoff::Fixed(7));
}

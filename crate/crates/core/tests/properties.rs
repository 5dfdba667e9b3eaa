use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use optomech::gaussian::symplectic;
use optomech::{
    build_drift, coherence_difference, coherence_one_mode, f_entropy, output_covariance,
    reconstruct_mechanical, solve_steady_state, stability_routh_hurwitz, stability_spectral,
    symplectic_eigenvalues, symplectic_eigenvalues_closed_form, DetectionParams, Error,
    GaussianState, SystemParams, Verdict,
};
use proptest::prelude::*;

fn symplectic_strategy() -> impl Strategy<Value = Matrix4<f64>> {
    (
        0.0..std::f64::consts::TAU,
        -1.2..1.2f64,
        0.0..std::f64::consts::PI,
        -1.2..1.2f64,
        -1.2..1.2f64,
        0.0..std::f64::consts::TAU,
    )
        .prop_map(|(t0, r1, b, r12, r0, t1)| {
            symplectic::rotation(0, t0)
                * symplectic::squeezer(1, r1)
                * symplectic::beam_splitter(b)
                * symplectic::two_mode_squeezer(r12)
                * symplectic::squeezer(0, r0)
                * symplectic::rotation(1, t1)
        })
}

prop_compose! {
    fn physical_state()(
        s in symplectic_strategy(),
        nu1 in 1.0..30.0f64,
        nu2 in 1.0..30.0f64,
        d in prop::array::uniform4(-4.0..4.0f64),
    ) -> (Matrix4<f64>, Vector4<f64>) {
        let thermal = Matrix4::from_diagonal(&Vector4::new(nu1, nu1, nu2, nu2));
        (s * thermal * s.transpose(), Vector4::from(d))
    }
}

prop_compose! {
    fn random_params()(
        gamma_m in 1e-3..0.1f64,
        kappa in 0.05..5.0f64,
        delta0 in -2.0..2.0f64,
        log_g0 in -5.0..-2.0f64,
        drive_e in 0.0..1000.0f64,
        n_th in 0.0..100.0f64,
    ) -> SystemParams {
        SystemParams::new(gamma_m, kappa, delta0, 10f64.powf(log_g0), drive_e, n_th)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn coherence_gap_is_mutual_information((v, d) in physical_state()) {
        let r = coherence_difference(&GaussianState::two_mode(&v, &d).unwrap()).unwrap();
        prop_assert!((r.delta_c - r.mutual_info).abs() <= 1e-9);
        prop_assert!(r.mutual_info >= -1e-12);
    }

    #[test]
    fn closed_form_matches_general_eigenvalues((v, _) in physical_state()) {
        let (n1, n2) = symplectic_eigenvalues_closed_form(&v).unwrap();
        let general = symplectic_eigenvalues(&GaussianState::two_mode(&v, &Vector4::zeros()).unwrap())
            .unwrap();
        let scale = v.norm();
        prop_assert!((n1 - general.nus[0]).abs() <= 1e-9 * scale, "{n1} vs {:?}", general.nus);
        prop_assert!((n2 - general.nus[1]).abs() <= 1e-9 * scale, "{n2} vs {:?}", general.nus);
    }

    #[test]
    fn symplectic_spectrum_is_invariant((v, _) in physical_state(), s in symplectic_strategy()) {
        let a = symplectic_eigenvalues_closed_form(&v).unwrap();
        let b = symplectic_eigenvalues_closed_form(&(s * v * s.transpose())).unwrap();
        let scale = v.norm() * s.norm().powi(2);
        prop_assert!((a.0 - b.0).abs() <= 1e-9 * scale);
        prop_assert!((a.1 - b.1).abs() <= 1e-9 * scale);
    }

    #[test]
    fn local_rotations_preserve_coherence_gap(
        (v, d) in physical_state(),
        t0 in 0.0..std::f64::consts::TAU,
        t1 in 0.0..std::f64::consts::TAU,
    ) {
        let r = symplectic::rotation(0, t0) * symplectic::rotation(1, t1);
        let before = coherence_difference(&GaussianState::two_mode(&v, &d).unwrap()).unwrap();
        let after =
            coherence_difference(&GaussianState::two_mode(&(r * v * r.transpose()), &(r * d)).unwrap())
                .unwrap();
        prop_assert!((before.mutual_info - after.mutual_info).abs() <= 1e-8);
        prop_assert!((before.delta_c - after.delta_c).abs() <= 1e-8);
        // Phase rotations also leave each occupation unchanged.
        prop_assert!((before.c_tot - after.c_tot).abs() <= 1e-8 * (1.0 + before.c_tot.abs()));
    }

    #[test]
    fn displacement_only_moves_occupation_terms((v, d) in physical_state()) {
        let centred = coherence_difference(&GaussianState::two_mode(&v, &Vector4::zeros()).unwrap())
            .unwrap();
        let shifted = coherence_difference(&GaussianState::two_mode(&v, &d).unwrap()).unwrap();
        prop_assert_eq!(centred.nu1, shifted.nu1);
        prop_assert_eq!(centred.nu2, shifted.nu2);
        prop_assert!((centred.mutual_info - shifted.mutual_info).abs() <= 1e-12);
        prop_assert!(shifted.c_mec >= centred.c_mec - 1e-12);
        prop_assert!(shifted.c_opt >= centred.c_opt - 1e-12);
    }

    #[test]
    fn thermal_states_are_incoherent(n in 0.0..200.0f64) {
        let v = Matrix2::identity() * (2.0 * n + 1.0);
        prop_assert!(coherence_one_mode(&v, &Vector2::zeros()).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn entropy_function_is_increasing_and_concave(x in 1.0..1e4f64, h in 1e-3..10.0f64) {
        let f = |x: f64| f_entropy(x).unwrap();
        prop_assert!(f(x + h) > f(x));
        let mid = f(x + h / 2.0);
        prop_assert!(mid >= 0.5 * (f(x) + f(x + h)) - 1e-12 * mid.abs());
    }

    #[test]
    fn detection_round_trip(
        (v, _) in physical_state(),
        log_g in -3.0..1.0f64,
        kappa2 in 0.01..10.0f64,
    ) {
        let v_mec = v.fixed_view::<2, 2>(0, 0).into_owned();
        let g = 10f64.powf(log_g);
        let det = DetectionParams { kappa2, g2: g * (2.0 * kappa2).sqrt(), delta2: 1.0 };
        let out = output_covariance(&v_mec, &det).unwrap();
        let back = reconstruct_mechanical(&out.v_out, &det).unwrap();
        prop_assert!((back - v_mec).abs().max() <= 1e-9 * v_mec.abs().max() / (g * g).min(1.0));
        prop_assert!(out.above_noise_floor());
    }

    #[test]
    fn routh_hurwitz_matches_spectrum(p in random_params()) {
        let s = solve_steady_state(&p).unwrap();
        let rh = stability_routh_hurwitz(&p, &s);
        prop_assume!(rh.verdict != Verdict::Marginal);
        let spectral = stability_spectral(&build_drift(&p, &s)).unwrap();
        prop_assume!(spectral.abscissa.abs() > 1e-8);
        prop_assert_eq!(rh.is_stable(), spectral.stable);
    }
}

#[test]
fn sub_vacuum_output_is_rejected() {
    let det = DetectionParams::new(0.1, 0.01).unwrap();
    let v_out = Matrix2::identity() * 0.5;
    assert!(matches!(
        reconstruct_mechanical(&v_out, &det),
        Err(Error::InconsistentMeasurement { .. })
    ));
}

#[test]
fn unphysical_state_is_flagged() {
    let v = Matrix4::identity() * 0.5;
    let state = GaussianState::two_mode(&v, &Vector4::zeros()).unwrap();
    let spectrum = symplectic_eigenvalues(&state).unwrap();
    assert!(!spectrum.is_physical());
    assert!(coherence_difference(&state).is_err());
}

use std::f64::consts::{FRAC_1_PI, PI};

use proptest::prelude::*;

use nhssh::fock::{self, sdsc_state, CavityParams, PhotonState, SdscParams};
use nhssh::lattice::{bulk_dispersion, obc_spectrum, DressedHoppings, LatticeParams};
use nhssh::meanfield::{renormalization_factor, self_consistent_solve, solve_from, SolverConfig};
use nhssh::metrology::{moments, nonclassicality_ort, phase_encode, qfi_phase_estimation, NonclassicalityVariant};
use nhssh::phasespace::{fidelity, linspace, wigner, wigner_point};
use nhssh::response::{default_omega_axis, photon_spectral, ResponseConfig};
use nhssh::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn small_state() -> impl Strategy<Value = PhotonState> {
    (-0.6..0.6f64, -1.2..1.2f64, -1.2..1.2f64, -1.5..1.5f64, -1.5..1.5f64).prop_map(|(r, lr, li, ar, ai)| {
        sdsc_state(&SdscParams::new(c(r, 0.0), c(lr, li), c(ar, ai)), 50).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_unitary_on_lower_block(re in -2.8..2.8f64, im in -2.8..2.8f64, theta in -4.0..4.0f64) {
        let z = c(re, im);
        prop_assume!(z.norm() <= 4.0);
        let d = fock::displacement(z, 60).unwrap();
        prop_assert!(d.unitarity_defect(30) < 1e-8);
        let s = fock::squeeze(z * 0.25, 60).unwrap();
        prop_assert!(s.unitarity_defect(30) < 1e-8);
        let p = fock::peierls_exponential(theta, 60).unwrap();
        prop_assert!(p.unitarity_defect(30) < 1e-8);
    }

    #[test]
    fn fidelity_is_symmetric_and_phase_blind(a in small_state(), b in small_state(), pa in 0.0..6.3f64, pb in 0.0..6.3f64) {
        let f = fidelity(&a, &b);
        prop_assert!((f - fidelity(&b, &a)).abs() < 1e-14);
        prop_assert!((f - fidelity(&a.with_global_phase(pa), &b.with_global_phase(pb))).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn qfi_ignores_phase_encoding(s in small_state(), phi in -PI..PI) {
        let q = qfi_phase_estimation(&s);
        prop_assert!((q - qfi_phase_estimation(&phase_encode(&s, phi))).abs() < 1e-10);
    }

    #[test]
    fn corrected_nonclassicality_is_phase_invariant(s in small_state(), phi in -PI..PI) {
        let v = NonclassicalityVariant::MomentCorrected;
        let n0 = nonclassicality_ort(&s, v);
        prop_assert!((n0 - nonclassicality_ort(&s.with_global_phase(phi), v)).abs() < 1e-12);
        prop_assert!((n0 - nonclassicality_ort(&phase_encode(&s, phi), v)).abs() < 1e-10);
    }

    #[test]
    fn literal_nonclassicality_rotates_its_third_term(s in small_state(), phi in -PI..PI) {
        let m = moments(&s);
        let rot = C64::from_polar(1.0, phi);
        let expected = m.mean_n - m.mean_a.norm_sqr() + (m.mean_a * rot - m.mean_a * m.mean_a * rot * rot).norm();
        let got = nonclassicality_ort(&phase_encode(&s, phi), NonclassicalityVariant::Literal);
        prop_assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn obc_spectra_pair_chirally(
        v in 0.2..2.0f64, gamma in 0.0..1.6f64, l in 3usize..14,
        e in (0.5..1.0f64, -0.3..0.3f64), f in (0.5..1.0f64, -0.3..0.3f64),
    ) {
        let lp = LatticeParams::new(v, 1.0, gamma, l, 0.5).unwrap();
        let bare = DressedHoppings::bare(&lp);
        // arbitrary complex dressings stand in for any g, b0
        let d = DressedHoppings {
            v_plus: bare.v_plus * c(e.0, e.1),
            v_minus: bare.v_minus * c(e.0, -e.1),
            w_left: bare.w_left * c(f.0, f.1),
            w_right: bare.w_right * c(f.0, -f.1),
        };
        let spec = obc_spectrum(&lp, &d).unwrap();
        let scale = spec.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for z in &spec.eigenvalues {
            let partner = spec.eigenvalues.iter().map(|y| (y + z).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(partner < 1e-8 * scale, "no partner for {z}: {partner:e}");
        }
    }

    #[test]
    fn hermitian_dispersion_matches_bloch_oracle(v in -2.0..2.0f64, w in -2.0..2.0f64, k in -PI..PI) {
        let lp = LatticeParams { v, w, gamma: 0.0, l: 4, a0: 1.0, b0: 0.5 };
        let (eps, minus) = bulk_dispersion(&DressedHoppings::bare(&lp), k);
        // H(k) = [[0, v - w e^{-ik}], [v - w e^{ik}, 0]] has eigenvalues +-|v - w e^{ik}|
        let oracle = (c(v, 0.0) - w * C64::from_polar(1.0, k)).norm();
        prop_assert!((eps.norm() - oracle).abs() < 1e-10);
        prop_assert!(eps.im.abs() < 1e-10);
        prop_assert!((eps + minus).norm() < 1e-14);
    }

    #[test]
    fn spectral_function_is_non_negative(v in 0.8..1.8f64, g in 0.5..15.0f64, b0 in 0.2..0.8f64) {
        let lp = LatticeParams::new(v, 1.0, 4.0 / 3.0, 24, b0).unwrap();
        prop_assume!(v > 2.0 / 3.0 + 0.05);
        let cp = CavityParams::new(1.0, g, 20).unwrap();
        let d = DressedHoppings::bare(&lp);
        let axis = default_omega_axis(&cp, &d);
        let a = photon_spectral(&lp, &cp, &d, &axis, &ResponseConfig::for_cavity(&cp)).unwrap();
        prop_assert!(a.values.iter().all(|&x| x >= -1e-12));
        prop_assert!(a.total_weight().is_finite());
    }
}

#[test]
fn vacuum_wigner_origin_and_normalization() {
    let vac = PhotonState::vacuum(60).unwrap();
    assert!((wigner_point(&vac, 0.0, 0.0) - FRAC_1_PI).abs() < 1e-6);
    let axis = linspace(-6.0, 6.0, 121);
    for s in [
        vac,
        PhotonState::coherent(c(1.0, -0.5), 60).unwrap(),
        sdsc_state(&SdscParams::new(c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)), 60).unwrap(),
        fock::cat_state(c(1.5, 0.0), 60).unwrap(),
    ] {
        assert!((wigner(&s, &axis, &axis).normalization() - 1.0).abs() < 0.02);
    }
}

#[test]
fn renormalization_factor_is_one_at_zero_distance() {
    let s = sdsc_state(&SdscParams::new(c(0.3, 0.0), c(0.2, -0.4), c(1.1, 0.0)), 60).unwrap();
    assert_eq!(renormalization_factor(&s, 11.1, 185, 0.0).unwrap(), c(1.0, 0.0));
}

#[test]
fn qfi_vacuum_and_coherent() {
    assert!(qfi_phase_estimation(&PhotonState::vacuum(60).unwrap()).abs() < 1e-12);
    for alpha in [c(0.5, 0.0), c(1.0, 1.0), c(0.0, -2.0)] {
        let q = qfi_phase_estimation(&PhotonState::coherent(alpha, 60).unwrap());
        assert!((q - 2.0 * alpha.norm_sqr()).abs() < 1e-6, "{alpha}: {q}");
    }
}

#[test]
fn converged_solution_is_a_fixed_point() {
    let lp = LatticeParams::new(1.5, 1.0, 4.0 / 3.0, 30, 0.3).unwrap();
    let cp = CavityParams::new(0.5, 4.0, 30).unwrap();
    let cfg = SolverConfig::default();
    let sol = self_consistent_solve(&lp, &cp, &cfg).unwrap();
    assert!(sol.converged);
    let again = solve_from(&lp, &cp, &SolverConfig { max_iter: 1, ..cfg }, sol.hoppings).unwrap();
    assert!(again.residual < 2.0 * cfg.tol, "{}", again.residual);
}

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qcs_core::estimator::{qcs_from_distribution, CountDistribution};
use qcs_core::fock::{
    self, from_gaussian, purity_fock, qcs_direct, qcs_two_copy, squeezed_vacuum_ket, tmsv_ket,
    two_copy_marginal, FockBasis, FockDensityOperator, FockKet, FockState, LadderOps,
    PassiveUnitary,
};
use qcs_core::gaussian::{bs_balanced_modes, bs_symmetric_modes, qcs_gaussian, GaussianState};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(Vxx, Vxp, Vpp)` of a single-mode state, symmetrised.
fn fock_covariance(state: &FockState) -> (f64, f64, f64) {
    let (rho, _) = state.to_density().with_cutoff(state.cutoff() + 2);
    let ops = LadderOps::new(rho.cutoff());
    let m = rho.matrix();
    let tr = rho.trace();
    let ev = |o: &DMatrix<Complex64>| (m * o).trace().re / tr;
    let (x, p) = (&ops.x, &ops.p);
    let sym = (x * p + p * x) * c(0.5);
    (
        ev(&(x * x)) - ev(x).powi(2),
        ev(&sym) - ev(x) * ev(p),
        ev(&(p * p)) - ev(p).powi(2),
    )
}

#[test]
fn balanced_splitter_on_single_photon() {
    let ket = FockKet::number_state(&[1, 0], 1).unwrap();
    let u = PassiveUnitary::new(bs_balanced_modes(), 1).unwrap();
    let out = ket.apply_passive(&u, &[0, 1]).unwrap();
    assert!((out.amplitude(&[1, 0]) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
    assert!((out.amplitude(&[0, 1]) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
}

#[test]
fn symmetric_splitter_keeps_vacuum() {
    let vac = FockKet::vacuum(2, 4);
    let u = PassiveUnitary::new(bs_symmetric_modes(), 4).unwrap();
    let out = vac.apply_passive(&u, &[0, 1]).unwrap();
    assert!((out.amplitude(&[0, 0]) - c(1.0)).norm() < 1e-15);
    assert!((out.norm_sqr() - 1.0).abs() < 1e-15);
}

#[test]
fn non_unitary_and_mismatched_modes_are_rejected() {
    let bad = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.1), c(0.0), c(1.0)]);
    assert!(PassiveUnitary::new(bad, 3).is_err());
    let u = PassiveUnitary::new(bs_balanced_modes(), 3).unwrap();
    let ket = FockKet::vacuum(2, 3);
    assert!(ket.apply_passive(&u, &[0]).is_err());
    assert!(ket.apply_passive(&u, &[0, 0]).is_err());
    assert!(ket.apply_passive(&u, &[0, 2]).is_err());
}

#[test]
fn unit_transmission_is_identity() {
    let ket = squeezed_vacuum_ket(0.5, 0.3, 30, 1e-10).unwrap();
    let state = FockState::Pure(ket.clone());
    let out = state.apply_loss(1.0, 0).unwrap();
    assert!((out.to_density().matrix() - ket.to_density().matrix()).camax() < 1e-15);
    assert!(state.apply_loss(1.5, 0).is_err());
    assert!(state.apply_loss(-0.1, 0).is_err());
}

#[test]
fn loss_on_thermal_is_thermal() {
    let (nbar, eta) = (0.8, 0.37);
    let cutoff = fock::thermal_cutoff(nbar, 1e-13);
    let th = FockState::Mixed(FockDensityOperator::thermal(nbar, cutoff).unwrap());
    let out = th.apply_loss(eta, 0).unwrap().to_density();
    let expected = FockDensityOperator::thermal(eta * nbar, cutoff).unwrap();
    assert!((out.matrix() - expected.matrix()).camax() < 1e-8);
}

#[test]
fn lossy_squeezed_moments_match_covariance_matrix() {
    let (r, eta) = (0.653, 0.2010);
    let ket = squeezed_vacuum_ket(r, 0.0, fock::squeezed_cutoff(r, 1e-12), 1e-10).unwrap();
    let lossy = FockState::Pure(ket).apply_loss(eta, 0).unwrap();
    let g = GaussianState::squeezed_vacuum(r, 0.0)
        .unwrap()
        .apply_loss(eta, 0)
        .unwrap();
    let (vxx, vxp, vpp) = fock_covariance(&lossy);
    assert!((vxx - g.cov()[(0, 0)]).abs() < 1e-6);
    assert!((vxp - g.cov()[(0, 1)]).abs() < 1e-6);
    assert!((vpp - g.cov()[(1, 1)]).abs() < 1e-6);
}

#[test]
fn pure_state_qcs_is_total_variance() {
    let superposition =
        FockKet::single_mode(vec![c(0.0), c(0.6), c(0.0), Complex64::new(0.0, 0.8)]);
    let states = [
        FockState::Pure(squeezed_vacuum_ket(0.4, 1.2, 40, 1e-10).unwrap()),
        FockState::Pure(FockKet::number_state(&[3], 3).unwrap()),
        FockState::Pure(superposition),
    ];
    for s in &states {
        let q = qcs_direct(s).unwrap();
        assert!((q - fock::total_quadrature_variance(s).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn lossy_one_two_superposition_crosses_unity_at_half_transmission() {
    let ket = FockKet::single_mode(vec![c(0.0), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]);
    let state = FockState::Pure(ket);
    assert!((qcs_direct(&state).unwrap() - 3.0).abs() < 1e-12);
    let lossy = state.apply_loss(0.5, 0).unwrap();
    let q = qcs_direct(&lossy).unwrap();
    assert!((q - 1.0).abs() < 1e-12, "qcs = {q}");
    assert!((q - qcs_two_copy(&lossy).unwrap()).abs() < 1e-10);
    assert!(qcs_direct(&state.apply_loss(0.4, 0).unwrap()).unwrap() < 1.0);
    assert!(qcs_direct(&state.apply_loss(0.6, 0).unwrap()).unwrap() > 1.0);
}

#[test]
fn lossy_fock_mixture_misses_unity_at_half_transmission() {
    let mix = FockState::Mixed(FockDensityOperator::diagonal(&[0.0, 0.5, 0.5]));
    let q = qcs_direct(&mix.apply_loss(0.5, 0).unwrap()).unwrap();
    assert!((q - 11.0 / 13.0).abs() < 1e-12, "qcs = {q}");
}

#[test]
fn two_copy_squeezed_vacuum() {
    let r = 0.653;
    let ket = squeezed_vacuum_ket(r, 0.0, fock::squeezed_cutoff(r, 1e-10), 1e-10).unwrap();
    let q = qcs_two_copy(&FockState::Pure(ket)).unwrap();
    assert!((q - (2.0 * r).cosh()).abs() < 1e-6);
    assert!((q - 1.9811).abs() < 1e-4);
}

#[test]
fn purity_cases() {
    let pure = FockState::Pure(squeezed_vacuum_ket(0.3, 0.0, 30, 1e-10).unwrap());
    assert!((purity_fock(&pure) - 1.0).abs() < 1e-9);
    let nbar = 0.6;
    let th = FockState::Mixed(
        FockDensityOperator::thermal(nbar, fock::thermal_cutoff(nbar, 1e-14)).unwrap(),
    );
    assert!((purity_fock(&th) - 1.0 / (1.0 + 2.0 * nbar)).abs() < 1e-12);

    let (r, eta) = (0.978, 0.1901);
    let ket = squeezed_vacuum_ket(r, 0.0, fock::squeezed_cutoff(r, 1e-10), 1e-10).unwrap();
    let lossy = FockState::Pure(ket).apply_loss(eta, 0).unwrap();
    let g = GaussianState::squeezed_vacuum(r, 0.0)
        .unwrap()
        .apply_loss(eta, 0)
        .unwrap();
    assert!((purity_fock(&lossy) - g.purity().unwrap()).abs() < 1e-6);
}

#[test]
fn photon_distributions() {
    let vac = FockState::Pure(FockKet::vacuum(2, 3));
    let d = vac.photon_distribution(&[0, 1]).unwrap();
    assert_eq!(d.probability(&[0, 0]), 1.0);
    assert_eq!(d.tail_mass(), 0.0);

    let r: f64 = 0.8;
    let t2 = r.tanh().powi(2);
    let tmsv = FockState::Pure(tmsv_ket(r, 0.0, 60, 1e-10).unwrap());
    let marg = tmsv
        .photon_distribution(&[0, 1])
        .unwrap()
        .marginal(1)
        .unwrap();
    for (n, p) in marg.iter().enumerate().take(61) {
        assert!((p - t2.powi(n as i32) * (1.0 - t2)).abs() < 1e-14, "n={n}");
    }

    let zero = tmsv_ket(0.0, 0.0, 5, 1e-10).unwrap();
    assert!((zero.amplitude(&[0, 0]) - c(1.0)).norm() < 1e-15);
}

#[test]
fn two_copy_marginal_feeds_the_estimator() {
    let (r, eta) = (0.978, 0.1901);
    let ket = squeezed_vacuum_ket(r, 0.0, fock::squeezed_cutoff(r, 1e-10), 1e-10).unwrap();
    let lossy = FockState::Pure(ket)
        .apply_loss(eta, 0)
        .unwrap()
        .trimmed(1e-12)
        .0;
    let dist = CountDistribution::exact(two_copy_marginal(&lossy).unwrap()).unwrap();
    let est = qcs_from_distribution(&dist).unwrap();
    assert!((est.qcs - qcs_direct(&lossy).unwrap()).abs() < 1e-6);
    assert!((est.purity - purity_fock(&lossy)).abs() < 1e-8);
}

#[test]
fn squeezed_pair_on_symmetric_splitter_is_tmsv() {
    let (r, phi, d) = (0.978, 0.37, 25);
    let source = squeezed_vacuum_ket(r, phi + FRAC_PI_2, 2 * d, 1e-3).unwrap();
    let pair = source.tensor(&source);
    let u = PassiveUnitary::new(bs_symmetric_modes(), pair.cutoff()).unwrap();
    let out = pair.apply_passive(&u, &[0, 1]).unwrap();
    let tmsv = tmsv_ket(r, phi, d, 1e-3).unwrap();
    let basis = FockBasis::new(2, 2 * d);
    let mut worst: f64 = 0.0;
    for occ in basis.iter().filter(|o| o[0] <= d && o[1] <= d) {
        worst = worst.max((out.amplitude(occ) - tmsv.amplitude(occ)).norm());
    }
    assert!(worst < 1e-8, "worst {worst}");
}

fn random_density(re: &[f64], im: &[f64], dim: usize, rank: usize) -> FockDensityOperator {
    let a = DMatrix::from_fn(dim, rank, |i, j| {
        Complex64::new(re[i * rank + j], im[i * rank + j])
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    FockDensityOperator::new(FockBasis::new(1, dim - 1), m / tr).unwrap()
}

fn random_ket(re: &[f64], im: &[f64], basis: std::sync::Arc<FockBasis>) -> FockKet {
    let v = nalgebra::DVector::from_fn(basis.dim(), |i, _| Complex64::new(re[i], im[i]));
    let n = v.norm();
    FockKet::new(basis, v / c(n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parity_of_difference_mode_is_purity(
        re in prop::collection::vec(-1.0f64..1.0, 36),
        im in prop::collection::vec(-1.0f64..1.0, 36),
        dim in 1usize..7,
        rank in 1usize..4,
    ) {
        let rho = FockState::Mixed(random_density(&re, &im, dim, rank));
        let marg = two_copy_marginal(&rho).unwrap();
        let parity: f64 = marg.iter().enumerate().map(|(n, p)| if n % 2 == 0 { *p } else { -p }).sum();
        prop_assert!((parity - purity_fock(&rho)).abs() < 1e-8);
        if purity_fock(&rho) > 1e-3 {
            prop_assert!((qcs_two_copy(&rho).unwrap() - qcs_direct(&rho).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn passive_operations_conserve_energy(
        re in prop::collection::vec(-1.0f64..1.0, 28),
        im in prop::collection::vec(-1.0f64..1.0, 28),
        theta in -3.2f64..3.2,
        which in 0usize..3,
    ) {
        let ket = random_ket(&re, &im, FockBasis::new(2, 6));
        let m = match which {
            0 => bs_balanced_modes(),
            1 => bs_symmetric_modes(),
            _ => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::from_polar(1.0, theta), c(1.0)])),
        };
        let u = PassiveUnitary::new(m, 6).unwrap();
        let state = FockState::Pure(ket);
        let out = state.apply_passive(&u, &[0, 1]).unwrap();
        let before = state.mean_photon(0).unwrap() + state.mean_photon(1).unwrap();
        let after = out.mean_photon(0).unwrap() + out.mean_photon(1).unwrap();
        prop_assert!((before - after).abs() < 1e-10);
        let mixed = FockState::Mixed(state.to_density()).apply_passive(&u, &[1, 0]).unwrap();
        let after_mixed = mixed.mean_photon(0).unwrap() + mixed.mean_photon(1).unwrap();
        prop_assert!((before - after_mixed).abs() < 1e-10);
    }

    #[test]
    fn loss_is_linear_hermitian_and_positive(
        re in prop::collection::vec(-1.0f64..1.0, 28),
        im in prop::collection::vec(-1.0f64..1.0, 28),
        eta in 0.0f64..=1.0,
        mode in 0usize..2,
    ) {
        let state = FockState::Pure(random_ket(&re, &im, FockBasis::new(2, 6)));
        let out = state.apply_loss(eta, mode).unwrap();
        prop_assert!((out.mean_photon(mode).unwrap() - eta * state.mean_photon(mode).unwrap()).abs() < 1e-10);
        let other = 1 - mode;
        prop_assert!((out.mean_photon(other).unwrap() - state.mean_photon(other).unwrap()).abs() < 1e-10);
        let rho = out.to_density();
        prop_assert!(rho.hermiticity_defect() < 1e-10);
        prop_assert!(rho.min_eigenvalue() > -1e-9);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn engines_agree_on_single_mode_gaussians(
        r in 0.0f64..0.9,
        phi in -3.2f64..3.2,
        nbar in 0.0f64..0.6,
        eta in 0.05f64..=1.0,
    ) {
        let g = GaussianState::squeezed_vacuum(r, phi).unwrap()
            .apply_loss(eta, 0).unwrap();
        let th = GaussianState::thermal(nbar).unwrap();
        let v = g.cov() + th.cov() - DMatrix::identity(2, 2) * 0.5;
        let g = GaussianState::from_moments(g.mean().clone(), v).unwrap();
        let f = from_gaussian(&g, None, 1e-12).unwrap();
        let expected = qcs_gaussian(&g).unwrap();
        prop_assert!((qcs_direct(&f).unwrap() - expected).abs() < 1e-6);
        prop_assert!((purity_fock(&f) - g.purity().unwrap()).abs() < 1e-6);
    }
}

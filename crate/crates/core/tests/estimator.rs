use std::fs::File;
use std::path::PathBuf;

use qcs_core::estimator::{
    eta_from_energy, mean_photon_and_difference_moment, qcs_from_distribution, reduction_residual,
    sample_counts, theory_error_band, truncated_estimate, CountDistribution, Truncation,
};
use qcs_core::gaussian::{qcs_squeezed_lossy, qcs_thermal_lossy};
use qcs_core::protocol::{
    build_sv_experiment, build_thermal_experiment, run_circuit, Engine, RunOptions,
};

fn golden(seed: u64) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/tallies_seed{seed}.csv"))
}

fn sv_exact(r: f64, eta: f64) -> CountDistribution {
    let spec = build_sv_experiment(r, 0.0, eta).unwrap();
    run_circuit(&spec, Engine::Gaussian, &RunOptions::default())
        .unwrap()
        .exact_distribution
}

fn thermal_exact(r: f64, eta: f64) -> CountDistribution {
    let spec = build_thermal_experiment(r, 0.0, eta).unwrap();
    run_circuit(&spec, Engine::Gaussian, &RunOptions::default())
        .unwrap()
        .exact_distribution
}

#[test]
fn fixed_seeds_reproduce_golden_tallies() {
    let d = CountDistribution::exact(vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.03125]).unwrap();
    for seed in [7, 2024] {
        let expected = CountDistribution::read_csv(File::open(golden(seed)).unwrap()).unwrap();
        let sampled = sample_counts(&d, 1_000_000, seed).unwrap();
        assert_eq!(sampled.counts(), expected.counts(), "seed {seed}");
    }
}

#[test]
fn exact_marginal_estimates() {
    let d = sv_exact(0.653, 0.2010);
    let est = qcs_from_distribution(&d).unwrap();
    assert!((est.qcs - qcs_squeezed_lossy(0.653, 0.2010).unwrap()).abs() < 1e-8);
    assert!((est.qcs - 0.9103).abs() < 1e-4);
    assert!(reduction_residual(&d, est.qcs).abs() < 1e-12);
    assert_eq!(est.variance, 0.0);
}

#[test]
fn energy_gives_back_the_transmission() {
    let (r, eta) = (0.653, 0.2010);
    for engine in [Engine::Fock, Engine::Gaussian] {
        let res = run_circuit(
            &build_sv_experiment(r, 0.0, eta).unwrap(),
            engine,
            &RunOptions::default(),
        )
        .unwrap();
        let est = eta_from_energy(res.mean_photon_out, r).unwrap();
        assert!((est.eta - eta).abs() < 1e-8, "{engine:?}: {}", est.eta);
        assert!(!est.exceeds_one);
    }
}

#[test]
fn detected_mean_is_the_single_copy_moment() {
    let opts = RunOptions::default();
    let vac = run_circuit(
        &build_sv_experiment(0.0, 0.0, 0.7).unwrap(),
        Engine::Fock,
        &opts,
    )
    .unwrap();
    let (m, d) = mean_photon_and_difference_moment(&vac).unwrap();
    assert!(m.abs() < 1e-15 && d.abs() < 1e-15);
    for engine in [Engine::Fock, Engine::Gaussian] {
        let (r, eta): (f64, f64) = (0.653, 0.2564);
        let nbar = r.sinh().powi(2);
        let th = run_circuit(
            &build_thermal_experiment(r, 0.0, eta).unwrap(),
            engine,
            &opts,
        )
        .unwrap();
        let (m, d) = mean_photon_and_difference_moment(&th).unwrap();
        assert!((m - eta * nbar).abs() < 1e-8 && (d - eta * nbar).abs() < 1e-8);
        let sv = run_circuit(&build_sv_experiment(r, 0.0, eta).unwrap(), engine, &opts).unwrap();
        let (m, d) = mean_photon_and_difference_moment(&sv).unwrap();
        assert!((m - eta * nbar).abs() < 1e-8 && (d - eta * nbar).abs() < 1e-8);
    }
}

#[test]
fn truncation_at_four_photons_stays_within_five_percent() {
    let cases = [
        sv_exact(1.156, 0.183),
        thermal_exact(0.653, 0.2564),
        sv_exact(0.653, 0.2010),
        sv_exact(0.978, 0.1901),
        thermal_exact(0.978, 0.2447),
    ];
    for d in &cases {
        let full = qcs_from_distribution(d).unwrap().qcs;
        let cut = truncated_estimate(d, 4, Truncation::Renormalise)
            .unwrap()
            .qcs;
        assert!(
            (cut - full).abs() / full <= 0.05,
            "full {full}, truncated {cut}"
        );
        let raw = truncated_estimate(d, 4, Truncation::Raw).unwrap().qcs;
        assert!((raw - cut).abs() < 1e-12);
    }
}

#[test]
fn sampled_standard_error_matches_table_digit() {
    let d = sv_exact(0.653, 0.2010);
    let s = sample_counts(&d, 1_000_000, 7).unwrap();
    let est = qcs_from_distribution(&s).unwrap();
    let se = est.std_error();
    assert!(se > 2e-4 && se < 3e-3, "standard error {se}");
    assert!((est.qcs - 0.9103).abs() < 4.0 * se);
}

#[test]
fn repeated_sampling_matches_predicted_variance() {
    let d = sv_exact(0.653, 0.2010);
    let exact = qcs_from_distribution(&d).unwrap().qcs;
    let n = 100_000;
    let estimates: Vec<_> = (0..200u64)
        .map(|seed| qcs_from_distribution(&sample_counts(&d, n, seed).unwrap()).unwrap())
        .collect();
    let mean = estimates.iter().map(|e| e.qcs).sum::<f64>() / 200.0;
    let empirical = estimates
        .iter()
        .map(|e| (e.qcs - mean).powi(2))
        .sum::<f64>()
        / 199.0;
    let predicted = estimates.iter().map(|e| e.variance).sum::<f64>() / 200.0;
    let ratio = empirical / predicted;
    assert!((0.25..=4.0).contains(&ratio), "variance ratio {ratio}");
    let within = estimates
        .iter()
        .filter(|e| (e.qcs - exact).abs() <= 4.0 * e.std_error())
        .count();
    assert!(within >= 190, "{within} of 200 within 4 sigma");
}

#[test]
fn theory_band_widens_with_squeezing() {
    let band = |r: f64, eta: f64| {
        let theory = sv_exact(r, eta);
        let observed = sample_counts(&theory, 1_000_000, 11).unwrap();
        theory_error_band(&observed, &theory).unwrap()
    };
    let small = band(0.653, 0.2010);
    let large = band(1.156, 0.183);
    assert!(large > small, "{large} <= {small}");
}

#[test]
fn thermal_example_values() {
    let d = thermal_exact(0.978, 0.2447);
    let est = qcs_from_distribution(&d).unwrap();
    assert!((est.qcs - qcs_thermal_lossy(0.978f64.sinh().powi(2), 0.2447).unwrap()).abs() < 1e-8);
    assert!((est.qcs - 0.6106).abs() < 1e-4);
}

#[test]
fn truncation_of_the_brightest_thermal_configuration() {
    let n = 1.156f64.sinh().powi(2) * 0.240;
    let q = n / (1.0 + n);
    let geometric: Vec<f64> = (0..=4).map(|k| (1.0 - q) * q.powi(k)).collect();
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let num: f64 = geometric
        .iter()
        .enumerate()
        .map(|(k, p)| sign(k) * k as f64 * p)
        .sum();
    let den: f64 = geometric.iter().enumerate().map(|(k, p)| sign(k) * p).sum();
    let d = thermal_exact(1.156, 0.240);
    let cut = truncated_estimate(&d, 4, Truncation::Renormalise)
        .unwrap()
        .qcs;
    assert!((cut - (1.0 + 2.0 * num / den)).abs() < 1e-8);
    let full = qcs_from_distribution(&d).unwrap().qcs;
    assert!((cut - full) / full > 0.05);
}

#[test]
fn supported_below_cutoff_is_unchanged() {
    let d = CountDistribution::exact(vec![0.6, 0.2, 0.1, 0.05, 0.05]).unwrap();
    let a = qcs_from_distribution(&d).unwrap();
    let b = truncated_estimate(&d, 4, Truncation::Renormalise).unwrap();
    assert!((a.qcs - b.qcs).abs() < 1e-15 && (a.purity - b.purity).abs() < 1e-15);
}

//! Photon-counting estimator of the QCS and its error analysis.
//!
//! The difference-mode photon distribution `p_n` of the two-copy circuit
//! gives `Σ(−1)ⁿ p_n = Tr ρ²` and
//! `𝒞² = 1 + 2 Σ n(−1)ⁿ p_n / Σ(−1)ⁿ p_n`.

use std::io::{Read, Write};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::ExperimentResult;

/// Parity floor for distributions estimated from counts.
pub const SAMPLED_PARITY_FLOOR: f64 = 1e-4;
/// Parity floor for exact distributions.
pub const EXACT_PARITY_FLOOR: f64 = 1e-10;
/// Largest accepted normalisation defect of an exact distribution.
pub const NORMALISATION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("probability p_{n} = {value} is negative")]
    NegativeProbability { n: usize, value: f64 },
    #[error("probabilities sum to {0}, outside [1 - {NORMALISATION_TOL:e}, 1]")]
    NotNormalised(f64),
    #[error("parity {parity:e} is below the conditioning floor {floor:e}")]
    IllConditioned { parity: f64, floor: f64 },
    #[error("at least two trials are needed, got {0}")]
    TooFewTrials(u64),
    #[error("the distribution carries no tallies")]
    MissingTallies,
    #[error("sampling requires an exact distribution")]
    NotExact,
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("output mean {mean} differs from the input moment {moment}")]
    MomentMismatch { mean: f64, moment: f64 },
    #[error("malformed distribution file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Exact,
    Sampled,
}

/// Photon-number probabilities `p_n`, `n = 0..=n_max`, with tallies `N_n`
/// when they were sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    probs: Vec<f64>,
    counts: Option<Vec<u64>>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    n: usize,
    p: f64,
    count: Option<u64>,
}

impl CountDistribution {
    /// Exact probabilities. Rounding-level negatives (above `-1e-12`) are
    /// set to zero; the sum must lie within [`NORMALISATION_TOL`] of one.
    pub fn exact(probs: Vec<f64>) -> Result<Self> {
        Self::exact_with_tolerance(probs, NORMALISATION_TOL)
    }

    pub fn exact_with_tolerance(mut probs: Vec<f64>, tol: f64) -> Result<Self> {
        for (n, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(EstimatorError::NegativeProbability { n, value: *p });
            }
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if !(total >= 1.0 - tol && total <= 1.0 + 1e-9) {
            return Err(EstimatorError::NotNormalised(total));
        }
        Ok(Self {
            probs,
            counts: None,
            provenance: Provenance::Exact,
        })
    }

    /// Empirical distribution `p_n = N_n / N`.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(EstimatorError::TooFewTrials(0));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self {
            probs,
            counts: Some(counts),
            provenance: Provenance::Sampled,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn trials(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_max(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `Σ(−1)ⁿ p_n`.
    pub fn parity(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -p })
            .sum()
    }

    fn padded(&self, len: usize) -> Vec<f64> {
        let mut p = self.probs.clone();
        p.resize(len.max(p.len()), 0.0);
        p
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (n, &p) in self.probs.iter().enumerate() {
            w.serialize(CsvRow {
                n,
                p,
                count: self.counts.as_ref().map(|c| c[n]),
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads the `n,p,count` format. Rows with counts are rebuilt from the
    /// tallies, so `p_n = N_n/N` holds exactly.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rows: Vec<CsvRow> = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize() {
            rows.push(row?);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.n != i {
                return Err(EstimatorError::Format(format!("row {i} has n = {}", row.n)));
            }
        }
        let with_counts = rows.iter().filter(|r| r.count.is_some()).count();
        if with_counts == rows.len() && !rows.is_empty() {
            Self::from_counts(rows.iter().map(|r| r.count.unwrap_or(0)).collect())
        } else if with_counts == 0 {
            Self::exact(rows.iter().map(|r| r.p).collect())
        } else {
            Err(EstimatorError::Format(
                "count column is only partly filled".into(),
            ))
        }
    }
}

/// QCS estimate with its multinomial variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcsEstimate {
    pub qcs: f64,
    pub purity: f64,
    pub variance: f64,
    pub n_trials: Option<u64>,
    pub provenance: Provenance,
    /// `|Σ(−1)ⁿ p_n|` relative to the floor it was checked against.
    pub conditioning: f64,
    /// Set when the estimate leaves the physical ranges `𝒞² ≥ 0`, `0 < 𝒫 ≤ 1`.
    pub out_of_range: bool,
}

impl QcsEstimate {
    pub fn std_error(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn floor_for(dist: &CountDistribution) -> f64 {
    match dist.provenance {
        Provenance::Sampled => SAMPLED_PARITY_FLOOR,
        _ => EXACT_PARITY_FLOOR,
    }
}

pub fn qcs_from_distribution(dist: &CountDistribution) -> Result<QcsEstimate> {
    qcs_from_distribution_with_floor(dist, floor_for(dist))
}

pub fn qcs_from_distribution_with_floor(
    dist: &CountDistribution,
    floor: f64,
) -> Result<QcsEstimate> {
    let parity = dist.parity();
    if !(parity.abs() >= floor) {
        return Err(EstimatorError::IllConditioned { parity, floor });
    }
    let weighted: f64 = dist
        .probs
        .iter()
        .enumerate()
        .map(|(n, p)| {
            if n % 2 == 0 {
                n as f64 * p
            } else {
                -(n as f64) * p
            }
        })
        .sum();
    let qcs = 1.0 + 2.0 * weighted / parity;
    let variance = match dist.trials() {
        Some(n) if n >= 2 => qcs_variance(dist, qcs, parity)?,
        _ => 0.0,
    };
    Ok(QcsEstimate {
        qcs,
        purity: parity,
        variance,
        n_trials: dist.trials(),
        provenance: dist.provenance,
        conditioning: parity.abs() / floor,
        out_of_range: !(qcs >= 0.0) || !(parity > 0.0 && parity <= 1.0 + 1e-12),
    })
}

/// `(1/𝒫²) Σ p_n (2n + 1 − 𝒞²)² / (N − 1)`.
pub fn qcs_variance(dist: &CountDistribution, qcs: f64, purity: f64) -> Result<f64> {
    let n = dist.trials().ok_or(EstimatorError::MissingTallies)?;
    if n < 2 {
        return Err(EstimatorError::TooFewTrials(n));
    }
    let s: f64 = dist
        .probs
        .iter()
        .enumerate()
        .map(|(k, p)| p * (2.0 * k as f64 + 1.0 - qcs).powi(2))
        .sum();
    Ok(s / (purity * purity) / (n - 1) as f64)
}

/// `Σ (−1)ᵐ p_m (2m + 1 − 𝒞²)`, which vanishes when `𝒞²` is the estimate
/// of the same distribution.
pub fn reduction_residual(dist: &CountDistribution, qcs: f64) -> f64 {
    dist.probs
        .iter()
        .enumerate()
        .map(|(m, p)| {
            let t = p * (2.0 * m as f64 + 1.0 - qcs);
            if m % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum()
}

/// Multinomial draw of `trials` detections from an exact distribution,
/// generated as a chain of binomials from a `ChaCha20` stream seeded with
/// `seed`. Probabilities are taken relative to their sum over the supplied
/// support.
pub fn sample_counts(
    dist: &CountDistribution,
    trials: u64,
    seed: u64,
) -> Result<CountDistribution> {
    if dist.provenance != Provenance::Exact {
        return Err(EstimatorError::NotExact);
    }
    if trials == 0 {
        return Err(EstimatorError::TooFewTrials(0));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut remaining = trials;
    let mut mass: f64 = dist.total();
    let mut counts = vec![0u64; dist.probs.len()];
    for (k, &p) in dist.probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = if k + 1 == dist.probs.len() || q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("probability in [0, 1]")
                .sample(&mut rng)
        };
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    CountDistribution::from_counts(counts)
}

/// Transmission inferred from detected energy, `η̂ = ⟨n⟩_out / sinh² r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub eta: f64,
    /// `η̂ > 1`, reported rather than clamped.
    pub exceeds_one: bool,
}

pub fn eta_from_energy(mean_photon_out: f64, r: f64) -> Result<EtaEstimate> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(EstimatorError::InvalidParameter {
            name: "r",
            value: r,
        });
    }
    if !(mean_photon_out >= 0.0) || !mean_photon_out.is_finite() {
        return Err(EstimatorError::InvalidParameter {
            name: "mean_photon_out",
            value: mean_photon_out,
        });
    }
    let eta = mean_photon_out / r.sinh().powi(2);
    Ok(EtaEstimate {
        eta,
        exceeds_one: eta > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Rescale the kept probabilities (or tallies) to a unit sum.
    #[default]
    Renormalise,
    /// Keep the raw probabilities.
    Raw,
}

/// Estimate from `p_0 … p_{n_max}` only. The QCS ratio is unchanged by the
/// choice of [`Truncation`]; the reported purity is not.
pub fn truncated_estimate(
    dist: &CountDistribution,
    n_max: usize,
    mode: Truncation,
) -> Result<QcsEstimate> {
    if n_max < 1 {
        return Err(EstimatorError::InvalidParameter {
            name: "n_max",
            value: n_max as f64,
        });
    }
    let keep = (n_max + 1).min(dist.probs.len());
    let truncated = match (&dist.counts, mode) {
        (Some(c), Truncation::Renormalise) => CountDistribution::from_counts(c[..keep].to_vec())?,
        (Some(c), Truncation::Raw) => CountDistribution {
            probs: dist.probs[..keep].to_vec(),
            counts: Some(c[..keep].to_vec()),
            provenance: dist.provenance,
        },
        (None, m) => {
            let mut probs = dist.probs[..keep].to_vec();
            if m == Truncation::Renormalise {
                let s: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= s);
            }
            CountDistribution {
                probs,
                counts: None,
                provenance: dist.provenance,
            }
        }
    };
    let floor = floor_for(dist);
    let mut est = qcs_from_distribution_with_floor(&truncated, floor)?;
    if let (Some(n), Truncation::Raw) = (dist.trials(), mode) {
        est.n_trials = Some(n);
    }
    Ok(est)
}

/// Variance of `𝒞²` under a flat error of half-width `|p_n − p̃_n|` on each
/// bin, `Σ (∂𝒞²/∂p_n)² (p_n − p̃_n)² / 3`, with the derivatives
/// `(−1)ⁿ (2n + 1 − 𝒞̃²) / 𝒫̃` taken at the theory distribution.
pub fn theory_error_band(observed: &CountDistribution, theory: &CountDistribution) -> Result<f64> {
    let reference = qcs_from_distribution_with_floor(theory, EXACT_PARITY_FLOOR)?;
    let len = observed.probs.len().max(theory.probs.len());
    let (po, pt) = (observed.padded(len), theory.padded(len));
    let s: f64 = (0..len)
        .map(|n| {
            let d = (2.0 * n as f64 + 1.0 - reference.qcs) / reference.purity;
            d * d * (po[n] - pt[n]).powi(2) / 3.0
        })
        .sum();
    Ok(s)
}

/// Detected mean photon number of the difference mode and the single-copy
/// moment `⟨a†a⟩ − |⟨a⟩|²` it measures, checked to agree within `1e-8`.
pub fn mean_photon_and_difference_moment(result: &ExperimentResult) -> Result<(f64, f64)> {
    let (mean, moment) = (result.mean_photon_out, result.probe_excess_photon);
    if (mean - moment).abs() > 1e-8 * mean.abs().max(1.0) {
        return Err(EstimatorError::MomentMismatch { mean, moment });
    }
    Ok((mean, moment))
}

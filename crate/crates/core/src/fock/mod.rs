//! Truncated Fock-space engine.
//!
//! States live on a basis of occupation tuples with at most `cutoff`
//! photons in total. Squeezed sources are built by exponentiating the
//! truncated squeeze generator, loss is an exact Kraus sum, and passive
//! linear optics is exact block by block, so everything here is an
//! independent check on the covariance calculus in [`crate::gaussian`].

mod basis;
mod ladder;
mod passive;
mod state;

pub use basis::{basis_dim, FockBasis};
pub use ladder::LadderOps;
pub use passive::{unitarity_defect, PassiveUnitary};
pub use state::{FockDensityOperator, FockKet, FockState, JointDistribution};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::gaussian::{bs_balanced_modes, GaussianError, GaussianState};
use ladder::SqueezeGenerator;

/// Default bound on probability discarded by truncation.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;
/// Default purity below which the QCS is refused as ill-conditioned.
pub const DEFAULT_PURITY_FLOOR: f64 = 1e-6;
/// Largest basis on which a dense density operator is formed.
pub const MAX_DENSITY_DIM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("cutoff {cutoff} discards {deficit:e} of the norm (tolerance {tolerance:e}); need a cutoff of about {suggested}")]
    CutoffTooSmall {
        cutoff: usize,
        deficit: f64,
        tolerance: f64,
        suggested: usize,
    },
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("transmission must lie in [0, 1], got {0}")]
    TransmissionOutOfRange(f64),
    #[error("mode {index} out of range for a {num_modes}-mode state")]
    ModeOutOfRange { index: usize, num_modes: usize },
    #[error("mode {0} selected more than once")]
    RepeatedMode(usize),
    #[error("operator acts on {expected} modes but {got} were selected")]
    ModeMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not unitary (max |U†U - I| = {0:e})")]
    NonUnitary(f64),
    #[error("expected a single-mode state, got {0} modes")]
    NotSingleMode(usize),
    #[error("purity {purity:e} is below the floor {floor:e}; the QCS is ill-conditioned")]
    PurityBelowFloor { purity: f64, floor: f64 },
    #[error("dense operator of dimension {dim} exceeds the limit {limit}; lower the cutoff or loosen the truncation tolerance")]
    TooLarge { dim: usize, limit: usize },
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

pub type Result<T> = std::result::Result<T, FockError>;

fn check_squeezing(r: f64, phi: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(FockError::InvalidParameter {
            name: "r",
            value: r,
        });
    }
    if !phi.is_finite() {
        return Err(FockError::InvalidParameter {
            name: "phi",
            value: phi,
        });
    }
    Ok(())
}

/// Exact photon-number probabilities `P(2n)` of squeezed vacuum, yielded
/// until the remaining terms are negligible.
fn squeezed_even_probabilities(r: f64) -> impl Iterator<Item = (usize, f64)> {
    let t2 = r.tanh().powi(2);
    let mut p = 1.0 / r.cosh();
    let mut n = 0usize;
    std::iter::from_fn(move || {
        if n > 0 && (p < 1e-300 || n > 100_000) {
            return None;
        }
        let out = (2 * n, p);
        n += 1;
        let nf = n as f64;
        // P(2n)/P(2n−2) = tanh²r (2n)(2n−1)/(4n²)
        p *= t2 * (2.0 * nf) * (2.0 * nf - 1.0) / (4.0 * nf * nf);
        if t2 == 0.0 {
            p = 0.0;
        }
        Some(out)
    })
}

/// Probability that squeezed vacuum `|r⟩` holds more than `cutoff` photons.
pub fn squeezed_tail_mass(r: f64, cutoff: usize) -> f64 {
    squeezed_even_probabilities(r)
        .filter(|&(k, _)| k > cutoff)
        .map(|(_, p)| p)
        .sum()
}

/// Smallest even cutoff whose squeezed-vacuum tail mass is at most `tol`.
pub fn squeezed_cutoff(r: f64, tol: f64) -> usize {
    let total: Vec<(usize, f64)> = squeezed_even_probabilities(r).collect();
    let mut tail: f64 = total.iter().map(|&(_, p)| p).sum::<f64>();
    for &(k, p) in &total {
        tail -= p;
        if tail <= tol {
            return k;
        }
    }
    total.last().map_or(0, |&(k, _)| k)
}

/// Smallest cutoff whose thermal tail `(n̄/(n̄+1))^{d+1}` is at most `tol`.
pub fn thermal_cutoff(nbar: f64, tol: f64) -> usize {
    if nbar <= 0.0 {
        return 0;
    }
    let ratio = nbar / (nbar + 1.0);
    ((tol.ln() / ratio.ln()).ceil() as usize).saturating_sub(1)
}

fn working_dim(cutoff: usize) -> usize {
    2 * cutoff + 20
}

/// Squeezed vacuum `exp(−(ξ a†² − ξ* a²)/2)|0⟩`, `ξ = r e^{iφ}`, by
/// exponentiating the truncated generator on an enlarged space and keeping
/// the first `cutoff + 1` amplitudes.
pub fn squeezed_vacuum_ket(r: f64, phi: f64, cutoff: usize, tol: f64) -> Result<FockKet> {
    check_squeezing(r, phi)?;
    let ext = working_dim(cutoff);
    let gen = SqueezeGenerator::new(r, phi, ext);
    let mut vac = DVector::zeros(ext + 1);
    vac[0] = Complex64::new(1.0, 0.0);
    let full = gen.exp_apply(&vac);
    let amps: Vec<Complex64> = full.iter().take(cutoff + 1).copied().collect();
    let ket = FockKet::single_mode(amps);
    let deficit = ket.norm_deficit();
    if deficit > tol {
        return Err(FockError::CutoffTooSmall {
            cutoff,
            deficit,
            tolerance: tol,
            suggested: squeezed_cutoff(r, tol),
        });
    }
    Ok(ket)
}

/// Two-mode squeezed vacuum `Σ (e^{iφ} tanh r)^m |m, m⟩ / cosh r` with up to
/// `cutoff` photons per mode (total cutoff `2·cutoff`).
pub fn tmsv_ket(r: f64, phi: f64, cutoff: usize, tol: f64) -> Result<FockKet> {
    check_squeezing(r, phi)?;
    let basis = FockBasis::new(2, 2 * cutoff);
    let mut amps = DVector::zeros(basis.dim());
    let z = Complex64::from_polar(r.tanh(), phi);
    let mut a = Complex64::new(1.0 / r.cosh(), 0.0);
    for m in 0..=cutoff {
        amps[basis.index_of(&[m, m]).expect("diagonal state in basis")] = a;
        a *= z;
    }
    let ket = FockKet::new(basis, amps)?;
    let deficit = ket.norm_deficit();
    if deficit > tol {
        let suggested = thermal_cutoff(r.sinh().powi(2), tol);
        return Err(FockError::CutoffTooSmall {
            cutoff,
            deficit,
            tolerance: tol,
            suggested,
        });
    }
    Ok(ket)
}

/// Fock representation of a centred single-mode Gaussian state, built as a
/// squeezed thermal state `S(ξ) ρ_th S(ξ)†`, or as a ket when the state is
/// pure. With `cutoff = None` the result is trimmed to the smallest cutoff
/// discarding at most `tol`.
pub fn from_gaussian(state: &GaussianState, cutoff: Option<usize>, tol: f64) -> Result<FockState> {
    if state.num_modes() != 1 {
        return Err(FockError::NotSingleMode(state.num_modes()));
    }
    let offset = state.mean().norm();
    if offset > 1e-10 {
        return Err(GaussianError::NotCentred(offset).into());
    }
    let v = state.cov();
    let nu = v.determinant().sqrt();
    let nbar = (nu - 0.5).max(0.0);
    let w = v[(0, 0)] + v[(1, 1)];
    let r = 0.5 * (w / (2.0 * nu)).max(1.0).acosh();
    let phi = (-v[(0, 1)]).atan2(0.5 * (v[(1, 1)] - v[(0, 0)]));

    if nbar < 1e-13 {
        let d = cutoff.unwrap_or_else(|| squeezed_cutoff(r, tol));
        return Ok(FockState::Pure(squeezed_vacuum_ket(r, phi, d, tol)?));
    }
    let thermal_cut = thermal_cutoff(nbar, tol * 1e-3);
    let squeeze_cut = squeezed_cutoff(r, tol * 1e-3);
    let ext = working_dim(thermal_cut + squeeze_cut + cutoff.unwrap_or(0));
    let (thermal, _) = FockDensityOperator::thermal(nbar, thermal_cut)?.with_cutoff(ext);
    let gen = SqueezeGenerator::new(r, phi, ext);
    let rho = FockDensityOperator::new(thermal.basis().clone(), gen.conjugate(thermal.matrix()))?;
    let rho = FockState::Mixed(rho);
    let (out, dropped) = match cutoff {
        Some(c) => rho.with_cutoff(c),
        None => rho.trimmed(tol),
    };
    if dropped > tol {
        let suggested = rho.trimmed(tol).0.cutoff();
        return Err(FockError::CutoffTooSmall {
            cutoff: out.cutoff(),
            deficit: dropped,
            tolerance: tol,
            suggested,
        });
    }
    Ok(out)
}

fn single_mode_density(state: &FockState) -> Result<FockDensityOperator> {
    if state.num_modes() != 1 {
        return Err(FockError::NotSingleMode(state.num_modes()));
    }
    Ok(state.to_density())
}

/// `Tr ρ²` as stored.
pub fn purity_fock(state: &FockState) -> f64 {
    match state {
        FockState::Pure(k) => k.norm_sqr().powi(2),
        FockState::Mixed(r) => r.purity(),
    }
}

fn check_floor(purity: f64, trace: f64, floor: f64) -> Result<()> {
    let normalised = purity / (trace * trace);
    if !(normalised >= floor) {
        return Err(FockError::PurityBelowFloor {
            purity: normalised,
            floor,
        });
    }
    Ok(())
}

/// QCS from the commutator definition,
/// `{Tr([ρ,x][x,ρ]) + Tr([ρ,p][p,ρ])} / (2 Tr ρ²)`.
///
/// The state is padded by one level so `x` and `p` act without truncation
/// error on its support. The expression is invariant under rescaling `ρ`,
/// so a small trace deficit does not bias it.
pub fn qcs_direct(state: &FockState) -> Result<f64> {
    qcs_direct_with_floor(state, DEFAULT_PURITY_FLOOR)
}

pub fn qcs_direct_with_floor(state: &FockState, floor: f64) -> Result<f64> {
    let rho = single_mode_density(state)?;
    let purity = rho.purity();
    check_floor(purity, rho.trace(), floor)?;
    let (rho, _) = rho.with_cutoff(rho.cutoff() + 1);
    let ops = LadderOps::new(rho.cutoff());
    let m = rho.matrix();
    let comm_sq = |q: &DMatrix<Complex64>| {
        let c = m * q - q * m;
        // Tr([ρ,q][q,ρ]) = −Tr([ρ,q]²)
        -(&c * &c).trace().re
    };
    Ok((comm_sq(&ops.x) + comm_sq(&ops.p)) / (2.0 * purity))
}

/// `Var(x) + Var(p)` of a single-mode state, normalised by its trace.
pub fn total_quadrature_variance(state: &FockState) -> Result<f64> {
    let rho = single_mode_density(state)?;
    let (rho, _) = rho.with_cutoff(rho.cutoff() + 2);
    let ops = LadderOps::new(rho.cutoff());
    let tr = rho.trace();
    let m = rho.matrix();
    let ev = |o: &DMatrix<Complex64>| (m * o).trace().re / tr;
    let var = |q: &DMatrix<Complex64>| ev(&(q * q)) - ev(q).powi(2);
    Ok(var(&ops.x) + var(&ops.p))
}

/// Output state of the two-copy circuit: `ρ ⊗ ρ` through the balanced beam
/// splitter. Output mode 1 carries the difference mode `(a − b)/√2`.
pub fn two_copy_output(state: &FockState) -> Result<FockState> {
    if state.num_modes() != 1 {
        return Err(FockError::NotSingleMode(state.num_modes()));
    }
    let total = 2 * state.cutoff();
    if let FockState::Mixed(_) = state {
        let dim = basis_dim(2, total);
        if dim > MAX_DENSITY_DIM {
            return Err(FockError::TooLarge {
                dim,
                limit: MAX_DENSITY_DIM,
            });
        }
    }
    let pair = state.tensor(state);
    let bs = PassiveUnitary::new(bs_balanced_modes(), total)?;
    pair.apply_passive(&bs, &[0, 1])
}

/// Photon-number distribution of the difference mode after the two-copy
/// circuit.
pub fn two_copy_marginal(state: &FockState) -> Result<Vec<f64>> {
    two_copy_output(state)?
        .photon_distribution(&[0, 1])?
        .marginal(1)
}

/// QCS as the ratio `Tr[σ Π (1 + 2n)] / Tr[σ Π]` on the difference-mode
/// output `σ` of the two-copy circuit, `Π = (−1)^n`.
pub fn qcs_two_copy(state: &FockState) -> Result<f64> {
    qcs_two_copy_with_floor(state, DEFAULT_PURITY_FLOOR)
}

pub fn qcs_two_copy_with_floor(state: &FockState, floor: f64) -> Result<f64> {
    let probs = two_copy_marginal(state)?;
    let (mut parity, mut weighted) = (0.0, 0.0);
    for (n, p) in probs.iter().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        parity += sign * p;
        weighted += sign * (1.0 + 2.0 * n as f64) * p;
    }
    let trace = state.trace();
    check_floor(parity, trace, floor)?;
    Ok(weighted / parity)
}

//! Covariance-matrix calculus for Gaussian bosonic states.
//!
//! Quadratures follow `x = (a + a†)/√2`, `p = -i(a - a†)/√2`, so the vacuum
//! has `Var(x) = Var(p) = 1/2`. Phase-space vectors are ordered
//! `(x₁, p₁, x₂, p₂, …)`, keeping each mode's 2×2 block contiguous.
//!
//! Passive operations are specified by the complex mode matrix `M` of the
//! Heisenberg map `aⱼ → Σₖ Mⱼₖ aₖ`; the Fock engine uses the same matrices,
//! which is what lets the two engines be compared element by element.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Variance of either quadrature in the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.5;

const SYMMETRY_TOL: f64 = 1e-12;
const SYMPLECTIC_TOL: f64 = 1e-10;
const PHYSICALITY_TOL: f64 = 1e-9;
const CENTRED_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("squeezing magnitude must be non-negative, got {0}")]
    NegativeSqueezing(f64),
    #[error("mean occupation must be non-negative, got {0}")]
    NegativeOccupation(f64),
    #[error("transmission must lie in [0, 1], got {0}")]
    TransmissionOutOfRange(f64),
    #[error("purity must lie in (0, 1], got {0}")]
    PurityOutOfRange(f64),
    #[error("total quadrature variance must be at least 1, got {0}")]
    TotalVarianceOutOfRange(f64),
    #[error("operator acts on {expected} modes but {got} were selected")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mode {0} selected more than once")]
    RepeatedMode(usize),
    #[error("mode {index} out of range for a {num_modes}-mode state")]
    ModeOutOfRange { index: usize, num_modes: usize },
    #[error("covariance has shape {rows}x{cols}, expected {expected}x{expected}")]
    BadShape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("covariance is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not symplectic (max |SᵀΩS - Ω| = {0:e})")]
    NotSymplectic(f64),
    #[error("covariance violates the uncertainty relation (min eigenvalue of V + iΩ/2 = {0:e})")]
    Unphysical(f64),
    #[error("covariance determinant {0:e} is not positive")]
    SingularCovariance(f64),
    #[error("state is displaced (|mean| = {0:e}); the Gaussian QCS form needs a centred state")]
    NotCentred(f64),
    #[error("expected a single-mode state, got {0} modes")]
    NotSingleMode(usize),
    #[error(
        "initial state is not certified quantum (W·P² = {0} <= 1), so its QCS never crosses 1"
    )]
    NoCrossing(f64),
}

pub type Result<T> = std::result::Result<T, GaussianError>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(GaussianError::NonFinite { name, value })
    }
}

pub(crate) fn check_transmission(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(GaussianError::TransmissionOutOfRange(eta))
    }
}

/// The symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]` on `num_modes` modes.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * num_modes, 2 * num_modes);
    for k in 0..num_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// What a [`SymplecticOp`] was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpKind {
    Squeeze {
        r: f64,
        phi: f64,
    },
    Phase {
        theta: f64,
    },
    /// `(1/√2)[[1, i], [i, 1]]`, the entangling beam splitter.
    BsSymmetric,
    /// `(1/√2)[[1, 1], [1, -1]]`, the measurement beam splitter.
    BsBalanced,
    Custom,
}

/// A real symplectic matrix acting on a contiguous set of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    matrix: DMatrix<f64>,
    kind: OpKind,
}

impl SymplecticOp {
    /// Single-mode squeezer matching `exp(-(ξ a†² - ξ* a²)/2)` with `ξ = r e^{iφ}`.
    pub fn squeeze(r: f64, phi: f64) -> Result<Self> {
        check_finite("r", r)?;
        check_finite("phi", phi)?;
        let (ch, sh) = (r.cosh(), r.sinh());
        let (c, s) = (phi.cos(), phi.sin());
        let matrix = DMatrix::from_row_slice(2, 2, &[ch - sh * c, -sh * s, -sh * s, ch + sh * c]);
        Ok(Self {
            matrix,
            kind: OpKind::Squeeze { r, phi },
        })
    }

    /// Phase shifter `a → e^{iθ} a`.
    pub fn phase(theta: f64) -> Result<Self> {
        check_finite("theta", theta)?;
        let m = DMatrix::from_element(1, 1, Complex64::from_polar(1.0, theta));
        Ok(Self {
            matrix: passive_symplectic(&m),
            kind: OpKind::Phase { theta },
        })
    }

    pub fn bs_symmetric() -> Self {
        Self {
            matrix: passive_symplectic(&bs_symmetric_modes()),
            kind: OpKind::BsSymmetric,
        }
    }

    pub fn bs_balanced() -> Self {
        Self {
            matrix: passive_symplectic(&bs_balanced_modes()),
            kind: OpKind::BsBalanced,
        }
    }

    /// Wraps an arbitrary matrix after checking `SᵀΩS = Ω`.
    pub fn custom(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || !n.is_multiple_of(2) || matrix.ncols() != n {
            return Err(GaussianError::BadShape {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                expected: n + n % 2,
            });
        }
        let op = Self {
            matrix,
            kind: OpKind::Custom,
        };
        let defect = op.symplectic_defect();
        if defect > SYMPLECTIC_TOL {
            return Err(GaussianError::NotSymplectic(defect));
        }
        Ok(op)
    }

    /// Passive operation from a unitary mode matrix.
    pub fn passive(modes: &DMatrix<Complex64>) -> Result<Self> {
        Self::custom(passive_symplectic(modes))
    }

    pub fn num_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    /// Largest entry of `|SᵀΩS - Ω|`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.num_modes());
        (self.matrix.transpose() * &omega * &self.matrix - omega).amax()
    }
}

/// Mode matrix of the symmetric beam splitter.
pub fn bs_symmetric_modes() -> DMatrix<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(h, 0.0),
            Complex64::new(0.0, h),
            Complex64::new(0.0, h),
            Complex64::new(h, 0.0),
        ],
    )
}

/// Mode matrix of the balanced beam splitter.
pub fn bs_balanced_modes() -> DMatrix<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    )
}

/// Real symplectic image of the mode map `aⱼ → Σₖ Mⱼₖ aₖ`.
pub fn passive_symplectic(modes: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = modes.nrows();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let m = modes[(j, k)];
            s[(2 * j, 2 * k)] = m.re;
            s[(2 * j, 2 * k + 1)] = -m.im;
            s[(2 * j + 1, 2 * k)] = m.im;
            s[(2 * j + 1, 2 * k + 1)] = m.re;
        }
    }
    s
}

/// Mean vector and covariance matrix of an m-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn vacuum(num_modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * num_modes),
            cov: DMatrix::identity(2 * num_modes, 2 * num_modes) * VACUUM_VARIANCE,
        }
    }

    /// Single-mode squeezed vacuum `|r e^{iφ}⟩`.
    pub fn squeezed_vacuum(r: f64, phi: f64) -> Result<Self> {
        check_finite("r", r)?;
        check_finite("phi", phi)?;
        if r < 0.0 {
            return Err(GaussianError::NegativeSqueezing(r));
        }
        let (c2, s2) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let (c, s) = (phi.cos(), phi.sin());
        let cov = DMatrix::from_row_slice(
            2,
            2,
            &[
                0.5 * (c2 - s2 * c),
                -0.5 * s2 * s,
                -0.5 * s2 * s,
                0.5 * (c2 + s2 * c),
            ],
        );
        Ok(Self {
            mean: DVector::zeros(2),
            cov,
        })
    }

    /// Single-mode thermal state with mean occupation `nbar`.
    pub fn thermal(nbar: f64) -> Result<Self> {
        check_finite("nbar", nbar)?;
        if nbar < 0.0 {
            return Err(GaussianError::NegativeOccupation(nbar));
        }
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2) * (nbar + VACUUM_VARIANCE),
        })
    }

    /// Builds a state from raw moments, checking shape, symmetry and the
    /// uncertainty relation.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) || cov.nrows() != dim || cov.ncols() != dim {
            return Err(GaussianError::BadShape {
                rows: cov.nrows(),
                cols: cov.ncols(),
                expected: dim,
            });
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        let asym = (&cov - cov.transpose()).amax() / scale;
        if asym > SYMMETRY_TOL {
            return Err(GaussianError::NotSymmetric(asym));
        }
        let state = Self {
            mean,
            cov: symmetrize(&cov),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn num_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Checks `V + iΩ/2 ⪰ 0`. This is an O(m³) eigenvalue solve, so the
    /// transforms below only run it in debug builds.
    pub fn validate(&self) -> Result<()> {
        let m = self.num_modes();
        let omega = symplectic_form(m);
        let herm = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
            Complex64::new(self.cov[(i, j)], 0.5 * omega[(i, j)])
        });
        let min = herm.symmetric_eigenvalues().min();
        if min < -PHYSICALITY_TOL {
            Err(GaussianError::Unphysical(min))
        } else {
            Ok(())
        }
    }

    fn checked(self) -> Result<Self> {
        if cfg!(debug_assertions) {
            self.validate()?;
        }
        Ok(self)
    }

    fn check_mode(&self, index: usize) -> Result<()> {
        if index < self.num_modes() {
            Ok(())
        } else {
            Err(GaussianError::ModeOutOfRange {
                index,
                num_modes: self.num_modes(),
            })
        }
    }

    /// Direct sum `self ⊕ other`; `other`'s modes follow `self`'s.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    /// Reduced state on `modes`, in the order given.
    pub fn reduced(&self, modes: &[usize]) -> Result<GaussianState> {
        self.check_distinct(modes)?;
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let mean = DVector::from_fn(idx.len(), |i, _| self.mean[idx[i]]);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        Ok(GaussianState { mean, cov })
    }

    fn check_distinct(&self, modes: &[usize]) -> Result<()> {
        for (i, &k) in modes.iter().enumerate() {
            self.check_mode(k)?;
            if modes[..i].contains(&k) {
                return Err(GaussianError::RepeatedMode(k));
            }
        }
        Ok(())
    }

    /// `mean → S·mean`, `cov → S·cov·Sᵀ` with `S` embedded on `modes`.
    pub fn apply_symplectic(&self, op: &SymplecticOp, modes: &[usize]) -> Result<GaussianState> {
        if op.num_modes() != modes.len() {
            return Err(GaussianError::DimensionMismatch {
                expected: op.num_modes(),
                got: modes.len(),
            });
        }
        self.check_distinct(modes)?;
        let dim = self.mean.len();
        let mut full = DMatrix::identity(dim, dim);
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        for (i, &gi) in idx.iter().enumerate() {
            for (j, &gj) in idx.iter().enumerate() {
                full[(gi, gj)] = op.matrix[(i, j)];
            }
        }
        let mean = &full * &self.mean;
        let cov = symmetrize(&(&full * &self.cov * full.transpose()));
        GaussianState { mean, cov }.checked()
    }

    /// Pure-loss channel `a → √η a + √(1-η) v` on one mode.
    pub fn apply_loss(&self, eta: f64, mode: usize) -> Result<GaussianState> {
        check_transmission(eta)?;
        self.check_mode(mode)?;
        let t = eta.sqrt();
        let mut scale = DVector::from_element(self.mean.len(), 1.0);
        scale[2 * mode] = t;
        scale[2 * mode + 1] = t;
        let mean = self.mean.component_mul(&scale);
        let mut cov = DMatrix::from_fn(self.cov.nrows(), self.cov.ncols(), |i, j| {
            self.cov[(i, j)] * scale[i] * scale[j]
        });
        cov[(2 * mode, 2 * mode)] += (1.0 - eta) * VACUUM_VARIANCE;
        cov[(2 * mode + 1, 2 * mode + 1)] += (1.0 - eta) * VACUUM_VARIANCE;
        GaussianState {
            mean,
            cov: symmetrize(&cov),
        }
        .checked()
    }

    /// `1/(2^m √det V)`.
    pub fn purity(&self) -> Result<f64> {
        let det = self.cov.determinant();
        if det.is_nan() || det <= 0.0 {
            return Err(GaussianError::SingularCovariance(det));
        }
        Ok(1.0 / (2f64.powi(self.num_modes() as i32) * det.sqrt()))
    }

    /// `W = V_xx + V_pp` of a single-mode state.
    pub fn total_variance(&self) -> Result<f64> {
        if self.num_modes() != 1 {
            return Err(GaussianError::NotSingleMode(self.num_modes()));
        }
        Ok(self.cov[(0, 0)] + self.cov[(1, 1)])
    }

    /// `⟨a†a⟩` of one mode.
    pub fn mean_photon(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let (x, p) = (self.mean[2 * mode], self.mean[2 * mode + 1]);
        let w = self.cov[(2 * mode, 2 * mode)] + self.cov[(2 * mode + 1, 2 * mode + 1)];
        Ok(0.5 * (w - 1.0) + 0.5 * (x * x + p * p))
    }

    /// `⟨a†a⟩ - |⟨a⟩|²` of one mode.
    pub fn excess_photon(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let w = self.cov[(2 * mode, 2 * mode)] + self.cov[(2 * mode + 1, 2 * mode + 1)];
        Ok(0.5 * (w - 1.0))
    }
}

/// QCS of a centred single-mode Gaussian state, `[Var x + Var p]·P²`.
pub fn qcs_gaussian(state: &GaussianState) -> Result<f64> {
    if state.num_modes() != 1 {
        return Err(GaussianError::NotSingleMode(state.num_modes()));
    }
    let offset = state.mean.norm();
    if offset > CENTRED_TOL {
        return Err(GaussianError::NotCentred(offset));
    }
    let purity = state.purity()?;
    Ok(state.total_variance()? * purity * purity)
}

/// QCS after loss `η` of a centred Gaussian state with total variance `W`
/// and purity `purity_i` before the loss.
pub fn qcs_lossy_gaussian(w: f64, purity_i: f64, eta: f64) -> Result<f64> {
    check_finite("W", w)?;
    check_finite("purity", purity_i)?;
    check_transmission(eta)?;
    if w < 1.0 - SYMMETRY_TOL {
        return Err(GaussianError::TotalVarianceOutOfRange(w));
    }
    if !(purity_i > 0.0 && purity_i <= 1.0) {
        return Err(GaussianError::PurityOutOfRange(purity_i));
    }
    let p2 = purity_i * purity_i;
    let num = (eta * (w - 1.0) + 1.0) * p2;
    let den = eta * eta + (1.0 - eta) * (eta * (2.0 * w - 1.0) + 1.0) * p2;
    Ok(num / den)
}

/// QCS of squeezed vacuum `|r⟩` after loss `η`.
pub fn qcs_squeezed_lossy(r: f64, eta: f64) -> Result<f64> {
    check_finite("r", r)?;
    if r < 0.0 {
        return Err(GaussianError::NegativeSqueezing(r));
    }
    check_transmission(eta)?;
    let excess = eta * (2.0 * r).cosh() - eta;
    Ok(1.0 / (1.0 + (1.0 - 2.0 * eta) * excess / (excess + 1.0)))
}

/// QCS of a thermal state with occupation `nbar` after loss `η`.
pub fn qcs_thermal_lossy(nbar: f64, eta: f64) -> Result<f64> {
    check_finite("nbar", nbar)?;
    if nbar < 0.0 {
        return Err(GaussianError::NegativeOccupation(nbar));
    }
    check_transmission(eta)?;
    Ok(1.0 / (1.0 + 2.0 * eta * nbar))
}

/// Transmission at which a certifiably quantum Gaussian state's QCS drops
/// to 1.
pub fn eta_star(w: f64, purity_i: f64) -> Result<f64> {
    check_finite("W", w)?;
    check_finite("purity", purity_i)?;
    if !(purity_i > 0.0 && purity_i <= 1.0) {
        return Err(GaussianError::PurityOutOfRange(purity_i));
    }
    let p2 = purity_i * purity_i;
    if w * p2 <= 1.0 {
        return Err(GaussianError::NoCrossing(w * p2));
    }
    Ok(p2 * (w - 1.0) / (2.0 * p2 * w - p2 - 1.0))
}

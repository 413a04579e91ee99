use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::basis::FockBasis;
use super::passive::{apply_to_vector, orbits, PassiveUnitary};
use super::FockError;

type Result<T> = std::result::Result<T, FockError>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Pure state on a total-number-truncated Fock basis. Amplitudes are kept
/// unnormalised; whatever the truncation shaved off shows up in
/// [`FockKet::norm_deficit`].
#[derive(Debug, Clone)]
pub struct FockKet {
    basis: Arc<FockBasis>,
    amps: DVector<Complex64>,
}

impl FockKet {
    pub fn new(basis: Arc<FockBasis>, amps: DVector<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(FockError::DimensionMismatch {
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        Ok(Self { basis, amps })
    }

    /// Single-mode ket from amplitudes `⟨n|ψ⟩`, `n = 0..amps.len()`.
    pub fn single_mode(amps: Vec<Complex64>) -> Self {
        assert!(!amps.is_empty(), "need at least the vacuum amplitude");
        let basis = FockBasis::new(1, amps.len() - 1);
        Self {
            basis,
            amps: DVector::from_vec(amps),
        }
    }

    pub fn vacuum(num_modes: usize, cutoff: usize) -> Self {
        Self::number_state(&vec![0; num_modes], cutoff).expect("vacuum fits any cutoff")
    }

    pub fn number_state(occupation: &[usize], cutoff: usize) -> Result<Self> {
        let basis = FockBasis::new(occupation.len(), cutoff);
        let idx = basis
            .index_of(occupation)
            .ok_or(FockError::CutoffTooSmall {
                cutoff,
                deficit: 1.0,
                tolerance: 0.0,
                suggested: occupation.iter().sum(),
            })?;
        let mut amps = DVector::zeros(basis.dim());
        amps[idx] = c(1.0);
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn num_modes(&self) -> usize {
        self.basis.num_modes()
    }

    pub fn cutoff(&self) -> usize {
        self.basis.cutoff()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Complex64 {
        self.basis
            .index_of(occupation)
            .map_or(Complex64::default(), |i| self.amps[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn norm_deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// `self ⊗ other` on the combined cutoff, which holds the product exactly.
    pub fn tensor(&self, other: &FockKet) -> FockKet {
        let basis = product_basis(&self.basis, &other.basis);
        let mut amps = DVector::zeros(basis.dim());
        let mut occ = vec![0; basis.num_modes()];
        let m1 = self.num_modes();
        for (i, a) in self.basis.iter().enumerate() {
            if self.amps[i] == Complex64::default() {
                continue;
            }
            occ[..m1].copy_from_slice(a);
            for (j, b) in other.basis.iter().enumerate() {
                occ[m1..].copy_from_slice(b);
                let k = basis.index_of(&occ).expect("product fits combined cutoff");
                amps[k] = self.amps[i] * other.amps[j];
            }
        }
        FockKet { basis, amps }
    }

    pub fn to_density(&self) -> FockDensityOperator {
        FockDensityOperator {
            basis: self.basis.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Re-expresses the ket on a different cutoff; returns the discarded
    /// squared norm when shrinking.
    pub fn with_cutoff(&self, cutoff: usize) -> (FockKet, f64) {
        let (basis, map) = recut(&self.basis, cutoff);
        let mut amps = DVector::zeros(basis.dim());
        let mut dropped = 0.0;
        for (i, target) in map.iter().enumerate() {
            match target {
                Some(k) => amps[*k] = self.amps[i],
                None => dropped += self.amps[i].norm_sqr(),
            }
        }
        (FockKet { basis, amps }, dropped)
    }

    pub fn apply_passive(&self, u: &PassiveUnitary, modes: &[usize]) -> Result<FockKet> {
        check_passive(&self.basis, u, modes)?;
        let groups = orbits(&self.basis, modes);
        let mut amps = self.amps.clone();
        apply_to_vector(u, &groups, &mut amps);
        Ok(FockKet {
            basis: self.basis.clone(),
            amps,
        })
    }

    /// Applies a dense unitary to a single-mode ket.
    pub fn apply_dense(&self, u: &DMatrix<Complex64>) -> Result<FockKet> {
        check_dense(&self.basis, u)?;
        Ok(FockKet {
            basis: self.basis.clone(),
            amps: u * &self.amps,
        })
    }
}

/// Density operator on a total-number-truncated Fock basis.
#[derive(Debug, Clone)]
pub struct FockDensityOperator {
    basis: Arc<FockBasis>,
    matrix: DMatrix<Complex64>,
}

impl FockDensityOperator {
    pub fn new(basis: Arc<FockBasis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = basis.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(FockError::DimensionMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        Ok(Self { basis, matrix })
    }

    /// Single-mode operator diagonal in the number basis.
    pub fn diagonal(probs: &[f64]) -> Self {
        assert!(!probs.is_empty(), "need at least the vacuum population");
        let basis = FockBasis::new(1, probs.len() - 1);
        let matrix = DMatrix::from_diagonal(&DVector::from_iterator(
            probs.len(),
            probs.iter().map(|&p| c(p)),
        ));
        Self { basis, matrix }
    }

    /// Thermal state `Σ nbarᵐ/(nbar+1)^{m+1} |m⟩⟨m|` truncated at `cutoff`.
    pub fn thermal(nbar: f64, cutoff: usize) -> Result<Self> {
        if !nbar.is_finite() || nbar < 0.0 {
            return Err(FockError::InvalidParameter {
                name: "nbar",
                value: nbar,
            });
        }
        let ratio = nbar / (nbar + 1.0);
        let mut p = 1.0 / (nbar + 1.0);
        let probs: Vec<f64> = (0..=cutoff)
            .map(|_| {
                let v = p;
                p *= ratio;
                v
            })
            .collect();
        Ok(Self::diagonal(&probs))
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn num_modes(&self) -> usize {
        self.basis.num_modes()
    }

    pub fn cutoff(&self) -> usize {
        self.basis.cutoff()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    /// `Tr ρ²` of the operator as stored (no renormalisation).
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        herm.symmetric_eigenvalues().min()
    }

    /// Number-basis populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.basis.dim())
            .map(|i| self.matrix[(i, i)].re)
            .collect()
    }

    pub fn tensor(&self, other: &FockDensityOperator) -> FockDensityOperator {
        let basis = product_basis(&self.basis, &other.basis);
        let m1 = self.num_modes();
        let mut index = Vec::with_capacity(self.basis.dim() * other.basis.dim());
        let mut occ = vec![0; basis.num_modes()];
        for a in self.basis.iter() {
            occ[..m1].copy_from_slice(a);
            for b in other.basis.iter() {
                occ[m1..].copy_from_slice(b);
                index.push(basis.index_of(&occ).expect("product fits combined cutoff"));
            }
        }
        let d2 = other.basis.dim();
        let mut matrix = DMatrix::zeros(basis.dim(), basis.dim());
        for i1 in 0..self.basis.dim() {
            for j1 in 0..self.basis.dim() {
                let x = self.matrix[(i1, j1)];
                if x == Complex64::default() {
                    continue;
                }
                for i2 in 0..d2 {
                    let row = index[i1 * d2 + i2];
                    for j2 in 0..d2 {
                        matrix[(row, index[j1 * d2 + j2])] = x * other.matrix[(i2, j2)];
                    }
                }
            }
        }
        FockDensityOperator { basis, matrix }
    }

    /// Reduced operator on `keep` (in that order), tracing out the rest.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<FockDensityOperator> {
        check_modes(&self.basis, keep)?;
        let traced: Vec<usize> = (0..self.num_modes())
            .filter(|k| !keep.contains(k))
            .collect();
        let basis = FockBasis::new(keep.len(), self.cutoff());
        // group indices by the traced-out occupation
        let mut groups: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, occ) in self.basis.iter().enumerate() {
            let env: Vec<usize> = traced.iter().map(|&k| occ[k]).collect();
            let sys: Vec<usize> = keep.iter().map(|&k| occ[k]).collect();
            let target = basis.index_of(&sys).expect("subsystem fits cutoff");
            groups.entry(env).or_default().push((i, target));
        }
        let mut matrix = DMatrix::zeros(basis.dim(), basis.dim());
        for members in groups.values() {
            for &(i, ti) in members {
                for &(j, tj) in members {
                    matrix[(ti, tj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(FockDensityOperator { basis, matrix })
    }

    pub fn with_cutoff(&self, cutoff: usize) -> (FockDensityOperator, f64) {
        let (basis, map) = recut(&self.basis, cutoff);
        let mut matrix = DMatrix::zeros(basis.dim(), basis.dim());
        let mut dropped = 0.0;
        for (i, ti) in map.iter().enumerate() {
            match ti {
                Some(ti) => {
                    for (j, tj) in map.iter().enumerate() {
                        if let Some(tj) = tj {
                            matrix[(*ti, *tj)] = self.matrix[(i, j)];
                        }
                    }
                }
                None => dropped += self.matrix[(i, i)].re,
            }
        }
        (FockDensityOperator { basis, matrix }, dropped)
    }

    /// `ρ → UρU†` on `modes`.
    pub fn apply_passive(
        &self,
        u: &PassiveUnitary,
        modes: &[usize],
    ) -> Result<FockDensityOperator> {
        check_passive(&self.basis, u, modes)?;
        let groups = orbits(&self.basis, modes);
        let d = self.basis.dim();
        let mut left = self.matrix.clone();
        for j in 0..d {
            let mut col = left.column(j).into_owned();
            apply_to_vector(u, &groups, &mut col);
            left.set_column(j, &col);
        }
        // U (Uρ)† = UρU† for Hermitian ρ
        let mut out = left.adjoint();
        for j in 0..d {
            let mut col = out.column(j).into_owned();
            apply_to_vector(u, &groups, &mut col);
            out.set_column(j, &col);
        }
        Ok(FockDensityOperator {
            basis: self.basis.clone(),
            matrix: out,
        })
    }

    /// Applies a dense unitary to a single-mode operator.
    pub fn apply_dense(&self, u: &DMatrix<Complex64>) -> Result<FockDensityOperator> {
        check_dense(&self.basis, u)?;
        Ok(FockDensityOperator {
            basis: self.basis.clone(),
            matrix: u * &self.matrix * u.adjoint(),
        })
    }

    /// Pure-loss channel `a → √η a + √(1−η) v` on `mode`, as the Kraus sum
    /// `Σₖ Kₖ ρ Kₖ†` with `Kₖ|n⟩ = √C(n,k) η^{(n−k)/2} (1−η)^{k/2} |n−k⟩`.
    pub fn apply_loss(&self, eta: f64, mode: usize) -> Result<FockDensityOperator> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(FockError::TransmissionOutOfRange(eta));
        }
        check_modes(&self.basis, &[mode])?;
        if eta == 1.0 {
            return Ok(self.clone());
        }
        let d = self.basis.dim();
        let cutoff = self.cutoff();
        let kraus = kraus_coefficients(eta, cutoff);
        // targets[i] lists (k, index of state i with k photons removed from `mode`, coefficient)
        let targets: Vec<Vec<(usize, usize, f64)>> = self
            .basis
            .iter()
            .map(|occ| {
                let n = occ[mode];
                let mut lowered = occ.to_vec();
                (0..=n)
                    .filter_map(|k| {
                        let coeff = kraus[n][k];
                        if coeff == 0.0 {
                            return None;
                        }
                        lowered[mode] = n - k;
                        Some((
                            k,
                            self.basis
                                .index_of(&lowered)
                                .expect("lowering stays in basis"),
                            coeff,
                        ))
                    })
                    .collect()
            })
            .collect();
        let mut matrix = DMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                let x = self.matrix[(i, j)];
                if x == Complex64::default() {
                    continue;
                }
                let (ti, tj) = (&targets[i], &targets[j]);
                // both lists are sorted by k; pair equal k
                let (mut a, mut b) = (0, 0);
                while a < ti.len() && b < tj.len() {
                    match ti[a].0.cmp(&tj[b].0) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            matrix[(ti[a].1, tj[b].1)] += x * (ti[a].2 * tj[b].2);
                            a += 1;
                            b += 1;
                        }
                    }
                }
            }
        }
        Ok(FockDensityOperator {
            basis: self.basis.clone(),
            matrix,
        })
    }
}

/// `kraus[n][k] = √C(n,k) η^{(n−k)/2} (1−η)^{k/2}` for `0 ≤ k ≤ n ≤ cutoff`.
pub(crate) fn kraus_coefficients(eta: f64, cutoff: usize) -> Vec<Vec<f64>> {
    let mut ln_fact = vec![0.0; cutoff + 1];
    for n in 1..=cutoff {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    (0..=cutoff)
        .map(|n| {
            (0..=n)
                .map(|k| {
                    let binom = (0.5 * (ln_fact[n] - ln_fact[k] - ln_fact[n - k])).exp();
                    binom * eta.powf(0.5 * (n - k) as f64) * (1.0 - eta).powf(0.5 * k as f64)
                })
                .collect()
        })
        .collect()
}

fn product_basis(a: &FockBasis, b: &FockBasis) -> Arc<FockBasis> {
    FockBasis::new(a.num_modes() + b.num_modes(), a.cutoff() + b.cutoff())
}

fn recut(basis: &FockBasis, cutoff: usize) -> (Arc<FockBasis>, Vec<Option<usize>>) {
    let target = FockBasis::new(basis.num_modes(), cutoff);
    let map = basis.iter().map(|occ| target.index_of(occ)).collect();
    (target, map)
}

fn check_modes(basis: &FockBasis, modes: &[usize]) -> Result<()> {
    for (i, &k) in modes.iter().enumerate() {
        if k >= basis.num_modes() {
            return Err(FockError::ModeOutOfRange {
                index: k,
                num_modes: basis.num_modes(),
            });
        }
        if modes[..i].contains(&k) {
            return Err(FockError::RepeatedMode(k));
        }
    }
    Ok(())
}

fn check_passive(basis: &FockBasis, u: &PassiveUnitary, modes: &[usize]) -> Result<()> {
    if u.num_modes() != modes.len() {
        return Err(FockError::ModeMismatch {
            expected: u.num_modes(),
            got: modes.len(),
        });
    }
    check_modes(basis, modes)?;
    if u.max_total() < basis.cutoff() {
        return Err(FockError::DimensionMismatch {
            expected: basis.cutoff(),
            got: u.max_total(),
        });
    }
    Ok(())
}

fn check_dense(basis: &FockBasis, u: &DMatrix<Complex64>) -> Result<()> {
    if basis.num_modes() != 1 {
        return Err(FockError::NotSingleMode(basis.num_modes()));
    }
    if u.nrows() != basis.dim() || u.ncols() != basis.dim() {
        return Err(FockError::DimensionMismatch {
            expected: basis.dim(),
            got: u.nrows(),
        });
    }
    let defect = super::passive::unitarity_defect(u);
    if defect > 1e-10 {
        return Err(FockError::NonUnitary(defect));
    }
    Ok(())
}

/// Either representation; pure states stay kets until a channel mixes them.
#[derive(Debug, Clone)]
pub enum FockState {
    Pure(FockKet),
    Mixed(FockDensityOperator),
}

impl From<FockKet> for FockState {
    fn from(k: FockKet) -> Self {
        FockState::Pure(k)
    }
}

impl From<FockDensityOperator> for FockState {
    fn from(r: FockDensityOperator) -> Self {
        FockState::Mixed(r)
    }
}

impl FockState {
    pub fn basis(&self) -> &Arc<FockBasis> {
        match self {
            FockState::Pure(k) => k.basis(),
            FockState::Mixed(r) => r.basis(),
        }
    }

    pub fn num_modes(&self) -> usize {
        self.basis().num_modes()
    }

    pub fn cutoff(&self) -> usize {
        self.basis().cutoff()
    }

    pub fn to_density(&self) -> FockDensityOperator {
        match self {
            FockState::Pure(k) => k.to_density(),
            FockState::Mixed(r) => r.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            FockState::Pure(k) => k.norm_sqr(),
            FockState::Mixed(r) => r.trace(),
        }
    }

    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        match self {
            FockState::Pure(k) => k.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
            FockState::Mixed(r) => r.populations(),
        }
    }

    pub fn tensor(&self, other: &FockState) -> FockState {
        match (self, other) {
            (FockState::Pure(a), FockState::Pure(b)) => FockState::Pure(a.tensor(b)),
            _ => FockState::Mixed(self.to_density().tensor(&other.to_density())),
        }
    }

    pub fn apply_passive(&self, u: &PassiveUnitary, modes: &[usize]) -> Result<FockState> {
        Ok(match self {
            FockState::Pure(k) => FockState::Pure(k.apply_passive(u, modes)?),
            FockState::Mixed(r) => FockState::Mixed(r.apply_passive(u, modes)?),
        })
    }

    pub fn apply_loss(&self, eta: f64, mode: usize) -> Result<FockState> {
        if eta == 1.0 {
            check_modes(self.basis(), &[mode])?;
            return Ok(self.clone());
        }
        Ok(FockState::Mixed(self.to_density().apply_loss(eta, mode)?))
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<FockState> {
        if keep.len() == self.num_modes() && keep.iter().enumerate().all(|(i, &k)| i == k) {
            return Ok(self.clone());
        }
        match self {
            FockState::Pure(k) => Ok(FockState::Mixed(ket_partial_trace(k, keep)?)),
            FockState::Mixed(r) => Ok(FockState::Mixed(r.partial_trace(keep)?)),
        }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> (FockState, f64) {
        match self {
            FockState::Pure(k) => {
                let (k, d) = k.with_cutoff(cutoff);
                (FockState::Pure(k), d)
            }
            FockState::Mixed(r) => {
                let (r, d) = r.with_cutoff(cutoff);
                (FockState::Mixed(r), d)
            }
        }
    }

    /// Smallest cutoff whose discarded population is at most `tol`, and the
    /// state re-expressed on it.
    pub fn trimmed(&self, tol: f64) -> (FockState, f64) {
        let basis = self.basis();
        let pops = self.populations();
        let mut by_total = vec![0.0; basis.cutoff() + 1];
        for (i, p) in pops.iter().enumerate() {
            by_total[basis.total(i)] += p.max(0.0);
        }
        let mut cut = basis.cutoff();
        let mut tail = 0.0;
        while cut > 0 && tail + by_total[cut] <= tol {
            tail += by_total[cut];
            cut -= 1;
        }
        self.with_cutoff(cut)
    }

    /// `⟨a†a⟩` of one mode.
    pub fn mean_photon(&self, mode: usize) -> Result<f64> {
        check_modes(self.basis(), &[mode])?;
        let basis = self.basis();
        Ok(self
            .populations()
            .iter()
            .enumerate()
            .map(|(i, p)| p * basis.occupation(i)[mode] as f64)
            .sum())
    }

    /// `⟨a⟩` of one mode.
    pub fn mean_amplitude(&self, mode: usize) -> Result<Complex64> {
        check_modes(self.basis(), &[mode])?;
        let basis = self.basis();
        let rho = self.to_density();
        let mut acc = Complex64::default();
        for (i, occ) in basis.iter().enumerate() {
            let n = occ[mode];
            if n == 0 {
                continue;
            }
            let mut lowered = occ.to_vec();
            lowered[mode] = n - 1;
            let j = basis.index_of(&lowered).expect("lowering stays in basis");
            // Tr(ρ a) = Σ ⟨i|ρ|j'⟩⟨j'|a|i⟩ with a|i⟩ = √n |j⟩
            acc += rho.matrix()[(i, j)] * (n as f64).sqrt();
        }
        Ok(acc)
    }

    /// Joint photon-number distribution of `modes`, marginalising the rest.
    pub fn photon_distribution(&self, modes: &[usize]) -> Result<JointDistribution> {
        check_modes(self.basis(), modes)?;
        let basis = self.basis();
        let mut probs = BTreeMap::new();
        for (i, p) in self.populations().into_iter().enumerate() {
            let key: Vec<usize> = modes.iter().map(|&k| basis.occupation(i)[k]).collect();
            *probs.entry(key).or_insert(0.0) += p;
        }
        Ok(JointDistribution {
            modes: modes.to_vec(),
            cutoff: basis.cutoff(),
            probs,
        })
    }
}

fn ket_partial_trace(ket: &FockKet, keep: &[usize]) -> Result<FockDensityOperator> {
    check_modes(ket.basis(), keep)?;
    let traced: Vec<usize> = (0..ket.num_modes()).filter(|k| !keep.contains(k)).collect();
    let basis = FockBasis::new(keep.len(), ket.cutoff());
    let mut groups: BTreeMap<Vec<usize>, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (i, occ) in ket.basis().iter().enumerate() {
        let a = ket.amplitudes()[i];
        if a == Complex64::default() {
            continue;
        }
        let env: Vec<usize> = traced.iter().map(|&k| occ[k]).collect();
        let sys: Vec<usize> = keep.iter().map(|&k| occ[k]).collect();
        groups
            .entry(env)
            .or_default()
            .push((basis.index_of(&sys).expect("subsystem fits cutoff"), a));
    }
    let mut matrix = DMatrix::zeros(basis.dim(), basis.dim());
    for members in groups.values() {
        for &(ti, ai) in members {
            for &(tj, aj) in members {
                matrix[(ti, tj)] += ai * aj.conj();
            }
        }
    }
    FockDensityOperator::new(basis, matrix)
}

/// Exact joint photon-number probabilities `p(n_a, …)` of a set of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    modes: Vec<usize>,
    cutoff: usize,
    probs: BTreeMap<Vec<usize>, f64>,
}

impl JointDistribution {
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn probability(&self, counts: &[usize]) -> f64 {
        self.probs.get(counts).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.probs.iter().map(|(k, &p)| (k.as_slice(), p))
    }

    /// Probability lost to truncation.
    pub fn tail_mass(&self) -> f64 {
        1.0 - self.probs.values().sum::<f64>()
    }

    /// `p_n` of one detected mode, `n = 0..=cutoff`, summing over the others.
    pub fn marginal(&self, mode: usize) -> Result<Vec<f64>> {
        let pos = self
            .modes
            .iter()
            .position(|&m| m == mode)
            .ok_or(FockError::ModeOutOfRange {
                index: mode,
                num_modes: self.modes.len(),
            })?;
        let mut out = vec![0.0; self.cutoff + 1];
        for (k, p) in &self.probs {
            out[k[pos]] += p;
        }
        Ok(out)
    }
}

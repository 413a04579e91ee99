//! Passive (photon-number conserving) unitaries lifted to Fock space.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::basis::FockBasis;
use super::FockError;

const UNITARY_TOL: f64 = 1e-10;

/// Largest entry of `|M†M − I|`.
pub fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    if m.ncols() != n {
        return f64::INFINITY;
    }
    (m.adjoint() * m - DMatrix::<Complex64>::identity(n, n)).camax()
}

/// Fock-space image of a one- or two-mode passive transformation with
/// mode matrix `M`, i.e. the unitary `U` with `U† aⱼ U = Σₖ Mⱼₖ aₖ`.
///
/// Block `N` acts on the two-mode states `|n, N−n⟩` (indexed by `n`). Blocks
/// are exact, so `U` is exactly unitary on any total-number-truncated space.
#[derive(Debug, Clone)]
pub struct PassiveUnitary {
    modes: DMatrix<Complex64>,
    blocks: Vec<DMatrix<Complex64>>,
}

impl PassiveUnitary {
    pub fn new(modes: DMatrix<Complex64>, max_total: usize) -> Result<Self, FockError> {
        let k = modes.nrows();
        if !(k == 1 || k == 2) || modes.ncols() != k {
            return Err(FockError::ModeMismatch {
                expected: 2,
                got: k,
            });
        }
        let defect = unitarity_defect(&modes);
        if defect > UNITARY_TOL {
            return Err(FockError::NonUnitary(defect));
        }
        let blocks = if k == 1 {
            let phase = modes[(0, 0)];
            let mut acc = Complex64::new(1.0, 0.0);
            (0..=max_total)
                .map(|_| {
                    let b = DMatrix::from_element(1, 1, acc);
                    acc *= phase;
                    b
                })
                .collect()
        } else {
            two_mode_blocks(&modes, max_total)
        };
        Ok(Self { modes, blocks })
    }

    pub fn num_modes(&self) -> usize {
        self.modes.nrows()
    }

    pub fn mode_matrix(&self) -> &DMatrix<Complex64> {
        &self.modes
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, total: usize) -> &DMatrix<Complex64> {
        &self.blocks[total]
    }

    /// Worst unitarity defect over all blocks.
    pub fn defect(&self) -> f64 {
        self.blocks.iter().map(unitarity_defect).fold(0.0, f64::max)
    }
}

/// Hermitian `h` with `exp(i h) = m` for a 2×2 unitary `m`.
fn unitary_log(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let i = Complex64::i();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let alpha = 0.5 * det.arg();
    // m = e^{iα} [[a, b], [−b̄, ā]] = e^{iα} exp(i θ n·σ)
    let w = m * Complex64::from_polar(1.0, -alpha);
    let (a, b) = (w[(0, 0)], w[(0, 1)]);
    let s = (a.im * a.im + b.norm_sqr()).sqrt();
    let theta = s.atan2(a.re);
    let (nx, ny, nz) = if s > 0.0 {
        let k = theta / s;
        (k * b.im, k * b.re, k * a.im)
    } else {
        (0.0, 0.0, theta)
    };
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(alpha + nz, 0.0),
            nx - i * ny,
            nx + i * ny,
            Complex64::new(alpha - nz, 0.0),
        ],
    )
}

/// Block `N` of `exp(i Σ hⱼₖ a†ⱼ aₖ)` with `exp(i h) = M`, computed from the
/// eigendecomposition of the tridiagonal generator on `|n, N−n⟩`.
fn two_mode_blocks(m: &DMatrix<Complex64>, max_total: usize) -> Vec<DMatrix<Complex64>> {
    let h = unitary_log(m);
    (0..=max_total)
        .map(|total| {
            let dim = total + 1;
            let mut g = DMatrix::zeros(dim, dim);
            for n in 0..dim {
                g[(n, n)] = h[(0, 0)] * n as f64 + h[(1, 1)] * (total - n) as f64;
                if n < total {
                    let c = (((n + 1) * (total - n)) as f64).sqrt();
                    g[(n + 1, n)] = h[(0, 1)] * c;
                    g[(n, n + 1)] = h[(1, 0)] * c;
                }
            }
            let eig = nalgebra::SymmetricEigen::new(g);
            let v = &eig.eigenvectors;
            let phases =
                DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, l)));
            v * phases * v.adjoint()
        })
        .collect()
}

/// Basis indices sharing every occupation outside `modes` and the same
/// total `N` inside it. For two modes the members are ordered by the
/// occupation of `modes[0]`, matching the block layout.
#[derive(Debug, Clone)]
pub(crate) struct Orbit {
    pub(crate) total: usize,
    pub(crate) members: Vec<usize>,
}

pub(crate) fn orbits(basis: &FockBasis, modes: &[usize]) -> Vec<Orbit> {
    let mut groups: HashMap<(Vec<usize>, usize), Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for (i, occ) in basis.iter().enumerate() {
        let total: usize = modes.iter().map(|&k| occ[k]).sum();
        let mut rest = occ.to_vec();
        for &k in modes {
            rest[k] = 0;
        }
        let key = (rest, total);
        let size = if modes.len() == 1 { 1 } else { total + 1 };
        let slot = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            vec![usize::MAX; size]
        });
        let pos = if modes.len() == 1 { 0 } else { occ[modes[0]] };
        slot[pos] = i;
    }
    order
        .into_iter()
        .map(|k| {
            let total = k.1;
            Orbit {
                total,
                members: groups.remove(&k).expect("group recorded"),
            }
        })
        .collect()
}

/// `v → U v` on the modes the orbits were built for.
pub(crate) fn apply_to_vector(u: &PassiveUnitary, orbits: &[Orbit], v: &mut DVector<Complex64>) {
    for orbit in orbits {
        let block = u.block(orbit.total);
        let g = &orbit.members;
        let src: DVector<Complex64> = DVector::from_iterator(g.len(), g.iter().map(|&i| v[i]));
        let out = block * src;
        for (j, &i) in g.iter().enumerate() {
            v[i] = out[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{bs_balanced_modes, bs_symmetric_modes};

    #[test]
    fn blocks_are_unitary() {
        for m in [bs_balanced_modes(), bs_symmetric_modes()] {
            let u = PassiveUnitary::new(m, 220).unwrap();
            assert!(u.defect() < 1e-11, "defect {}", u.defect());
        }
    }

    /// Blocks from `U|n, N−n⟩ = (U a† U†) U|n−1, N−n⟩ / √n` with
    /// `U a†ₖ U† = Σⱼ Mⱼₖ a†ⱼ`.
    fn recurrence_blocks(m: &DMatrix<Complex64>, max_total: usize) -> Vec<DMatrix<Complex64>> {
        let mut blocks = vec![DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))];
        for total in 1..=max_total {
            let prev = &blocks[total - 1];
            let mut block = DMatrix::zeros(total + 1, total + 1);
            for n in 0..=total {
                let (src, input, norm) = if n >= 1 {
                    (n - 1, 0, n as f64)
                } else {
                    (0, 1, total as f64)
                };
                let (ca, cb) = (m[(0, input)], m[(1, input)]);
                for k in 0..total {
                    let v = prev[(k, src)] / norm.sqrt();
                    block[(k + 1, n)] += ca * v * ((k + 1) as f64).sqrt();
                    block[(k, n)] += cb * v * ((total - k) as f64).sqrt();
                }
            }
            blocks.push(block);
        }
        blocks
    }

    #[test]
    fn blocks_match_creation_operator_recurrence() {
        let c = Complex64::from_polar(0.6, 0.3);
        let s = Complex64::from_polar(0.8, -1.1);
        let general = DMatrix::from_row_slice(2, 2, &[c, -s.conj(), s, c.conj()])
            * Complex64::from_polar(1.0, 0.7);
        for m in [
            bs_balanced_modes(),
            bs_symmetric_modes(),
            general,
            DMatrix::identity(2, 2),
        ] {
            let u = PassiveUnitary::new(m.clone(), 12).unwrap();
            for (n, b) in recurrence_blocks(&m, 12).iter().enumerate() {
                assert!((u.block(n) - b).camax() < 1e-12, "block {n}");
            }
        }
    }

    #[test]
    fn swap_and_negated_identity() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let swap = DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let u = PassiveUnitary::new(swap, 6).unwrap();
        for total in 0..=6 {
            for n in 0..=total {
                assert!((u.block(total)[(total - n, n)] - one).norm() < 1e-12);
            }
        }
        let minus = PassiveUnitary::new(-DMatrix::<Complex64>::identity(2, 2), 5).unwrap();
        for total in 0..=5 {
            let sign = if total % 2 == 0 { 1.0 } else { -1.0 };
            assert!(
                (minus.block(total)
                    - DMatrix::<Complex64>::identity(total + 1, total + 1)
                        * Complex64::new(sign, 0.0))
                .camax()
                    < 1e-12
            );
        }
    }

    #[test]
    fn single_photon_splits_evenly() {
        let u = PassiveUnitary::new(bs_balanced_modes(), 1).unwrap();
        // input |1,0⟩ is column n = 1 of block 1; rows are output |0,1⟩, |1,0⟩
        let col = u.block(1).column(1).into_owned();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((col[1] - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert!((col[0] - Complex64::new(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let u = PassiveUnitary::new(bs_balanced_modes(), 2).unwrap();
        // |1,1⟩ is n = 1 of block 2; coincidence output |1,1⟩ vanishes
        assert!(u.block(2)[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            PassiveUnitary::new(m, 3),
            Err(FockError::NonUnitary(_))
        ));
    }

    #[test]
    fn orbits_cover_basis() {
        let b = FockBasis::new(3, 5);
        let groups = orbits(&b, &[2, 0]);
        let mut seen: Vec<usize> = groups
            .iter()
            .flat_map(|o| o.members.iter().copied())
            .collect();
        assert!(seen.iter().all(|&i| i != usize::MAX));
        seen.sort_unstable();
        assert_eq!(seen, (0..b.dim()).collect::<Vec<_>>());
    }
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Single-mode operators truncated to `|0⟩ … |cutoff⟩`.
#[derive(Debug, Clone)]
pub struct LadderOps {
    cutoff: usize,
    pub a: DMatrix<Complex64>,
    pub adag: DMatrix<Complex64>,
    pub x: DMatrix<Complex64>,
    pub p: DMatrix<Complex64>,
    pub n: DMatrix<Complex64>,
    pub parity: DMatrix<Complex64>,
}

impl LadderOps {
    pub fn new(cutoff: usize) -> Self {
        let dim = cutoff + 1;
        let mut a = DMatrix::zeros(dim, dim);
        for k in 1..dim {
            a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
        }
        let adag = a.adjoint();
        let x = (&a + &adag) * Complex64::new(SQRT_HALF, 0.0);
        let p = (&a - &adag) * Complex64::new(0.0, -SQRT_HALF);
        let n = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(i as f64, 0.0)
            } else {
                Complex64::default()
            }
        });
        let parity = DMatrix::from_fn(dim, dim, |i, j| {
            if i != j {
                Complex64::default()
            } else if i % 2 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        });
        Self {
            cutoff,
            a,
            adag,
            x,
            p,
            n,
            parity,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }
}

/// Banded generator `G = (ξ* a² − ξ a†²)/2` of the squeezer `exp(G)`,
/// stored as its two non-zero diagonals.
#[derive(Debug, Clone)]
pub(crate) struct SqueezeGenerator {
    dim: usize,
    xi: Complex64,
}

impl SqueezeGenerator {
    pub(crate) fn new(r: f64, phi: f64, cutoff: usize) -> Self {
        Self {
            dim: cutoff + 1,
            xi: Complex64::from_polar(r, phi),
        }
    }

    fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for n in 0..self.dim {
            let vn = v[n];
            if vn == Complex64::default() {
                continue;
            }
            // a² |n⟩ = √(n(n−1)) |n−2⟩
            if n >= 2 {
                let c = ((n * (n - 1)) as f64).sqrt();
                out[n - 2] += 0.5 * self.xi.conj() * c * vn;
            }
            // a†² |n⟩ = √((n+1)(n+2)) |n+2⟩
            if n + 2 < self.dim {
                let c = (((n + 1) * (n + 2)) as f64).sqrt();
                out[n + 2] -= 0.5 * self.xi * c * vn;
            }
        }
        out
    }

    /// Upper bound on the induced 1-norm.
    fn norm_bound(&self) -> f64 {
        let d = self.dim as f64;
        self.xi.norm() * (d + 1.0)
    }

    /// `exp(G) v` by scaling and a Taylor series on each sub-step.
    pub(crate) fn exp_apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let steps = self.norm_bound().ceil().max(1.0) as usize;
        let scale = 1.0 / steps as f64;
        let mut state = v.clone();
        for _ in 0..steps {
            let mut term = state.clone();
            let mut acc = state.clone();
            let base = acc.norm().max(f64::MIN_POSITIVE);
            for k in 1..60 {
                term = self.apply(&term) * Complex64::new(scale / k as f64, 0.0);
                acc += &term;
                if term.norm() <= 1e-17 * base {
                    break;
                }
            }
            state = acc;
        }
        state
    }

    /// `exp(G) M exp(G)†` for a square matrix `M` on the same space.
    pub(crate) fn conjugate(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut left = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let col: DVector<Complex64> = m.column(j).into_owned();
            left.set_column(j, &self.exp_apply(&col));
        }
        // exp(G) (exp(G) M)† = exp(G) M† exp(G)†, Hermitian inputs only.
        let lh = left.adjoint();
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let col: DVector<Complex64> = lh.column(j).into_owned();
            out.set_column(j, &self.exp_apply(&col));
        }
        out
    }
}

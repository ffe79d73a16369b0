//! Seeded generators for random matrices, states and isometries.
//!
//! Every experiment draws from a [`ChaCha20Rng`] keyed by `(seed, stream)`, so
//! independent trials get independent streams regardless of execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, C64};

pub type ExperimentRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64, stream: u64) -> ExperimentRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex normal: real and imaginary parts i.i.d. `N(0, 1/2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    random_matrix(rng, d, d).hermitian_part()
}

/// Random density matrix `GG*/Tr(GG*)` with `G` of shape `d×rank`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> ComplexMatrix {
    let g = random_matrix(rng, d, rank.max(1));
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    w.scale_real(1.0 / tr).hermitian_part()
}

/// Haar-random isometry `V` (`rows ≥ cols`, `V*V = I`) from Gram–Schmidt on a
/// Gaussian matrix with the phase convention that makes the law Haar.
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    loop {
        let mut q = random_matrix(rng, rows, cols);
        if orthonormalize_columns(&mut q) {
            return q;
        }
    }
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    haar_isometry(rng, d, d)
}

/// Modified Gram–Schmidt, twice for stability. Returns false on rank deficiency.
fn orthonormalize_columns(q: &mut ComplexMatrix) -> bool {
    let (rows, cols) = q.shape();
    for j in 0..cols {
        for _pass in 0..2 {
            for p in 0..j {
                let mut proj = C64::new(0.0, 0.0);
                for i in 0..rows {
                    proj += q[(i, p)].conj() * q[(i, j)];
                }
                for i in 0..rows {
                    let qip = q[(i, p)];
                    q[(i, j)] -= qip * proj;
                }
            }
        }
        let norm: f64 = (0..rows).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return false;
        }
        for i in 0..rows {
            q[(i, j)] /= norm;
        }
    }
    true
}

/// Splits a `(r·n)×n` isometry into `r` blocks `a_i` of size `n×n`, which then
/// satisfy `Σ a_i*·a_i = I_n`.
pub fn isometry_blocks(v: &ComplexMatrix, n: usize) -> Vec<ComplexMatrix> {
    assert_eq!(v.cols(), n);
    assert_eq!(v.rows() % n, 0);
    (0..v.rows() / n).map(|i| v.block(i * n, 0, n, n)).collect()
}

/// Random family `{a_i}` of `terms` operators on `C^n` with `Σ a_i*·a_i = I`.
pub fn random_cstar_family<R: Rng + ?Sized>(rng: &mut R, n: usize, terms: usize) -> Vec<ComplexMatrix> {
    let v = haar_isometry(rng, terms * n, n);
    isometry_blocks(&v, n)
}

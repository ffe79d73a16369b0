//! Reference computations written directly against nalgebra, kept apart
//! from the library's own kernels so they can serve as oracles.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use cstar_polar::cpmaps::{choi_from_kraus, KrausFamily};
use cstar_polar::{CPMap, ComplexMatrix, MatrixTest};

pub type CMat = DMatrix<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_lib(a: &CMat) -> ComplexMatrix {
    let data = (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| a[(i, j)]))
        .collect();
    ComplexMatrix::new(a.nrows(), a.ncols(), data).unwrap()
}

pub fn from_lib(a: &ComplexMatrix) -> CMat {
    CMat::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

pub fn gaussian(r: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(r.sample::<f64, _>(StandardNormal), r.sample::<f64, _>(StandardNormal))
    })
}

pub fn density(r: &mut impl Rng, d: usize) -> CMat {
    let g = gaussian(r, d, d);
    let p = &g * g.adjoint();
    let tr = p.trace();
    p / tr
}

/// Orthonormal columns from a Gaussian matrix; the `n×n` row blocks
/// `a_i` then satisfy `Σ a_i* a_i = I`.
pub fn isometry_blocks(r: &mut impl Rng, terms: usize, n: usize) -> Vec<CMat> {
    let q = gaussian(r, terms * n, n).qr().q();
    (0..terms).map(|i| q.view((i * n, 0), (n, n)).into_owned()).collect()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn unit(d: usize, i: usize, j: usize) -> CMat {
    let mut e = CMat::zeros(d, d);
    e[(i, j)] = Complex64::new(1.0, 0.0);
    e
}

/// `(id_k ⊗ Φ)(s)` for `Φ(x) = Σ V x V*`.
pub fn ampliate(kraus: &[CMat], k: usize, s: &CMat) -> CMat {
    let n = kraus[0].nrows();
    let mut out = CMat::zeros(k * n, k * n);
    for v in kraus {
        let lift = kron(&CMat::identity(k, k), v);
        out += &lift * s * lift.adjoint();
    }
    out
}

/// `Tr(ρ·(id_k ⊗ Φ)(s))`.
pub fn pairing(kraus: &[CMat], k: usize, rho: &CMat, s: &CMat) -> Complex64 {
    (rho * ampliate(kraus, k, s)).trace()
}

/// `Σ E_pq ⊗ Φ(E_pq)`.
pub fn choi(kraus: &[CMat]) -> CMat {
    let (n, m) = kraus[0].shape();
    let mut c = CMat::zeros(m * n, m * n);
    for p in 0..m {
        for q in 0..m {
            let e = unit(m, p, q);
            let img = kraus.iter().fold(CMat::zeros(n, n), |acc, v| acc + v * &e * v.adjoint());
            c += kron(&e, &img);
        }
    }
    c
}

/// Spectrum of a Hermitian matrix through its real symmetric embedding
/// `[[A, −B], [B, A]]`, whose eigenvalues are those of `A + iB` doubled.
pub fn eigenvalues(h: &CMat) -> Vec<f64> {
    let d = h.nrows();
    let real = DMatrix::<f64>::from_fn(2 * d, 2 * d, |i, j| {
        let z = h[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(real).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

pub fn min_eigenvalue(h: &CMat) -> f64 {
    eigenvalues(h)[0]
}

/// `Tr_1` over the leading `d1`-dimensional factor.
pub fn partial_trace_first(x: &CMat, d1: usize, d2: usize) -> CMat {
    let mut out = CMat::zeros(d2, d2);
    for i in 0..d1 {
        out += x.view((i * d2, i * d2), (d2, d2));
    }
    out
}

/// A random map `M_m → M_n` with its Kraus operators.
pub struct RandomMap {
    pub kraus: Vec<CMat>,
    pub map: CPMap,
}

pub fn random_map(r: &mut impl Rng, m: usize, n: usize, rank: usize) -> RandomMap {
    let kraus: Vec<CMat> = (0..rank).map(|_| gaussian(r, n, m)).collect();
    let ops = KrausFamily::new(kraus.iter().map(to_lib).collect()).unwrap();
    let map = choi_from_kraus(&ops, m, n).unwrap();
    RandomMap { kraus, map }
}

/// A random test `(k, ρ, s)` for maps `M_m → M_n`, with its raw parts.
pub struct RandomTest {
    pub k: usize,
    pub rho: CMat,
    pub s: CMat,
    pub test: MatrixTest,
}

pub fn random_test(r: &mut impl Rng, k: usize, m: usize, n: usize) -> RandomTest {
    let rho = density(r, k * n);
    let s = gaussian(r, k * m, k * m);
    let test = MatrixTest::new(k, to_lib(&rho), to_lib(&s)).unwrap();
    RandomTest { k, rho, s, test }
}

impl RandomTest {
    pub fn pair(&self, kraus: &[CMat]) -> Complex64 {
        pairing(kraus, self.k, &self.rho, &self.s)
    }
}

/// Kraus operators of `x ↦ Σ_i a_i* Φ_{j(i)}(x) a_i`.
pub fn combination_kraus(maps: &[Vec<CMat>], terms: &[(CMat, usize)]) -> Vec<CMat> {
    terms
        .iter()
        .flat_map(|(a, j)| maps[*j].iter().map(move |v| a.adjoint() * v))
        .collect()
}

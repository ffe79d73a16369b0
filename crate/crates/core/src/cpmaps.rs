//! Completely positive maps `M_m → M_n` in Choi form.
//!
//! Conventions fixed across the crate:
//! * the Choi matrix is `C_Φ = Σ_ij E_ij ⊗ Φ(E_ij)` with the input factor `M_m` first;
//! * Kraus operators act as `Φ(x) = Σ_t V_t·x·V_t*` with `V_t` of shape `n×m`;
//! * C*-coefficients act on the output side, `Ψ(x) = Σ_i a_i*·Φ_i(x)·a_i`.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    eig_hermitian, inverse_sqrt_pd, kron, ComplexMatrix, C64, HERMITICITY_TOL,
};
use crate::mtests::{canonical_choi_test, MatrixTest};
use crate::random::{random_density, random_matrix, seeded_rng};

/// Choi eigenvalues at or above `−CP_TOL·(1 + ‖C‖_F)` count as nonnegative.
pub const CP_TOL: f64 = 1e-9;
/// Required accuracy of `Σ a_i*·a_i = I`.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const KRAUS_DROP_TOL: f64 = 1e-12;

/// A Hermiticity-preserving linear map `M_m → M_n` stored as its Choi matrix.
///
/// Every completely positive map has this form; [`CPMap::is_cp`] decides
/// complete positivity by Choi's criterion. Non-CP maps such as the transpose
/// are representable so that they can be rejected explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct CPMap {
    m: usize,
    n: usize,
    choi: ComplexMatrix,
}

impl CPMap {
    /// Validates the shape and hermiticity of `choi`, then symmetrizes it.
    pub fn from_choi(m: usize, n: usize, choi: ComplexMatrix) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid("map dimensions must be positive");
        }
        if choi.shape() != (m * n, m * n) {
            return invalid(format!(
                "Choi matrix of a map M_{m} -> M_{n} must be {0}x{0}, got {1}x{2}",
                m * n,
                choi.rows(),
                choi.cols()
            ));
        }
        if !choi.is_hermitian(HERMITICITY_TOL) {
            return invalid("Choi matrix is not Hermitian");
        }
        Ok(Self {
            m,
            n,
            choi: choi.hermitian_part(),
        })
    }

    pub fn identity(d: usize) -> Self {
        choi_from_kraus(&KrausFamily::new(vec![ComplexMatrix::identity(d)]).unwrap(), d, d)
            .expect("identity Kraus operator has the right shape")
    }

    /// `x ↦ Tr(x)·I_n / n`.
    pub fn depolarizing(m: usize, n: usize) -> Self {
        let choi = ComplexMatrix::identity(m * n).scale_real(1.0 / n as f64);
        Self { m, n, choi }
    }

    /// `x ↦ xᵀ` on `M_d`: positive but not completely positive for `d ≥ 2`.
    pub fn transpose(d: usize) -> Self {
        let mut choi = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                choi[(i * d + j, j * d + i)] = C64::new(1.0, 0.0);
            }
        }
        Self { m: d, n: d, choi }
    }

    /// The map `1 ↦ x` from `C` into `M_n`; its Choi matrix is `x` itself.
    pub fn from_scalar_image(x: &ComplexMatrix) -> Result<Self> {
        Self::from_choi(1, x.rows(), x.clone())
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn into_choi(self) -> ComplexMatrix {
        self.choi
    }

    /// Smallest Choi eigenvalue.
    pub fn min_choi_eigenvalue(&self) -> Result<f64> {
        Ok(eig_hermitian(&self.choi)?.min())
    }

    /// Choi's criterion with tolerance `CP_TOL·(1 + ‖C‖_F)`.
    pub fn is_cp(&self) -> bool {
        match self.min_choi_eigenvalue() {
            Ok(l) => l >= -CP_TOL * (1.0 + self.choi.frobenius_norm()),
            Err(_) => false,
        }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_choi(&self.choi, self.m, self.n, x)
    }

    pub fn ampliate_apply(&self, k: usize, s: &ComplexMatrix) -> Result<ComplexMatrix> {
        ampliate_apply_choi(&self.choi, self.m, self.n, k, s)
    }

    /// `α·Φ + β·Ψ` for real coefficients (Hermiticity-preserving maps form a real space).
    pub fn real_combination(&self, alpha: f64, other: &CPMap, beta: f64) -> Result<CPMap> {
        if self.dims() != other.dims() {
            return invalid("real_combination: maps have different dimensions");
        }
        let choi = &self.choi.scale_real(alpha) + &other.choi.scale_real(beta);
        Ok(CPMap {
            m: self.m,
            n: self.n,
            choi,
        })
    }

    pub fn distance(&self, other: &CPMap) -> f64 {
        (&self.choi - &other.choi).frobenius_norm()
    }
}

/// `Φ(x) = Tr_1[(xᵀ ⊗ I_n)·C]` for any linear map given by its Choi matrix.
pub fn apply_choi(choi: &ComplexMatrix, m: usize, n: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.shape() != (m, m) {
        return invalid(format!(
            "apply: input is {}x{}, map expects {m}x{m}",
            x.rows(),
            x.cols()
        ));
    }
    debug_assert_eq!(choi.shape(), (m * n, m * n));
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let xij = x[(i, j)];
            if xij.re == 0.0 && xij.im == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    out[(k, l)] += xij * choi[(i * n + k, j * n + l)];
                }
            }
        }
    }
    Ok(out)
}

/// `(id_k ⊗ Φ)(s)` for `s` given as a `k×k` array of `m×m` blocks.
pub fn ampliate_apply_choi(
    choi: &ComplexMatrix,
    m: usize,
    n: usize,
    k: usize,
    s: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if k == 0 {
        return invalid("ampliation level must be positive");
    }
    if s.shape() != (k * m, k * m) {
        let want = k * m;
        return invalid(format!(
            "ampliate_apply: element is {}x{}, expected {want}x{want} for level {k} over M_{m}",
            s.rows(),
            s.cols(),
        ));
    }
    let mut out = ComplexMatrix::zeros(k * n, k * n);
    for p in 0..k {
        for q in 0..k {
            let block = apply_choi(choi, m, n, &s.block(p * m, q * m, m, m))?;
            out.set_block(p * n, q * n, &block);
        }
    }
    Ok(out)
}

/// Kraus operators `V_t`, each of shape `n×m`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausFamily {
    ops: Vec<ComplexMatrix>,
}

impl KrausFamily {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return invalid("Kraus family must be nonempty");
        };
        let shape = first.shape();
        if ops.iter().any(|v| v.shape() != shape) {
            return invalid("Kraus operators must share one shape");
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Direct evaluation `Σ_t V_t·x·V_t*`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (n, m) = self.ops[0].shape();
        if x.shape() != (m, m) {
            return invalid("Kraus apply: input shape mismatch");
        }
        let mut out = ComplexMatrix::zeros(n, n);
        for v in &self.ops {
            out += &v.congruence(x);
        }
        Ok(out)
    }
}

/// `C = Σ_t vec(V_t)·vec(V_t)*` with `vec(V)[i·n + k] = V[(k, i)]`.
pub fn choi_from_kraus(ops: &KrausFamily, m: usize, n: usize) -> Result<CPMap> {
    if ops.ops.iter().any(|v| v.shape() != (n, m)) {
        return invalid(format!("Kraus operators for M_{m} -> M_{n} must be {n}x{m}"));
    }
    let d = m * n;
    let mut choi = ComplexMatrix::zeros(d, d);
    for v in &ops.ops {
        let vec: Vec<C64> = (0..d).map(|a| v[(a % n, a / n)]).collect();
        for a in 0..d {
            if vec[a].re == 0.0 && vec[a].im == 0.0 {
                continue;
            }
            for b in 0..d {
                choi[(a, b)] += vec[a] * vec[b].conj();
            }
        }
    }
    Ok(CPMap { m, n, choi })
}

/// Kraus operators from the spectral decomposition of the Choi matrix.
pub fn kraus_from_choi(map: &CPMap) -> Result<KrausFamily> {
    let eig = eig_hermitian(&map.choi)?;
    let scale = 1.0 + map.choi.frobenius_norm();
    if eig.min() < -CP_TOL * scale {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: eig.min(),
        });
    }
    let (m, n) = map.dims();
    let mut ops = Vec::new();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate().rev() {
        if lambda < KRAUS_DROP_TOL {
            continue;
        }
        let root = lambda.sqrt();
        let v = eig.vector(j);
        ops.push(ComplexMatrix::from_fn(n, m, |k, i| v[i * n + k] * root));
    }
    if ops.is_empty() {
        // zero map
        ops.push(ComplexMatrix::zeros(n, m));
    }
    KrausFamily::new(ops)
}

/// One term `a_i*·Φ_{map_index}(·)·a_i` of a C*-convex combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CStarTerm {
    pub a: ComplexMatrix,
    pub map_index: usize,
}

/// Operator coefficients `{a_i}` on `C^n` with `Σ a_i*·a_i = I_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CStarCoefficients {
    terms: Vec<CStarTerm>,
}

impl CStarCoefficients {
    pub fn new(terms: Vec<CStarTerm>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidCoefficients("no terms".into()));
        };
        let n = first.a.rows();
        if terms.iter().any(|t| t.a.shape() != (n, n)) {
            return Err(Error::InvalidCoefficients(
                "coefficients must be square and share one size".into(),
            ));
        }
        let residual = normalization_residual(terms.iter().map(|t| &t.a), n);
        if residual > NORMALIZATION_TOL {
            return Err(Error::InvalidCoefficients(format!(
                "‖Σ a_i* a_i − I‖_F = {residual:.3e} exceeds {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(Self { terms })
    }

    /// Pairs each operator with map index 0.
    pub fn single_map(ops: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(ops.into_iter().map(|a| CStarTerm { a, map_index: 0 }).collect())
    }

    pub fn terms(&self) -> &[CStarTerm] {
        &self.terms
    }

    pub fn n(&self) -> usize {
        self.terms[0].a.rows()
    }
}

pub(crate) fn normalization_residual<'a>(
    ops: impl Iterator<Item = &'a ComplexMatrix>,
    n: usize,
) -> f64 {
    let mut sum = ComplexMatrix::zeros(n, n);
    for a in ops {
        sum += &(&a.adjoint() * a);
    }
    (&sum - &ComplexMatrix::identity(n)).frobenius_norm()
}

/// `Ψ(·) = Σ_i a_i*·Φ_{j(i)}(·)·a_i`, i.e. `C_Ψ = Σ_i (I_m⊗a_i)*·C_{j(i)}·(I_m⊗a_i)`.
pub fn cstar_combine(maps: &[CPMap], coeffs: &CStarCoefficients) -> Result<CPMap> {
    let Some(first) = maps.first() else {
        return invalid("cstar_combine: empty map family");
    };
    let (m, n) = first.dims();
    if maps.iter().any(|p| p.dims() != (m, n)) {
        return invalid("cstar_combine: maps have different dimensions");
    }
    if coeffs.n() != n {
        return invalid(format!(
            "cstar_combine: coefficients act on C^{}, maps output M_{n}",
            coeffs.n()
        ));
    }
    let residual = normalization_residual(coeffs.terms.iter().map(|t| &t.a), n);
    if residual > NORMALIZATION_TOL {
        return Err(Error::InvalidCoefficients(format!(
            "‖Σ a_i* a_i − I‖_F = {residual:.3e}"
        )));
    }
    let id_m = ComplexMatrix::identity(m);
    let mut choi = ComplexMatrix::zeros(m * n, m * n);
    for term in &coeffs.terms {
        let Some(map) = maps.get(term.map_index) else {
            return invalid(format!("cstar_combine: map index {} out of range", term.map_index));
        };
        let lift = kron(&id_m, &term.a);
        choi += &(&(&lift.adjoint() * &map.choi) * &lift);
    }
    Ok(CPMap {
        m,
        n,
        choi: choi.hermitian_part(),
    })
}

/// Normalization imposed on generated maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// `Φ(I_m) = I_n`.
    Unital,
    /// `Tr Φ(x) = Tr x`.
    TracePreserving,
}

/// Random CP map from `kraus_rank` Gaussian Kraus operators, deterministic in `seed`.
pub fn random_cp(
    m: usize,
    n: usize,
    kraus_rank: usize,
    normalization: Normalization,
    seed: u64,
) -> Result<CPMap> {
    random_cp_with(&mut seeded_rng(seed, 0), m, n, kraus_rank, normalization)
}

pub fn random_cp_with<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n: usize,
    kraus_rank: usize,
    normalization: Normalization,
) -> Result<CPMap> {
    if kraus_rank == 0 || m == 0 || n == 0 {
        return invalid("random_cp: dimensions and Kraus rank must be positive");
    }
    match normalization {
        Normalization::Unital if kraus_rank * m < n => {
            return invalid(format!(
                "random_cp: a unital map M_{m} -> M_{n} needs Kraus rank >= {}",
                n.div_ceil(m)
            ))
        }
        Normalization::TracePreserving if kraus_rank * n < m => {
            return invalid(format!(
                "random_cp: a trace-preserving map M_{m} -> M_{n} needs Kraus rank >= {}",
                m.div_ceil(n)
            ))
        }
        _ => {}
    }
    let mut ops: Vec<ComplexMatrix> = (0..kraus_rank).map(|_| random_matrix(rng, n, m)).collect();
    match normalization {
        Normalization::None => {}
        Normalization::Unital => {
            let mut s = ComplexMatrix::zeros(n, n);
            for v in &ops {
                s += &(v * &v.adjoint());
            }
            let fix = inverse_sqrt_pd(&s.hermitian_part(), "random_cp")?;
            ops = ops.iter().map(|v| &fix * v).collect();
        }
        Normalization::TracePreserving => {
            let mut t = ComplexMatrix::zeros(m, m);
            for v in &ops {
                t += &(&v.adjoint() * v);
            }
            let fix = inverse_sqrt_pd(&t.hermitian_part(), "random_cp")?;
            ops = ops.iter().map(|v| v * &fix).collect();
        }
    }
    choi_from_kraus(&KrausFamily::new(ops)?, m, n)
}

/// States probing the Choi matrix: `E_ii`, and for `i < j` the pure states
/// `(e_i + e_j)/√2` and `(e_i + i·e_j)/√2`.
fn tomography_states(d: usize) -> Vec<(ComplexMatrix, ProbeKind)> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push((ComplexMatrix::unit(d, d, i, i), ProbeKind::Diagonal(i)));
    }
    let h = 0.5;
    for i in 0..d {
        for j in i + 1..d {
            let mut re = ComplexMatrix::zeros(d, d);
            re[(i, i)] = C64::new(h, 0.0);
            re[(j, j)] = C64::new(h, 0.0);
            re[(i, j)] = C64::new(h, 0.0);
            re[(j, i)] = C64::new(h, 0.0);
            out.push((re, ProbeKind::Real(i, j)));
            let mut im = ComplexMatrix::zeros(d, d);
            im[(i, i)] = C64::new(h, 0.0);
            im[(j, j)] = C64::new(h, 0.0);
            im[(i, j)] = C64::new(0.0, -h);
            im[(j, i)] = C64::new(0.0, h);
            out.push((im, ProbeKind::Imag(i, j)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum ProbeKind {
    Diagonal(usize),
    Real(usize, usize),
    Imag(usize, usize),
}

/// Number of extra random states used to test the oracle for linearity.
const TOMOGRAPHY_CONSISTENCY_PROBES: usize = 4;
const TOMOGRAPHY_TOL: f64 = 1e-9;

/// Reconstructs a Choi matrix from an oracle answering canonical Choi tests.
///
/// Since `⟨canonical(ρ), Φ⟩ = Tr(ρ·C_Φ)`, the answers on an informationally
/// complete family of states determine `C_Φ`; extra probes check that the
/// oracle is linear and real on states before the result is accepted.
pub fn choi_tomography(
    mut oracle: impl FnMut(&MatrixTest) -> C64,
    m: usize,
    n: usize,
) -> Result<CPMap> {
    let d = m * n;
    if d == 0 {
        return invalid("choi_tomography: dimensions must be positive");
    }
    let mut query = |rho: &ComplexMatrix| -> Result<C64> {
        let test = canonical_choi_test(rho, m, n)?;
        Ok(oracle(&test))
    };

    let probes = tomography_states(d);
    let mut values = Vec::with_capacity(probes.len());
    for (rho, _) in &probes {
        values.push(query(rho)?);
    }
    let scale = 1.0 + values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if let Some(v) = values.iter().find(|v| v.im.abs() > TOMOGRAPHY_TOL * scale) {
        return Err(Error::InconsistentOracle(format!(
            "pairing with a Hermitian test returned a non-real value {v}"
        )));
    }

    let mut choi = ComplexMatrix::zeros(d, d);
    for ((_, kind), v) in probes.iter().zip(&values) {
        if let ProbeKind::Diagonal(i) = *kind {
            choi[(i, i)] = C64::new(v.re, 0.0);
        }
    }
    for ((_, kind), v) in probes.iter().zip(&values) {
        match *kind {
            ProbeKind::Diagonal(_) => {}
            ProbeKind::Real(i, j) => {
                let mean = 0.5 * (choi[(i, i)].re + choi[(j, j)].re);
                let re = v.re - mean;
                choi[(i, j)].re = re;
                choi[(j, i)].re = re;
            }
            ProbeKind::Imag(i, j) => {
                let mean = 0.5 * (choi[(i, i)].re + choi[(j, j)].re);
                let im = mean - v.re;
                choi[(i, j)].im = im;
                choi[(j, i)].im = -im;
            }
        }
    }

    // Linearity probes: the maximally mixed state plus fixed pseudo-random states.
    let mut check_states = vec![ComplexMatrix::identity(d).scale_real(1.0 / d as f64)];
    let mut rng = seeded_rng(0x746f_6d6f, 0);
    for _ in 0..TOMOGRAPHY_CONSISTENCY_PROBES {
        check_states.push(random_density(&mut rng, d, d));
    }
    let tol = TOMOGRAPHY_TOL * (1.0 + choi.frobenius_norm());
    for rho in &check_states {
        let observed = query(rho)?;
        let predicted = crate::linalg::trace_product(rho, &choi);
        if (observed - predicted).norm() > tol {
            return Err(Error::InconsistentOracle(format!(
                "oracle is not linear on states: observed {observed}, predicted {predicted}"
            )));
        }
    }
    CPMap::from_choi(m, n, choi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_psd;
    use crate::mtests::pairing;
    use crate::random::{haar_unitary, random_cstar_family, random_matrix};

    fn max_entangled_sum(d: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m += &kron(&ComplexMatrix::unit(d, d, i, j), &ComplexMatrix::unit(d, d, i, j));
            }
        }
        m
    }

    #[test]
    fn identity_map_choi() {
        for d in 1..4 {
            let id = CPMap::identity(d);
            assert_eq!(id.choi(), &max_entangled_sum(d));
        }
    }

    #[test]
    fn depolarizing_from_matrix_units() {
        let n = 3;
        let mut ops = Vec::new();
        for k in 0..n {
            for l in 0..n {
                ops.push(ComplexMatrix::unit(n, n, k, l).scale_real(1.0 / (n as f64).sqrt()));
            }
        }
        let map = choi_from_kraus(&KrausFamily::new(ops).unwrap(), n, n).unwrap();
        assert!(map.distance(&CPMap::depolarizing(n, n)) < 1e-14);
        let out = map.apply(&ComplexMatrix::unit(n, n, 0, 0)).unwrap();
        assert!((&out - &ComplexMatrix::identity(n).scale_real(1.0 / 3.0)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn apply_matches_kraus_evaluation() {
        let mut rng = seeded_rng(31, 0);
        for (m, n) in [(1, 2), (2, 2), (2, 3), (3, 2)] {
            let kraus =
                KrausFamily::new((0..3).map(|_| random_matrix(&mut rng, n, m)).collect()).unwrap();
            let map = choi_from_kraus(&kraus, m, n).unwrap();
            assert!(is_psd(map.choi(), 1e-12).unwrap());
            let x = random_matrix(&mut rng, m, m);
            let direct = kraus.apply(&x).unwrap();
            let via = map.apply(&x).unwrap();
            assert!((&direct - &via).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn apply_of_identity_and_shape_errors() {
        let mut rng = seeded_rng(37, 0);
        let x = random_matrix(&mut rng, 3, 3);
        assert_eq!(CPMap::identity(3).apply(&x).unwrap(), x);
        assert!(CPMap::identity(3).apply(&ComplexMatrix::zeros(2, 2)).is_err());
        assert!(choi_from_kraus(
            &KrausFamily::new(vec![ComplexMatrix::zeros(2, 3)]).unwrap(),
            2,
            2
        )
        .is_err());
    }

    #[test]
    fn apply_is_linear() {
        let mut rng = seeded_rng(41, 0);
        let map = random_cp(2, 3, 2, Normalization::None, 5).unwrap();
        for _ in 0..20 {
            let x = random_matrix(&mut rng, 2, 2);
            let y = random_matrix(&mut rng, 2, 2);
            let a = crate::random::complex_normal(&mut rng);
            let b = crate::random::complex_normal(&mut rng);
            let lhs = map.apply(&(&x.scale(a) + &y.scale(b))).unwrap();
            let rhs = &map.apply(&x).unwrap().scale(a) + &map.apply(&y).unwrap().scale(b);
            assert!((&lhs - &rhs).frobenius_norm() < 1e-11);
        }
    }

    #[test]
    fn kraus_roundtrip() {
        let id = CPMap::identity(2);
        let k = kraus_from_choi(&id).unwrap();
        assert_eq!(k.len(), 1);
        let u = &k.ops()[0];
        assert!((&(&u.adjoint() * u) - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-12);

        let dep = kraus_from_choi(&CPMap::depolarizing(2, 2)).unwrap();
        assert_eq!(dep.len(), 4);

        for seed in 0..20 {
            let map = random_cp(2, 3, 4, Normalization::None, seed).unwrap();
            let back = choi_from_kraus(&kraus_from_choi(&map).unwrap(), 2, 3).unwrap();
            assert!(back.distance(&map) <= 1e-9);
        }

        assert!(matches!(
            kraus_from_choi(&CPMap::transpose(2)),
            Err(Error::NotCompletelyPositive { .. })
        ));
    }

    #[test]
    fn ampliation() {
        let mut rng = seeded_rng(43, 0);
        let map = random_cp(2, 2, 2, Normalization::None, 1).unwrap();
        let s = random_matrix(&mut rng, 2, 2);
        assert_eq!(map.ampliate_apply(1, &s).unwrap(), map.apply(&s).unwrap());
        let s3 = random_matrix(&mut rng, 6, 6);
        assert_eq!(CPMap::identity(2).ampliate_apply(3, &s3).unwrap(), s3);
        let b1 = random_matrix(&mut rng, 2, 2);
        let b2 = random_matrix(&mut rng, 2, 2);
        let out = map
            .ampliate_apply(2, &ComplexMatrix::block_diag(&[b1.clone(), b2.clone()]))
            .unwrap();
        let expect =
            ComplexMatrix::block_diag(&[map.apply(&b1).unwrap(), map.apply(&b2).unwrap()]);
        assert!((&out - &expect).frobenius_norm() < 1e-13);
        assert!(map.ampliate_apply(2, &ComplexMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn cstar_combine_examples() {
        let map = random_cp(2, 2, 2, Normalization::None, 9).unwrap();
        let coeffs = CStarCoefficients::single_map(vec![ComplexMatrix::identity(2)]).unwrap();
        assert!(cstar_combine(std::slice::from_ref(&map), &coeffs).unwrap().distance(&map) < 1e-14);

        let mut rng = seeded_rng(47, 0);
        let u = haar_unitary(&mut rng, 2);
        let combined =
            cstar_combine(std::slice::from_ref(&map), &CStarCoefficients::single_map(vec![u.clone()]).unwrap())
                .unwrap();
        let kraus = kraus_from_choi(&map).unwrap();
        let conj: Vec<ComplexMatrix> = kraus.ops().iter().map(|v| &u.adjoint() * v).collect();
        let oracle = choi_from_kraus(&KrausFamily::new(conj).unwrap(), 2, 2).unwrap();
        assert!(combined.distance(&oracle) < 1e-12);

        let dep = CPMap::depolarizing(2, 2);
        let family = random_cstar_family(&mut rng, 2, 3);
        let coeffs = CStarCoefficients::single_map(family).unwrap();
        assert!(cstar_combine(std::slice::from_ref(&dep), &coeffs).unwrap().distance(&dep) < 1e-13);
    }

    #[test]
    fn cstar_combine_rejects_bad_coefficients() {
        let bad = CStarTerm {
            a: ComplexMatrix::identity(2).scale_real(0.9),
            map_index: 0,
        };
        assert!(matches!(
            CStarCoefficients::new(vec![bad]),
            Err(Error::InvalidCoefficients(_))
        ));
    }

    #[test]
    fn cstar_combine_splitting_a_term() {
        let mut rng = seeded_rng(53, 0);
        let maps = vec![
            random_cp(2, 2, 2, Normalization::None, 1).unwrap(),
            random_cp(2, 2, 2, Normalization::None, 2).unwrap(),
        ];
        let family = random_cstar_family(&mut rng, 2, 2);
        let coeffs = CStarCoefficients::new(vec![
            CStarTerm { a: family[0].clone(), map_index: 0 },
            CStarTerm { a: family[1].clone(), map_index: 1 },
        ])
        .unwrap();
        let t: f64 = 0.3;
        let split = CStarCoefficients::new(vec![
            CStarTerm { a: family[0].scale_real(t.sqrt()), map_index: 0 },
            CStarTerm { a: family[0].scale_real((1.0 - t).sqrt()), map_index: 0 },
            CStarTerm { a: family[1].clone(), map_index: 1 },
        ])
        .unwrap();
        let a = cstar_combine(&maps, &coeffs).unwrap();
        let b = cstar_combine(&maps, &split).unwrap();
        assert!(a.distance(&b) < 1e-11);
    }

    #[test]
    fn random_cp_options() {
        let a = random_cp(2, 3, 2, Normalization::Unital, 77).unwrap();
        let b = random_cp(2, 3, 2, Normalization::Unital, 77).unwrap();
        assert_eq!(a, b);
        let img = a.apply(&ComplexMatrix::identity(2)).unwrap();
        assert!((&img - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-10);
        assert!(a.is_cp());

        let tp = random_cp(3, 2, 2, Normalization::TracePreserving, 78).unwrap();
        let mut rng = seeded_rng(59, 0);
        let x = random_matrix(&mut rng, 3, 3);
        assert!((tp.apply(&x).unwrap().trace() - x.trace()).norm() < 1e-10);

        assert!(random_cp(1, 3, 2, Normalization::Unital, 0).is_err());
        assert!(random_cp(3, 1, 2, Normalization::TracePreserving, 0).is_err());
        assert!(random_cp(2, 2, 0, Normalization::None, 0).is_err());
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let t = CPMap::transpose(2);
        let eig = eig_hermitian(t.choi()).unwrap();
        let expect = [-1.0, 1.0, 1.0, 1.0];
        for (got, want) in eig.eigenvalues.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(!t.is_cp());
        // positive on states
        let mut rng = seeded_rng(61, 0);
        let rho = random_density(&mut rng, 2, 2);
        assert!(is_psd(&t.apply(&rho).unwrap(), 1e-12).unwrap());
    }

    #[test]
    fn tomography_recovers_known_maps() {
        let id = CPMap::identity(2);
        let rec = choi_tomography(|t| pairing(t, &id).unwrap(), 2, 2).unwrap();
        assert!(rec.distance(&id) < 1e-12);

        let dep = CPMap::depolarizing(2, 2);
        let rec = choi_tomography(|t| pairing(t, &dep).unwrap(), 2, 2).unwrap();
        assert!((rec.choi() - &ComplexMatrix::identity(4).scale_real(0.5)).frobenius_norm() < 1e-12);

        let a = random_cp(2, 3, 2, Normalization::None, 1).unwrap();
        let b = random_cp(2, 3, 2, Normalization::None, 2).unwrap();
        let ra = choi_tomography(|t| pairing(t, &a).unwrap(), 2, 3).unwrap();
        let rb = choi_tomography(|t| pairing(t, &b).unwrap(), 2, 3).unwrap();
        assert!(ra.distance(&a) < 1e-9);
        assert!(ra.distance(&rb) > 1e-3);
    }

    #[test]
    fn tomography_detects_nonlinear_oracle() {
        let map = CPMap::identity(2);
        let err = choi_tomography(|t| pairing(t, &map).unwrap().powi(2), 2, 2).unwrap_err();
        assert!(matches!(err, Error::InconsistentOracle(_)));
        let err = choi_tomography(|t| pairing(t, &map).unwrap() + C64::new(0.0, 0.1), 2, 2)
            .unwrap_err();
        assert!(matches!(err, Error::InconsistentOracle(_)));
    }
}

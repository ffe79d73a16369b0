//! Matrix tests `(k, ρ, s)` and their pairing with maps.
//!
//! A state `f` on `M_k(M_n)` is carried by its density matrix through
//! `f(X) = Tr(ρ·X)`. The test element `s` lives in `M_k(M_m)`, stored as a
//! `(k·m)×(k·m)` matrix of `m×m` blocks.

use std::f64::consts::PI;

use crate::cpmaps::{ampliate_apply_choi, CPMap, CStarCoefficients};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    eig_hermitian, kron, trace_product, ComplexMatrix, C64, HERMITICITY_TOL,
};

/// Tolerance on `ρ ⪰ 0` and `Tr ρ = 1`.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTest {
    k: usize,
    rho: ComplexMatrix,
    s: ComplexMatrix,
}

impl MatrixTest {
    pub fn new(k: usize, rho: ComplexMatrix, s: ComplexMatrix) -> Result<Self> {
        if k == 0 {
            return invalid("test level k must be positive");
        }
        if !rho.is_square() || rho.rows() % k != 0 || rho.rows() == 0 {
            return invalid(format!(
                "state matrix is {}x{}, expected a square size divisible by k = {k}",
                rho.rows(),
                rho.cols()
            ));
        }
        if !s.is_square() || s.rows() % k != 0 || s.rows() == 0 {
            return invalid(format!(
                "test element is {}x{}, expected a square size divisible by k = {k}",
                s.rows(),
                s.cols()
            ));
        }
        let rho = validate_state(&rho, "matrix test")?;
        Ok(Self { k, rho, s })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Input dimension of the maps this test pairs with.
    #[inline]
    pub fn m(&self) -> usize {
        self.s.rows() / self.k
    }

    /// Output dimension of the maps this test pairs with.
    #[inline]
    pub fn n(&self) -> usize {
        self.rho.rows() / self.k
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn s(&self) -> &ComplexMatrix {
        &self.s
    }

    /// Same level and state, test element multiplied by `c`.
    pub fn scaled(&self, c: C64) -> MatrixTest {
        MatrixTest {
            k: self.k,
            rho: self.rho.clone(),
            s: self.s.scale(c),
        }
    }

    fn check_dims(&self, m: usize, n: usize) -> Result<()> {
        if self.m() != m || self.n() != n {
            return invalid(format!(
                "test pairs with maps M_{} -> M_{}, got M_{m} -> M_{n}",
                self.m(),
                self.n()
            ));
        }
        Ok(())
    }
}

/// Checks `ρ ⪰ 0`, `Tr ρ = 1` and returns the symmetrized state.
pub(crate) fn validate_state(rho: &ComplexMatrix, what: &str) -> Result<ComplexMatrix> {
    if !rho.is_hermitian(HERMITICITY_TOL) {
        return invalid(format!("{what}: state matrix is not Hermitian"));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return invalid(format!("{what}: state has trace {tr}, expected 1"));
    }
    let lmin = eig_hermitian(rho)?.min();
    if lmin < -STATE_TOL {
        return invalid(format!("{what}: state has negative eigenvalue {lmin:.3e}"));
    }
    Ok(rho.hermitian_part())
}

/// `⟨(k, f, s), Φ⟩ = f(Φ_k(s)) = Tr(ρ·(id_k ⊗ Φ)(s))`.
pub fn pairing(t: &MatrixTest, map: &CPMap) -> Result<C64> {
    pairing_choi(t, map.m(), map.n(), map.choi())
}

/// Pairing with an arbitrary linear map given by its Choi matrix.
pub fn pairing_choi(t: &MatrixTest, m: usize, n: usize, choi: &ComplexMatrix) -> Result<C64> {
    t.check_dims(m, n)?;
    if choi.shape() != (m * n, m * n) {
        return invalid("pairing: Choi matrix has the wrong shape");
    }
    let image = ampliate_apply_choi(choi, m, n, t.k, &t.s)?;
    Ok(trace_product(&t.rho, &image))
}

/// A folded test together with the factor `R` relating it to the family.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub test: MatrixTest,
    pub scale: f64,
}

fn common_dims(tests: &[MatrixTest]) -> Result<(usize, usize)> {
    let Some(first) = tests.first() else {
        return invalid("folding needs at least one test");
    };
    let dims = (first.m(), first.n());
    if tests.iter().any(|t| (t.m(), t.n()) != dims) {
        return invalid("folding: tests pair with maps of different dimensions");
    }
    Ok(dims)
}

/// Block-diagonal fold with the uniform mixture of block-embedded states.
///
/// For every map, the folded pairing is the mean of the individual pairings,
/// hence bounded in modulus by their maximum.
pub fn fold_max(tests: &[MatrixTest]) -> Result<FoldResult> {
    common_dims(tests)?;
    let weight = 1.0 / tests.len() as f64;
    let k = tests.iter().map(|t| t.k).sum();
    let s = ComplexMatrix::block_diag(&tests.iter().map(|t| t.s.clone()).collect::<Vec<_>>());
    let rho = ComplexMatrix::block_diag(
        &tests
            .iter()
            .map(|t| t.rho.scale_real(weight))
            .collect::<Vec<_>>(),
    );
    Ok(FoldResult {
        test: MatrixTest { k, rho, s },
        scale: 1.0,
    })
}

/// Folds `Σ_j c_j·⟨t_j, ·⟩` into `R·⟨folded, ·⟩` with `R = Σ_j |c_j|`.
///
/// Phases go into the test element blocks and magnitudes into the state
/// weights. Zero coefficients are dropped.
pub fn fold_linear(tests: &[MatrixTest], coeffs: &[C64]) -> Result<FoldResult> {
    if tests.len() != coeffs.len() {
        return invalid("fold_linear: one coefficient per test is required");
    }
    common_dims(tests)?;
    let kept: Vec<(&MatrixTest, C64)> = tests
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(t, &c)| (t, c))
        .collect();
    if kept.is_empty() {
        return invalid("fold_linear: all coefficients are zero");
    }
    let total: f64 = kept.iter().map(|(_, c)| c.norm()).sum();
    let k = kept.iter().map(|(t, _)| t.k).sum();
    let s = ComplexMatrix::block_diag(
        &kept
            .iter()
            .map(|(t, c)| t.s.scale(*c / c.norm()))
            .collect::<Vec<_>>(),
    );
    let rho = ComplexMatrix::block_diag(
        &kept
            .iter()
            .map(|(t, c)| t.rho.scale_real(c.norm() / total))
            .collect::<Vec<_>>(),
    );
    Ok(FoldResult {
        test: MatrixTest { k, rho, s },
        scale: total,
    })
}

/// The level-`2k` Hermitian test whose pairing is `Re(e^{−iθ}·⟨t, Φ⟩)`.
///
/// `s̃ = [[0, e^{−iθ}s], [e^{iθ}s*, 0]]` and the state is `ω ⊗ f` with `ω` the
/// vector state of `(1, 1)/√2`; the `2×2` factor leads in both.
pub fn realify(t: &MatrixTest, theta: f64) -> MatrixTest {
    let d = t.s.rows();
    let phase = C64::from_polar(1.0, -theta);
    let mut s = ComplexMatrix::zeros(2 * d, 2 * d);
    s.set_block(0, d, &t.s.scale(phase));
    s.set_block(d, 0, &t.s.adjoint().scale(phase.conj()));
    let omega = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
    let rho = kron(&omega, &t.rho);
    MatrixTest {
        k: 2 * t.k,
        rho,
        s,
    }
}

/// Real value of the realified pairing; the imaginary part is rounding noise.
fn realified_value(t: &MatrixTest, map: &CPMap, theta: f64) -> Result<f64> {
    Ok(pairing(&realify(t, theta), map)?.re)
}

/// `max_θ ⟨realify(t, θ), Φ⟩` over the uniform grid `θ_g = 2πg/G`.
pub fn abs_via_sup(t: &MatrixTest, map: &CPMap, grid_size: usize) -> Result<f64> {
    Ok(phase_sweep(t, map, grid_size)?.1)
}

/// Returns `(argmax θ, max value)` over the uniform grid.
fn phase_sweep(t: &MatrixTest, map: &CPMap, grid_size: usize) -> Result<(f64, f64)> {
    if grid_size < 4 {
        return invalid("abs_via_sup: grid_size must be at least 4");
    }
    let mut best = (0.0, f64::NEG_INFINITY);
    for g in 0..grid_size {
        let theta = 2.0 * PI * g as f64 / grid_size as f64;
        let v = realified_value(t, map, theta)?;
        if v > best.1 {
            best = (theta, v);
        }
    }
    Ok(best)
}

/// Grid sweep followed by golden-section search around the best grid angle.
pub fn abs_via_sup_refined(
    t: &MatrixTest,
    map: &CPMap,
    grid_size: usize,
    theta_tol: f64,
) -> Result<f64> {
    let (theta0, v0) = phase_sweep(t, map, grid_size)?;
    let h = 2.0 * PI / grid_size as f64;
    let mut failure = None;
    let (_, v) = golden_section_max(
        |th| match realified_value(t, map, th) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        theta0 - h,
        theta0 + h,
        theta_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(v.max(v0))
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
/// Returns the best point evaluated and its value.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Scalar target (`n = 1`): `s_ρ = Σ_ij ρ_ji·s_ij`, so that `⟨t, φ⟩ = φ(s_ρ)`.
pub fn scalar_target_reduce(t: &MatrixTest) -> Result<ComplexMatrix> {
    if t.n() != 1 {
        return invalid(format!(
            "scalar_target_reduce needs a scalar target, test has n = {}",
            t.n()
        ));
    }
    let m = t.m();
    let mut out = ComplexMatrix::zeros(m, m);
    for i in 0..t.k {
        for j in 0..t.k {
            let w = t.rho[(j, i)];
            out += &t.s.block(i * m, j * m, m, m).scale(w);
        }
    }
    Ok(out)
}

/// Scalar domain (`m = 1`): the pairing with the map `1 ↦ x` is `f(s ⊗ x)`.
pub fn scalar_domain_pairing(t: &MatrixTest, x: &ComplexMatrix) -> Result<C64> {
    if t.m() != 1 {
        return invalid(format!(
            "scalar_domain_pairing needs a scalar domain, test has m = {}",
            t.m()
        ));
    }
    if x.shape() != (t.n(), t.n()) {
        return invalid(format!("scalar_domain_pairing: x must be {0}x{0}", t.n()));
    }
    if !x.is_hermitian(HERMITICITY_TOL) || eig_hermitian(x)?.min() < -STATE_TOL * (1.0 + x.frobenius_norm()) {
        return invalid("scalar_domain_pairing: x must be positive semidefinite");
    }
    Ok(trace_product(&t.rho, &kron(&t.s, x)))
}

/// One term `(b_i, c_i)` of the tracial decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct TracialTerm {
    pub b: ComplexMatrix,
    pub weight: f64,
}

/// Normalized trace `Tr(x)/dim`.
pub fn normalized_trace(x: &ComplexMatrix) -> C64 {
    x.trace() / x.rows() as f64
}

/// Tracial pairing `(τ ⊗ tr_k)(b·x)` with the normalized trace.
pub fn tracial_pairing(b: &ComplexMatrix, x: &ComplexMatrix) -> C64 {
    trace_product(b, x) / b.rows() as f64
}

/// Splits a tracial density `b` along C*-coefficients:
/// `b_i = (I_k ⊗ a_i)·b·(I_k ⊗ a_i)*`, `c_i = (τ ⊗ tr_k)(b_i)`.
pub fn tracial_decompose(b: &ComplexMatrix, coeffs: &CStarCoefficients) -> Result<Vec<TracialTerm>> {
    let n = coeffs.n();
    if !b.is_square() || b.rows() % n != 0 || b.rows() == 0 {
        return invalid(format!(
            "tracial_decompose: density is {}x{}, expected a multiple of n = {n}",
            b.rows(),
            b.cols()
        ));
    }
    if !b.is_hermitian(HERMITICITY_TOL) {
        return invalid("tracial_decompose: density is not Hermitian");
    }
    let nt = normalized_trace(b);
    if (nt.re - 1.0).abs() > STATE_TOL {
        return invalid(format!(
            "tracial_decompose: normalized trace is {}, expected 1",
            nt.re
        ));
    }
    if eig_hermitian(b)?.min() < -STATE_TOL * (1.0 + b.frobenius_norm()) {
        return invalid("tracial_decompose: density is not positive semidefinite");
    }
    let residual =
        crate::cpmaps::normalization_residual(coeffs.terms().iter().map(|t| &t.a), n);
    if residual > crate::cpmaps::NORMALIZATION_TOL {
        return Err(Error::InvalidCoefficients(format!(
            "‖Σ a_i* a_i − I‖_F = {residual:.3e}"
        )));
    }
    let k = b.rows() / n;
    let id_k = ComplexMatrix::identity(k);
    Ok(coeffs
        .terms()
        .iter()
        .map(|term| {
            let lift = kron(&id_k, &term.a);
            let bi = lift.congruence(b).hermitian_part();
            let weight = normalized_trace(&bi).re;
            TracialTerm { b: bi, weight }
        })
        .collect())
}

/// `Σ_ij E_ij ⊗ E_ij ∈ M_m(M_m)`, the element whose `m`-ampliated image is the Choi matrix.
pub fn choi_generator(m: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(m * m, m * m);
    for i in 0..m {
        for j in 0..m {
            s[(i * m + i, j * m + j)] = C64::new(1.0, 0.0);
        }
    }
    s
}

/// The level-`m` test `(m, ρ, Σ E_ij ⊗ E_ij)` whose pairing is `Tr(ρ·C_Φ)`.
pub fn canonical_choi_test(rho: &ComplexMatrix, m: usize, n: usize) -> Result<MatrixTest> {
    if rho.shape() != (m * n, m * n) {
        return invalid(format!(
            "canonical_choi_test: state must be {0}x{0}",
            m * n
        ));
    }
    MatrixTest::new(m, rho.clone(), choi_generator(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::{cstar_combine, random_cp, CStarTerm, Normalization};
    use crate::linalg::inner;
    use crate::random::{random_cstar_family, random_density, random_matrix, seeded_rng};

    fn random_test(rng: &mut crate::random::ExperimentRng, k: usize, m: usize, n: usize) -> MatrixTest {
        MatrixTest::new(k, random_density(rng, k * n, k * n), random_matrix(rng, k * m, k * m))
            .unwrap()
    }

    #[test]
    fn state_validation() {
        let rho = ComplexMatrix::identity(2).scale_real(0.45);
        assert!(MatrixTest::new(1, rho, ComplexMatrix::identity(2)).is_err());
        let rho = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(MatrixTest::new(1, rho, ComplexMatrix::identity(2)).is_err());
        let rho = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(MatrixTest::new(2, rho, ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn pairing_with_identity_is_state_evaluation() {
        let mut rng = seeded_rng(101, 0);
        let rho = random_density(&mut rng, 3, 3);
        let sigma = random_matrix(&mut rng, 3, 3);
        let t = MatrixTest::new(1, rho.clone(), sigma.clone()).unwrap();
        let v = pairing(&t, &CPMap::identity(3)).unwrap();
        assert!((v - trace_product(&rho, &sigma)).norm() < 1e-14);
        assert!(pairing(&t, &CPMap::identity(2)).is_err());
    }

    #[test]
    fn pairing_of_positive_elements_is_nonnegative() {
        let mut rng = seeded_rng(103, 0);
        for seed in 0..20 {
            let map = random_cp(2, 3, 2, Normalization::None, seed).unwrap();
            let g = random_matrix(&mut rng, 4, 4);
            let s = &g * &g.adjoint();
            let t = MatrixTest::new(2, random_density(&mut rng, 6, 3), s).unwrap();
            let v = pairing(&t, &map).unwrap();
            assert!(v.im.abs() < 1e-11 && v.re >= -1e-11);
        }
    }

    #[test]
    fn pairing_is_linear_in_the_map() {
        let mut rng = seeded_rng(107, 0);
        let phi = random_cp(2, 2, 2, Normalization::None, 1).unwrap();
        let psi = random_cp(2, 2, 3, Normalization::None, 2).unwrap();
        let t = random_test(&mut rng, 2, 2, 2);
        let a = C64::new(0.3, -1.2);
        let b = C64::new(-0.7, 0.4);
        let combo = &phi.choi().scale(a) + &psi.choi().scale(b);
        let lhs = pairing_choi(&t, 2, 2, &combo).unwrap();
        let rhs = pairing(&t, &phi).unwrap() * a + pairing(&t, &psi).unwrap() * b;
        assert!((lhs - rhs).norm() < 1e-11);
    }

    #[test]
    fn fold_max_examples() {
        let mut rng = seeded_rng(109, 0);
        let map = random_cp(2, 2, 2, Normalization::None, 3).unwrap();
        let t = random_test(&mut rng, 2, 2, 2);
        let folded = fold_max(std::slice::from_ref(&t)).unwrap();
        assert_eq!(folded.scale, 1.0);
        assert!((pairing(&folded.test, &map).unwrap() - pairing(&t, &map).unwrap()).norm() < 1e-14);

        // two tests with pairings +1 and -1
        let rho = ComplexMatrix::identity(2).scale_real(0.5);
        let id = CPMap::identity(2);
        let plus = MatrixTest::new(1, rho.clone(), ComplexMatrix::identity(2)).unwrap();
        let minus = MatrixTest::new(1, rho, ComplexMatrix::identity(2).scale_real(-1.0)).unwrap();
        let folded = fold_max(&[plus, minus]).unwrap();
        assert!(pairing(&folded.test, &id).unwrap().norm() < 1e-15);

        let tests: Vec<_> = (0..3).map(|i| random_test(&mut rng, 1 + i % 2, 2, 2)).collect();
        let folded = fold_max(&tests).unwrap();
        let mean: C64 = tests.iter().map(|t| pairing(t, &map).unwrap()).sum::<C64>() / 3.0;
        assert!((pairing(&folded.test, &map).unwrap() - mean).norm() < 1e-11);
        assert!(fold_max(&[]).is_err());
        let other = random_test(&mut rng, 1, 3, 2);
        assert!(fold_max(&[tests[0].clone(), other]).is_err());
    }

    #[test]
    fn fold_linear_examples() {
        let mut rng = seeded_rng(113, 0);
        let map = random_cp(2, 2, 2, Normalization::None, 4).unwrap();
        let t = random_test(&mut rng, 1, 2, 2);
        let z = pairing(&t, &map).unwrap();

        let f = fold_linear(std::slice::from_ref(&t), &[C64::new(2.0, 0.0)]).unwrap();
        assert_eq!(f.scale, 2.0);
        assert!((pairing(&f.test, &map).unwrap() - z).norm() < 1e-14);

        let f = fold_linear(std::slice::from_ref(&t), &[C64::new(0.0, 1.0)]).unwrap();
        assert!((f.scale - 1.0).abs() < 1e-15);
        assert!((f.test.s() - &t.s().scale(C64::new(0.0, 1.0))).frobenius_norm() < 1e-15);
        assert!((pairing(&f.test, &map).unwrap() - z * C64::new(0.0, 1.0)).norm() < 1e-14);

        let tests: Vec<_> = (0..3).map(|_| random_test(&mut rng, 2, 2, 2)).collect();
        let coeffs = [C64::new(0.5, -1.0), C64::new(0.0, 0.0), C64::new(-2.0, 0.3)];
        let f = fold_linear(&tests, &coeffs).unwrap();
        assert_eq!(f.test.k(), 4, "zero coefficient is dropped");
        for seed in 0..10 {
            let map = random_cp(2, 2, 2, Normalization::None, 100 + seed).unwrap();
            let lhs: C64 = tests
                .iter()
                .zip(&coeffs)
                .map(|(t, c)| c * pairing(t, &map).unwrap())
                .sum();
            let rhs = pairing(&f.test, &map).unwrap() * f.scale;
            assert!((lhs - rhs).norm() < 1e-11);
        }
        assert!(fold_linear(&tests, &[C64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn realify_examples() {
        let mut rng = seeded_rng(127, 0);
        let map = random_cp(2, 2, 2, Normalization::None, 5).unwrap();
        // positive element gives a real positive pairing
        let g = random_matrix(&mut rng, 2, 2);
        let t = MatrixTest::new(1, random_density(&mut rng, 2, 2), &g * &g.adjoint()).unwrap();
        let z = pairing(&t, &map).unwrap();
        let r0 = pairing(&realify(&t, 0.0), &map).unwrap();
        assert!((r0.re - z.re).abs() < 1e-12 && r0.im.abs() < 1e-12);

        let t = random_test(&mut rng, 2, 2, 2);
        let z = pairing(&t, &map).unwrap();
        let aligned = pairing(&realify(&t, z.arg()), &map).unwrap();
        assert!((aligned.re - z.norm()).abs() < 1e-12);

        for i in 0..20 {
            let theta = 0.37 * i as f64;
            let rt = realify(&t, theta);
            assert!(rt.s().hermiticity_residual() < 1e-14);
            let lhs = pairing(&rt, &map).unwrap();
            let rhs = (C64::from_polar(1.0, -theta) * z).re;
            assert!((lhs.re - rhs).abs() < 1e-11 && lhs.im.abs() < 1e-11);
        }
    }

    #[test]
    fn abs_via_sup_examples() {
        let mut rng = seeded_rng(131, 0);
        let map = random_cp(2, 2, 2, Normalization::None, 6).unwrap();
        let t = random_test(&mut rng, 1, 2, 2).scaled(C64::new(0.0, 0.0));
        assert!(abs_via_sup(&t, &map, 8).unwrap().abs() < 1e-15);

        // rotate s so that the pairing has argument exactly 2π·3/16
        let t = random_test(&mut rng, 1, 2, 2);
        let z = pairing(&t, &map).unwrap();
        let target = 2.0 * PI * 3.0 / 16.0;
        let t = t.scaled(C64::from_polar(1.0, target - z.arg()));
        assert!((abs_via_sup(&t, &map, 16).unwrap() - z.norm()).abs() < 1e-12);

        let t = random_test(&mut rng, 2, 2, 2);
        let z = pairing(&t, &map).unwrap().norm();
        assert!((abs_via_sup(&t, &map, 1024).unwrap() - z).abs() < 1e-4);
        assert!((abs_via_sup_refined(&t, &map, 64, 1e-6).unwrap() - z).abs() < 1e-7);
        assert!(abs_via_sup(&t, &map, 3).is_err());
    }

    #[test]
    fn scalar_target_examples() {
        let mut rng = seeded_rng(137, 0);
        let s = random_matrix(&mut rng, 3, 3);
        let t = MatrixTest::new(1, ComplexMatrix::identity(1), s.clone()).unwrap();
        assert_eq!(scalar_target_reduce(&t).unwrap(), s);

        let s = random_matrix(&mut rng, 6, 6);
        let t = MatrixTest::new(2, ComplexMatrix::unit(2, 2, 0, 0), s.clone()).unwrap();
        assert_eq!(scalar_target_reduce(&t).unwrap(), s.block(0, 0, 3, 3));

        let t = MatrixTest::new(2, random_density(&mut rng, 2, 2), s).unwrap();
        let reduced = scalar_target_reduce(&t).unwrap();
        for seed in 0..10 {
            let phi = random_cp(3, 1, 2, Normalization::None, seed).unwrap();
            let lhs = pairing(&t, &phi).unwrap();
            let rhs = phi.apply(&reduced).unwrap()[(0, 0)];
            assert!((lhs - rhs).norm() < 1e-11);
        }
        let bad = random_test(&mut rng, 1, 2, 2);
        assert!(scalar_target_reduce(&bad).is_err());
    }

    #[test]
    fn scalar_domain_examples() {
        let mut rng = seeded_rng(139, 0);
        let rho = random_density(&mut rng, 3, 3);
        let g = random_matrix(&mut rng, 3, 3);
        let x = &g * &g.adjoint();
        let t = MatrixTest::new(1, rho.clone(), ComplexMatrix::identity(1)).unwrap();
        assert!((scalar_domain_pairing(&t, &x).unwrap() - trace_product(&rho, &x)).norm() < 1e-13);
        let one = scalar_domain_pairing(&t, &ComplexMatrix::identity(3)).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-12);

        let t = MatrixTest::new(2, random_density(&mut rng, 6, 6), random_matrix(&mut rng, 2, 2))
            .unwrap();
        let via_map = pairing(&t, &CPMap::from_scalar_image(&x).unwrap()).unwrap();
        assert!((scalar_domain_pairing(&t, &x).unwrap() - via_map).norm() < 1e-11);
        let bad = random_test(&mut rng, 1, 2, 2);
        assert!(scalar_domain_pairing(&bad, &x).is_err());
    }

    #[test]
    fn tracial_examples() {
        let mut rng = seeded_rng(149, 0);
        let (k, n) = (2, 2);
        let b = random_density(&mut rng, k * n, k * n).scale_real((k * n) as f64);
        let single = CStarCoefficients::single_map(vec![ComplexMatrix::identity(n)]).unwrap();
        let terms = tracial_decompose(&b, &single).unwrap();
        assert_eq!(terms.len(), 1);
        assert!((&terms[0].b - &b).frobenius_norm() < 1e-14);
        assert!((terms[0].weight - 1.0).abs() < 1e-12);

        let u = crate::random::haar_unitary(&mut rng, n);
        let terms =
            tracial_decompose(&b, &CStarCoefficients::single_map(vec![u]).unwrap()).unwrap();
        assert!((terms[0].weight - 1.0).abs() < 1e-12);

        let maps = vec![
            random_cp(2, n, 2, Normalization::None, 1).unwrap(),
            random_cp(2, n, 2, Normalization::None, 2).unwrap(),
        ];
        let family = random_cstar_family(&mut rng, n, 2);
        let coeffs = CStarCoefficients::new(vec![
            CStarTerm { a: family[0].clone(), map_index: 0 },
            CStarTerm { a: family[1].clone(), map_index: 1 },
        ])
        .unwrap();
        let psi = cstar_combine(&maps, &coeffs).unwrap();
        let s = random_matrix(&mut rng, k * 2, k * 2);
        let terms = tracial_decompose(&b, &coeffs).unwrap();
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        assert!((total - 1.0).abs() < 1e-10);
        let lhs = tracial_pairing(&b, &psi.ampliate_apply(k, &s).unwrap());
        let rhs: C64 = terms
            .iter()
            .zip(coeffs.terms())
            .map(|(term, c)| {
                let img = maps[c.map_index].ampliate_apply(k, &s).unwrap();
                tracial_pairing(&term.b.scale_real(1.0 / term.weight), &img) * term.weight
            })
            .sum();
        assert!((lhs - rhs).norm() < 1e-10);

        assert!(tracial_decompose(&b.scale_real(0.5), &coeffs).is_err());
    }

    #[test]
    fn canonical_choi_test_examples() {
        let mut rng = seeded_rng(151, 0);
        let rho = random_density(&mut rng, 4, 4);
        let t = canonical_choi_test(&rho, 2, 2).unwrap();
        let dep = pairing(&t, &CPMap::depolarizing(2, 2)).unwrap();
        assert!((dep - C64::new(0.5, 0.0)).norm() < 1e-14);

        let mixed = ComplexMatrix::identity(9).scale_real(1.0 / 9.0);
        let t = canonical_choi_test(&mixed, 3, 3).unwrap();
        let v = pairing(&t, &CPMap::identity(3)).unwrap();
        assert!((v - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-14);

        for seed in 0..10 {
            let map = random_cp(2, 3, 2, Normalization::None, seed).unwrap();
            let rho = random_density(&mut rng, 6, 6);
            let t = canonical_choi_test(&rho, 2, 3).unwrap();
            let v = pairing(&t, &map).unwrap();
            assert!((v - inner(&rho, map.choi()).unwrap()).norm() < 1e-12);
        }
        assert!(canonical_choi_test(&ComplexMatrix::identity(4), 2, 2).is_err());
    }
}

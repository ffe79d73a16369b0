//! Polars of map families and test families, and the bipolar verdict.
//!
//! `sat_sup` computes `sup_{Ψ ∈ cconv(K)} |⟨t, Ψ⟩|`. Writing
//! `Ψ = Σ_j ψ_j ∘ Φ_j` with `ψ_j(y) = Σ_{i: j(i)=j} a_i*·y·a_i`, the pairing
//! becomes `Σ_j Tr(M_j·C_j)` where `C_j` is the Choi matrix of `ψ_j` and
//! `M_j = Σ_pq X_pqᵀ ⊗ ρ_qp` with `X_j = (id_k ⊗ Φ_j)(s)`. The constraint
//! `Σ a_i*·a_i = I` reads `Σ_j Tr_1(C_j) = I`, so every phase slice
//! `sup Re(e^{−iθ}·⟨t, Ψ⟩)` is a [`PolarSdpInstance`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::cpmaps::{
    ampliate_apply_choi, cstar_combine, kraus_from_choi, CPMap, CStarCoefficients, CStarTerm,
};
use crate::error::{invalid, Result};
use crate::linalg::{
    c64, cholesky_inverse_logdet, eig_hermitian, hermitian_basis, hermitian_to_vec, kron, partial_trace, trace_product,
    vec_to_hermitian, ComplexMatrix, Factor, C64,
};
use crate::mtests::{canonical_choi_test, fold_linear, golden_section_max, pairing, MatrixTest};
use crate::random::{haar_isometry, isometry_blocks, seeded_rng};
use crate::sdp::{
    min_norm_point, normalize_primal, solve_polar_sdp_with, BarrierOptions, PolarSdpInstance, SolveStatus,
    ValueBracket, BRACKET_GAP_TOL,
};

pub const DEFAULT_THETA_GRID: usize = 64;
pub const THETA_TOL: f64 = 1e-6;
/// Target for `upper − lower` of a saturated supremum, relative to `1 + upper`.
pub const SAT_SUP_GAP_TOL: f64 = 2e-9;
/// Cap on phase slices solved by one `sat_sup` call.
/// Relative gap for grid and line-search slices before sharpening.
pub const COARSE_GAP_TOL: f64 = 1e-6;
pub const MAX_THETA_SLICES: usize = 1200;
const MIN_SECTOR: f64 = 1e-7;

/// `true` iff `|⟨t, Φ⟩| ≤ 1 + slack` for every test.
pub fn in_polar_of_tests(map: &CPMap, tests: &[MatrixTest], slack: f64) -> Result<bool> {
    for t in tests {
        if pairing(t, map)?.norm() > 1.0 + slack {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One phase slice `sup Re(e^{−iθ}·⟨t, Ψ⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSlice {
    pub theta: f64,
    /// Objective of the primal witness, i.e. `Re(e^{−iθ}·⟨t, Ψ_θ⟩)`.
    pub value: f64,
    pub upper: f64,
    /// `|⟨t, Ψ_θ⟩|` for the primal witness of this slice.
    pub modulus: f64,
    bracket: ValueBracket,
    fine: bool,
}

impl ThetaSlice {
    pub fn bracket(&self) -> &ValueBracket {
        &self.bracket
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturatedSupResult {
    /// `lower` is attained by the witness of the best slice; `upper` bounds
    /// `|⟨t, Ψ⟩|` over the whole hull.
    pub value_bracket: ValueBracket,
    pub theta_star: f64,
    pub per_theta_values: Vec<ThetaSlice>,
    /// All pairings were real, so only `θ ∈ {0, π}` were needed.
    pub real_mode: bool,
}

impl SaturatedSupResult {
    pub fn lower(&self) -> f64 {
        self.value_bracket.lower
    }

    pub fn upper(&self) -> f64 {
        self.value_bracket.upper
    }
}

fn check_family(k: &[CPMap]) -> Result<(usize, usize)> {
    let Some(first) = k.first() else {
        return invalid("generator family K is empty");
    };
    let dims = first.dims();
    if k.iter().any(|p| p.dims() != dims) {
        return invalid("generators in K have different dimensions");
    }
    Ok(dims)
}

/// Representers `M_j` with `⟨t, Σ_j ψ_j∘Φ_j⟩ = Σ_j Tr(M_j·C_{ψ_j})`.
pub fn pairing_representers(k: &[CPMap], t: &MatrixTest) -> Result<Vec<ComplexMatrix>> {
    let (m, n) = check_family(k)?;
    if (t.m(), t.n()) != (m, n) {
        return invalid(format!(
            "test pairs with maps M_{} -> M_{}, generators are M_{m} -> M_{n}",
            t.m(),
            t.n()
        ));
    }
    let level = t.k();
    let rho = t.rho();
    k.iter()
        .map(|map| {
            let x = ampliate_apply_choi(map.choi(), m, n, level, t.s())?;
            let mut out = ComplexMatrix::zeros(n * n, n * n);
            for p in 0..level {
                for q in 0..level {
                    let xpq = x.block(p * n, q * n, n, n).transpose();
                    let rqp = rho.block(q * n, p * n, n, n);
                    out += &kron(&xpq, &rqp);
                }
            }
            Ok(out)
        })
        .collect()
}

/// `Σ_j ψ_j ∘ Φ_j` where `ψ_j` on `M_n` has Choi matrix `blocks[j]`.
pub fn saturation_map(k: &[CPMap], blocks: &[ComplexMatrix]) -> Result<CPMap> {
    let (m, n) = check_family(k)?;
    if blocks.len() != k.len() {
        return invalid("saturation_map: one coefficient block per generator is required");
    }
    let mut choi = ComplexMatrix::zeros(m * n, m * n);
    for (map, c) in k.iter().zip(blocks) {
        choi += &ampliate_apply_choi(c, n, n, m, map.choi())?;
    }
    CPMap::from_choi(m, n, choi.hermitian_part())
}

fn solve_slice(reps: &[ComplexMatrix], n: usize, theta: f64, fine: bool) -> Result<ThetaSlice> {
    let phase = C64::from_polar(1.0, -theta);
    let objectives = reps.iter().map(|r| r.scale(phase).hermitian_part()).collect();
    let inst = PolarSdpInstance::new(n, objectives)?;
    let mut opts = BarrierOptions::default();
    if !fine {
        opts.gap_tol = COARSE_GAP_TOL;
    }
    let bracket = solve_polar_sdp_with(&inst, &opts)?;
    let p: C64 = reps
        .iter()
        .zip(&bracket.primal_witness)
        .map(|(r, c)| trace_product(r, c))
        .sum();
    Ok(ThetaSlice {
        theta,
        value: bracket.lower,
        upper: bracket.upper,
        modulus: p.norm(),
        bracket,
        fine,
    })
}

/// Largest `|p|` with `arg p` between two directions `δ < π/2` apart and
/// `Re(e^{−iθ}p)` bounded by `ua`, `ub` at the two ends.
fn sector_bound(ua: f64, ub: f64, delta: f64) -> f64 {
    if ua <= 0.0 || ub <= 0.0 {
        return 0.0;
    }
    if delta <= 0.0 {
        return ua.min(ub);
    }
    let (s, c) = delta.sin_cos();
    let mut best = ua.min(ub / c).max(ub.min(ua / c));
    let off_a = (ub - ua * c) / s;
    let off_b = (ua - ub * c) / s;
    if off_a >= 0.0 && off_b >= 0.0 {
        best = best.max((ua * ua + off_a * off_a).sqrt());
    }
    best
}

fn sector_bounds(slices: &[ThetaSlice]) -> Vec<f64> {
    let count = slices.len();
    (0..count)
        .map(|i| {
            let a = &slices[i];
            let b = &slices[(i + 1) % count];
            let mut delta = b.theta - a.theta;
            if i + 1 == count {
                delta += 2.0 * PI;
            }
            sector_bound(a.upper, b.upper, delta)
        })
        .collect()
}

fn insert_slices(slices: &mut Vec<ThetaSlice>, new: Vec<ThetaSlice>) {
    slices.extend(new);
    slices.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    slices.dedup_by(|b, a| (b.theta - a.theta).abs() < 1e-13);
}

/// Certified bracket for `sup_{Ψ ∈ cconv(K)} |⟨t, Ψ⟩|`.
pub fn sat_sup(k: &[CPMap], t: &MatrixTest, theta_grid: usize) -> Result<SaturatedSupResult> {
    if theta_grid < 8 {
        return invalid("sat_sup: theta grid needs at least 8 points");
    }
    let reps = pairing_representers(k, t)?;
    let n = k[0].n();
    let real_mode = reps.iter().all(|r| r.is_hermitian(1e-12));

    let mut slices: Vec<ThetaSlice>;
    let upper;
    if real_mode {
        let reps: Vec<_> = reps.iter().map(|r| r.hermitian_part()).collect();
        slices = [0.0, PI]
            .par_iter()
            .map(|&th| solve_slice(&reps, n, th, true))
            .collect::<Result<_>>()?;
        upper = slices[0].upper.max(slices[1].upper).max(0.0);
    } else {
        let h = 2.0 * PI / theta_grid as f64;
        slices = (0..theta_grid)
            .into_par_iter()
            .map(|i| solve_slice(&reps, n, i as f64 * h, false))
            .collect::<Result<_>>()?;
        let start = slices
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .map(|s| s.theta)
            .unwrap();

        let mut refined = Vec::new();
        let mut failure = None;
        golden_section_max(
            |th| match solve_slice(&reps, n, th.rem_euclid(2.0 * PI), false) {
                Ok(s) => {
                    let v = s.value;
                    refined.push(s);
                    v
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            start - h,
            start + h,
            THETA_TOL,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        insert_slices(&mut slices, refined);

        // bisect every sector whose bound is not yet within tolerance
        loop {
            let lower = slices.iter().map(|s| s.modulus).fold(0.0, f64::max);
            let bounds = sector_bounds(&slices);
            let top = bounds.iter().copied().fold(lower, f64::max);
            let target = lower + SAT_SUP_GAP_TOL * (1.0 + top);
            if top <= target || slices.len() >= MAX_THETA_SLICES {
                break;
            }
            let count = slices.len();
            let open: Vec<usize> = (0..count).filter(|&i| bounds[i] > target).collect();
            // sharpen coarse endpoints first, bisect only between fine ones
            let mut upgrade: Vec<usize> = open
                .iter()
                .flat_map(|&i| [i, (i + 1) % count])
                .filter(|&j| !slices[j].fine)
                .collect();
            upgrade.sort_unstable();
            upgrade.dedup();
            if !upgrade.is_empty() {
                let sharp = upgrade
                    .par_iter()
                    .map(|&j| solve_slice(&reps, n, slices[j].theta, true))
                    .collect::<Result<Vec<_>>>()?;
                for (j, s) in upgrade.into_iter().zip(sharp) {
                    slices[j] = s;
                }
                continue;
            }
            let mids: Vec<f64> = open
                .into_iter()
                .filter_map(|i| {
                    let a = slices[i].theta;
                    let mut b = slices[(i + 1) % count].theta;
                    if i + 1 == count {
                        b += 2.0 * PI;
                    }
                    (b - a > MIN_SECTOR).then(|| (0.5 * (a + b)).rem_euclid(2.0 * PI))
                })
                .take(MAX_THETA_SLICES - count)
                .collect();
            if mids.is_empty() {
                break;
            }
            let new = mids
                .par_iter()
                .map(|&th| solve_slice(&reps, n, th, false))
                .collect::<Result<Vec<_>>>()?;
            insert_slices(&mut slices, new);
        }
        let spec_bound = slices.iter().map(|s| s.upper).fold(0.0, f64::max) / (PI / theta_grid as f64).cos();
        let sectors = sector_bounds(&slices).into_iter().fold(0.0, f64::max);
        upper = sectors.min(spec_bound);
    }

    let best = slices
        .iter()
        .max_by(|a, b| a.modulus.total_cmp(&b.modulus))
        .unwrap();
    let lower = best.modulus.min(upper);
    let status = if upper - lower <= BRACKET_GAP_TOL * (1.0 + upper.abs())
        && slices.iter().all(|s| s.bracket.status == SolveStatus::Converged)
    {
        SolveStatus::Converged
    } else {
        SolveStatus::Loose
    };
    let value_bracket = ValueBracket {
        lower,
        upper,
        primal_witness: best.bracket.primal_witness.clone(),
        dual_witness: best.bracket.dual_witness.clone(),
        status,
    };
    Ok(SaturatedSupResult {
        value_bracket,
        theta_star: best.theta,
        per_theta_values: slices,
        real_mode,
    })
}

/// Three-way answer of a membership question decided from a bracket.
#[derive(Debug, Clone, PartialEq)]
pub enum PolarMembership {
    Member(SaturatedSupResult),
    NotMember(SaturatedSupResult),
    /// The bracket straddles the threshold.
    Indeterminate(SaturatedSupResult),
}

impl PolarMembership {
    pub fn is_member(&self) -> bool {
        matches!(self, PolarMembership::Member(_))
    }

    pub fn result(&self) -> &SaturatedSupResult {
        match self {
            PolarMembership::Member(r) | PolarMembership::NotMember(r) | PolarMembership::Indeterminate(r) => r,
        }
    }
}

/// Is `t` in the saturated polar `K°`?
pub fn in_saturated_polar(t: &MatrixTest, k: &[CPMap], tol: f64) -> Result<PolarMembership> {
    let r = sat_sup(k, t, DEFAULT_THETA_GRID)?;
    Ok(if r.upper() <= 1.0 + tol {
        PolarMembership::Member(r)
    } else if r.lower() > 1.0 + tol {
        PolarMembership::NotMember(r)
    } else {
        PolarMembership::Indeterminate(r)
    })
}

/// A random element of `cconv(K)` with the coefficients that produced it.
pub fn hull_sample_with_coefficients(
    k: &[CPMap],
    count: usize,
    max_terms: usize,
    seed: u64,
) -> Result<Vec<(CPMap, CStarCoefficients)>> {
    let (_, n) = check_family(k)?;
    if count == 0 || max_terms == 0 {
        return invalid("hull_sample: count and max_terms must be positive");
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(seed, i as u64);
            let terms = rng.random_range(1..=max_terms);
            let blocks = isometry_blocks(&haar_isometry(&mut rng, terms * n, n), n);
            let coeffs = CStarCoefficients::new(
                blocks
                    .into_iter()
                    .map(|a| CStarTerm {
                        a,
                        map_index: rng.random_range(0..k.len()),
                    })
                    .collect(),
            )?;
            Ok((cstar_combine(k, &coeffs)?, coeffs))
        })
        .collect()
}

pub fn hull_sample(k: &[CPMap], count: usize, max_terms: usize, seed: u64) -> Result<Vec<CPMap>> {
    Ok(hull_sample_with_coefficients(k, count, max_terms, seed)?
        .into_iter()
        .map(|(p, _)| p)
        .collect())
}

/// Nearest point of `cconv(K)` to a map, in Choi–Frobenius distance.
#[derive(Debug, Clone, PartialEq)]
pub struct HullProjection {
    pub distance: f64,
    pub nearest: CPMap,
    pub coefficients: CStarCoefficients,
    /// `(C_Φ − C_nearest)/distance` when the distance is positive.
    pub witness: Option<ComplexMatrix>,
    pub iterations: usize,
    pub converged: bool,
}

const ADMM_MAX_ITER: usize = 5_000;
const ADMM_TOL: f64 = 1e-12;
const ADMM_ADAPT_EVERY: usize = 25;
const BARRIER_MAX_OUTER: usize = 40;
const BARRIER_MAX_NEWTON: usize = 60;
const BARRIER_CENTERED: f64 = 1e-10;
const BARRIER_GAP: f64 = 1e-13;
const FACTORED_TOL: f64 = 1e-14;
const FACTORED_MAX_ITER: usize = 200;
/// Relative eigenvalue cut-offs tried when fixing the factor ranks.
const RANK_THRESHOLDS: [f64; 6] = [1e-9, 1e-2, 1e-3, 1e-4, 1e-6, 0.0];

/// Projects `C_Φ` onto `{Σ_j (id ⊗ ψ_j)(C_{Φ_j}) : C_{ψ_j} ⪰ 0, Σ_j Tr_1 C_{ψ_j} = I}`
/// by ADMM over the coefficient Choi matrices.
pub fn nearest_in_hull(target: &CPMap, k: &[CPMap]) -> Result<HullProjection> {
    let (m, n) = check_family(k)?;
    if target.dims() != (m, n) {
        return invalid("nearest_in_hull: target and generators have different dimensions");
    }
    let d = n * n;
    let block = d * d;
    let vars = k.len() * block;
    let out_dim = (m * n) * (m * n);
    let basis = hermitian_basis(d);

    let mut a = DMatrix::<f64>::zeros(out_dim, vars);
    let mut b = DMatrix::<f64>::zeros(n * n, vars);
    for (j, map) in k.iter().enumerate() {
        for (e, be) in basis.iter().enumerate() {
            let col = j * block + e;
            let img = ampliate_apply_choi(be, n, n, m, map.choi())?.hermitian_part();
            for (r, v) in hermitian_to_vec(&img).into_iter().enumerate() {
                a[(r, col)] = v;
            }
            let tr = partial_trace(be, (n, n), Factor::First)?;
            for (r, v) in hermitian_to_vec(&tr).into_iter().enumerate() {
                b[(r, col)] = v;
            }
        }
    }
    let c0 = DVector::from_vec(hermitian_to_vec(target.choi()));
    let id_coords = DVector::from_vec(hermitian_to_vec(&ComplexMatrix::identity(n)));

    let relax = 1.6;
    let ata = a.transpose() * &a;
    let factor = |sigma: f64| {
        let mut kkt = DMatrix::<f64>::zeros(vars + n * n, vars + n * n);
        kkt.view_mut((0, 0), (vars, vars)).copy_from(&ata);
        for i in 0..vars {
            kkt[(i, i)] += sigma;
        }
        kkt.view_mut((vars, 0), (n * n, vars)).copy_from(&b);
        kkt.view_mut((0, vars), (vars, n * n)).copy_from(&b.transpose());
        kkt.lu()
    };
    let mut sigma = 1.0;
    let mut lu = factor(sigma);
    let atc = a.transpose() * &c0;

    let start = hermitian_to_vec(&ComplexMatrix::identity(d).scale_real(1.0 / (n * k.len()) as f64));
    let mut z = DVector::from_iterator(vars, (0..k.len()).flat_map(|_| start.iter().copied()));
    let mut u = DVector::<f64>::zeros(vars);
    let mut rhs = DVector::<f64>::zeros(vars + n * n);
    rhs.rows_mut(vars, n * n).copy_from(&id_coords);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < ADMM_MAX_ITER {
        iterations += 1;
        rhs.rows_mut(0, vars).copy_from(&(&atc + (&z - &u) * sigma));
        let Some(sol) = lu.solve(&rhs) else {
            return Err(crate::Error::NumericalFailure("hull projection: singular KKT system".into()));
        };
        let x = sol.rows(0, vars).into_owned();
        let xh = &x * relax + &z * (1.0 - relax);
        let mut z_new = &xh + &u;
        for j in 0..k.len() {
            let mut seg = z_new.rows_mut(j * block, block);
            let mat = vec_to_hermitian(seg.as_slice(), d);
            let proj = eig_hermitian(&mat)?.map_spectrum(|v| v.max(0.0));
            seg.copy_from_slice(&hermitian_to_vec(&proj));
        }
        u += &xh - &z_new;
        let r_prim = (&x - &z_new).norm();
        let r_dual = sigma * (&z_new - &z).norm();
        z = z_new;
        if r_prim <= ADMM_TOL * (1.0 + z.norm()) && r_dual <= ADMM_TOL * (1.0 + sigma * u.norm()) {
            converged = true;
            break;
        }
        if iterations % ADMM_ADAPT_EVERY == 0 {
            let ratio = r_prim / r_dual.max(f64::MIN_POSITIVE);
            let scale = if ratio > 10.0 {
                ratio.sqrt().min(1e3)
            } else if ratio < 0.1 {
                ratio.sqrt().max(1e-3)
            } else {
                1.0
            };
            if scale != 1.0 && (1e-8..=1e8).contains(&(sigma * scale)) {
                sigma *= scale;
                u /= scale;
                lu = factor(sigma);
            }
        }
    }

    let mut best_raw = (&a * &z - &c0).norm();
    let polish = |start: &DVector<f64>, z: &mut DVector<f64>, best_raw: &mut f64| -> Result<()> {
        for thr in RANK_THRESHOLDS {
            if *best_raw <= FACTORED_TOL {
                break;
            }
            let p = refine_factored(&a, &b, &c0, &id_coords, start, k.len(), d, thr)?;
            let raw = (&a * &p - &c0).norm();
            if raw < *best_raw {
                *best_raw = raw;
                *z = p;
            }
        }
        Ok(())
    };
    let start = z.clone();
    polish(&start, &mut z, &mut best_raw)?;
    if best_raw > FACTORED_TOL {
        if let Some(x) = hull_distance_barrier(&a, &b, &c0, k.len(), n)? {
            let raw = (&a * &x - &c0).norm();
            if raw < best_raw {
                best_raw = raw;
                z = x.clone();
            }
            polish(&x, &mut z, &mut best_raw)?;
        }
    }

    let blocks: Vec<ComplexMatrix> = (0..k.len())
        .map(|j| vec_to_hermitian(z.rows(j * block, block).as_slice(), d))
        .collect();
    let blocks = normalize_primal(n, blocks)?;
    let mut terms = Vec::new();
    for (j, c) in blocks.iter().enumerate() {
        let psi = CPMap::from_choi(n, n, c.clone())?;
        for v in kraus_from_choi(&psi)?.ops() {
            if v.frobenius_norm() > 0.0 {
                terms.push(CStarTerm {
                    a: v.adjoint(),
                    map_index: j,
                });
            }
        }
    }
    let coefficients = CStarCoefficients::new(terms)?;
    let nearest = cstar_combine(k, &coefficients)?;
    let diff = target.choi() - nearest.choi();
    let distance = diff.frobenius_norm();
    let witness = (distance > 0.0).then(|| diff.scale_real(1.0 / distance).hermitian_part());
    Ok(HullProjection {
        distance,
        nearest,
        coefficients,
        witness,
        iterations,
        converged,
    })
}

/// Primal barrier method for `min t` subject to `‖A x − c‖ ≤ t`,
/// `B x = I` and every block of `x` positive semidefinite. Returns the last
/// strictly feasible `x`, or `None` if no Newton step could be taken.
fn hull_distance_barrier(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c0: &DVector<f64>,
    blocks: usize,
    n: usize,
) -> Result<Option<DVector<f64>>> {
    let d = n * n;
    let block = d * d;
    let vars = blocks * block;
    let q = b.nrows();
    let dim = vars + 1;
    let basis = hermitian_basis(d);
    let ata = a.transpose() * a;
    let degree = (blocks * d + 2) as f64;

    let start = hermitian_to_vec(&ComplexMatrix::identity(d).scale_real(1.0 / (n * blocks) as f64));
    let mut x = DVector::from_iterator(dim, (0..blocks).flat_map(|_| start.iter().copied()).chain([0.0]));
    x[vars] = (a * x.rows(0, vars) - c0).norm() + 1.0;

    // barrier value, and optionally gradient and Hessian, at weight tau
    let eval = |x: &DVector<f64>, tau: f64, derivs: bool| -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let t = x[vars];
        let r = a * x.rows(0, vars) - c0;
        let slack = t * t - r.norm_squared();
        if !(t > 0.0 && slack > 0.0) {
            return None;
        }
        let mut value = tau * t - slack.ln();
        let mut grad = DVector::zeros(if derivs { dim } else { 0 });
        let mut hess = DMatrix::zeros(if derivs { dim } else { 0 }, if derivs { dim } else { 0 });
        for j in 0..blocks {
            let c = vec_to_hermitian(x.rows(j * block, block).as_slice(), d);
            let (inv, logdet) = cholesky_inverse_logdet(&c)?;
            value -= logdet;
            if derivs {
                grad.rows_mut(j * block, block).copy_from_slice(&hermitian_to_vec(&inv).iter().map(|v| -v).collect::<Vec<_>>());
                for (e, be) in basis.iter().enumerate() {
                    let col = hermitian_to_vec(&inv.congruence(be));
                    for (f, v) in col.into_iter().enumerate() {
                        hess[(j * block + f, j * block + e)] = v;
                    }
                }
            }
        }
        if derivs {
            let atr = a.transpose() * &r;
            let gx = &atr * (2.0 / slack);
            for i in 0..vars {
                grad[i] += gx[i];
            }
            grad[vars] = tau - 2.0 * t / slack;
            let mut hx = hess.view_mut((0, 0), (vars, vars));
            hx += &atr * atr.transpose() * (4.0 / (slack * slack)) + &ata * (2.0 / slack);
            for i in 0..vars {
                let v = -4.0 * t * atr[i] / (slack * slack);
                hess[(i, vars)] = v;
                hess[(vars, i)] = v;
            }
            hess[(vars, vars)] = 4.0 * t * t / (slack * slack) - 2.0 / slack;
        }
        Some((value, grad, hess))
    };

    let mut tau = 1.0;
    let mut moved = false;
    for _ in 0..BARRIER_MAX_OUTER {
        for _ in 0..BARRIER_MAX_NEWTON {
            let Some((value, grad, hess)) = eval(&x, tau, true) else {
                return Ok(moved.then_some(x.rows(0, vars).into_owned()));
            };
            // equilibrated KKT system with the linear constraint on x
            let scale: Vec<f64> = (0..dim).map(|i| 1.0 / hess[(i, i)].abs().max(1e-300).sqrt()).collect();
            let mut kkt = DMatrix::<f64>::zeros(dim + q, dim + q);
            for i in 0..dim {
                for j in 0..dim {
                    kkt[(i, j)] = scale[i] * hess[(i, j)] * scale[j];
                }
            }
            for r in 0..q {
                for i in 0..vars {
                    let v = b[(r, i)] * scale[i];
                    kkt[(dim + r, i)] = v;
                    kkt[(i, dim + r)] = v;
                }
            }
            let mut rhs = DVector::<f64>::zeros(dim + q);
            for i in 0..dim {
                rhs[i] = -grad[i] * scale[i];
            }
            let lu = kkt.clone().lu();
            let Some(mut sol) = lu.solve(&rhs) else {
                break;
            };
            if let Some(fix) = lu.solve(&(&rhs - &kkt * &sol)) {
                sol += fix;
            }
            let step = DVector::from_iterator(dim, (0..dim).map(|i| sol[i] * scale[i]));
            let slope = grad.dot(&step);
            if !(slope < 0.0) || -slope <= BARRIER_CENTERED {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = &x + &step * alpha;
                if let Some((v, _, _)) = eval(&trial, tau, false) {
                    if v <= value + 0.25 * alpha * slope {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            moved = true;
        }
        if degree / tau <= BARRIER_GAP {
            break;
        }
        tau *= 10.0;
    }
    Ok(moved.then_some(x.rows(0, vars).into_owned()))
}

/// Levenberg–Marquardt on `C_j = V_j V_j*` for the residual of
/// `A(C) = c`, `B(C) = I`. `V_j` starts from the eigenvectors of `z_j` with
/// eigenvalue above `threshold` (relative), which fixes its rank.
#[allow(clippy::too_many_arguments)]
fn refine_factored(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c0: &DVector<f64>,
    id_coords: &DVector<f64>,
    z: &DVector<f64>,
    blocks: usize,
    d: usize,
    threshold: f64,
) -> Result<DVector<f64>> {
    let block = d * d;
    let ab = {
        let mut m = DMatrix::<f64>::zeros(a.nrows() + b.nrows(), a.ncols());
        m.view_mut((0, 0), a.shape()).copy_from(a);
        m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
        m
    };
    let mut target = DVector::<f64>::zeros(ab.nrows());
    target.rows_mut(0, c0.len()).copy_from(c0);
    target.rows_mut(c0.len(), id_coords.len()).copy_from(id_coords);

    let mut factors = Vec::with_capacity(blocks);
    for j in 0..blocks {
        let eig = eig_hermitian(&vec_to_hermitian(z.rows(j * block, block).as_slice(), d))?;
        let cut = threshold * eig.max().max(1.0);
        let keep: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > cut).collect();
        let v = ComplexMatrix::from_fn(d, keep.len(), |p, q| {
            eig.eigenvectors[(p, keep[q])] * eig.eigenvalues[keep[q]].sqrt()
        });
        factors.push(v);
    }
    // parameter offset of each factor: real and imaginary part per entry
    let offsets: Vec<usize> = factors
        .iter()
        .scan(0, |acc, v| {
            let at = *acc;
            *acc += 2 * v.rows() * v.cols();
            Some(at)
        })
        .collect();
    let params: usize = factors.iter().map(|v| 2 * v.rows() * v.cols()).sum();
    if params == 0 {
        return Ok(z.clone());
    }
    let gram = |fs: &[ComplexMatrix]| {
        let mut out = DVector::<f64>::zeros(blocks * block);
        for (j, v) in fs.iter().enumerate() {
            out.rows_mut(j * block, block)
                .copy_from_slice(&hermitian_to_vec(&(v * &v.adjoint())));
        }
        out
    };
    let residual = |fs: &[ComplexMatrix]| &ab * gram(fs) - &target;

    let mut r = residual(&factors);
    let mut lambda = 1e-6 * r.norm_squared().max(1e-30);
    for _ in 0..FACTORED_MAX_ITER {
        if r.norm() <= FACTORED_TOL {
            break;
        }
        // columns: d(VV*) along the real and imaginary part of each entry
        let mut jac = DMatrix::<f64>::zeros(ab.nrows(), params);
        for (j, v) in factors.iter().enumerate() {
            let ab_j = ab.columns(j * block, block);
            let r = v.cols();
            for p in 0..d {
                for q in 0..r {
                    for (part, unit) in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)].into_iter().enumerate() {
                        let mut dv = ComplexMatrix::zeros(d, r);
                        dv[(p, q)] = unit;
                        let dg = &(&dv * &v.adjoint()) + &(v * &dv.adjoint());
                        let col = ab_j * DVector::from_vec(hermitian_to_vec(&dg));
                        jac.set_column(offsets[j] + 2 * (p * r + q) + part, &col);
                    }
                }
            }
        }
        let jjt = &jac * jac.transpose();
        let mut improved = false;
        for _ in 0..30 {
            let mut sys = jjt.clone();
            for i in 0..sys.nrows() {
                sys[(i, i)] += lambda;
            }
            let Some(w) = sys.lu().solve(&r) else {
                lambda *= 10.0;
                continue;
            };
            let step = -(jac.transpose() * w);
            let trial: Vec<ComplexMatrix> = factors
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let r = v.cols();
                    ComplexMatrix::from_fn(d, r, |p, q| {
                        let i = offsets[j] + 2 * (p * r + q);
                        v[(p, q)] + C64::new(step[i], step[i + 1])
                    })
                })
                .collect();
            let r_new = residual(&trial);
            if r_new.norm() < r.norm() {
                factors = trial;
                r = r_new;
                lambda = (lambda / 10.0).max(1e-30);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(gram(&factors))
}

/// A test in `K°` (after scaling) whose value at the target exceeds one.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCertificate {
    pub test: MatrixTest,
    /// `scale·⟨test, Φ⟩ = ⟨W, C_Φ⟩` for the Hermitian witness `W` it came from.
    pub scale: f64,
    pub sat_sup_upper: f64,
    pub value_at_target: f64,
}

/// Recomputed quantities of a certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    pub sat_sup_upper: f64,
    pub value_at_target: f64,
    pub valid: bool,
}

pub const CERTIFICATE_REPRO_TOL: f64 = 1e-8;

impl SeparationCertificate {
    /// Recomputes the supremum over `cconv(K)` and the target pairing.
    pub fn revalidate(&self, k: &[CPMap], target: &CPMap) -> Result<CertificateCheck> {
        let sup = sat_sup(k, &self.test, DEFAULT_THETA_GRID)?;
        let value = pairing(&self.test, target)?;
        let upper = sup.upper();
        let valid = upper <= 1.0
            && value.re > 1.0
            && (upper - self.sat_sup_upper).abs() <= CERTIFICATE_REPRO_TOL
            && (value.re - self.value_at_target).abs() <= CERTIFICATE_REPRO_TOL;
        Ok(CertificateCheck {
            sat_sup_upper: upper,
            value_at_target: value.re,
            valid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuntParams {
    pub hull_samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for HuntParams {
    fn default() -> Self {
        Self {
            hull_samples: 200,
            seed: 0,
            tol: 1e-6,
        }
    }
}

/// The Hermitian functional `X ↦ ⟨W, X⟩` on Choi matrices as a scaled test.
pub fn witness_to_test(w: &ComplexMatrix, m: usize, n: usize) -> Result<(MatrixTest, f64)> {
    if !w.is_hermitian(crate::linalg::HERMITICITY_TOL) {
        return invalid("witness must be Hermitian");
    }
    let eig = eig_hermitian(w)?;
    let pos = eig.map_spectrum(|v| v.max(0.0));
    let neg = eig.map_spectrum(|v| (-v).max(0.0));
    let (tp, tn) = (pos.trace().re, neg.trace().re);
    let mut tests = Vec::new();
    let mut coeffs = Vec::new();
    if tp > 0.0 {
        tests.push(canonical_choi_test(&pos.scale_real(1.0 / tp), m, n)?);
        coeffs.push(c64(tp, 0.0));
    }
    if tn > 0.0 {
        tests.push(canonical_choi_test(&neg.scale_real(1.0 / tn), m, n)?);
        coeffs.push(c64(-tn, 0.0));
    }
    let folded = fold_linear(&tests, &coeffs)?;
    Ok((folded.test, folded.scale))
}

fn certify_witness(
    w: &ComplexMatrix,
    target: &CPMap,
    k: &[CPMap],
    tol: f64,
) -> Result<Option<SeparationCertificate>> {
    let (m, n) = target.dims();
    let (test, scale) = witness_to_test(w, m, n)?;
    let u = sat_sup(k, &test, DEFAULT_THETA_GRID)?.upper();
    let v = pairing(&test, target)?.re;
    if v == 0.0 {
        return Ok(None);
    }
    let c = v.signum() * (1.0 - tol) / u.max(0.5 * (1.0 - tol) * v.abs());
    if (c * v).abs() <= 1.0 {
        return Ok(None);
    }
    let scaled = test.scaled(c64(c, 0.0));
    let upper = sat_sup(k, &scaled, DEFAULT_THETA_GRID)?.upper();
    let value = pairing(&scaled, target)?.re;
    if upper > 1.0 || value <= 1.0 {
        return Ok(None);
    }
    Ok(Some(SeparationCertificate {
        test: scaled,
        scale: scale / c,
        sat_sup_upper: upper,
        value_at_target: value,
    }))
}

/// Looks for a test bounded by one on `cconv(K)` and exceeding one at `Φ0`.
pub fn separation_hunt(
    target: &CPMap,
    k: &[CPMap],
    params: &HuntParams,
) -> Result<Option<SeparationCertificate>> {
    let (m, n) = check_family(k)?;
    if target.dims() != (m, n) {
        return invalid("separation_hunt: target and generators have different dimensions");
    }
    let mut points: Vec<ComplexMatrix> = k.iter().map(|p| p.choi().clone()).collect();
    if params.hull_samples > 0 {
        for p in hull_sample(k, params.hull_samples, n * n * k.len(), params.seed)? {
            points.push(p.into_choi());
        }
    }
    let sampled = min_norm_point(&points, target.choi(), params.tol)?;
    hunt_with(target, k, params.tol, sampled.witness.as_ref(), None)
}

fn hunt_with(
    target: &CPMap,
    k: &[CPMap],
    tol: f64,
    sampled_witness: Option<&ComplexMatrix>,
    projection: Option<&HullProjection>,
) -> Result<Option<SeparationCertificate>> {
    if let Some(w) = sampled_witness {
        if let Some(cert) = certify_witness(w, target, k, tol)? {
            return Ok(Some(cert));
        }
    }
    let owned;
    let proj = match projection {
        Some(p) => p,
        None => {
            owned = nearest_in_hull(target, k)?;
            &owned
        }
    };
    if proj.distance > tol {
        if let Some(w) = &proj.witness {
            return certify_witness(w, target, k, tol);
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePolarParams {
    pub epsilon: f64,
    pub hunt: HuntParams,
}

impl Default for DoublePolarParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            hunt: HuntParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BipolarVerdict {
    Inside {
        distance: f64,
        combination: CStarCoefficients,
    },
    Outside(SeparationCertificate),
    Undecided {
        best_distance: f64,
        best_test: Option<MatrixTest>,
    },
}

impl BipolarVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            BipolarVerdict::Inside { .. } => "INSIDE",
            BipolarVerdict::Outside(_) => "OUTSIDE",
            BipolarVerdict::Undecided { .. } => "UNDECIDED",
        }
    }
}

/// Decides `Φ ∈ (K°)°` by a hull distance (inside) or a certificate (outside).
pub fn in_double_polar(map: &CPMap, k: &[CPMap], params: &DoublePolarParams) -> Result<BipolarVerdict> {
    let (m, n) = check_family(k)?;
    if map.dims() != (m, n) {
        return invalid("in_double_polar: map and generators have different dimensions");
    }
    let mut pool: Vec<(CPMap, CStarCoefficients)> = Vec::new();
    for (j, p) in k.iter().enumerate() {
        let coeffs = CStarCoefficients::new(vec![CStarTerm {
            a: ComplexMatrix::identity(n),
            map_index: j,
        }])?;
        pool.push((p.clone(), coeffs));
    }
    if params.hunt.hull_samples > 0 {
        pool.extend(hull_sample_with_coefficients(
            k,
            params.hunt.hull_samples,
            n * n * k.len(),
            params.hunt.seed,
        )?);
    }
    let points: Vec<ComplexMatrix> = pool.iter().map(|(p, _)| p.choi().clone()).collect();
    let sampled = min_norm_point(&points, map.choi(), params.epsilon)?;
    if sampled.distance <= params.epsilon {
        let mut terms = Vec::new();
        for ((_, coeffs), &w) in pool.iter().zip(&sampled.weights) {
            if w > 0.0 {
                for t in coeffs.terms() {
                    terms.push(CStarTerm {
                        a: t.a.scale_real(w.sqrt()),
                        map_index: t.map_index,
                    });
                }
            }
        }
        let combination = CStarCoefficients::new(terms)?;
        let distance = (map.choi() - cstar_combine(k, &combination)?.choi()).frobenius_norm();
        if distance <= params.epsilon {
            return Ok(BipolarVerdict::Inside {
                distance,
                combination,
            });
        }
    }
    let proj = nearest_in_hull(map, k)?;
    if proj.distance <= params.epsilon {
        return Ok(BipolarVerdict::Inside {
            distance: proj.distance,
            combination: proj.coefficients,
        });
    }
    if let Some(cert) = hunt_with(map, k, params.hunt.tol, sampled.witness.as_ref(), Some(&proj))? {
        return Ok(BipolarVerdict::Outside(cert));
    }
    let best_test = match &proj.witness {
        Some(w) => Some(witness_to_test(w, m, n)?.0),
        None => None,
    };
    Ok(BipolarVerdict::Undecided {
        best_distance: proj.distance.min(sampled.distance),
        best_test,
    })
}

/// Polar of a set of nonnegative reals under `|x·s| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarPolar {
    Bounded { lo: f64, hi: f64 },
    /// Every `x ∈ K` is zero, so the polar is all of `ℝ`.
    Unbounded,
}

fn check_scalars(k: &[f64]) -> Result<f64> {
    if k.is_empty() {
        return invalid("scalar family is empty");
    }
    if k.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return invalid("scalar family entries must be finite and nonnegative");
    }
    Ok(k.iter().copied().fold(0.0, f64::max))
}

pub fn scalar_polar_interval(k: &[f64]) -> Result<ScalarPolar> {
    let sup = check_scalars(k)?;
    Ok(if sup == 0.0 {
        ScalarPolar::Unbounded
    } else {
        ScalarPolar::Bounded {
            lo: -1.0 / sup,
            hi: 1.0 / sup,
        }
    })
}

/// Nonnegative `x` with `|x·s| ≤ 1` on the whole polar: `[0, sup K]`.
pub fn scalar_double_polar(k: &[f64]) -> Result<(f64, f64)> {
    Ok((0.0, check_scalars(k)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::{random_cp_with, Normalization};
    use crate::random::{random_density, random_matrix};

    fn random_test(rng: &mut crate::random::ExperimentRng, k: usize, m: usize, n: usize) -> MatrixTest {
        MatrixTest::new(k, random_density(rng, k * n, k * n), random_matrix(rng, k * m, k * m)).unwrap()
    }

    #[test]
    fn representers_reproduce_pairings_of_combinations() {
        let mut rng = seeded_rng(301, 0);
        let k: Vec<CPMap> = (0..2)
            .map(|_| random_cp_with(&mut rng, 2, 2, 2, Normalization::None).unwrap())
            .collect();
        let t = random_test(&mut rng, 2, 2, 2);
        let reps = pairing_representers(&k, &t).unwrap();
        for (psi, coeffs) in hull_sample_with_coefficients(&k, 5, 4, 9).unwrap() {
            let mut blocks = vec![ComplexMatrix::zeros(4, 4); 2];
            for term in coeffs.terms() {
                blocks[term.map_index] += &crate::sdp::compression_choi(&[&term.a], 2);
            }
            let via_reps: C64 = reps.iter().zip(&blocks).map(|(r, c)| trace_product(r, c)).sum();
            let direct = pairing(&t, &psi).unwrap();
            assert!((via_reps - direct).norm() < 1e-12);
            let rebuilt = saturation_map(&k, &blocks).unwrap();
            assert!(rebuilt.distance(&psi) < 1e-12);
        }
    }

    #[test]
    fn sector_bound_examples() {
        // equal bounds: the tangent lines meet at u/cos(δ/2)
        let d = 0.3;
        assert!((sector_bound(1.0, 1.0, d) - 1.0 / (d / 2.0).cos()).abs() < 1e-14);
        assert_eq!(sector_bound(-0.1, 1.0, d), 0.0);
        // a single point on the θa ray
        let ub = 2.0 * d.cos();
        assert!((sector_bound(2.0, ub, d) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_is_its_own_saturation() {
        let mut rng = seeded_rng(307, 0);
        let dep = CPMap::depolarizing(2, 2);
        for _ in 0..3 {
            let t = random_test(&mut rng, 1, 2, 2);
            let r = sat_sup(std::slice::from_ref(&dep), &t, 64).unwrap();
            let exact = pairing(&t, &dep).unwrap().norm();
            assert!(r.lower() <= exact + 1e-9 && exact <= r.upper() + 1e-12);
            assert!(r.upper() - r.lower() <= 1e-6, "{} {}", r.lower(), r.upper());
        }
    }

    #[test]
    fn unital_saturation_fixes_the_identity_element() {
        let mut rng = seeded_rng(311, 0);
        let rho = random_density(&mut rng, 2, 2);
        let t = MatrixTest::new(1, rho, ComplexMatrix::identity(2)).unwrap();
        let r = sat_sup(&[CPMap::identity(2)], &t, 64).unwrap();
        assert!(r.real_mode);
        assert!((r.upper() - 1.0).abs() < 1e-8 && (r.lower() - 1.0).abs() < 1e-8);
        assert!(in_saturated_polar(&t, &[CPMap::identity(2)], 1e-8).unwrap().is_member());
    }

    #[test]
    fn sat_sup_dominates_random_combinations() {
        let mut rng = seeded_rng(313, 0);
        let k: Vec<CPMap> = (0..2)
            .map(|_| random_cp_with(&mut rng, 2, 2, 2, Normalization::None).unwrap())
            .collect();
        let t = random_test(&mut rng, 1, 2, 2);
        let r = sat_sup(&k, &t, 64).unwrap();
        assert!(r.upper() - r.lower() <= 1e-5);
        let best = hull_sample(&k, 1000, 8, 5)
            .unwrap()
            .iter()
            .map(|p| pairing(&t, p).unwrap().norm())
            .fold(0.0, f64::max);
        assert!(best <= r.upper() + 1e-9);
        for s in &r.per_theta_values {
            assert!(s.value <= r.upper() + 1e-8);
            let psi = saturation_map(&k, &s.bracket.primal_witness).unwrap();
            let p = pairing(&t, &psi).unwrap() * C64::from_polar(1.0, -s.theta);
            assert!((p.re - s.value).abs() < 1e-7);
        }
    }

    #[test]
    fn hull_samples_of_a_fixed_point() {
        let dep = CPMap::depolarizing(2, 3);
        for p in hull_sample(std::slice::from_ref(&dep), 10, 5, 3).unwrap() {
            assert!(p.distance(&dep) < 1e-11);
        }
        // one term: a unitary conjugation
        let id = CPMap::identity(2);
        for (p, c) in hull_sample_with_coefficients(&[id], 5, 1, 4).unwrap() {
            assert_eq!(c.terms().len(), 1);
            let a = &c.terms()[0].a;
            assert!((&(&a.adjoint() * a) - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-12);
            assert!(p.is_cp());
        }
    }

    #[test]
    fn depolarizing_separates_from_identity() {
        let k = vec![CPMap::depolarizing(2, 2)];
        let target = CPMap::identity(2);
        let cert = separation_hunt(&target, &k, &HuntParams::default()).unwrap().unwrap();
        assert!(cert.sat_sup_upper <= 1.0);
        assert!(cert.value_at_target >= 1.01);
        assert!(cert.revalidate(&k, &target).unwrap().valid);
        let v = in_double_polar(&target, &k, &DoublePolarParams::default()).unwrap();
        assert_eq!(v.label(), "OUTSIDE");
    }

    #[test]
    fn explicit_combinations_are_inside() {
        let mut rng = seeded_rng(317, 0);
        for trial in 0..3 {
            let k: Vec<CPMap> = (0..2)
                .map(|_| random_cp_with(&mut rng, 2, 2, 2, Normalization::None).unwrap())
                .collect();
            let (psi, _) = hull_sample_with_coefficients(&k, 1, 3, 100 + trial).unwrap().remove(0);
            let params = DoublePolarParams {
                hunt: HuntParams {
                    seed: trial,
                    ..HuntParams::default()
                },
                ..DoublePolarParams::default()
            };
            match in_double_polar(&psi, &k, &params).unwrap() {
                BipolarVerdict::Inside { distance, combination } => {
                    assert!(distance <= 1e-6);
                    assert!(cstar_combine(&k, &combination).unwrap().distance(&psi) <= 1e-6);
                }
                other => panic!("expected INSIDE, got {}", other.label()),
            }
            assert!(separation_hunt(&psi, &k, &params.hunt).unwrap().is_none());
        }
    }

    #[test]
    fn self_membership() {
        let mut rng = seeded_rng(331, 0);
        let phi = random_cp_with(&mut rng, 2, 2, 3, Normalization::None).unwrap();
        match in_double_polar(&phi, std::slice::from_ref(&phi), &DoublePolarParams::default()).unwrap() {
            BipolarVerdict::Inside { distance, .. } => assert!(distance < 1e-12),
            other => panic!("{}", other.label()),
        }
    }

    #[test]
    fn scalar_polars() {
        assert_eq!(scalar_polar_interval(&[1.0]).unwrap(), ScalarPolar::Bounded { lo: -1.0, hi: 1.0 });
        assert_eq!(scalar_polar_interval(&[2.0]).unwrap(), ScalarPolar::Bounded { lo: -0.5, hi: 0.5 });
        assert_eq!(
            scalar_polar_interval(&[1.0, 3.0]).unwrap(),
            ScalarPolar::Bounded { lo: -1.0 / 3.0, hi: 1.0 / 3.0 }
        );
        assert_eq!(scalar_polar_interval(&[0.0, 0.0]).unwrap(), ScalarPolar::Unbounded);
        assert!(scalar_polar_interval(&[]).is_err());
        assert!(scalar_polar_interval(&[-1.0]).is_err());
        assert_eq!(scalar_double_polar(&[2.0]).unwrap(), (0.0, 2.0));
    }

    #[test]
    fn polar_of_tests() {
        let dep = CPMap::depolarizing(2, 2);
        assert!(in_polar_of_tests(&dep, &[], 0.0).unwrap());
        let mut rng = seeded_rng(337, 0);
        let rho = random_density(&mut rng, 4, 4);
        let t = canonical_choi_test(&rho, 2, 2).unwrap();
        assert!((pairing(&t, &dep).unwrap().re - 0.5).abs() < 1e-12);
        assert!(in_polar_of_tests(&dep, std::slice::from_ref(&t), 0.0).unwrap());
        assert!(!in_polar_of_tests(&dep, &[t.clone(), t.scaled(c64(4.0, 0.0))], 1e-9).unwrap());
    }
}

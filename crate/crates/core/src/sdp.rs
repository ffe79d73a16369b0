//! Small semidefinite programs arising from saturated-polar suprema, and a
//! minimum-norm-point routine over finite hulls.
//!
//! The saturation SDP over `J` generators and output dimension `n` is
//!
//! ```text
//! primal:  max Σ_j ⟨L_j, C_j⟩   s.t.  C_j ⪰ 0,  Σ_j Tr_1(C_j) = I_n
//! dual:    min Tr(Y)            s.t.  I_n ⊗ Y ⪰ L_j  for all j
//! ```
//!
//! with `C_j`, `L_j` of size `n²×n²` (input factor first). The dual has only
//! `n²` real unknowns and is solved by a log-barrier Newton method; the
//! central path hands back primal points `C_j = S_j⁻¹/t`. Every returned
//! bracket is assembled from an exactly feasible primal point and a dual
//! point made feasible by a spectral shift, so `lower ≤ OPT ≤ upper` holds
//! whether or not the iteration converged.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::linalg::{
    cholesky_inverse_logdet, eig_hermitian, hermitian_basis, hermitian_to_vec, inner_unchecked, inverse_sqrt_pd, kron,
    partial_trace, trace_product, vec_to_hermitian, ComplexMatrix, Factor, HERMITICITY_TOL,
};
use crate::random::{haar_isometry, isometry_blocks, seeded_rng};
use rand::Rng;

/// Gap (relative to `1 + |upper|`) below which a bracket counts as tight.
pub const BRACKET_GAP_TOL: f64 = 1e-6;
/// Tolerances used when re-checking a certificate from scratch.
pub const PRIMAL_PSD_TOL: f64 = 1e-9;
pub const PRIMAL_EQ_TOL: f64 = 1e-8;
pub const DUAL_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarSdpInstance {
    n: usize,
    objectives: Vec<ComplexMatrix>,
}

impl PolarSdpInstance {
    pub fn new(n: usize, objectives: Vec<ComplexMatrix>) -> Result<Self> {
        if n == 0 {
            return invalid("SDP instance: n must be positive");
        }
        if objectives.is_empty() {
            return invalid("SDP instance: at least one objective is required");
        }
        let mut sym = Vec::with_capacity(objectives.len());
        for (j, l) in objectives.iter().enumerate() {
            if l.shape() != (n * n, n * n) {
                return invalid(format!(
                    "SDP instance: objective {j} is {}x{}, expected {1}x{1}",
                    l.rows(),
                    n * n
                ));
            }
            if !l.is_hermitian(HERMITICITY_TOL) {
                return invalid(format!("SDP instance: objective {j} is not Hermitian"));
            }
            sym.push(l.hermitian_part());
        }
        Ok(Self {
            n,
            objectives: sym,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objectives(&self) -> &[ComplexMatrix] {
        &self.objectives
    }

    /// `Σ_j ⟨L_j, C_j⟩`.
    pub fn primal_objective(&self, cs: &[ComplexMatrix]) -> f64 {
        self.objectives
            .iter()
            .zip(cs)
            .map(|(l, c)| inner_unchecked(l, c).re)
            .sum()
    }

    /// Upper bound certified by any Hermitian `Y`: `Y + δI` with
    /// `δ = max(0, −min_j λ_min(I⊗Y − L_j))` is dual feasible.
    pub fn certified_dual_bound(&self, y: &ComplexMatrix) -> Result<f64> {
        let shift = self.dual_infeasibility(y)?;
        Ok(y.trace().re + self.n as f64 * shift)
    }

    /// `max(0, −min_j λ_min(I⊗Y − L_j))`.
    pub fn dual_infeasibility(&self, y: &ComplexMatrix) -> Result<f64> {
        let lifted = kron(&ComplexMatrix::identity(self.n), y);
        let mut worst: f64 = 0.0;
        for l in &self.objectives {
            let lmin = eig_hermitian(&(&lifted - l))?.min();
            worst = worst.max(-lmin);
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Valid but wider than [`BRACKET_GAP_TOL`].
    Loose,
}

/// Certified interval around the SDP optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueBracket {
    pub lower: f64,
    pub upper: f64,
    /// Feasible primal point `C_j` attaining `lower`.
    pub primal_witness: Vec<ComplexMatrix>,
    /// Dual feasible `Y` with `Tr(Y) = upper`.
    pub dual_witness: ComplexMatrix,
    pub status: SolveStatus,
}

impl ValueBracket {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    /// Stop once the certified gap is below `gap_tol·(1 + |upper|)`.
    pub gap_tol: f64,
    pub max_outer: usize,
    /// Multiplier applied to the barrier weight `1/t` per outer step.
    pub reduction: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            max_outer: 200,
            reduction: 0.25,
            max_newton: 60,
        }
    }
}

pub fn solve_polar_sdp(inst: &PolarSdpInstance) -> Result<ValueBracket> {
    solve_polar_sdp_with(inst, &BarrierOptions::default())
}

struct Barrier<'a> {
    inst: &'a PolarSdpInstance,
    lifted_basis: Vec<ComplexMatrix>,
    trace_vec: DVector<f64>,
}

struct Slack {
    inverses: Vec<ComplexMatrix>,
    log_det: f64,
}

impl<'a> Barrier<'a> {
    fn new(inst: &'a PolarSdpInstance) -> Self {
        let n = inst.n;
        let basis = hermitian_basis(n);
        let id = ComplexMatrix::identity(n);
        let lifted_basis = basis.iter().map(|b| kron(&id, b)).collect();
        let trace_vec = DVector::from_iterator(n * n, basis.iter().map(|b| b.trace().re));
        Self {
            inst,
            lifted_basis,
            trace_vec,
        }
    }

    fn y_matrix(&self, y: &DVector<f64>) -> ComplexMatrix {
        vec_to_hermitian(y.as_slice(), self.inst.n)
    }

    /// Inverses and `Σ log det` of the slacks, or `None` outside the interior.
    fn slack(&self, y: &DVector<f64>) -> Result<Option<Slack>> {
        let lifted = kron(&ComplexMatrix::identity(self.inst.n), &self.y_matrix(y));
        let mut inverses = Vec::with_capacity(self.inst.objectives.len());
        let mut log_det = 0.0;
        for l in &self.inst.objectives {
            let Some((inv, ld)) = cholesky_inverse_logdet(&(&lifted - l)) else {
                return Ok(None);
            };
            log_det += ld;
            inverses.push(inv);
        }
        Ok(Some(Slack { inverses, log_det }))
    }

    fn value(&self, t: f64, y: &DVector<f64>, slack: &Slack) -> f64 {
        t * self.trace_vec.dot(y) - slack.log_det
    }

    fn gradient_hessian(&self, t: f64, slack: &Slack) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.inst.n;
        let p = n * n;
        let mut grad = &self.trace_vec * t;
        let mut hess = DMatrix::<f64>::zeros(p, p);
        for inv in &slack.inverses {
            let reduced = partial_trace(inv, (n, n), Factor::First)?;
            let coords = hermitian_to_vec(&reduced);
            for a in 0..p {
                grad[a] -= coords[a];
            }
            let w: Vec<ComplexMatrix> = self.lifted_basis.iter().map(|b| inv * b).collect();
            for a in 0..p {
                for b in a..p {
                    let h = trace_product(&w[a], &w[b]).re;
                    hess[(a, b)] += h;
                    if a != b {
                        hess[(b, a)] += h;
                    }
                }
            }
        }
        Ok((grad, hess))
    }

    /// Damped Newton centering for weight `t`. Returns false if the
    /// iteration stalled before reaching the decrement tolerance.
    fn center(&self, t: f64, y: &mut DVector<f64>, max_newton: usize) -> Result<bool> {
        let Some(mut slack) = self.slack(y)? else {
            return Ok(false);
        };
        for _ in 0..max_newton {
            let (grad, hess) = self.gradient_hessian(t, &slack)?;
            let Some(step) = newton_step(&hess, &grad) else {
                return Ok(false);
            };
            let decrement = -grad.dot(&step);
            if !(decrement.is_finite()) {
                return Ok(false);
            }
            if decrement / 2.0 <= 1e-13 {
                return Ok(true);
            }
            if decrement.sqrt() < 0.25 {
                // quadratic convergence region: the full step stays interior
                let trial = &*y + &step;
                if let Some(s) = self.slack(&trial)? {
                    *y = trial;
                    slack = s;
                    continue;
                }
            }
            let f0 = self.value(t, y, &slack);
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-12 {
                let trial = &*y + &step * alpha;
                if let Some(s) = self.slack(&trial)? {
                    if self.value(t, &trial, &s) <= f0 - 0.25 * alpha * decrement {
                        *y = trial;
                        slack = s;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                // decrement is at rounding level
                return Ok(decrement < 1e-8);
            }
        }
        Ok(false)
    }

    /// Central-path primal point `C_j = S_j⁻¹/t`, renormalized so that
    /// `Σ_j Tr_1(C_j) = I` holds exactly.
    fn primal_point(&self, t: f64, y: &DVector<f64>) -> Result<Option<Vec<ComplexMatrix>>> {
        let Some(slack) = self.slack(y)? else {
            return Ok(None);
        };
        let cs: Vec<ComplexMatrix> = slack
            .inverses
            .iter()
            .map(|inv| inv.scale_real(1.0 / t).hermitian_part())
            .collect();
        Ok(normalize_primal(self.inst.n, cs).ok())
    }
}

/// Solves `H·x = −g` with diagonal equilibration and one refinement pass.
fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let p = grad.len();
    let d = DVector::from_iterator(p, (0..p).map(|i| 1.0 / hess[(i, i)].max(f64::MIN_POSITIVE).sqrt()));
    let scaled = DMatrix::from_fn(p, p, |i, j| hess[(i, j)] * d[i] * d[j]);
    let solve = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
        let r = rhs.component_mul(&d);
        let z = match scaled.clone().cholesky() {
            Some(ch) => ch.solve(&r),
            None => scaled.clone().lu().solve(&r)?,
        };
        Some(z.component_mul(&d))
    };
    let mut x = solve(&(-grad))?;
    let residual = -grad - hess * &x;
    x += solve(&residual)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Rescales PSD blocks by `(I ⊗ N^{-1/2})` so that `Σ_j Tr_1(C_j) = I`.
pub(crate) fn normalize_primal(n: usize, cs: Vec<ComplexMatrix>) -> Result<Vec<ComplexMatrix>> {
    let mut total = ComplexMatrix::zeros(n, n);
    for c in &cs {
        total += &partial_trace(c, (n, n), Factor::First)?;
    }
    let fix = kron(
        &ComplexMatrix::identity(n),
        &inverse_sqrt_pd(&total.hermitian_part(), "primal normalization")?,
    );
    Ok(cs
        .iter()
        .map(|c| fix.congruence(c).hermitian_part())
        .collect())
}

pub fn solve_polar_sdp_with(inst: &PolarSdpInstance, opts: &BarrierOptions) -> Result<ValueBracket> {
    let n = inst.n;
    let jcount = inst.objectives.len();
    let barrier = Barrier::new(inst);

    // Strictly feasible primal C_j = I/(nJ) and dual Y = (max λ_max + 1)·I.
    let interior: Vec<ComplexMatrix> = (0..jcount)
        .map(|_| ComplexMatrix::identity(n * n).scale_real(1.0 / (n * jcount) as f64))
        .collect();
    let mut best_lower = (inst.primal_objective(&interior), interior);
    let mut lmax = f64::NEG_INFINITY;
    for l in &inst.objectives {
        lmax = lmax.max(eig_hermitian(l)?.max());
    }
    let y0 = ComplexMatrix::identity(n).scale_real(lmax + 1.0);
    let mut best_upper = (inst.certified_dual_bound(&y0)?, y0.clone());
    let mut y = DVector::from_vec(hermitian_to_vec(&y0));

    let barrier_degree = (jcount * n * n) as f64;
    let mut t = 1.0;
    let mut stalls = 0;
    let mut last_gap = f64::INFINITY;
    for _outer in 0..opts.max_outer {
        let centered = barrier.center(t, &mut y, opts.max_newton)?;

        let ymat = barrier.y_matrix(&y);
        let upper = inst.certified_dual_bound(&ymat)?;
        if upper < best_upper.0 {
            best_upper = (upper, ymat);
        }
        if let Some(cs) = barrier.primal_point(t, &y)? {
            let lower = inst.primal_objective(&cs);
            if lower > best_lower.0 {
                best_lower = (lower, cs);
            }
        }

        let gap = best_upper.0 - best_lower.0;
        if gap <= opts.gap_tol * (1.0 + best_upper.0.abs()) {
            break;
        }
        if gap < last_gap {
            stalls = 0;
        } else {
            stalls += 1;
        }
        last_gap = gap;
        if !centered && stalls >= 3 && barrier_degree / t < 1e-6 {
            // Newton has hit rounding limits deep on the central path.
            break;
        }
        t /= opts.reduction;
    }

    let (mut lower, primal_witness) = best_lower;
    let (upper, dual_witness) = best_upper;
    if lower > upper {
        // both are valid bounds on the same optimum; disagreement is rounding
        lower = upper;
    }
    let status = if upper - lower <= BRACKET_GAP_TOL * (1.0 + upper.abs()) {
        SolveStatus::Converged
    } else {
        SolveStatus::Loose
    };
    Ok(ValueBracket {
        lower,
        upper,
        primal_witness,
        dual_witness,
        status,
    })
}

/// Outcome of re-checking a bracket without trusting the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketCheck {
    pub min_primal_eigenvalue: f64,
    pub primal_equality_residual: f64,
    pub primal_value: f64,
    pub min_dual_slack_eigenvalue: f64,
    pub dual_value: f64,
    pub valid: bool,
}

/// Independent verification of both witnesses of a bracket by eigendecomposition.
pub fn validate_bracket(inst: &PolarSdpInstance, bracket: &ValueBracket) -> Result<BracketCheck> {
    let n = inst.n;
    if bracket.primal_witness.len() != inst.objectives.len() {
        return invalid("bracket has the wrong number of primal blocks");
    }
    let mut min_primal: f64 = f64::INFINITY;
    let mut total = ComplexMatrix::zeros(n, n);
    for c in &bracket.primal_witness {
        min_primal = min_primal.min(eig_hermitian(c)?.min());
        total += &partial_trace(c, (n, n), Factor::First)?;
    }
    let residual = (&total - &ComplexMatrix::identity(n)).frobenius_norm();
    let primal_value = inst.primal_objective(&bracket.primal_witness);

    let lifted = kron(&ComplexMatrix::identity(n), &bracket.dual_witness);
    let mut min_dual: f64 = f64::INFINITY;
    for l in &inst.objectives {
        min_dual = min_dual.min(eig_hermitian(&(&lifted - l))?.min());
    }
    let dual_value = bracket.dual_witness.trace().re;

    let valid = bracket.lower <= bracket.upper
        && min_primal >= -PRIMAL_PSD_TOL
        && residual <= PRIMAL_EQ_TOL
        && primal_value >= bracket.lower - 1e-9
        && min_dual >= -DUAL_PSD_TOL
        && dual_value <= bracket.upper + 1e-9;
    Ok(BracketCheck {
        min_primal_eigenvalue: min_primal,
        primal_equality_residual: residual,
        primal_value,
        min_dual_slack_eigenvalue: min_dual,
        dual_value,
        valid,
    })
}

/// Choi matrix of `y ↦ Σ_i a_i*·y·a_i` on `M_n`.
pub(crate) fn compression_choi(coeffs: &[&ComplexMatrix], n: usize) -> ComplexMatrix {
    let d = n * n;
    let mut c = ComplexMatrix::zeros(d, d);
    for a in coeffs {
        // Kraus operator V = a*, vec(V)[i·n + k] = V[(k, i)] = conj(a[(i, k)])
        let v: Vec<_> = (0..d).map(|idx| a[(idx / n, idx % n)].conj()).collect();
        for p in 0..d {
            for q in 0..d {
                c[(p, q)] += v[p] * v[q].conj();
            }
        }
    }
    c
}

/// Best primal objective over random feasible points: Haar-isometry
/// coefficient families `{a_i}` split among the generators.
pub fn sample_primal_lower_bound(inst: &PolarSdpInstance, samples: usize, seed: u64) -> f64 {
    let n = inst.n;
    let jcount = inst.objectives.len();
    let mut rng = seeded_rng(seed, 0);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples.max(1) {
        let terms = rng.random_range(1..=jcount * n * n);
        let blocks = isometry_blocks(&haar_isometry(&mut rng, terms * n, n), n);
        let owners: Vec<usize> = (0..terms).map(|_| rng.random_range(0..jcount)).collect();
        let cs: Vec<ComplexMatrix> = (0..jcount)
            .map(|j| {
                let mine: Vec<&ComplexMatrix> = blocks
                    .iter()
                    .zip(&owners)
                    .filter(|(_, &o)| o == j)
                    .map(|(b, _)| b)
                    .collect();
                compression_choi(&mine, n)
            })
            .collect();
        best = best.max(inst.primal_objective(&cs));
    }
    best
}

/// Nearest point of a finite convex hull to a target, with separation data.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub distance: f64,
    pub nearest: ComplexMatrix,
    /// Convex weights over the input points reproducing `nearest`.
    pub weights: Vec<f64>,
    /// `(target − nearest)/‖target − nearest‖_F` when `distance > tol`.
    pub witness: Option<ComplexMatrix>,
    pub iterations: usize,
}

pub const MIN_NORM_MAX_ITER: usize = 10_000;

/// Away-step conditional gradient for `min ‖Σ w_i p_i − target‖_F` over the simplex.
pub fn min_norm_point(points: &[ComplexMatrix], target: &ComplexMatrix, tol: f64) -> Result<MinNormPoint> {
    let Some(first) = points.first() else {
        return invalid("min_norm_point: empty point set");
    };
    if points.iter().any(|p| p.shape() != target.shape()) || first.shape() != target.shape() {
        return invalid("min_norm_point: points and target must share one shape");
    }
    if !target.is_hermitian(HERMITICITY_TOL) || points.iter().any(|p| !p.is_hermitian(HERMITICITY_TOL)) {
        return invalid("min_norm_point: points and target must be Hermitian");
    }
    let tv = hermitian_to_vec(target);
    let qs: Vec<Vec<f64>> = points
        .iter()
        .map(|p| hermitian_to_vec(p).iter().zip(&tv).map(|(a, b)| a - b).collect())
        .collect();
    let count = qs.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram = DMatrix::from_fn(count, count, |i, j| dot(&qs[i], &qs[j]));

    let start = (0..count)
        .min_by(|&i, &j| gram[(i, i)].total_cmp(&gram[(j, j)]))
        .unwrap();
    let mut w = vec![0.0; count];
    w[start] = 1.0;
    let mut gw: Vec<f64> = (0..count).map(|i| gram[(i, start)]).collect();
    let mut iterations = 0;
    let stop = 0.5 * tol;

    while iterations < MIN_NORM_MAX_ITER {
        iterations += 1;
        let f2: f64 = w.iter().zip(&gw).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        let s = (0..count).min_by(|&i, &j| gw[i].total_cmp(&gw[j])).unwrap();
        let fw_gap = f2 - gw[s];
        let norm = f2.sqrt();
        let err_bound = if norm > 0.0 {
            (2.0 * fw_gap.max(0.0)).sqrt().min(2.0 * fw_gap.max(0.0) / norm)
        } else {
            0.0
        };
        if err_bound <= stop.min(1e-3 * tol.max(f64::EPSILON)) || fw_gap <= 1e-15 * (1.0 + f2) {
            break;
        }
        let v = (0..count)
            .filter(|&i| w[i] > 0.0)
            .max_by(|&i, &j| gw[i].total_cmp(&gw[j]))
            .unwrap();
        let away_gap = gw[v] - f2;

        if fw_gap >= away_gap {
            let xd = gw[s] - f2;
            let dd = gram[(s, s)] - 2.0 * gw[s] + f2;
            let gamma = if dd > 0.0 { (-xd / dd).clamp(0.0, 1.0) } else { 1.0 };
            for (i, wi) in w.iter_mut().enumerate() {
                *wi *= 1.0 - gamma;
                if i == s {
                    *wi += gamma;
                }
            }
            for (i, g) in gw.iter_mut().enumerate() {
                *g = (1.0 - gamma) * *g + gamma * gram[(i, s)];
            }
        } else {
            let wv = w[v];
            let gamma_max = if wv < 1.0 { wv / (1.0 - wv) } else { f64::INFINITY };
            let xd = f2 - gw[v];
            let dd = f2 - 2.0 * gw[v] + gram[(v, v)];
            let mut gamma = if dd > 0.0 { (-xd / dd).max(0.0) } else { gamma_max };
            let drop = gamma >= gamma_max;
            gamma = gamma.min(gamma_max);
            for (i, wi) in w.iter_mut().enumerate() {
                *wi *= 1.0 + gamma;
                if i == v {
                    *wi -= gamma;
                }
            }
            if drop {
                w[v] = 0.0;
            }
            for (i, g) in gw.iter_mut().enumerate() {
                *g = (1.0 + gamma) * *g - gamma * gram[(i, v)];
            }
        }
        if iterations % 64 == 0 {
            // refresh against drift
            for i in 0..count {
                gw[i] = (0..count).map(|j| gram[(i, j)] * w[j]).sum();
            }
        }
    }

    polish_on_active_set(&gram, &mut w);

    let total: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= total;
    }
    let mut nearest = ComplexMatrix::zeros(target.rows(), target.cols());
    for (p, &wi) in points.iter().zip(&w) {
        if wi > 0.0 {
            nearest += &p.scale_real(wi);
        }
    }
    let diff = target - &nearest;
    let distance = diff.frobenius_norm();
    let witness = (distance > tol).then(|| diff.scale_real(1.0 / distance).hermitian_part());
    Ok(MinNormPoint {
        distance,
        nearest,
        weights: w,
        witness,
        iterations,
    })
}

/// Replaces `w` by the affine minimizer on its support when that minimizer
/// stays in the simplex and improves the objective.
fn polish_on_active_set(gram: &DMatrix<f64>, w: &mut [f64]) {
    let active: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let a = active.len();
    if a < 2 {
        return;
    }
    let mut kkt = DMatrix::<f64>::zeros(a + 1, a + 1);
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            kkt[(r, c)] = gram[(i, j)];
        }
        kkt[(r, a)] = 1.0;
        kkt[(a, r)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(a + 1);
    rhs[a] = 1.0;
    let Some(sol) = kkt.lu().solve(&rhs) else {
        return;
    };
    if (0..a).any(|r| !(sol[r] >= 0.0) || !sol[r].is_finite()) {
        return;
    }
    let objective = |weights: &dyn Fn(usize) -> f64| {
        let mut acc = 0.0;
        for &i in &active {
            for &j in &active {
                acc += weights(i) * weights(j) * gram[(i, j)];
            }
        }
        acc
    };
    let pos = |i: usize| active.iter().position(|&x| x == i).unwrap();
    let current = objective(&|i| w[i]);
    let polished = objective(&|i| sol[pos(i)]);
    if polished <= current {
        for (r, &i) in active.iter().enumerate() {
            w[i] = sol[r];
        }
    }
}

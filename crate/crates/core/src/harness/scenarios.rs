use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, Scenario};
use super::json;
use super::report::{Report, TrialRecord, TrialStatus};
use crate::cpmaps::{choi_tomography, cstar_combine, random_cp_with, CPMap, CStarCoefficients, CStarTerm, Normalization};
use crate::error::Result;
use crate::linalg::{trace_product, ComplexMatrix, C64};
use crate::mtests::{
    abs_via_sup, abs_via_sup_refined, canonical_choi_test, fold_linear, fold_max, pairing, realify,
    scalar_domain_pairing, scalar_target_reduce, tracial_decompose, tracial_pairing, MatrixTest,
};
use crate::polar::{
    hull_sample, hull_sample_with_coefficients, in_double_polar, in_polar_of_tests, in_saturated_polar, sat_sup,
    scalar_double_polar, scalar_polar_interval, BipolarVerdict, DoublePolarParams, HuntParams, PolarMembership,
    ScalarPolar, DEFAULT_THETA_GRID, THETA_TOL,
};
use crate::random::{complex_normal, random_cstar_family, random_density, random_matrix, seeded_rng, ExperimentRng};

/// Runs every trial of a scenario; trial `i` draws from stream `i` of the seed.
pub fn run_scenario(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeded_rng(config.seed, trial as u64);
            let mut record = TrialRecord::new(trial);
            if let Err(e) = run_trial(config, trial, &mut rng, &mut record) {
                record.fail(format!("error: {e}"));
            }
            record
        })
        .collect();
    Ok(Report::new(config.clone(), records, start.elapsed().as_secs_f64()))
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    match cfg.scenario {
        Scenario::VerifyIdentities => verify_identities(cfg, rng, rec),
        Scenario::PolarProperties => polar_properties(cfg, trial, rng, rec),
        Scenario::BipolarRoundtrip => bipolar_roundtrip(cfg, trial, rng, rec),
        Scenario::ScalarTarget => scalar_target(cfg, rng, rec),
        Scenario::Tracial => tracial(cfg, rng, rec),
        Scenario::ScalarDomain => scalar_domain(cfg, rng, rec),
        Scenario::Jamiolkowski => jamiolkowski(cfg, rng, rec),
        Scenario::ScalarCase => scalar_case(cfg, trial, rng, rec),
        Scenario::Tomography => tomography(cfg, rng, rec),
    }
}

/// Random test of level `1..=max_k` with a random-rank state and a test
/// element of operator norm one.
fn random_test(rng: &mut ExperimentRng, max_k: usize, m: usize, n: usize) -> Result<MatrixTest> {
    let k = rng.random_range(1..=max_k);
    let rank = rng.random_range(1..=k * n);
    let rho = random_density(rng, k * n, rank);
    let s = random_matrix(rng, k * m, k * m);
    let s = s.scale_real(1.0 / s.operator_norm());
    MatrixTest::new(k, rho, s)
}

/// Random unital CP map, so that unit-ball tests pair to at most one.
fn random_map(rng: &mut ExperimentRng, m: usize, n: usize) -> Result<CPMap> {
    // Σ V V* needs rank·m ≥ n to be invertible
    let rank = rng.random_range(n.div_ceil(m)..=m * n);
    random_cp_with(rng, m, n, rank, Normalization::Unital)
}

fn verify_identities(cfg: &ExperimentConfig, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let (m, n) = cfg.dims;
    let tol = cfg.tolerance("identity");
    let t1 = random_test(rng, 2, m, n)?;
    let t2 = random_test(rng, 2, m, n)?;
    let phi = random_map(rng, m, n)?;
    let (p1, p2) = (pairing(&t1, &phi)?, pairing(&t2, &phi)?);

    let folded = fold_max(&[t1.clone(), t2.clone()])?;
    let fp = pairing(&folded.test, &phi)?;
    rec.check_le("fold_max_mean_error", (fp - (p1 + p2) * 0.5).norm(), tol);
    rec.check_le("fold_max_excess", fp.norm() - p1.norm().max(p2.norm()), tol);

    let coeffs = [complex_normal(rng), complex_normal(rng)];
    let lin = fold_linear(&[t1.clone(), t2.clone()], &coeffs)?;
    let lp = pairing(&lin.test, &phi)? * lin.scale;
    rec.check_le("fold_linear_error", (lp - (coeffs[0] * p1 + coeffs[1] * p2)).norm(), tol);

    let theta = rng.random_range(0.0..2.0 * PI);
    let rp = pairing(&realify(&t1, theta), &phi)?;
    let expected = (C64::from_polar(1.0, -theta) * p1).re;
    rec.check_le("realify_error", (rp - C64::new(expected, 0.0)).norm(), tol);

    let r0 = pairing(&realify(&t1, 0.0), &phi)?.re;
    let r1 = pairing(&realify(&t1, PI / 2.0), &phi)?.re;
    rec.check_le("recombination_error", (p1 - C64::new(r0, r1)).norm(), tol);

    let grid = abs_via_sup(&t1, &phi, 1024)?;
    rec.check_le("abs_grid_error", (grid - p1.norm()).abs(), cfg.tolerance("abs_grid"));
    let refined = abs_via_sup_refined(&t1, &phi, 1024, THETA_TOL)?;
    rec.check_le("abs_refined_error", (refined - p1.norm()).abs(), cfg.tolerance("abs_refined"));
    Ok(())
}

fn random_family(rng: &mut ExperimentRng, size: usize, m: usize, n: usize) -> Result<Vec<CPMap>> {
    (0..size).map(|_| random_map(rng, m, n)).collect()
}

fn polar_properties(cfg: &ExperimentConfig, trial: usize, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let (m, n) = cfg.dims;
    let slack = cfg.tolerance("slack");
    let size = rng.random_range(1..=2);
    let k1 = random_family(rng, size, m, n)?;
    let mut k2 = k1.clone();
    k2.push(random_map(rng, m, n)?);
    let t = random_test(rng, 2, m, n)?;

    // order-reversing in the generator set
    let u1 = sat_sup(&k1, &t, DEFAULT_THETA_GRID)?.upper();
    let u2 = sat_sup(&k2, &t, DEFAULT_THETA_GRID)?.upper();
    rec.metric("sat_sup_small", u1);
    rec.metric("sat_sup_large", u2);
    rec.check_le("order_excess", u1 - u2, slack);
    if u2 <= 0.0 {
        return Ok(());
    }

    // a member of K2°, certified from scratch
    let member = t.scaled(C64::new(1.0 / u2, 0.0));
    match in_saturated_polar(&member, &k2, slack)? {
        PolarMembership::Member(r) => rec.metric("member_upper", r.upper()),
        other => {
            rec.fail(format!("normalized test not certified in the polar (upper {})", other.result().upper()));
            return Ok(());
        }
    }

    // balancedness: λ·t stays in the polar for |λ| ≤ 1
    let lambda = C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(0.0..2.0 * PI));
    match in_saturated_polar(&member.scaled(lambda), &k2, slack)? {
        PolarMembership::Member(r) => rec.metric("balanced_upper", r.upper()),
        other => rec.fail(format!("balanced multiple left the polar (upper {})", other.result().upper())),
    }

    // K ⊆ (K°)° and closure under C*-combinations
    let worst_generator = k2.iter().map(|p| pairing(&member, p).map(|v| v.norm())).collect::<Result<Vec<_>>>()?;
    rec.check_le("generator_value", worst_generator.into_iter().fold(0.0, f64::max), 1.0 + slack);
    let hull = hull_sample(&k2, 5, n * n * k2.len(), cfg.seed ^ (trial as u64).wrapping_mul(0x9e37_79b9))?;
    let worst_hull = hull.iter().map(|p| pairing(&member, p).map(|v| v.norm())).collect::<Result<Vec<_>>>()?;
    rec.check_le("hull_value", worst_hull.into_iter().fold(0.0, f64::max), 1.0 + slack);

    // antitone in the test family
    let probe = random_map(rng, m, n)?;
    let extra = random_test(rng, 1, m, n)?;
    let small = in_polar_of_tests(&probe, std::slice::from_ref(&member), slack)?;
    let large = in_polar_of_tests(&probe, &[member, extra], slack)?;
    if large && !small {
        rec.fail("polar of the larger test family is not contained in the smaller one".into());
    }
    Ok(())
}

fn bipolar_roundtrip(cfg: &ExperimentConfig, trial: usize, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let (m, n) = cfg.dims;
    let params = DoublePolarParams {
        epsilon: cfg.tolerance("epsilon"),
        hunt: HuntParams {
            hull_samples: cfg.hull_samples.unwrap_or(HuntParams::default().hull_samples),
            seed: cfg.seed.wrapping_add(trial as u64),
            ..HuntParams::default()
        },
    };
    let (k, target, expect_inside) = if trial == 0 {
        let dep = CPMap::depolarizing(m, n);
        let target = if m == n {
            CPMap::identity(m)
        } else {
            CPMap::from_choi(m, n, dep.choi().scale_real(3.0))?
        };
        (vec![dep], target, false)
    } else {
        let size = rng.random_range(1..=3);
        let k = random_family(rng, size, m, n)?;
        let (psi, _) = hull_sample_with_coefficients(&k, 1, n * n * size, rng.random())?.remove(0);
        (k, psi, true)
    };
    rec.note("expected", Value::String(if expect_inside { "INSIDE" } else { "OUTSIDE" }.into()));
    let verdict = in_double_polar(&target, &k, &params)?;
    rec.note("verdict", Value::String(verdict.label().into()));
    match (&verdict, expect_inside) {
        (BipolarVerdict::Inside { distance, combination }, true) => {
            rec.check_le("distance", *distance, params.epsilon);
            let rebuilt = cstar_combine(&k, combination)?.distance(&target);
            rec.check_le("combination_distance", rebuilt, params.epsilon);
        }
        (BipolarVerdict::Outside(cert), false) => {
            let check = cert.revalidate(&k, &target)?;
            rec.check_le("sat_sup_upper", check.sat_sup_upper, 1.0);
            rec.metric("value_at_target", check.value_at_target);
            if check.value_at_target < 1.0 + cfg.tolerance("margin") || !check.valid {
                rec.fail(format!("certificate does not revalidate: {check:?}"));
            }
            rec.note("certificate", json::to_value(cert));
            rec.note("generators", Value::Array(k.iter().map(json::to_value).collect()));
            rec.note("target", json::to_value(&target));
        }
        (BipolarVerdict::Undecided { best_distance, .. }, _) => {
            rec.metric("distance", *best_distance);
            rec.status = TrialStatus::Undecided;
        }
        (other, _) => rec.fail(format!("wrong verdict {}", other.label())),
    }
    Ok(())
}

fn scalar_target(cfg: &ExperimentConfig, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let m = cfg.dims.0;
    let t = random_test(rng, 2, m, 1)?;
    let phi = random_map(rng, m, 1)?;
    let reduced = phi.apply(&scalar_target_reduce(&t)?)?[(0, 0)];
    rec.check_le("identity_error", (pairing(&t, &phi)? - reduced).norm(), cfg.tolerance("identity"));
    Ok(())
}

fn scalar_domain(cfg: &ExperimentConfig, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let n = cfg.dims.1;
    let t = random_test(rng, 2, 1, n)?;
    let phi = random_map(rng, 1, n)?;
    let x = phi.apply(&ComplexMatrix::identity(1))?;
    let err = (pairing(&t, &phi)? - scalar_domain_pairing(&t, &x)?).norm();
    rec.check_le("identity_error", err, cfg.tolerance("identity"));
    Ok(())
}

fn tracial(cfg: &ExperimentConfig, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let (m, n) = cfg.dims;
    let tol = cfg.tolerance("identity");
    let k = rng.random_range(1..=2);
    let b = random_density(rng, k * n, k * n).scale_real((k * n) as f64);
    let maps = random_family(rng, 2, m, n)?;
    let terms = rng.random_range(1..=3);
    let coeffs = CStarCoefficients::new(
        random_cstar_family(rng, n, terms)
            .into_iter()
            .map(|a| CStarTerm {
                a,
                map_index: rng.random_range(0..2),
            })
            .collect(),
    )?;
    let psi = cstar_combine(&maps, &coeffs)?;
    let s = random_matrix(rng, k * m, k * m);
    let parts = tracial_decompose(&b, &coeffs)?;
    let total: f64 = parts.iter().map(|p| p.weight).sum();
    rec.check_le("weight_sum_error", (total - 1.0).abs(), tol);
    let lhs = tracial_pairing(&b, &psi.ampliate_apply(k, &s)?);
    let mut rhs = C64::new(0.0, 0.0);
    for (part, term) in parts.iter().zip(coeffs.terms()) {
        if part.weight > 0.0 {
            let img = maps[term.map_index].ampliate_apply(k, &s)?;
            rhs += tracial_pairing(&part.b.scale_real(1.0 / part.weight), &img) * part.weight;
        }
    }
    rec.check_le("identity_error", (lhs - rhs).norm(), tol);
    Ok(())
}

fn jamiolkowski(cfg: &ExperimentConfig, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let (m, n) = cfg.dims;
    let rank = rng.random_range(1..=m * n);
    let rho = random_density(rng, m * n, rank);
    let phi = random_map(rng, m, n)?;
    let lhs = pairing(&canonical_choi_test(&rho, m, n)?, &phi)?;
    let rhs = trace_product(&rho, phi.choi());
    rec.check_le("identity_error", (lhs - rhs).norm(), cfg.tolerance("identity"));
    Ok(())
}

fn scalar_case(cfg: &ExperimentConfig, trial: usize, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let k: Vec<f64> = if trial == 0 {
        cfg.scalar_k.clone().unwrap_or_else(|| vec![2.0])
    } else {
        (0..rng.random_range(1..=3)).map(|_| rng.random_range(0.5..4.0)).collect()
    };
    let step = cfg.tolerance("grid_step");
    rec.note("k", json!(k));
    let polar = scalar_polar_interval(&k)?;
    let steps = (4.0 / step).round() as usize;
    let members: Vec<f64> = (0..=steps)
        .map(|i| -2.0 + i as f64 * step)
        .filter(|s| k.iter().all(|x| (x * s).abs() <= 1.0))
        .collect();
    let (dlo, dhi) = scalar_double_polar(&k)?;
    rec.note("double_polar", json!([dlo, dhi]));
    match polar {
        ScalarPolar::Bounded { lo, hi } => {
            rec.note("interval", json!([lo, hi]));
            let (Some(&bf_lo), Some(&bf_hi)) = (members.first(), members.last()) else {
                rec.fail("no grid point lies in the polar".into());
                return Ok(());
            };
            rec.check_le("lower_endpoint_error", (bf_lo - lo).abs(), step);
            rec.check_le("upper_endpoint_error", (bf_hi - hi).abs(), step);
            // nonnegative x with |x·s| ≤ 1 on the polar, by grid over x
            let sup = 1.0 / hi;
            let xs = (0..=steps).map(|i| i as f64 * 2.0 * sup / steps as f64);
            let top = xs.filter(|x| x * hi <= 1.0 && (x * lo).abs() <= 1.0).fold(0.0, f64::max);
            rec.check_le("double_polar_error", (top - dhi).abs() + dlo.abs(), 2.0 * sup / steps as f64);
        }
        ScalarPolar::Unbounded => {
            rec.note("interval", Value::String("unbounded".into()));
            if members.len() != steps + 1 || dhi != 0.0 {
                rec.fail("zero family must have the whole line as polar".into());
            }
        }
    }
    Ok(())
}

fn tomography(cfg: &ExperimentConfig, rng: &mut ExperimentRng, rec: &mut TrialRecord) -> Result<()> {
    let (m, n) = cfg.dims;
    let phi = random_map(rng, m, n)?;
    let rebuilt = choi_tomography(|t| pairing(t, &phi).unwrap_or(C64::new(f64::NAN, 0.0)), m, n)?;
    rec.check_le("reconstruction_error", rebuilt.distance(&phi), cfg.tolerance("reconstruction"));
    Ok(())
}

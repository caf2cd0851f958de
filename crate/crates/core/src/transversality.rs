//! Numerical test of the transversality property on spheres S_ε, and the
//! closed-form minors of the special family.
//!
//! A point x ∈ S_ε is a tangency point when the rows ∇f₁(x), …, ∇f_p(x), x are
//! linearly dependent. The search minimizes the smallest singular value of the
//! row-normalized tangency matrix from many sphere seeds, then polishes with
//! Gauss–Newton on the vector of its (p+1)×(p+1) minors. The falsifier looks
//! for tangency points whose values f(x) tend to 0.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{dist, norm, pinv_solve, row_normalized, smallest_singular_value, to_sphere};
use crate::mixed_poly::DiagonalMixedPolynomial;
use crate::quasi::sphere_points;
use crate::real_map::{combinations, RealPolynomialMap};
use crate::structure::{special_family, SpecialFamily, SCHEMA};

/// Below this the row-normalized Jacobian counts as rank deficient (x ∈ Σ_f).
pub const REGULARITY_FLOOR: f64 = 1e-10;
const DEDUP_RADIUS: f64 = 1e-4;
const MARGIN_SAMPLES: usize = 1024;
const PENALTY_STARTS: usize = 32;
const MAX_SEQUENCE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransversalityError {
    #[error("polynomial is not in the special family")]
    NotSpecialFamily,
    #[error("z{0} is not a critical index of the special family")]
    NotCritical(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub tol_tangency: f64,
    pub tol_v: f64,
    /// Absolute margin; `None` means 1e-2 × median |f| on S_ε.
    pub margin: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_tangency: 1e-8, tol_v: 1e-6, margin: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchParams {
    pub epsilon: f64,
    pub seeds: usize,
    pub iterations: usize,
    pub rng_seed: u64,
    pub tolerances: Tolerances,
}

impl SearchParams {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, seeds: 256, iterations: 500, rng_seed: 0, tolerances: Tolerances::default() }
    }
}

/// Rows ∇f₁(x), …, ∇f_p(x), x.
pub fn tangency_matrix(f: &RealPolynomialMap, x: &[f64]) -> DMatrix<f64> {
    let j = f.jacobian(x);
    let mut m = DMatrix::zeros(f.p() + 1, f.n());
    m.rows_mut(0, f.p()).copy_from(&j);
    for (c, v) in x.iter().enumerate() {
        m[(f.p(), c)] = *v;
    }
    m
}

/// Smallest singular value of the row-normalized matrix; 0 if a row vanishes
/// or there are more rows than columns.
pub fn dependence_measure(m: &DMatrix<f64>) -> f64 {
    match row_normalized(m) {
        Some(r) => smallest_singular_value(&r),
        None => 0.0,
    }
}

pub fn sigma_at(f: &RealPolynomialMap, x: &[f64]) -> f64 {
    dependence_measure(&tangency_matrix(f, x))
}

/// Smallest singular value of the row-normalized Jacobian.
pub fn regularity(f: &RealPolynomialMap, x: &[f64]) -> f64 {
    dependence_measure(&f.jacobian(x))
}

/// All (p+1)×(p+1) minors of the row-normalized tangency matrix, columns in
/// lexicographic order. Their squares sum to the product of the squared
/// singular values.
pub fn normalized_minors(f: &RealPolynomialMap, x: &[f64]) -> Vec<f64> {
    let k = f.p() + 1;
    let subsets = combinations(f.n(), k);
    let Some(m) = row_normalized(&tangency_matrix(f, x)) else {
        return vec![0.0; subsets.len()];
    };
    subsets.iter().map(|cols| m.select_columns(cols.iter()).determinant()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyWitness {
    pub point: Vec<f64>,
    pub epsilon: f64,
    pub sigma: f64,
    pub f_norm: f64,
    /// Length of the Gauss–Newton step from x towards V.
    pub dist_to_v: f64,
    /// Regularity of f at x; `regular` is false on the critical set.
    pub tau: f64,
    pub regular: bool,
}

pub fn witness(f: &RealPolynomialMap, x: &[f64], epsilon: f64) -> TangencyWitness {
    let val = f.eval(x);
    let step = pinv_solve(&f.jacobian(x), &DVector::from_column_slice(&val));
    let tau = regularity(f, x);
    TangencyWitness {
        point: x.to_vec(),
        epsilon,
        sigma: sigma_at(f, x),
        f_norm: norm(&val),
        dist_to_v: step.map(|s| s.norm()).unwrap_or(f64::INFINITY),
        tau,
        regular: tau >= REGULARITY_FLOOR,
    }
}

fn projected(g: &mut [f64], x: &[f64]) {
    let r2: f64 = x.iter().map(|a| a * a).sum();
    let dot: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi -= dot / r2 * xi;
    }
}

/// Gauss–Newton on the sphere for a vector residual, with central-difference
/// Jacobians restricted to the tangent space and step halving.
fn gauss_newton_on_sphere<R>(x0: &[f64], epsilon: f64, max_iter: usize, residual: R) -> Vec<f64>
where
    R: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let h = 1e-7 * epsilon;
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut rn = norm(&r);
    for _ in 0..max_iter {
        if rn < 1e-15 {
            break;
        }
        let mut jac = DMatrix::zeros(r.len(), n);
        let mut xp = x.clone();
        for c in 0..n {
            xp[c] = x[c] + h;
            let fp = residual(&xp);
            xp[c] = x[c] - h;
            let fm = residual(&xp);
            xp[c] = x[c];
            for (row, (a, b)) in fp.iter().zip(&fm).enumerate() {
                jac[(row, c)] = (a - b) / (2.0 * h);
            }
        }
        let u = DVector::from_iterator(n, x.iter().map(|a| a / epsilon));
        let proj = DMatrix::identity(n, n) - &u * u.transpose();
        let jt = jac * proj;
        let Some(delta) = pinv_solve(&jt, &DVector::from_column_slice(&r)) else { break };
        if delta.norm() < 1e-16 * epsilon {
            break;
        }
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a - alpha * d).collect();
            if let Some(trial) = to_sphere(&trial, epsilon) {
                let rt = residual(&trial);
                let rtn = norm(&rt);
                if rtn < rn {
                    x = trial;
                    r = rt;
                    rn = rtn;
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    x
}

/// Projected gradient descent on σ² followed by Gauss–Newton on the minors.
/// Returns the polished point when it is a tangency point within tolerance.
pub fn refine_tangency(f: &RealPolynomialMap, x0: &[f64], params: &SearchParams) -> Option<Vec<f64>> {
    let eps = params.epsilon;
    let n = x0.len();
    let h = 1e-6 * eps;
    let phi = |x: &[f64]| sigma_at(f, x).powi(2);
    let mut x = to_sphere(x0, eps)?;
    let mut val = phi(&x);
    for _ in 0..params.iterations {
        if val < 1e-6 {
            break;
        }
        let mut g = vec![0.0; n];
        let mut xp = x.clone();
        for c in 0..n {
            xp[c] = x[c] + h;
            let a = phi(&xp);
            xp[c] = x[c] - h;
            let b = phi(&xp);
            xp[c] = x[c];
            g[c] = (a - b) / (2.0 * h);
        }
        projected(&mut g, &x);
        let g2: f64 = g.iter().map(|a| a * a).sum();
        if !(g2 > 1e-30) {
            break;
        }
        let mut t = val / g2;
        let mut moved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            if let Some(trial) = to_sphere(&trial, eps) {
                let v = phi(&trial);
                if v <= val - 1e-4 * t * g2 {
                    x = trial;
                    val = v;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let x = gauss_newton_on_sphere(&x, eps, 40, |y| normalized_minors(f, y));
    (sigma_at(f, &x) < params.tolerances.tol_tangency).then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencySearch {
    pub points: Vec<TangencyWitness>,
    pub runs: usize,
    pub converged: usize,
    /// n < p+1: every point is a tangency point and the search is meaningless.
    pub degenerate: bool,
}

fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if kept.iter().all(|q| dist(q, &p) > DEDUP_RADIUS) {
            kept.push(p);
        }
    }
    kept
}

pub fn search_tangency_locus(f: &RealPolynomialMap, params: &SearchParams) -> TangencySearch {
    if f.n() < f.p() + 1 {
        return TangencySearch { points: Vec::new(), runs: 0, converged: 0, degenerate: true };
    }
    let seeds = sphere_points(f.n(), params.seeds, params.epsilon, params.rng_seed);
    let found: Vec<Option<Vec<f64>>> = seeds.par_iter().map(|s| refine_tangency(f, s, params)).collect();
    let converged: Vec<Vec<f64>> = found.into_iter().flatten().collect();
    let count = converged.len();
    let points = dedup(converged).iter().map(|x| witness(f, x, params.epsilon)).collect();
    TangencySearch { points, runs: seeds.len(), converged: count, degenerate: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransversalityVerdict {
    FailsWithWitness,
    HoldsAtBudget,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedTolerances {
    pub tol_tangency: f64,
    pub tol_v: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub schema: &'static str,
    pub verdict: TransversalityVerdict,
    pub epsilon: f64,
    /// Fails: f_norm decreasing by ≥10× per element. Otherwise: the regular
    /// tangency point of least f_norm, if any.
    pub witness_sequence: Vec<TangencyWitness>,
    pub seeds: usize,
    pub iterations: usize,
    pub rng_seed: u64,
    pub tolerances: ResolvedTolerances,
    pub tangency_points: usize,
    pub critical_tangency_points: usize,
    pub min_regular_f_norm: Option<f64>,
    pub notes: Vec<String>,
}

/// 1e-2 × median |f| over quasi-uniform points of S_ε.
pub fn default_margin(f: &RealPolynomialMap, epsilon: f64, rng_seed: u64) -> f64 {
    let pts = sphere_points(f.n(), MARGIN_SAMPLES, epsilon, rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    1e-2 * crate::linalg::median(pts.iter().map(|x| norm(&f.eval(x))).collect())
}

/// Walks from a regular tangency point towards a zero of f, keeping to the
/// tangency locus, until f_norm drops below tol_v. Each element has at most a
/// tenth of its predecessor's f_norm.
fn decade_sequence(
    f: &RealPolynomialMap,
    start: &TangencyWitness,
    limit: &[f64],
    params: &SearchParams,
) -> Option<Vec<TangencyWitness>> {
    let tol = &params.tolerances;
    let eps = params.epsilon;
    let mut seq = vec![start.clone()];
    let mut s_prev = 1.0f64;
    while seq.len() < MAX_SEQUENCE {
        let last = seq.last().unwrap();
        if last.f_norm < tol.tol_v && seq.len() >= 3 {
            return Some(seq);
        }
        let target = last.f_norm / 10.0;
        let mut next = None;
        let mut s = s_prev;
        for _ in 0..60 {
            s *= 0.5;
            let chord: Vec<f64> = limit.iter().zip(&start.point).map(|(l, a)| (1.0 - s) * l + s * a).collect();
            let Some(q) = to_sphere(&chord, eps) else { continue };
            let y = gauss_newton_on_sphere(&q, eps, 40, |y| normalized_minors(f, y));
            let w = witness(f, &y, eps);
            if w.sigma < tol.tol_tangency && w.regular && w.f_norm <= target {
                next = Some(w);
                break;
            }
        }
        seq.push(next?);
        s_prev = s;
    }
    None
}

struct PenaltyOutcome {
    sequence: Option<Vec<TangencyWitness>>,
    projected: Option<TangencyWitness>,
}

fn penalty_run(f: &RealPolynomialMap, start: &TangencyWitness, params: &SearchParams) -> PenaltyOutcome {
    let eps = params.epsilon;
    let mut x = start.point.clone();
    for rho in [1.0f64, 1e2, 1e4] {
        let w = rho.sqrt();
        x = gauss_newton_on_sphere(&x, eps, 30, |y| {
            let mut r: Vec<f64> = normalized_minors(f, y).iter().map(|m| w * m).collect();
            r.extend(f.eval(y));
            r
        });
    }
    let sequence = if norm(&f.eval(&x)) < params.tolerances.tol_v {
        decade_sequence(f, start, &x, params)
    } else {
        None
    };
    let y = gauss_newton_on_sphere(&x, eps, 40, |y| normalized_minors(f, y));
    let w = witness(f, &y, eps);
    let projected = (w.sigma < params.tolerances.tol_tangency && w.regular).then_some(w);
    PenaltyOutcome { sequence, projected }
}

pub fn falsify_transversality(f: &RealPolynomialMap, params: &SearchParams) -> TransversalityReport {
    let margin = params.tolerances.margin.unwrap_or_else(|| default_margin(f, params.epsilon, params.rng_seed));
    let tolerances = ResolvedTolerances {
        tol_tangency: params.tolerances.tol_tangency,
        tol_v: params.tolerances.tol_v,
        margin,
    };
    let mut report = TransversalityReport {
        schema: SCHEMA,
        verdict: TransversalityVerdict::Inconclusive,
        epsilon: params.epsilon,
        witness_sequence: Vec::new(),
        seeds: params.seeds,
        iterations: params.iterations,
        rng_seed: params.rng_seed,
        tolerances,
        tangency_points: 0,
        critical_tangency_points: 0,
        min_regular_f_norm: None,
        notes: vec!["verdicts are relative to the sampling budget, not proofs".to_string()],
    };

    let search = search_tangency_locus(f, params);
    if search.degenerate {
        report.notes.push("n < p+1: the tangency matrix is always rank deficient".to_string());
        return report;
    }
    let (mut pool, critical): (Vec<_>, Vec<_>) = search.points.into_iter().partition(|w| w.regular);
    report.critical_tangency_points = critical.len();
    if !critical.is_empty() {
        report.notes.push(format!("{} tangency points on the critical set were excluded", critical.len()));
    }

    let mut starts: Vec<&TangencyWitness> = pool.iter().collect();
    starts.sort_by(|a, b| a.f_norm.total_cmp(&b.f_norm));
    starts.truncate(PENALTY_STARTS);
    let outcomes: Vec<PenaltyOutcome> = starts.par_iter().map(|s| penalty_run(f, s, params)).collect();

    let mut sequence = None;
    let mut extra = Vec::new();
    for o in outcomes {
        if sequence.is_none() {
            sequence = o.sequence;
        }
        extra.extend(o.projected);
    }
    for w in extra {
        if pool.iter().all(|q| dist(&q.point, &w.point) > DEDUP_RADIUS) {
            pool.push(w);
        }
    }
    report.tangency_points = pool.len();

    if let Some(seq) = sequence {
        report.verdict = TransversalityVerdict::FailsWithWitness;
        report.min_regular_f_norm = seq.last().map(|w| w.f_norm);
        report.witness_sequence = seq;
        return report;
    }
    let Some(best) = pool.iter().min_by(|a, b| a.f_norm.total_cmp(&b.f_norm)).cloned() else {
        report.notes.push("no regular tangency points found".to_string());
        return report;
    };
    report.min_regular_f_norm = Some(best.f_norm);
    report.verdict = if best.f_norm > margin {
        TransversalityVerdict::HoldsAtBudget
    } else {
        report.notes.push("a tangency point lies within the margin of V but no sequence reached tol_v".to_string());
        TransversalityVerdict::Inconclusive
    };
    report.witness_sequence = vec![best];
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialMinors {
    /// |C(x_j) C(x_m) C(y_m)| with m the non-critical index.
    pub x: f64,
    /// |C(y_j) C(x_m) C(y_m)|.
    pub y: f64,
}

fn family_or_err(psi: &DiagonalMixedPolynomial) -> Result<SpecialFamily, TransversalityError> {
    special_family(psi).ok_or(TransversalityError::NotSpecialFamily)
}

/// Closed-form minors of the tangency matrix of `to_real_map(psi)` pairing
/// the columns of z_j with those of the non-critical variable.
pub fn special_family_minor(
    psi: &DiagonalMixedPolynomial,
    j: usize,
    x: &[f64],
) -> Result<SpecialMinors, TransversalityError> {
    let fam = family_or_err(psi)?;
    if j == fam.last || j == 0 || j > psi.n() {
        return Err(TransversalityError::NotCritical(j));
    }
    let m = fam.last;
    let (xj, yj) = (x[2 * (j - 1)], x[2 * (j - 1) + 1]);
    let (xn, yn) = (x[2 * (m - 1)], x[2 * (m - 1) + 1]);
    let rho_j = xj * xj + yj * yj;
    let rho_n = xn * xn + yn * yn;
    let mu_j = fam.scalars[j - 1];
    let mu_n = fam.scalars[m - 1];
    let a_j = fam.exponents[j - 1] as i32;
    let common = mu_n * rho_n * (3.0 * mu_n * rho_n - 2.0 * mu_j * a_j as f64 * rho_j.powi(a_j - 1) * xn);
    let sign = if fam.conjugate_last { -1.0 } else { 1.0 };
    Ok(SpecialMinors { x: sign * xj * common, y: sign * yj * common })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSummary {
    pub indices: Vec<usize>,
    pub samples: usize,
    /// Samples whose x_m has the sign the branch forces.
    pub sign_consistent: usize,
    pub x_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimCheck {
    pub holds: bool,
    /// One of the two blocks is empty.
    pub vacuous: bool,
    /// Block whose coefficients share the sign of the non-critical one; forces sign(x_m) = +.
    pub same_sign: BranchSummary,
    /// The other block; forces sign(x_m) = −.
    pub opposite_sign: BranchSummary,
    /// Samples of one branch that also solve an equation of the other.
    pub violations: usize,
}

/// Samples solutions (x_m, y_m) of each block's tangency equation
/// 3μ_m ρ_m = 2μ_j a_j ρ_j^{a_j−1} x_m and checks that none also solves an
/// equation from the other block.
pub fn special_family_claim_check(
    psi: &DiagonalMixedPolynomial,
    samples: usize,
    rng_seed: u64,
) -> Result<ClaimCheck, TransversalityError> {
    let fam = family_or_err(psi)?;
    let m = fam.last;
    let mu_n = fam.scalars[m - 1];
    let (same, opposite): (Vec<usize>, Vec<usize>) =
        (1..=psi.n()).filter(|&j| j != m).partition(|&j| fam.scalars[j - 1] * mu_n > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut violations = 0;

    let mut run = |block: &[usize], other: &[usize], forced: f64| -> BranchSummary {
        let mut summary = BranchSummary { indices: block.to_vec(), samples: 0, sign_consistent: 0, x_range: None };
        if block.is_empty() {
            return summary;
        }
        let mut drawn = 0;
        while summary.samples < samples && drawn < 20 * samples {
            drawn += 1;
            let j = block[rng.random_range(0..block.len())];
            let rho_j: f64 = rng.random_range(1e-3..1.0);
            let a_j = fam.exponents[j - 1] as i32;
            let c = 2.0 * fam.scalars[j - 1] * a_j as f64 * rho_j.powi(a_j - 1);
            let ymax = c.abs() / (6.0 * mu_n.abs());
            let y: f64 = rng.random_range(-ymax..ymax);
            let root = (c * c - 36.0 * mu_n * mu_n * y * y).max(0.0).sqrt();
            let pick = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let x = (c + pick * root) / (6.0 * mu_n);
            let rho_n = x * x + y * y;
            if !(rho_n > 1e-24) {
                continue;
            }
            summary.samples += 1;
            if x * forced > 0.0 {
                summary.sign_consistent += 1;
            }
            let (lo, hi) = summary.x_range.unwrap_or((x, x));
            summary.x_range = Some((lo.min(x), hi.max(x)));
            let v = 3.0 * mu_n * rho_n / x;
            for &k in other {
                let mu_k = fam.scalars[k - 1];
                let solvable = if fam.exponents[k - 1] == 1 {
                    (v - 2.0 * mu_k).abs() <= 1e-9 * v.abs().max(2.0 * mu_k.abs())
                } else {
                    v * mu_k > 0.0
                };
                if solvable {
                    violations += 1;
                    break;
                }
            }
        }
        summary
    };
    let same_summary = run(&same, &opposite, 1.0);
    let opposite_summary = run(&opposite, &same, -1.0);
    let vacuous = same.is_empty() || opposite.is_empty();
    let consistent = same_summary.sign_consistent == same_summary.samples
        && opposite_summary.sign_consistent == opposite_summary.samples;
    Ok(ClaimCheck {
        holds: violations == 0 && consistent,
        vacuous,
        same_sign: same_summary,
        opposite_sign: opposite_summary,
        violations,
    })
}

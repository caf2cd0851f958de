//! Fiber sampling and component counting, the weighted ℝ⁺-action, and the
//! phase map ψ/|ψ|.

use nalgebra::DVector;
use num_complex::Complex64;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{dist, median, norm, pinv_solve};
use crate::mixed_poly::DiagonalMixedPolynomial;
use crate::quasi::ball_points;
use crate::real_map::RealPolynomialMap;
use crate::structure::{RadialWeights, SCHEMA};
use crate::transversality::regularity;

pub type FlowParams = RadialWeights;

/// Fiber points where the row-normalized Jacobian is this degenerate are flagged singular.
pub const SINGULAR_FLAG: f64 = 1e-6;
const MIN_RELIABLE: usize = 10;
const BRIDGE_NEIGHBOURS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiberError {
    #[error("Gauss-Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("target has {got} components, map has {expected}")]
    TargetDimension { expected: usize, got: usize },
    #[error("point is zero")]
    ZeroPoint,
    #[error("|psi(z)| = {modulus:e}: point is on W or V")]
    OnZeroSet { modulus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberParams {
    pub epsilon: f64,
    pub count: usize,
    pub rng_seed: u64,
    pub tol_fiber: f64,
    pub max_iter: usize,
}

impl FiberParams {
    pub fn new(epsilon: f64, count: usize) -> Self {
        Self { epsilon, count, rng_seed: 0, tol_fiber: 1e-10, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonResult {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn residual(f: &RealPolynomialMap, c: &[f64], x: &[f64]) -> Vec<f64> {
    f.eval(x).iter().zip(c).map(|(a, b)| a - b).collect()
}

/// Gauss–Newton with pseudo-inverse steps and step halving.
pub fn newton_to_fiber(
    f: &RealPolynomialMap,
    c: &[f64],
    seed: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonResult, FiberError> {
    if c.len() != f.p() {
        return Err(FiberError::TargetDimension { expected: f.p(), got: c.len() });
    }
    let mut x = seed.to_vec();
    let mut r = residual(f, c, &x);
    let mut rn = norm(&r);
    for it in 0..=max_iter {
        if rn < tol {
            return Ok(NewtonResult { point: x, iterations: it, residual: rn });
        }
        if it == max_iter {
            break;
        }
        let Some(step) = pinv_solve(&f.jacobian(&x), &DVector::from_column_slice(&r)) else { break };
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - alpha * d).collect();
            let rt = residual(f, c, &trial);
            let rtn = norm(&rt);
            if rtn < rn {
                x = trial;
                r = rt;
                rn = rtn;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            return Err(FiberError::NoConvergence { iterations: it, residual: rn });
        }
    }
    Err(FiberError::NoConvergence { iterations: max_iter, residual: rn })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberPoint {
    pub x: Vec<f64>,
    pub residual: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberSample {
    pub schema: &'static str,
    pub target: Vec<f64>,
    pub epsilon: f64,
    pub seeds: usize,
    pub rng_seed: u64,
    pub converged: usize,
    pub max_residual: f64,
    pub component_count: usize,
    pub linkage_radius: f64,
    /// Clusters joined by a path along the fiber after single linkage.
    pub bridged: usize,
    pub reliable: bool,
    pub singular_points: usize,
    pub points: Vec<FiberPoint>,
}

impl FiberSample {
    /// One row per point: `x1,…,xn,residual`.
    pub fn to_csv(&self, n: usize) -> String {
        let mut out: String = (1..=n).map(|i| format!("x{i},")).collect();
        out.push_str("residual\n");
        for p in &self.points {
            for v in &p.x {
                out.push_str(&format!("{v:e},"));
            }
            out.push_str(&format!("{:e}\n", p.residual));
        }
        out
    }
}

/// Tries to join two fiber points by Newton-projecting the chord between them
/// in steps of at most half the linkage radius.
fn fiber_path(f: &RealPolynomialMap, c: &[f64], a: &[f64], b: &[f64], radius: f64, params: &FiberParams) -> bool {
    let d = dist(a, b);
    let steps = ((d / (0.5 * radius)).ceil() as usize).max(1);
    let mut prev = a.to_vec();
    for i in 1..=steps {
        let s = i as f64 / steps as f64;
        let q: Vec<f64> = a.iter().zip(b).map(|(u, v)| (1.0 - s) * u + s * v).collect();
        let Ok(r) = newton_to_fiber(f, c, &q, params.tol_fiber, params.max_iter) else { return false };
        if norm(&r.point) > params.epsilon || dist(&prev, &r.point) > radius {
            return false;
        }
        prev = r.point;
    }
    dist(&prev, b) <= radius
}

fn count_components(
    f: &RealPolynomialMap,
    c: &[f64],
    pts: &[Vec<f64>],
    params: &FiberParams,
) -> (usize, f64, usize) {
    let n = pts.len();
    if n < 2 {
        return (n, 0.0, 0);
    }
    let d: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (0..n).map(|j| dist(&pts[i], &pts[j])).collect()).collect();
    let nn: Vec<f64> =
        (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| d[i][j]).fold(f64::INFINITY, f64::min)).collect();
    let radius = 3.0 * median(nn);
    let mut uf = UnionFind::<usize>::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if d[i][j] <= radius {
                uf.union(i, j);
            }
        }
    }
    let mut bridged = 0;
    loop {
        let labels = uf.clone().into_labeling();
        let mut roots: Vec<usize> = labels.clone();
        roots.sort_unstable();
        roots.dedup();
        if roots.len() < 2 {
            break;
        }
        // Closest pair of points between every two clusters.
        let k = roots.len();
        let idx = |r: usize| roots.binary_search(&r).unwrap();
        let mut best = vec![vec![(f64::INFINITY, 0usize, 0usize); k]; k];
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (idx(labels[i]), idx(labels[j]));
                if a != b && d[i][j] < best[a][b].0 {
                    best[a][b] = (d[i][j], i, j);
                    best[b][a] = (d[i][j], j, i);
                }
            }
        }
        let mut attempts: Vec<(f64, usize, usize)> = Vec::new();
        for a in 0..k {
            let mut near: Vec<_> = (0..k).filter(|&b| b != a).map(|b| best[a][b]).collect();
            near.sort_by(|x, y| x.0.total_cmp(&y.0));
            attempts.extend(near.into_iter().take(BRIDGE_NEIGHBOURS));
        }
        attempts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let joined: Vec<bool> =
            attempts.par_iter().map(|&(_, i, j)| fiber_path(f, c, &pts[i], &pts[j], radius, params)).collect();
        let mut merged = false;
        for (&(_, i, j), ok) in attempts.iter().zip(joined) {
            if ok && uf.union(i, j) {
                bridged += 1;
                merged = true;
            }
        }
        if !merged {
            break;
        }
    }
    let mut roots = uf.into_labeling();
    roots.sort_unstable();
    roots.dedup();
    (roots.len(), radius, bridged)
}

pub fn sample_fiber(f: &RealPolynomialMap, c: &[f64], params: &FiberParams) -> Result<FiberSample, FiberError> {
    if c.len() != f.p() {
        return Err(FiberError::TargetDimension { expected: f.p(), got: c.len() });
    }
    let seeds = ball_points(f.n(), params.count, params.epsilon, params.rng_seed);
    let results: Vec<Option<NewtonResult>> = seeds
        .par_iter()
        .map(|s| newton_to_fiber(f, c, s, params.tol_fiber, params.max_iter).ok())
        .collect();
    let points: Vec<FiberPoint> = results
        .into_iter()
        .flatten()
        .filter(|r| norm(&r.point) <= params.epsilon)
        .map(|r| FiberPoint { singular: regularity(f, &r.point) < SINGULAR_FLAG, x: r.point, residual: r.residual })
        .collect();
    assert!(points.iter().all(|p| p.residual < params.tol_fiber && norm(&p.x) <= params.epsilon));
    let cloud: Vec<Vec<f64>> = points.iter().map(|p| p.x.clone()).collect();
    let (component_count, linkage_radius, bridged) = count_components(f, c, &cloud, params);
    Ok(FiberSample {
        schema: SCHEMA,
        target: c.to_vec(),
        epsilon: params.epsilon,
        seeds: params.count,
        rng_seed: params.rng_seed,
        converged: points.len(),
        max_residual: points.iter().map(|p| p.residual).fold(0.0, f64::max),
        component_count,
        linkage_radius,
        bridged,
        reliable: points.len() >= MIN_RELIABLE,
        singular_points: points.iter().filter(|p| p.singular).count(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberSummary {
    pub target: Vec<f64>,
    pub points: usize,
    pub component_count: usize,
    pub linkage_radius: f64,
    pub reliable: bool,
    pub singular_points: usize,
    pub mean_norm: f64,
    pub max_norm: f64,
}

impl From<&FiberSample> for FiberSummary {
    fn from(s: &FiberSample) -> Self {
        let norms: Vec<f64> = s.points.iter().map(|p| norm(&p.x)).collect();
        Self {
            target: s.target.clone(),
            points: s.points.len(),
            component_count: s.component_count,
            linkage_radius: s.linkage_radius,
            reliable: s.reliable,
            singular_points: s.singular_points,
            mean_norm: if norms.is_empty() { 0.0 } else { norms.iter().sum::<f64>() / norms.len() as f64 },
            max_norm: norms.iter().cloned().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberComparison {
    pub schema: &'static str,
    pub first: FiberSummary,
    pub second: FiberSummary,
    pub same_component_count: bool,
}

/// Side-by-side statistics of two fibers. Says nothing about homeomorphism.
pub fn fiber_compare(
    f: &RealPolynomialMap,
    c1: &[f64],
    c2: &[f64],
    params: &FiberParams,
) -> Result<FiberComparison, FiberError> {
    let first = FiberSummary::from(&sample_fiber(f, c1, params)?);
    let second = FiberSummary::from(&sample_fiber(f, c2, params)?);
    Ok(FiberComparison {
        schema: SCHEMA,
        same_component_count: first.component_count == second.component_count,
        first,
        second,
    })
}

/// t·z = (t^{p_1} z_1, …, t^{p_n} z_n).
pub fn rplus_flow(w: &FlowParams, t: f64, z: &[Complex64]) -> Vec<Complex64> {
    z.iter().zip(&w.p).map(|(zj, &p)| zj * t.powi(p as i32)).collect()
}

/// The unique t > 0 with ‖t·z‖ = ε, and the point t·z.
pub fn inflate_to_sphere(w: &FlowParams, z: &[Complex64], epsilon: f64) -> Result<(f64, Vec<Complex64>), FiberError> {
    let m: Vec<(f64, i32)> = z.iter().zip(&w.p).map(|(zj, &p)| (zj.norm_sqr(), 2 * p as i32)).collect();
    if m.iter().all(|(r, _)| *r == 0.0) {
        return Err(FiberError::ZeroPoint);
    }
    let e2 = epsilon * epsilon;
    let g = |t: f64| m.iter().map(|(r, k)| r * t.powi(*k)).sum::<f64>() - e2;
    let dg = |t: f64| m.iter().map(|(r, k)| r * *k as f64 * t.powi(k - 1)).sum::<f64>();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(t);
        if v.abs() <= 1e-15 * e2 {
            break;
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - v / dg(t);
        t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-17 * hi {
            break;
        }
    }
    Ok((t, rplus_flow(w, t, z)))
}

pub fn phase(psi: &DiagonalMixedPolynomial, z: &[Complex64]) -> Result<Complex64, FiberError> {
    let v = psi.eval(z);
    let modulus = v.norm();
    if modulus <= 1e-12 {
        return Err(FiberError::OnZeroSet { modulus });
    }
    Ok(v / modulus)
}

//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use milnor_scope::mixed_poly::{DiagonalMixedPolynomial, MixedTerm};
use milnor_scope::rational::{rat, ComplexRational, Rational};
use milnor_scope::real_map::{RealPolynomial, RealPolynomialMap};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn nonzero_int<R: Rng>(r: &mut R, lim: i64) -> i64 {
    loop {
        let k = r.random_range(-lim..=lim);
        if k != 0 {
            return k;
        }
    }
}

pub fn gaussian<R: Rng>(r: &mut R) -> ComplexRational {
    loop {
        let c = ComplexRational::from_ints(r.random_range(-3..=3), r.random_range(-3..=3));
        if !c.is_zero() {
            return c;
        }
    }
}

/// Every variable carries a term; a_j + b_j ≤ `max_degree`.
pub fn random_psi<R: Rng>(r: &mut R, n: usize, max_degree: u32) -> DiagonalMixedPolynomial {
    let terms = (1..=n)
        .map(|j| {
            let d = r.random_range(1..=max_degree);
            let a = r.random_range(0..=d);
            MixedTerm::new(j, gaussian(r), a, d - a)
        })
        .collect();
    DiagonalMixedPolynomial::new(n, terms).unwrap()
}

/// ψ with prescribed colinear classes among its critical indices, plus at
/// least one non-critical term.
pub fn random_classified_psi<R: Rng>(r: &mut R) -> DiagonalMixedPolynomial {
    let n = r.random_range(3..=5);
    let classes = r.random_range(1..=2);
    let dirs: Vec<ComplexRational> = (0..classes).map(|_| gaussian(r)).collect();
    let noncritical = r.random_range(1..n);
    let terms = (1..=n)
        .map(|j| {
            if j == noncritical {
                MixedTerm::new(j, gaussian(r), 2, 1)
            } else {
                let d = &dirs[r.random_range(0..classes)];
                let k = rat(nonzero_int(r, 4));
                let a = r.random_range(1..=3);
                MixedTerm::new(j, d.scale(&k), a, a)
            }
        })
        .collect();
    DiagonalMixedPolynomial::new(n, terms).unwrap()
}

/// Special-family member: one z_m²z̄_m (or z_m z̄_m²) term at a random position,
/// every other term critical, all coefficients on one line through 0.
pub fn random_special_psi<R: Rng>(r: &mut R) -> DiagonalMixedPolynomial {
    let n = r.random_range(2..=5);
    let dir = gaussian(r);
    let last = r.random_range(1..=n);
    let conj = r.random_bool(0.5);
    let terms = (1..=n)
        .map(|j| {
            let c = dir.scale(&rat(nonzero_int(r, 4)));
            if j == last {
                if conj {
                    MixedTerm::new(j, c, 1, 2)
                } else {
                    MixedTerm::new(j, c, 2, 1)
                }
            } else {
                let a = r.random_range(1..=3);
                MixedTerm::new(j, c, a, a)
            }
        })
        .collect();
    DiagonalMixedPolynomial::new(n, terms).unwrap()
}

/// Sparse map with `p` components in `n` variables, small integer coefficients.
pub fn random_real_map<R: Rng>(r: &mut R, n: usize, p: usize) -> RealPolynomialMap {
    let comps = (0..p)
        .map(|_| {
            let mut poly = RealPolynomial::zero(n);
            for _ in 0..r.random_range(1..=5) {
                let e: Vec<u32> = (0..n).map(|_| r.random_range(0..=3)).collect();
                poly.add_term(e, rat(nonzero_int(r, 5)));
            }
            poly
        })
        .collect();
    RealPolynomialMap::with_default_names(comps)
}

pub fn random_point<R: Rng>(r: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(-scale..scale)).collect()
}

pub fn random_complex_point<R: Rng>(r: &mut R, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()
}

/// Central-difference Jacobian of `g: ℝⁿ → ℝᵐ`.
pub fn fd_jacobian(g: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = g(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        xp[c] = x[c] + h;
        let a = g(&xp);
        xp[c] = x[c] - h;
        let b = g(&xp);
        xp[c] = x[c];
        for row in 0..m {
            jac[(row, c)] = (a[row] - b[row]) / (2.0 * h);
        }
    }
    jac
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Exact determinant by Gaussian elimination over ℚ.
pub fn exact_det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !a[r][c].is_zero()) else { return Rational::zero() };
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= &a[c][c];
        for r in c + 1..n {
            let k = &a[r][c] / &a[c][c];
            for cc in c..n {
                let v = &k * &a[c][cc];
                a[r][cc] -= v;
            }
        }
    }
    det
}

/// All k×k minors of a k×n rational matrix vanish.
pub fn exact_rank_deficient(rows: &[Vec<Rational>]) -> bool {
    let k = rows.len();
    milnor_scope::real_map::combinations(rows[0].len(), k).iter().all(|cols| {
        let sub: Vec<Vec<Rational>> = rows.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect();
        exact_det(&sub).is_zero()
    })
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    milnor_scope::rational::to_f64(r)
}

pub fn sign(r: &Rational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

fn label_components(cells: &[bool], dims: &[usize], neighbours: &[Vec<isize>]) -> usize {
    let total: usize = dims.iter().product();
    let mut seen = vec![false; total];
    let unflatten = |mut i: usize| -> Vec<usize> {
        let mut out = vec![0; dims.len()];
        for d in (0..dims.len()).rev() {
            out[d] = i % dims[d];
            i /= dims[d];
        }
        out
    };
    let flatten = |v: &[usize]| v.iter().zip(dims).fold(0, |acc, (x, d)| acc * d + x);
    let mut count = 0;
    for start in 0..total {
        if !cells[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let pos = unflatten(i);
            for off in neighbours {
                let q: Option<Vec<usize>> = pos
                    .iter()
                    .zip(off)
                    .zip(dims)
                    .map(|((p, o), d)| {
                        let v = *p as isize + o;
                        (v >= 0 && (v as usize) < *d).then_some(v as usize)
                    })
                    .collect();
                if let Some(q) = q {
                    let j = flatten(&q);
                    if cells[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}

fn all_offsets(dim: usize) -> Vec<Vec<isize>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|v| (-1..=1).map(move |o| [v.clone(), vec![o]].concat())).collect();
    }
    out.retain(|v| v.iter().any(|&o| o != 0));
    out
}

/// Components of {F = 0} inside the disk of radius `r`, by flood fill over grid
/// cells whose corners change sign (8-connectivity).
pub fn flood_fill_2d(f: impl Fn(f64, f64) -> f64, r: f64, cells: usize) -> usize {
    let h = 2.0 * r / cells as f64;
    let mut mark = vec![false; cells * cells];
    for i in 0..cells {
        for j in 0..cells {
            let (u0, v0) = (-r + i as f64 * h, -r + j as f64 * h);
            let (cu, cv) = (u0 + 0.5 * h, v0 + 0.5 * h);
            if cu * cu + cv * cv > r * r {
                continue;
            }
            let s = [f(u0, v0), f(u0 + h, v0), f(u0, v0 + h), f(u0 + h, v0 + h)];
            let pos = s.iter().any(|v| *v > 0.0);
            let neg = s.iter().any(|v| *v < 0.0);
            let zero = s.iter().any(|v| *v == 0.0);
            mark[i * cells + j] = (pos && neg) || zero;
        }
    }
    label_components(&mark, &[cells, cells], &all_offsets(2))
}

/// 3D analogue of `flood_fill_2d` with 26-connectivity inside the ball of radius `r`.
pub fn flood_fill_3d(f: impl Fn(f64, f64, f64) -> f64, r: f64, cells: usize) -> usize {
    let h = 2.0 * r / cells as f64;
    let n = cells + 1;
    let mut corner = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                corner[(i * n + j) * n + k] = f(-r + i as f64 * h, -r + j as f64 * h, -r + k as f64 * h);
            }
        }
    }
    let mut mark = vec![false; cells * cells * cells];
    for i in 0..cells {
        for j in 0..cells {
            for k in 0..cells {
                let c = [i, j, k].map(|t| -r + (t as f64 + 0.5) * h);
                if c.iter().map(|v| v * v).sum::<f64>() > r * r {
                    continue;
                }
                let mut pos = false;
                let mut neg = false;
                for (di, dj, dk) in cube_corners() {
                    let v = corner[((i + di) * n + j + dj) * n + k + dk];
                    pos |= v >= 0.0;
                    neg |= v <= 0.0;
                }
                mark[(i * cells + j) * cells + k] = pos && neg;
            }
        }
    }
    label_components(&mark, &[cells, cells, cells], &all_offsets(3))
}

fn cube_corners() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..8).map(|b| (b & 1, (b >> 1) & 1, (b >> 2) & 1))
}

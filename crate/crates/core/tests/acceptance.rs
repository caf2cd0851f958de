//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use milnor_scope::fiber::{rplus_flow, sample_fiber, FiberParams};
use milnor_scope::mixed_poly::{complex_from_real, eval_mixed, real_jacobian, to_real_map, DiagonalMixedPolynomial};
use milnor_scope::parse::{parse_mixed, parse_real_map};
use milnor_scope::rational::{rat, ComplexRational};
use milnor_scope::real_map::RealPolynomialMap;
use milnor_scope::structure::*;
use milnor_scope::transversality::*;
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"))
}

const XY_Z2: &str = "(x*y + z^2, x) vars x,y,z";
const G: &str = "z1 z1~ + z2^2 z2~";
const H: &str = "z1 z1~ - z2 z2~ + z3^2 z3~";
const MAIN: &str = "(1+i) z1 z1~ + (-2-i) z2^2 z2~^2 + i z3^2 z3~";

fn mixed(s: &str) -> DiagonalMixedPolynomial {
    parse_mixed(s).unwrap()
}

/// Every Jacobian minor of `f` vanishes identically once the listed variables are zero.
fn minors_vanish_on(f: &RealPolynomialMap, zero_vars: &[usize]) -> bool {
    f.jacobian_minors().iter().all(|m| m.vanish_vars(zero_vars).is_zero())
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();

    // (xy + z², x): Σ_f is the y-axis, Δ_f = {0}, Σ_f ∩ V ≠ {0}, and transversality fails.
    let f = parse_real_map(XY_Z2).unwrap();
    let minors: Vec<String> = f.jacobian_minors().iter().map(|m| m.render(f.vars())).collect();
    ensure(minors == ["-x", "-2*z", "0"], format!("(xy+z², x) minors {minors:?}"))?;
    ensure(minors_vanish_on(&f, &[0, 2]), "(xy+z², x) minors survive on x=z=0")?;
    ensure(f.components().iter().all(|c| c.vanish_vars(&[0, 2]).is_zero()), "(xy+z², x) f ≠ 0 on Σ_f")?;
    let mut p = SearchParams::new(1.0);
    p.seeds = 64;
    let r = falsify_transversality(&f, &p);
    ensure(r.verdict == TransversalityVerdict::FailsWithWitness, format!("(xy+z², x) verdict {:?}", r.verdict))?;

    // g: C = {1}, Σ = {(z1, 0)}, Δ the ray through (1,0), main theorem.
    let g = mixed(G);
    let s = analyze(&g);
    ensure(s.critical_indices == [1], "g critical indices")?;
    ensure(s.critical_set.subspaces.len() == 1 && s.critical_set.subspaces[0].free == [1], "g critical set")?;
    ensure(minors_vanish_on(&to_real_map(&g), &[2, 3]), "g minors survive on z2=0")?;
    let d = &s.discriminant.components;
    ensure(d.len() == 1 && d[0].direction == ComplexRational::from_ints(1, 0), "g discriminant direction")?;
    ensure(d[0].kind == ComponentKind::Ray && !s.discriminant.has_complete_line, "g discriminant kind")?;
    ensure(s.verdict.kind == VerdictKind::FibrationMainTheorem, format!("g verdict {:?}", s.verdict.kind))?;
    ensure(s.sigma_cap_v.trivial, "g: Σ ∩ V should be {0}")?;

    // h: one class {1,2} with opposite signs, Δ the full real line.
    let h = mixed(H);
    let s = analyze(&h);
    ensure(s.critical_indices == [1, 2], "h critical indices")?;
    ensure(s.classes.len() == 1 && s.classes[0].ratios == [rat(1), rat(-1)], "h classes")?;
    ensure(s.critical_set.subspaces[0].free == [1, 2] && s.critical_set.subspaces[0].real_dimension == 4, "h Σ")?;
    ensure(minors_vanish_on(&to_real_map(&h), &[4, 5]), "h minors survive on z3=0")?;
    let d = &s.discriminant.components;
    ensure(d.len() == 1 && d[0].kind == ComponentKind::FullLine, "h discriminant kind")?;
    ensure(d[0].direction == ComplexRational::from_ints(1, 0), "h discriminant direction")?;
    ensure(s.verdict.kind == VerdictKind::FibrationSpecialCase, format!("h verdict {:?}", s.verdict.kind))?;
    let w = s.sigma_cap_v.witness.clone().ok_or("h: no Σ ∩ V witness")?;
    ensure(w.iter().zip([1.0, 1.0, 1.0, 1.0, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-12), "h witness")?;

    // Mixed signs and arguments: two singleton classes, rays through (1,1) and (-2,-1).
    let m = mixed(MAIN);
    let s = analyze(&m);
    ensure(s.critical_indices == [1, 2] && s.classes.len() == 2, "main classes")?;
    let free: Vec<_> = s.critical_set.subspaces.iter().map(|c| c.free.clone()).collect();
    ensure(free == [vec![1], vec![2]], "main Σ")?;
    let d = &s.discriminant.components;
    ensure(d[0].direction == ComplexRational::from_ints(1, 1) && d[0].kind == ComponentKind::Ray, "main ray 1")?;
    ensure(d[1].direction == ComplexRational::from_ints(-2, -1) && d[1].kind == ComponentKind::Ray, "main ray 2")?;
    ensure(s.verdict.kind == VerdictKind::FibrationMainTheorem, format!("main verdict {:?}", s.verdict.kind))?;

    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok(format!("4 golden polynomials reproduced in {:?}", t0.elapsed()))
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let f = parse_real_map(XY_Z2).unwrap();
    let r = falsify_transversality(&f, &SearchParams::new(1.0));
    within(t0.elapsed(), Duration::from_secs(30))?;
    ensure(r.verdict == TransversalityVerdict::FailsWithWitness, format!("verdict {:?}", r.verdict))?;
    let seq = &r.witness_sequence;
    ensure(seq.len() >= 3, format!("sequence length {}", seq.len()))?;
    for w in seq {
        ensure(w.sigma < 1e-8, format!("sigma {}", w.sigma))?;
        ensure(w.point[2].abs() < 1e-6, format!("off z=0: {:?}", w.point))?;
        ensure((w.point.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0).abs() < 1e-9, "off the sphere")?;
    }
    for pair in seq.windows(2) {
        ensure(pair[1].f_norm * 10.0 <= pair[0].f_norm, format!("f_norm {} -> {}", pair[0].f_norm, pair[1].f_norm))?;
    }
    let last = seq.last().unwrap();
    ensure(last.f_norm < 1e-6, format!("final f_norm {}", last.f_norm))?;
    Ok(format!(
        "{} elements, f_norm {:.2e} -> {:.2e}, in {:?}",
        seq.len(),
        seq[0].f_norm,
        last.f_norm,
        t0.elapsed()
    ))
}

/// Whether a regular tangency point of g lies on one of its known tangency families.
fn g_case(x: &[f64]) -> bool {
    let (z, w) = (x[2], x[3]);
    (3.0 * (z * z + w * w) - 2.0 * z).abs() < 1e-6 || (x[0].abs() < 1e-6 && x[1].abs() < 1e-6)
}

fn h_case(x: &[f64]) -> bool {
    let (t, r) = (x[4], x[5]);
    let q = 3.0 * (t * t + r * r);
    let small = |a: f64, b: f64| a.abs() < 1e-6 && b.abs() < 1e-6;
    (small(x[2], x[3]) && (q - 2.0 * t).abs() < 1e-6)
        || (small(x[0], x[1]) && (q + 2.0 * t).abs() < 1e-6)
        || (small(x[0], x[1]) && small(x[2], x[3]))
}

fn g_curve(t: f64) -> Vec<f64> {
    let s = (1.0 - t * t).sqrt();
    vec![(1.0 - s) / 3.0, t / 3.0, (1.0 + s) / 3.0, t / 3.0]
}

/// h's tangency families, with the free coordinates placed so the point lies on S_ε.
fn h_curve(s: f64, positive: bool, eps: f64) -> Vec<f64> {
    let root = (1.0 - s * s).sqrt();
    let (t, r) = if positive { ((1.0 + root) / 3.0, s / 3.0) } else { ((-1.0 - root) / 3.0, s / 3.0) };
    let free = (eps * eps - t * t - r * r).sqrt();
    if positive {
        vec![free, 0.0, 0.0, 0.0, t, r]
    } else {
        vec![0.0, 0.0, free, 0.0, t, r]
    }
}

fn recovered(f: &RealPolynomialMap, target: &[f64], eps: f64) -> Result<f64, String> {
    ensure(sigma_at(f, target) < 1e-8, format!("σ at {target:?} is {}", sigma_at(f, target)))?;
    let seed: Vec<f64> = target.iter().enumerate().map(|(i, v)| v + 2.5e-4 * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let x = refine_tangency(f, &seed, &SearchParams::new(eps)).ok_or(format!("no convergence near {target:?}"))?;
    let d = x.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    ensure(d < 1e-3, format!("recovered point {d} away from {target:?}"))?;
    Ok(d)
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let g = to_real_map(&mixed(G));
    let h = to_real_map(&mixed(H));
    let mut found = 0;
    for (name, f, classify) in [("g", &g, g_case as fn(&[f64]) -> bool), ("h", &h, h_case)] {
        for eps in [1.0, 0.5] {
            let p = SearchParams::new(eps);
            let r = falsify_transversality(f, &p);
            ensure(r.verdict == TransversalityVerdict::HoldsAtBudget, format!("{name} ε={eps}: {:?}", r.verdict))?;
            let search = search_tangency_locus(f, &p);
            for w in search.points.iter().filter(|w| w.regular) {
                ensure(classify(&w.point), format!("{name} ε={eps}: unexpected tangency point {:?}", w.point))?;
                found += 1;
            }
        }
    }
    let ts = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut worst: f64 = 0.0;
    for &t in &ts {
        let p = g_curve(t);
        let r = p.iter().map(|a| a * a).sum::<f64>().sqrt();
        ensure((r - 2.0 / 3.0).abs() < 1e-9, format!("‖p({t})‖ = {r}"))?;
        worst = worst.max(recovered(&g, &p, 2.0 / 3.0)?);
        for positive in [true, false] {
            worst = worst.max(recovered(&h, &h_curve(t, positive, 1.0), 1.0)?);
        }
    }
    within(t0.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "HoldsAtBudget x4, {found} regular tangency points all classified, curves recovered within {worst:.1e}, in {:?}",
        t0.elapsed()
    ))
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let f = parse_real_map(XY_Z2).unwrap();
    let params = FiberParams::new(3.0, 2000);
    let a = sample_fiber(&f, &[1.0, 0.0], &params).map_err(|e| e.to_string())?;
    let b = sample_fiber(&f, &[0.0, 1.0], &params).map_err(|e| e.to_string())?;
    // x is pinned by the second component, leaving a curve in the (y, z) plane.
    let oracle_a = flood_fill_2d(|_y, z| z * z - 1.0, (9.0f64).sqrt(), 600);
    let oracle_b = flood_fill_2d(|y, z| y + z * z, (8.0f64).sqrt(), 600);
    ensure(a.reliable && b.reliable, "too few converged points")?;
    ensure(a.component_count == 2 && oracle_a == 2, format!("over (1,0): {} vs oracle {oracle_a}", a.component_count))?;
    ensure(b.component_count == 1 && oracle_b == 1, format!("over (0,1): {} vs oracle {oracle_b}", b.component_count))?;
    Ok(format!("components 2 vs 1 (oracle {oracle_a} vs {oracle_b}), in {:?}", t0.elapsed()))
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let n = r.random_range(1..=4);
        let psi = random_psi(&mut r, n, 4);
        let w = radial_weights(&psi).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let z = random_complex_point(&mut r, n);
            let t: f64 = 3.0 * (1.0 - r.random::<f64>());
            let lhs = eval_mixed(&psi, &rplus_flow(&w, t, &z));
            let base = eval_mixed(&psi, &z);
            let rhs = base * t.powi(w.a as i32);
            let err = (lhs - rhs).norm() / (1.0 + base.norm());
            worst = worst.max(err);
            ensure(err <= 1e-9, format!("{psi}: t={t} error {err:e}"))?;
        }
    }
    Ok(format!("500 cases, worst scaled residual {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let psi = random_special_psi(&mut r);
        let fam = special_family(&psi).ok_or(format!("{psi} not recognised"))?;
        let f = to_real_map(&psi);
        let m = fam.last;
        for _ in 0..200 {
            let x = random_point(&mut r, 2 * psi.n(), 1.0);
            let tm = tangency_matrix(&f, &x);
            for j in (1..=psi.n()).filter(|&j| j != m) {
                let closed = special_family_minor(&psi, j, &x).map_err(|e| e.to_string())?;
                for (col, value) in [(2 * (j - 1), closed.x), (2 * (j - 1) + 1, closed.y)] {
                    let brute = tm.select_columns([col, 2 * (m - 1), 2 * (m - 1) + 1].iter()).determinant();
                    let err = (value - brute).abs() / brute.abs();
                    worst = worst.max(err);
                    ensure(err < 1e-10, format!("{psi} j={j}: {value} vs {brute}"))?;
                }
            }
        }
        let claim = special_family_claim_check(&psi, 1000, 6).map_err(|e| e.to_string())?;
        ensure(claim.holds, format!("{psi}: claim violated {claim:?}"))?;
    }
    Ok(format!("5 instances x 200 points, worst relative error {worst:.1e}; claim holds"))
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        for _ in 0..20 {
            let (analytic, numeric) = if k < 5 {
                let psi = random_psi(&mut r, 2 + k % 2, 5);
                let x = random_point(&mut r, 2 * psi.n(), 1.0);
                let g = |y: &[f64]| {
                    let v = eval_mixed(&psi, &complex_from_real(y));
                    vec![v.re, v.im]
                };
                (real_jacobian(&psi, &complex_from_real(&x)), fd_jacobian(g, &x, 1e-6))
            } else {
                let f = random_real_map(&mut r, 3 + k % 2, 2);
                let x = random_point(&mut r, f.n(), 1.0);
                (f.jacobian(&x), fd_jacobian(|y| f.eval(y), &x, 1e-6))
            };
            let err = rel_frobenius(&numeric, &analytic);
            worst = worst.max(err);
            ensure(err < 1e-6, format!("polynomial {k}: relative error {err:e}"))?;
        }
    }
    Ok(format!("10 polynomials x 20 points, worst relative error {worst:.1e}"))
}

fn criterion_8() -> Outcome {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..5 {
        let psi = random_classified_psi(&mut r);
        let disc = discriminant(&psi);
        for comp in &disc.components {
            for _ in 0..500 {
                let mut z = vec![Complex64::new(0.0, 0.0); psi.n()];
                for &j in &comp.class {
                    z[j - 1] = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
                }
                let v = eval_mixed(&psi, &z);
                if v.norm() == 0.0 {
                    continue;
                }
                let angle = comp.angular_distance(v);
                worst = worst.max(angle);
                checked += 1;
                ensure(angle < 1e-9, format!("{psi}: class {:?} value {v} off by {angle:e}", comp.class))?;
            }
        }
    }
    Ok(format!("{checked} Σ_J samples, worst angle {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("structure golden tests", criterion_1),
        ("transversality falsification", criterion_2),
        ("transversality support", criterion_3),
        ("fiber topology", criterion_4),
        ("equivariance", criterion_5),
        ("closed-form minors and claim", criterion_6),
        ("gradient correctness", criterion_7),
        ("discriminant sampling", criterion_8),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("ACCEPTANCE {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                println!("ACCEPTANCE {} FAIL  {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}


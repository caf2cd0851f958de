//! Low-discrepancy seeds on spheres and in balls.
//!
//! A Halton sequence with a Cranley–Patterson rotation drawn from the run's
//! RNG seed, so different seeds give different but equally uniform point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 48] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107,
    109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223,
];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn prime(d: usize) -> u64 {
    // Past the table the sequence degrades gracefully to a plain shifted lattice.
    PRIMES.get(d).copied().unwrap_or(PRIMES[PRIMES.len() - 1] + 2 * d as u64 + 1)
}

/// Shifted Halton points in the unit cube `[0,1)^dims`.
pub struct QuasiSequence {
    shift: Vec<f64>,
    next: u64,
}

impl QuasiSequence {
    pub fn new(dims: usize, rng_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        Self { shift: (0..dims).map(|_| rng.random::<f64>()).collect(), next: 1 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.next;
        self.next += 1;
        self.shift.iter().enumerate().map(|(d, s)| (halton(i, prime(d)) + s).fract()).collect()
    }
}

/// `count` points spread over the sphere of radius `radius` in ℝⁿ.
pub fn sphere_points(n: usize, count: usize, radius: f64, rng_seed: u64) -> Vec<Vec<f64>> {
    let dims = n + n % 2;
    let mut seq = QuasiSequence::new(dims, rng_seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = seq.next_point();
        let mut g = Vec::with_capacity(dims);
        for pair in u.chunks(2) {
            let r = (-2.0 * pair[0].max(1e-300).ln()).sqrt();
            let a = std::f64::consts::TAU * pair[1];
            g.push(r * a.cos());
            g.push(r * a.sin());
        }
        g.truncate(n);
        if let Some(p) = crate::linalg::to_sphere(&g, radius) {
            out.push(p);
        }
    }
    out
}

/// `count` points spread over the closed ball of radius `radius` in ℝⁿ.
pub fn ball_points(n: usize, count: usize, radius: f64, rng_seed: u64) -> Vec<Vec<f64>> {
    let mut seq = QuasiSequence::new(n, rng_seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<f64> = seq.next_point().iter().map(|u| radius * (2.0 * u - 1.0)).collect();
        if crate::linalg::norm(&p) <= radius {
            out.push(p);
        }
    }
    out
}

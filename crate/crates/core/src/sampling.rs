//! Seeded direction sets on the unit sphere.
//!
//! Every sphere sample set starts with the structured directions `±e_i` and
//! `(±e_i ± e_j)/√2`, followed by uniformly random directions. The structured
//! part makes axis-aligned flat directions (where polynomial gradients
//! typically degenerate) visible at every radius, independently of luck.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent random streams drawn from one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Screen = 1,
    Radius = 2,
    Extremum = 3,
    Probes = 4,
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn structured_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * dim * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[i] = sign;
            out.push(v);
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in i + 1..dim {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; dim];
                v[i] = si * h;
                v[j] = sj * h;
                out.push(v);
            }
        }
    }
    out
}

pub fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Structured directions followed by `random` uniform directions.
pub fn sphere_directions(dim: usize, random: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out = structured_directions(dim);
    out.extend((0..random).map(|_| random_direction(dim, rng)));
    out
}

pub fn default_samples_per_sphere(dim: usize) -> usize {
    64 * dim * dim
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

pub fn scaled(direction: &[f64], radius: f64) -> Vec<f64> {
    direction.iter().map(|c| c * radius).collect()
}

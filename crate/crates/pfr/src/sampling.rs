//! Seeded random instances for the verification suites.
//!
//! All randomness in this crate flows through ChaCha8 seeded by
//! `seed_from_u64`, and trial `i` of a suite draws from the stream
//! `seed ^ (i+1)·0x9E3779B97F4A7C15`. Both rules are fixed so that a rerun
//! — or a reimplementation in another language — reproduces the exact same
//! instances.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dist::{Dist, Joint2};
use crate::f2n::{F2Set, Subspace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for one trial of a suite.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn exp_weight(rng: &mut ChaCha8Rng) -> f64 {
    -rng.gen_range(1e-16f64..1.0).ln()
}

/// Strictly positive Dirichlet(1,…,1) sample: a dense distribution.
pub fn random_dense_dist(rng: &mut ChaCha8Rng, dim: usize) -> Dist {
    let weights: Vec<f64> = (0..1usize << dim).map(|_| exp_weight(rng)).collect();
    Dist::from_weights(dim, weights).expect("positive weights")
}

/// Random distribution supported on a random subset.
pub fn random_sparse_dist(rng: &mut ChaCha8Rng, dim: usize) -> Dist {
    let size = 1usize << dim;
    let support = rng.gen_range(1..=size);
    let idx = rand::seq::index::sample(rng, size, support);
    let mut weights = vec![0.0; size];
    for i in idx {
        weights[i] = exp_weight(rng);
    }
    Dist::from_weights(dim, weights).expect("positive weights")
}

/// Uniform on a random coset of a random subspace.
pub fn random_coset_uniform(rng: &mut ChaCha8Rng, dim: usize) -> Dist {
    let v = random_subspace(rng, dim);
    let t = rng.gen_range(0..1u32 << dim);
    Dist::uniform_on_coset(&v, t).expect("valid coset")
}

/// Mixed pool: dense, sparse, or coset-uniform with equal chance.
pub fn random_mixed_dist(rng: &mut ChaCha8Rng, dim: usize) -> Dist {
    match rng.gen_range(0..3) {
        0 => random_dense_dist(rng, dim),
        1 => random_sparse_dist(rng, dim),
        _ => random_coset_uniform(rng, dim),
    }
}

pub fn random_joint(rng: &mut ChaCha8Rng, dims: (usize, usize)) -> Joint2 {
    let weights: Vec<f64> = (0..1usize << (dims.0 + dims.1))
        .map(|_| exp_weight(rng))
        .collect();
    Joint2::from_weights(dims, weights).expect("positive weights")
}

/// Random nonempty subset of `F_2^dim` with the given size.
pub fn random_set_of_size(rng: &mut ChaCha8Rng, dim: usize, size: usize) -> F2Set {
    let space = 1usize << dim;
    let size = size.clamp(1, space);
    let idx = rand::seq::index::sample(rng, space, size);
    F2Set::new(dim, idx.into_iter().map(|i| i as u32)).expect("sampled in range")
}

pub fn random_set(rng: &mut ChaCha8Rng, dim: usize) -> F2Set {
    let size = rng.gen_range(1..=1usize << dim);
    random_set_of_size(rng, dim, size)
}

/// Random subspace of uniformly chosen rank.
pub fn random_subspace(rng: &mut ChaCha8Rng, dim: usize) -> Subspace {
    let target = rng.gen_range(0..=dim);
    let mut vecs: Vec<u32> = Vec::new();
    let mut v = Subspace::zero(dim).expect("valid dim");
    // Rejection-free in expectation: each draw grows the rank with
    // probability at least 1/2 until the target is hit.
    let mut guard = 0;
    while v.rank() < target && guard < 64 * dim {
        vecs.push(rng.gen_range(0..1u32 << dim));
        v = Subspace::from_vectors(dim, &vecs).expect("valid vectors");
        guard += 1;
    }
    v
}

/// Random invertible linear map as its action on basis vectors: column `i`
/// is the image of `e_i`.
pub fn random_invertible_map(rng: &mut ChaCha8Rng, dim: usize) -> Vec<u32> {
    loop {
        let cols: Vec<u32> = (0..dim).map(|_| rng.gen_range(0..1u32 << dim)).collect();
        let v = Subspace::from_vectors(dim, &cols).expect("valid vectors");
        if v.rank() == dim {
            return cols;
        }
    }
}

pub fn apply_linear_map(cols: &[u32], x: u32) -> u32 {
    let mut y = 0;
    for (i, &c) in cols.iter().enumerate() {
        if x >> i & 1 == 1 {
            y ^= c;
        }
    }
    y
}

/// The set families the covering pipeline is exercised on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetFamily {
    Subspace,
    Coset,
    SubspacePlusPoint,
    RandomDense,
}

impl SetFamily {
    pub const ALL: [SetFamily; 4] = [
        SetFamily::Subspace,
        SetFamily::Coset,
        SetFamily::SubspacePlusPoint,
        SetFamily::RandomDense,
    ];
}

pub fn structured_set(rng: &mut ChaCha8Rng, dim: usize, family: SetFamily) -> F2Set {
    match family {
        SetFamily::Subspace => random_subspace(rng, dim).member_set(),
        SetFamily::Coset => {
            let v = random_subspace(rng, dim);
            let t = rng.gen_range(0..1u32 << dim);
            F2Set::new(dim, v.span_elements().into_iter().map(|s| s ^ t))
                .expect("coset members in range")
        }
        SetFamily::SubspacePlusPoint => {
            let v = random_subspace(rng, dim);
            let mut members = v.span_elements();
            let outside: Vec<u32> = (0..1u32 << dim).filter(|&x| !v.contains(x)).collect();
            if let Some(&extra) = outside.as_slice().choose(rng) {
                members.push(extra);
            }
            F2Set::new(dim, members).expect("members in range")
        }
        SetFamily::RandomDense => {
            let space = 1usize << dim;
            let size = rng.gen_range(space / 2..=space).max(1);
            random_set_of_size(rng, dim, size)
        }
    }
}

//! Helpers for probability rows living on a simplex.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// A draw from the flat Dirichlet law on the `k`-simplex.
pub fn dirichlet_row<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter_mut().for_each(|v| *v /= total);
    } else {
        row = uniform_row(k);
    }
    row
}

pub fn uniform_row(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

pub fn point_row(k: usize, at: usize) -> Vec<f64> {
    let mut row = vec![0.0; k];
    row[at] = 1.0;
    row
}

/// `(1 - t)·row + t·e_vertex`, which stays on the simplex for `t ∈ [0, 1]`.
pub fn toward_vertex(row: &[f64], vertex: usize, t: f64) -> Vec<f64> {
    row.iter()
        .enumerate()
        .map(|(i, &p)| (1.0 - t) * p + if i == vertex { t } else { 0.0 })
        .collect()
}

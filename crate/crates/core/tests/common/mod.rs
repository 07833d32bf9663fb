#![allow(dead_code)]

use infocouple::geom::{build_dtm, Dtm};
use infocouple::prob::{Channel, ProbDist};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Dirichlet(1) sample mixed with the uniform distribution so every entry is
/// at least `floor / n`.
pub fn random_dist(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> ProbDist {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw
        .iter()
        .map(|x| (1.0 - floor) * x / total + floor / n as f64)
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    ProbDist::new(p).unwrap()
}

pub fn random_channel(rng: &mut ChaCha8Rng, ny: usize, nx: usize) -> Channel {
    let mut m = DMatrix::zeros(ny, nx);
    for x in 0..nx {
        let col = random_dist(rng, ny, 0.05);
        for y in 0..ny {
            m[(y, x)] = col.as_slice()[y];
        }
    }
    Channel::from_matrix(m).unwrap()
}

pub fn random_dtm(rng: &mut ChaCha8Rng, ny: usize, nx: usize) -> Dtm {
    let p = random_dist(rng, nx, 0.1);
    build_dtm(&random_channel(rng, ny, nx), &p).unwrap()
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / len).collect()
}

/// A zero-sum direction `J` with `P + 0.1·J` strictly inside the simplex.
pub fn random_zero_sum(rng: &mut ChaCha8Rng, p: &ProbDist) -> Vec<f64> {
    let n = p.len();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = raw.iter().map(|x| x - mean).collect();
    let worst = centered
        .iter()
        .zip(p.as_slice())
        .map(|(j, q)| j.abs() / q)
        .fold(0.0_f64, f64::max);
    // keep |0.1·J| ≤ P/2
    let scale = 5.0 / worst.max(1e-12);
    centered.iter().map(|x| x * scale.min(1.0)).collect()
}

/// Kronecker power with slot 1 varying fastest, built from nalgebra's
/// standard product (first factor slowest) by reversing the factor order.
pub fn oracle_kron(b: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for _ in 0..n {
        out = b.kronecker(&out);
    }
    out
}

/// `J = √P ∘ L` with `L` uniform on the unit sphere orthogonal to `√P`.
pub fn random_unit_perturbation(rng: &mut ChaCha8Rng, p: &ProbDist) -> Vec<f64> {
    let root: Vec<f64> = p.as_slice().iter().map(|x| x.sqrt()).collect();
    let mut l = random_unit(rng, p.len());
    let along: f64 = l.iter().zip(&root).map(|(a, b)| a * b).sum();
    l.iter_mut().zip(&root).for_each(|(a, b)| *a -= along * b);
    let len = l.iter().map(|x| x * x).sum::<f64>().sqrt();
    l.iter().zip(&root).map(|(a, b)| a / len * b).collect()
}

//! The windmill family: k receivers that each see the tangent plane rotated
//! by `2π(i−1)/k` and then projected onto the horizontal axis.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::prob::{Channel, ProbDist};
use crate::solver::{
    k_letter_construction, maxmin_rank1, CouplingEnsemble, KLetterResult, MaxMinSolution,
    QuadraticForm, SolverOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub struct WindmillInstance {
    pub k: usize,
    pub angles: Vec<f64>,
    pub forms: Vec<QuadraticForm>,
    /// `k = 2`: both receivers see the same line.
    pub degenerate: bool,
}

/// `(cos θ, sin θ)`.
pub fn phi(theta: f64) -> Vec<f64> {
    vec![theta.cos(), theta.sin()]
}

fn form_at(theta: f64) -> Result<QuadraticForm> {
    let (c, s) = (theta.cos(), theta.sin());
    let operator = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, c, s]);
    let mut basis = DMatrix::zeros(3, 2);
    basis[(1, 0)] = 1.0;
    basis[(2, 1)] = 1.0;
    QuadraticForm::from_operator(operator, vec![1.0, 0.0, 0.0], basis)
}

pub fn make_windmill(k: usize) -> Result<WindmillInstance> {
    if k < 2 {
        return Err(Error::InvalidK { k });
    }
    let angles: Vec<f64> = (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect();
    let forms = angles.iter().map(|&a| form_at(a)).collect::<Result<_>>()?;
    Ok(WindmillInstance {
        k,
        angles,
        forms,
        degenerate: k == 2,
    })
}

/// Best single direction; 1/4 for `k = 3`.
pub fn single_letter_value(w: &WindmillInstance, opts: &SolverOptions) -> Result<MaxMinSolution> {
    maxmin_rank1(&w.forms, opts)
}

fn require_three(w: &WindmillInstance) -> Result<()> {
    if w.k < 3 {
        return Err(Error::InvalidK { k: w.k });
    }
    Ok(())
}

/// k letters with directions `φ_{θ+2π(j−1)/k}`; every receiver gets 1/2.
pub fn multiletter_value(w: &WindmillInstance, theta: f64, epsilon: f64) -> Result<KLetterResult> {
    require_three(w)?;
    let dirs: Vec<Vec<f64>> = w.angles.iter().map(|a| phi(theta + a)).collect();
    k_letter_construction(&w.forms, &dirs, epsilon)
}

/// The `2k`-atom single-letter ensemble `±φ_{2π(j−1)/k}`, uniform weights.
pub fn cardinality_solution(w: &WindmillInstance, epsilon: f64) -> Result<CouplingEnsemble> {
    require_three(w)?;
    let lift = |v: &[f64]| w.forms[0].lift(v);
    let mut atoms = Vec::with_capacity(2 * w.k);
    for a in &w.angles {
        let l = lift(&phi(*a));
        let neg = l.iter().map(|x| -x).collect();
        atoms.push(l);
        atoms.push(neg);
    }
    let weights = ProbDist::new(vec![1.0 / (2 * w.k) as f64; 2 * w.k])?;
    CouplingEnsemble::new(weights, atoms, 1, epsilon)
}

/// `(α, minᵢ cos²(α − θᵢ))` at `points` angles over `[0, π)`.
pub fn min_efficiency_curve(w: &WindmillInstance, points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|g| {
            let a = PI * g as f64 / points as f64;
            let x = phi(a);
            let v = w
                .forms
                .iter()
                .map(|f| f.value(&x))
                .fold(f64::INFINITY, f64::min);
            (a, v)
        })
        .collect()
}

/// Uniform input on `n` symbols with receiver `a` told only whether `X = a`.
/// For `n = 3` the tangent forms are exactly the 3-windmill, up to a
/// rotation of the tangent plane.
pub fn indicator_channels(n: usize) -> Result<(ProbDist, Vec<Channel>)> {
    let p = ProbDist::uniform(n)?;
    let channels = (0..n)
        .map(|a| {
            let miss: Vec<f64> = (0..n).map(|x| if x == a { 0.0 } else { 1.0 }).collect();
            let hit: Vec<f64> = (0..n).map(|x| if x == a { 1.0 } else { 0.0 }).collect();
            Channel::from_rows(&[miss, hit])
        })
        .collect::<Result<_>>()?;
    Ok((p, channels))
}

use crate::error::Result;
use crate::linalg::sym_eigen_desc;

use super::barrier::central_path;

use super::{check_forms, combine, dedupe, QuadraticForm, SolverOptions};

const GOLDEN_TOL: f64 = 1e-10;
const PATTERN_START: f64 = 1e-4;
const PATTERN_FLOOR: f64 = 1e-12;
/// Below this the barrier slacks lose their relative precision.
pub(crate) const BARRIER_GAP: f64 = 1e-9;

fn lambda_max(forms: &[QuadraticForm], lambda: &[f64]) -> Result<f64> {
    let (values, _) = sym_eigen_desc(&combine(forms, lambda))?;
    Ok(values[0])
}

fn golden_pair(forms: &[QuadraticForm]) -> Result<(f64, Vec<f64>)> {
    let f = |t: f64| lambda_max(forms, &[1.0 - t, t]);
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (f(mid)?, mid);
    for t in [0.0, 1.0, c, d] {
        let v = f(t)?;
        if v < best.0 {
            best = (v, t);
        }
    }
    Ok((best.0, vec![1.0 - best.1, best.1]))
}

/// Barrier weights, then pairwise mass transfers starting at step `1e-4`.
fn barrier_then_pattern(forms: &[QuadraticForm], max_evals: usize) -> Result<(f64, Vec<f64>)> {
    let k = forms.len();
    let mats: Vec<_> = forms.iter().map(|f| f.matrix().clone()).collect();
    let central = central_path(&mats, BARRIER_GAP)?;
    let mut best_lambda = central.lambda;
    let mut best = lambda_max(forms, &best_lambda)?;
    let uniform = vec![1.0 / k as f64; k];
    let at_uniform = lambda_max(forms, &uniform)?;
    if at_uniform < best {
        best = at_uniform;
        best_lambda = uniform;
    }

    let mut delta = PATTERN_START;
    let mut evals = 0;
    while delta > PATTERN_FLOOR && evals < max_evals {
        let mut improved = false;
        for i in 0..k {
            for j in 0..k {
                if i == j || best_lambda[i] <= 0.0 {
                    continue;
                }
                let moved = delta.min(best_lambda[i]);
                let mut trial = best_lambda.clone();
                trial[i] -= moved;
                trial[j] += moved;
                let value = lambda_max(forms, &trial)?;
                evals += 1;
                if value < best {
                    best = value;
                    best_lambda = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    Ok((best, best_lambda))
}

/// Upper bound `min_{λ∈Δ} λ_max(Σ λᵢAᵢ)` on every coupling strategy, with its
/// minimizing weights indexed like `forms`.
pub fn maxmin_dual(forms: &[QuadraticForm], opts: &SolverOptions) -> Result<(f64, Vec<f64>)> {
    check_forms(forms)?;
    let (reps, _) = dedupe(forms);
    let unique: Vec<QuadraticForm> = reps.iter().map(|&r| forms[r].clone()).collect();
    let (value, lambda) = match unique.len() {
        1 => (lambda_max(&unique, &[1.0])?, vec![1.0]),
        2 => golden_pair(&unique)?,
        _ => barrier_then_pattern(&unique, 50 * opts.max_iters)?,
    };
    let mut full = vec![0.0; forms.len()];
    for (&r, l) in reps.iter().zip(lambda) {
        full[r] = l;
    }
    Ok((value, full))
}

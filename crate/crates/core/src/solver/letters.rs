use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{kron_vec, norm_sq, sym_eigen_desc};
use crate::tensor::{TensorOperator, DEFAULT_SIZE_CAP};

use super::{check_forms, CouplingEnsemble, QuadraticForm};

const TOP_TOL: f64 = 1e-9;
const RANK_FLOOR: f64 = 1e-12;

/// Per-channel efficiencies of an n-letter construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KLetterResult {
    /// `(1/n) Σⱼ dⱼᵀAᵢdⱼ`.
    pub algebraic: Vec<f64>,
    /// `‖Bᵢ^{⊗n}L‖² / ‖L‖²` by lazy tensor application.
    pub tensor: Vec<f64>,
    /// `±L/‖L‖` on n letters.
    pub ensemble: CouplingEnsemble,
}

fn check_shared_frame(forms: &[QuadraticForm]) -> Result<()> {
    let first = &forms[0];
    for f in &forms[1..] {
        if f.full_len() != first.full_len() {
            return Err(Error::DimensionMismatch {
                expected: first.full_len(),
                found: f.full_len(),
            });
        }
        let deviation = f
            .top()
            .iter()
            .zip(first.top())
            .map(|(a, b)| (a - b).abs())
            .chain((f.basis() - first.basis()).iter().map(|x| x.abs()))
            .fold(0.0_f64, f64::max);
        if deviation > TOP_TOL {
            return Err(Error::BasisMismatch { deviation });
        }
    }
    Ok(())
}

/// Puts direction `dⱼ` in slot `j` and the top vector elsewhere, summed over
/// `j`: the first-order part of `(P + εd₁) ⊗ ⋯ ⊗ (P + εdₙ)`.
pub fn k_letter_construction(
    forms: &[QuadraticForm],
    directions: &[Vec<f64>],
    epsilon: f64,
) -> Result<KLetterResult> {
    let m = check_forms(forms)?;
    check_shared_frame(forms)?;
    let n = directions.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut units = Vec::with_capacity(n);
    for d in directions {
        if d.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: d.len(),
            });
        }
        let len = norm_sq(d).sqrt();
        if len == 0.0 {
            return Err(Error::ZeroPerturbation);
        }
        units.push(d.iter().map(|x| x / len).collect::<Vec<f64>>());
    }
    let full = forms[0].full_len();
    let size = (full as f64).powi(n as i32);
    if size > DEFAULT_SIZE_CAP as f64 {
        return Err(Error::SizeCap {
            size: size as usize,
            cap: DEFAULT_SIZE_CAP,
        });
    }

    let top = forms[0].top();
    let mut l = vec![0.0; full.pow(n as u32)];
    for (j, d) in units.iter().enumerate() {
        let lifted = forms[0].lift(d);
        let mut term = if j == 0 { lifted.clone() } else { top.to_vec() };
        for slot in 1..n {
            term = kron_vec(&term, if slot == j { &lifted } else { top });
        }
        for (a, b) in l.iter_mut().zip(&term) {
            *a += b;
        }
    }
    let total = norm_sq(&l);
    let algebraic = forms
        .iter()
        .map(|f| units.iter().map(|d| f.value(d)).sum::<f64>() / n as f64)
        .collect();
    let mut tensor = Vec::with_capacity(forms.len());
    for f in forms {
        let op = TensorOperator::new(f.operator().clone(), n);
        tensor.push(op.image_norm_sq(&l)? / total);
    }
    let len = total.sqrt();
    let ensemble = CouplingEnsemble::binary(l.iter().map(|x| x / len).collect(), n, epsilon)?;
    Ok(KLetterResult {
        algebraic,
        tensor,
        ensemble,
    })
}

/// `n` unit directions whose average outer product is the trace-1 PSD matrix
/// `m`, so that `k_letter_construction` on them reproduces `tr(AᵢM)`.
///
/// Starts from the scaled eigenvectors of `n·M` and rotates pairs of columns
/// until every column has unit norm. Needs `n ≥ rank(M)`.
pub fn letter_schedule(m: &DMatrix<f64>, n: usize) -> Result<Vec<Vec<f64>>> {
    let dim = m.nrows();
    let (vals, vecs) = sym_eigen_desc(m)?;
    let trace: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    if !(trace > 0.0) {
        return Err(Error::ZeroPerturbation);
    }
    let rank = vals.iter().filter(|&&v| v > RANK_FLOOR * trace).count();
    if n < rank {
        return Err(Error::DimensionMismatch {
            expected: rank,
            found: n,
        });
    }
    let mut cols: Vec<DVector<f64>> = (0..n)
        .map(|j| {
            if j < rank {
                vecs.column(j) * (n as f64 * vals[j] / trace).sqrt()
            } else {
                DVector::zeros(dim)
            }
        })
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.norm_squared()).collect();
    let mut open: Vec<usize> = (0..n).collect();
    while open.len() > 1 {
        let (hi_pos, lo_pos) = open.iter().enumerate().fold((0, 0), |(h, l), (p, &i)| {
            (
                if norms[i] > norms[open[h]] { p } else { h },
                if norms[i] < norms[open[l]] { p } else { l },
            )
        });
        let (i, j) = (open[hi_pos], open[lo_pos]);
        let (a, b) = (norms[i], norms[j]);
        if a - b <= 1e-15 {
            break;
        }
        let c2 = ((1.0 - b) / (a - b)).clamp(0.0, 1.0);
        let (c, s) = (c2.sqrt(), (1.0 - c2).sqrt());
        let u = &cols[i] * c + &cols[j] * s;
        let v = &cols[j] * c - &cols[i] * s;
        cols[i] = u;
        cols[j] = v;
        norms[i] = 1.0;
        norms[j] = a + b - 1.0;
        open.remove(hi_pos);
    }
    Ok(cols
        .into_iter()
        .map(|c| {
            let len = c.norm();
            c.iter().map(|x| x / len).collect()
        })
        .collect())
}

/// `Σ_u w_u x_u x_uᵀ` in tangent coordinates of a single-letter ensemble.
pub fn second_moment(e: &CouplingEnsemble, form: &QuadraticForm) -> Result<DMatrix<f64>> {
    if e.letters() != 1 || e.atoms()[0].len() != form.full_len() {
        return Err(Error::DimensionMismatch {
            expected: form.full_len(),
            found: e.atoms()[0].len(),
        });
    }
    let m = form.dim();
    let mut out = DMatrix::zeros(m, m);
    for (w, a) in e.weights().as_slice().iter().zip(e.atoms()) {
        let x = DVector::from_vec(form.project(a));
        out += &x * x.transpose() * *w;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_dtm;
    use crate::prob::{Channel, ProbDist};
    use crate::solver::{maxmin_ensemble, solve_p2p, tangent_form, Optimizer, SolverOptions};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rank_one(theta: f64) -> QuadraticForm {
        let (c, s) = (theta.cos(), theta.sin());
        QuadraticForm::from_matrix(DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]))
            .unwrap()
    }

    #[test]
    fn three_rotations_give_half() {
        let forms: Vec<_> = (0..3)
            .map(|i| rank_one(2.0 * PI * i as f64 / 3.0))
            .collect();
        for theta in [0.0, 0.7] {
            let dirs: Vec<Vec<f64>> = (0..3)
                .map(|j| {
                    let a = theta + 2.0 * PI * j as f64 / 3.0;
                    vec![a.cos(), a.sin()]
                })
                .collect();
            let r = k_letter_construction(&forms, &dirs, 0.01).unwrap();
            for (a, t) in r.algebraic.iter().zip(&r.tensor) {
                assert_abs_diff_eq!(*a, 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(*t, 0.5, epsilon = 1e-12);
            }
            assert_eq!(r.ensemble.letters(), 3);
            assert_eq!(r.ensemble.atoms()[0].len(), 27);
        }
    }

    #[test]
    fn one_letter_is_p2p() {
        let p = ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let d = build_dtm(&Channel::symmetric(3, 0.15).unwrap(), &p).unwrap();
        let f = tangent_form(&d).unwrap();
        let cap = crate::geom::local_capacity(&d).unwrap();
        let dir = f.project(cap.direction.as_slice());
        let r = k_letter_construction(&[f], &[dir], 0.01).unwrap();
        assert_abs_diff_eq!(
            r.algebraic[0],
            solve_p2p(&d).unwrap().value,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(r.tensor[0], r.algebraic[0], epsilon = 1e-12);
    }

    #[test]
    fn schedule_reproduces_mixing_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.1, 0.3, 0.05, 0.0, 0.05, 0.2]);
        for n in 3..6 {
            let dirs = letter_schedule(&m, n).unwrap();
            let mut avg = DMatrix::zeros(3, 3);
            for d in &dirs {
                let v = DVector::from_column_slice(d);
                assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
                avg += &v * v.transpose() / n as f64;
            }
            assert!((avg - &m).amax() < 1e-12);
        }
        assert!(matches!(
            letter_schedule(&m, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ensemble_schedule_matches_traces() {
        let forms: Vec<_> = [0.0, 1.1, 2.3, 2.9].iter().map(|&t| rank_one(t)).collect();
        let s = maxmin_ensemble(&forms, &SolverOptions::default()).unwrap();
        let Optimizer::Ensemble(e) = &s.optimizer else {
            panic!()
        };
        let m = second_moment(e, &forms[0]).unwrap();
        let dirs = letter_schedule(&m, 4).unwrap();
        let r = k_letter_construction(&forms, &dirs, 0.01).unwrap();
        for ((a, t), v) in r.algebraic.iter().zip(&r.tensor).zip(&s.per_form_values) {
            assert_abs_diff_eq!(*a, *v, epsilon = 1e-9);
            assert_abs_diff_eq!(*t, *v, epsilon = 1e-9);
        }
    }
}

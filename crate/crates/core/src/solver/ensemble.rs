use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::Dtm;
use crate::linalg::sym_eigen_desc;

use super::barrier::central_path;
use super::dual::BARRIER_GAP;
use super::{
    check_forms, combine, dedupe, maxmin_rank1, tangent_form, CouplingEnsemble, MaxMinSolution,
    Optimizer, QuadraticForm, SolverOptions,
};

const EIGENSPACE_TOLS: [f64; 4] = [1e-9, 1e-6, 1e-4, 1e-2];
const ATOM_FLOOR: f64 = 1e-12;
const TOP_TOL: f64 = 1e-9;

fn trace_product(a: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    a.component_mul(m).sum()
}

fn min_trace(forms: &[QuadraticForm], m: &DMatrix<f64>) -> f64 {
    forms
        .iter()
        .map(|f| trace_product(f.matrix(), m))
        .fold(f64::INFINITY, f64::min)
}

fn truncate_rank(m: &DMatrix<f64>, pairs: usize) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen_desc(m)?;
    let kept: f64 = vals.iter().take(pairs).map(|v| v.max(0.0)).sum();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (j, v) in vals.iter().take(pairs).enumerate() {
        out += vecs.column(j) * vecs.column(j).transpose() * (v.max(0.0) / kept);
    }
    Ok(out)
}

/// Best trace-1 PSD mixing matrix for `max_M minᵢ tr(AᵢM)`, built on the top
/// eigenspace of the dual matrix `Σλᵢ*Aᵢ`, emitted as `±` atom pairs.
pub fn maxmin_ensemble(forms: &[QuadraticForm], opts: &SolverOptions) -> Result<MaxMinSolution> {
    let m = check_forms(forms)?;
    let rank1 = maxmin_rank1(forms, opts)?;
    let (dual_value, dual_weights) = (rank1.dual_value, rank1.dual_weights.clone());
    let (reps, _) = dedupe(forms);
    let unique: Vec<QuadraticForm> = reps.iter().map(|&r| forms[r].clone()).collect();
    let lambda: Vec<f64> = reps.iter().map(|&r| dual_weights[r]).collect();
    let (vals, vecs) = sym_eigen_desc(&combine(&unique, &lambda))?;

    let Optimizer::Rank1(x) = &rank1.optimizer else {
        unreachable!("rank-1 solver returns a direction")
    };
    let xv = DVector::from_column_slice(x);
    let mut best = (rank1.value, &xv * xv.transpose());
    let mut dims: Vec<usize> = EIGENSPACE_TOLS
        .iter()
        .map(|tol| {
            vals.iter()
                .take_while(|&&v| v >= vals[0] - tol * vals[0].abs().max(1.0))
                .count()
        })
        .collect();
    dims.push(m);
    dims.dedup();
    for r in dims {
        if dual_value - best.0 <= opts.tol {
            break;
        }
        let e = vecs.columns(0, r).into_owned();
        let reduced: Vec<DMatrix<f64>> = unique
            .iter()
            .map(|f| e.transpose() * f.matrix() * &e)
            .collect();
        let s = central_path(&reduced, BARRIER_GAP)?.mix;
        let mm = &e * s * e.transpose();
        let v = min_trace(&unique, &mm);
        if v > best.0 {
            best = (v, mm);
        }
    }

    let pair_cap = opts.max_atoms.map(|a| (a / 2).max(1)).unwrap_or(m);
    let (vals_m, _) = sym_eigen_desc(&best.1)?;
    let rank = vals_m.iter().filter(|&&v| v > ATOM_FLOOR).count();
    let capped = rank > pair_cap;
    if capped {
        let truncated = truncate_rank(&best.1, pair_cap)?;
        let v = min_trace(&unique, &truncated);
        best = if v > rank1.value {
            (v, truncated)
        } else {
            (rank1.value, &xv * xv.transpose())
        };
    }
    let (value, mix) = best;
    if !capped && dual_value - value > opts.tol {
        return Err(Error::FeasibilityFailure {
            spread: dual_value - value,
        });
    }

    let (w, z) = sym_eigen_desc(&mix)?;
    let pairs: Vec<(f64, Vec<f64>)> = w
        .iter()
        .enumerate()
        .filter(|(_, &wj)| wj > ATOM_FLOOR)
        .map(|(j, &wj)| {
            let dir: Vec<f64> = z.column(j).iter().copied().collect();
            (wj, forms[0].lift(&dir))
        })
        .collect();
    let ensemble = CouplingEnsemble::from_pairs(pairs, 1, opts.epsilon)?;
    let per_form_values = forms
        .iter()
        .map(|f| trace_product(f.matrix(), &mix))
        .collect();
    Ok(MaxMinSolution {
        value,
        optimizer: Optimizer::Ensemble(ensemble),
        dual_weights,
        dual_value,
        gap: dual_value - value,
        per_form_values,
    })
}

/// Two-receiver common-message optimum, with the rank-1 solution certified
/// against the dual bound.
pub fn solve_broadcast2(d1: &Dtm, d2: &Dtm, opts: &SolverOptions) -> Result<MaxMinSolution> {
    let (t1, t2) = (d1.input_dist().sqrt(), d2.input_dist().sqrt());
    if t1.len() != t2.len() {
        return Err(Error::DimensionMismatch {
            expected: t1.len(),
            found: t2.len(),
        });
    }
    let deviation = t1
        .iter()
        .zip(&t2)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    if deviation > TOP_TOL {
        return Err(Error::BasisMismatch { deviation });
    }
    let forms = [tangent_form(d1)?, tangent_form(d2)?];
    let sol = maxmin_rank1(&forms, opts)?;
    if sol.gap > opts.tol {
        return Err(Error::GapDetected {
            value: sol.value,
            dual_value: sol.dual_value,
            gap: sol.gap,
        });
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_dtm;
    use crate::prob::{Channel, ProbDist};
    use crate::solver::{efficiency, EfficiencyMode};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rank_one(theta: f64) -> QuadraticForm {
        let (c, s) = (theta.cos(), theta.sin());
        QuadraticForm::from_matrix(DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]))
            .unwrap()
    }

    fn diag(a: f64, b: f64) -> QuadraticForm {
        QuadraticForm::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]))).unwrap()
    }

    #[test]
    fn windmill_three_reaches_half() {
        let forms: Vec<_> = (0..3)
            .map(|i| rank_one(2.0 * PI * i as f64 / 3.0))
            .collect();
        let s = maxmin_ensemble(&forms, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(s.value, 0.5, epsilon = 1e-9);
        let Optimizer::Ensemble(e) = &s.optimizer else {
            panic!()
        };
        assert!(e.cardinality() <= 4);
        for v in efficiency(e, &forms, EfficiencyMode::Quadratic).unwrap() {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn single_form_gives_binary_ensemble() {
        let s = maxmin_ensemble(&[diag(0.2, 0.7)], &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(s.value, 0.7, epsilon = 1e-12);
        let Optimizer::Ensemble(e) = &s.optimizer else {
            panic!()
        };
        assert_eq!(e.cardinality(), 2);
    }

    #[test]
    fn orthogonal_pair_mixes_axes() {
        let forms = [diag(1.0, 0.0), diag(0.0, 1.0)];
        let s = maxmin_ensemble(&forms, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(s.value, 0.5, epsilon = 1e-9);
        assert!(
            s.value
                >= maxmin_rank1(&forms, &SolverOptions::default())
                    .unwrap()
                    .value
                    - 1e-9
        );
    }

    #[test]
    fn cardinality_cap_falls_back() {
        let forms: Vec<_> = (0..3)
            .map(|i| rank_one(2.0 * PI * i as f64 / 3.0))
            .collect();
        let opts = SolverOptions {
            max_atoms: Some(2),
            ..SolverOptions::default()
        };
        let s = maxmin_ensemble(&forms, &opts).unwrap();
        assert_abs_diff_eq!(s.value, 0.25, epsilon = 1e-9);
        let Optimizer::Ensemble(e) = &s.optimizer else {
            panic!()
        };
        assert_eq!(e.cardinality(), 2);
    }

    #[test]
    fn broadcast2_same_channel_is_p2p() {
        let p = ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let d = build_dtm(&Channel::symmetric(3, 0.2).unwrap(), &p).unwrap();
        let s = solve_broadcast2(&d, &d, &SolverOptions::default()).unwrap();
        let sigma = crate::geom::local_capacity(&d).unwrap().sigma;
        assert_abs_diff_eq!(s.value, sigma * sigma, epsilon = 1e-9);
        assert!(s.gap.abs() <= 1e-9);
    }

    #[test]
    fn broadcast2_rejects_distinct_inputs() {
        let w = Channel::symmetric(3, 0.2).unwrap();
        let d1 = build_dtm(&w, &ProbDist::uniform(3).unwrap()).unwrap();
        let d2 = build_dtm(&w, &ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
        assert!(matches!(
            solve_broadcast2(&d1, &d2, &SolverOptions::default()),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn broadcast2_embedded_orthogonal_pair() {
        // identity-like forms on ternary input: erase one tangent axis each
        let p = ProbDist::uniform(3).unwrap();
        let q = crate::linalg::tangent_basis(&p.sqrt());
        let mut forms = Vec::new();
        for axis in 0..2 {
            // output = (top component, tangent component along `axis`)
            let mut op = DMatrix::zeros(2, 3);
            for x in 0..3 {
                op[(0, x)] = p.sqrt()[x];
                op[(1, x)] = q[(x, axis)];
            }
            forms.push(QuadraticForm::from_operator(op, p.sqrt(), q.clone()).unwrap());
        }
        let s = maxmin_rank1(&forms, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(s.value, 0.5, epsilon = 1e-12);
        assert!(s.gap <= 1e-6);
    }
}

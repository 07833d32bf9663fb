use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{apply_sign_convention, sym_eigen_desc, top_eigen};

use super::{
    check_forms, combine, dedupe, maxmin_dual, MaxMinSolution, Optimizer, QuadraticForm,
    SolverOptions,
};

const EIGENSPACE_TOL: f64 = 1e-6;
const ACTIVE_TOLS: [f64; 3] = [1e-2, 1e-4, 1e-7];
const NEWTON_STEPS: usize = 60;
const REFINE_FLOOR: f64 = 1e-13;

fn normalize(mut x: Vec<f64>) -> Option<Vec<f64>> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 1e-300) || !n.is_finite() {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= n);
    Some(x)
}

fn values(forms: &[QuadraticForm], x: &[f64]) -> Vec<f64> {
    forms.iter().map(|f| f.value(x)).collect()
}

fn objective(forms: &[QuadraticForm], x: &[f64]) -> f64 {
    values(forms, x).into_iter().fold(f64::INFINITY, f64::min)
}

fn ascend(forms: &[QuadraticForm], start: Vec<f64>, iters: usize, scale: f64) -> (f64, Vec<f64>) {
    let mut x = start;
    let mut best = (objective(forms, &x), x.clone());
    for t in 0..iters {
        let vals = values(forms, &x);
        let (worst, _) =
            vals.iter().enumerate().fold(
                (0, f64::INFINITY),
                |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
            );
        let xv = DVector::from_column_slice(&x);
        let g = forms[worst].matrix() * &xv * 2.0;
        let tangent = &g - &xv * xv.dot(&g);
        if tangent.norm() < 1e-14 {
            break;
        }
        let step = 0.5 / (scale * ((t + 1) as f64).sqrt());
        let moved: Vec<f64> = (xv + tangent * step).iter().copied().collect();
        match normalize(moved) {
            Some(next) => x = next,
            None => break,
        }
        let v = objective(forms, &x);
        if v > best.0 {
            best = (v, x.clone());
        }
    }
    best
}

/// Gauss-Newton on the KKT system of `max t` s.t. `xᵀAᵢx ≥ t` over the
/// active set, `‖x‖ = 1`. Returns the input when no improvement is found.
fn polish(forms: &[QuadraticForm], x0: &[f64]) -> (f64, Vec<f64>) {
    let m = x0.len();
    let base = objective(forms, x0);
    let mut best = (base, x0.to_vec());
    for tol in ACTIVE_TOLS {
        let active: Vec<usize> = values(forms, x0)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= base + tol)
            .map(|(i, _)| i)
            .collect();
        let s = active.len();
        let n = m + s + 1;
        let mut z = DVector::zeros(n);
        for i in 0..m {
            z[i] = x0[i];
        }
        for j in 0..s {
            z[m + j] = 1.0 / s as f64;
        }
        z[m + s] = base;
        for _ in 0..NEWTON_STEPS {
            let x = z.rows(0, m).into_owned();
            let t = z[m + s];
            let mut combo = DMatrix::zeros(m, m);
            for (j, &i) in active.iter().enumerate() {
                combo += forms[i].matrix() * z[m + j];
            }
            let rows = m + s + 2;
            let mut r = DVector::zeros(rows);
            let mut jac = DMatrix::zeros(rows, n);
            let stat = &combo * &x - &x * t;
            r.rows_mut(0, m).copy_from(&stat);
            jac.view_mut((0, 0), (m, m))
                .copy_from(&(&combo - DMatrix::identity(m, m) * t));
            for (j, &i) in active.iter().enumerate() {
                let ax = forms[i].matrix() * &x;
                jac.view_mut((0, m + j), (m, 1)).copy_from(&ax);
                r[m + j] = x.dot(&ax) - t;
                jac.view_mut((m + j, 0), (1, m))
                    .copy_from(&(ax.transpose() * 2.0));
                jac[(m + j, m + s)] = -1.0;
                jac[(m + s, m + j)] = 1.0;
            }
            jac.view_mut((0, m + s), (m, 1)).copy_from(&(-&x));
            r[m + s] = z.rows(m, s).sum() - 1.0;
            r[m + s + 1] = x.dot(&x) - 1.0;
            jac.view_mut((m + s + 1, 0), (1, m))
                .copy_from(&(x.transpose() * 2.0));
            if r.norm() < 1e-15 {
                break;
            }
            let svd = jac.svd(true, true);
            match svd.solve(&(-&r), 1e-13) {
                Ok(delta) => z += delta,
                Err(_) => break,
            }
            if z.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        let candidate: Vec<f64> = z.rows(0, m).iter().copied().collect();
        if let Some(x) = normalize(candidate) {
            let v = objective(forms, &x);
            if v > best.0 {
                best = (v, x);
            }
        }
    }
    best
}

fn better(a: (f64, Vec<f64>), b: (f64, Vec<f64>)) -> (f64, Vec<f64>) {
    if a.0 > b.0 {
        a
    } else {
        b
    }
}

fn angle_point(a: f64) -> Vec<f64> {
    vec![a.cos(), a.sin()]
}

fn sweep_circle(forms: &[QuadraticForm], grid: usize) -> (f64, Vec<f64>) {
    let grid = grid.max(8);
    let step = std::f64::consts::PI / grid as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for g in 0..grid {
        let a = g as f64 * step;
        let v = objective(forms, &angle_point(a));
        if v > best.0 {
            best = (v, a);
        }
    }
    // golden-section refinement inside the neighbouring cells
    let h = |a: f64| objective(forms, &angle_point(a));
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (h(c), h(d));
    while hi - lo > REFINE_FLOOR {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = h(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = h(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let refined = h(mid);
    if refined > best.0 {
        (refined, angle_point(mid))
    } else {
        (best.0, angle_point(best.1))
    }
}

fn sweep_sphere(forms: &[QuadraticForm], grid: usize) -> (f64, Vec<f64>) {
    let grid = grid.max(8);
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let mut best = (f64::NEG_INFINITY, vec![0.0, 0.0, 1.0]);
    // x and −x agree, so the upper hemisphere suffices
    for g in 0..grid {
        let z = 1.0 - (g as f64 + 0.5) / grid as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = g as f64 * golden_angle;
        let x = vec![r * phi.cos(), r * phi.sin(), z];
        let v = objective(forms, &x);
        if v > best.0 {
            best = (v, x);
        }
    }
    let mut step = 2.0 * (2.0 * std::f64::consts::PI / grid as f64).sqrt();
    while step > REFINE_FLOOR {
        let x = DVector::from_column_slice(&best.1);
        let basis = crate::linalg::tangent_basis(&best.1);
        let mut improved = false;
        for c in 0..2 {
            for sign in [1.0, -1.0] {
                let moved: Vec<f64> = (&x + basis.column(c) * (sign * step))
                    .iter()
                    .copied()
                    .collect();
                if let Some(y) = normalize(moved) {
                    let v = objective(forms, &y);
                    if v > best.0 {
                        best = (v, y);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Unit vectors in the top eigenspace of `Σλᵢ*Aᵢ` that equalize pairs of
/// forms. With two receivers these attain the dual value.
fn balanced_candidates(forms: &[QuadraticForm], lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (vals, vecs) = sym_eigen_desc(&combine(forms, lambda))?;
    let top = vals[0];
    let r = vals
        .iter()
        .take_while(|&&v| v >= top - EIGENSPACE_TOL * top.abs().max(1.0))
        .count();
    let e = vecs.columns(0, r).into_owned();
    let mut out: Vec<Vec<f64>> = (0..r)
        .map(|j| e.column(j).iter().copied().collect())
        .collect();
    if r < 2 {
        return Ok(out);
    }
    for i in 0..forms.len() {
        for j in i + 1..forms.len() {
            let diff = e.transpose() * (forms[i].matrix() - forms[j].matrix()) * &e;
            let (dv, dz) = sym_eigen_desc(&diff)?;
            let (hi, lo) = (dv[0], dv[r - 1]);
            if hi < 0.0 || lo > 0.0 {
                continue;
            }
            let w = if hi - lo > 0.0 { hi / (hi - lo) } else { 0.5 };
            let z = dz.column(0) * (1.0 - w).sqrt() + dz.column(r - 1) * w.sqrt();
            out.push((&e * z).iter().copied().collect());
        }
    }
    Ok(out)
}

/// Best single direction for `max_{‖x‖=1} minᵢ xᵀAᵢx`.
///
/// The value is a lower bound on the true optimum: the maximum over seeded
/// multi-start ascent, eigenvector starts and, for tangent dimension 2 or 3,
/// an exhaustive sweep of `opts.grid` points. The dual bound is attached.
pub fn maxmin_rank1(forms: &[QuadraticForm], opts: &SolverOptions) -> Result<MaxMinSolution> {
    let m = check_forms(forms)?;
    let (reps, _) = dedupe(forms);
    let unique: Vec<QuadraticForm> = reps.iter().map(|&r| forms[r].clone()).collect();
    let (dual_value, dual_weights) = maxmin_dual(forms, opts)?;
    let scale = unique
        .iter()
        .map(|f| f.matrix().amax())
        .fold(0.0_f64, f64::max)
        .max(1e-12);

    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    if m == 1 {
        candidates.push((objective(&unique, &[1.0]), vec![1.0]));
    } else {
        let mut starts: Vec<Vec<f64>> = Vec::new();
        for f in &unique {
            starts.push(top_eigen(f.matrix())?.1.iter().copied().collect());
        }
        let uniform = vec![1.0 / unique.len() as f64; unique.len()];
        starts.push(
            top_eigen(&combine(&unique, &uniform))?
                .1
                .iter()
                .copied()
                .collect(),
        );
        let lambda: Vec<f64> = reps.iter().map(|&r| dual_weights[r]).collect();
        starts.extend(balanced_candidates(&unique, &lambda)?);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.starts {
            let raw: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            if let Some(x) = normalize(raw) {
                starts.push(x);
            }
        }
        for s in starts {
            let Some(s) = normalize(s) else { continue };
            let direct = (objective(&unique, &s), s.clone());
            let ascended = ascend(&unique, s, opts.max_iters, scale);
            let local = better(ascended, direct);
            candidates.push(better(polish(&unique, &local.1), local));
        }
        if m == 2 {
            let swept = sweep_circle(&unique, opts.grid);
            candidates.push(better(polish(&unique, &swept.1), swept));
        } else if m == 3 {
            let swept = sweep_sphere(&unique, opts.grid);
            candidates.push(better(polish(&unique, &swept.1), swept));
        }
    }

    let (mut value, mut x) =
        candidates
            .into_iter()
            .fold((f64::NEG_INFINITY, Vec::new()), |acc, c| {
                if c.0 > acc.0 {
                    c
                } else {
                    acc
                }
            });
    apply_sign_convention(&mut x);
    value = value.max(0.0);
    debug_assert!(value <= dual_value + 1e-9, "{value} > {dual_value}");
    let per_form_values = values(forms, &x);
    Ok(MaxMinSolution {
        value,
        optimizer: Optimizer::Rank1(x),
        dual_weights,
        dual_value,
        gap: dual_value - value,
        per_form_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn form(m: DMatrix<f64>) -> QuadraticForm {
        QuadraticForm::from_matrix(m).unwrap()
    }

    fn rank_one(theta: f64) -> QuadraticForm {
        let (c, s) = (theta.cos(), theta.sin());
        form(DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]))
    }

    #[test]
    fn single_form_gives_top_eigenpair() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.1, 0.4, 0.05, 0.0, 0.05, 0.2]);
        let (top, v) = top_eigen(&a).unwrap();
        let s = maxmin_rank1(&[form(a)], &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(s.value, top, epsilon = 1e-10);
        let Optimizer::Rank1(x) = s.optimizer else {
            panic!()
        };
        assert_abs_diff_eq!(
            x.iter()
                .zip(v.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs(),
            1.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn orthogonal_pair() {
        let forms = [
            form(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))),
            form(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))),
        ];
        let s = maxmin_rank1(&forms, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(s.value, 0.5, epsilon = 1e-12);
        let Optimizer::Rank1(x) = s.optimizer else {
            panic!()
        };
        assert_abs_diff_eq!(x[0].abs(), 0.5_f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(x[1].abs(), 0.5_f64.sqrt(), epsilon = 1e-9);
        assert!(s.gap.abs() < 1e-9);
    }

    #[test]
    fn three_rotated_projections() {
        let forms: Vec<_> = (0..3)
            .map(|i| rank_one(2.0 * PI * i as f64 / 3.0))
            .collect();
        let s = maxmin_rank1(&forms, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(s.value, 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(s.dual_value, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.gap, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn three_dim_pair_closes_gap() {
        let a = DMatrix::from_row_slice(3, 3, &[0.6, 0.1, 0.0, 0.1, 0.2, 0.1, 0.0, 0.1, 0.3]);
        let b = DMatrix::from_row_slice(3, 3, &[0.1, 0.0, 0.05, 0.0, 0.5, 0.0, 0.05, 0.0, 0.4]);
        let s = maxmin_rank1(&[form(a), form(b)], &SolverOptions::default()).unwrap();
        assert!(s.gap < 1e-9, "gap {}", s.gap);
    }

    #[test]
    fn deterministic_under_seed() {
        let forms: Vec<_> = (0..5).map(|i| rank_one(0.4 * i as f64)).collect();
        let opts = SolverOptions::default();
        assert_eq!(
            maxmin_rank1(&forms, &opts).unwrap(),
            maxmin_rank1(&forms, &opts).unwrap()
        );
    }
}

//! Small dense helpers shared by the geometry and solver modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITERS: usize = 10_000;

/// Flips `v` so that its entry of largest magnitude is positive; ties go to
/// the lowest index. Returns whether a flip happened.
pub fn apply_sign_convention(v: &mut [f64]) -> bool {
    let max = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return false;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max - 1e-12 * max)
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

/// Orthonormal basis of the complement of `top`, by Gram-Schmidt over the
/// standard basis in index order. Columns are the tangent directions.
pub fn tangent_basis(top: &[f64]) -> DMatrix<f64> {
    let n = top.len();
    let norm = top.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut accepted: Vec<DVector<f64>> =
        vec![DVector::from_iterator(n, top.iter().map(|x| x / norm))];
    for i in 0..n {
        if accepted.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &accepted {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let len = v.norm();
        if len > 1e-8 {
            accepted.push(v / len);
        }
    }
    let mut basis = DMatrix::zeros(n, n.saturating_sub(1));
    for (j, q) in accepted.iter().skip(1).enumerate() {
        basis.set_column(j, q);
    }
    basis
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending, each
/// eigenvector under [`apply_sign_convention`].
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        apply_sign_convention(&mut col);
        vectors.set_column(j, &DVector::from_vec(col));
    }
    Ok((values, vectors))
}

/// Largest eigenvalue and a unit eigenvector.
pub fn top_eigen(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let (values, vectors) = sym_eigen_desc(m)?;
    Ok((values[0], vectors.column(0).into_owned()))
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (i as f64 + 1.0);
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Kronecker product of vectors with the first factor varying fastest:
/// `out[i + |a|·j] = a[i]·b[j]`.
pub fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for bj in b {
        out.extend(a.iter().map(|ai| ai * bj));
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tangent_basis_is_orthonormal_complement() {
        let p: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
        let top: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
        let q = tangent_basis(&top);
        assert_eq!(q.shape(), (4, 3));
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-14);
        let t = DVector::from_vec(top);
        assert!((q.transpose() * t).amax() < 1e-14);
    }

    #[test]
    fn tangent_basis_uniform_ternary_first_column() {
        let top = vec![1.0 / 3.0_f64.sqrt(); 3];
        let q = tangent_basis(&top);
        let expected = [2.0, -1.0, -1.0].map(|x| x / 6.0_f64.sqrt());
        for i in 0..3 {
            assert_abs_diff_eq!(q[(i, 0)], expected[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        assert!(apply_sign_convention(&mut v));
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut tie = vec![-0.5, 0.5];
        apply_sign_convention(&mut tie);
        assert_eq!(tie, vec![0.5, -0.5]);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        for x in &p {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn kron_vec_first_slot_fastest() {
        assert_eq!(
            kron_vec(&[1.0, 2.0], &[10.0, 20.0]),
            vec![10.0, 20.0, 20.0, 40.0]
        );
    }
}

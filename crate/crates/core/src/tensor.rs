//! Multi-letter structure: Kronecker powers of distributions and DTMs.
//!
//! Tensor indices are little-endian: in a vector over `Xⁿ`, the symbol of
//! slot 1 varies fastest, so multi-index `(x₁, …, xₙ)` sits at flat position
//! `x₁ + |X|·x₂ + … + |X|ⁿ⁻¹·xₙ`. The product `a ⊗ b` written in docs means
//! `a` in slot 1 and `b` in slot 2 (see [`crate::linalg::kron_vec`]).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{Dtm, SvdResult};
use crate::linalg::norm_sq;
use crate::prob::ProbDist;

/// Default cap on the number of entries of an n-letter vector.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

/// Default cap on either side of a materialized Kronecker power.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

const BASIS_TOL: f64 = 1e-9;

fn checked_pow(base: usize, n: usize, cap: usize) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..n {
        size = size.saturating_mul(base);
        if size > cap {
            return Err(Error::SizeCap { size, cap });
        }
    }
    Ok(size)
}

/// Applies `m` (rows × cols) along every slot of an n-slot tensor whose slots
/// all have dimension `cols`. Cost is O(n · rows · cols^n) for square `m`.
pub fn apply_each_slot(m: &DMatrix<f64>, x: &[f64], letters: usize) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut dims = vec![cols; letters];
    let mut cur = x.to_vec();
    for slot in 0..letters {
        let stride: usize = dims[..slot].iter().product();
        let outer: usize = dims[slot + 1..].iter().product();
        let mut next = vec![0.0; stride * rows * outer];
        for b in 0..outer {
            for c in 0..cols {
                let src = &cur[stride * (c + cols * b)..stride * (c + cols * b + 1)];
                for r in 0..rows {
                    let w = m[(r, c)];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut next[stride * (r + rows * b)..stride * (r + rows * b + 1)];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        dims[slot] = rows;
        cur = next;
    }
    cur
}

/// The n-th Kronecker power of a matrix, applied lazily slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorOperator {
    matrix: DMatrix<f64>,
    letters: usize,
}

impl TensorOperator {
    pub fn new(matrix: DMatrix<f64>, letters: usize) -> Self {
        Self { matrix, letters }
    }

    pub fn from_dtm(d: &Dtm, letters: usize) -> Self {
        Self::new(d.matrix().clone(), letters)
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn input_len(&self) -> usize {
        self.matrix.ncols().pow(self.letters as u32)
    }

    pub fn output_len(&self) -> usize {
        self.matrix.nrows().pow(self.letters as u32)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                found: x.len(),
            });
        }
        Ok(apply_each_slot(&self.matrix, x, self.letters))
    }

    /// `‖B⊗ⁿ x‖²`.
    pub fn image_norm_sq(&self, x: &[f64]) -> Result<f64> {
        Ok(norm_sq(&self.apply(x)?))
    }

    /// Materializes the Kronecker power when both sides fit `dense_limit`.
    pub fn dense(&self, dense_limit: usize) -> Result<DMatrix<f64>> {
        checked_pow(self.matrix.nrows(), self.letters, dense_limit)?;
        checked_pow(self.matrix.ncols(), self.letters, dense_limit)?;
        let mut out = DMatrix::from_element(1, 1, 1.0);
        for _ in 0..self.letters {
            // identical factors, so factor order and slot order agree
            out = self.matrix.kronecker(&out);
        }
        Ok(out)
    }
}

/// `p^{⊗n}` under the default size cap.
pub fn kron_power_dist(p: &ProbDist, n: usize) -> Result<ProbDist> {
    kron_power_dist_capped(p, n, DEFAULT_SIZE_CAP)
}

pub fn kron_power_dist_capped(p: &ProbDist, n: usize, cap: usize) -> Result<ProbDist> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    checked_pow(p.len(), n, cap)?;
    let mut out = p.as_slice().to_vec();
    for _ in 1..n {
        out = crate::linalg::kron_vec(&out, p.as_slice());
    }
    Ok(ProbDist::from_computed(out))
}

/// Explicit `B^{⊗n}` under the default dense limit.
pub fn dense_kron(d: &Dtm, n: usize) -> Result<DMatrix<f64>> {
    TensorOperator::from_dtm(d, n).dense(DEFAULT_DENSE_LIMIT)
}

/// Little-endian multi-index of a flat position.
pub fn unflatten(mut flat: usize, dim: usize, letters: usize) -> Vec<usize> {
    (0..letters)
        .map(|_| {
            let i = flat % dim;
            flat /= dim;
            i
        })
        .collect()
}

pub fn flatten(index: &[usize], dim: usize) -> usize {
    index.iter().rev().fold(0, |acc, &i| acc * dim + i)
}

/// The largest `top_m` products `μ_{i₁}⋯μ_{iₙ}` with their tensor indices,
/// descending, ties in lexicographic index order.
pub fn product_singular_values(
    s: &SvdResult,
    n: usize,
    top_m: usize,
) -> Result<Vec<(f64, Vec<usize>)>> {
    let dim = s.singular_values.len();
    let total = checked_pow(dim, n, DEFAULT_SIZE_CAP)?;
    let mut all: Vec<(f64, Vec<usize>)> = (0..total)
        .map(|flat| {
            let index = unflatten(flat, dim, n);
            // multiply in a canonical order so permuted indices tie exactly
            let mut factors: Vec<f64> = index.iter().map(|&i| s.singular_values[i]).collect();
            factors.sort_by(|a, b| b.total_cmp(a));
            (factors.iter().product(), index)
        })
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    all.truncate(top_m);
    Ok(all)
}

/// Coefficients of an n-letter vector in the tensor basis `vᵢ₁ ⊗ ⋯ ⊗ vᵢₙ`
/// built from a DTM's right singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCoeffs {
    letters: usize,
    coeffs: Vec<f64>,
    basis: DMatrix<f64>,
}

impl ProductCoeffs {
    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Flat little-endian coefficient vector.
    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.coeffs[flatten(index, self.dim())]
    }

    /// `(index, coefficient)` pairs in flat order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let (dim, n) = (self.dim(), self.letters);
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(flat, &c)| (unflatten(flat, dim, n), c))
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.coeffs)
    }

    /// Norm of the coefficients whose index has two or more non-zero slots.
    pub fn mixed_norm(&self) -> f64 {
        self.entries()
            .filter(|(index, _)| index.iter().filter(|&&i| i != 0).count() >= 2)
            .map(|(_, c)| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// `Σ α · basis vector`.
    pub fn reconstruct(&self) -> Vec<f64> {
        apply_each_slot(&self.basis, &self.coeffs, self.letters)
    }
}

pub fn decompose(l: &[f64], s: &SvdResult, n: usize) -> Result<ProductCoeffs> {
    let dim = s.input_size();
    let size = checked_pow(dim, n, DEFAULT_SIZE_CAP)?;
    if l.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: l.len(),
        });
    }
    let vt = s.right_vectors.transpose();
    Ok(ProductCoeffs {
        letters: n,
        coeffs: apply_each_slot(&vt, l, n),
        basis: s.right_vectors.clone(),
    })
}

/// True when the coefficient mass on doubly-mixed indices is at most `tol`
/// (Euclidean norm), i.e. the perturbation is a sum of single-slot terms and
/// so a product distribution to first order.
pub fn is_product_form(c: &ProductCoeffs, tol: f64) -> bool {
    c.mixed_norm() <= tol
}

/// `Ψᵢⱼ = ⟨φᵢ, ϕⱼ⟩` over the non-top right singular vectors of two DTMs.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRelation {
    pub psi: DMatrix<f64>,
}

impl BasisRelation {
    /// `max |ΨΨᵀ − I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.psi.nrows();
        (&self.psi * self.psi.transpose() - DMatrix::identity(n, n)).amax()
    }
}

fn top_deviation(s1: &SvdResult, s2: &SvdResult) -> Result<f64> {
    if s1.input_size() != s2.input_size() {
        return Err(Error::DimensionMismatch {
            expected: s1.input_size(),
            found: s2.input_size(),
        });
    }
    Ok((s1.right_vectors.column(0) - s2.right_vectors.column(0)).amax())
}

pub fn basis_relation(s1: &SvdResult, s2: &SvdResult) -> Result<BasisRelation> {
    let deviation = top_deviation(s1, s2)?;
    if deviation > BASIS_TOL {
        return Err(Error::BasisMismatch { deviation });
    }
    let n = s1.input_size();
    let psi = DMatrix::from_fn(n - 1, n - 1, |i, j| {
        s1.right_vectors
            .column(i + 1)
            .dot(&s2.right_vectors.column(j + 1))
    });
    Ok(BasisRelation { psi })
}

/// Result of moving doubly-mixed coefficients onto single-slot indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PurifyOutcome {
    pub purified: Vec<f64>,
    /// `‖B₁⁽²⁾l‖, ‖B₂⁽²⁾l‖` before the move.
    pub norms_before: [f64; 2],
    pub norms_after: [f64; 2],
    /// No row receiving mixed mass already had a `(i,0)` coefficient.
    pub destinations_empty: bool,
    /// Whether the non-decrease of both output norms is claimed for this input.
    pub guaranteed: bool,
}

fn rebuild_matrix(s: &SvdResult) -> DMatrix<f64> {
    let r = s.left_vectors.ncols();
    let mut b = DMatrix::zeros(s.left_vectors.nrows(), s.input_size());
    for i in 0..r {
        b +=
            s.singular_values[i] * s.left_vectors.column(i) * s.right_vectors.column(i).transpose();
    }
    b
}

const FREE_ROW_TOL: f64 = 1e-15;
const MAX_SIGN_ENUMERATION: usize = 16;

/// Moves every coefficient at `(i,j)`, `i,j ≠ 0`, of a 2-letter vector onto
/// `(i,0)` in `s1`'s tensor basis.
///
/// Row `i`'s mixed energy `Σⱼ αᵢⱼ²` joins `αᵢ₀²`, so `‖l‖` is preserved. The
/// first channel's output norm cannot drop under this move because its tensor
/// basis diagonalizes it. For the second channel, rows whose destination was
/// empty get the sign pattern that maximizes `‖B₂⁽²⁾l′‖`.
pub fn purify(l: &[f64], s1: &SvdResult, s2: &SvdResult) -> Result<PurifyOutcome> {
    let deviation = top_deviation(s1, s2)?;
    if deviation > BASIS_TOL {
        return Err(Error::BasisMismatch { deviation });
    }
    let c = decompose(l, s1, 2)?;
    let dim = c.dim();
    let b1 = TensorOperator::new(rebuild_matrix(s1), 2);
    let b2 = TensorOperator::new(rebuild_matrix(s2), 2);
    let norms_before = [b1.image_norm_sq(l)?.sqrt(), b2.image_norm_sq(l)?.sqrt()];

    let mut coeffs = c.as_slice().to_vec();
    let mut magnitudes = vec![0.0; dim];
    let mut fixed_sign: Vec<Option<f64>> = vec![None; dim];
    let mut destinations_empty = true;
    let mut moved_rows = Vec::new();
    for i in 1..dim {
        let mixed: f64 = (1..dim).map(|j| coeffs[i + dim * j].powi(2)).sum();
        if mixed == 0.0 {
            continue;
        }
        let dest = coeffs[i];
        if dest.abs() > FREE_ROW_TOL {
            destinations_empty = false;
            fixed_sign[i] = Some(dest.signum());
        }
        magnitudes[i] = (dest * dest + mixed).sqrt();
        for j in 1..dim {
            coeffs[i + dim * j] = 0.0;
        }
        moved_rows.push(i);
    }

    let free: Vec<usize> = moved_rows
        .iter()
        .copied()
        .filter(|&i| fixed_sign[i].is_none())
        .collect();
    let assemble = |signs: &[f64], coeffs: &mut Vec<f64>| {
        let mut k = 0;
        for &i in &moved_rows {
            let s = match fixed_sign[i] {
                Some(s) => s,
                None => {
                    k += 1;
                    signs[k - 1]
                }
            };
            coeffs[i] = s * magnitudes[i];
        }
    };
    let reconstruct = |coeffs: &[f64]| apply_each_slot(&s1.right_vectors, coeffs, 2);

    let mut signs = vec![1.0; free.len()];
    if free.len() <= MAX_SIGN_ENUMERATION {
        let mut best = f64::NEG_INFINITY;
        let mut best_signs = signs.clone();
        for pattern in 0..(1usize << free.len()) {
            let trial: Vec<f64> = (0..free.len())
                .map(|b| if pattern >> b & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            assemble(&trial, &mut coeffs);
            let value = b2.image_norm_sq(&reconstruct(&coeffs))?;
            if value > best {
                best = value;
                best_signs = trial;
            }
        }
        signs = best_signs;
    } else {
        // greedy single flips until no improvement
        assemble(&signs, &mut coeffs);
        let mut best = b2.image_norm_sq(&reconstruct(&coeffs))?;
        let mut improved = true;
        while improved {
            improved = false;
            for b in 0..signs.len() {
                signs[b] = -signs[b];
                assemble(&signs, &mut coeffs);
                let value = b2.image_norm_sq(&reconstruct(&coeffs))?;
                if value > best {
                    best = value;
                    improved = true;
                } else {
                    signs[b] = -signs[b];
                }
            }
        }
    }
    assemble(&signs, &mut coeffs);
    let purified = reconstruct(&coeffs);
    let norms_after = [
        b1.image_norm_sq(&purified)?.sqrt(),
        b2.image_norm_sq(&purified)?.sqrt(),
    ];
    Ok(PurifyOutcome {
        purified,
        norms_before,
        norms_after,
        destinations_empty,
        guaranteed: destinations_empty,
    })
}

/// Convenience for callers holding vectors as `DVector`.
pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_dtm, svd};
    use crate::linalg::kron_vec;
    use crate::prob::Channel;
    use approx::assert_abs_diff_eq;

    fn bsc_dtm(p: f64) -> Dtm {
        build_dtm(&Channel::bsc(p).unwrap(), &ProbDist::uniform(2).unwrap()).unwrap()
    }

    fn ternary_pair() -> (Dtm, Dtm) {
        let p = ProbDist::new(vec![0.3, 0.3, 0.4]).unwrap();
        let w1 = Channel::from_rows(&[
            vec![0.8, 0.1, 0.2],
            vec![0.1, 0.7, 0.1],
            vec![0.1, 0.2, 0.7],
        ])
        .unwrap();
        let w2 = Channel::from_rows(&[vec![0.9, 0.2, 0.5], vec![0.1, 0.8, 0.5]]).unwrap();
        (build_dtm(&w1, &p).unwrap(), build_dtm(&w2, &p).unwrap())
    }

    #[test]
    fn kron_power_dist_examples() {
        let p = ProbDist::uniform(2).unwrap();
        assert_eq!(kron_power_dist(&p, 2).unwrap().as_slice(), &[0.25; 4]);
        let p = ProbDist::new(vec![0.75, 0.25]).unwrap();
        assert_eq!(
            kron_power_dist(&p, 2).unwrap().as_slice(),
            &[0.5625, 0.1875, 0.1875, 0.0625]
        );
        assert_eq!(kron_power_dist(&p, 1).unwrap(), p);
        assert!(matches!(
            kron_power_dist_capped(&p, 11, 1000),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn kron_power_dist_little_endian() {
        let p = ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let p2 = kron_power_dist(&p, 2).unwrap();
        // (x1, x2) = (1, 2) sits at 1 + 3·2
        assert_abs_diff_eq!(p2.as_slice()[7], 0.3 * 0.5, epsilon = 1e-16);
        assert_eq!(unflatten(7, 3, 2), vec![1, 2]);
        assert_eq!(flatten(&[1, 2], 3), 7);
    }

    #[test]
    fn dense_kron_examples() {
        let d = bsc_dtm(0.1);
        assert_eq!(&dense_kron(&d, 1).unwrap(), d.matrix());
        let k2 = dense_kron(&d, 2).unwrap();
        let mut sv: Vec<f64> = k2.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in sv.iter().zip([1.0, 0.8, 0.8, 0.64]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let id = build_dtm(
            &Channel::identity(3).unwrap(),
            &ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap(),
        )
        .unwrap();
        assert!((dense_kron(&id, 3).unwrap() - DMatrix::identity(27, 27)).amax() < 1e-15);
        assert!(matches!(dense_kron(&d, 13), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn lazy_matches_dense_with_distinct_slot_inputs() {
        let (d, _) = ternary_pair();
        let op = TensorOperator::from_dtm(&d, 2);
        let a = [0.3, -0.2, 0.5];
        let b = [1.0, 0.4, -0.7];
        // (B⊗B)(a⊗b) = Ba ⊗ Bb, slot 1 fastest
        let lhs = op.apply(&kron_vec(&a, &b)).unwrap();
        let rhs = kron_vec(&d.apply(&a), &d.apply(&b));
        for (x, y) in lhs.iter().zip(&rhs) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-15);
        }
        assert!(matches!(op.apply(&a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn product_singular_values_examples() {
        let s = svd(&bsc_dtm(0.1)).unwrap();
        let top = product_singular_values(&s, 2, 4).unwrap();
        let expected = [
            (1.0, vec![0, 0]),
            (0.8, vec![0, 1]),
            (0.8, vec![1, 0]),
            (0.64, vec![1, 1]),
        ];
        for ((v, idx), (ev, eidx)) in top.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(*v, *ev, epsilon = 1e-14);
            assert_eq!(idx, eidx);
        }
        let one = product_singular_values(&s, 1, 2).unwrap();
        assert_eq!(one[0].0, s.singular_values[0]);
        assert_eq!(one[1].0, s.singular_values[1]);
        let (d, _) = ternary_pair();
        let s = svd(&d).unwrap();
        let top = product_singular_values(&s, 3, 1).unwrap();
        assert_eq!(top[0].1, vec![0, 0, 0]);
        assert_abs_diff_eq!(top[0].0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn decompose_examples() {
        let (d, _) = ternary_pair();
        let s = svd(&d).unwrap();
        let (phi0, phi1, phi2) = (s.right(0), s.right(1), s.right(2));
        let c = decompose(&kron_vec(&phi1, &phi0), &s, 2).unwrap();
        assert_abs_diff_eq!(c.get(&[1, 0]), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.norm_sq(), 1.0, epsilon = 1e-14);

        let h = 0.5_f64.sqrt();
        let l: Vec<f64> = kron_vec(&phi0, &phi1)
            .iter()
            .zip(kron_vec(&phi1, &phi0))
            .map(|(a, b)| h * (a + b))
            .collect();
        let c = decompose(&l, &s, 2).unwrap();
        assert_abs_diff_eq!(c.get(&[0, 1]), h, epsilon = 1e-14);
        assert_abs_diff_eq!(c.get(&[1, 0]), h, epsilon = 1e-14);
        assert!(is_product_form(&c, 1e-9));

        let c = decompose(&kron_vec(&phi1, &phi2), &s, 2).unwrap();
        assert!(!is_product_form(&c, 1e-9));
        assert!(matches!(
            decompose(&phi1, &s, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn product_form_tolerance() {
        let (d, _) = ternary_pair();
        let s = svd(&d).unwrap();
        let (phi0, phi1) = (s.right(0), s.right(1));
        let tiny: Vec<f64> = kron_vec(&phi0, &phi1)
            .iter()
            .zip(kron_vec(&phi1, &phi1))
            .map(|(a, b)| a + 1e-12 * b)
            .collect();
        assert!(is_product_form(&decompose(&tiny, &s, 2).unwrap(), 1e-9));
    }

    #[test]
    fn basis_relation_examples() {
        let (d1, d2) = ternary_pair();
        let (s1, s2) = (svd(&d1).unwrap(), svd(&d2).unwrap());
        let same = basis_relation(&s1, &s1).unwrap();
        assert!((same.psi.clone() - DMatrix::identity(2, 2)).amax() < 1e-14);
        let rel = basis_relation(&s1, &s2).unwrap();
        assert!(rel.orthogonality_error() < 1e-12);

        let b1 = svd(&bsc_dtm(0.1)).unwrap();
        let b2 = svd(&bsc_dtm(0.3)).unwrap();
        let rel = basis_relation(&b1, &b2).unwrap();
        assert_abs_diff_eq!(rel.psi[(0, 0)].abs(), 1.0, epsilon = 1e-14);

        let other = build_dtm(
            &Channel::bsc(0.1).unwrap(),
            &ProbDist::new(vec![0.3, 0.7]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            basis_relation(&b1, &svd(&other).unwrap()),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn purify_doubly_mixed_basis_vector() {
        let (d1, d2) = ternary_pair();
        let (s1, s2) = (svd(&d1).unwrap(), svd(&d2).unwrap());
        let l = kron_vec(&s1.right(1), &s1.right(1));
        let out = purify(&l, &s1, &s2).unwrap();
        let target = kron_vec(&s1.right(1), &s1.right(0));
        for (a, b) in out.purified.iter().zip(&target) {
            assert_abs_diff_eq!(a.abs(), b.abs(), epsilon = 1e-13);
        }
        assert!(out.guaranteed);
        for k in 0..2 {
            assert!(out.norms_after[k] >= out.norms_before[k] - 1e-9);
        }
    }

    #[test]
    fn purify_leaves_product_form_alone() {
        let (d1, d2) = ternary_pair();
        let (s1, s2) = (svd(&d1).unwrap(), svd(&d2).unwrap());
        let l: Vec<f64> = kron_vec(&s1.right(0), &s1.right(2))
            .iter()
            .zip(kron_vec(&s1.right(1), &s1.right(0)))
            .map(|(a, b)| 0.6 * a - 0.8 * b)
            .collect();
        let out = purify(&l, &s1, &s2).unwrap();
        for (a, b) in out.purified.iter().zip(&l) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
    }
}

//! Linear information coupling: point-to-point and k-receiver max-min.
//!
//! Everything here works with per-channel quadratic forms on the tangent
//! space `{√P_X}^⊥`. The objective is the efficiency ratio of output to input
//! information at quadratic order, so ε only enters the exact-MI checks.

mod barrier;
mod dual;
mod ensemble;
mod letters;
mod rank1;

pub use dual::maxmin_dual;
pub use ensemble::{maxmin_ensemble, solve_broadcast2};
pub use letters::{k_letter_construction, letter_schedule, second_moment, KLetterResult};
pub use rank1::maxmin_rank1;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{local_capacity, Dtm};
use crate::linalg::{norm_sq, sym_eigen_desc, tangent_basis};
use crate::prob::{exact_mutual_information, ProbDist};
use crate::tensor::{apply_each_slot, kron_power_dist, TensorOperator};

const SYMMETRY_TOL: f64 = 1e-12;
const SPECTRUM_TOL: f64 = 1e-9;
const MARGINAL_TOL: f64 = 1e-10;
const DUPLICATE_TOL: f64 = 1e-12;

/// One channel's quadratic form `A = QᵀBᵀBQ` on the tangent space.
///
/// Alongside `A` the form keeps a full-space operator `B`, its top input
/// vector and the tangent basis `Q`, so n-letter vectors can be built and
/// pushed through `B^{⊗n}` lazily.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    matrix: DMatrix<f64>,
    operator: DMatrix<f64>,
    top: Vec<f64>,
    basis: DMatrix<f64>,
    source: Option<Dtm>,
}

fn check_spectrum(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidForm(format!(
            "matrix is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidForm("non-finite entry".into()));
    }
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL * a.amax().max(1.0) {
        return Err(Error::InvalidForm(format!("asymmetry {asym}")));
    }
    let (values, _) = sym_eigen_desc(a)?;
    if let (Some(&hi), Some(&lo)) = (values.first(), values.last()) {
        if hi > 1.0 + SPECTRUM_TOL || lo < -SPECTRUM_TOL {
            return Err(Error::InvalidForm(format!(
                "eigenvalues [{lo}, {hi}] outside [0, 1]"
            )));
        }
    }
    Ok(())
}

impl QuadraticForm {
    /// Form of an abstract PSD matrix. The operator is `1 ⊕ A^{1/2}` acting on
    /// `R^{m+1}` with top vector `e₀`.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        check_spectrum(&a)?;
        let m = a.nrows();
        let a = (&a + a.transpose()) * 0.5;
        let (values, vectors) = sym_eigen_desc(&a)?;
        let root_diag = DMatrix::from_diagonal(&DVector::from_iterator(
            m,
            values.iter().map(|v| v.max(0.0).sqrt()),
        ));
        let root = &vectors * root_diag * vectors.transpose();
        let mut operator = DMatrix::zeros(m + 1, m + 1);
        operator[(0, 0)] = 1.0;
        operator.view_mut((1, 1), (m, m)).copy_from(&root);
        let mut top = vec![0.0; m + 1];
        top[0] = 1.0;
        let mut basis = DMatrix::zeros(m + 1, m);
        basis.view_mut((1, 0), (m, m)).fill_with_identity();
        Ok(Self {
            matrix: a,
            operator,
            top,
            basis,
            source: None,
        })
    }

    /// Form of an explicit full-space operator with a chosen top vector and
    /// tangent basis.
    pub fn from_operator(
        operator: DMatrix<f64>,
        top: Vec<f64>,
        basis: DMatrix<f64>,
    ) -> Result<Self> {
        if operator.ncols() != top.len() || basis.nrows() != top.len() {
            return Err(Error::DimensionMismatch {
                expected: operator.ncols(),
                found: basis.nrows(),
            });
        }
        let g = &operator * &basis;
        let a = g.transpose() * &g;
        check_spectrum(&a)?;
        Ok(Self {
            matrix: a,
            operator,
            top,
            basis,
            source: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn top(&self) -> &[f64] {
        &self.top
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn source(&self) -> Option<&Dtm> {
        self.source.as_ref()
    }

    /// Length of a single-letter full-space vector.
    pub fn full_len(&self) -> usize {
        self.top.len()
    }

    /// `xᵀAx`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        x.dot(&(&self.matrix * &x))
    }

    /// Tangent coordinates to a full-space scaled perturbation.
    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        (&self.basis * DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }

    /// Full-space vector to tangent coordinates.
    pub fn project(&self, l: &[f64]) -> Vec<f64> {
        (self.basis.transpose() * DVector::from_column_slice(l))
            .iter()
            .copied()
            .collect()
    }
}

/// The DTM's form in the deterministic Gram-Schmidt tangent basis.
pub fn tangent_form(d: &Dtm) -> Result<QuadraticForm> {
    if d.input_size() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d.input_size(),
        });
    }
    let top = d.input_dist().sqrt();
    let basis = tangent_basis(&top);
    let g = d.matrix() * &basis;
    let matrix = g.transpose() * &g;
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    Ok(QuadraticForm {
        matrix,
        operator: d.matrix().clone(),
        top,
        basis,
        source: Some(d.clone()),
    })
}

/// `Σ λᵢ Aᵢ`.
pub(crate) fn combine(forms: &[QuadraticForm], lambda: &[f64]) -> DMatrix<f64> {
    let m = forms[0].dim();
    let mut out = DMatrix::zeros(m, m);
    for (f, &l) in forms.iter().zip(lambda) {
        out += f.matrix() * l;
    }
    out
}

pub(crate) fn check_forms(forms: &[QuadraticForm]) -> Result<usize> {
    let first = forms.first().ok_or(Error::EmptyInput)?;
    let m = first.dim();
    for f in forms {
        if f.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: f.dim(),
            });
        }
    }
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(m)
}

/// Indices of the first form in each group of equal matrices, and the group
/// each form belongs to.
pub(crate) fn dedupe(forms: &[QuadraticForm]) -> (Vec<usize>, Vec<usize>) {
    let mut reps: Vec<usize> = Vec::new();
    let mut group = Vec::with_capacity(forms.len());
    for (i, f) in forms.iter().enumerate() {
        match reps
            .iter()
            .position(|&r| (forms[r].matrix() - f.matrix()).amax() <= DUPLICATE_TOL)
        {
            Some(g) => group.push(g),
            None => {
                group.push(reps.len());
                reps.push(i);
            }
        }
    }
    (reps, group)
}

/// Solver knobs. `grid` is the number of points of the exhaustive sweep used
/// when the tangent dimension is at most 3.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub grid: usize,
    /// Scale stored in emitted ensembles.
    pub epsilon: f64,
    /// Cap on ensemble cardinality `|U|`; `None` means `2m`.
    pub max_atoms: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            max_iters: 1000,
            tol: 1e-6,
            seed: 0,
            grid: 100_000,
            epsilon: 0.01,
            max_atoms: None,
        }
    }
}

/// A finite auxiliary `U`: weights and n-letter scaled perturbations `L_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEnsemble {
    weights: ProbDist,
    atoms: Vec<Vec<f64>>,
    letters: usize,
    epsilon: f64,
}

impl CouplingEnsemble {
    /// Rejects weights under which `Σ w_u L_u ≠ 0`.
    pub fn new(
        weights: ProbDist,
        atoms: Vec<Vec<f64>>,
        letters: usize,
        epsilon: f64,
    ) -> Result<Self> {
        if atoms.is_empty() || letters == 0 {
            return Err(Error::EmptyInput);
        }
        if weights.len() != atoms.len() {
            return Err(Error::DimensionMismatch {
                expected: atoms.len(),
                found: weights.len(),
            });
        }
        let len = atoms[0].len();
        if let Some(bad) = atoms.iter().find(|a| a.len() != len) {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: bad.len(),
            });
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidEpsilon { epsilon });
        }
        let scale = atoms
            .iter()
            .map(|a| norm_sq(a).sqrt())
            .fold(1.0_f64, f64::max);
        let mut mean = vec![0.0; len];
        for (w, a) in weights.as_slice().iter().zip(&atoms) {
            for (m, x) in mean.iter_mut().zip(a) {
                *m += w * x;
            }
        }
        let residual = mean.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if residual > MARGINAL_TOL * scale {
            return Err(Error::MarginalViolated { residual });
        }
        Ok(Self {
            weights,
            atoms,
            letters,
            epsilon,
        })
    }

    /// `±l` with weight ½ each.
    pub fn binary(l: Vec<f64>, letters: usize, epsilon: f64) -> Result<Self> {
        let neg = l.iter().map(|x| -x).collect();
        Self::new(
            ProbDist::from_computed(vec![0.5, 0.5]),
            vec![l, neg],
            letters,
            epsilon,
        )
    }

    /// `±l_j` pairs, each sign taking half of `w_j`.
    pub fn from_pairs(pairs: Vec<(f64, Vec<f64>)>, letters: usize, epsilon: f64) -> Result<Self> {
        let total: f64 = pairs.iter().map(|(w, _)| w).sum();
        let mut weights = Vec::with_capacity(2 * pairs.len());
        let mut atoms = Vec::with_capacity(2 * pairs.len());
        for (w, l) in pairs {
            let neg = l.iter().map(|x| -x).collect();
            weights.push(0.5 * w / total);
            atoms.push(l);
            weights.push(0.5 * w / total);
            atoms.push(neg);
        }
        Self::new(ProbDist::new(weights)?, atoms, letters, epsilon)
    }

    pub fn weights(&self) -> &ProbDist {
        &self.weights
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cardinality(&self) -> usize {
        self.atoms.len()
    }

    /// `Σ w_u ‖L_u‖²`.
    pub fn mean_norm_sq(&self) -> f64 {
        self.weights
            .as_slice()
            .iter()
            .zip(&self.atoms)
            .map(|(w, a)| w * norm_sq(a))
            .sum()
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidEpsilon { epsilon });
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Conditionals `Pⁿ + ε·√Pⁿ∘L_u` over `Xⁿ`.
    pub fn conditionals(&self, base: &ProbDist) -> Result<Vec<ProbDist>> {
        let pn = kron_power_dist(base, self.letters)?;
        if pn.len() != self.atoms[0].len() {
            return Err(Error::DimensionMismatch {
                expected: pn.len(),
                found: self.atoms[0].len(),
            });
        }
        let root = pn.sqrt();
        self.atoms
            .iter()
            .map(|l| {
                let q: Vec<f64> = pn
                    .as_slice()
                    .iter()
                    .zip(&root)
                    .zip(l)
                    .map(|((p, r), x)| p + self.epsilon * r * x)
                    .collect();
                if q.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::InvalidEpsilon {
                        epsilon: self.epsilon,
                    });
                }
                ProbDist::new(q).map_err(|_| Error::InvalidEpsilon {
                    epsilon: self.epsilon,
                })
            })
            .collect()
    }

    /// `I(U;Xⁿ)` at the stored ε.
    pub fn input_information(&self, base: &ProbDist) -> Result<f64> {
        exact_mutual_information(self.weights.as_slice(), &self.conditionals(base)?)
    }
}

/// The optimizer attached to a [`MaxMinSolution`].
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    /// Unit vector in tangent coordinates.
    Rank1(Vec<f64>),
    Ensemble(CouplingEnsemble),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution {
    pub value: f64,
    pub optimizer: Optimizer,
    /// Dual certificate λ on the simplex, indexed like the input forms.
    pub dual_weights: Vec<f64>,
    pub dual_value: f64,
    pub gap: f64,
    /// Per-form efficiency of the optimizer.
    pub per_form_values: Vec<f64>,
}

/// Point-to-point optimum `σ₂²`, attained by the binary ensemble `±v₂`.
pub fn solve_p2p(d: &Dtm) -> Result<MaxMinSolution> {
    let cap = local_capacity(d)?;
    let value = cap.efficiency();
    let ensemble = CouplingEnsemble::binary(
        cap.direction.as_slice().to_vec(),
        1,
        SolverOptions::default().epsilon,
    )?;
    Ok(MaxMinSolution {
        value,
        optimizer: Optimizer::Ensemble(ensemble),
        dual_weights: vec![1.0],
        dual_value: value,
        gap: 0.0,
        per_form_values: vec![value],
    })
}

/// How [`efficiency`] measures information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficiencyMode {
    /// `Σ w‖B⊗ⁿL‖² / Σ w‖L‖²`.
    Quadratic,
    /// `I(U;Yᵢⁿ) / I(U;Xⁿ)` from the true conditionals at the stored ε.
    Exact,
}

/// Per-form efficiency of an ensemble.
pub fn efficiency(
    e: &CouplingEnsemble,
    forms: &[QuadraticForm],
    mode: EfficiencyMode,
) -> Result<Vec<f64>> {
    if forms.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = e.letters();
    match mode {
        EfficiencyMode::Quadratic => {
            let denom = e.mean_norm_sq();
            if denom == 0.0 {
                return Err(Error::ZeroPerturbation);
            }
            forms
                .iter()
                .map(|f| {
                    let op = TensorOperator::new(f.operator().clone(), n);
                    let mut num = 0.0;
                    for (w, l) in e.weights().as_slice().iter().zip(e.atoms()) {
                        num += w * op.image_norm_sq(l)?;
                    }
                    Ok(num / denom)
                })
                .collect()
        }
        EfficiencyMode::Exact => {
            if e.mean_norm_sq() == 0.0 {
                return Err(Error::ZeroPerturbation);
            }
            let mut out = Vec::with_capacity(forms.len());
            for f in forms {
                let d = f.source().ok_or(Error::MissingSource)?;
                let xs = e.conditionals(d.input_dist())?;
                let ix = exact_mutual_information(e.weights().as_slice(), &xs)?;
                if ix <= 0.0 {
                    return Err(Error::ZeroPerturbation);
                }
                let ys: Vec<ProbDist> = xs
                    .iter()
                    .map(|q| {
                        ProbDist::from_computed(apply_each_slot(
                            d.channel().matrix(),
                            q.as_slice(),
                            n,
                        ))
                    })
                    .collect();
                out.push(exact_mutual_information(e.weights().as_slice(), &ys)? / ix);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_dtm;
    use crate::prob::Channel;
    use approx::assert_abs_diff_eq;

    fn bsc(p: f64) -> Dtm {
        build_dtm(&Channel::bsc(p).unwrap(), &ProbDist::uniform(2).unwrap()).unwrap()
    }

    #[test]
    fn tangent_form_examples() {
        let f = tangent_form(&bsc(0.1)).unwrap();
        assert_eq!(f.dim(), 1);
        assert_abs_diff_eq!(f.matrix()[(0, 0)], 0.64, epsilon = 1e-12);
        let f = tangent_form(&bsc(0.5)).unwrap();
        assert_abs_diff_eq!(f.matrix()[(0, 0)], 0.0, epsilon = 1e-15);
        let p = ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let id = build_dtm(&Channel::identity(3).unwrap(), &p).unwrap();
        let f = tangent_form(&id).unwrap();
        assert!((f.matrix() - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn tangent_form_spectrum_matches_svd() {
        let p = ProbDist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let w = Channel::symmetric(4, 0.3).unwrap();
        let d = build_dtm(&w, &p).unwrap();
        let s = crate::geom::svd(&d).unwrap();
        let (values, _) = sym_eigen_desc(tangent_form(&d).unwrap().matrix()).unwrap();
        for (v, sv) in values.iter().zip(&s.singular_values[1..]) {
            assert_abs_diff_eq!(*v, sv * sv, epsilon = 1e-9);
        }
    }

    #[test]
    fn from_matrix_validation() {
        assert!(
            QuadraticForm::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]))
                .is_err()
        );
        assert!(QuadraticForm::from_matrix(DMatrix::from_diagonal_element(2, 2, 1.5)).is_err());
        assert!(QuadraticForm::from_matrix(DMatrix::from_diagonal_element(2, 2, -0.1)).is_err());
        let f = QuadraticForm::from_matrix(DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.2, 0.3]))
            .unwrap();
        let g = f.operator() * f.basis();
        assert!((g.transpose() * g - f.matrix()).amax() < 1e-14);
    }

    #[test]
    fn p2p_examples() {
        let s = solve_p2p(&bsc(0.1)).unwrap();
        assert_abs_diff_eq!(s.value, 0.64, epsilon = 1e-12);
        assert_eq!(s.gap, 0.0);
        let Optimizer::Ensemble(e) = &s.optimizer else {
            panic!("expected ensemble")
        };
        let h = 0.5_f64.sqrt();
        assert_abs_diff_eq!(e.atoms()[0][0], h, epsilon = 1e-12);
        assert_abs_diff_eq!(e.atoms()[0][1], -h, epsilon = 1e-12);
        assert_abs_diff_eq!(solve_p2p(&bsc(0.0)).unwrap().value, 1.0, epsilon = 1e-12);
        assert_eq!(solve_p2p(&bsc(0.5)).unwrap().value, 0.0);
    }

    #[test]
    fn p2p_efficiency_quadratic_and_exact() {
        let d = bsc(0.1);
        let s = solve_p2p(&d).unwrap();
        let Optimizer::Ensemble(e) = s.optimizer else {
            panic!("expected ensemble")
        };
        let forms = [tangent_form(&d).unwrap()];
        let q = efficiency(&e, &forms, EfficiencyMode::Quadratic).unwrap();
        assert_abs_diff_eq!(q[0], 0.64, epsilon = 1e-12);
        let x = efficiency(&e, &forms, EfficiencyMode::Exact).unwrap();
        assert!((x[0] - 0.64).abs() <= 0.006, "{}", x[0]);
    }

    #[test]
    fn ensemble_information_matches_quadratic() {
        let d = bsc(0.2);
        let Optimizer::Ensemble(e) = solve_p2p(&d).unwrap().optimizer else {
            panic!()
        };
        for eps in [0.02, 0.01] {
            let e = e.clone().with_epsilon(eps).unwrap();
            let exact = e.input_information(d.input_dist()).unwrap();
            let quad = 0.5 * eps * eps * e.mean_norm_sq();
            assert!((exact - quad).abs() <= eps.powi(3));
        }
    }

    #[test]
    fn ensemble_rejects_unbalanced_weights() {
        let l = vec![0.6, -0.8];
        let neg = vec![-0.6, 0.8];
        let w = ProbDist::new(vec![0.6, 0.4]).unwrap();
        assert!(matches!(
            CouplingEnsemble::new(w, vec![l, neg], 1, 0.01),
            Err(Error::MarginalViolated { .. })
        ));
    }

    #[test]
    fn efficiency_errors() {
        let forms = [QuadraticForm::from_matrix(DMatrix::identity(1, 1)).unwrap()];
        let e = CouplingEnsemble::binary(vec![0.0, 0.0], 1, 0.01).unwrap();
        assert_eq!(
            efficiency(&e, &forms, EfficiencyMode::Quadratic),
            Err(Error::ZeroPerturbation)
        );
        let e = CouplingEnsemble::binary(vec![0.0, 1.0], 1, 0.01).unwrap();
        assert_eq!(
            efficiency(&e, &forms, EfficiencyMode::Exact),
            Err(Error::MissingSource)
        );
        let d = bsc(0.1);
        let e = CouplingEnsemble::binary(vec![0.7, -0.7], 1, 1.5).unwrap();
        assert!(matches!(
            efficiency(&e, &[tangent_form(&d).unwrap()], EfficiencyMode::Exact),
            Err(Error::InvalidEpsilon { .. })
        ));
    }
}

//! Divergence transition matrices and their singular structure.
//!
//! For a channel `W` and input distribution `P_X`, the divergence transition
//! matrix is `B = diag(1/√P_Y) · W · diag(√P_X)`. It carries scaled input
//! perturbations `L` to scaled output perturbations, so `‖B L‖²` is the
//! quadratic-order output divergence produced by an input divergence `‖L‖²`.
//!
//! The SVD is computed in deflated form: `√P_X ↦ √P_Y` is split off first and
//! the remaining tangent block is decomposed on its own. This pins the top
//! right singular vector to `√P_X` even when the spectrum is degenerate (for
//! instance the identity channel, where every singular value is 1).

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg::{apply_sign_convention, norm_sq, tangent_basis};
use crate::prob::{kl_divergence, Channel, Perturbation, ProbDist, ScaledPerturbation};

/// Singular values closer than this to `σ₂` count toward its multiplicity.
pub const MULTIPLICITY_TOL: f64 = 1e-9;

/// Below this `σ₂` a channel is reported as locally useless.
pub const USELESS_TOL: f64 = 1e-12;

/// Maximum allowed ratio between successive residuals under ε-halving.
pub const DECAY_RATIO: f64 = 0.3;

/// Residuals below this are treated as exact zeros by the decay checks.
pub const DECAY_NOISE_FLOOR: f64 = 1e-18;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;

/// A divergence transition matrix with the distributions it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dtm {
    matrix: DMatrix<f64>,
    channel: Channel,
    input_dist: ProbDist,
    output_dist: ProbDist,
}

impl Dtm {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn input_dist(&self) -> &ProbDist {
        &self.input_dist
    }

    pub fn output_dist(&self) -> &ProbDist {
        &self.output_dist
    }

    pub fn input_size(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `B · l`.
    pub fn apply(&self, l: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(l))
            .iter()
            .copied()
            .collect()
    }
}

/// Singular values in descending order with orthonormal singular vectors.
///
/// `right_vectors` is a full `|X|×|X|` orthonormal basis; column 0 is `√P_X`.
/// `singular_values` has one entry per right vector, so when `|X| > |Y|` the
/// trailing entries are structural zeros. `left_vectors` holds the
/// `min(|X|, |Y|)` output-side partners; column 0 is `√P_Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub right_vectors: DMatrix<f64>,
    pub left_vectors: DMatrix<f64>,
}

impl SvdResult {
    pub fn right(&self, i: usize) -> Vec<f64> {
        self.right_vectors.column(i).iter().copied().collect()
    }

    pub fn left(&self, i: usize) -> Vec<f64> {
        self.left_vectors.column(i).iter().copied().collect()
    }

    pub fn input_size(&self) -> usize {
        self.right_vectors.nrows()
    }

    /// `‖B − Σ σᵢ uᵢ vᵢᵀ‖_max`.
    pub fn reconstruction_error(&self, b: &DMatrix<f64>) -> f64 {
        let r = self.left_vectors.ncols();
        let mut rebuilt = DMatrix::zeros(b.nrows(), b.ncols());
        for i in 0..r {
            rebuilt += self.singular_values[i]
                * self.left_vectors.column(i)
                * self.right_vectors.column(i).transpose();
        }
        (b - rebuilt).amax()
    }
}

/// `B = diag(1/√P_Y) · W · diag(√P_X)`.
pub fn build_dtm(w: &Channel, px: &ProbDist) -> Result<Dtm> {
    if w.input_size() != px.len() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            found: px.len(),
        });
    }
    let wm = w.matrix();
    let p = px.as_slice();
    let py: Vec<f64> = (0..w.output_size())
        .map(|y| (0..w.input_size()).map(|x| wm[(y, x)] * p[x]).sum())
        .collect();
    if let Some(index) = py.iter().position(|&v| v <= 0.0) {
        return Err(Error::SingularOutput { index });
    }
    let matrix = DMatrix::from_fn(w.output_size(), w.input_size(), |y, x| {
        wm[(y, x)] * p[x].sqrt() / py[y].sqrt()
    });
    Ok(Dtm {
        matrix,
        channel: w.clone(),
        input_dist: px.clone(),
        output_dist: ProbDist::from_computed(py),
    })
}

/// Deflated SVD of the DTM with the deterministic sign convention applied to
/// every right vector (and mirrored onto its left partner).
pub fn svd(d: &Dtm) -> Result<SvdResult> {
    let b = d.matrix();
    let (n_out, n_in) = (b.nrows(), b.ncols());
    let v0 = DVector::from_vec(d.input_dist.sqrt());
    let u0 = DVector::from_vec(d.output_dist.sqrt());
    let qx = tangent_basis(v0.as_slice());
    let qy = tangent_basis(u0.as_slice());
    let core = qy.transpose() * b * &qx;

    let (mut values, core_left, mut core_right) = if core.nrows() > 0 && core.ncols() > 0 {
        let dec = SVD::try_new(core.clone(), true, true, SVD_EPS, SVD_MAX_ITERS)
            .ok_or(Error::ConvergenceFailure)?;
        let u = dec.u.ok_or(Error::ConvergenceFailure)?;
        let vt = dec.v_t.ok_or(Error::ConvergenceFailure)?;
        let r = dec.singular_values.len();
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &c| dec.singular_values[c].total_cmp(&dec.singular_values[a]));
        let values: Vec<f64> = order.iter().map(|&i| dec.singular_values[i]).collect();
        let left: Vec<DVector<f64>> = order.iter().map(|&i| u.column(i).into_owned()).collect();
        let right: Vec<DVector<f64>> = order
            .iter()
            .map(|&i| vt.row(i).transpose().into_owned())
            .collect();
        (values, left, right)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    // Complete the tangent-side right basis when the core block is wide.
    complete_basis(&mut core_right, n_in.saturating_sub(1));
    values.resize(n_in.saturating_sub(1), 0.0);

    let mut right = DMatrix::zeros(n_in, n_in);
    right.set_column(0, &v0);
    let r = n_in.min(n_out);
    let mut left = DMatrix::zeros(n_out, r);
    left.set_column(0, &u0);
    for (j, cr) in core_right.iter().enumerate() {
        let mut v: Vec<f64> = (&qx * cr).iter().copied().collect();
        let flipped = apply_sign_convention(&mut v);
        right.set_column(j + 1, &DVector::from_vec(v));
        if j + 1 < r {
            let u = &qy * &core_left[j];
            left.set_column(j + 1, &if flipped { -u } else { u });
        }
    }

    let mut singular_values = Vec::with_capacity(n_in);
    singular_values.push((b * &v0).norm());
    singular_values.extend(values);

    let result = SvdResult {
        singular_values,
        right_vectors: right,
        left_vectors: left,
    };
    debug_assert!(
        result.reconstruction_error(b) <= 1e-9,
        "SVD reconstruction error {}",
        result.reconstruction_error(b)
    );
    Ok(result)
}

/// Extends an orthonormal set in `R^dim` to a full basis (Gram-Schmidt over
/// the standard basis, lowest index first).
fn complete_basis(vectors: &mut Vec<DVector<f64>>, dim: usize) {
    let mut i = 0;
    while vectors.len() < dim && i < dim {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        for _ in 0..2 {
            for q in vectors.iter() {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let len = v.norm();
        if len > 1e-8 {
            vectors.push(v / len);
        }
        i += 1;
    }
}

/// The second singular value and its right singular direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCapacity {
    /// `σ₂`; forced to 0 when below [`USELESS_TOL`].
    pub sigma: f64,
    /// Convention-signed representative direction of lowest index.
    pub direction: ScaledPerturbation,
    /// Number of right singular vectors sharing `σ₂` (within [`MULTIPLICITY_TOL`]).
    pub multiplicity: usize,
    /// All right singular vectors of the `σ₂` eigenspace.
    pub subspace: Vec<Vec<f64>>,
    pub locally_useless: bool,
}

impl LocalCapacity {
    /// `σ₂²`, the best achievable ratio of output to input information at
    /// quadratic order.
    pub fn efficiency(&self) -> f64 {
        self.sigma * self.sigma
    }
}

pub fn local_capacity(d: &Dtm) -> Result<LocalCapacity> {
    if d.input_size() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d.input_size(),
        });
    }
    let s = svd(d)?;
    let raw = s.singular_values[1];
    let locally_useless = raw < USELESS_TOL;
    let members: Vec<usize> = (1..s.singular_values.len())
        .filter(|&i| (s.singular_values[i] - raw).abs() <= MULTIPLICITY_TOL.max(USELESS_TOL))
        .collect();
    let subspace: Vec<Vec<f64>> = members.iter().map(|&i| s.right(i)).collect();
    let direction = ScaledPerturbation::new(d.input_dist.clone(), s.right(1))?;
    Ok(LocalCapacity {
        sigma: if locally_useless { 0.0 } else { raw },
        direction,
        multiplicity: members.len(),
        subspace,
        locally_useless,
    })
}

/// One row of the quadratic-approximation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxRow {
    pub epsilon: f64,
    /// `D(P ‖ P+εJ)`.
    pub exact_kl: f64,
    /// `D(P+εJ ‖ P)`.
    pub reverse_kl: f64,
    /// `½ε²‖J‖²_P`.
    pub half_eps2_norm: f64,
    pub residual: f64,
    pub reverse_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxTable {
    pub rows: Vec<ApproxRow>,
    /// `|residual(ε/2)| / |residual(ε)|` for each consecutive halving.
    pub ratios: Vec<f64>,
    pub reverse_ratios: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryRow {
    pub epsilon: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryTable {
    pub rows: Vec<SymmetryRow>,
    pub ratios: Vec<f64>,
    pub passed: bool,
}

fn perturbed_pairs(p: &ProbDist, j: &[f64], eps_list: &[f64]) -> Result<Vec<(f64, ProbDist)>> {
    eps_list
        .iter()
        .map(|&eps| {
            let pert = Perturbation::new(p.clone(), j.to_vec(), eps).map_err(|e| match e {
                Error::InvalidEpsilon { .. } => Error::InvalidEpsilon { epsilon: eps },
                other => other,
            })?;
            Ok((eps, pert.perturbed()))
        })
        .collect()
}

/// Ratios of successive values for each pair of consecutive ε that halve.
fn halving_ratios(eps: &[f64], values: &[f64]) -> Vec<f64> {
    let mut ratios = Vec::new();
    for k in 1..eps.len() {
        let (big, small) = (eps[k - 1], eps[k]);
        if big <= 0.0 || ((small - big / 2.0) / big).abs() > 1e-9 {
            continue;
        }
        let (a, b) = (values[k - 1].abs(), values[k].abs());
        ratios.push(if a <= DECAY_NOISE_FLOOR {
            if b <= DECAY_NOISE_FLOOR {
                0.0
            } else {
                f64::INFINITY
            }
        } else if b <= DECAY_NOISE_FLOOR {
            0.0
        } else {
            b / a
        });
    }
    ratios
}

/// Tabulates exact divergences against `½ε²‖J‖²_P` over `eps_list`.
pub fn verify_quadratic_approx(p: &ProbDist, j: &[f64], eps_list: &[f64]) -> Result<ApproxTable> {
    let norm = crate::prob::weighted_inner_product(j, j, p)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for (eps, q) in perturbed_pairs(p, j, eps_list)? {
        let exact_kl = kl_divergence(p, &q)?;
        let reverse_kl = kl_divergence(&q, p)?;
        let half_eps2_norm = 0.5 * eps * eps * norm;
        rows.push(ApproxRow {
            epsilon: eps,
            exact_kl,
            reverse_kl,
            half_eps2_norm,
            residual: exact_kl - half_eps2_norm,
            reverse_residual: reverse_kl - half_eps2_norm,
        });
    }
    let residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let reverse: Vec<f64> = rows.iter().map(|r| r.reverse_residual).collect();
    let ratios = halving_ratios(eps_list, &residuals);
    let reverse_ratios = halving_ratios(eps_list, &reverse);
    let passed = ratios
        .iter()
        .chain(&reverse_ratios)
        .all(|&r| r <= DECAY_RATIO);
    Ok(ApproxTable {
        rows,
        ratios,
        reverse_ratios,
        passed,
    })
}

/// Tabulates `|D(P‖Q) − D(Q‖P)|` for `Q = P + εJ`.
pub fn verify_divergence_symmetry(
    p: &ProbDist,
    j: &[f64],
    eps_list: &[f64],
) -> Result<SymmetryTable> {
    let mut rows = Vec::with_capacity(eps_list.len());
    for (eps, q) in perturbed_pairs(p, j, eps_list)? {
        let gap = (kl_divergence(p, &q)? - kl_divergence(&q, p)?).abs();
        rows.push(SymmetryRow { epsilon: eps, gap });
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let ratios = halving_ratios(eps_list, &gaps);
    let passed = ratios.iter().all(|&r| r <= DECAY_RATIO);
    Ok(SymmetryTable {
        rows,
        ratios,
        passed,
    })
}

/// `‖B l‖² / ‖l‖²` for a tangent direction `l`; bounded by `σ₂²`.
pub fn strong_dpi_ratio(d: &Dtm, l: &ScaledPerturbation) -> Result<f64> {
    if l.as_slice().len() != d.input_size() {
        return Err(Error::DimensionMismatch {
            expected: d.input_size(),
            found: l.as_slice().len(),
        });
    }
    if l.base() != d.input_dist() {
        // re-check tangency against this DTM's input distribution
        ScaledPerturbation::new(d.input_dist().clone(), l.as_slice().to_vec())?;
    }
    let norm = l.norm_squared();
    if norm == 0.0 {
        return Err(Error::ZeroPerturbation);
    }
    Ok(norm_sq(&d.apply(l.as_slice())) / norm)
}

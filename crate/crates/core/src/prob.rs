//! Probability objects over finite alphabets and exact information quantities.
//!
//! All quantities are in nats. Distributions are strictly positive: a zero
//! entry would make the weighted geometry (weights `1/P(x)`) degenerate, so
//! such inputs are rejected rather than smoothed.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance on the total mass of user-supplied distributions.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Tolerance on column sums of user-supplied channel matrices.
pub const COLUMN_TOL: f64 = 1e-9;

const ZERO_SUM_TOL: f64 = 1e-12;
const TANGENT_TOL: f64 = 1e-10;

/// A strictly positive probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    /// Validates `raw` without renormalizing it.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (index, &value) in raw.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveEntry { index, value });
            }
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { probs: raw })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Componentwise square root, the top singular direction of any DTM
    /// built on this distribution.
    pub fn sqrt(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.sqrt()).collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// For vectors produced by exact constructions (mixtures, push-forwards,
    /// tensor powers) whose positivity is already established.
    pub(crate) fn from_computed(probs: Vec<f64>) -> Self {
        debug_assert!(probs.iter().all(|p| *p > 0.0));
        Self { probs }
    }
}

/// Same as [`ProbDist::new`]; kept as a free function for call sites that read
/// like a pipeline.
pub fn validate_dist(raw: &[f64]) -> Result<ProbDist> {
    ProbDist::new(raw.to_vec())
}

/// A column-stochastic matrix `W(y|x)`; column `x` is `P_{Y|X=x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    matrix: DMatrix<f64>,
}

impl Channel {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        for col in 0..matrix.ncols() {
            let mut sum = 0.0;
            for row in 0..matrix.nrows() {
                let value = matrix[(row, col)];
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::InvalidChannelEntry { row, col, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > COLUMN_TOL {
                return Err(Error::ColumnNotStochastic { col, sum });
            }
        }
        Ok(Self { matrix })
    }

    /// Builds a channel from y-indexed rows, each row x-indexed.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_out = rows.len();
        if n_out == 0 {
            return Err(Error::EmptyInput);
        }
        let n_in = rows[0].len();
        for row in rows {
            if row.len() != n_in {
                return Err(Error::DimensionMismatch {
                    expected: n_in,
                    found: row.len(),
                });
            }
        }
        let matrix = DMatrix::from_fn(n_out, n_in, |y, x| rows[y][x]);
        Self::from_matrix(matrix)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::symmetric(2, p)
    }

    /// `n`-ary symmetric channel: each wrong symbol receives `crossover`.
    pub fn symmetric(n: usize, crossover: f64) -> Result<Self> {
        let keep = 1.0 - crossover * (n as f64 - 1.0);
        Self::from_matrix(DMatrix::from_fn(n, n, |y, x| {
            if y == x {
                keep
            } else {
                crossover
            }
        }))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn input_size(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_size(&self) -> usize {
        self.matrix.nrows()
    }
}

/// An additive perturbation `P + εJ` of a base distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    base: ProbDist,
    direction: Vec<f64>,
    epsilon: f64,
}

impl Perturbation {
    pub fn new(base: ProbDist, direction: Vec<f64>, epsilon: f64) -> Result<Self> {
        check_len(base.len(), direction.len())?;
        let sum: f64 = direction.iter().sum();
        let scale = direction.iter().map(|j| j.abs()).sum::<f64>().max(1.0);
        if sum.abs() > ZERO_SUM_TOL * scale {
            return Err(Error::NonZeroSum { sum });
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidEpsilon { epsilon });
        }
        let valid = base
            .as_slice()
            .iter()
            .zip(&direction)
            .all(|(p, j)| p + epsilon * j > 0.0);
        if !valid {
            return Err(Error::InvalidEpsilon { epsilon });
        }
        Ok(Self {
            base,
            direction,
            epsilon,
        })
    }

    pub fn base(&self) -> &ProbDist {
        &self.base
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The perturbed distribution `P + εJ`.
    pub fn perturbed(&self) -> ProbDist {
        let probs = self
            .base
            .as_slice()
            .iter()
            .zip(&self.direction)
            .map(|(p, j)| p + self.epsilon * j)
            .collect();
        ProbDist { probs }
    }
}

/// Weighted perturbation `L = J / sqrt(P)`; lives in plain Euclidean geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPerturbation {
    base: ProbDist,
    vec: Vec<f64>,
}

impl ScaledPerturbation {
    pub fn new(base: ProbDist, vec: Vec<f64>) -> Result<Self> {
        check_len(base.len(), vec.len())?;
        let inner: f64 = base.sqrt().iter().zip(&vec).map(|(s, l)| s * l).sum();
        let norm = vec.iter().map(|l| l * l).sum::<f64>().sqrt().max(1.0);
        if inner.abs() > TANGENT_TOL * norm {
            return Err(Error::NotTangent { inner });
        }
        Ok(Self { base, vec })
    }

    pub fn base(&self) -> &ProbDist {
        &self.base
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vec
    }

    pub fn norm_squared(&self) -> f64 {
        self.vec.iter().map(|l| l * l).sum()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `D(p‖q) = Σ p ln(p/q)` in nats.
pub fn kl_divergence(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    check_len(p.len(), q.len())?;
    // p ln(p/q) = -p ln(1 + (q-p)/p); ln_1p keeps precision for nearby pairs.
    let d: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&pi, &qi)| -pi * ((qi - pi) / pi).ln_1p())
        .sum();
    Ok(d.max(0.0))
}

/// `W · p`, the output distribution of `p` through the channel.
pub fn push_forward(w: &Channel, p: &ProbDist) -> Result<ProbDist> {
    check_len(w.input_size(), p.len())?;
    let m = w.matrix();
    let mut out = vec![0.0; w.output_size()];
    for (x, &px) in p.as_slice().iter().enumerate() {
        for (y, o) in out.iter_mut().enumerate() {
            *o += m[(y, x)] * px;
        }
    }
    if let Some(index) = out.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositiveEntry {
            index,
            value: out[index],
        });
    }
    ProbDist::new(out)
}

/// `I(U;X) = Σ_u P_U(u) D(P_{X|U=u} ‖ P_X)` with `P_X` the mixture of the
/// conditionals.
pub fn exact_mutual_information(weights: &[f64], conditionals: &[ProbDist]) -> Result<f64> {
    let weights = ProbDist::new(weights.to_vec())?;
    check_len(weights.len(), conditionals.len())?;
    let n = conditionals[0].len();
    let mut marginal = vec![0.0; n];
    for (w, cond) in weights.as_slice().iter().zip(conditionals) {
        check_len(n, cond.len())?;
        for (m, c) in marginal.iter_mut().zip(cond.as_slice()) {
            *m += w * c;
        }
    }
    // The mixture of valid distributions is valid; skip the input tolerance.
    let marginal = ProbDist::from_computed(marginal);
    let mut total = 0.0;
    for (w, cond) in weights.as_slice().iter().zip(conditionals) {
        total += w * kl_divergence(cond, &marginal)?;
    }
    Ok(total)
}

/// `⟨J₁, J₂⟩_P = Σ J₁ J₂ / P`.
pub fn weighted_inner_product(j1: &[f64], j2: &[f64], p: &ProbDist) -> Result<f64> {
    check_len(p.len(), j1.len())?;
    check_len(p.len(), j2.len())?;
    Ok(j1
        .iter()
        .zip(j2)
        .zip(p.as_slice())
        .map(|((a, b), px)| a * b / px)
        .sum())
}

/// `L = J / sqrt(P)`.
pub fn scale(p: &Perturbation) -> ScaledPerturbation {
    let vec = p
        .direction
        .iter()
        .zip(p.base.as_slice())
        .map(|(j, px)| j / px.sqrt())
        .collect();
    ScaledPerturbation {
        base: p.base.clone(),
        vec,
    }
}

/// `J = sqrt(P) · L`.
pub fn unscale(l: &ScaledPerturbation) -> Vec<f64> {
    l.vec
        .iter()
        .zip(l.base.as_slice())
        .map(|(v, px)| v * px.sqrt())
        .collect()
}

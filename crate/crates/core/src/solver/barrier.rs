//! Log-barrier path following for `max t` subject to `tr(AᵢM) ≥ t`,
//! `tr M = 1`, `M ⪰ 0`. The variables are the upper triangle of `M` and `t`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const TAU_GROWTH: f64 = 8.0;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 60;
const ARMIJO: f64 = 0.25;

/// A near-central point: feasible `M` and the dual weights `λᵢ ∝ 1/(τ sᵢ)`.
#[derive(Debug, Clone)]
pub(crate) struct Central {
    pub mix: DMatrix<f64>,
    pub lambda: Vec<f64>,
}

struct Problem {
    pairs: Vec<(usize, usize)>,
    /// `coef[i][p] = tr(Aᵢ Eₚ)`.
    coef: Vec<Vec<f64>>,
    m: usize,
}

impl Problem {
    fn new(mats: &[DMatrix<f64>]) -> Self {
        let m = mats[0].nrows();
        let pairs: Vec<(usize, usize)> =
            (0..m).flat_map(|b| (0..=b).map(move |a| (a, b))).collect();
        let coef = mats
            .iter()
            .map(|a| {
                pairs
                    .iter()
                    .map(|&(r, c)| {
                        if r == c {
                            a[(r, r)]
                        } else {
                            a[(r, c)] + a[(c, r)]
                        }
                    })
                    .collect()
            })
            .collect();
        Self { pairs, coef, m }
    }

    fn n(&self) -> usize {
        self.pairs.len() + 1
    }

    fn matrix(&self, z: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, self.m);
        for (&(r, c), &v) in self.pairs.iter().zip(z) {
            out[(r, c)] = v;
            out[(c, r)] = v;
        }
        out
    }

    fn slacks(&self, z: &[f64]) -> Vec<f64> {
        let t = z[self.n() - 1];
        self.coef
            .iter()
            .map(|c| c.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() - t)
            .collect()
    }

    /// `−τt − Σ log sᵢ − log det M`, or `None` outside the domain.
    fn objective(&self, z: &[f64], tau: f64) -> Option<f64> {
        let s = self.slacks(z);
        if s.iter().any(|&x| x <= 0.0) {
            return None;
        }
        let chol = self.matrix(z).cholesky()?;
        let logdet: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Some(-tau * z[self.n() - 1] - s.iter().map(|x| x.ln()).sum::<f64>() - logdet)
    }

    fn basis(&self, p: usize) -> DMatrix<f64> {
        let (r, c) = self.pairs[p];
        let mut e = DMatrix::zeros(self.m, self.m);
        e[(r, c)] = 1.0;
        e[(c, r)] = 1.0;
        e
    }

    fn newton_step(&self, z: &[f64], tau: f64) -> Option<(DVector<f64>, f64)> {
        let n = self.n();
        let np = n - 1;
        let s = self.slacks(z);
        let w = self.matrix(z).cholesky()?.inverse();
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        let sandwiches: Vec<DMatrix<f64>> = (0..np).map(|p| &w * self.basis(p) * &w).collect();
        for p in 0..np {
            let (r, c) = self.pairs[p];
            let trace_we = if r == c { w[(r, r)] } else { 2.0 * w[(r, c)] };
            g[p] = -trace_we;
            for q in 0..=p {
                let (a, b) = self.pairs[q];
                let v = if a == b {
                    sandwiches[p][(a, a)]
                } else {
                    2.0 * sandwiches[p][(a, b)]
                };
                h[(p, q)] = v;
                h[(q, p)] = v;
            }
        }
        g[np] = -tau;
        for (ci, si) in self.coef.iter().zip(&s) {
            let inv = 1.0 / si;
            let inv2 = inv * inv;
            for p in 0..np {
                g[p] -= ci[p] * inv;
                for q in 0..=p {
                    let v = ci[p] * ci[q] * inv2;
                    h[(p, q)] += v;
                    if q != p {
                        h[(q, p)] += v;
                    }
                }
                h[(p, np)] -= ci[p] * inv2;
                h[(np, p)] -= ci[p] * inv2;
            }
            g[np] += inv;
            h[(np, np)] += inv2;
        }
        // equality tr M = 1 through a bordered system
        let mut kkt = DMatrix::zeros(n + 1, n + 1);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        for (p, &(r, c)) in self.pairs.iter().enumerate() {
            if r == c {
                kkt[(p, n)] = 1.0;
                kkt[(n, p)] = 1.0;
            }
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-&g));
        // restores tr M = 1 against accumulated rounding
        rhs[n] = 1.0 - self.matrix(z).trace();
        let sol = kkt.full_piv_lu().solve(&rhs)?;
        let dz = sol.rows(0, n).into_owned();
        let decrement = -g.dot(&dz);
        Some((dz, decrement))
    }
}

/// Follows the central path until the duality gap bound `(k + m)/τ` drops
/// below `gap_tol`, or numerical progress stops.
pub(crate) fn central_path(mats: &[DMatrix<f64>], gap_tol: f64) -> Result<Central> {
    let problem = Problem::new(mats);
    let (m, k) = (problem.m, mats.len());
    let np = problem.pairs.len();
    let mut z = vec![0.0; problem.n()];
    for (p, &(r, c)) in problem.pairs.iter().enumerate() {
        if r == c {
            z[p] = 1.0 / m as f64;
        }
    }
    z[np] = 0.0;
    let start = problem
        .slacks(&z)
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    z[np] = start - 1.0;

    let mut tau = 1.0;
    let mut last_good: Option<(Vec<f64>, f64)> = None;
    loop {
        let mut converged = false;
        for _ in 0..NEWTON_MAX {
            let Some((dz, decrement)) = problem.newton_step(&z, tau) else {
                break;
            };
            if !decrement.is_finite() {
                break;
            }
            if decrement / 2.0 <= NEWTON_TOL {
                let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, d)| a + d).collect();
                if problem.objective(&trial, tau).is_some() {
                    z = trial;
                }
                converged = true;
                break;
            }
            let f0 = problem
                .objective(&z, tau)
                .ok_or(Error::ConvergenceFailure)?;
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-20 {
                let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, d)| a + step * d).collect();
                if let Some(f) = problem.objective(&trial, tau) {
                    if f <= f0 - ARMIJO * step * decrement {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                converged = decrement / 2.0 <= 1e-6;
                break;
            }
        }
        if !converged {
            break;
        }
        last_good = Some((z.clone(), tau));
        if (k + m) as f64 / tau < gap_tol {
            break;
        }
        tau *= TAU_GROWTH;
    }
    let (z, tau) = last_good.ok_or(Error::ConvergenceFailure)?;
    let mix = problem.matrix(&z);
    let mix = &mix / mix.trace();
    let inv: Vec<f64> = problem.slacks(&z).iter().map(|s| 1.0 / (tau * s)).collect();
    let total: f64 = inv.iter().sum();
    Ok(Central {
        mix,
        lambda: inv.iter().map(|x| x / total).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn worst(mats: &[DMatrix<f64>], mix: &DMatrix<f64>) -> f64 {
        mats.iter()
            .map(|a| a.component_mul(mix).sum())
            .fold(f64::INFINITY, f64::min)
    }

    fn projector(theta: f64) -> DMatrix<f64> {
        let (c, s) = (theta.cos(), theta.sin());
        DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s])
    }

    #[test]
    fn three_projectors_mix_to_half() {
        let mats: Vec<_> = (0..3)
            .map(|i| projector(2.0 * std::f64::consts::PI * i as f64 / 3.0))
            .collect();
        let c = central_path(&mats, 1e-9).unwrap();
        assert_abs_diff_eq!(worst(&mats, &c.mix), 0.5, epsilon = 1e-10);
        assert!((&c.mix - DMatrix::identity(2, 2) * 0.5).amax() < 1e-9);
        for l in c.lambda {
            assert_abs_diff_eq!(l, 1.0 / 3.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn single_form_concentrates_on_top_direction() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.7, 0.1]));
        let c = central_path(std::slice::from_ref(&a), 1e-9).unwrap();
        assert_abs_diff_eq!(worst(&[a], &c.mix), 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(c.mix[(1, 1)], 1.0, epsilon = 1e-9);
    }
}

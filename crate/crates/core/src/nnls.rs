//! Lawson-Hanson active-set nonnegative least squares.
//!
//! Solves `min ||A λ - b||` subject to `λ >= 0` for small dense problems where
//! the columns of `A` are cone generators. Used to project onto polyhedral
//! normal cones.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dual feasibility tolerance on `w = Aᵀ(b - Aλ)`.
pub const DUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub lambda: Vec<f64>,
    /// `A λ`, the projection of `b` onto the cone.
    pub fitted: Vec<f64>,
    /// `||b - A λ||`.
    pub residual_norm: f64,
    pub iterations: usize,
}

/// `generators` are the columns of `A`, each of length `b.len()`.
pub fn nnls(generators: &[Vec<f64>], b: &[f64]) -> Result<NnlsSolution> {
    let n = b.len();
    let m = generators.len();
    if m == 0 {
        return Ok(NnlsSolution {
            lambda: vec![],
            fitted: vec![0.0; n],
            residual_norm: crate::linalg::norm(b),
            iterations: 0,
        });
    }
    for g in generators {
        if g.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
    }
    let a = DMatrix::from_fn(n, m, |i, j| generators[j][i]);
    let bv = DVector::from_column_slice(b);
    let cap = 100 * m;

    let mut lambda = DVector::<f64>::zeros(m);
    let mut passive = vec![false; m];
    let mut iterations = 0;

    loop {
        let resid = &bv - &a * &lambda;
        let w = a.transpose() * &resid;
        let candidate = (0..m)
            .filter(|&j| !passive[j] && w[j] > DUAL_TOL)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap().then(j.cmp(&i)));
        let Some(enter) = candidate else { break };
        iterations += 1;
        if iterations > cap {
            return Err(Error::NnlsNonConvergence { iterations: cap });
        }
        passive[enter] = true;

        loop {
            let idx: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
            let s = passive_lstsq(&a, &bv, &idx);
            let mut z = DVector::<f64>::zeros(m);
            for (k, &j) in idx.iter().enumerate() {
                z[j] = s[k];
            }
            if idx.iter().all(|&j| z[j] > 0.0) {
                lambda = z;
                break;
            }
            iterations += 1;
            if iterations > cap {
                return Err(Error::NnlsNonConvergence { iterations: cap });
            }
            let mut step = f64::INFINITY;
            for &j in &idx {
                if z[j] <= 0.0 {
                    let denom = lambda[j] - z[j];
                    let t = if denom > 0.0 { lambda[j] / denom } else { 0.0 };
                    step = step.min(t);
                }
            }
            lambda = &lambda + (&z - &lambda) * step;
            for &j in &idx {
                if lambda[j] <= 1e-15 {
                    lambda[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }

    let fitted = &a * &lambda;
    let residual_norm = (&bv - &fitted).norm();
    Ok(NnlsSolution {
        lambda: lambda.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
        residual_norm,
        iterations,
    })
}

fn passive_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(idx);
    let svd = sub.svd(true, true);
    svd.solve(b, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(idx.len()))
}

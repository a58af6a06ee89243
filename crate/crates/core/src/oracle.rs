//! Reference optimum by projected gradient descent.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::objective::SmoothObjective;
use crate::region::{Region, RegionKind};

pub const ORACLE_MAX_ITERS: usize = 1_000_000;
pub const ORACLE_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Euclidean projection onto the probability simplex (sort method).
pub fn project_simplex(v: &[f64], radius: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - radius) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|vi| (vi - theta).max(0.0)).collect()
}

pub fn project_hypercube(v: &[f64]) -> Vec<f64> {
    v.iter().map(|vi| vi.clamp(0.0, 1.0)).collect()
}

pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= radius {
        return v.to_vec();
    }
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let w = project_simplex(&abs, radius);
    w.iter().zip(v).map(|(wi, vi)| wi * vi.signum()).collect()
}

pub fn project(region: &Region, v: &[f64]) -> Result<Vec<f64>> {
    match region.kind() {
        RegionKind::Simplex { .. } => Ok(project_simplex(v, 1.0)),
        RegionKind::Hypercube { .. } => Ok(project_hypercube(v)),
        RegionKind::L1Ball { radius, .. } => Ok(project_l1_ball(v, radius)),
        RegionKind::GenericVRep => Err(Error::InvalidRegion(
            "projection is only available for built-in regions".into(),
        )),
    }
}

/// Projected gradient with step `1/L` until the gradient-mapping residual
/// `‖x − P(x − ∇f(x)/L)‖` drops to `tol`.
pub fn projected_gradient(
    obj: &dyn SmoothObjective,
    region: &Region,
    x0: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<ReferenceOptimum> {
    if region.kind() == RegionKind::GenericVRep {
        return projected_gradient_weights(obj, region, max_iters, tol);
    }
    let l = obj.lipschitz();
    let mut x = project(region, x0)?;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let g = obj.gradient(&x);
        let step: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / l).collect();
        let next = project(region, &step)?;
        residual = dist(&x, &next);
        x = next;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    let f_star = obj.value(&x);
    Ok(ReferenceOptimum {
        x_star: x,
        f_star,
        iterations,
        residual,
    })
}

/// Projected gradient on the barycentric weights `λ ∈ Δ_m` of `x = Aλ`,
/// where the projection is exact. Starts from uniform weights; the residual
/// is measured on `λ`.
fn projected_gradient_weights(
    obj: &dyn SmoothObjective,
    region: &Region,
    max_iters: usize,
    tol: f64,
) -> Result<ReferenceOptimum> {
    let atoms = region.atoms().atoms();
    let m = atoms.len();
    let n = region.dim();
    let a = DMatrix::from_fn(n, m, |i, j| atoms[j][i]);
    let sigma = a.singular_values().max();
    let l = obj.lipschitz() * (sigma * sigma).max(f64::MIN_POSITIVE);
    let point = |lambda: &[f64]| -> Vec<f64> { (&a * DVector::from_column_slice(lambda)).iter().copied().collect() };
    let mut lambda = vec![1.0 / m as f64; m];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let g = DVector::from_vec(obj.gradient(&point(&lambda)));
        let lifted = a.transpose() * g;
        let step: Vec<f64> = lambda.iter().zip(lifted.iter()).map(|(li, gi)| li - gi / l).collect();
        let next = project_simplex(&step, 1.0);
        residual = dist(&lambda, &next);
        lambda = next;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    let x_star = point(&lambda);
    let f_star = obj.value(&x_star);
    Ok(ReferenceOptimum {
        x_star,
        f_star,
        iterations,
        residual,
    })
}

type CacheKey = (String, Vec<u64>);

fn cache() -> &'static Mutex<HashMap<CacheKey, ReferenceOptimum>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, ReferenceOptimum>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Reference optimum for a convex objective, cached under `key` (callers
/// pass something identifying the objective, e.g. family, seed and μ/L).
pub fn reference_optimum(
    key: &str,
    obj: &dyn SmoothObjective,
    region: &Region,
    x0: &[f64],
) -> Result<ReferenceOptimum> {
    let bits: Vec<u64> = x0.iter().map(|v| v.to_bits()).collect();
    let k = (format!("{key}|{}", region.label()), bits);
    if let Some(hit) = cache().lock().expect("cache poisoned").get(&k) {
        return Ok(hit.clone());
    }
    let out = projected_gradient(obj, region, x0, ORACLE_MAX_ITERS, ORACLE_RESIDUAL)?;
    cache().lock().expect("cache poisoned").insert(k, out.clone());
    Ok(out)
}

//! Pyramidal width and the constants derived from it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale, sub};
use crate::region::{AtomSet, Region, RegionKind};
use crate::rng::SeededRng;

/// Largest atom set `pdirw` will enumerate subsets of.
pub const PDIRW_ATOM_CAP: usize = 12;
/// Minimum weight required for a proper convex combination.
pub const PROPER_WEIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthSource {
    ClosedForm,
    SampledUpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryBounds {
    pub pwidth: f64,
    pub pwidth_vertices: f64,
    pub diameter: f64,
    pub tau_pfw: f64,
    pub tau_afw: f64,
    pub tau_fd: f64,
    pub source: WidthSource,
}

impl GeometryBounds {
    pub fn new(pwidth: f64, pwidth_vertices: f64, diameter: f64, source: WidthSource) -> Result<Self> {
        if !(pwidth > 0.0 && pwidth_vertices > 0.0 && diameter > 0.0) {
            return Err(Error::InvalidParameter("widths and diameter must be positive".into()));
        }
        let tau_pfw = (pwidth / diameter).min(1.0);
        Ok(Self {
            pwidth,
            pwidth_vertices,
            diameter,
            tau_pfw,
            tau_afw: tau_pfw / 2.0,
            tau_fd: (pwidth_vertices / (2.0 * diameter)).min(0.5),
            source,
        })
    }

    /// Closed forms for the standard simplex and the unit cube, a sampled
    /// estimate otherwise.
    pub fn for_region(region: &Region, samples: usize, seed: u64) -> Result<Self> {
        let d = region.diameter();
        match region.kind() {
            RegionKind::Simplex { n } => {
                let w = pwidth_simplex(n)?;
                Self::new(w, w, d, WidthSource::ClosedForm)
            }
            RegionKind::Hypercube { n } => {
                let w = pwidth_hypercube(n)?;
                Self::new(w, w, d, WidthSource::ClosedForm)
            }
            RegionKind::L1Ball { .. } | RegionKind::GenericVRep => {
                let w = pwidth_estimate(region.atoms(), samples, seed)?;
                let vertices = vertex_subset(region.atoms())?;
                let wv = if vertices.len() == region.atoms().len() {
                    w
                } else {
                    let vs = AtomSet::new(vertices.iter().map(|&i| region.atoms().atom(i).to_vec()).collect())?;
                    pwidth_estimate(&vs, samples, seed)?
                };
                Self::new(w, wv, d, WidthSource::SampledUpperBound)
            }
        }
    }
}

/// `2√(1/n)` for even `n`, `2/√(n − 1/n)` for odd `n`.
pub fn pwidth_simplex(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter("simplex width needs n >= 2".into()));
    }
    let nf = n as f64;
    Ok(if n % 2 == 0 {
        2.0 * (1.0 / nf).sqrt()
    } else {
        2.0 / (nf - 1.0 / nf).sqrt()
    })
}

/// Pyramidal width `1/√n` of the unit cube `[0,1]^n`.
pub fn pwidth_hypercube(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("cube width needs n >= 1".into()));
    }
    Ok(1.0 / (n as f64).sqrt())
}

/// Max over `(z, t)` of `t` subject to `λ0 + N z ≥ t`, by enumerating basic
/// solutions. Returns the optimal minimum weight.
fn max_min_weight(lambda0: &DVector<f64>, null: &DMatrix<f64>) -> f64 {
    let m = lambda0.len();
    let k = null.ncols();
    if k == 0 {
        return lambda0.min();
    }
    let vars = k + 1;
    let mut best = f64::NEG_INFINITY;
    for rows in combinations(m, vars) {
        // N_i z - t = -λ0_i on the active rows
        let mut a = DMatrix::zeros(vars, vars);
        let mut b = DVector::zeros(vars);
        for (r, &i) in rows.iter().enumerate() {
            for c in 0..k {
                a[(r, c)] = null[(i, c)];
            }
            a[(r, k)] = -1.0;
            b[r] = -lambda0[i];
        }
        let Some(sol) = a.lu().solve(&b) else { continue };
        let z = sol.rows(0, k);
        let t = sol[k];
        let weights = lambda0 + null * z;
        if weights.iter().all(|&w| w >= t - 1e-12) && t > best {
            best = t;
        }
    }
    best
}

pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= m {
        rec(0, m, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Whether `x` is a combination of all atoms in `subset` with weights above
/// the strictness threshold.
pub fn is_proper_combination(atoms: &AtomSet, subset: &[usize], x: &[f64]) -> bool {
    let n = atoms.dim();
    let s = subset.len();
    let mut a = DMatrix::zeros(n + 1, s);
    for (c, &i) in subset.iter().enumerate() {
        for (r, v) in atoms.atom(i).iter().enumerate() {
            a[(r, c)] = *v;
        }
        a[(n, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    for (r, v) in x.iter().enumerate() {
        rhs[r] = *v;
    }
    rhs[n] = 1.0;
    let svd = a.clone().svd(true, true);
    // the kernel of A parametrizes every weight vector reproducing x
    let Ok(lambda0) = svd.solve(&rhs, 1e-12) else { return false };
    if (&a * &lambda0 - &rhs).norm() > 1e-9 {
        return false;
    }
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&v| v > 1e-10 * smax.max(1.0)).count();
    let null = if rank == s {
        DMatrix::zeros(s, 0)
    } else {
        kernel_basis(&a, rank)
    };
    max_min_weight(&lambda0, &null) > PROPER_WEIGHT_TOL
}

fn kernel_basis(a: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let cols = a.ncols();
    // Pad to a square matrix so the SVD returns a full set of right vectors.
    let rows = a.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let kernel_rows: Vec<usize> = order[rank..].to_vec();
    DMatrix::from_fn(cols, kernel_rows.len(), |r, c| v_t[(kernel_rows[c], r)])
}

/// Pyramidal directional width of `atoms` at `x` for direction `g`.
pub fn pdirw(atoms: &AtomSet, g: &[f64], x: &[f64]) -> Result<f64> {
    let m = atoms.len();
    if m > PDIRW_ATOM_CAP {
        return Err(Error::AtomCap {
            count: m,
            cap: PDIRW_ATOM_CAP,
        });
    }
    if g.len() != atoms.dim() || x.len() != atoms.dim() {
        return Err(Error::DimensionMismatch {
            expected: atoms.dim(),
            got: g.len().max(x.len()),
        });
    }
    let gn = norm(g);
    if gn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let gh = scale(g, 1.0 / gn);
    let values: Vec<f64> = atoms.atoms().iter().map(|a| dot(&gh, a)).collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<f64> = None;
    for mask in 1u32..(1u32 << m) {
        let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let low = subset.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
        let candidate = top - low;
        if best.is_some_and(|b| candidate >= b) {
            continue;
        }
        if is_proper_combination(atoms, &subset, x) {
            best = Some(candidate);
        }
    }
    best.ok_or(Error::NotRepresentable)
}

/// Indices of atoms that are not convex combinations of the others.
pub fn vertex_subset(atoms: &AtomSet) -> Result<Vec<usize>> {
    let m = atoms.len();
    let scale_w = 1.0 + atoms.diameter();
    let mut out = Vec::new();
    for i in 0..m {
        let gens: Vec<Vec<f64>> = (0..m)
            .filter(|&j| j != i)
            .map(|j| {
                let mut v = atoms.atom(j).to_vec();
                v.push(scale_w);
                v
            })
            .collect();
        let mut target = atoms.atom(i).to_vec();
        target.push(scale_w);
        let sol = crate::nnls::nnls(&gens, &target)?;
        if sol.residual_norm > 1e-9 {
            out.push(i);
        }
    }
    Ok(out)
}

/// Sampled upper bound on the pyramidal width: the minimum of `pdirw` over
/// seeded feasible `(x, g)` pairs on the whole polytope.
pub fn pwidth_estimate(atoms: &AtomSet, samples: usize, seed: u64) -> Result<f64> {
    let m = atoms.len();
    if m > PDIRW_ATOM_CAP {
        return Err(Error::AtomCap {
            count: m,
            cap: PDIRW_ATOM_CAP,
        });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample required".into()));
    }
    let mut rng = SeededRng::new(seed);
    let n = atoms.dim();
    let base = atoms.atom(0).to_vec();
    let span: Vec<Vec<f64>> = (1..m).map(|i| sub(atoms.atom(i), &base)).collect();
    let basis = orthonormal_basis(&span);
    let mut best = f64::INFINITY;
    let mut drawn = 0;
    while drawn < samples {
        let (x, g) = if drawn % 2 == 0 {
            let w = rng.dirichlet(m);
            let x = combine(atoms, &(0..m).collect::<Vec<_>>(), &w);
            let z = rng.normal_vec(n);
            let mut g = vec![0.0; n];
            for b in &basis {
                let c = dot(&z, b);
                for (gi, bi) in g.iter_mut().zip(b) {
                    *gi += c * bi;
                }
            }
            (x, g)
        } else {
            let k = 1 + rng.below(m);
            let idx = rng.subset(m, k);
            let w = rng.dirichlet(k);
            let x = combine(atoms, &idx, &w);
            let mut g = vec![0.0; n];
            let picks = 1 + rng.below(m.min(3));
            for _ in 0..picks {
                let a = rng.below(m);
                let c = rng.exponential();
                for (gi, (ai, xi)) in g.iter_mut().zip(atoms.atom(a).iter().zip(&x)) {
                    *gi += c * (ai - xi);
                }
            }
            (x, g)
        };
        drawn += 1;
        if norm(&g) <= 1e-9 {
            continue;
        }
        match pdirw(atoms, &g, &x) {
            Ok(v) => best = best.min(v),
            Err(Error::NotRepresentable) => {}
            Err(e) => return Err(e),
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NotRepresentable)
    }
}

fn combine(atoms: &AtomSet, idx: &[usize], w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; atoms.dim()];
    for (&i, &wi) in idx.iter().zip(w) {
        for (xi, ai) in x.iter_mut().zip(atoms.atom(i)) {
            *xi += wi * ai;
        }
    }
    x
}

fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let n = norm(&w);
        if n > 1e-9 {
            basis.push(scale(&w, 1.0 / n));
        }
    }
    basis
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub q: f64,
    pub q_gs_short: f64,
    pub q_gs_fw: f64,
    pub k: f64,
}

pub fn rate_constants(mu: f64, l: f64, tau: f64) -> Result<RateConstants> {
    if !(mu > 0.0 && mu <= l && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < mu <= L, got mu={mu}, L={l}")));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < tau <= 1, got {tau}")));
    }
    let r = mu / l;
    Ok(RateConstants {
        q: 1.0 / (1.0 + r * tau * tau / ((1.0 + tau) * (1.0 + tau))),
        q_gs_short: 1.0 - r * tau * tau,
        q_gs_fw: 1.0 / (1.0 + r),
        k: hidden_constant(l, tau)?,
    })
}

/// `K = τ / (L(1 + τ))`.
pub fn hidden_constant(l: f64, tau: f64) -> Result<f64> {
    if !(l > 0.0 && tau > 0.0) {
        return Err(Error::InvalidParameter("need L > 0 and tau > 0".into()));
    }
    Ok(tau / (l * (1.0 + tau)))
}

//! Smooth objectives with exactly known gradient Lipschitz constants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::region::Region;
use crate::rng::SeededRng;

pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Lipschitz constant `L` of the gradient.
    fn lipschitz(&self) -> f64;
    /// Strong convexity (or KL) modulus `μ`, if known.
    fn strong_mu(&self) -> Option<f64> {
        None
    }
    /// Reference stationary point `x*`, if known.
    fn reference_point(&self) -> Option<&[f64]> {
        None
    }
    /// Reference value `f(x*)`, if known.
    fn reference_value(&self) -> Option<f64> {
        None
    }
    /// `argmin_{α >= 0} f(x + αd)` when the objective supports it in closed form.
    fn exact_linesearch(&self, _x: &[f64], _d: &[f64]) -> Option<Result<f64>> {
        None
    }
}

/// `f(x) = ½⟨x, Qx⟩ + ⟨b, x⟩ + c` with symmetric `Q`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    q: DMatrix<f64>,
    b: DVector<f64>,
    constant: f64,
    lipschitz: f64,
    strong_mu: Option<f64>,
    eigenvalues: Vec<f64>,
    reference: Option<(Vec<f64>, f64)>,
}

impl QuadraticObjective {
    pub fn new(q: DMatrix<f64>, b: Vec<f64>, constant: f64) -> Result<Self> {
        let n = b.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.nrows(),
            });
        }
        let asym = (&q - q.transpose()).abs().max();
        if asym > 1e-12 * q.abs().max().max(1.0) {
            return Err(Error::InvalidParameter("Q must be symmetric".into()));
        }
        let q = (&q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(q.clone());
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lipschitz = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if lipschitz <= 0.0 {
            return Err(Error::InvalidParameter("Q must be nonzero".into()));
        }
        let smallest = eigenvalues[0];
        Ok(Self {
            q,
            b: DVector::from_vec(b),
            constant,
            lipschitz,
            strong_mu: (smallest > 0.0).then_some(smallest),
            eigenvalues,
            reference: None,
        })
    }

    /// `½‖x - center‖²`: `μ = L = 1`, minimizer `center`, minimum 0.
    pub fn distance_squared(center: &[f64]) -> Result<Self> {
        Self::scaled_distance(1.0, center)
    }

    /// `(μ/2)‖x - center‖²`.
    pub fn scaled_distance(mu: f64, center: &[f64]) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter("mu must be positive".into()));
        }
        let n = center.len();
        let q = DMatrix::identity(n, n) * mu;
        let b = center.iter().map(|c| -mu * c).collect();
        let constant = 0.5 * mu * dot(center, center);
        Ok(Self::new(q, b, constant)?.with_reference(center.to_vec(), 0.0))
    }

    /// Strongly convex quadratic with spectrum spread linearly over `[mu, l]`,
    /// rotated by a seeded random orthogonal matrix. The unconstrained
    /// minimizer is a standard normal vector, so constrained minimizers usually
    /// lie on the boundary.
    pub fn strongly_convex(n: usize, mu: f64, l: f64, seed: u64) -> Result<Self> {
        if !(mu > 0.0 && mu <= l) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < mu <= L, got mu={mu}, L={l}"
            )));
        }
        let mut rng = SeededRng::derive(seed, 1);
        let spectrum = linspace(mu, l, n);
        let q = rotated(&spectrum, &mut rng);
        let center = DVector::from_vec(rng.normal_vec(n));
        let b = -(&q * &center);
        Self::new(q, b.iter().copied().collect(), 0.0)
    }

    /// Indefinite quadratic with spectrum spread over `[-l, l]` (n >= 2) and a
    /// random linear term.
    pub fn indefinite(n: usize, l: f64, seed: u64) -> Result<Self> {
        if n < 2 || !(l > 0.0) {
            return Err(Error::InvalidParameter(
                "indefinite quadratic needs n >= 2 and L > 0".into(),
            ));
        }
        let mut rng = SeededRng::derive(seed, 2);
        let spectrum = linspace(-l, l, n);
        let q = rotated(&spectrum, &mut rng);
        let b: Vec<f64> = rng.normal_vec(n).into_iter().map(|v| 0.5 * v).collect();
        Self::new(q, b, 0.0)
    }

    pub fn with_reference(mut self, x_star: Vec<f64>, f_star: f64) -> Self {
        self.reference = Some((x_star, f_star));
        self
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }

    /// Sorted eigenvalues of `Q`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn is_positive_definite(&self) -> bool {
        self.strong_mu.is_some()
    }

    /// `-Q⁻¹b` when `Q` is positive definite.
    pub fn unconstrained_minimizer(&self) -> Option<Vec<f64>> {
        if !self.is_positive_definite() {
            return None;
        }
        let sol = self.q.clone().cholesky()?.solve(&(-&self.b));
        Some(sol.iter().copied().collect())
    }

    fn qx(&self, x: &[f64]) -> DVector<f64> {
        &self.q * DVector::from_column_slice(x)
    }
}

impl SmoothObjective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let qx = self.qx(x);
        0.5 * dot(x, qx.as_slice()) + dot(self.b.as_slice(), x) + self.constant
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.qx(x) + &self.b).iter().copied().collect()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn strong_mu(&self) -> Option<f64> {
        self.strong_mu
    }

    fn reference_point(&self) -> Option<&[f64]> {
        self.reference.as_ref().map(|(x, _)| x.as_slice())
    }

    fn reference_value(&self) -> Option<f64> {
        self.reference.as_ref().map(|(_, f)| *f)
    }

    fn exact_linesearch(&self, x: &[f64], d: &[f64]) -> Option<Result<f64>> {
        Some(exact_linesearch_step(self, x, d))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![hi],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `U diag(spectrum) Uᵀ` with `U` the sign-normalized Q factor of a Gaussian matrix.
fn rotated(spectrum: &[f64], rng: &mut SeededRng) -> DMatrix<f64> {
    let n = spectrum.len();
    let g = DMatrix::from_fn(n, n, |_, _| rng.normal());
    let qr = g.qr();
    let mut u = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            u.column_mut(j).neg_mut();
        }
    }
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(spectrum));
    let m = &u * d * u.transpose();
    (&m + m.transpose()) * 0.5
}

/// `π_x(-∇f(x)) - √(2μ)·max(0, f(x) - f*)^{1/2}`; nonnegative iff the KL
/// inequality with modulus `μ` holds at `x`.
pub fn kl_residual(obj: &dyn SmoothObjective, region: &Region, x: &[f64]) -> Result<f64> {
    let mu = obj.strong_mu().ok_or(Error::MissingConstant("strong_mu"))?;
    let f_star = obj
        .reference_value()
        .ok_or(Error::MissingConstant("reference_value"))?;
    let neg_grad: Vec<f64> = obj.gradient(x).into_iter().map(|v| -v).collect();
    let pi = region.tangent_projection_norm(x, &neg_grad)?;
    Ok(pi - (2.0 * mu).sqrt() * (obj.value(x) - f_star).max(0.0).sqrt())
}

/// Minimizer of `α ↦ f(x + αd)` over `α >= 0`; `+∞` when the curvature along
/// `d` is not positive.
pub fn exact_linesearch_step(obj: &QuadraticObjective, x: &[f64], d: &[f64]) -> Result<f64> {
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let curvature = dot(d, obj.qx(d).as_slice());
    if curvature <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let slope = -dot(&obj.gradient(x), d);
    Ok((slope / curvature).max(0.0))
}

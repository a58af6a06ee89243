//! Polytopes given by atoms, with halfspace data for the built-in kinds.
//!
//! A [`Region`] answers linear minimization, minimal-face, ratio-test and
//! tangent/normal cone queries. Cone queries need the halfspace
//! representation, so a bare [`RegionKind::GenericVRep`] only supports the
//! linear oracle, the diameter and the FW gap.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{argmax_lowest, dist, dot, norm, sub};
use crate::nnls::nnls;

/// Absolute tolerance for feasibility and constraint activity.
pub const FEAS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSet {
    atoms: Vec<Vec<f64>>,
    dim: usize,
    diameter: f64,
}

impl AtomSet {
    pub fn new(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidRegion("atom set is empty".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidRegion("atoms have zero length".into()));
        }
        if let Some(bad) = atoms.iter().find(|a| a.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        if atoms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRegion("non-finite atom coordinate".into()));
        }
        let mut diameter: f64 = 0.0;
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                diameter = diameter.max(dist(&atoms[i], &atoms[j]));
            }
        }
        Ok(Self {
            atoms,
            dim,
            diameter,
        })
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Atom maximizing `⟨a, g⟩`, lowest index on ties.
    pub fn argmax(&self, g: &[f64]) -> usize {
        argmax_lowest(self.atoms.iter().map(|a| dot(a, g))).expect("nonempty atom set")
    }

    /// Affine dimension of the listed atoms (`-1` encoded as `None` for an empty list).
    pub fn affine_dim(&self, indices: &[usize]) -> Option<usize> {
        let (&first, rest) = indices.split_first()?;
        if rest.is_empty() {
            return Some(0);
        }
        let base = &self.atoms[first];
        let m = DMatrix::from_fn(self.dim, rest.len(), |i, j| self.atoms[rest[j]][i] - base[i]);
        Some(m.rank(1e-9))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    Simplex { n: usize },
    Hypercube { n: usize },
    L1Ball { n: usize, radius: f64 },
    GenericVRep,
}

/// `{x : ⟨normal, x⟩ <= offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// `offset - ⟨normal, x⟩`, nonnegative when satisfied.
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceDescriptor {
    pub active_constraint_indices: Vec<usize>,
    pub face_atoms: Vec<usize>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    kind: RegionKind,
    atom_set: AtomSet,
    halfspaces: Option<Vec<Halfspace>>,
}

impl Region {
    /// Probability simplex `conv{e_1, ..., e_n}`. The constraint `Σx = 1` is
    /// stored as the two opposing halfspaces `Σx <= 1` and `-Σx <= -1`.
    pub fn simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidRegion("simplex needs n >= 1".into()));
        }
        let atoms = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut hs: Vec<Halfspace> = (0..n)
            .map(|i| {
                let mut a = vec![0.0; n];
                a[i] = -1.0;
                Halfspace::new(a, 0.0)
            })
            .collect();
        hs.push(Halfspace::new(vec![1.0; n], 1.0));
        hs.push(Halfspace::new(vec![-1.0; n], -1.0));
        Ok(Self {
            kind: RegionKind::Simplex { n },
            atom_set: AtomSet::new(atoms)?,
            halfspaces: Some(hs),
        })
    }

    /// Unit cube `[0, 1]^n`. Atom `k` has coordinate `i` equal to bit `i` of `k`.
    pub fn hypercube(n: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::InvalidRegion("hypercube needs 1 <= n <= 20".into()));
        }
        let atoms = (0..(1usize << n))
            .map(|k| (0..n).map(|i| ((k >> i) & 1) as f64).collect())
            .collect();
        let mut hs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            hs.push(Halfspace::new(up, 1.0));
            let mut down = vec![0.0; n];
            down[i] = -1.0;
            hs.push(Halfspace::new(down, 0.0));
        }
        Ok(Self {
            kind: RegionKind::Hypercube { n },
            atom_set: AtomSet::new(atoms)?,
            halfspaces: Some(hs),
        })
    }

    /// Cross-polytope `{x : ||x||_1 <= radius}` with atoms `+r e_0, -r e_0, +r e_1, ...`.
    pub fn l1_ball(n: usize, radius: f64) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::InvalidRegion("l1 ball needs 1 <= n <= 16".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRegion("l1 ball radius must be positive".into()));
        }
        let mut atoms = Vec::with_capacity(2 * n);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut a = vec![0.0; n];
                a[i] = sign * radius;
                atoms.push(a);
            }
        }
        let hs = (0..(1usize << n))
            .map(|k| {
                let normal = (0..n)
                    .map(|i| if (k >> i) & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                Halfspace::new(normal, radius)
            })
            .collect();
        Ok(Self {
            kind: RegionKind::L1Ball { n, radius },
            atom_set: AtomSet::new(atoms)?,
            halfspaces: Some(hs),
        })
    }

    /// Polytope given only by its atoms.
    pub fn from_atoms(atoms: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self {
            kind: RegionKind::GenericVRep,
            atom_set: AtomSet::new(atoms)?,
            halfspaces: None,
        })
    }

    /// Attach a halfspace description to a generic polytope. The caller is
    /// responsible for it describing the same set; atoms are checked against it.
    pub fn with_halfspaces(mut self, halfspaces: Vec<Halfspace>) -> Result<Self> {
        let n = self.dim();
        if let Some(h) = halfspaces.iter().find(|h| h.normal.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.normal.len(),
            });
        }
        for a in self.atom_set.atoms() {
            if halfspaces.iter().any(|h| h.slack(a) < -FEAS_TOL) {
                return Err(Error::InvalidRegion(
                    "an atom violates the supplied halfspaces".into(),
                ));
            }
        }
        self.halfspaces = Some(halfspaces);
        Ok(self)
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn atoms(&self) -> &AtomSet {
        &self.atom_set
    }

    pub fn halfspaces(&self) -> Option<&[Halfspace]> {
        self.halfspaces.as_deref()
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.atom_set.dim()
    }

    /// Dimension of the polytope itself.
    pub fn polytope_dim(&self) -> usize {
        match self.kind {
            RegionKind::Simplex { n } => n - 1,
            RegionKind::Hypercube { n } | RegionKind::L1Ball { n, .. } => n,
            RegionKind::GenericVRep => {
                let all: Vec<usize> = (0..self.atom_set.len()).collect();
                self.atom_set.affine_dim(&all).unwrap_or(0)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        self.atom_set.diameter()
    }

    pub fn label(&self) -> String {
        match self.kind {
            RegionKind::Simplex { n } => format!("simplex{n}"),
            RegionKind::Hypercube { n } => format!("hypercube{n}"),
            RegionKind::L1Ball { n, radius } => format!("l1ball{n}_r{radius}"),
            RegionKind::GenericVRep => format!("vrep{}x{}", self.atom_set.len(), self.dim()),
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    fn require_halfspaces(&self) -> Result<&[Halfspace]> {
        self.halfspaces.as_deref().ok_or(Error::MissingHalfspaces)
    }

    /// Largest halfspace violation at `x` (`<= 0` when strictly feasible).
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let hs = self.require_halfspaces()?;
        Ok(hs
            .iter()
            .map(|h| -h.slack(x))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn is_feasible(&self, x: &[f64]) -> Result<bool> {
        Ok(self.max_violation(x)? <= FEAS_TOL)
    }

    fn check_feasible(&self, x: &[f64]) -> Result<&[Halfspace]> {
        let violation = self.max_violation(x)?;
        if violation > FEAS_TOL {
            return Err(Error::Infeasible { violation });
        }
        self.require_halfspaces()
    }

    /// Linear maximization of `⟨a, g⟩` over the atoms (the Frank-Wolfe vertex
    /// for gradient `-g`); ties go to the lowest atom index.
    pub fn lmo(&self, g: &[f64]) -> Result<usize> {
        self.check_dim(g)?;
        Ok(self.atom_set.argmax(g))
    }

    pub fn minimal_face(&self, x: &[f64]) -> Result<FaceDescriptor> {
        let hs = self.check_feasible(x)?;
        let active: Vec<usize> = hs
            .iter()
            .enumerate()
            .filter(|(_, h)| h.slack(x).abs() <= FEAS_TOL)
            .map(|(i, _)| i)
            .collect();
        let face_atoms: Vec<usize> = (0..self.atom_set.len())
            .filter(|&k| {
                let a = self.atom_set.atom(k);
                active.iter().all(|&i| hs[i].slack(a).abs() <= FEAS_TOL)
            })
            .collect();
        let dim = self.atom_set.affine_dim(&face_atoms).unwrap_or(0);
        Ok(FaceDescriptor {
            active_constraint_indices: active,
            face_atoms,
            dim,
        })
    }

    /// `max{α >= 0 : x + αd ∈ Ω}` by the halfspace ratio test; `+∞` when no
    /// constraint blocks `d`.
    pub fn max_feasible_step(&self, x: &[f64], d: &[f64]) -> Result<f64> {
        self.check_dim(d)?;
        let hs = self.check_feasible(x)?;
        let dn = norm(d);
        if dn == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let mut best = f64::INFINITY;
        for h in hs {
            let rate = dot(&h.normal, d);
            if rate > 1e-14 * norm(&h.normal) * dn {
                best = best.min(h.slack(x).max(0.0) / rate);
            }
        }
        Ok(best)
    }

    /// Normals of the constraints active at `x`; their conic hull is `N_Ω(x)`.
    pub fn normal_cone_generators(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let hs = self.check_feasible(x)?;
        Ok(hs
            .iter()
            .filter(|h| h.slack(x).abs() <= FEAS_TOL)
            .map(|h| h.normal.clone())
            .collect())
    }

    /// Projection of `g` onto the tangent cone `T_Ω(x)`, i.e. `g - π(N_Ω(x), g)`.
    pub fn tangent_projection(&self, x: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(g)?;
        let gens = self.normal_cone_generators(x)?;
        let sol = nnls(&gens, g)?;
        Ok(sub(g, &sol.fitted))
    }

    /// `||π(T_Ω(x), g)||`, computed as the distance from `g` to the normal cone.
    pub fn tangent_projection_norm(&self, x: &[f64], g: &[f64]) -> Result<f64> {
        self.check_dim(g)?;
        let gens = self.normal_cone_generators(x)?;
        if gens.is_empty() {
            return Ok(norm(g));
        }
        Ok(nnls(&gens, g)?.residual_norm)
    }

    /// Raw FW gap `max_a ⟨neg_grad, a - x⟩` (may be slightly negative at
    /// stationary points).
    pub fn fw_gap(&self, x: &[f64], neg_grad: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(neg_grad)?;
        let gx = dot(neg_grad, x);
        Ok(self
            .atom_set
            .atoms()
            .iter()
            .map(|a| dot(neg_grad, a) - gx)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Remove round-off infeasibility (at most 1e-9) left by ratio-test steps.
    pub fn clean_point(&self, x: &mut [f64]) {
        match self.kind {
            RegionKind::Simplex { .. } => {
                for v in x.iter_mut() {
                    if *v < 0.0 && *v > -1e-9 {
                        *v = 0.0;
                    }
                }
            }
            RegionKind::Hypercube { .. } => {
                for v in x.iter_mut() {
                    if *v < 0.0 && *v > -1e-9 {
                        *v = 0.0;
                    } else if *v > 1.0 && *v < 1.0 + 1e-9 {
                        *v = 1.0;
                    }
                }
            }
            RegionKind::L1Ball { radius, .. } => {
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                if l1 > radius && l1 < radius + 1e-9 {
                    let s = radius / l1;
                    x.iter_mut().for_each(|v| *v *= s);
                }
            }
            RegionKind::GenericVRep => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lmo_examples() {
        let s = Region::simplex(3).unwrap();
        assert_eq!(s.lmo(&[0.5, -1.0, 2.0]).unwrap(), 2);
        assert_eq!(s.lmo(&[0.0, 0.0, 0.0]).unwrap(), 0);
        let c = Region::hypercube(2).unwrap();
        let k = c.lmo(&[1.0, -2.0]).unwrap();
        assert_eq!(c.atoms().atom(k), &[1.0, 0.0]);
        assert!(matches!(
            s.lmo(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lmo_matches_enumeration_on_cube() {
        let c = Region::hypercube(2).unwrap();
        let g = [1.0, -2.0];
        let best = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|v| v[0] * g[0] + v[1] * g[1])
            .fold(f64::NEG_INFINITY, f64::max);
        let k = c.lmo(&g).unwrap();
        assert_eq!(dot(c.atoms().atom(k), &g), best);
    }

    #[test]
    fn minimal_face_examples() {
        let s = Region::simplex(3).unwrap();
        let f = s.minimal_face(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(f.dim, 2);
        assert_eq!(f.face_atoms, vec![0, 1, 2]);
        let f = s.minimal_face(&[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(f.dim, 1);
        assert_eq!(f.face_atoms, vec![0, 1]);
        let c = Region::hypercube(2).unwrap();
        let f = c.minimal_face(&[1.0, 0.3]).unwrap();
        assert_eq!(f.dim, 1);
        let pts: Vec<&[f64]> = f.face_atoms.iter().map(|&k| c.atoms().atom(k)).collect();
        assert_eq!(pts, vec![&[1.0, 0.0][..], &[1.0, 1.0][..]]);
        assert!(matches!(
            s.minimal_face(&[0.6, 0.6, 0.0]),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn max_feasible_step_examples() {
        let s = Region::simplex(3).unwrap();
        let x = [1.0 / 3.0; 3];
        let d = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        assert!(close(s.max_feasible_step(&x, &d).unwrap(), 1.0, 1e-12));
        let c = Region::hypercube(2).unwrap();
        assert!(close(c.max_feasible_step(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.5, 1e-15));
        assert!(close(
            s.max_feasible_step(&[0.5, 0.5, 0.0], &[1.0, -1.0, 0.0]).unwrap(),
            0.5,
            1e-15
        ));
        assert_eq!(
            s.max_feasible_step(&x, &[0.0; 3]),
            Err(Error::ZeroDirection)
        );
    }

    #[test]
    fn normal_cone_examples() {
        let s = Region::simplex(3).unwrap();
        assert!(Region::hypercube(2)
            .unwrap()
            .normal_cone_generators(&[0.5, 0.5])
            .unwrap()
            .is_empty());
        let gens = s.normal_cone_generators(&[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(
            gens,
            vec![vec![0.0, 0.0, -1.0], vec![1.0; 3], vec![-1.0; 3]]
        );
        let c = Region::hypercube(2).unwrap();
        assert_eq!(
            c.normal_cone_generators(&[1.0, 1.0]).unwrap(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]]
        );
    }

    #[test]
    fn tangent_projection_examples() {
        let c = Region::hypercube(2).unwrap();
        assert!(close(c.tangent_projection_norm(&[0.5, 0.5], &[3.0, 4.0]).unwrap(), 5.0, 1e-15));
        let s = Region::simplex(3).unwrap();
        let e1 = [1.0, 0.0, 0.0];
        assert!(s.tangent_projection_norm(&e1, &[1.0, 0.0, 0.0]).unwrap() < 1e-12);
        // closed form: projection of e2 onto cone{e2 - e1, e3 - e1}
        let u = [-1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0];
        let closed = dot(&u, &[0.0, 1.0, 0.0]);
        let v = s.tangent_projection_norm(&e1, &[0.0, 1.0, 0.0]).unwrap();
        assert!(close(v, closed, 1e-10));
        assert!(close(v, 0.5f64.sqrt(), 1e-10));
    }

    #[test]
    fn fw_gap_examples() {
        let s = Region::simplex(3).unwrap();
        let gap = s
            .fw_gap(&[1.0, 0.0, 0.0], &[-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
            .unwrap();
        assert!(close(gap, 1.0, 1e-15));
        assert_eq!(s.fw_gap(&[0.2, 0.3, 0.5], &[0.0; 3]).unwrap(), 0.0);
        // stationary: -∇f in the normal cone at e1
        assert!(s.fw_gap(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap() <= 0.0);
    }

    #[test]
    fn built_in_atoms_satisfy_halfspaces_and_are_vertices() {
        for r in [
            Region::simplex(4).unwrap(),
            Region::hypercube(3).unwrap(),
            Region::l1_ball(3, 2.0).unwrap(),
        ] {
            for a in r.atoms().atoms() {
                assert!(r.max_violation(a).unwrap() <= FEAS_TOL);
                // a vertex has a zero-dimensional minimal face
                assert_eq!(r.minimal_face(a).unwrap().dim, 0);
            }
        }
    }

    fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..m {
                cur.push(i);
                rec(i + 1, m, k, cur, out);
                cur.pop();
            }
        }
        let mut out = vec![];
        rec(0, m, k, &mut vec![], &mut out);
        out
    }

    #[test]
    fn halfspace_vertices_are_atoms_by_enumeration() {
        // enumerate all n-subsets of halfspaces, solve for the intersection
        // point, keep the feasible ones: they must all be atoms
        for r in [
            Region::simplex(3).unwrap(),
            Region::hypercube(2).unwrap(),
            Region::l1_ball(2, 1.5).unwrap(),
        ] {
            let hs = r.halfspaces().unwrap();
            let n = r.dim();
            let mut found = Vec::<Vec<f64>>::new();
            for idx in combinations(hs.len(), n) {
                let a = nalgebra::DMatrix::from_fn(n, n, |i, j| hs[idx[i]].normal[j]);
                let b = nalgebra::DVector::from_fn(n, |i, _| hs[idx[i]].offset);
                if a.rank(1e-12) < n {
                    continue;
                }
                let Some(x) = a.lu().solve(&b) else { continue };
                let x: Vec<f64> = x.iter().copied().collect();
                if r.max_violation(&x).unwrap() <= 1e-9 && !found.iter().any(|f| dist(f, &x) < 1e-9) {
                    found.push(x);
                }
            }
            assert_eq!(found.len(), r.atoms().len(), "{}", r.label());
            for v in &found {
                assert!(r.atoms().atoms().iter().any(|a| dist(a, v) < 1e-9));
            }
        }
    }

    #[test]
    fn generic_vrep_cone_ops_need_halfspaces() {
        let r = Region::from_atoms(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(r.lmo(&[1.0, 2.0]).unwrap(), 2);
        assert!((r.diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            r.normal_cone_generators(&[0.1, 0.1]),
            Err(Error::MissingHalfspaces)
        );
        let r = r
            .with_halfspaces(vec![
                Halfspace::new(vec![-1.0, 0.0], 0.0),
                Halfspace::new(vec![0.0, -1.0], 0.0),
                Halfspace::new(vec![1.0, 1.0], 1.0),
            ])
            .unwrap();
        assert_eq!(r.minimal_face(&[0.5, 0.5]).unwrap().face_atoms, vec![1, 2]);
    }

    #[test]
    fn atom_set_validation() {
        assert!(AtomSet::new(vec![]).is_err());
        assert!(AtomSet::new(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        let a = AtomSet::new(vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(a.diameter(), 5.0);
    }
}

//! Concrete regions, objectives and cells built from a configuration.

use std::path::Path;

use anyhow::{bail, Context};
use ssc_fw::geometry::GeometryBounds;
use ssc_fw::oracle::reference_optimum;
use ssc_fw::rates::VerifyContext;
use ssc_fw::rng::SeededRng;
use ssc_fw::{
    ActiveIterate, DirectionRule, Halfspace, MethodRegistry, QuadraticObjective, Region, Wrapper,
};

use crate::config::{BenchConfig, Family, ObjectiveSpec, RegionKindSpec, RegionSpec, StartPolicy};

pub fn build_region(spec: &RegionSpec) -> anyhow::Result<Region> {
    let region = match spec.kind {
        RegionKindSpec::Simplex => Region::simplex(spec.n)?,
        RegionKindSpec::Hypercube => Region::hypercube(spec.n)?,
        RegionKindSpec::L1Ball => Region::l1_ball(spec.n, spec.radius.unwrap_or(1.0))?,
        RegionKindSpec::Generic => {
            let atoms = spec.atoms_csv.as_deref().context("generic region needs atoms_csv")?;
            let halfspaces = spec
                .halfspaces_csv
                .as_deref()
                .context("generic region needs halfspaces_csv")?;
            let halfspaces = read_rows(halfspaces)?
                .into_iter()
                .map(|mut row| {
                    let offset = row.pop().context("empty halfspace row")?;
                    Ok(Halfspace::new(row, offset))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            Region::from_atoms(read_rows(atoms)?)?.with_halfspaces(halfspaces)?
        }
    };
    Ok(region)
}

fn read_rows(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut atoms = Vec::new();
    for row in reader.records() {
        let row = row?;
        let atom = row
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("bad row in {}", path.display()))?;
        atoms.push(atom);
    }
    if atoms.is_empty() {
        bail!("{} has no rows", path.display());
    }
    Ok(atoms)
}

/// One objective instance on one region.
#[derive(Debug, Clone)]
pub struct Problem {
    pub id: String,
    pub region: Region,
    pub region_spec: RegionSpec,
    pub family: Family,
    pub replicate: usize,
    pub seed: u64,
    pub objective: QuadraticObjective,
    pub x0: ActiveIterate,
    pub f_star: Option<f64>,
    pub bounds: GeometryBounds,
}

pub fn build_objective(spec: &ObjectiveSpec, n: usize, seed: u64) -> anyhow::Result<QuadraticObjective> {
    let obj = match spec.family {
        Family::StronglyConvex => {
            QuadraticObjective::strongly_convex(n, spec.mu.context("mu required")?, spec.l, seed)?
        }
        Family::Indefinite => QuadraticObjective::indefinite(n, spec.l, seed)?,
        Family::Distance => {
            let center = SeededRng::derive(seed, 3).normal_vec(n);
            QuadraticObjective::scaled_distance(spec.l, &center)?
        }
    };
    Ok(obj)
}

fn fmt_num(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

pub fn build_problems(cfg: &BenchConfig) -> anyhow::Result<Vec<Problem>> {
    let mut problems = Vec::new();
    for region_spec in cfg.region.to_vec() {
        let region = build_region(&region_spec)?;
        let bounds = GeometryBounds::for_region(&region, cfg.width_samples, cfg.seed)?;
        let x0 = match cfg.x0 {
            StartPolicy::Vertex => ActiveIterate::from_atom(&region, 0)?,
            StartPolicy::Barycenter => ActiveIterate::barycenter(&region),
        };
        for (oi, spec) in cfg.objective.to_vec().into_iter().enumerate() {
            let base = spec.seed.unwrap_or_else(|| SeededRng::derive(cfg.seed, oi as u64).next_u64());
            for rep in 0..cfg.replicates {
                let seed = base.wrapping_add(rep as u64);
                let mut objective = build_objective(&spec, region.dim(), seed)?;
                let mut id = format!("{}-{}", region.label(), spec.family.as_str());
                if let Some(mu) = spec.mu.filter(|_| spec.family == Family::StronglyConvex) {
                    id.push_str(&format!("-mu{}", fmt_num(mu / spec.l)));
                }
                id.push_str(&format!("-o{oi}-r{rep}"));
                let f_star = if spec.family.is_convex() {
                    let key = format!("{id}|{seed}");
                    let opt = reference_optimum(&key, &objective, &region, x0.point())?;
                    objective = objective.with_reference(opt.x_star.clone(), opt.f_star);
                    Some(opt.f_star)
                } else {
                    None
                };
                problems.push(Problem {
                    id,
                    region: region.clone(),
                    region_spec: region_spec.clone(),
                    family: spec.family,
                    replicate: rep,
                    seed,
                    objective,
                    x0: x0.clone(),
                    f_star,
                    bounds,
                });
            }
        }
    }
    Ok(problems)
}

/// A (problem, method, wrapper) triple.
#[derive(Debug, Clone)]
pub struct Cell {
    pub problem: usize,
    pub method: String,
    pub wrapper: Wrapper,
}

impl Cell {
    pub fn id(&self, problems: &[Problem]) -> String {
        format!("{}-{}-{}", problems[self.problem].id, self.method, self.wrapper.as_str())
    }
}

pub fn cells(cfg: &BenchConfig, problems: &[Problem]) -> Vec<Cell> {
    let mut out = Vec::new();
    for p in 0..problems.len() {
        for m in &cfg.methods {
            for &w in &cfg.wrappers {
                out.push(Cell {
                    problem: p,
                    method: m.to_ascii_lowercase(),
                    wrapper: w,
                });
            }
        }
    }
    out
}

pub fn rule(name: &str) -> anyhow::Result<std::sync::Arc<dyn DirectionRule>> {
    Ok(MethodRegistry::default().get(name)?)
}

pub fn verify_context(
    rule: &dyn DirectionRule,
    problem: &Problem,
    sqrt_horizon: Option<usize>,
) -> VerifyContext {
    VerifyContext {
        tau: rule.angle_bound(&problem.bounds),
        polytope_dim: problem.region.polytope_dim(),
        tracks_active_set: rule.tracks_active_set(),
        full_fw_steps: rule.has_full_fw_steps(),
        f_star: problem.f_star,
        sqrt_horizon,
    }
}

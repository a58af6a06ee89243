#![allow(dead_code)]

use std::collections::BTreeMap;

use ssc_fw::linalg::{dot, norm, sub};
use ssc_fw::rng::SeededRng;
use ssc_fw::{ActiveIterate, Region};

/// A random convex combination of a random atom subset, weights bounded
/// away from zero.
pub fn random_iterate(region: &Region, rng: &mut SeededRng, max_support: usize) -> ActiveIterate {
    let m = region.atoms().len();
    let k = 1 + rng.below(max_support.min(m));
    let idx = rng.subset(m, k);
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    let weights: BTreeMap<usize, f64> = idx.into_iter().zip(raw.into_iter().map(|w| w / total)).collect();
    ActiveIterate::from_weights(region, weights).expect("valid weights")
}

fn cone_slope(g: &[f64], gens: &[Vec<f64>], c: &[f64]) -> f64 {
    let mut e = vec![0.0; g.len()];
    let mut mass = 0.0;
    for (ci, v) in c.iter().zip(gens) {
        mass += ci * norm(v);
        for (ei, vi) in e.iter_mut().zip(v) {
            *ei += ci * vi;
        }
    }
    let n = norm(&e);
    // cancelling combinations lose all accuracy in ê
    if n <= 1e-4 * mass || n == 0.0 {
        f64::NEG_INFINITY
    } else {
        dot(g, &e) / n
    }
}

/// Lower estimate of `sup ⟨g, ê⟩` over the cone generated by `gens`, using
/// `samples` evaluations: random nonnegative combinations, then local searches
/// on the coefficients from the best sample and from the best single generator.
pub fn sampled_cone_sup(g: &[f64], gens: &[Vec<f64>], samples: usize, rng: &mut SeededRng) -> f64 {
    let m = gens.len();
    let unit = |i: usize| -> Vec<f64> { (0..m).map(|j| if j == i { 1.0 } else { 0.0 }).collect() };
    let mut best_single = (f64::NEG_INFINITY, vec![0.0; m]);
    let mut best_sample = (f64::NEG_INFINITY, vec![0.0; m]);
    let random_phase = samples / 5;
    for i in 0..random_phase {
        let c: Vec<f64> = if i < m {
            unit(i)
        } else {
            (0..m)
                .map(|_| if rng.uniform() < 0.5 { 0.0 } else { rng.exponential() })
                .collect()
        };
        let v = cone_slope(g, gens, &c);
        if i < m && v > best_single.0 {
            best_single = (v, c.clone());
        }
        if v > best_sample.0 {
            best_sample = (v, c);
        }
    }
    let budget = (samples - random_phase) / 2;
    let a = local_search(g, gens, best_sample, budget, rng);
    let b = local_search(g, gens, best_single, budget, rng);
    a.max(b)
}

fn local_search(g: &[f64], gens: &[Vec<f64>], start: (f64, Vec<f64>), budget: usize, rng: &mut SeededRng) -> f64 {
    let m = gens.len();
    let (mut best, mut best_c) = start;
    if m == 0 {
        return best;
    }
    let mut step = 0.5;
    for _ in 0..budget {
        let j = rng.below(m);
        let mut c = best_c.clone();
        let scale = c.iter().fold(0.0f64, |a, b| a.max(*b)).max(1e-12);
        c[j] = (c[j] + step * scale * (2.0 * rng.uniform() - 1.0)).max(0.0);
        if rng.uniform() < 0.1 {
            c[j] = 0.0;
        }
        let v = cone_slope(g, gens, &c);
        if v > best {
            best = v;
            best_c = c;
            step = (step * 1.5).min(2.0);
        } else {
            step *= 0.98;
            if step < 1e-7 {
                step = 0.5;
            }
        }
    }
    best
}

/// Sampled version of `sup_{h ∈ Ω} ⟨g, (h − x)/‖h − x‖⟩` via the generators
/// `a − x` of the feasible cone.
pub fn sampled_tangent_sup(region: &Region, x: &[f64], g: &[f64], samples: usize, rng: &mut SeededRng) -> f64 {
    let gens: Vec<Vec<f64>> = region
        .atoms()
        .atoms()
        .iter()
        .map(|a| sub(a, x))
        .filter(|v| norm(v) > 1e-12)
        .collect();
    sampled_cone_sup(g, &gens, samples, rng).max(0.0)
}

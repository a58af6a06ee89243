mod common;

use common::{random_iterate, sampled_cone_sup, sampled_tangent_sup};
use ssc_fw::linalg::{add_scaled, dot, norm, sub};
use ssc_fw::nnls::nnls;
use ssc_fw::rng::SeededRng;
use ssc_fw::Region;

fn regions() -> Vec<Region> {
    vec![
        Region::simplex(3).unwrap(),
        Region::hypercube(3).unwrap(),
        Region::l1_ball(3, 1.0).unwrap(),
    ]
}

#[test]
fn tangent_norm_matches_sampled_sup() {
    for (r, region) in regions().iter().enumerate() {
        let mut rng = SeededRng::new(100 + r as u64);
        for _ in 0..1000 {
            let x = random_iterate(region, &mut rng, 3);
            let g = rng.normal_vec(region.dim());
            let exact = region.tangent_projection_norm(x.point(), &g).unwrap();
            let sampled = sampled_tangent_sup(region, x.point(), &g, 10_000, &mut rng);
            assert!(exact >= sampled - 1e-10, "{}: {exact} < {sampled}", region.label());
            assert!((exact - sampled).abs() <= 1e-3, "{}: {exact} vs {sampled}", region.label());
        }
    }
}

#[test]
fn moreau_decomposition() {
    for (r, region) in regions().iter().enumerate() {
        let mut rng = SeededRng::new(200 + r as u64);
        for _ in 0..500 {
            let x = random_iterate(region, &mut rng, 3);
            let g = rng.normal_vec(region.dim());
            let t = region.tangent_projection(x.point(), &g).unwrap();
            let n = sub(&g, &t);
            assert!(dot(&t, &n).abs() <= 1e-9);
            // the normal part separates x from every atom
            for a in region.atoms().atoms() {
                assert!(dot(&n, &sub(a, x.point())) <= 1e-9);
            }
            // the tangent part is a feasible direction
            let step = 1e-3 / norm(&t).max(1.0);
            let moved = add_scaled(x.point(), step, &t);
            assert!(region.max_violation(&moved).unwrap() <= 1e-9 || norm(&t) < 1e-12);
        }
    }
}

#[test]
fn closed_form_vertex_cases() {
    let s = Region::simplex(3).unwrap();
    let e1 = [1.0, 0.0, 0.0];
    assert!((s.tangent_projection_norm(&e1, &[0.0, 1.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    assert!(s.tangent_projection_norm(&e1, &[1.0, 0.0, 0.0]).unwrap() < 1e-10);
    let c = Region::hypercube(2).unwrap();
    assert!((c.tangent_projection_norm(&[1.0, 1.0], &[-1.0, 2.0]).unwrap() - 1.0).abs() < 1e-10);
    assert!((c.tangent_projection_norm(&[0.5, 0.5], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-10);
}

#[test]
fn polar_cone_distance_matches_sampled_sup() {
    let mut rng = SeededRng::new(300);
    for _ in 0..300 {
        let n = 2 + rng.below(3);
        let k = 1 + rng.below(n);
        let gens: Vec<Vec<f64>> = (0..k).map(|_| rng.normal_vec(n)).collect();
        let y = rng.normal_vec(n);
        if gram_condition(&gens) > 100.0 {
            continue;
        }
        // C* = cone(gens) and C = {c : ⟨c, g_i⟩ ≤ 0}
        let dist = nnls(&gens, &y).unwrap().residual_norm;
        let c_gens = polar_generators(&gens, n);
        let sup = sampled_cone_sup(&y, &c_gens, 5_000, &mut rng).max(0.0);
        assert!(dist >= sup - 1e-10, "{dist} < {sup}");
        assert!((dist - sup).abs() <= 1e-3, "{dist} vs {sup}");
    }
}

/// Conic generators of `{c : ⟨c, g_i⟩ ≤ 0 ∀i}` for linearly independent
/// `g_i`: the negated dual basis on their span plus `±` a basis of its
/// orthogonal complement.
fn polar_generators(gens: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    use nalgebra::DMatrix;
    let k = gens.len();
    let g = DMatrix::from_fn(n, k, |r, c| gens[c][r]);
    let gram = g.transpose() * &g;
    let inv = gram.try_inverse().expect("independent generators");
    let dual = &g * inv;
    let mut out: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let col = dual.column(c);
            let s = col.norm();
            col.iter().map(|v| -v / s).collect()
        })
        .collect();
    let svd = DMatrix::from_fn(n, n, |r, c| if c < k { g[(r, c)] } else { 0.0 }).svd(true, false);
    let u = svd.u.unwrap();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    for &col in &order[k..] {
        let v: Vec<f64> = u.column(col).iter().copied().collect();
        out.push(v.iter().map(|x| -x).collect());
        out.push(v);
    }
    out
}

fn gram_condition(gens: &[Vec<f64>]) -> f64 {
    use nalgebra::DMatrix;
    let gram = DMatrix::from_fn(gens.len(), gens.len(), |i, j| dot(&gens[i], &gens[j]));
    let ev = gram.symmetric_eigenvalues();
    ev.max() / ev.min().max(1e-300)
}

#[test]
fn feasible_step_endpoint_is_tight() {
    for (r, region) in regions().iter().enumerate() {
        let mut rng = SeededRng::new(400 + r as u64);
        for _ in 0..500 {
            let x = random_iterate(region, &mut rng, 4);
            let target = random_iterate(region, &mut rng, 4);
            let mut d = sub(target.point(), x.point());
            if rng.uniform() < 0.5 {
                d = rng.normal_vec(region.dim());
            }
            if norm(&d) < 1e-9 {
                continue;
            }
            let a = region.max_feasible_step(x.point(), &d).unwrap();
            assert!(a.is_finite());
            assert!(region.max_violation(&add_scaled(x.point(), a, &d)).unwrap() <= 1e-9);
            assert!(region.max_violation(&add_scaled(x.point(), a + 1e-6, &d)).unwrap() > 0.0);
        }
    }
}

#[test]
fn gap_dominated_by_diameter_times_stationarity() {
    for (r, region) in regions().iter().enumerate() {
        let mut rng = SeededRng::new(500 + r as u64);
        for _ in 0..1000 {
            let x = random_iterate(region, &mut rng, 4);
            let g = rng.normal_vec(region.dim());
            let gap = region.fw_gap(x.point(), &g).unwrap();
            let pi = region.tangent_projection_norm(x.point(), &g).unwrap();
            assert!(gap <= region.diameter() * pi + 1e-10);
        }
    }
}

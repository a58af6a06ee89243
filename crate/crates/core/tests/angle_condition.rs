mod common;

use std::f64::consts::SQRT_2;

use common::{random_iterate, sampled_tangent_sup};
use proptest::prelude::*;
use ssc_fw::directions::{
    afw_select, apply_step, away_direction, dsb_measure, fdfw_select, fw_direction, pfw_direction,
};
use ssc_fw::geometry::pwidth_simplex;
use ssc_fw::linalg::{dot, norm, sub};
use ssc_fw::rng::SeededRng;
use ssc_fw::{ActiveIterate, Region};

struct Sample {
    x: ActiveIterate,
    g: Vec<f64>,
    pi: f64,
}

fn samples(region: &Region, count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = SeededRng::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = random_iterate(region, &mut rng, region.atoms().len());
        let g = rng.normal_vec(region.dim());
        let pi = region.tangent_projection_norm(x.point(), &g).unwrap();
        if pi > 1e-8 {
            out.push(Sample { x, g, pi });
        }
    }
    out
}

#[test]
fn slope_bounds_on_simplices() {
    for (n, seed) in [(3usize, 1u64), (5, 2)] {
        let s = Region::simplex(n).unwrap();
        let tau_p = pwidth_simplex(n).unwrap() / SQRT_2;
        for Sample { x, g, .. } in samples(&s, 10_000, seed) {
            let pfw = pfw_direction(&s, &x, &g).unwrap();
            let afw = afw_select(&s, &x, &g).unwrap();
            let fd = fdfw_select(&s, x.point(), &g).unwrap();
            let dsb = |d: &[f64]| dsb_measure(&s, x.point(), &g, d).unwrap();
            assert!(dsb(&pfw.d) >= tau_p - 1e-9);
            assert!(dsb(&afw.d) >= tau_p / 2.0 - 1e-9);
            assert!(dsb(&fd.d) >= tau_p / 2.0 - 1e-9);
            assert!(dsb(&afw.d) <= 1.0 + 1e-9);

            // ⟨g, d^AFW⟩ ≥ ½⟨g, d^PFW⟩
            assert!(afw.slope >= 0.5 * pfw.slope - 1e-12);
            // on the simplex the support is the minimal face: ⟨g, d^FW + d^F⟩ ≥ ⟨g, d^PFW⟩
            let fw = fw_direction(&s, &x, &g).unwrap();
            let face = s.minimal_face(x.point()).unwrap();
            assert!(x.weights().keys().all(|k| face.face_atoms.contains(k)));
            let xf = face
                .face_atoms
                .iter()
                .copied()
                .min_by(|&a, &b| dot(s.atoms().atom(a), &g).total_cmp(&dot(s.atoms().atom(b), &g)))
                .unwrap();
            let in_face = dot(&g, &sub(x.point(), s.atoms().atom(xf)));
            assert!(fw.slope + in_face >= pfw.slope - 1e-12);
        }
    }
}

#[test]
fn pairwise_slope_against_feasible_descent_directions() {
    let s = Region::simplex(3).unwrap();
    let width = pwidth_simplex(3).unwrap();
    let mut rng = SeededRng::new(3);
    let mut checked = 0;
    while checked < 1000 {
        let x = random_iterate(&s, &mut rng, 3);
        let g = rng.normal_vec(3);
        let h = random_iterate(&s, &mut rng, 3);
        let e = sub(h.point(), x.point());
        let en = norm(&e);
        if en < 1e-9 || dot(&g, &e) <= 1e-9 * en {
            continue;
        }
        let pfw = pfw_direction(&s, &x, &g).unwrap();
        assert!(pfw.slope / (dot(&g, &e) / en) >= width - 1e-9);
        checked += 1;
    }
}

#[test]
fn sampled_sup_agrees_with_dsb_denominator() {
    let s = Region::simplex(3).unwrap();
    let mut rng = SeededRng::new(4);
    for Sample { x, g, pi } in samples(&s, 200, 5) {
        let sup = sampled_tangent_sup(&s, x.point(), &g, 4_000, &mut rng);
        assert!((sup - pi).abs() <= 1e-3);
    }
}

#[test]
fn long_runs_of_steps_keep_the_active_set_consistent() {
    for region in [Region::simplex(5).unwrap(), Region::hypercube(3).unwrap()] {
        let mut rng = SeededRng::new(6);
        let mut x = ActiveIterate::barycenter(&region);
        for i in 0..10_000 {
            let g = rng.normal_vec(region.dim());
            let p = match i % 3 {
                0 => fw_direction(&region, &x, &g).unwrap(),
                1 => away_direction(&region, &x, &g).unwrap(),
                _ => pfw_direction(&region, &x, &g).unwrap(),
            };
            if p.is_stationary() {
                continue;
            }
            let cap = p.alpha_max.min(1.0);
            let alpha = if rng.uniform() < 0.2 { cap } else { cap * rng.uniform() };
            x = apply_step(&region, &x, &p, alpha).unwrap();
            let sum: f64 = x.weights().values().sum();
            assert!((sum - 1.0).abs() <= 1e-10);
            assert!(x.weights().values().all(|&w| w > 1e-12));
        }
        assert!(x.reconstruction_error(&region) <= 1e-8);
        assert!(region.max_violation(x.point()).unwrap() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn selected_directions_descend(seed in 0u64..1_000_000, n in 2usize..7) {
        let s = Region::simplex(n).unwrap();
        let mut rng = SeededRng::new(seed);
        let x = random_iterate(&s, &mut rng, n);
        let g = rng.normal_vec(n);
        for p in [
            fw_direction(&s, &x, &g).unwrap(),
            away_direction(&s, &x, &g).unwrap(),
            pfw_direction(&s, &x, &g).unwrap(),
            afw_select(&s, &x, &g).unwrap(),
            fdfw_select(&s, x.point(), &g).unwrap(),
        ] {
            if norm(&p.d) > 1e-12 {
                prop_assert!(p.slope >= -1e-12);
                prop_assert!(p.alpha_max > 0.0);
                let end = ssc_fw::linalg::add_scaled(x.point(), p.alpha_max.min(1e6), &p.d);
                if p.alpha_max.is_finite() {
                    prop_assert!(s.max_violation(&end).unwrap() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn maximal_steps_drop_the_source_atom(seed in 0u64..1_000_000) {
        let s = Region::simplex(4).unwrap();
        let mut rng = SeededRng::new(seed);
        let x = random_iterate(&s, &mut rng, 4);
        let g = rng.normal_vec(4);
        for p in [away_direction(&s, &x, &g).unwrap(), pfw_direction(&s, &x, &g).unwrap()] {
            if p.is_stationary() || !p.alpha_max.is_finite() {
                continue;
            }
            let next = apply_step(&s, &x, &p, p.alpha_max).unwrap();
            let q = p.from_atom.unwrap();
            prop_assert!(!next.weights().contains_key(&q));
            let grown = next.weights().keys().filter(|k| !x.weights().contains_key(k)).count();
            prop_assert!(grown <= 1);
        }
    }
}

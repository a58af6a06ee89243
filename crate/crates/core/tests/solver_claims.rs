mod common;

use common::random_iterate;
use ssc_fw::geometry::rate_constants;
use ssc_fw::linalg::{dist, dot, sub};
use ssc_fw::method::MethodRegistry;
use ssc_fw::objective::kl_residual;
use ssc_fw::oracle::reference_optimum;
use ssc_fw::rates::{verify_trace, VerifyContext};
use ssc_fw::rng::SeededRng;
use ssc_fw::solver::{run, SolverOptions};
use ssc_fw::{ActiveIterate, GeometryBounds, QuadraticObjective, Region, SmoothObjective, Wrapper};

fn convex_problem(region: &Region, ratio: f64, seed: u64) -> QuadraticObjective {
    let obj = QuadraticObjective::strongly_convex(region.dim(), ratio, 1.0, seed).unwrap();
    let x0 = region.atoms().atom(0).to_vec();
    let opt = reference_optimum(&format!("sc/{ratio}/{seed}"), &obj, region, &x0).unwrap();
    obj.with_reference(opt.x_star, opt.f_star)
}

#[test]
fn kl_inequality_holds_for_strongly_convex_quadratics() {
    let s = Region::simplex(3).unwrap();
    let obj = convex_problem(&s, 0.1, 1);
    let mut rng = SeededRng::new(8);
    for _ in 0..1000 {
        let x = random_iterate(&s, &mut rng, 3);
        assert!(kl_residual(&obj, &s, x.point()).unwrap() >= -1e-9);
    }
}

#[test]
fn descent_lemma_on_accepted_steps() {
    let registry = MethodRegistry::default();
    let s = Region::simplex(5).unwrap();
    let obj = QuadraticObjective::indefinite(5, 1.0, 4).unwrap();
    let l = obj.lipschitz();
    for name in ["afw", "pfw", "fdfw"] {
        let rule = registry.get(name).unwrap();
        for wrapper in [Wrapper::Plain, Wrapper::Ssc] {
            let x0 = ActiveIterate::from_atom(&s, 0).unwrap();
            let t = run(wrapper, rule.as_ref(), &obj, &s, x0, &SolverOptions::default()).unwrap();
            for w in t.records.windows(2) {
                let delta = sub(&w[1].point, &w[0].point);
                let grad = obj.gradient(&w[0].point);
                let model = w[0].f + dot(&grad, &delta) + 0.5 * l * dot(&delta, &delta);
                assert!(w[1].f <= model + 1e-9);
            }
        }
    }
}

#[test]
fn every_claim_holds_on_small_convex_suite() {
    let registry = MethodRegistry::default();
    for region in [Region::simplex(3).unwrap(), Region::hypercube(3).unwrap()] {
        let bounds = GeometryBounds::for_region(&region, 0, 0).unwrap();
        for seed in 0..2 {
            let obj = convex_problem(&region, 0.1, seed);
            for name in ["afw", "pfw", "fdfw"] {
                let rule = registry.get(name).unwrap();
                for wrapper in [Wrapper::Plain, Wrapper::Ssc] {
                    let x0 = ActiveIterate::from_atom(&region, 0).unwrap();
                    let opts = SolverOptions {
                        budget: 2000,
                        ..SolverOptions::default()
                    };
                    let t = run(wrapper, rule.as_ref(), &obj, &region, x0, &opts).unwrap();
                    let ctx = VerifyContext {
                        tau: rule.angle_bound(&bounds),
                        polytope_dim: region.polytope_dim(),
                        tracks_active_set: rule.tracks_active_set(),
                        full_fw_steps: rule.has_full_fw_steps(),
                        f_star: obj.reference_value(),
                        sqrt_horizon: None,
                    };
                    let report = verify_trace(&t, &ctx).unwrap();
                    let failed: Vec<_> = report.failures().map(|c| (&c.claim, c.worst_violation)).collect();
                    assert!(failed.is_empty(), "{} {name} {wrapper:?}: {failed:?}", region.label());
                    if wrapper == Wrapper::Ssc {
                        assert_eq!(t.bad_step_count, 0);
                        assert_eq!(t.gradient_calls, t.records.len());
                    }
                }
            }
        }
    }
}

#[test]
fn ssc_rate_constant_example() {
    let s = Region::simplex(3).unwrap();
    let obj = convex_problem(&s, 0.1, 7);
    let bounds = GeometryBounds::for_region(&s, 0, 0).unwrap();
    let q = rate_constants(0.1, 1.0, bounds.tau_afw).unwrap().q;
    let rule = MethodRegistry::default().get("afw").unwrap();
    let x0 = ActiveIterate::from_atom(&s, 1).unwrap();
    let t = run(Wrapper::Ssc, rule.as_ref(), &obj, &s, x0, &SolverOptions::default()).unwrap();
    let f_star = obj.reference_value().unwrap();
    let h0 = t.records[0].f - f_star;
    for (k, r) in t.records.iter().enumerate() {
        assert!(r.f - f_star <= q.powi(k as i32) * h0 * (1.0 + 1e-7));
    }
}

#[test]
fn nonconvex_runs_reach_stationarity() {
    let registry = MethodRegistry::default();
    for (i, region) in [Region::hypercube(4).unwrap(), Region::simplex(5).unwrap()].iter().enumerate() {
        let obj = QuadraticObjective::indefinite(region.dim(), 1.0, 20 + i as u64).unwrap();
        for name in ["afw", "pfw", "fdfw"] {
            let rule = registry.get(name).unwrap();
            let x0 = ActiveIterate::from_atom(region, 0).unwrap();
            let t = run(Wrapper::Ssc, rule.as_ref(), &obj, region, x0, &SolverOptions::default()).unwrap();
            assert!(t.final_stationarity() <= 1e-5, "{name}: {}", t.final_stationarity());
            assert!(dist(&t.final_point, &t.records.last().unwrap().point) == 0.0);
        }
    }
}

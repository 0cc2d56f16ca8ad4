use coderiv::chebyshev::{remez, DEFAULT_TOL};
use coderiv::oracle::{estimate_limsup, GraphPoint, SamplingSchedule};
use coderiv::projections::{
    brute_force_project, project_ball_lp, project_positive_cone, ConvexSet, ConvexSetDescriptor,
    Polynomial,
};
use coderiv::spaces::{duality_map, duality_map_inverse, pairing, DualVector, PrimalVector, SpaceSpec};
use coderiv::coderivatives::MapDescriptor;
use coderiv::Execution;
use proptest::prelude::*;

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn duality_map_identities(p in 1.2f64..5.0, v in coords(4)) {
        let space = SpaceSpec::lp(p, 4).unwrap();
        let x = PrimalVector::new(space, v).unwrap();
        let j = duality_map(&x).unwrap();
        let n = x.norm();
        prop_assert!((pairing(&j, &x).unwrap() - n * n).abs() <= 1e-9 * (1.0 + n * n));
        prop_assert!((j.dual_norm() - n).abs() <= 1e-9 * (1.0 + n));
        let back = duality_map_inverse(&j).unwrap();
        prop_assert!(back.distance(&x).unwrap() <= 1e-8 * (1.0 + n));
    }

    #[test]
    fn ball_projection_is_nearest(p in 1.2f64..4.0, v in coords(2), r in 0.3f64..2.0) {
        let space = SpaceSpec::lp(p, 2).unwrap();
        let x = PrimalVector::new(space, v).unwrap();
        let px = project_ball_lp(&x, r).unwrap();
        prop_assert!(px.norm() <= r * (1.0 + 1e-12));
        let set = ConvexSetDescriptor::new(ConvexSet::Ball { r }, space).unwrap();
        let brute = brute_force_project(&x, &set, 41).unwrap();
        prop_assert!(px.distance(&x).unwrap() <= brute.distance(&x).unwrap() + 1e-9);
    }

    #[test]
    fn cone_projection_is_idempotent(p in 1.2f64..4.0, v in coords(5)) {
        let space = SpaceSpec::lp(p, 5).unwrap();
        let x = PrimalVector::new(space, v).unwrap();
        let px = project_positive_cone(&x).unwrap();
        prop_assert!(px.values().iter().all(|&t| t >= 0.0));
        prop_assert_eq!(project_positive_cone(&px).unwrap(), px);
    }

    #[test]
    fn remez_equivariance(c in coords(4), beta in 0.2f64..3.0, q in coords(2), kink in 0.1f64..0.9) {
        let space = SpaceSpec::c01(257).unwrap();
        let f = Polynomial::new(c).sample(space).unwrap()
            .plus_scaled(1.0, &PrimalVector::from_fn(space, |t| (t - kink).abs()).unwrap()).unwrap();
        let pf = remez(&f, 1, DEFAULT_TOL).unwrap();
        let scaled = remez(&(beta * &f), 1, DEFAULT_TOL).unwrap();
        prop_assert!((scaled.error - beta * pf.error).abs() <= 1e-9 * (1.0 + beta * pf.error));
        let q = Polynomial::new(q).sample(space).unwrap();
        let shifted = remez(&(&f + &q), 1, DEFAULT_TOL).unwrap();
        prop_assert!((shifted.error - pf.error).abs() <= 1e-9 * (1.0 + pf.error));
        prop_assert!(pf.alternates());
    }

    #[test]
    fn oracle_is_deterministic_and_mode_independent(seed in 0u64..1000, v in coords(3), w in coords(3)) {
        let space = SpaceSpec::lp(3.0, 3).unwrap();
        let map = MapDescriptor::ball(space, 1.0).unwrap();
        let base = GraphPoint::at(&map, PrimalVector::new(space, v).unwrap()).unwrap();
        let ys = DualVector::coords(space, w).unwrap();
        let mut sched = SamplingSchedule { levels: 6, dirs_per_level: 16, seed, ..SamplingSchedule::default() };
        let a = estimate_limsup(&map, &base, &ys, &ys, &sched).unwrap();
        sched.execution = Execution::Sequential;
        let b = estimate_limsup(&map, &base, &ys, &ys, &sched).unwrap();
        prop_assert_eq!(a, b);
    }
}

//! Property tests for the structural invariants.

use bcpatch::config::{Command, ExperimentConfig};
use bcpatch::forcing::ForcingProfile;
use bcpatch::grid::{Grid, ScalarField};
use bcpatch::spectral::SpectralWorkspace;
use proptest::prelude::*;

fn field(n: usize) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-1e3f64..1e3, n * n)
        .prop_map(move |v| ScalarField::from_values(Grid::new(n).unwrap(), v).unwrap())
}

fn sized_field() -> impl Strategy<Value = ScalarField> {
    prop_oneof![Just(16usize), Just(18), Just(32)].prop_flat_map(field)
}

fn profile() -> impl Strategy<Value = ForcingProfile> {
    let eps = 1e-6f64..0.4;
    let s = 0.01f64..0.99;
    prop_oneof![
        eps.clone().prop_map(|e| ForcingProfile::mollified(e).unwrap()),
        (eps.clone(), s.clone()).prop_map(|(e, s)| ForcingProfile::singular(e, s).unwrap()),
        (eps, s, 1u32..40).prop_map(|(e, s, l)| ForcingProfile::truncated(e, s, l).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_exactly_symmetric_and_idempotent(f in sized_field()) {
        let p = f.project_symmetry();
        let g = p.grid();
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                let v = p.at(i, j);
                prop_assert_eq!(p.at(j, i), v);
                prop_assert_eq!(p.at(g.reflect(i), j), -v);
                prop_assert_eq!(p.at(i, g.reflect(j)), -v);
            }
        }
        let pp = p.project_symmetry();
        prop_assert_eq!(pp.values(), p.values());
    }

    #[test]
    fn dump_round_trip_is_bitwise(f in sized_field()) {
        let back = ScalarField::from_dump_bytes(&f.to_dump_bytes()).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.grid(), f.grid());
    }

    #[test]
    fn truncated_dump_is_rejected(f in field(16), cut in 1usize..2068) {
        let bytes = f.to_dump_bytes();
        prop_assert!(ScalarField::from_dump_bytes(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn profile_spec_round_trip(p in profile()) {
        let back: ForcingProfile = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn profiles_are_odd_and_saturate(p in profile(), x in 1e-9f64..0.5) {
        let v = p.eval(x).unwrap();
        prop_assert_eq!(p.eval(-x).unwrap(), -v);
        if x >= 2.0 * p.epsilon() {
            prop_assert_eq!(v, -1.0);
        }
        if let Some(b) = p.bound() {
            prop_assert!(v.abs() <= b);
        }
    }

    #[test]
    fn inverse_laplacian_is_linear_and_mean_free(a in field(16), b in field(16), c in -10f64..10.0) {
        let mut ws = SpectralWorkspace::new(a.grid());
        let lhs = ws.inv_laplacian(&a.add(&b.scaled(c)).unwrap());
        let rhs = ws.inv_laplacian(&a).add(&ws.inv_laplacian(&b).scaled(c)).unwrap();
        let scale = 1.0 + a.norm_c0() + c.abs() * b.norm_c0();
        prop_assert!(lhs.sub(&rhs).unwrap().norm_c0() <= 1e-12 * scale);
        prop_assert!(lhs.mean().abs() <= 1e-12 * scale);
    }

    #[test]
    fn config_toml_round_trip(
        n in (8usize..512).prop_map(|k| 2 * k),
        seed in 0..=i64::MAX as u64,
        tol in 1e-12f64..1e-3,
        eps in prop::collection::vec(1e-4f64..0.5, 1..6),
        levels in prop::collection::vec(1u32..30, 1..5),
        m in (2usize..2000).prop_map(|k| 2 * k + 1),
        start in 0.001f64..0.49,
    ) {
        let mut cfg = ExperimentConfig::new(Command::Sweep);
        cfg.grid.n = n;
        cfg.seed = seed;
        cfg.solver.tol = tol;
        cfg.profile.eps = eps;
        cfg.profile.levels = levels;
        cfg.barrier.m = m;
        cfg.trace.start = start.to_string();
        prop_assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn oversized_seed_is_a_config_error(seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let mut cfg = ExperimentConfig::new(Command::Selftest);
        cfg.seed = seed;
        prop_assert!(cfg.validate().is_err());
        prop_assert!(cfg.to_toml().is_err());
    }
}

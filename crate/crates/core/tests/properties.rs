use proptest::prelude::*;

use stackgda::fisher::{
    analytic_cobb_douglas, eg_objective, exploitability, generate_market, value_function, FisherMarket, MarketSpec,
    UtilityClass,
};
use stackgda::kkt::{closed_form_multipliers, StructuredGameSpec};
use stackgda::linalg::{dist, dot};
use stackgda::projection::{project_budget_exact, project_dykstra};
use stackgda::{project, ProjectionOptions, ProjectionSpec};

fn tight() -> ProjectionOptions {
    ProjectionOptions {
        tol: 1e-14,
        max_iter: 100_000,
        ..Default::default()
    }
}

fn point(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, m)
}

fn box_and_halfspace(m: usize) -> impl Strategy<Value = ProjectionSpec> {
    (
        prop::collection::vec(0.1..2.0f64, m),
        prop::collection::vec(-1.0..1.0f64, m),
        0.1..2.0f64,
    )
        .prop_map(|(width, normal, offset)| {
            ProjectionSpec::Intersection(vec![
                ProjectionSpec::Box {
                    lo: width.iter().map(|w| -w).collect(),
                    hi: width,
                },
                ProjectionSpec::Halfspace { normal, offset },
            ])
        })
}

fn class() -> impl Strategy<Value = UtilityClass> {
    prop::sample::select(UtilityClass::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive(
        (set, v, w) in (1..=4usize).prop_flat_map(|m| (box_and_halfspace(m), point(m), point(m)))
    ) {
        let opts = tight();
        let pv = project(&set, &v, &opts).unwrap();
        let pw = project(&set, &w, &opts).unwrap();
        prop_assert!(set.contains(&pv, 1e-9));
        prop_assert!(dist(&project(&set, &pv, &opts).unwrap(), &pv) <= 1e-12);
        prop_assert!(dist(&pv, &pw) <= dist(&v, &w) + 1e-9);
    }

    #[test]
    fn budget_projection_matches_dykstra(
        (a, b, v) in (1..=6usize).prop_flat_map(|m| (prop::collection::vec(0.0..3.0f64, m), 0.0..5.0f64, point(m)))
    ) {
        let exact = project_budget_exact(&a, b, &v);
        let members = [
            ProjectionSpec::NonnegativeOrthant,
            ProjectionSpec::Halfspace { normal: a.clone(), offset: b },
        ];
        let reference = project_dykstra(&members, &v, &tight()).unwrap();
        prop_assert!(exact.iter().all(|x| *x >= 0.0));
        prop_assert!(dot(&a, &exact) <= b + 1e-12);
        prop_assert!(dist(&exact, &reference) <= 1e-7, "{exact:?} vs {reference:?}");
    }

    #[test]
    fn multipliers_are_scale_invariant(
        (a, b, c) in (1..=5usize).prop_flat_map(|k| (
            prop::collection::vec(0.0..5.0f64, k),
            prop::collection::vec(0.0..5.0f64, k),
            prop::collection::vec(0.1..5.0f64, k),
        )),
        s in 0.01..100.0f64,
    ) {
        let base = closed_form_multipliers(&StructuredGameSpec::new(a.clone(), b.clone(), c.clone()).unwrap()).unwrap();
        let scale = |v: &[f64]| v.iter().map(|x| x * s).collect::<Vec<_>>();
        let scaled = closed_form_multipliers(&StructuredGameSpec::new(scale(&a), scale(&b), scale(&c)).unwrap()).unwrap();
        for (x, y) in base.iter().zip(&scaled) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn demands_exhaust_budgets(
        seed in any::<u64>(),
        class in class(),
        prices in prop::collection::vec(0.5..30.0f64, 4),
    ) {
        let mk = generate_market(seed, &MarketSpec { n: 3, m: 4, ..Default::default() }, class).unwrap();
        for (i, x) in mk.demands(&prices).unwrap().iter().enumerate() {
            prop_assert!(x.iter().all(|v| *v >= 0.0));
            prop_assert!((dot(x, &prices) - mk.budgets[i]).abs() <= 1e-9 * mk.budgets[i]);
        }
    }

    #[test]
    fn demand_beats_any_affordable_bundle(
        seed in any::<u64>(),
        class in class(),
        prices in prop::collection::vec(0.5..30.0f64, 3),
        shares in prop::collection::vec(0.0..1.0f64, 3),
    ) {
        let mk = generate_market(seed, &MarketSpec { n: 1, m: 3, ..Default::default() }, class).unwrap();
        let buyer = mk.buyer(0);
        let total: f64 = shares.iter().sum::<f64>().max(1e-9);
        // spend the whole budget in the drawn proportions
        let bundle: Vec<f64> = shares.iter().zip(&prices).map(|(s, p)| mk.budgets[0] * s / total / p).collect();
        let best = buyer.value(&mk.demands(&prices).unwrap()[0]);
        prop_assert!(buyer.value(&bundle) <= best + 1e-9 * best.max(1.0));
    }

    #[test]
    fn value_function_dominates_the_objective(
        seed in any::<u64>(),
        class in class(),
        prices in prop::collection::vec(0.5..30.0f64, 3),
        shares in prop::collection::vec(0.01..1.0f64, 6),
    ) {
        let mk = generate_market(seed, &MarketSpec { n: 2, m: 3, ..Default::default() }, class).unwrap();
        let allocation: Vec<Vec<f64>> = (0..2)
            .map(|i| {
                let row = &shares[3 * i..3 * i + 3];
                let total: f64 = row.iter().sum();
                row.iter().zip(&prices).map(|(s, p)| mk.budgets[i] * s / total / p).collect()
            })
            .collect();
        let v = value_function(&mk, &prices, 1e-3).unwrap();
        prop_assert!(eg_objective(&mk, &prices, &allocation, 1e-3).unwrap() <= v + 1e-9 * v.abs().max(1.0));
    }

    #[test]
    fn cobb_douglas_equilibrium_has_zero_exploitability(seed in any::<u64>(), n in 1..6usize, m in 1..6usize) {
        let mk = generate_market(seed, &MarketSpec { n, m, ..Default::default() }, UtilityClass::CobbDouglas).unwrap();
        let cert = analytic_cobb_douglas(&mk, 1e-9).unwrap();
        prop_assert!(cert.certified);
        prop_assert!(cert.clearing_residual <= 1e-9);
        prop_assert!(exploitability(&mk, &cert.p_star, cert.f_star, 0.0).unwrap().value.abs() <= 1e-8);
        // any other price vector can only do worse
        let shifted: Vec<f64> = cert.p_star.iter().enumerate().map(|(j, p)| p * (1.0 + 0.1 * (j % 2) as f64)).collect();
        prop_assert!(exploitability(&mk, &shifted, cert.f_star, 0.0).unwrap().value >= -1e-9);
    }

    #[test]
    fn market_json_round_trips(seed in any::<u64>(), class in class()) {
        let mk = generate_market(seed, &MarketSpec::default(), class).unwrap();
        let text = serde_json::to_string(&mk).unwrap();
        prop_assert_eq!(FisherMarket::from_json_str(&text).unwrap(), mk);
    }
}

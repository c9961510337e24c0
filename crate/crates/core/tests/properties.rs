use boolean_spheres::distance::{cvm_distance, ks_distance};
use boolean_spheres::emptyspace::{empty_space_f, empty_space_fbar, second_order_fbar, WeightFunction};
use boolean_spheres::estimators::{estimate, EstimatorConfig, Method, RadiusSet, WeightedRadiusMeasure};
use boolean_spheres::geometry::GaugeBody;
use boolean_spheres::model::{ModelParams, RadiusDistribution, Realization, Window};
use boolean_spheres::variance::circle_outside_fraction;
use proptest::prelude::*;

fn radius_law() -> impl Strategy<Value = RadiusDistribution> {
    prop_oneof![
        (0.0f64..0.1, 0.001f64..0.1).prop_map(|(a, w)| RadiusDistribution::uniform(a, a + w).unwrap()),
        (5.0f64..100.0).prop_map(|r| RadiusDistribution::exponential(r).unwrap()),
        (0.001f64..0.15).prop_map(|r| RadiusDistribution::deterministic(r).unwrap()),
    ]
}

fn atoms() -> impl Strategy<Value = WeightedRadiusMeasure> {
    prop::collection::vec((0.0f64..0.3, 0.0f64..5.0), 0..40).prop_map(|a| WeightedRadiusMeasure::new(a).unwrap())
}

fn gauge() -> impl Strategy<Value = GaugeBody> {
    prop_oneof![
        Just(GaugeBody::unit_ball(2).unwrap()),
        (0.0f64..std::f64::consts::TAU).prop_map(|a| GaugeBody::segment(vec![a.cos(), a.sin()]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_lie_in_unit_interval(m in atoms(), law in radius_law()) {
        let ks = ks_distance(&m, &law);
        let cvm = cvm_distance(&m, &law);
        prop_assert!((0.0..=1.0).contains(&ks), "{ks}");
        prop_assert!((0.0..=1.0).contains(&cvm), "{cvm}");
    }

    #[test]
    fn ratio_is_a_probability(m in atoms(), s in 0.0f64..0.3) {
        let c = RadiusSet::up_to(s);
        let (a, b) = (m.ratio(&c), m.ratio(&c.complement()));
        prop_assert!((0.0..=1.0).contains(&a));
        if m.is_null() {
            prop_assert_eq!(a + b, 0.0);
        } else {
            prop_assert!((a + b - 1.0).abs() < 1e-12);
            prop_assert!(m.cdf(s) <= m.cdf(s + 0.01) + 1e-15);
        }
    }

    #[test]
    fn radius_sets_print_and_parse(lo in 0.0f64..0.1, w in 0.001f64..0.1) {
        let c = RadiusSet::interval(lo, lo + w).unwrap();
        let back: RadiusSet = c.to_string().parse().unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn empty_space_is_a_distribution_function(
        gamma in 1.0f64..200.0,
        law in radius_law(),
        g in gauge(),
        t in 0.0f64..0.2,
        dt in 0.0f64..0.1,
    ) {
        let p = ModelParams::planar(gamma, law).unwrap();
        let (a, b) = (empty_space_f(t, &p, &g), empty_space_f(t + dt, &p, &g));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= b + 1e-15);
        prop_assert!((a + empty_space_fbar(t, &p, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_between_its_bounds(
        gamma in 1.0f64..150.0,
        law in radius_law(),
        d in 0.0f64..0.6,
        t1 in 0.0f64..0.1,
        t2 in 0.0f64..0.1,
    ) {
        let p = ModelParams::planar(gamma, law).unwrap();
        let ball = GaugeBody::unit_ball(2).unwrap();
        let v = second_order_fbar(&[d, 0.0], t1, t2, &p, &ball).unwrap();
        let lo = empty_space_fbar(t1, &p, &ball) * empty_space_fbar(t2, &p, &ball);
        prop_assert!(v >= lo * (1.0 - 1e-12) && v <= lo.sqrt() * (1.0 + 1e-12));
        // Symmetric in the two points.
        let w = second_order_fbar(&[-d, 0.0], t2, t1, &p, &ball).unwrap();
        prop_assert!((v - w).abs() <= 1e-12 * v.max(1e-300));
    }

    #[test]
    fn outside_fraction_is_a_fraction(a in 0.0f64..1.0, rho in 0.0f64..2.0, c in 0.0f64..1.0) {
        let q = circle_outside_fraction(a, rho, c);
        prop_assert!((0.0..=1.0).contains(&q));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Edge-corrected measures read a subset of the points of the full
    /// measure with the same contacts, so they are dominated set by set.
    #[test]
    fn corrections_drop_mass(seed in any::<u64>(), g in gauge(), s in 0.05f64..0.1) {
        let p = ModelParams::planar(25.0, RadiusDistribution::uniform(0.05, 0.1).unwrap()).unwrap();
        let w = Window::unit(2);
        let f = WeightFunction::indicator(0.05).unwrap();
        let z = Realization::sample(&p, &w, 0.05, seed).unwrap();
        let run = |m| estimate(&z, &w, &EstimatorConfig::new(m, g.clone(), f.clone(), 1.0 / 40.0).unwrap()).unwrap();
        let full = run(Method::Weighted);
        let c = RadiusSet::up_to(s);
        for m in [Method::WeightedMinus, Method::Hanisch] {
            prop_assert!(run(m).mass(&c) <= full.mass(&c) * (1.0 + 1e-12) + 1e-15);
        }
        for (r, _) in full.atoms() {
            prop_assert!(z.radii().contains(r));
        }
    }
}

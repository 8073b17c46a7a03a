use mesonbell::constants::{species_params, OscillationParams, Species};
use mesonbell::fit::{project_onto_feasible, trivial_point_weights};
use mesonbell::lrm::{
    joint_probabilities, p21_conditional, p43_conditional, rho_bounds, weighted_sum, RhoProfile, RhoTable,
};
use mesonbell::qm::{qm_flavor_table, qm_like_joint, qm_unlike_joint, TimePair};
use proptest::prelude::*;

fn species() -> impl Strategy<Value = OscillationParams> {
    prop_oneof![Just(species_params(Species::Kaon)), Just(species_params(Species::BMeson))]
}

/// Times in units of 1/gamma_s, converted to seconds.
fn pair(p: &OscillationParams, a: f64, b: f64) -> TimePair {
    TimePair::new(a / p.gamma_s, b / p.gamma_s).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn qm_joints_are_probabilities(p in species(), a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let t = pair(&p, a, b);
        let like = qm_like_joint(&p, t).unwrap();
        let unlike = qm_unlike_joint(&p, t).unwrap();
        prop_assert!((0.0..=0.5).contains(&like));
        prop_assert!((0.0..=0.5).contains(&unlike));
        prop_assert!(rel(like, qm_like_joint(&p, t.swapped()).unwrap()) < 1e-12 || like < 1e-300);
    }

    #[test]
    fn equal_times_never_like(p in species(), a in 0.0f64..50.0) {
        prop_assert!(qm_like_joint(&p, pair(&p, a, a)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn flavor_table_normalization(p in species(), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let t = pair(&p, a, b);
        let sum: f64 = qm_flavor_table(&p, t).unwrap().iter().map(|(_, v)| v).sum();
        let es = |t: f64| (-p.gamma_s * t).exp();
        let el = |t: f64| (-p.gamma_l * t).exp();
        let expected = 0.5 * (es(t.t_a) * el(t.t_b) + el(t.t_a) * es(t.t_b));
        prop_assert!(rel(sum, expected) < 1e-12, "{sum} vs {expected}");
    }

    #[test]
    fn equal_width_kaon_formula_matches_b_closed_form(a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let bp = species_params(Species::BMeson);
        let mut as_kaon = bp;
        as_kaon.species = Species::Kaon;
        let t = pair(&bp, a, b);
        let (k, c) = (qm_like_joint(&as_kaon, t).unwrap(), qm_like_joint(&bp, t).unwrap());
        prop_assert!((k - c).abs() <= 1e-12 * k.abs().max(c.abs()) + 1e-16);
        let (k, c) = (qm_unlike_joint(&as_kaon, t).unwrap(), qm_unlike_joint(&bp, t).unwrap());
        prop_assert!(rel(k, c) < 1e-12);
    }

    #[test]
    fn rho_bounds_contain_zero(p in species(), a in 0.0f64..30.0) {
        let (lo, hi) = rho_bounds(&p, a / p.gamma_s);
        prop_assert!(lo <= 0.0 && 0.0 <= hi);
    }

    #[test]
    fn conditionals_vanish_at_equal_times(p in species(), a in 0.0f64..10.0) {
        let t = a / p.gamma_s;
        prop_assert_eq!(p21_conditional(&p, &RhoProfile::Zero, t, t).unwrap(), 0.0);
        prop_assert_eq!(p43_conditional(&p, &RhoProfile::Zero, t, t).unwrap(), 0.0);
    }

    #[test]
    fn lrm_mirror_symmetry(p in species(), a in 0.0f64..8.0, b in 0.0f64..8.0) {
        let t = pair(&p, a, b);
        let direct = joint_probabilities(&p, &RhoProfile::Zero, t).unwrap();
        let mirror = joint_probabilities(&p, &RhoProfile::Zero, t.swapped()).unwrap();
        prop_assert_eq!(direct, [mirror[3], mirror[2], mirror[1], mirror[0]]);
    }

    #[test]
    fn saturation_leaves_only_p2(a in 0.2f64..5.0, k in 1.0f64..3.0) {
        let p = species_params(Species::Kaon);
        let v = joint_probabilities(&p, &RhoProfile::SaturateUpperShort, pair(&p, a, k * a)).unwrap();
        prop_assert_eq!(v[0], 0.0);
        prop_assert_eq!(v[2], 0.0);
        prop_assert_eq!(v[3], 0.0);
        prop_assert_eq!(weighted_sum(&[1.0; 4], &v), v[1] / 4.0);
    }

    #[test]
    fn weighted_sum_is_linear(a in proptest::array::uniform4(0.0f64..=1.0),
                              b in proptest::array::uniform4(0.0f64..=1.0),
                              p in proptest::array::uniform4(-1.0f64..=1.0),
                              l in 0.0f64..=1.0) {
        let mix = [0, 1, 2, 3].map(|i| l * a[i] + (1.0 - l) * b[i]);
        let lhs = weighted_sum(&mix, &p);
        let rhs = l * weighted_sum(&a, &p) + (1.0 - l) * weighted_sum(&b, &p);
        prop_assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn trivial_weights_reproduce_target(qm in 0.0f64..0.25, p in proptest::array::uniform4(-0.1f64..0.5)) {
        let (w, defined) = trivial_point_weights(qm, &p);
        if defined {
            prop_assert!((weighted_sum(&w, &p) - qm).abs() < 1e-12);
        }
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn projection_is_feasible(v in proptest::array::uniform4(-1.0f64..2.0), eta in 0.01f64..=1.0) {
        let w = project_onto_feasible(v, eta);
        prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((w.iter().sum::<f64>() / 4.0 - eta).abs() < 1e-12);
    }

    #[test]
    fn rho_table_interpolates_between_knots(r0 in -1.0f64..1.0, r1 in -1.0f64..1.0, s in 0.0f64..=1.0) {
        let table = RhoTable::new(vec![(0.0, r0), (2.0, r1)]).unwrap();
        let v = table.interpolate(2.0 * s).unwrap();
        prop_assert!(v >= r0.min(r1) - 1e-15 && v <= r0.max(r1) + 1e-15);
        prop_assert!(table.interpolate(2.5).is_err());
    }
}

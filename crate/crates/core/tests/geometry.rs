use std::f64::consts::PI;

use denjoy::geometry::{angle_distance, angles_to_divisor, divisor_to_angles, wrap01, wrap_centered};
use denjoy::{Character, Divisor, DivisorAngles, DivisorPoint, GapSet, GeometryConfig};
use proptest::prelude::*;

fn gapset_strategy() -> impl Strategy<Value = GapSet> {
    prop::collection::vec((0.1f64..2.0, 0.1f64..2.0), 1..5).prop_map(|steps| {
        let mut raw = Vec::new();
        let mut x = 0.0;
        for (band, gap) in steps {
            x += band;
            raw.push((x, x + gap));
            x += gap;
        }
        GapSet::new(&raw, -1.0).unwrap()
    })
}

proptest! {
    #[test]
    fn wrap_lands_in_unit_interval(x in -1e6f64..1e6) {
        let w = wrap01(x);
        prop_assert!((0.0..1.0).contains(&w));
        let k = x - w;
        prop_assert!((k - k.round()).abs() < 1e-6);
        let c = wrap_centered(x);
        prop_assert!((-0.5..=0.5).contains(&c));
    }

    #[test]
    fn character_group_laws(a in prop::collection::vec(-3.0f64..3.0, 3), b in prop::collection::vec(-3.0f64..3.0, 3)) {
        let (a, b) = (Character::new(a), Character::new(b));
        let back = a.add(&b).unwrap().sub(&b).unwrap();
        prop_assert!(back.dist(&a).unwrap() < 1e-12);
        let zero = a.add(&a.neg()).unwrap();
        prop_assert!(zero.dist(&Character::zero(3)).unwrap() < 1e-12);
        prop_assert!(a.coords().iter().all(|c| (0.0..1.0).contains(c)));
    }

    #[test]
    fn angle_chart_round_trip(g in gapset_strategy(), seed in prop::collection::vec(0.001f64..0.999, 5)) {
        let phi = DivisorAngles(seed[..g.n()].iter().map(|s| 2.0 * PI * s).collect());
        let d = angles_to_divisor(&phi, &g).unwrap();
        for (p, gap) in d.points().iter().zip(g.gaps()) {
            prop_assert!(p.lambda >= gap.a && p.lambda <= gap.b);
        }
        let back = divisor_to_angles(&d, &g).unwrap();
        prop_assert!(angle_distance(&phi, &back) < 1e-7);
    }

    #[test]
    fn dual_flips_sheets(g in gapset_strategy(), seed in prop::collection::vec(0.01f64..0.99, 5)) {
        let phi = DivisorAngles(seed[..g.n()].iter().map(|s| 2.0 * PI * s).collect());
        let d = angles_to_divisor(&phi, &g).unwrap();
        let dual = divisor_to_angles(&d.dual(&g), &g).unwrap();
        let mirrored = DivisorAngles(phi.0.iter().map(|p| 2.0 * PI - p).collect());
        prop_assert!(angle_distance(&dual, &mirrored) < 1e-7);
    }
}

#[test]
fn rejects_malformed_gap_sets() {
    assert!(GapSet::new(&[(2.0, 1.0)], -1.0).is_err());
    assert!(GapSet::new(&[(1.0, 3.0), (2.0, 4.0)], -1.0).is_err());
    assert!(GapSet::new(&[(1.0, 2.0), (2.0, 4.0)], -1.0).is_err());
    assert!(GapSet::new(&[(-1.0, 2.0)], -3.0).is_err());
    assert!(GapSet::new(&[(1.0, 2.0)], 0.5).is_err());
    assert!(GapSet::new(&[(1.0, f64::INFINITY)], -1.0).is_err());
}

#[test]
fn gaps_are_sorted_and_bands_complement_them() {
    let g = GapSet::new(&[(3.0, 5.0), (1.0, 2.0)], -1.0).unwrap();
    assert_eq!(g.gap(0).a, 1.0);
    assert_eq!(g.branch_points(), vec![0.0, 1.0, 2.0, 3.0, 5.0]);
    assert!(g.is_on_spectrum(0.5) && g.is_on_spectrum(2.5) && g.is_on_spectrum(7.0));
    assert!(!g.is_on_spectrum(1.5) && !g.is_on_spectrum(-0.1));
    assert_eq!(g.gap_of(4.0), Some(1));
    assert_eq!(g.gap_of(2.5), None);
}

#[test]
fn geometric_family() {
    let g = GapSet::geometric(1.0, 2.0, 3.0, 4, -1.0).unwrap();
    assert_eq!(g.n(), 4);
    for k in 0..4 {
        let s = 3f64.powi(k as i32);
        assert_eq!((g.gap(k).a, g.gap(k).b), (s, 2.0 * s));
    }
    assert!(GapSet::geometric(1.0, 2.0, 3.0, 7, -1.0).is_err());
    assert!(GapSet::geometric(1.0, 2.0, 1.0, 3, -1.0).is_err());
    assert!(GapSet::geometric(1.0, 4.0, 2.0, 3, -1.0).is_err());
}

#[test]
fn divisor_validation() {
    let g = GapSet::new(&[(1.0, 2.0), (3.0, 5.0)], -1.0).unwrap();
    let ok = vec![DivisorPoint { lambda: 1.5, eps: -1 }, DivisorPoint { lambda: 5.0, eps: -1 }];
    let d = Divisor::new(&g, ok).unwrap();
    assert_eq!(d.points()[1].eps, 1);
    assert!(Divisor::new(&g, vec![DivisorPoint { lambda: 1.5, eps: 1 }]).is_err());
    let outside = vec![DivisorPoint { lambda: 2.5, eps: 1 }, DivisorPoint { lambda: 4.0, eps: 1 }];
    assert!(Divisor::new(&g, outside).is_err());
    let bad_sign = vec![DivisorPoint { lambda: 1.5, eps: 0 }, DivisorPoint { lambda: 4.0, eps: 1 }];
    assert!(Divisor::new(&g, bad_sign).is_err());
}

#[test]
fn config_json_round_trip() {
    let json = r#"{"lambda_star": -2.0, "gaps": [{"a": 1.0, "b": 2.0}], "divisor": [{"lambda": 1.25, "eps": -1}]}"#;
    let cfg = GeometryConfig::from_json(json).unwrap();
    let g = cfg.gapset().unwrap();
    assert_eq!(g.lambda_star(), -2.0);
    let d = cfg.divisor(&g).unwrap().unwrap();
    assert_eq!(d.points()[0], DivisorPoint { lambda: 1.25, eps: -1 });
    let again = GeometryConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(again, cfg);
    assert!(GeometryConfig::from_json("{\"gaps\": []}").is_err());
}

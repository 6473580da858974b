mod common;

use common::{rel, root, FREE, ONE_GAP, TWO_GAPS};
use denjoy::weyl::{recover_divisor, stieltjes_extract, stieltjes_reconstruct, Weyl};
use denjoy::{Character, Complex64 as C, Point};
use proptest::prelude::*;

fn upper() -> impl Strategy<Value = C> {
    (-4.0f64..6.0, 0.05f64..3.0).prop_map(|(x, y)| C::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn free_m_functions_are_i_sqrt(l in upper(), flip in any::<bool>()) {
        let l = if flip { l.conj() } else { l };
        let w = Weyl::new(&FREE, &Character::zero(0)).unwrap();
        let p = Point::Interior(l);
        let want = C::new(0.0, 1.0) * root(l);
        prop_assert!(rel(w.m_plus(p).unwrap(), want) < 1e-10);
        prop_assert!(rel(w.m_minus(p).unwrap(), want) < 1e-10);
    }

    #[test]
    fn m_functions_are_herglotz(l in upper(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let w = Weyl::new(&TWO_GAPS, &Character::new(vec![a, b])).unwrap();
        let p = Point::Interior(l);
        let (mp, mm) = (w.m_plus(p).unwrap(), w.m_minus(p).unwrap());
        prop_assert!(mp.im > 0.0 && mm.im > 0.0);
        prop_assert!(rel(w.m_plus(p.conj()).unwrap(), mp.conj()) < 1e-10);
    }
}

#[test]
fn parametrized_m_matches_products() {
    for (pot, alpha) in [(&*ONE_GAP, vec![0.3]), (&*TWO_GAPS, vec![0.55, 0.85])] {
        let w = Weyl::new(pot, &Character::new(alpha)).unwrap();
        let param = w.param().unwrap();
        assert!(param.sigma().iter().all(|s| *s >= 0.0));
        for z in [C::new(-2.0, 0.0), C::new(0.6, 0.8), C::new(4.5, -0.4), C::new(10.0, 1.0)] {
            let p = Point::Interior(z);
            let (mp, mm) = param.m(p);
            assert!(rel(mp, w.m_plus(p).unwrap()) < 1e-8, "m+ at {z}");
            assert!(rel(mm, w.m_minus(p).unwrap()) < 1e-8, "m- at {z}");
            let r = w.r_functions(p).unwrap();
            assert!(rel(r.r_alpha, r.r0) < 1e-8);
            assert!(rel(param.r0(p), r.r0) < 1e-8);
        }
    }
}

#[test]
fn divisor_is_recovered_from_m_plus() {
    for (pot, alpha) in [(&*ONE_GAP, vec![0.3]), (&*TWO_GAPS, vec![0.55, 0.85]), (&*TWO_GAPS, vec![0.1, 0.4])] {
        let alpha = Character::new(alpha);
        let w = Weyl::new(pot, &alpha).unwrap();
        let (_, found) = recover_divisor(pot, |p| w.m_plus(p)).unwrap();
        assert!(found.dist(&alpha).unwrap() < 1e-6, "{found:?} vs {alpha:?}");
    }
}

#[test]
fn stieltjes_representation_reproduces_m() {
    let pot = &*ONE_GAP;
    let w = Weyl::new(pot, &Character::new(vec![0.3])).unwrap();
    let m = |p: Point| w.m_plus(p);
    let data = stieltjes_extract(pot.gaps(), m, 16).unwrap();
    assert!(data.slope.abs() < 1e-3);
    for z in [C::new(-1.5, 0.0), C::new(0.5, 1.0), C::new(3.0, 0.5)] {
        let got = stieltjes_reconstruct(pot, &data, m, z);
        assert!(rel(got, w.m_plus(Point::Interior(z)).unwrap()) < 1e-6, "at {z}: {got}");
    }
}

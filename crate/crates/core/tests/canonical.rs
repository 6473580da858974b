mod common;

use common::{free_matrix, rel, root, FREE, ONE_GAP, TWO_GAPS};
use denjoy::canonical::{j_form_min_eigenvalue, spectral_norm, transfer_a, transfer_a_at, CMatrix, TransferFamily};
use denjoy::flow::FlowGrid;
use denjoy::weyl::Weyl;
use denjoy::{Character, Complex64 as C, Point};
use proptest::prelude::*;

fn to_matrix(m: [[C; 2]; 2]) -> CMatrix {
    CMatrix::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn free_transfer_is_the_cosine_sine_matrix(re in -4.0f64..6.0, im in -2.0f64..2.0, x in 0.05f64..2.5) {
        prop_assume!(im.abs() > 1e-3);
        let l = C::new(re, im);
        let a = transfer_a_at(&FREE, &Character::zero(0), Point::Interior(l), x).unwrap();
        let want = to_matrix(free_matrix(l, x));
        prop_assert!(spectral_norm(&(a.value() - want)) < 1e-10 * spectral_norm(&want));
        prop_assert!((a.det() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn transfer_matrices_are_unimodular_and_j_expansive(re in -3.0f64..6.0, im in 0.05f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0, x in 0.1f64..1.5) {
        let p = Point::Interior(C::new(re, im));
        let m = transfer_a_at(&TWO_GAPS, &Character::new(vec![a, b]), p, x).unwrap();
        prop_assert!((m.det() - 1.0).norm() < 1e-8);
        prop_assert!(j_form_min_eigenvalue(&m) > -1e-9);
    }
}

#[test]
fn free_symmetric_matrix_is_a_rotation() {
    let grid = FlowGrid::new(&FREE, &Character::zero(0), 1.0, 0.1).unwrap();
    let fam = TransferFamily::new(&grid);
    for mu in [C::new(0.7, 0.3), C::new(-1.2, 0.5), C::new(0.1, 2.0)] {
        for i in [3, 10] {
            let x = grid.sample(i).x;
            let b = fam.symmetric(mu, i).unwrap().value();
            let (c, s) = ((x * mu).cos(), (x * mu).sin());
            let want = CMatrix::new(c, s, -s, c);
            assert!(spectral_norm(&(b - want)) < 1e-10 * spectral_norm(&want), "mu {mu}, x {x}");
        }
    }
    assert!(fam.symmetric(C::new(1.0, -0.5), 3).is_err());
}

#[test]
fn transfer_matrices_compose_along_the_flow() {
    let pot = &*TWO_GAPS;
    let grid = FlowGrid::new(pot, &Character::new(vec![0.3, 0.65]), 1.2, 0.05).unwrap();
    let fam = TransferFamily::new(&grid);
    let (i, j) = (grid.index_of(0.4).unwrap(), grid.index_of(1.2).unwrap());
    for z in [C::new(-0.6, 0.4), C::new(2.5, 1.0), C::new(7.0, -0.5)] {
        let p = Point::Interior(z);
        let first = fam.plain(p, i).unwrap().value();
        let rest = transfer_a(grid.field(i), grid.field(j), 0.8, p).unwrap().value();
        let whole = fam.plain(p, j).unwrap().value();
        assert!(spectral_norm(&(first * rest - whole)) < 1e-9 * spectral_norm(&whole));
    }
}

#[test]
fn transfer_matrices_are_real_symmetric() {
    let grid = FlowGrid::new(&ONE_GAP, &Character::new(vec![0.2]), 1.0, 0.05).unwrap();
    let fam = TransferFamily::new(&grid);
    let p = Point::Interior(C::new(1.4, 0.8));
    for i in [5, 20] {
        let up = fam.normalized(p, i).unwrap().value();
        let down = fam.normalized(p.conj(), i).unwrap().value();
        assert!(spectral_norm(&(down.map(|z| z.conj()) - up)) < 1e-10 * spectral_norm(&up));
        let real = fam.normalized(Point::real(-0.7), i).unwrap().value();
        assert!(real.iter().all(|z| z.im.abs() < 1e-10 * z.norm().max(1.0)));
    }
}

#[test]
fn normalized_rows_follow_the_eigenfunctions() {
    let grid = FlowGrid::new(&TWO_GAPS, &Character::new(vec![0.3, 0.65]), 1.0, 0.05).unwrap();
    let fam = TransferFamily::new(&grid);
    for z in [C::new(-1.5, 0.0), C::new(0.9, 0.6), C::new(3.7, -0.9)] {
        for i in [4, 12, 20] {
            assert!(fam.row_residual(Point::Interior(z), i).unwrap() < 1e-9);
        }
    }
}

#[test]
fn canonical_system_residuals_shrink_with_the_step() {
    let p = Point::Interior(C::new(-0.5, 0.7));
    let res = |h: f64| {
        let grid = FlowGrid::new(&ONE_GAP, &Character::new(vec![0.61]), 1.0, h).unwrap();
        let fam = TransferFamily::new(&grid);
        fam.integral_equation_residual(p, grid.len() - 1).unwrap()
    };
    let (coarse, fine) = (res(0.1), res(0.05));
    assert!(fine < 1e-4 && fine < coarse / 8.0, "{coarse:e} -> {fine:e}");
}

#[test]
fn weyl_disks_nest_around_the_m_function() {
    let pot = &*TWO_GAPS;
    let alpha = Character::new(vec![0.3, 0.65]);
    let grid = FlowGrid::new(pot, &alpha, 3.0, 0.05).unwrap();
    let fam = TransferFamily::new(&grid);
    for z in [C::new(0.0, 1.0), C::new(2.2, 0.8)] {
        let p = Point::Interior(z);
        let m = Weyl::new(pot, &alpha).unwrap().m_frak_plus(p).unwrap();
        let mut last = f64::INFINITY;
        for i in [10, 20, 40, 60] {
            let (c, r) = fam.weyl_disk(p, i).unwrap();
            assert!(r < last);
            assert!((c - m).norm() <= r * (1.0 + 1e-6), "m outside disk at x={}", grid.sample(i).x);
            last = r;
        }
    }
    assert!(fam.weyl_disk(Point::Interior(C::new(1.0, -1.0)), 5).is_err());
}

#[test]
fn free_weyl_disks_shrink_to_i_sqrt_lambda() {
    let grid = FlowGrid::new(&FREE, &Character::zero(0), 8.0, 0.1).unwrap();
    let fam = TransferFamily::new(&grid);
    let z = C::new(0.5, 1.5);
    let (c, r) = fam.weyl_disk(Point::Interior(z), grid.len() - 1).unwrap();
    let want = C::new(0.0, 1.0) * root(z);
    assert!(r < 1e-3 && rel(c, want) < 1e-3, "center {c}, radius {r:e}");
}

#[test]
fn csv_has_one_row_per_node() {
    let grid = FlowGrid::new(&ONE_GAP, &Character::new(vec![0.2]), 0.5, 0.1).unwrap();
    let csv = TransferFamily::new(&grid).to_csv(Point::Interior(C::new(0.3, 0.4))).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 13);
    assert_eq!(lines.count(), grid.len());
}

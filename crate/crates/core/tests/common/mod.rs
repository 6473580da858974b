#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::{Arc, LazyLock};

use denjoy::potential::Potential;
use denjoy::surface::sqrt_point;
use denjoy::{Complex64 as C, GapSet, Point};

pub static FREE: LazyLock<Arc<Potential>> =
    LazyLock::new(|| Potential::new(&GapSet::zero_gap(-1.0).unwrap()).unwrap());

pub static ONE_GAP: LazyLock<Arc<Potential>> =
    LazyLock::new(|| Potential::new(&GapSet::new(&[(1.0, 2.0)], -1.0).unwrap()).unwrap());

pub static TWO_GAPS: LazyLock<Arc<Potential>> = LazyLock::new(|| {
    Potential::new(&GapSet::new(&[(1.0, 2.0), (3.0, 5.0)], -1.0).unwrap()).unwrap()
});

pub fn root(z: C) -> C {
    sqrt_point(Point::Interior(z))
}

pub fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// `∫_a^b f` after `ξ = a + (b − a)(1 − cos t)/2`, exact for inverse square root end behaviour.
pub fn chebyshev<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    (0..n)
        .map(|k| {
            let t = PI * (k as f64 + 0.5) / n as f64;
            let x = a + (b - a) * (1.0 - t.cos()) / 2.0;
            f(x) * (b - a) * t.sin() / 2.0
        })
        .sum::<f64>()
        * PI
        / n as f64
}

/// Free transfer matrix `[[cos x√λ, sin(x√λ)/√λ], [−√λ sin x√λ, cos x√λ]]`.
pub fn free_matrix(lambda: C, x: f64) -> [[C; 2]; 2] {
    let s = root(lambda);
    let (c, sn) = ((x * s).cos(), (x * s).sin());
    [[c, sn / s], [-s * sn, c]]
}

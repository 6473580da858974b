//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use denjoy::potential::Potential;
use denjoy::{Complex64, GapSet, Point};

/// One gap `(1, 2)` with `λ* = −1`.
pub fn one_gap() -> Arc<Potential> {
    Potential::new(&GapSet::new(&[(1.0, 2.0)], -1.0).unwrap()).unwrap()
}

/// Gaps `(1, 2)` and `(3, 5)` with `λ* = −1`.
pub fn two_gaps() -> Arc<Potential> {
    Potential::new(&GapSet::new(&[(1.0, 2.0), (3.0, 5.0)], -1.0).unwrap()).unwrap()
}

/// `count` points on a ring around the spectrum, off the real axis.
pub fn ring(count: usize) -> Vec<Point> {
    (0..count)
        .map(|k| {
            let t = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
            Point::Interior(Complex64::new(2.0 + 3.0 * t.cos(), 1.5 * t.sin()))
        })
        .collect()
}

//! Integrals over both banks of `E` against `dξ/√ξ`.

use num_complex::Complex64 as C;

use crate::quad::{self, Tolerance};
use crate::surface::{Side, Surface};

/// Splits `E` into finite pieces plus the unbounded remainder `[T, ∞)`.
fn layout(surf: &Surface) -> (Vec<(f64, f64)>, f64) {
    let e = surf.branch_points();
    let n = surf.n();
    let mut pieces = Vec::with_capacity(n + 1);
    for j in 0..n {
        pieces.push((e[2 * j], e[2 * j + 1]));
    }
    let last = e[2 * n];
    let t = (2.0 * last).max(last + 1.0);
    pieces.push((last, t));
    (pieces, t)
}

/// `Σ_sides ∫_E f(ξ, side) dξ/√ξ`; `f` fills `dim` components.
///
/// Band ends absorb inverse square-root behaviour through `ξ = e ± hu²`;
/// the unbounded part uses `ξ = T/u²`.
pub fn integrate_sides<F>(surf: &Surface, dim: usize, f: F, tol: Tolerance) -> Vec<C>
where
    F: Fn(f64, Side, &mut [C]),
{
    integrate_sides_upto(surf, dim, f, tol, f64::INFINITY)
}

/// As [`integrate_sides`] restricted to `ξ ≤ cap`.
pub fn integrate_sides_upto<F>(surf: &Surface, dim: usize, f: F, tol: Tolerance, cap: f64) -> Vec<C>
where
    F: Fn(f64, Side, &mut [C]),
{
    let (pieces, t) = layout(surf);
    let mut acc = vec![C::new(0.0, 0.0); dim];
    let both = |x: f64, out: &mut [C]| {
        let mut buf = vec![C::new(0.0, 0.0); dim];
        f(x, Side::Upper, out);
        f(x, Side::Lower, &mut buf);
        let w = 1.0 / x.sqrt();
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = (*o + *b) * w;
        }
    };
    let mut add = |v: Vec<C>| {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    };
    for &(lo, hi) in &pieces {
        if lo >= cap {
            break;
        }
        let hi_c = hi.min(cap);
        let half = 0.5 * (hi_c - lo);
        add(quad::integrate(
            |u, out: &mut [C]| {
                let x = lo + half * u * u;
                both(x, out);
                let jac = 2.0 * half * u;
                out.iter_mut().for_each(|o| *o *= jac);
            },
            0.0,
            1.0,
            dim,
            tol,
        ));
        let end_singular = hi_c == hi;
        add(quad::integrate(
            |u, out: &mut [C]| {
                let (x, jac) = if end_singular {
                    (hi_c - half * u * u, 2.0 * half * u)
                } else {
                    (hi_c - half * u, half)
                };
                both(x, out);
                out.iter_mut().for_each(|o| *o *= jac);
            },
            0.0,
            1.0,
            dim,
            tol,
        ));
    }
    if cap > t {
        let u_min = if cap.is_finite() { (t / cap).sqrt() } else { 0.0 };
        add(quad::integrate(
            |u, out: &mut [C]| {
                if u == 0.0 {
                    out.iter_mut().for_each(|o| *o = C::new(0.0, 0.0));
                    return;
                }
                let x = t / (u * u);
                both(x, out);
                let jac = 2.0 * t / (u * u * u);
                out.iter_mut().for_each(|o| *o *= jac);
            },
            u_min,
            1.0,
            dim,
            tol,
        ));
    }
    acc
}

/// Scalar form of [`integrate_sides`].
pub fn integrate_sides_scalar<F>(surf: &Surface, f: F, tol: Tolerance) -> C
where
    F: Fn(f64, Side) -> C,
{
    integrate_sides(surf, 1, |x, s, out: &mut [C]| out[0] = f(x, s), tol)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GapSet;

    #[test]
    fn zero_gap_total_harmonic_mass() {
        let s = Surface::new(GapSet::zero_gap(-1.0).unwrap());
        let v = integrate_sides_scalar(
            &s,
            |x, _| C::new(1.0 / (2.0 * std::f64::consts::PI * (x + 1.0)), 0.0),
            Tolerance::new(1e-12, 1e-14),
        );
        assert!((v.re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn band_pieces_cover_e() {
        let s = Surface::new(GapSet::new(&[(1.0, 2.0)], -1.0).unwrap());
        // ∫_E dξ/√ξ over [0,1] ∪ [2, 10], both sides.
        let v = integrate_sides_upto(
            &s,
            1,
            |_, _, out: &mut [C]| out[0] = C::new(1.0, 0.0),
            Tolerance::new(1e-12, 1e-14),
            10.0,
        );
        let want = 2.0 * (2.0 * 1.0 + 2.0 * (10f64.sqrt() - 2f64.sqrt()));
        assert!((v[0].re - want).abs() < 1e-9);
    }
}

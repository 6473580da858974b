//! The two-sheeted square root `√R(λ)`, `R(λ) = λ∏(λ−a_j)(λ−b_j)`, on the slit
//! plane `ℂ \ [0, ∞)` and abelian integrals from the base point `0`.
//!
//! Every integral is taken inside the slit plane: one-sided boundary points
//! `ξ ± i0` are reached along the corresponding bank of the positive axis.

use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::geometry::GapSet;
use crate::quad::{self, Tolerance};

const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }
}

/// A point of the slit plane or a one-sided boundary point on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    /// Generic point; a non-negative real value is read as the upper bank.
    Interior(C),
    Upper(f64),
    Lower(f64),
}

impl Point {
    pub fn real(x: f64) -> Point {
        Point::Interior(C::new(x, 0.0))
    }

    pub fn boundary(x: f64, side: Side) -> Point {
        match side {
            Side::Upper => Point::Upper(x),
            Side::Lower => Point::Lower(x),
        }
    }

    /// Normal form: boundary points carry a side, all other points are interior.
    pub fn canonical(self) -> Point {
        match self {
            Point::Interior(z) if z.im == 0.0 && z.re >= 0.0 => Point::Upper(z.re),
            Point::Upper(x) | Point::Lower(x) if x < 0.0 => Point::real(x),
            p => p,
        }
    }

    pub fn z(self) -> C {
        match self {
            Point::Interior(z) => z,
            Point::Upper(x) | Point::Lower(x) => C::new(x, 0.0),
        }
    }

    /// Mirror image under `λ ↦ conj λ`.
    pub fn conj(self) -> Point {
        match self.canonical() {
            Point::Interior(z) => Point::Interior(z.conj()),
            Point::Upper(x) => Point::Lower(x),
            Point::Lower(x) => Point::Upper(x),
        }
    }

    /// Bank of the positive axis that the integration path runs along.
    pub fn side(self) -> Side {
        match self.canonical() {
            Point::Upper(_) => Side::Upper,
            Point::Lower(_) => Side::Lower,
            Point::Interior(z) => {
                if z.im < 0.0 {
                    Side::Lower
                } else {
                    Side::Upper
                }
            }
        }
    }

    pub fn is_boundary(self) -> bool {
        !matches!(self.canonical(), Point::Interior(_))
    }
}

impl From<C> for Point {
    fn from(z: C) -> Self {
        Point::Interior(z)
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::real(x)
    }
}

fn ipow(m: usize) -> C {
    match m % 4 {
        0 => C::new(1.0, 0.0),
        1 => I,
        2 => C::new(-1.0, 0.0),
        _ => -I,
    }
}

/// The branch of `√λ` mapping the slit plane onto the upper half-plane.
pub fn sqrt_upper(z: C) -> C {
    I * (-z).sqrt()
}

/// `√λ` on the slit plane, positive on the upper bank of `ℝ₊`.
pub fn sqrt_point(p: Point) -> C {
    match p.canonical() {
        Point::Upper(x) => C::new(x.sqrt(), 0.0),
        Point::Lower(x) => C::new(-x.sqrt(), 0.0),
        Point::Interior(z) if z.im == 0.0 => C::new(0.0, (-z.re).sqrt()),
        Point::Interior(z) => sqrt_upper(z),
    }
}

/// Branch data and quadrature settings for one gap set.
#[derive(Debug, Clone)]
pub struct Surface {
    gaps: GapSet,
    e: Vec<f64>,
    tol: Tolerance,
}

impl Surface {
    pub fn new(gaps: GapSet) -> Arc<Self> {
        Self::with_tolerance(gaps, Tolerance::new(1e-13, 1e-14))
    }

    pub fn with_tolerance(gaps: GapSet, tol: Tolerance) -> Arc<Self> {
        let e = gaps.branch_points();
        Arc::new(Surface { gaps, e, tol })
    }

    pub fn gaps(&self) -> &GapSet {
        &self.gaps
    }

    pub fn n(&self) -> usize {
        self.gaps.n()
    }

    pub fn tol(&self) -> Tolerance {
        self.tol
    }

    pub fn lambda_star(&self) -> f64 {
        self.gaps.lambda_star()
    }

    /// Branch points `0, a_1, b_1, …`.
    pub fn branch_points(&self) -> &[f64] {
        &self.e
    }

    pub fn n_pieces(&self) -> usize {
        self.e.len()
    }

    /// Index `p` with `e_p ≤ x < e_{p+1}`; the last piece is unbounded.
    pub fn piece(&self, x: f64) -> usize {
        self.e.partition_point(|&v| v <= x).saturating_sub(1)
    }

    /// `R(x) = ∏(x − e_q)`.
    pub fn poly_r(&self, x: C) -> C {
        self.e.iter().fold(C::new(1.0, 0.0), |acc, &v| acc * (x - v))
    }

    /// `(R(x) − R(c)) / (x − c)` without cancellation.
    pub fn divided_difference(&self, x: C, c: C) -> C {
        self.dd_from(|q| x - self.e[q], c)
    }

    /// As [`Surface::divided_difference`] for `x = e_k + d` with `d` exact.
    pub fn divided_difference_near(&self, k: usize, d: f64, c: C) -> C {
        let ek = self.e[k];
        self.dd_from(|q| if q == k { C::new(d, 0.0) } else { C::new((ek - self.e[q]) + d, 0.0) }, c)
    }

    fn dd_from(&self, diff: impl Fn(usize) -> C, c: C) -> C {
        let n = self.e.len();
        let mut suffix = vec![C::new(1.0, 0.0); n + 1];
        for q in (0..n).rev() {
            suffix[q] = suffix[q + 1] * diff(q);
        }
        let mut prefix = C::new(1.0, 0.0);
        let mut sum = C::new(0.0, 0.0);
        for q in 0..n {
            sum += prefix * suffix[q + 1];
            prefix *= c - self.e[q];
        }
        sum
    }

    pub fn sqrt_lambda(&self, p: Point) -> C {
        sqrt_point(p)
    }

    /// `√R` at a point of the slit plane or a one-sided boundary point.
    pub fn r(&self, p: Point) -> C {
        match p.canonical() {
            Point::Upper(x) => self.r_real(x, Side::Upper, None),
            Point::Lower(x) => self.r_real(x, Side::Lower, None),
            Point::Interior(z) if z.im == 0.0 => self.r_real(z.re, Side::Upper, None),
            Point::Interior(z) => self.r_complex(z),
        }
    }

    pub fn r_complex(&self, z: C) -> C {
        let mut v = sqrt_upper(z);
        for &b in &self.e[1..] {
            v *= (z - b).sqrt();
        }
        v
    }

    /// Real-axis value; `near = (k, d)` states `x = e_k + d` exactly.
    pub fn r_real(&self, x: f64, side: Side, near: Option<(usize, f64)>) -> C {
        let mut abs_r = 1.0;
        for (q, &v) in self.e.iter().enumerate() {
            let d = match near {
                Some((k, d)) if k == q => d,
                _ => x - v,
            };
            abs_r *= d.abs();
        }
        let s = abs_r.sqrt();
        let n = self.n();
        if x < 0.0 {
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            return C::new(0.0, sign * s);
        }
        let p = match near {
            Some((k, d)) if d > 0.0 => k,
            Some((k, d)) if d < 0.0 => k - 1,
            _ => self.piece(x),
        };
        let m = 2 * n - p.min(2 * n);
        match side {
            Side::Upper => ipow(m) * s,
            Side::Lower => -ipow(3 * m) * s,
        }
    }
}

/// Integrands of the form `f(x, √R(x))` evaluated componentwise.
pub trait Integrand: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: C, r: C, out: &mut [C]);

    /// Evaluation at `x = e_k + d` with `d` exact; by default the offset is ignored.
    fn eval_near(&self, x: C, _k: usize, _d: f64, r: C, out: &mut [C]) {
        self.eval(x, r, out)
    }
}

/// Holomorphic monomials `x^k / √R` for `k = 0..count`.
#[derive(Debug, Clone)]
pub struct Monomials {
    pub count: usize,
}

impl Integrand for Monomials {
    fn dim(&self) -> usize {
        self.count
    }

    fn eval(&self, x: C, r: C, out: &mut [C]) {
        let inv = 1.0 / r;
        let mut pw = C::new(1.0, 0.0);
        for o in out.iter_mut().take(self.count) {
            *o = pw * inv;
            pw *= x;
        }
    }
}

/// Monomials `x^k/√R`, `k ≤ N`, followed by the regular parts
/// `(√R(c)/√R(x) − 1)/(x − c)` for a list of poles `c`.
#[derive(Debug, Clone)]
pub struct PoleFamily {
    surf: Arc<Surface>,
    nmono: usize,
    poles: Vec<C>,
    r_poles: Vec<C>,
}

impl PoleFamily {
    pub fn new(surf: Arc<Surface>, poles: &[C]) -> Self {
        let r_poles = poles.iter().map(|&c| surf.r(Point::Interior(c))).collect();
        PoleFamily {
            nmono: surf.n() + 1,
            surf,
            poles: poles.to_vec(),
            r_poles,
        }
    }

    pub fn poles(&self) -> &[C] {
        &self.poles
    }

    pub fn r_poles(&self) -> &[C] {
        &self.r_poles
    }

    pub fn nmono(&self) -> usize {
        self.nmono
    }

    /// Regular part for pole `i` evaluated at `(x, √R(x))`.
    pub fn regular(&self, i: usize, x: C, r: C) -> C {
        let c = self.poles[i];
        let rc = self.r_poles[i];
        if (rc + r).norm() > (rc - r).norm() {
            -self.surf.divided_difference(x, c) / (r * (rc + r))
        } else {
            (rc / r - 1.0) / (x - c)
        }
    }

    /// Regular part at `x = e_k + d`, taking `x − c` from the exact offset.
    pub fn regular_near(&self, i: usize, k: usize, d: f64, r: C) -> C {
        let c = self.poles[i];
        let rc = self.r_poles[i];
        let xc = (C::new(self.surf.branch_points()[k], 0.0) - c) + d;
        if (rc + r).norm() > (rc - r).norm() {
            -self.surf.divided_difference_near(k, d, c) / (r * (rc + r))
        } else {
            (rc / r - 1.0) / xc
        }
    }

    fn monomials(&self, x: C, r: C, out: &mut [C]) {
        let inv = 1.0 / r;
        let mut pw = C::new(1.0, 0.0);
        for o in out.iter_mut().take(self.nmono) {
            *o = pw * inv;
            pw *= x;
        }
    }
}

impl Integrand for PoleFamily {
    fn dim(&self) -> usize {
        self.nmono + self.poles.len()
    }

    fn eval(&self, x: C, r: C, out: &mut [C]) {
        self.monomials(x, r, out);
        for i in 0..self.poles.len() {
            out[self.nmono + i] = self.regular(i, x, r);
        }
    }

    fn eval_near(&self, x: C, k: usize, d: f64, r: C, out: &mut [C]) {
        self.monomials(x, r, out);
        for i in 0..self.poles.len() {
            out[self.nmono + i] = self.regular_near(i, k, d, r);
        }
    }
}

/// Path integrals `∫_0^P f` with full-piece values cached per bank.
#[derive(Debug, Clone)]
pub struct Abelian<F: Integrand> {
    surf: Arc<Surface>,
    f: F,
    full: [Vec<Vec<C>>; 2],
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Upper => 0,
        Side::Lower => 1,
    }
}

impl<F: Integrand> Abelian<F> {
    pub fn new(surf: Arc<Surface>, f: F) -> Self {
        let mut a = Abelian {
            surf,
            f,
            full: [Vec::new(), Vec::new()],
        };
        let np = a.surf.n_pieces();
        for side in [Side::Upper, Side::Lower] {
            let mut v = Vec::with_capacity(np.saturating_sub(1));
            for q in 0..np.saturating_sub(1) {
                v.push(a.full_piece(q, side));
            }
            a.full[side_index(side)] = v;
        }
        a
    }

    pub fn surface(&self) -> &Arc<Surface> {
        &self.surf
    }

    pub fn integrand(&self) -> &F {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `∫` over the bounded piece `[e_q, e_{q+1}]` along the given bank.
    pub fn piece_integral(&self, q: usize, side: Side) -> &[C] {
        &self.full[side_index(side)][q]
    }

    fn full_piece(&self, q: usize, side: Side) -> Vec<C> {
        let e = self.surf.branch_points();
        let half = 0.5 * (e[q + 1] - e[q]);
        let left = self.anchored(q, 1.0, half, side);
        let right = self.anchored(q + 1, -1.0, half, side);
        left.iter().zip(&right).map(|(l, r)| l - r).collect()
    }

    /// `∫_{e_k}^{e_k + σh}` via `x = e_k + σhu²`.
    pub fn anchored(&self, k: usize, sigma: f64, h: f64, side: Side) -> Vec<C> {
        let dim = self.f.dim();
        if h == 0.0 {
            return vec![C::new(0.0, 0.0); dim];
        }
        let ek = self.surf.branch_points()[k];
        let surf = &self.surf;
        let f = &self.f;
        quad::integrate(
            |u, out: &mut [C]| {
                let d = sigma * h * u * u;
                let x = ek + d;
                let r = surf.r_real(x, side, Some((k, d)));
                f.eval_near(C::new(x, 0.0), k, d, r, out);
                let jac = 2.0 * sigma * h * u;
                for o in out.iter_mut() {
                    *o *= jac;
                }
            },
            0.0,
            1.0,
            dim,
            surf.tol(),
        )
    }

    /// `∫_0^ξ` along a bank, `ξ ≥ 0`.
    pub fn along_axis(&self, xi: f64, side: Side) -> Vec<C> {
        let dim = self.f.dim();
        let e = self.surf.branch_points();
        let p = self.surf.piece(xi);
        let mut acc = vec![C::new(0.0, 0.0); dim];
        for q in 0..p {
            for (a, v) in acc.iter_mut().zip(&self.full[side_index(side)][q]) {
                *a += v;
            }
        }
        let last = e.len() - 1;
        let partial = if p < last {
            let mid = 0.5 * (e[p] + e[p + 1]);
            if xi <= mid {
                self.anchored(p, 1.0, xi - e[p], side)
            } else {
                let back = self.anchored(p + 1, -1.0, e[p + 1] - xi, side);
                self.full[side_index(side)][p]
                    .iter()
                    .zip(&back)
                    .map(|(f, b)| f + b)
                    .collect()
            }
        } else {
            self.anchored(p, 1.0, xi - e[p], side)
        };
        for (a, v) in acc.iter_mut().zip(&partial) {
            *a += v;
        }
        acc
    }

    /// Straight segment `z0 → z1` off the positive axis (interior nodes only).
    fn segment(&self, z0: C, z1: C, squeeze_start: bool) -> Vec<C> {
        let dim = self.f.dim();
        let surf = &self.surf;
        let f = &self.f;
        let dz = z1 - z0;
        quad::integrate(
            |u, out: &mut [C]| {
                let (t, jac) = if squeeze_start {
                    (u * u, 2.0 * u)
                } else {
                    (u, 1.0)
                };
                let x = z0 + dz * t;
                let r = if x.im == 0.0 {
                    surf.r_real(x.re, Side::Upper, None)
                } else {
                    surf.r_complex(x)
                };
                f.eval(x, r, out);
                let w = dz * jac;
                for o in out.iter_mut() {
                    *o *= w;
                }
            },
            0.0,
            1.0,
            dim,
            surf.tol(),
        )
    }

    /// `∫_0^P` along the canonical path of `P`.
    pub fn at(&self, p: Point) -> Vec<C> {
        match p.canonical() {
            Point::Upper(x) => self.along_axis(x, Side::Upper),
            Point::Lower(x) => self.along_axis(x, Side::Lower),
            Point::Interior(z) if z.re <= 0.0 => self.segment(C::new(0.0, 0.0), z, true),
            Point::Interior(z) => {
                let side = if z.im > 0.0 { Side::Upper } else { Side::Lower };
                let mut v = self.along_axis(z.re, side);
                let leg = self.segment(C::new(z.re, 0.0), z, true);
                for (a, b) in v.iter_mut().zip(&leg) {
                    *a += b;
                }
                v
            }
        }
    }
}

fn arg_on_side(t: C, side: Side) -> f64 {
    if t.im != 0.0 {
        return t.arg();
    }
    if t.re >= 0.0 {
        0.0
    } else {
        side.sign() * std::f64::consts::PI
    }
}

/// `∫_0^P dx/(x − c)` along the canonical path of `P`.
pub fn log_part(c: C, p: Point) -> C {
    let p = p.canonical();
    let z = p.z();
    if c.im == 0.0 {
        let side = p.side();
        let t = z - c;
        let s = C::new(-c.re, 0.0);
        return C::new(
            t.norm().ln() - c.re.abs().ln(),
            arg_on_side(t, side) - arg_on_side(s, side),
        );
    }
    let seg = |z0: C, z1: C| ((z1 - c) / (z0 - c)).ln();
    let zero = C::new(0.0, 0.0);
    match p {
        Point::Interior(z) if z.re > 0.0 => {
            let x = C::new(z.re, 0.0);
            seg(zero, x) + seg(x, z)
        }
        _ => seg(zero, z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GapSet;

    fn e1() -> Arc<Surface> {
        Surface::new(GapSet::new(&[(1.0, 2.0)], -1.0).unwrap())
    }

    #[test]
    fn square_matches_polynomial() {
        let s = e1();
        for z in [C::new(0.3, 0.7), C::new(-2.0, -0.1), C::new(5.0, 3.0)] {
            let r = s.r_complex(z);
            assert!((r * r - s.poly_r(z)).norm() < 1e-12 * s.poly_r(z).norm());
        }
    }

    #[test]
    fn boundary_rules_match_limits() {
        let s = e1();
        for x in [-3.0, 0.5, 1.5, 2.5, 10.0] {
            for side in [Side::Upper, Side::Lower] {
                let z = C::new(x, side.sign() * 1e-10);
                let lim = s.r_complex(z);
                let rule = s.r_real(x, side, None);
                assert!((lim - rule).norm() < 1e-6, "x={x} side={side:?}");
            }
        }
    }

    #[test]
    fn reflection_symmetry() {
        let s = e1();
        let z = C::new(1.3, 0.4);
        assert!((s.r_complex(z.conj()) + s.r_complex(z).conj()).norm() < 1e-14);
    }

    #[test]
    fn divided_difference_matches_direct() {
        let s = e1();
        let x = C::new(3.0, 1.0);
        let c = C::new(-1.0, 0.0);
        let dd = (s.poly_r(x) - s.poly_r(c)) / (x - c);
        assert!((s.divided_difference(x, c) - dd).norm() < 1e-12);
    }

    #[test]
    fn zero_gap_integral_is_twice_root() {
        let s = Surface::new(GapSet::zero_gap(-1.0).unwrap());
        let a = Abelian::new(s.clone(), Monomials { count: 1 });
        for p in [
            Point::real(-4.0),
            Point::Upper(3.0),
            Point::Lower(3.0),
            Point::Interior(C::new(2.0, 1.0)),
            Point::Interior(C::new(-1.0, -2.0)),
        ] {
            let v = a.at(p)[0];
            let want = 2.0 * s.sqrt_lambda(p);
            assert!((v - want).norm() < 1e-12, "{p:?}: {v} vs {want}");
        }
    }

    #[test]
    fn path_independence_off_axis() {
        // Closed contour around no singularity: difference of two routes.
        let s = e1();
        let a = Abelian::new(s.clone(), Monomials { count: 2 });
        let z = C::new(1.5, 0.3);
        let direct = a.at(Point::Interior(z));
        let via_neg = {
            let mut v = a.at(Point::Interior(C::new(0.0, 0.3)));
            let w = a.segment(C::new(0.0, 0.3), z, false);
            for (x, y) in v.iter_mut().zip(&w) {
                *x += y;
            }
            v
        };
        for (x, y) in direct.iter().zip(&via_neg) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn log_part_conventions() {
        let c = C::new(1.5, 0.0);
        let up = log_part(c, Point::Upper(3.0));
        let lo = log_part(c, Point::Lower(3.0));
        assert!((up.im + std::f64::consts::PI).abs() < 1e-15);
        assert!((lo.im - std::f64::consts::PI).abs() < 1e-15);
        let neg = log_part(C::new(-1.0, 0.0), Point::real(-4.0));
        assert!((neg - C::new(3f64.ln(), std::f64::consts::PI)).norm() < 1e-15);
    }
}

//! Canonical products `V(λ, D) = √(O(λ,D)·I(λ,D))`, the Abel map and its inverse.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::geometry::{
    angle_distance, angles_to_divisor, divisor_to_angles, wrap01, wrap_centered, Character, Divisor,
    DivisorAngles, GapSet,
};
use crate::potential::{Green, Potential};
use crate::surface::Point;

/// `log(c − λ)` with the side of `λ` deciding the branch on the cut.
pub(crate) fn log_shift(c: f64, p: Point) -> C {
    match p.canonical() {
        Point::Upper(x) => {
            let d = c - x;
            C::new(d.abs().ln(), if d < 0.0 { -PI } else { 0.0 })
        }
        Point::Lower(x) => {
            let d = c - x;
            C::new(d.abs().ln(), if d < 0.0 { PI } else { 0.0 })
        }
        Point::Interior(z) => (C::new(c, 0.0) - z).ln(),
    }
}

fn safe_exp(z: C) -> C {
    if z.re == f64::NEG_INFINITY {
        C::new(0.0, 0.0)
    } else {
        z.exp()
    }
}

/// `log O(λ, D)` with `O(λ*, D) = 1`; `skip = Some(j)` drops the factor
/// `(λ − λ_j)/(λ* − λ_j)`.
pub fn log_outer(g: &GapSet, d: &Divisor, p: Point, skip: Option<usize>) -> C {
    let star = Point::real(g.lambda_star());
    let mut s = C::new(0.0, 0.0);
    for (j, (pt, gap)) in d.points().iter().zip(g.gaps()).enumerate() {
        if skip != Some(j) {
            s += log_shift(pt.lambda, p) - log_shift(pt.lambda, star);
        }
        s += 0.5
            * (log_shift(gap.a, star) - log_shift(gap.a, p) + log_shift(gap.b, star)
                - log_shift(gap.b, p));
    }
    s
}

/// Canonical product of a divisor, with cached Green functions of its points.
#[derive(Debug, Clone)]
pub struct CanonicalProduct {
    pot: Arc<Potential>,
    divisor: Divisor,
    factors: Vec<Option<Green>>,
}

impl CanonicalProduct {
    pub fn new(pot: Arc<Potential>, divisor: Divisor) -> Result<Self> {
        if divisor.len() != pot.n() {
            return Err(Error::Dimension {
                expected: pot.n(),
                got: divisor.len(),
            });
        }
        let mut factors = Vec::with_capacity(divisor.len());
        for (pt, gap) in divisor.points().iter().zip(pot.gaps().gaps()) {
            if pt.lambda <= gap.a || pt.lambda >= gap.b {
                factors.push(None);
            } else {
                factors.push(Some(pot.green_fn(C::new(pt.lambda, 0.0))?));
            }
        }
        Ok(CanonicalProduct {
            pot,
            divisor,
            factors,
        })
    }

    pub fn divisor(&self) -> &Divisor {
        &self.divisor
    }

    /// Product of the sign-flipped divisor, reusing the cached factors.
    pub fn dual(&self) -> CanonicalProduct {
        CanonicalProduct {
            pot: self.pot.clone(),
            divisor: self.divisor.dual(self.pot.gaps()),
            factors: self.factors.clone(),
        }
    }

    pub fn potential(&self) -> &Arc<Potential> {
        &self.pot
    }

    /// `log O(λ, D)`, normalized by `O(λ*, D) = 1`.
    pub fn log_outer(&self, p: Point) -> C {
        log_outer(self.pot.gaps(), &self.divisor, p, None)
    }

    pub fn outer(&self, p: Point) -> C {
        safe_exp(self.log_outer(p))
    }

    /// `(log O)'(λ)`.
    pub fn log_outer_prime(&self, p: Point) -> C {
        let z = p.canonical().z();
        let mut s = C::new(0.0, 0.0);
        for (pt, gap) in self.divisor.points().iter().zip(self.pot.gaps().gaps()) {
            s += 1.0 / (z - pt.lambda) - 0.5 * (1.0 / (z - gap.a) + 1.0 / (z - gap.b));
        }
        s
    }

    /// `Σ ε_j log Φ_{λ_j}`, optionally with every sign flipped.
    pub fn log_inner(&self, p: Point, dual: bool) -> C {
        let flip = if dual { -1.0 } else { 1.0 };
        let mut s = C::new(0.0, 0.0);
        for (pt, f) in self.divisor.points().iter().zip(&self.factors) {
            if let Some(g) = f {
                s += g.log_phi(p) * (flip * pt.eps as f64);
            }
        }
        s
    }

    /// Blaschke factor `I(λ, D) = ∏ Φ_{λ_j}^{ε_j}`.
    pub fn inner(&self, p: Point) -> Result<C> {
        let z = p.canonical().z();
        for pt in self.divisor.points() {
            if pt.eps < 0 && z == C::new(pt.lambda, 0.0) {
                return Err(Error::Pole(format!("{}", pt.lambda)));
            }
        }
        Ok(safe_exp(self.log_inner(p, false)))
    }

    /// `log V(λ, D)`, or of the dual divisor when `dual` is set.
    pub fn log_v(&self, p: Point, dual: bool) -> C {
        0.5 * (self.log_outer(p) + self.log_inner(p, dual))
    }

    pub fn v(&self, p: Point) -> C {
        safe_exp(self.log_v(p, false))
    }

    /// `V(λ, D_*)` for the sign-flipped divisor.
    pub fn v_dual(&self, p: Point) -> C {
        safe_exp(self.log_v(p, true))
    }

    /// `(log V)'`.
    pub fn log_v_prime(&self, p: Point, dual: bool) -> C {
        let flip = if dual { -1.0 } else { 1.0 };
        let mut s = 0.5 * self.log_outer_prime(p);
        for (pt, f) in self.divisor.points().iter().zip(&self.factors) {
            if let Some(g) = f {
                s += 0.5 * flip * pt.eps as f64 * g.omega(p);
            }
        }
        s
    }

    /// `V` together with `V'`.
    pub fn v_with_prime(&self, p: Point, dual: bool) -> (C, C) {
        let v = safe_exp(self.log_v(p, dual));
        (v, v * self.log_v_prime(p, dual))
    }

    fn sample_point(&self, j: usize) -> f64 {
        let gap = self.pot.gaps().gap(j);
        let w = gap.b - gap.a;
        if self.divisor.points()[j].lambda > gap.mid() {
            gap.a + 0.25 * w
        } else {
            gap.a + 0.75 * w
        }
    }

    fn character_raw(&self, dual: bool) -> Vec<f64> {
        (0..self.pot.n())
            .map(|j| {
                let x = self.sample_point(j);
                let up = self.log_v(Point::Upper(x), dual);
                let lo = self.log_v(Point::Lower(x), dual);
                (up - lo).im / (2.0 * PI)
            })
            .collect()
    }

    /// Character picked up by `V` around each generator.
    pub fn character(&self) -> Character {
        Character::new(self.character_raw(false).into_iter().map(wrap01).collect())
    }

    pub fn dual_character(&self) -> Character {
        Character::new(self.character_raw(true).into_iter().map(wrap01).collect())
    }
}

/// Abel map `D ↦ character of V(·, D)`.
pub fn abel_map(pot: &Arc<Potential>, d: &Divisor) -> Result<Character> {
    Ok(CanonicalProduct::new(pot.clone(), d.clone())?.character())
}

/// Options for the Jacobi inversion solver.
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub coarse_grid: usize,
    pub fine_grid: usize,
    pub fd_step: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            tol: 1e-12,
            max_newton: 60,
            coarse_grid: 8,
            fine_grid: 32,
            fd_step: 1e-6,
        }
    }
}

struct Residual<'a> {
    pot: &'a Arc<Potential>,
    target: &'a Character,
}

impl Residual<'_> {
    fn eval(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let d = angles_to_divisor(&DivisorAngles(phi.to_vec()), self.pot.gaps())?;
        let a = abel_map(self.pot, &d)?;
        Ok(a.coords()
            .iter()
            .zip(self.target.coords())
            .map(|(x, y)| wrap_centered(x - y))
            .collect())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton(res: &Residual, start: Vec<f64>, opt: &InversionOptions) -> Result<(Vec<f64>, f64)> {
    let n = start.len();
    let mut phi = start;
    let mut f = res.eval(&phi)?;
    let mut norm = max_abs(&f);
    for _ in 0..opt.max_newton {
        if norm <= opt.tol {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut p1 = phi.clone();
            let mut p2 = phi.clone();
            p1[k] += opt.fd_step;
            p2[k] -= opt.fd_step;
            let f1 = res.eval(&p1)?;
            let f2 = res.eval(&p2)?;
            for m in 0..n {
                jac[(m, k)] = wrap_centered(f1[m] - f2[m]) / (2.0 * opt.fd_step);
            }
        }
        let rhs = DVector::from_iterator(n, f.iter().map(|x| -x));
        let Some(step) = jac.lu().solve(&rhs) else {
            break;
        };
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-4 {
            let cand: Vec<f64> = phi.iter().zip(step.iter()).map(|(p, s)| p + t * s).collect();
            let fc = res.eval(&cand)?;
            let nc = max_abs(&fc);
            if nc < norm {
                phi = cand;
                f = fc;
                norm = nc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((phi, norm))
}

fn grid_starts(res: &Residual, n: usize, m: usize, keep: usize) -> Result<Vec<Vec<f64>>> {
    let total = m.pow(n as u32);
    let mut scored = Vec::with_capacity(total);
    for idx in 0..total {
        let mut k = idx;
        let phi: Vec<f64> = (0..n)
            .map(|_| {
                let c = k % m;
                k /= m;
                (c as f64 + 0.5) * 2.0 * PI / m as f64
            })
            .collect();
        let s = max_abs(&res.eval(&phi)?);
        scored.push((s, phi));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(scored.into_iter().take(keep).map(|x| x.1).collect())
}

/// Coordinate sweeps for larger `N`, where a full grid is too expensive.
fn sweep_start(res: &Residual, n: usize, m: usize) -> Result<Vec<f64>> {
    let mut phi = vec![PI / 2.0; n];
    for _ in 0..2 {
        for j in 0..n {
            let mut best = (f64::INFINITY, phi[j]);
            for c in 0..m {
                let mut trial = phi.clone();
                trial[j] = (c as f64 + 0.5) * 2.0 * PI / m as f64;
                let f = res.eval(&trial)?;
                if f[j].abs() < best.0 {
                    best = (f[j].abs(), trial[j]);
                }
            }
            phi[j] = best.1;
        }
    }
    Ok(phi)
}

/// Jacobi inversion: the divisor whose canonical product has character `alpha`.
pub fn abel_invert(pot: &Arc<Potential>, alpha: &Character) -> Result<Divisor> {
    abel_invert_with(pot, alpha, None, &InversionOptions::default())
}

/// Jacobi inversion from an optional warm start.
pub fn abel_invert_with(
    pot: &Arc<Potential>,
    alpha: &Character,
    warm: Option<&Divisor>,
    opt: &InversionOptions,
) -> Result<Divisor> {
    let n = pot.n();
    if alpha.n() != n {
        return Err(Error::Dimension {
            expected: n,
            got: alpha.n(),
        });
    }
    if n == 0 {
        return Ok(Divisor::empty());
    }
    let res = Residual { pot, target: alpha };
    let accept = opt.tol.max(1e-11);
    if let Some(d) = warm {
        let start = divisor_to_angles(d, pot.gaps())?.0;
        let (phi, norm) = newton(&res, start, opt)?;
        if norm <= accept {
            return angles_to_divisor(&DivisorAngles(phi), pot.gaps());
        }
    }
    let mut starts = if n <= 3 {
        grid_starts(&res, n, opt.coarse_grid, 3)?
    } else {
        vec![sweep_start(&res, n, 4 * opt.coarse_grid)?]
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for round in 0..2 {
        for s in starts.drain(..) {
            let (phi, norm) = newton(&res, s, opt)?;
            if norm <= accept {
                return angles_to_divisor(&DivisorAngles(phi), pot.gaps());
            }
            if best.as_ref().is_none_or(|b| norm < b.1) {
                best = Some((phi, norm));
            }
        }
        if round == 0 {
            starts = if n <= 3 {
                grid_starts(&res, n, opt.fine_grid, 8)?
            } else {
                vec![sweep_start(&res, n, 4 * opt.fine_grid)?]
            };
        }
    }
    let norm = best.map(|b| b.1).unwrap_or(f64::INFINITY);
    Err(Error::no_convergence(format!(
        "Jacobi inversion stalled at residual {norm:.3e}"
    )))
}

/// Distance between two divisors in the angle chart.
pub fn divisor_distance(pot: &Potential, a: &Divisor, b: &Divisor) -> Result<f64> {
    Ok(angle_distance(
        &divisor_to_angles(a, pot.gaps())?,
        &divisor_to_angles(b, pot.gaps())?,
    ))
}

/// `V` written directly over the divisor, bypassing the character.
pub fn canonical_v(pot: &Arc<Potential>, d: &Divisor, p: Point) -> Result<(C, Character)> {
    let cp = CanonicalProduct::new(pot.clone(), d.clone())?;
    Ok((cp.v(p), cp.character()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DivisorPoint, GapSet};

    fn e1() -> Arc<Potential> {
        Potential::new(&GapSet::new(&[(1.0, 2.0)], -1.0).unwrap()).unwrap()
    }

    fn e2() -> Arc<Potential> {
        Potential::new(&GapSet::new(&[(1.0, 2.0), (3.0, 5.0)], -1.0).unwrap()).unwrap()
    }

    fn div(pot: &Potential, pts: &[(f64, i8)]) -> Divisor {
        Divisor::new(
            pot.gaps(),
            pts.iter()
                .map(|&(lambda, eps)| DivisorPoint { lambda, eps })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalizations_at_star() {
        let pot = e2();
        let d = div(&pot, &[(1.3, -1), (4.2, 1)]);
        let cp = CanonicalProduct::new(pot.clone(), d).unwrap();
        let star = Point::real(-1.0);
        assert!((cp.outer(star) - 1.0).norm() < 1e-14);
        let v = cp.v(star);
        assert!(v.re > 0.0 && v.im.abs() < 1e-14);
        assert!((cp.v(star) * cp.v_dual(star) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn outer_endpoint_closed_form() {
        let pot = e1();
        let cp = CanonicalProduct::new(pot.clone(), div(&pot, &[(1.0, 1)])).unwrap();
        let z = C::new(0.5, 0.7);
        let want = (((z - 1.0) * (-1.0 - 2.0)) / ((-1.0 - 1.0) * (z - 2.0))).sqrt();
        assert!((cp.outer(Point::Interior(z)) - want).norm() < 1e-13);
        assert!((cp.inner(Point::Interior(z)).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn blaschke_zero_and_modulus() {
        let pot = e1();
        let cp = CanonicalProduct::new(pot.clone(), div(&pot, &[(1.4, 1)])).unwrap();
        assert!(cp.inner(Point::Upper(1.4)).unwrap().norm() < 1e-12);
        for x in [0.4, 3.0, 20.0] {
            assert!((cp.inner(Point::Upper(x)).unwrap().norm() - 1.0).abs() < 1e-10);
            let v = cp.v(Point::Upper(x));
            assert!((v.norm_sqr() - cp.outer(Point::Upper(x)).re).abs() < 1e-10);
        }
    }

    #[test]
    fn dual_characters_sum_to_half() {
        let pot = e2();
        let d = div(&pot, &[(1.7, 1), (3.3, -1)]);
        let cp = CanonicalProduct::new(pot.clone(), d).unwrap();
        let s = cp.character().add(&cp.dual_character()).unwrap();
        assert!(s.dist(&Character::half(2)).unwrap() < 1e-10);
    }

    #[test]
    fn inversion_round_trip_e1() {
        let pot = e1();
        let d = div(&pot, &[(1.25, -1)]);
        let a = abel_map(&pot, &d).unwrap();
        let back = abel_invert(&pot, &a).unwrap();
        assert!(divisor_distance(&pot, &d, &back).unwrap() < 1e-8);
    }
}

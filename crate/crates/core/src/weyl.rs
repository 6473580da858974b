//! Reflectionless Weyl–Titchmarsh functions and their divisor parametrization.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::boundary::integrate_sides_scalar;
use crate::error::{Error, Result};
use crate::geometry::{Character, Divisor, DivisorPoint, GapSet};
use crate::kernels::{boundary_tolerance, KernelField};
use crate::potential::Potential;
use crate::products::{abel_map, log_outer};
use crate::surface::{sqrt_point, Point, Side};

const I: C = C { re: 0.0, im: 1.0 };

/// `R₀ = −1/(m₊+m₋)`, `R₁ = m₊m₋/(m₊+m₋)` and the product form of `R₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RFunctions {
    pub r0: C,
    pub r1: C,
    pub r_alpha: C,
}

/// `m±^α` of one character.
#[derive(Debug, Clone)]
pub struct Weyl {
    field: KernelField,
}

impl Weyl {
    pub fn new(pot: &Arc<Potential>, alpha: &Character) -> Result<Self> {
        Ok(Weyl {
            field: KernelField::new(pot, alpha)?,
        })
    }

    pub fn from_field(field: KernelField) -> Self {
        Weyl { field }
    }

    pub fn field(&self) -> &KernelField {
        &self.field
    }

    fn ratio(num: C, den: C, p: Point) -> Result<C> {
        if den == C::new(0.0, 0.0) {
            return Err(Error::Pole(format!("{:?}", p)));
        }
        Ok(I * sqrt_point(p) * num / den)
    }

    /// `m₊ = i√λ·V_{α+𝔧}/V_α`.
    pub fn m_plus(&self, p: Point) -> Result<C> {
        Self::ratio(self.field.v_shift(p), self.field.v_alpha(p), p)
    }

    /// `m₋ = i√λ·V_{−α}/V_{𝔧−α}`.
    pub fn m_minus(&self, p: Point) -> Result<C> {
        Self::ratio(self.field.v_neg(p), self.field.v_reflect(p), p)
    }

    /// `𝔪₊ = i√λ·v_{α+𝔧}/v_α`, normalized through `λ*`.
    pub fn m_frak_plus(&self, p: Point) -> Result<C> {
        let star = Point::real(self.field.potential().lambda_star());
        let scale = self.field.v_alpha(star) / self.field.v_shift(star);
        Ok(self.m_plus(p)? * scale)
    }

    pub fn r_functions(&self, p: Point) -> Result<RFunctions> {
        let mp = self.m_plus(p)?;
        let mm = self.m_minus(p)?;
        let s = mp + mm;
        if s == C::new(0.0, 0.0) {
            return Err(Error::Pole(format!("{:?}", p)));
        }
        let g = self.field.potential().gaps();
        let o = log_outer(g, self.field.divisors().0, p, None).exp();
        Ok(RFunctions {
            r0: -1.0 / s,
            r1: mp * mm / s,
            r_alpha: I * self.field.normalization() * o / sqrt_point(p),
        })
    }

    /// Parameters `{R₀(λ*), D}` of `m₊^α`.
    pub fn param(&self) -> Result<MFunctionParam> {
        let g = self.field.potential().gaps();
        let r0 = self.field.normalization() / g.lambda_star().abs().sqrt();
        MFunctionParam::new(g, r0, self.field.divisors().0.clone())
    }
}

/// Data `{R₀(λ*), D}` describing a member of `m₀(E)`.
#[derive(Debug, Clone)]
pub struct MFunctionParam {
    gaps: GapSet,
    r0_star: f64,
    divisor: Divisor,
    sigma: Vec<f64>,
}

impl MFunctionParam {
    pub fn new(g: &GapSet, r0_star: f64, divisor: Divisor) -> Result<Self> {
        if !(r0_star > 0.0 && r0_star.is_finite()) {
            return Err(Error::invalid(format!("R0(λ*) = {r0_star} must be positive")));
        }
        if divisor.len() != g.n() {
            return Err(Error::Dimension {
                expected: g.n(),
                got: divisor.len(),
            });
        }
        let mut p = MFunctionParam {
            gaps: g.clone(),
            r0_star,
            divisor,
            sigma: Vec::new(),
        };
        p.sigma = (0..g.n()).map(|j| p.residue(j)).collect::<Result<_>>()?;
        Ok(p)
    }

    pub fn r0_star(&self) -> f64 {
        self.r0_star
    }

    pub fn divisor(&self) -> &Divisor {
        &self.divisor
    }

    /// Masses `σ_j ≥ 0` of `−1/R₀` at the divisor points.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    fn residue(&self, j: usize) -> Result<f64> {
        let gap = self.gaps.gap(j);
        let lj = self.divisor.points()[j].lambda;
        if lj <= gap.a || lj >= gap.b {
            return Ok(0.0);
        }
        let star = self.gaps.lambda_star();
        let q = Point::Upper(lj);
        let rest = log_outer(&self.gaps, &self.divisor, q, Some(j)).exp();
        let scale = sqrt_point(Point::real(star)) / sqrt_point(q);
        let dr0 = self.r0_star * scale * rest / (star - lj);
        let s = 1.0 / (lj * dr0);
        if s.re < 0.0 || s.im.abs() > 1e-8 * s.re.abs().max(1.0) {
            return Err(Error::no_convergence(format!(
                "residue at {lj} is not a positive mass: {s}"
            )));
        }
        Ok(s.re)
    }

    /// `R₀(λ) = R₀(λ*)·√(λ*/λ)·O(λ, D)`.
    pub fn r0(&self, p: Point) -> C {
        let star = Point::real(self.gaps.lambda_star());
        let o = log_outer(&self.gaps, &self.divisor, p, None).exp();
        self.r0_star * sqrt_point(star) / sqrt_point(p) * o
    }

    /// `(m₊, m₋) = ½(−1/R₀ ± Σ λσ_jε_j/(λ_j − λ))`.
    pub fn m(&self, p: Point) -> (C, C) {
        let z = p.canonical().z();
        let base = -1.0 / self.r0(p);
        let mut poles = C::new(0.0, 0.0);
        for (pt, s) in self.divisor.points().iter().zip(&self.sigma) {
            if *s > 0.0 {
                poles += z * (*s * pt.eps as f64) / (pt.lambda - z);
            }
        }
        (0.5 * (base + poles), 0.5 * (base - poles))
    }
}

/// Band sample points for the interpolation of the divisor polynomial.
fn band_nodes(g: &GapSet) -> Vec<f64> {
    let bands = g.bands();
    bands
        .iter()
        .map(|&(lo, hi)| {
            if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                lo + lo.max(1.0)
            }
        })
        .collect()
}

fn lagrange(nodes: &[f64], vals: &[f64], x: f64) -> f64 {
    let mut s = 0.0;
    for (k, (&xk, &yk)) in nodes.iter().zip(vals).enumerate() {
        let mut w = yk;
        for (m, &xm) in nodes.iter().enumerate() {
            if m != k {
                w *= (x - xm) / (xk - xm);
            }
        }
        s += w;
    }
    s
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Recovers the divisor of `m₊ ∈ m₀(E)` from an evaluator of `m₊`.
///
/// The boundary density `Im m₊(ξ+i0)` determines `∏|ξ − λ_j|` up to a
/// constant, so the points come from a polynomial through one sample per
/// band; a point is put on the first sheet exactly when `m₊` has a pole there.
pub fn recover_divisor<F>(pot: &Arc<Potential>, m: F) -> Result<(Divisor, Character)>
where
    F: Fn(Point) -> Result<C>,
{
    let g = pot.gaps();
    let n = g.n();
    if n == 0 {
        return Ok((Divisor::empty(), Character::zero(0)));
    }
    let star = g.lambda_star().abs().sqrt();
    let nodes = band_nodes(g);
    let mut vals = Vec::with_capacity(n + 1);
    for (k, &xi) in nodes.iter().enumerate() {
        let im = m(Point::Upper(xi))?.im;
        if im <= 0.0 {
            return Err(Error::invalid(format!(
                "Im m(ξ+i0) = {im} at ξ = {xi} is not positive"
            )));
        }
        let mut y = xi.sqrt() / (2.0 * im * star);
        for gap in g.gaps() {
            y *= ((xi - gap.a).abs() * (xi - gap.b).abs()).sqrt();
        }
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        vals.push(sign * y);
    }
    let poly = |x: f64| lagrange(&nodes, &vals, x);
    let mut pts = Vec::with_capacity(n);
    for gap in g.gaps() {
        let (pa, pb) = (poly(gap.a), poly(gap.b));
        let scale = pa.abs().max(pb.abs());
        let mut lj = if pa.abs() <= 1e-12 * scale {
            gap.a
        } else if pb.abs() <= 1e-12 * scale {
            gap.b
        } else if (pa > 0.0) != (pb > 0.0) {
            bisect(gap.a, gap.b, poly)
        } else {
            return Err(Error::no_convergence(format!(
                "no divisor point found in gap ({}, {})",
                gap.a, gap.b
            )));
        };
        let mut eps = 1;
        if lj > gap.a && lj < gap.b {
            let d = 1e-3 * (lj - gap.a).min(gap.b - lj);
            let left = m(Point::Upper(lj - d))?.re;
            let right = m(Point::Upper(lj + d))?.re;
            if left > right {
                let inv = |x: f64| {
                    m(Point::Upper(x))
                        .map(|v| (1.0 / v).re)
                        .unwrap_or(0.0)
                };
                lj = bisect(lj - d, lj + d, inv);
            } else {
                eps = -1;
            }
        }
        pts.push(DivisorPoint { lambda: lj, eps });
    }
    let d = Divisor::new(g, pts)?;
    let alpha = abel_map(pot, &d)?;
    Ok((d, alpha))
}

/// Representation `m(λ) = aλ + ∫λ dσ(ξ)/(ξ − λ)` of a Stieltjes function.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesData {
    /// Linear coefficient `a`.
    pub slope: f64,
    /// Mass points `(λ_j, σ_j)` in the gaps.
    pub masses: Vec<(f64, f64)>,
    /// Samples `(ξ, Im m(ξ+i0)/π)` on the bands; `dσ = density·dξ/ξ`.
    pub density: Vec<(f64, f64)>,
}

/// Linear coefficient from `m(λ)/λ` at `λ → −∞`, extrapolated in `|λ|^{-1/2}`.
fn slope_at_infinity<F>(m: &F) -> Result<f64>
where
    F: Fn(Point) -> Result<C>,
{
    let ts = [1e-3, 5e-4, 2.5e-4];
    let mut ys = [0.0; 3];
    for (y, t) in ys.iter_mut().zip(ts) {
        let lam = -1.0 / (t * t);
        *y = m(Point::real(lam))?.re / lam;
    }
    Ok(lagrange(&ts, &ys, 0.0))
}

/// Splits a Stieltjes function into slope, gap masses and band density.
pub fn stieltjes_extract<F>(g: &GapSet, m: F, samples_per_band: usize) -> Result<StieltjesData>
where
    F: Fn(Point) -> Result<C>,
{
    let slope = slope_at_infinity(&m)?;
    let mut masses = Vec::new();
    let val = |x: f64| m(Point::Upper(x)).map(|v| v.re);
    for gap in g.gaps() {
        let k = 400;
        let w = gap.b - gap.a;
        let mut prev = (gap.a + w / k as f64, val(gap.a + w / k as f64)?);
        for i in 2..k {
            let x = gap.a + w * i as f64 / k as f64;
            let v = val(x)?;
            if prev.1 > 0.0 && v < 0.0 {
                let inv = |t: f64| m(Point::Upper(t)).map(|v| (1.0 / v).re).unwrap_or(0.0);
                let lj = bisect(prev.0, x, inv);
                let h = 1e-4 * (lj - gap.a).min(gap.b - lj);
                let res = |h: f64| -> Result<f64> {
                    let l = lj - h;
                    let r = lj + h;
                    let a = (lj - l) * val(l)? / l;
                    let b = (lj - r) * val(r)? / r;
                    Ok(0.5 * (a + b))
                };
                let (r1, r2) = (res(h)?, res(0.5 * h)?);
                masses.push((lj, (4.0 * r2 - r1) / 3.0));
            }
            prev = (x, v);
        }
    }
    let mut density = Vec::new();
    for (lo, hi) in g.bands() {
        let hi = if hi.is_finite() { hi } else { lo + 10.0 * lo.max(1.0) };
        for i in 0..samples_per_band {
            let xi = lo + (hi - lo) * (i as f64 + 0.5) / samples_per_band as f64;
            density.push((xi, m(Point::Upper(xi))?.im / PI));
        }
    }
    Ok(StieltjesData {
        slope,
        masses,
        density,
    })
}

/// Evaluates `aλ + ∫_E λ dσ/(ξ − λ) + Σ λσ_j/(λ_j − λ)`, taking the density
/// from `m` itself on the bands.
pub fn stieltjes_reconstruct<F>(pot: &Potential, data: &StieltjesData, m: F, lambda: C) -> C
where
    F: Fn(Point) -> Result<C>,
{
    let ac = integrate_sides_scalar(
        pot.surface(),
        |xi, side| match side {
            Side::Upper => {
                let rho = m(Point::Upper(xi)).map(|v| v.im / PI).unwrap_or(0.0);
                lambda * rho / (xi.sqrt() * (xi - lambda))
            }
            Side::Lower => C::new(0.0, 0.0),
        },
        boundary_tolerance(),
    );
    let mut s = data.slope * lambda + ac;
    for &(lj, sj) in &data.masses {
        s += lambda * sj / (lj - lambda);
    }
    s
}

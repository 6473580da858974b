//! Reproducing kernels of the character-automorphic Smirnov spaces `E²(α)`.
//!
//! A [`KernelField`] holds the two canonical products for `α` and `α + 𝔧`;
//! their duals supply `V_{𝔧−α}` and `V_{−α}`, so every kernel, eigenfunction
//! and Wronskian evaluation is closed-form in four products.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::boundary::integrate_sides_scalar;
use crate::error::{Error, Result};
use crate::geometry::{Character, Divisor};
use crate::potential::{Green, Potential};
use crate::products::{abel_invert_with, CanonicalProduct, InversionOptions};
use crate::quad::Tolerance;
use crate::surface::{Point, Side, Surface};

const I: C = C { re: 0.0, im: 1.0 };

/// Relative distance to `λ̄₀` below which the kernel uses the derivative form.
const DIAGONAL_BAND: f64 = 1e-5;

/// Default tolerance for boundary integrals.
pub fn boundary_tolerance() -> Tolerance {
    Tolerance::new(1e-10, 1e-13)
}

/// Kernels, eigenfunctions and normalization for one character `α`.
#[derive(Debug, Clone)]
pub struct KernelField {
    alpha: Character,
    da: CanonicalProduct,
    daj: CanonicalProduct,
    c: f64,
}

impl KernelField {
    pub fn new(pot: &Arc<Potential>, alpha: &Character) -> Result<Self> {
        Self::with_options(pot, alpha, None, &InversionOptions::default())
    }

    /// Builds the field, warm-starting both inversions from a previous field.
    pub fn with_options(
        pot: &Arc<Potential>,
        alpha: &Character,
        warm: Option<&KernelField>,
        opt: &InversionOptions,
    ) -> Result<Self> {
        let alpha_j = alpha.plus_half();
        let da = abel_invert_with(pot, alpha, warm.map(|w| w.da.divisor()), opt)?;
        let daj = abel_invert_with(pot, &alpha_j, warm.map(|w| w.daj.divisor()), opt)?;
        let mut field = Self::from_products(
            CanonicalProduct::new(pot.clone(), da)?,
            CanonicalProduct::new(pot.clone(), daj)?,
        );
        field.alpha = alpha.clone();
        Ok(field)
    }

    /// Field from explicit products for `α` and `α + 𝔧`.
    pub fn from_products(da: CanonicalProduct, daj: CanonicalProduct) -> Self {
        let star = Point::real(da.potential().lambda_star());
        let ia = da.log_inner(star, false).re;
        let ij = daj.log_inner(star, false).re;
        let c = 1.0 / (2.0 * (0.5 * (ia - ij)).cosh());
        KernelField {
            alpha: da.character(),
            da,
            daj,
            c,
        }
    }

    pub fn alpha(&self) -> &Character {
        &self.alpha
    }

    pub fn potential(&self) -> &Arc<Potential> {
        self.da.potential()
    }

    pub fn surface(&self) -> &Arc<Surface> {
        self.da.potential().surface()
    }

    /// Divisors of `V_α` and `V_{α+𝔧}`.
    pub fn divisors(&self) -> (&Divisor, &Divisor) {
        (self.da.divisor(), self.daj.divisor())
    }

    /// `𝒞(α)`, shared by `α` and `α + 𝔧`.
    pub fn normalization(&self) -> f64 {
        self.c
    }

    pub fn v_alpha(&self, p: Point) -> C {
        self.da.v(p)
    }

    /// `V_{α+𝔧}`.
    pub fn v_shift(&self, p: Point) -> C {
        self.daj.v(p)
    }

    /// `V_{−α}`.
    pub fn v_neg(&self, p: Point) -> C {
        self.daj.v_dual(p)
    }

    /// `V_{𝔧−α}`.
    pub fn v_reflect(&self, p: Point) -> C {
        self.da.v_dual(p)
    }

    /// The field of `α + 𝔧`.
    pub fn shift_j(&self) -> KernelField {
        KernelField {
            alpha: self.alpha.plus_half(),
            da: self.daj.clone(),
            daj: self.da.clone(),
            c: self.c,
        }
    }

    /// The field of `𝔧 − α`.
    pub fn reflect(&self) -> KernelField {
        KernelField {
            alpha: self.alpha.neg().plus_half(),
            da: self.da.dual(),
            daj: self.daj.dual(),
            c: self.c,
        }
    }

    /// `𝒞·(V_{α+𝔧}V_{𝔧−α} + V_α V_{−α})`, identically one.
    pub fn wronskian(&self, p: Point) -> C {
        self.c * (self.v_shift(p) * self.v_reflect(p) + self.v_alpha(p) * self.v_neg(p))
    }

    /// Generalized eigenfunction `V_α(λ)/V_α(λ*)`.
    pub fn eigenfunction(&self, p: Point) -> C {
        let star = Point::real(self.potential().lambda_star());
        self.v_alpha(p) / self.v_alpha(star)
    }

    /// `k^α(·, λ₀)` with the `λ₀` factors precomputed.
    pub fn column(&self, lambda0: Point) -> KernelColumn<'_> {
        let s0 = self.surface().sqrt_lambda(lambda0);
        KernelColumn {
            field: self,
            conj0: lambda0.conj(),
            a: self.v_alpha(lambda0).conj(),
            b: (s0 * self.v_shift(lambda0)).conj(),
        }
    }

    /// `k^α(λ, λ₀)`.
    pub fn kernel(&self, lambda: Point, lambda0: Point) -> C {
        self.column(lambda0).eval(lambda)
    }

    /// `k^α(λ, λ) > 0`.
    pub fn diagonal(&self, lambda: Point) -> f64 {
        self.kernel(lambda, lambda).re
    }
}

/// `k^α(·, λ₀)` for a fixed `λ₀`.
#[derive(Debug, Clone)]
pub struct KernelColumn<'a> {
    field: &'a KernelField,
    conj0: Point,
    a: C,
    b: C,
}

impl KernelColumn<'_> {
    pub fn eval(&self, lambda: Point) -> C {
        let f = self.field;
        let surf = f.surface();
        let z = lambda.canonical().z();
        let den = z - self.conj0.canonical().z();
        if den.norm() > DIAGONAL_BAND * (1.0 + z.norm()) {
            let num = surf.sqrt_lambda(lambda) * f.v_shift(lambda) * self.a
                + f.v_alpha(lambda) * self.b;
            return I * f.c * num / den;
        }
        let q = midpoint(lambda, self.conj0);
        let s = surf.sqrt_lambda(q);
        let (vp, dvp) = f.daj.v_with_prime(q, false);
        let (_, dva) = f.da.v_with_prime(q, false);
        let dnum = (vp / (2.0 * s) + s * dvp) * self.a + dva * self.b;
        I * f.c * dnum
    }
}

fn midpoint(p: Point, q: Point) -> Point {
    match (p.canonical(), q.canonical()) {
        (Point::Interior(a), Point::Interior(b)) => Point::Interior(0.5 * (a + b)),
        (x, y) if x.is_boundary() && y.is_boundary() => {
            let side = x.side();
            Point::boundary(0.5 * (x.z().re + y.z().re), side)
        }
        (x, _) => x,
    }
}

/// `k^α(·, λ₀)` for real `λ₀ < 0` built from the Green function with pole `λ₀`.
///
/// Independent of [`KernelField`]: it needs one inversion, for `α − β₀/2`.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    green: Green,
    prod: CanonicalProduct,
    scale: C,
}

impl GreenKernel {
    pub fn new(pot: &Arc<Potential>, alpha: &Character, lambda0: f64) -> Result<Self> {
        if lambda0 >= 0.0 {
            return Err(Error::invalid(format!(
                "pole {lambda0} must be on the negative axis"
            )));
        }
        let green = pot.green_fn(C::new(lambda0, 0.0))?;
        let half: Vec<f64> = pot
            .gaps()
            .gaps()
            .iter()
            .map(|g| {
                let up = green.log_phi_over_linear(Point::Upper(g.a));
                let lo = green.log_phi_over_linear(Point::Lower(g.a));
                (up - lo).im / (4.0 * PI)
            })
            .collect();
        let target = alpha.sub(&Character::new(half))?;
        let d = abel_invert_with(pot, &target, None, &InversionOptions::default())?;
        let prod = CanonicalProduct::new(pot.clone(), d)?;
        let p0 = Point::real(lambda0);
        let mut scale = lambda0.abs().sqrt() / prod.v_dual(p0)
            * (0.5 * green.log_phi_over_linear(p0)).exp();
        let mut gk = GreenKernel {
            green,
            prod,
            scale,
        };
        if gk.eval(p0).re < 0.0 {
            scale = -scale;
            gk.scale = scale;
        }
        Ok(gk)
    }

    pub fn eval(&self, lambda: Point) -> C {
        self.scale * self.prod.v(lambda) * (0.5 * self.green.log_phi_over_linear(lambda)).exp()
    }
}

/// Orthonormal system `e_n = Φ_{λ₀}ⁿ k^{α−nβ₀}_{λ₀}/√k^{α−nβ₀}(λ₀,λ₀)`.
#[derive(Debug, Clone)]
pub struct Basis {
    green: Green,
    lambda0: f64,
    fields: Vec<KernelField>,
    norms: Vec<f64>,
}

impl Basis {
    /// Elements `e_0, …, e_{count−1}`.
    pub fn new(pot: &Arc<Potential>, alpha: &Character, lambda0: f64, count: usize) -> Result<Self> {
        if lambda0 >= 0.0 {
            return Err(Error::invalid(format!(
                "base point {lambda0} must be on the negative axis"
            )));
        }
        let green = pot.green_fn(C::new(lambda0, 0.0))?;
        let beta = green.character();
        let p0 = Point::real(lambda0);
        let mut fields: Vec<KernelField> = Vec::with_capacity(count);
        let mut norms = Vec::with_capacity(count);
        for n in 0..count {
            let a = alpha.shifted(&beta, -(n as f64))?;
            let f = KernelField::with_options(pot, &a, None, &InversionOptions::default())?;
            norms.push(f.diagonal(p0).sqrt());
            fields.push(f);
        }
        Ok(Basis {
            green,
            lambda0,
            fields,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn eval(&self, n: usize, p: Point) -> C {
        let phi_n = if n == 0 {
            C::new(1.0, 0.0)
        } else {
            (self.green.log_phi(p) * n as f64).exp()
        };
        phi_n * self.fields[n].kernel(p, Point::real(self.lambda0)) / self.norms[n]
    }
}

/// `(1/2π) Σ_sides ∫_E F·conj(G) dξ/√ξ`.
pub fn boundary_inner_product<F, G>(surf: &Surface, f: F, g: G, tol: Tolerance) -> C
where
    F: Fn(f64, Side) -> C,
    G: Fn(f64, Side) -> C,
{
    integrate_sides_scalar(surf, |x, s| f(x, s) * g(x, s).conj(), tol) / (2.0 * PI)
}

/// Cauchy integral `(1/2πi) ∮_E k^α(ξ,λ₀)·k^{𝔧−α}(ξ,λ₁) dξ/√ξ`, zero under DCT.
pub fn dct_residue(field: &KernelField, lambda0: Point, lambda1: Point, tol: Tolerance) -> C {
    let dual = field.reflect();
    let c0 = field.column(lambda0);
    let c1 = dual.column(lambda1);
    let v = integrate_sides_scalar(
        field.surface(),
        |x, s| {
            let p = Point::boundary(x, s);
            c0.eval(p) * c1.eval(p)
        },
        tol,
    );
    v / (2.0 * PI * I)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GapSet;

    fn zero() -> Arc<Potential> {
        Potential::new(&GapSet::zero_gap(-1.0).unwrap()).unwrap()
    }

    fn e1() -> Arc<Potential> {
        Potential::new(&GapSet::new(&[(1.0, 2.0)], -1.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_gap_closed_forms() {
        let pot = zero();
        let f = KernelField::new(&pot, &Character::zero(0)).unwrap();
        assert!((f.normalization() - 0.5).abs() < 1e-15);
        assert!((f.kernel(Point::real(-1.0), Point::real(-1.0)) - 0.25).norm() < 1e-10);
        assert!((f.kernel(Point::real(-4.0), Point::real(-1.0)) - 1.0 / 6.0).norm() < 1e-12);
        let z = C::new(0.7, 1.3);
        let want = 0.5 * I * (z.sqrt() - I) / (z + 1.0);
        assert!((f.kernel(Point::Interior(z), Point::real(-1.0)) - want).norm() < 1e-12);
    }

    #[test]
    fn hermitian_and_positive() {
        let pot = e1();
        let f = KernelField::new(&pot, &Character::new(vec![0.3])).unwrap();
        let pts = [C::new(-2.0, 0.5), C::new(1.5, 0.2), C::new(3.0, -1.0)];
        for a in pts {
            for b in pts {
                let k1 = f.kernel(Point::Interior(a), Point::Interior(b));
                let k2 = f.kernel(Point::Interior(b), Point::Interior(a)).conj();
                assert!((k1 - k2).norm() < 1e-10 * (1.0 + k1.norm()));
            }
            assert!(f.diagonal(Point::Interior(a)) > 0.0);
        }
    }

    #[test]
    fn wronskian_is_one() {
        let pot = e1();
        let f = KernelField::new(&pot, &Character::new(vec![0.71])).unwrap();
        for z in [C::new(-3.0, 0.0), C::new(0.4, 2.0), C::new(7.0, -0.3)] {
            assert!((f.wronskian(Point::Interior(z)) - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn green_construction_agrees() {
        let pot = e1();
        let alpha = Character::new(vec![0.4]);
        let f = KernelField::new(&pot, &alpha).unwrap();
        let g = GreenKernel::new(&pot, &alpha, -2.0).unwrap();
        for z in [C::new(-0.5, 0.0), C::new(0.5, 1.0), C::new(4.0, -2.0)] {
            let p = Point::Interior(z);
            let a = f.kernel(p, Point::real(-2.0));
            let b = g.eval(p);
            assert!((a - b).norm() < 1e-8 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_gap_reproducing_norm() {
        let pot = zero();
        let f = KernelField::new(&pot, &Character::zero(0)).unwrap();
        let col = f.column(Point::real(-1.0));
        let v = boundary_inner_product(
            pot.surface(),
            |x, s| col.eval(Point::boundary(x, s)),
            |x, s| col.eval(Point::boundary(x, s)),
            boundary_tolerance(),
        );
        assert!((v - 0.25).norm() < 1e-9);
    }
}

//! Transfer matrices of the canonical systems generated by the flow.
//!
//! `𝒜_α(λ,x) = 𝒱_α(λ)⁻¹·diag(e^{ixθ}, e^{−ixθ})·𝒱_{α−ηx}(λ)` is evaluated
//! explicitly. Entries grow like `e^{xM(λ)}`, so every matrix carries a
//! logarithmic scale next to its normalized entries.

use nalgebra::Matrix2;
use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::flow::{fit_type_limit, flow_character, FlowGrid};
use crate::geometry::Character;
use crate::kernels::KernelField;
use crate::potential::Potential;
use crate::surface::{sqrt_point, Point, Side};

const I: C = C { re: 0.0, im: 1.0 };
const ZERO: C = C { re: 0.0, im: 0.0 };
const ONE: C = C { re: 1.0, im: 0.0 };

pub type CMatrix = Matrix2<C>;

/// `𝒥 = [[0, 1], [−1, 0]]`.
pub fn j_matrix() -> CMatrix {
    CMatrix::new(ZERO, ONE, -ONE, ZERO)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Normalized,
    Symmetric,
}

/// A 2×2 transfer matrix `e^{scale}·entries`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub entries: CMatrix,
    pub log_scale: f64,
    pub lambda: C,
    pub x: f64,
    pub alpha: Character,
    pub variant: Variant,
}

impl TransferMatrix {
    /// Entries with the scale applied; overflows for large `xM(λ)`.
    pub fn value(&self) -> CMatrix {
        self.entries * C::new(self.log_scale.exp(), 0.0)
    }

    pub fn det(&self) -> C {
        self.entries.determinant() * (2.0 * self.log_scale).exp()
    }

    /// `log‖·‖` for the spectral norm.
    pub fn log_norm(&self) -> f64 {
        spectral_norm(&self.entries).ln() + self.log_scale
    }

    /// `(a₂₂w − a₂₁)/(−a₁₂w + a₁₁)`, with `w = ∞` allowed.
    pub fn mobius(&self, w: Option<f64>) -> C {
        let m = &self.entries;
        match w {
            Some(w) => (m[(1, 1)] * w - m[(1, 0)]) / (-m[(0, 1)] * w + m[(0, 0)]),
            None => -m[(1, 1)] / m[(0, 1)],
        }
    }
}

/// Largest singular value of a 2×2 matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let f: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let d = m.determinant().norm();
    let disc = (f * f - 4.0 * d * d).max(0.0).sqrt();
    (0.5 * (f + disc)).sqrt()
}

/// Smallest eigenvalue of the Hermitian form `(𝒥 − A𝒥A*)/(λ − λ̄)`.
pub fn j_form_min_eigenvalue(a: &TransferMatrix) -> f64 {
    let m = a.value();
    let j = j_matrix();
    let lam = a.lambda;
    let h = (j - m * j * m.adjoint()) / (lam - lam.conj());
    let (p, q, r) = (h[(0, 0)].re, h[(1, 1)].re, h[(0, 1)]);
    let mid = 0.5 * (p + q);
    let rad = (0.25 * (p - q) * (p - q) + r.norm_sqr()).sqrt();
    mid - rad
}

/// `𝒱_α(λ) = √𝒞·[[i√λV_{α+𝔧}, V_α], [−i√λV_{−α}, V_{𝔧−α}]]`.
pub fn v_matrix(field: &KernelField, p: Point) -> CMatrix {
    let s = sqrt_point(p);
    let c = field.normalization().sqrt();
    CMatrix::new(
        I * s * field.v_shift(p),
        field.v_alpha(p),
        -I * s * field.v_neg(p),
        field.v_reflect(p),
    ) * C::new(c, 0.0)
}

/// `𝒱_α⁻¹` from `det 𝒱_α = i√λ`.
fn v_inverse(field: &KernelField, p: Point) -> Result<CMatrix> {
    let v = v_matrix(field, p);
    let det = v.determinant();
    if det.norm() == 0.0 {
        return Err(Error::Pole("𝒱 is singular at λ = 0".into()));
    }
    Ok(CMatrix::new(v[(1, 1)], -v[(0, 1)], -v[(1, 0)], v[(0, 0)]) / det)
}

/// `𝒜_α(λ, x)` from the fields at `α` and `α − ηx`.
pub fn transfer_a(start: &KernelField, end: &KernelField, x: f64, p: Point) -> Result<TransferMatrix> {
    let pot = start.potential();
    let th = pot.theta(p);
    let scale = x * th.im.abs();
    let d_plus = (I * x * th - scale).exp();
    let d_minus = (-I * x * th - scale).exp();
    let diag = CMatrix::new(d_plus, ZERO, ZERO, d_minus);
    let m = v_inverse(start, p)? * diag * v_matrix(end, p);
    Ok(TransferMatrix {
        entries: m,
        log_scale: scale,
        lambda: p.canonical().z(),
        x,
        alpha: start.alpha().clone(),
        variant: Variant::Plain,
    })
}

/// `𝒜_α(λ, x)` building the field at `α − ηx` on demand.
pub fn transfer_a_at(pot: &std::sync::Arc<Potential>, alpha: &Character, p: Point, x: f64) -> Result<TransferMatrix> {
    let start = KernelField::new(pot, alpha)?;
    let end = KernelField::new(pot, &flow_character(pot, alpha, x))?;
    transfer_a(&start, &end, x, p)
}

/// `√(V_{α+𝔧}(λ*)/V_α(λ*))`.
fn star_ratio(field: &KernelField) -> f64 {
    let star = Point::real(field.potential().lambda_star());
    (field.v_shift(star) / field.v_alpha(star)).re.sqrt()
}

/// Transfer matrices along a [`FlowGrid`].
#[derive(Debug, Clone, Copy)]
pub struct TransferFamily<'a> {
    grid: &'a FlowGrid,
}

impl<'a> TransferFamily<'a> {
    pub fn new(grid: &'a FlowGrid) -> Self {
        TransferFamily { grid }
    }

    pub fn grid(&self) -> &FlowGrid {
        self.grid
    }

    /// `𝒜_α(λ, x_i)`.
    pub fn plain(&self, p: Point, i: usize) -> Result<TransferMatrix> {
        let g = self.grid;
        transfer_a(g.field(0), g.field(i), g.sample(i).x, p)
    }

    /// `𝔄_α(λ, x_i) = diag(s₀, 1/s₀)·𝒜·diag(1/(𝔢 s_x), 𝔢 s_x)`.
    pub fn normalized(&self, p: Point, i: usize) -> Result<TransferMatrix> {
        let g = self.grid;
        let mut a = self.plain(p, i)?;
        let s0 = star_ratio(g.field(0));
        let sx = star_ratio(g.field(i));
        let e = g.sample(i).log_e.exp();
        let left = CMatrix::new(C::new(s0, 0.0), ZERO, ZERO, C::new(1.0 / s0, 0.0));
        let right = CMatrix::new(C::new(1.0 / (e * sx), 0.0), ZERO, ZERO, C::new(e * sx, 0.0));
        a.entries = left * a.entries * right;
        a.variant = Variant::Normalized;
        Ok(a)
    }

    /// `𝔅(μ, x_i) = diag(μ, 1)·𝔄(μ², x_i)·diag(1/μ, 1)`.
    pub fn symmetric(&self, mu: C, i: usize) -> Result<TransferMatrix> {
        if mu.im <= 0.0 {
            return Err(Error::invalid("μ must lie in the upper half-plane"));
        }
        let mut a = self.normalized(Point::Interior(mu * mu), i)?;
        let m = a.entries;
        a.entries = CMatrix::new(m[(0, 0)], m[(0, 1)] * mu, m[(1, 0)] / mu, m[(1, 1)]);
        a.lambda = mu;
        a.variant = Variant::Symmetric;
        Ok(a)
    }

    /// `[i√λ𝔣_{α+𝔧}(λ,x), 𝔣_α(λ,x)]`.
    pub fn row(&self, p: Point, i: usize) -> [C; 2] {
        let g = self.grid;
        [I * sqrt_point(p) * g.f_frak(p, i, true), g.f_frak(p, i, false)]
    }

    /// Relative mismatch of `row(x) = row(0)·𝔄(λ, x)`.
    pub fn row_residual(&self, p: Point, i: usize) -> Result<f64> {
        let a = self.normalized(p, i)?.value();
        let r0 = self.row(p, 0);
        let rx = self.row(p, i);
        let pred = [
            r0[0] * a[(0, 0)] + r0[1] * a[(1, 0)],
            r0[0] * a[(0, 1)] + r0[1] * a[(1, 1)],
        ];
        let err = ((pred[0] - rx[0]).norm_sqr() + (pred[1] - rx[1]).norm_sqr()).sqrt();
        let size = (rx[0].norm_sqr() + rx[1].norm_sqr()).sqrt();
        Ok(err / size)
    }

    fn integral_residual(&self, mats: &[CMatrix], w: [C; 2], end: usize) -> f64 {
        let g = self.grid;
        let tj: Vec<f64> = g.samples()[..=end].iter().map(|s| s.tau_j).collect();
        let ta: Vec<f64> = g.samples()[..=end].iter().map(|s| s.tau).collect();
        let mut integral = CMatrix::zeros();
        for r in 0..2 {
            let c0: Vec<C> = mats.iter().map(|m| m[(r, 0)]).collect();
            let c1: Vec<C> = mats.iter().map(|m| m[(r, 1)]).collect();
            integral[(r, 0)] = w[0] * g.rule().cumulative(&c0, &tj)[end];
            integral[(r, 1)] = w[1] * g.rule().cumulative(&c1, &ta)[end];
        }
        let j = j_matrix();
        let res = mats[end] * j - j + integral;
        spectral_norm(&res) / spectral_norm(&mats[end]).max(1.0)
    }

    /// `‖𝔄𝒥 − 𝒥 + ∫_0^x 𝔄 d𝒯‖/max(1, ‖𝔄‖)`, `𝒯 = diag(τ^{α+𝔧}, λτ^α)`.
    pub fn integral_equation_residual(&self, p: Point, end: usize) -> Result<f64> {
        let mats = (0..=end)
            .map(|i| self.normalized(p, i).map(|a| a.value()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.integral_residual(&mats, [ONE, p.canonical().z()], end))
    }

    /// Residual of `𝔅𝒥 = 𝒥 − μ∫𝔅 diag(dτ^{α+𝔧}, dτ^α)`.
    pub fn symmetric_residual(&self, mu: C, end: usize) -> Result<f64> {
        let mats = (0..=end)
            .map(|i| self.symmetric(mu, i).map(|a| a.value()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.integral_residual(&mats, [mu, mu], end))
    }

    /// Circle through the images of `w = 0, 1, ∞`: `(center, radius)`.
    pub fn weyl_disk(&self, p: Point, i: usize) -> Result<(C, f64)> {
        if p.canonical().z().im <= 0.0 {
            return Err(Error::invalid("Weyl disks need Im λ > 0"));
        }
        let a = self.normalized(p, i)?;
        circle_through(a.mobius(Some(0.0)), a.mobius(Some(1.0)), a.mobius(None))
    }

    /// Limit estimate of `log‖𝔄(λ, x_i)‖/M(λ)` as `λ → −∞`.
    pub fn exp_type(&self, i: usize, lambdas: &[f64]) -> Result<f64> {
        if self.grid.sample(i).x == 0.0 {
            return Ok(0.0);
        }
        let pot = self.grid.potential();
        let mut ms = Vec::new();
        let mut logs = Vec::new();
        let mut vals = Vec::new();
        for &l in lambdas {
            if l >= 0.0 {
                return Err(Error::invalid("type samples must be negative"));
            }
            let p = Point::real(l);
            let m = pot.theta(p).im;
            ms.push(m);
            logs.push(l.abs().ln());
            vals.push(self.normalized(p, i)?.log_norm() / m);
        }
        fit_type_limit(&ms, &logs, &vals)
    }

    /// CSV rows `x,lambda_re,lambda_im,a11..a22 (re,im),det_dev,j_min`.
    pub fn to_csv(&self, p: Point) -> Result<String> {
        let mut out = String::from(
            "x,lambda_re,lambda_im,a11_re,a11_im,a12_re,a12_im,a21_re,a21_im,a22_re,a22_im,det_dev,j_min\n",
        );
        for i in 0..self.grid.len() {
            let a = self.normalized(p, i)?;
            let v = a.value();
            let jmin = if a.lambda.im != 0.0 {
                j_form_min_eigenvalue(&a)
            } else {
                f64::NAN
            };
            out.push_str(&format!("{},{:e},{:e}", a.x, a.lambda.re, a.lambda.im));
            for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                out.push_str(&format!(",{:.15e},{:.15e}", v[(r, c)].re, v[(r, c)].im));
            }
            out.push_str(&format!(",{:e},{:e}\n", (a.det() - 1.0).norm(), jmin));
        }
        Ok(out)
    }
}

fn circle_through(a: C, b: C, c: C) -> Result<(C, f64)> {
    let d = 2.0 * (a.re * (b.im - c.im) + b.re * (c.im - a.im) + c.re * (a.im - b.im));
    if d.abs() < 1e-300 {
        return Err(Error::no_convergence("degenerate Weyl circle"));
    }
    let (na, nb, nc) = (a.norm_sqr(), b.norm_sqr(), c.norm_sqr());
    let ux = (na * (b.im - c.im) + nb * (c.im - a.im) + nc * (a.im - b.im)) / d;
    let uy = (na * (c.re - b.re) + nb * (a.re - c.re) + nc * (b.re - a.re)) / d;
    let center = C::new(ux, uy);
    Ok((center, (a - center).norm()))
}

/// Max `‖𝒜(ξ+i0) − 𝒜(ξ−i0)‖` over the sample points `ξ ∈ E`, relative to `‖𝒜‖`.
pub fn entire_check(start: &KernelField, end: &KernelField, x: f64, xis: &[f64]) -> Result<f64> {
    let g = start.potential().gaps();
    let mut worst: f64 = 0.0;
    for &xi in xis {
        if !g.in_spectrum_interior(xi) {
            return Err(Error::invalid(format!("{xi} is not an interior point of E")));
        }
        let up = transfer_a(start, end, x, Point::boundary(xi, Side::Upper))?.value();
        let lo = transfer_a(start, end, x, Point::boundary(xi, Side::Lower))?.value();
        worst = worst.max(spectral_norm(&(up - lo)) / spectral_norm(&up).max(1.0));
    }
    Ok(worst)
}

/// Sample points of `E` next to the ends of gap `j` (`j = N` means `[b_N, ∞)`).
pub fn points_near_gap(g: &crate::geometry::GapSet, j: usize, count: usize) -> Result<Vec<f64>> {
    let bands = g.bands();
    if j > g.n() {
        return Err(Error::invalid(format!("gap index {j} exceeds {}", g.n())));
    }
    let mut out = Vec::with_capacity(count);
    let (lo, hi) = if j < g.n() {
        (bands[j].0, bands[j].1)
    } else {
        (bands[j].0, bands[j].0 + 1.0)
    };
    for k in 1..=count {
        let t = k as f64 / (count + 1) as f64;
        out.push(lo + t * (hi - lo));
    }
    Ok(out)
}

/// `(1/2πi)∮_{|ξ|=r} 𝒜(ξ)/(ξ − λ) dξ` by the periodic trapezoid rule.
pub fn cauchy_reconstruct(start: &KernelField, end: &KernelField, x: f64, lambda: C, radius: f64, nodes: usize) -> Result<CMatrix> {
    if lambda.norm() >= radius {
        return Err(Error::invalid("λ must lie inside the contour"));
    }
    let mut acc = CMatrix::zeros();
    for k in 0..nodes {
        let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
        let z = C::from_polar(radius, t);
        let a = transfer_a(start, end, x, Point::Interior(z))?.value();
        acc += a * (z / (z - lambda));
    }
    Ok(acc / C::new(nodes as f64, 0.0))
}

/// `{𝒱_α(λ)(𝒥 − 𝒜(λ)𝒥𝒜(λ₀)*)/(λ − λ̄₀)𝒱_α(λ₀)*}₁₁`.
pub fn kernel_difference(start: &KernelField, end: &KernelField, x: f64, p: Point, p0: Point) -> Result<C> {
    let a = transfer_a(start, end, x, p)?.value();
    let a0 = transfer_a(start, end, x, p0)?.value();
    let j = j_matrix();
    let den = p.canonical().z() - p0.canonical().z().conj();
    let m = v_matrix(start, p) * (j - a * j * a0.adjoint()) * v_matrix(start, p0).adjoint() / den;
    Ok(m[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GapSet;

    #[test]
    fn zero_gap_transfer_matrix() {
        let pot = Potential::new(&GapSet::zero_gap(-1.0).unwrap()).unwrap();
        let a = transfer_a_at(&pot, &Character::zero(0), Point::real(-1.0), std::f64::consts::FRAC_PI_2)
            .unwrap()
            .value();
        let (c, s) = (std::f64::consts::FRAC_PI_2.cosh(), std::f64::consts::FRAC_PI_2.sinh());
        let want = CMatrix::new(C::new(c, 0.0), C::new(s, 0.0), C::new(s, 0.0), C::new(c, 0.0));
        assert!(spectral_norm(&(a - want)) < 1e-12, "{a}");
    }

    #[test]
    fn circle_through_three_points() {
        let (c, r) = circle_through(C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(-1.0, 0.0)).unwrap();
        assert!(c.norm() < 1e-15 && (r - 1.0).abs() < 1e-15);
    }
}

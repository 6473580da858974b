//! The flow `x ↦ α − ηx`: spectral measures, transforms and the Fourier map.
//!
//! A [`FlowGrid`] samples the kernels at `λ*` on a uniform grid in `x`,
//! warm-starting each Abel inversion from the previous node. All
//! Stieltjes integrals `∫ g dΦ` along the grid use a fourth-order rule:
//! `g` and `Φ` are interpolated by local cubics and `∫ g Φ' dx` is taken
//! exactly on each cell.

use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::boundary::{integrate_sides, integrate_sides_upto};
use crate::error::{Error, Result};
use crate::geometry::Character;
use crate::kernels::{boundary_tolerance, KernelField};
use crate::potential::Potential;
use crate::products::InversionOptions;
use crate::surface::{sqrt_point, Point, Side};

const I: C = C { re: 0.0, im: 1.0 };
const PI: f64 = std::f64::consts::PI;

/// `α − xη` with the unreduced rotation numbers of `e^{ixθ}`.
pub fn flow_character(pot: &Potential, alpha: &Character, x: f64) -> Character {
    let eta = pot.eta_unreduced();
    Character::new(
        alpha
            .coords()
            .iter()
            .zip(&eta)
            .map(|(a, e)| a - x * e)
            .collect(),
    )
}

/// Cell matrices `M[a][b] = ∫_{cell} L_a L_b'` for the cubic stencils of a
/// uniform grid with unit spacing. `offset` is the position of the cell's
/// left node inside the four-node stencil.
fn cell_matrix(offset: usize) -> [[f64; 4]; 4] {
    let gauss = [
        (-(0.6f64).sqrt(), 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        ((0.6f64).sqrt(), 5.0 / 9.0),
    ];
    let nodes = [0.0, 1.0, 2.0, 3.0];
    let basis = |a: usize, t: f64| -> f64 {
        let mut v = 1.0;
        for (b, &nb) in nodes.iter().enumerate() {
            if b != a {
                v *= (t - nb) / (nodes[a] - nb);
            }
        }
        v
    };
    let dbasis = |a: usize, t: f64| -> f64 {
        let mut s = 0.0;
        for (k, &nk) in nodes.iter().enumerate() {
            if k == a {
                continue;
            }
            let mut v = 1.0 / (nodes[a] - nk);
            for (b, &nb) in nodes.iter().enumerate() {
                if b != a && b != k {
                    v *= (t - nb) / (nodes[a] - nb);
                }
            }
            s += v;
        }
        s
    };
    let lo = offset as f64;
    let mut m = [[0.0; 4]; 4];
    for (a, row) in m.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = gauss
                .iter()
                .map(|&(u, w)| {
                    let t = lo + 0.5 * (u + 1.0);
                    0.5 * w * basis(a, t) * dbasis(b, t)
                })
                .sum();
        }
    }
    m
}

/// Fourth-order Stieltjes rule on a uniform grid.
#[derive(Debug, Clone)]
pub struct StieltjesRule {
    cells: [[[f64; 4]; 4]; 3],
}

impl Default for StieltjesRule {
    fn default() -> Self {
        StieltjesRule {
            cells: [cell_matrix(0), cell_matrix(1), cell_matrix(2)],
        }
    }
}

impl StieltjesRule {
    /// `∫_{x_i}^{x_{i+1}} g dΦ`.
    pub fn cell(&self, g: &[C], phi: &[f64], i: usize) -> C {
        let n = g.len();
        if n < 4 {
            return 0.5 * (g[i] + g[i + 1]) * (phi[i + 1] - phi[i]);
        }
        let (start, m) = if i == 0 {
            (0, &self.cells[0])
        } else if i + 2 >= n {
            (n - 4, &self.cells[2])
        } else {
            (i - 1, &self.cells[1])
        };
        let mut s = C::new(0.0, 0.0);
        for a in 0..4 {
            let mut t = 0.0;
            for b in 0..4 {
                t += m[a][b] * phi[start + b];
            }
            s += g[start + a] * t;
        }
        s
    }

    /// Running integrals `∫_{x_0}^{x_i} g dΦ` for every node.
    pub fn cumulative(&self, g: &[C], phi: &[f64]) -> Vec<C> {
        let mut out = Vec::with_capacity(g.len());
        let mut acc = C::new(0.0, 0.0);
        out.push(acc);
        for i in 0..g.len().saturating_sub(1) {
            acc += self.cell(g, phi, i);
            out.push(acc);
        }
        out
    }

    pub fn cumulative_real(&self, g: &[f64], phi: &[f64]) -> Vec<f64> {
        let gc: Vec<C> = g.iter().map(|&v| C::new(v, 0.0)).collect();
        self.cumulative(&gc, phi).into_iter().map(|v| v.re).collect()
    }
}

/// Running `∫_0^{x_i} g·(2ΘK dξ − dK)`, the weighted form of `e^{2Θξ}d(−e^{−2Θξ}K)`.
fn weighted(rule: &StieltjesRule, theta: f64, h: f64, g: &[C], k: &[f64]) -> Vec<C> {
    let xs: Vec<f64> = (0..g.len()).map(|i| i as f64 * h).collect();
    let gk: Vec<C> = g.iter().zip(k).map(|(a, b)| a * (2.0 * theta * b)).collect();
    let a = rule.cumulative(&gk, &xs);
    let b = rule.cumulative(g, k);
    a.into_iter().zip(b).map(|(x, y)| x - y).collect()
}

fn weighted_real(rule: &StieltjesRule, theta: f64, h: f64, g: &[f64], k: &[f64]) -> Vec<f64> {
    let gc: Vec<C> = g.iter().map(|&v| C::new(v, 0.0)).collect();
    weighted(rule, theta, h, &gc, k).into_iter().map(|v| v.re).collect()
}

/// One node of a [`FlowGrid`].
#[derive(Debug, Clone)]
pub struct FlowSample {
    pub x: f64,
    pub character: Character,
    /// `k^{α−ηx}(λ*, λ*)`.
    pub k0: f64,
    /// `k^{α+𝔧−ηx}(λ*, λ*)`.
    pub k1: f64,
    pub kappa: f64,
    pub kappa_j: f64,
    pub log_e: f64,
    pub upsilon: f64,
    pub upsilon_j: f64,
    pub tau: f64,
    pub tau_j: f64,
    /// `√|λ*|·(k0 + k1)`.
    pub c_frak: f64,
}

/// Kernel fields and spectral functions along `x_i = i·h`.
#[derive(Debug, Clone)]
pub struct FlowGrid {
    pot: Arc<Potential>,
    h: f64,
    theta_im: f64,
    fields: Vec<KernelField>,
    shifted: Vec<KernelField>,
    samples: Vec<FlowSample>,
    rule: StieltjesRule,
}

impl FlowGrid {
    pub fn new(pot: &Arc<Potential>, alpha: &Character, x_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && x_max >= 0.0 && x_max.is_finite()) {
            return Err(Error::invalid(format!("bad flow grid x_max={x_max}, h={h}")));
        }
        let n = (x_max / h).round() as usize + 1;
        let opt = InversionOptions::default();
        let mut fields: Vec<KernelField> = Vec::with_capacity(n);
        for i in 0..n {
            let ch = flow_character(pot, alpha, i as f64 * h);
            let f = KernelField::with_options(pot, &ch, fields.last(), &opt)?;
            fields.push(f);
        }
        Ok(Self::from_fields(pot, h, fields))
    }

    fn from_fields(pot: &Arc<Potential>, h: f64, fields: Vec<KernelField>) -> Self {
        let star = Point::real(pot.lambda_star());
        let theta = pot.theta_star().im;
        let root = pot.lambda_star().abs().sqrt();
        let shifted: Vec<KernelField> = fields.iter().map(KernelField::shift_j).collect();
        let n = fields.len();
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let k0: Vec<f64> = fields.iter().map(|f| f.diagonal(star)).collect();
        let k1: Vec<f64> = shifted.iter().map(|f| f.diagonal(star)).collect();
        let decay: Vec<f64> = xs.iter().map(|x| (-2.0 * theta * x).exp()).collect();
        let kappa: Vec<f64> = (0..n).map(|i| k0[0] - decay[i] * k0[i]).collect();
        let kappa_j: Vec<f64> = (0..n).map(|i| k1[0] - decay[i] * k1[i]).collect();
        let rule = StieltjesRule::default();

        let sum: Vec<f64> = (0..n).map(|i| k0[i] + k1[i]).collect();
        let diff: Vec<f64> = (0..n).map(|i| k1[i] - k0[i]).collect();
        let inv_sum: Vec<f64> = sum.iter().map(|v| 1.0 / v).collect();
        let log_e: Vec<f64> = weighted_real(&rule, theta, h, &inv_sum, &diff)
            .into_iter()
            .map(|v| -0.5 * v)
            .collect();
        let upsilon: Vec<f64> = (0..n).map(|i| sum[i].sqrt() * log_e[i].exp()).collect();
        let upsilon_j: Vec<f64> = (0..n).map(|i| sum[i].sqrt() / log_e[i].exp()).collect();
        let w: Vec<f64> = upsilon.iter().map(|u| 1.0 / (u * u * root)).collect();
        let wj: Vec<f64> = upsilon_j.iter().map(|u| 1.0 / (u * u * root)).collect();
        let tau = weighted_real(&rule, theta, h, &w, &k0);
        let tau_j = weighted_real(&rule, theta, h, &wj, &k1);

        let samples = (0..n)
            .map(|i| FlowSample {
                x: xs[i],
                character: fields[i].alpha().clone(),
                k0: k0[i],
                k1: k1[i],
                kappa: kappa[i],
                kappa_j: kappa_j[i],
                log_e: log_e[i],
                upsilon: upsilon[i],
                upsilon_j: upsilon_j[i],
                tau: tau[i],
                tau_j: tau_j[i],
                c_frak: root * sum[i],
            })
            .collect();
        FlowGrid {
            pot: pot.clone(),
            h,
            theta_im: theta,
            fields,
            shifted,
            samples,
            rule,
        }
    }

    pub fn potential(&self) -> &Arc<Potential> {
        &self.pot
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[FlowSample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &FlowSample {
        &self.samples[i]
    }

    /// Field for `α − ηx_i`.
    pub fn field(&self, i: usize) -> &KernelField {
        &self.fields[i]
    }

    /// Field for `α + 𝔧 − ηx_i`.
    pub fn field_j(&self, i: usize) -> &KernelField {
        &self.shifted[i]
    }

    pub fn rule(&self) -> &StieltjesRule {
        &self.rule
    }

    /// Node index of `x`, if `x` lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = x / self.h;
        let i = t.round();
        if (t - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    fn column<F: Fn(&FlowSample) -> f64>(&self, f: F) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    pub fn kappa(&self) -> Vec<f64> {
        self.column(|s| s.kappa)
    }

    pub fn kappa_j(&self) -> Vec<f64> {
        self.column(|s| s.kappa_j)
    }

    /// `∫_0^{x_end} g dϰ^α` with `g` sampled at the nodes.
    pub fn integrate_kappa(&self, g: &[C], end: usize) -> C {
        let k = self.column(|s| s.k0);
        let ge: Vec<C> = g[..=end]
            .iter()
            .zip(&self.samples)
            .map(|(v, s)| v * (-2.0 * self.theta_im * s.x).exp())
            .collect();
        weighted(&self.rule, self.theta_im, self.h, &ge, &k[..=end])[end]
    }

    /// `∫_0^{x_end} g·e^{2Θξ}dϰ`, on `ϰ^{α+𝔧}` when `shifted`.
    pub fn integrate_exp_kappa(&self, g: &[C], end: usize, shifted: bool) -> C {
        let k = if shifted {
            self.column(|s| s.k1)
        } else {
            self.column(|s| s.k0)
        };
        weighted(&self.rule, self.theta_im, self.h, &g[..=end], &k[..=end])[end]
    }

    fn phase(&self, p: Point, x: f64) -> C {
        let th = self.pot.theta(p) - self.pot.theta_star();
        (I * x * th).exp()
    }

    /// `f(λ, x_i) = e^{ix(θ(λ)−θ*)}·V_{α−ηx}(λ)/V_{α−ηx}(λ*)`.
    pub fn eigen_flow(&self, p: Point, i: usize) -> C {
        self.phase(p, self.samples[i].x) * self.fields[i].eigenfunction(p)
    }

    /// `𝔣_α(λ, x_i)`, or `𝔣_{α+𝔧}` when `shifted`.
    pub fn f_frak(&self, p: Point, i: usize, shifted: bool) -> C {
        let s = &self.samples[i];
        let (field, e) = if shifted {
            (&self.shifted[i], (-s.log_e).exp())
        } else {
            (&self.fields[i], s.log_e.exp())
        };
        let x = s.x;
        e * s.c_frak.sqrt() * field.eigenfunction(p) * (I * x * self.pot.theta(p)).exp()
    }

    /// Both sides of the transform identity at `x_i`:
    /// `2ℓΘ − log(𝔠(ℓ)/𝔠(0))` and `√|λ*|∫(e^{2Θξ}dϰ^{α+𝔧}/𝔠 + e^{2Θξ}dϰ^α/𝔠)`.
    pub fn transform_identity(&self, i: usize) -> (f64, f64) {
        let root = self.pot.lambda_star().abs().sqrt();
        let s = &self.samples;
        let lhs = 2.0 * s[i].x * self.theta_im - (s[i].c_frak / s[0].c_frak).ln();
        let g: Vec<C> = s[..=i].iter().map(|t| C::new(1.0 / t.c_frak, 0.0)).collect();
        let a = self.integrate_exp_kappa(&g, i, true).re;
        let b = self.integrate_exp_kappa(&g, i, false).re;
        (lhs, root * (a + b))
    }

    /// Residual of `d𝔣_α = i√λ·𝔣_{α+𝔧}·dτ^{α+𝔧}` at an interior node,
    /// relative to the size of the left side.
    pub fn f_frak_derivative_residual(&self, p: Point, i: usize) -> Result<f64> {
        if i < 2 || i + 2 >= self.len() {
            return Err(Error::invalid("derivative stencil leaves the grid"));
        }
        let d5 = |v: [C; 5]| (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * self.h);
        let f = [0, 1, 2, 3, 4].map(|k| self.f_frak(p, i + k - 2, false));
        let t = [0, 1, 2, 3, 4].map(|k| C::new(self.samples[i + k - 2].tau_j, 0.0));
        let lhs = d5(f);
        let rhs = I * sqrt_point(p) * self.f_frak(p, i, true) * d5(t);
        Ok((lhs - rhs).norm() / lhs.norm().max(1e-300))
    }

    /// Both sides of
    /// `k^α(λ,λ₀) − e^{ix(θ(λ)−θ̄(λ₀))}k^{α−ηx}(λ,λ₀) = ∫_0^x f̄(λ₀,ξ)f(λ,ξ)dϰ`.
    pub fn kernel_identity(&self, p: Point, p0: Point, i: usize) -> (C, C) {
        let x = self.samples[i].x;
        let th = self.pot.theta(p) - self.pot.theta(p0).conj();
        let lhs = self.fields[0].kernel(p, p0) - (I * x * th).exp() * self.fields[i].kernel(p, p0);
        let g: Vec<C> = (0..=i)
            .map(|k| self.eigen_flow(p0, k).conj() * self.eigen_flow(p, k))
            .collect();
        (lhs, self.integrate_kappa(&g, i))
    }

    /// `k^α(λ,λ₀)`, `∫_0^X f̄(λ₀,ξ)f(λ,ξ)dϰ` over the whole grid, and the
    /// tail bound `e^{−X(M(λ)+M(λ₀))}·sup` for a kernel bound `sup`.
    pub fn kernel_identity_infinite(&self, p: Point, p0: Point, sup: f64) -> (C, C, f64) {
        let end = self.len() - 1;
        let x = self.samples[end].x;
        let g: Vec<C> = (0..=end)
            .map(|k| self.eigen_flow(p0, k).conj() * self.eigen_flow(p, k))
            .collect();
        let m = self.pot.theta(p).im + self.pot.theta(p0).im;
        (
            self.fields[0].kernel(p, p0),
            self.integrate_kappa(&g, end),
            (-x * m).exp() * sup,
        )
    }

    /// `(ℱf)(λ) = ∫ f(x)·f(λ, x) dϰ(x)` for `f` sampled at the nodes.
    pub fn fourier_apply(&self, f: &[C], p: Point) -> C {
        let n = f.len().min(self.len());
        let g: Vec<C> = (0..n).map(|k| f[k] * self.eigen_flow(p, k)).collect();
        self.integrate_kappa(&g, n - 1)
    }

    /// Transform of a step function with jumps at grid nodes.
    ///
    /// `breaks` are increasing node indices; `values[j]` is the value on
    /// `(x_{breaks[j]}, x_{breaks[j+1]}]`.
    pub fn step_transform(&self, breaks: &[usize], values: &[C]) -> Result<StepTransform<'_>> {
        if breaks.len() != values.len() + 1 || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("step function needs increasing breaks, one more than values"));
        }
        if *breaks.last().unwrap_or(&0) >= self.len() {
            return Err(Error::invalid("step function leaves the flow grid"));
        }
        let mut coef = vec![C::new(0.0, 0.0); breaks.len()];
        for (j, v) in values.iter().enumerate() {
            coef[j] += v;
            coef[j + 1] -= v;
        }
        let kappa = self.kappa();
        let norm = values
            .iter()
            .enumerate()
            .map(|(j, v)| v.norm_sqr() * (kappa[breaks[j + 1]] - kappa[breaks[j]]))
            .sum();
        Ok(StepTransform {
            grid: self,
            nodes: breaks.to_vec(),
            coef,
            norm,
        })
    }

    /// `(1/iθ(λ))∫_0^{x_end} 𝔪₊^{α−ηξ}(λ)·e^{2Θξ}dϰ^{α+𝔧}(ξ)/𝔠(α+𝔧−ηξ)`.
    pub fn type_integral(&self, lambda: f64, end: usize) -> C {
        let p = Point::real(lambda);
        let s = sqrt_point(p);
        let g: Vec<C> = (0..=end)
            .map(|k| {
                let f = &self.fields[k];
                let m = I * s * self.shifted[k].eigenfunction(p) / f.eigenfunction(p);
                m / self.samples[k].c_frak
            })
            .collect();
        self.integrate_exp_kappa(&g, end, true) / (I * self.pot.theta(p))
    }

    /// CSV with columns `x,kappa,upsilon,tau_alpha,tau_alpha_j,e_frak`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,kappa,upsilon,tau_alpha,tau_alpha_j,e_frak\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                s.x,
                s.kappa,
                s.upsilon,
                s.tau,
                s.tau_j,
                s.log_e.exp()
            ));
        }
        out
    }
}

/// Closed-form transform of a step function:
/// `ℱχ_{(y,∞)} = e^{iy(θ−θ̄*)}·k^{α−ηy}(·, λ*)`.
#[derive(Debug, Clone)]
pub struct StepTransform<'a> {
    grid: &'a FlowGrid,
    nodes: Vec<usize>,
    coef: Vec<C>,
    norm: f64,
}

impl StepTransform<'_> {
    fn term(&self, j: usize, p: Point) -> C {
        let g = self.grid;
        let pot = &g.pot;
        let i = self.nodes[j];
        let y = g.samples[i].x;
        let star = Point::real(pot.lambda_star());
        let th = pot.theta(p) - pot.theta_star().conj();
        (I * y * th).exp() * g.fields[i].kernel(p, star)
    }

    pub fn eval(&self, p: Point) -> C {
        (0..self.nodes.len()).map(|j| self.coef[j] * self.term(j, p)).sum()
    }

    /// `∫|f|² dϰ`.
    pub fn measure_norm_sq(&self) -> f64 {
        self.norm
    }

    /// `(1/2π)Σ_sides∫_E |ℱf|² dξ/√ξ`: the full integrand up to `cap`, then the
    /// non-oscillating diagonal terms beyond it.
    pub fn boundary_norm_sq(&self, cap: f64) -> f64 {
        let surf = self.grid.pot.surface().clone();
        let tol = boundary_tolerance();
        let m = self.nodes.len();
        let full = |x: f64, side: Side, out: &mut [C]| {
            let v = self.eval(Point::boundary(x, side));
            out[0] = C::new(v.norm_sqr(), 0.0);
        };
        let diag = |x: f64, side: Side, out: &mut [C]| {
            let p = Point::boundary(x, side);
            let s: f64 = (0..m)
                .map(|j| (self.coef[j] * self.term(j, p)).norm_sqr())
                .sum();
            out[0] = C::new(s, 0.0);
        };
        let near = integrate_sides_upto(&surf, 1, full, tol, cap)[0].re;
        let tail = integrate_sides(&surf, 1, diag, tol)[0].re
            - integrate_sides_upto(&surf, 1, diag, tol, cap)[0].re;
        (near + tail) / (2.0 * PI)
    }
}

/// `ϰ^α(x) = k^α(λ*,λ*) − e^{−2xΘ}k^{α−ηx}(λ*,λ*)`.
pub fn kappa(pot: &Arc<Potential>, alpha: &Character, x: f64) -> Result<f64> {
    let star = Point::real(pot.lambda_star());
    let k0 = KernelField::new(pot, alpha)?.diagonal(star);
    let kx = KernelField::new(pot, &flow_character(pot, alpha, x))?.diagonal(star);
    Ok(k0 - (-2.0 * x * pot.theta_star().im).exp() * kx)
}

/// Discrete approximation of `ϰ^α(x)` by the orthonormal system built from
/// the Green function with pole `λ_N`, `𝒢(λ_N, λ*) = 1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKappa {
    pub lambda_n: f64,
    pub value: f64,
    /// `k^α(λ*,λ*) − |Φ(λ*)|^{2(K+1)}k^{α−(K+1)β}(λ*,λ*)` for the same `K`.
    pub closed_form: f64,
}

/// Pole `λ_N < λ*` with `𝒢(λ_N, λ*) = 1/N`.
pub fn discrete_pole(pot: &Arc<Potential>, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    let star = pot.lambda_star();
    let g = pot.green_fn(C::new(star, 0.0))?;
    let target = 1.0 / n as f64;
    let val = |t: f64| g.value(Point::real(star - t));
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    let mut guard = 0;
    while val(hi) > target {
        hi *= 4.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::no_convergence("no bracket for the discrete pole"));
        }
    }
    while val(lo) < target {
        lo *= 0.25;
        guard += 1;
        if guard > 400 {
            return Err(Error::no_convergence("no bracket for the discrete pole"));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if val(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(star - (lo * hi).sqrt())
}

pub fn kappa_discrete(pot: &Arc<Potential>, alpha: &Character, n: usize, x: f64) -> Result<DiscreteKappa> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid("x must be non-negative"));
    }
    let lambda_n = discrete_pole(pot, n)?;
    let green = pot.green_fn(C::new(lambda_n, 0.0))?;
    let beta = green.character();
    let star = Point::real(pot.lambda_star());
    let pn = Point::real(lambda_n);
    let q = (-2.0 * green.value(star)).exp();
    let count = (n as f64 * x).floor() as usize;
    let opt = InversionOptions::default();
    let mut prev: Option<KernelField> = None;
    let mut value = 0.0;
    let mut weight = 1.0;
    for k in 0..=count + 1 {
        let ch = alpha.shifted(&beta, -(k as f64))?;
        let f = KernelField::with_options(pot, &ch, prev.as_ref(), &opt)?;
        if k <= count {
            value += weight * f.kernel(star, pn).norm_sqr() / f.diagonal(pn);
        } else {
            let k0 = KernelField::new(pot, alpha)?.diagonal(star);
            let closed_form = k0 - weight * f.diagonal(star);
            return Ok(DiscreteKappa {
                lambda_n,
                value,
                closed_form,
            });
        }
        weight *= q;
        prev = Some(f);
    }
    unreachable!()
}

/// `max √(k^β(λ,λ)·k^β(λ₀,λ₀))` over a product grid of `per_dim` characters
/// per coordinate, a bound for `sup_β |k^β(λ,λ₀)|`.
pub fn kernel_sup_bound(pot: &Arc<Potential>, p: Point, p0: Point, per_dim: usize) -> Result<f64> {
    let n = pot.n();
    let per_dim = per_dim.max(1);
    let total = per_dim.pow(n as u32);
    let mut best: f64 = 0.0;
    let mut prev: Option<KernelField> = None;
    let opt = InversionOptions::default();
    for idx in 0..total {
        let mut rest = idx;
        let coords: Vec<f64> = (0..n)
            .map(|_| {
                let c = rest % per_dim;
                rest /= per_dim;
                (c as f64 + 0.5) / per_dim as f64
            })
            .collect();
        let f = KernelField::with_options(pot, &Character::new(coords), prev.as_ref(), &opt)?;
        best = best.max((f.diagonal(p) * f.diagonal(p0)).sqrt());
        prev = Some(f);
    }
    Ok(best)
}

/// `lim_{λ→0⁻} v_α(λ)/v_{α−ηx}(λ)`, by extrapolation in `√|λ|`.
///
/// Equals `Υ^α(x)/Υ^α(0)`.
pub fn upsilon_ratio_limit(pot: &Arc<Potential>, alpha: &Character, x: f64) -> Result<f64> {
    let fa = KernelField::new(pot, alpha)?;
    let fx = KernelField::new(pot, &flow_character(pot, alpha, x))?;
    let ts = [1e-1, 10f64.powf(-1.5), 1e-2];
    let vals: Vec<f64> = ts
        .iter()
        .map(|t| {
            let p = Point::real(-t * t);
            (fa.eigenfunction(p) / fx.eigenfunction(p)).re
        })
        .collect();
    // Quadratic through three points, evaluated at t = 0.
    let mut s = 0.0;
    for a in 0..3 {
        let mut l = 1.0;
        for b in 0..3 {
            if a != b {
                l *= (0.0 - ts[b]) / (ts[a] - ts[b]);
            }
        }
        s += l * vals[a];
    }
    Ok(s)
}

/// Fits `value ≈ L + A/M + B·ln|λ|/M` and returns `L`.
pub fn fit_type_limit(martin: &[f64], log_abs: &[f64], values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 || martin.len() != n || log_abs.len() != n {
        return Err(Error::invalid("type fit needs at least three samples"));
    }
    let a = nalgebra::DMatrix::from_fn(n, 3, |r, c| match c {
        0 => 1.0,
        1 => 1.0 / martin[r],
        _ => log_abs[r] / martin[r],
    });
    let b = nalgebra::DVector::from_column_slice(values);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::no_convergence(e.to_string()))?;
    Ok(sol[0])
}

/// Limit of [`FlowGrid::type_integral`] as `λ → −∞`.
pub fn main_lemma_estimate(grid: &FlowGrid, end: usize, lambdas: &[f64]) -> Result<f64> {
    let pot = grid.potential();
    let mut ms = Vec::new();
    let mut logs = Vec::new();
    let mut vals = Vec::new();
    for &l in lambdas {
        if l >= 0.0 {
            return Err(Error::invalid("type samples must be negative"));
        }
        ms.push(pot.theta(Point::real(l)).im);
        logs.push(l.abs().ln());
        vals.push(grid.type_integral(l, end).re);
    }
    fit_type_limit(&ms, &logs, &vals)
}

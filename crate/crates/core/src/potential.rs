//! Green and Martin functions, harmonic measures and their characters.
//!
//! Harmonic quantities are real parts of abelian integrals `∫_0^λ Q/√R`, with
//! the polynomial `Q` fixed by requiring zero real increment across every gap.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::geometry::{wrap01, Character, GapSet};
use crate::surface::{log_part, Abelian, Monomials, Point, PoleFamily, Side, Surface};

const I: C = C::new(0.0, 1.0);

/// Winding numbers around the generators; shifts multivalued integrals by periods.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Homology(pub Vec<i64>);

impl Homology {
    pub fn trivial() -> Self {
        Homology(Vec::new())
    }

    pub fn loop_around(n: usize, j: usize) -> Self {
        let mut w = vec![0; n];
        w[j] = 1;
        Homology(w)
    }
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::no_convergence(format!("singular {what} system")))
}

/// Period data shared by all differentials on one gap set.
#[derive(Debug)]
pub struct Potential {
    surf: Arc<Surface>,
    mono: Abelian<Monomials>,
    /// `Im ∫_{gap m} x^k/√R`, `k ≤ N`.
    gap_im: Vec<Vec<f64>>,
    period: DMatrix<f64>,
    martin_q: Vec<f64>,
    theta_star: C,
    harm: Vec<Vec<f64>>,
}

impl Potential {
    pub fn new(gaps: &GapSet) -> Result<Arc<Self>> {
        Self::on(Surface::new(gaps.clone()))
    }

    pub fn on(surf: Arc<Surface>) -> Result<Arc<Self>> {
        let n = surf.n();
        let mono = Abelian::new(surf.clone(), Monomials { count: n + 1 });
        let gap_im: Vec<Vec<f64>> = (0..n)
            .map(|m| {
                mono.piece_integral(2 * m + 1, Side::Upper)
                    .iter()
                    .map(|v| v.im)
                    .collect()
            })
            .collect();
        let period = DMatrix::from_fn(n, n, |m, k| -gap_im[m][k]);

        let star = mono.at(Point::real(surf.lambda_star()));
        let martin = DMatrix::from_fn(n + 1, n + 1, |m, k| {
            if m < n {
                gap_im[m][k]
            } else {
                star[k].im
            }
        });
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let q = martin
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::no_convergence("singular Martin system"))?;
        let martin_q: Vec<f64> = q.iter().copied().collect();
        let theta_star = martin_q
            .iter()
            .zip(&star)
            .map(|(c, m)| m * *c)
            .sum::<C>();

        let mut harm = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = -1.0;
            harm.push(solve(&period, &e, "harmonic measure")?.iter().copied().collect());
        }
        Ok(Arc::new(Potential {
            surf,
            mono,
            gap_im,
            period,
            martin_q,
            theta_star,
            harm,
        }))
    }

    pub fn surface(&self) -> &Arc<Surface> {
        &self.surf
    }

    pub fn gaps(&self) -> &GapSet {
        self.surf.gaps()
    }

    pub fn n(&self) -> usize {
        self.surf.n()
    }

    pub fn lambda_star(&self) -> f64 {
        self.surf.lambda_star()
    }

    /// `∫_0^P x^k/√R`, `k ≤ N`.
    pub fn monomials(&self, p: Point) -> Vec<C> {
        self.mono.at(p)
    }

    /// Increment of the monomial integrals between the two banks at `a_j`.
    fn mono_jump(&self, j: usize) -> Vec<C> {
        let mut acc = vec![C::new(0.0, 0.0); self.n() + 1];
        for q in (0..=2 * j).step_by(2) {
            let up = self.mono.piece_integral(q, Side::Upper);
            let lo = self.mono.piece_integral(q, Side::Lower);
            for k in 0..acc.len() {
                acc[k] += up[k] - lo[k];
            }
        }
        acc
    }

    pub fn period_matrix(&self) -> &DMatrix<f64> {
        &self.period
    }

    /// Imaginary gap integrals of `x^k/√R`.
    pub fn gap_periods(&self) -> &[Vec<f64>] {
        &self.gap_im
    }

    pub fn martin_coefficients(&self) -> &[f64] {
        &self.martin_q
    }

    /// Complex Martin function `θ` on the slit plane.
    pub fn theta(&self, p: Point) -> C {
        self.theta_in(p, &Homology::trivial())
    }

    pub fn theta_in(&self, p: Point, h: &Homology) -> C {
        let m = self.monomials(p);
        let mut v: C = self.martin_q.iter().zip(&m).map(|(q, x)| x * *q).sum();
        for (j, &w) in h.0.iter().enumerate() {
            if w != 0 {
                v += 2.0 * PI * self.eta_raw(j) * w as f64;
            }
        }
        v
    }

    pub fn theta_star(&self) -> C {
        self.theta_star
    }

    /// `θ'(λ) = q(λ)/√R(λ)`.
    pub fn theta_prime(&self, p: Point) -> C {
        let z = p.canonical().z();
        let q = self
            .martin_q
            .iter()
            .rev()
            .fold(C::new(0.0, 0.0), |acc, c| acc * z + *c);
        q / self.surf.r(p)
    }

    /// Martin function `M = Im θ`.
    pub fn martin(&self, p: Point) -> Result<f64> {
        self.check_off_spectrum(p)?;
        Ok(self.theta(p).im)
    }

    fn eta_raw(&self, j: usize) -> f64 {
        let jump = self.mono_jump(j);
        let d: C = self.martin_q.iter().zip(&jump).map(|(q, x)| x * *q).sum();
        d.re / (2.0 * PI)
    }

    /// Character of `x ↦ e^{ixθ}` per unit `x`.
    pub fn eta(&self) -> Character {
        Character::new((0..self.n()).map(|j| wrap01(self.eta_raw(j))).collect())
    }

    /// Unreduced rotation numbers `(θ(a_j+i0) − θ(a_j−i0))/2π`.
    pub fn eta_unreduced(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.eta_raw(j)).collect()
    }

    /// Harmonic measures `ω(λ₀, E ∩ [0, a_j])`.
    pub fn harmonic_measure(&self, p: Point) -> Result<Vec<f64>> {
        self.check_off_spectrum(p)?;
        Ok(self.harmonic_measure_unchecked(p))
    }

    pub fn harmonic_measure_unchecked(&self, p: Point) -> Vec<f64> {
        let m = self.monomials(p);
        self.harm
            .iter()
            .map(|t| 1.0 - t.iter().zip(&m).map(|(tk, mk)| tk * mk.im).sum::<f64>())
            .collect()
    }

    pub fn check_off_spectrum(&self, p: Point) -> Result<()> {
        if let Point::Upper(x) | Point::Lower(x) = p.canonical() {
            if self.gaps().is_on_spectrum(x) {
                return Err(Error::OnSpectrum(format!("{x}")));
            }
        }
        Ok(())
    }

    /// Green function with pole `c`.
    pub fn green_fn(self: &Arc<Self>, c: C) -> Result<Green> {
        Green::new(self.clone(), c)
    }

    /// `𝒢(λ, λ₀)`.
    pub fn green(self: &Arc<Self>, lambda: Point, lambda0: C) -> Result<f64> {
        self.check_off_spectrum(lambda)?;
        self.check_off_spectrum(Point::Interior(lambda0))?;
        if (lambda.canonical().z() - lambda0).norm() == 0.0 {
            return Err(Error::Pole(format!("{lambda0}")));
        }
        Ok(self.green_fn(lambda0)?.value(lambda))
    }

    /// One critical point of `𝒢(·, λ*)` per gap, with the Green value there.
    pub fn critical_points(self: &Arc<Self>) -> Result<Vec<(f64, f64)>> {
        let star = self.lambda_star();
        let g = self.green_fn(C::new(star, 0.0))?;
        let n = self.n();
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let c0 = sign * self.surf.poly_r(C::new(star, 0.0)).norm().sqrt();
        let f = |x: f64| g.p_poly(x) * (x - star) + c0;
        let mut out = Vec::with_capacity(n);
        for gap in self.gaps().gaps() {
            let (mut lo, mut hi) = (gap.a, gap.b);
            let (flo, fhi) = (f(lo), f(hi));
            if flo * fhi > 0.0 {
                return Err(Error::no_convergence(format!(
                    "no sign change of the Green gradient in ({}, {})",
                    gap.a, gap.b
                )));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (f(mid) > 0.0) == (flo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let c = 0.5 * (lo + hi);
            out.push((c, g.value(Point::Upper(c))));
        }
        Ok(out)
    }

    pub fn widom_sum(self: &Arc<Self>) -> Result<f64> {
        Ok(self.critical_points()?.iter().map(|c| c.1).sum())
    }

    /// Density `|Ψ(ξ)|` of harmonic measure at `λ*` against `dξ/√ξ` on each bank.
    pub fn boundary_density(self: &Arc<Self>, xi: f64) -> Result<f64> {
        if !self.gaps().in_spectrum_interior(xi) {
            return Err(Error::invalid(format!("{xi} is not an interior point of E")));
        }
        let g = self.green_fn(C::new(self.lambda_star(), 0.0))?;
        Ok(xi.sqrt() * g.omega(Point::Upper(xi)).norm() / (2.0 * PI))
    }
}

/// Green function `𝒢(·, c)` and the complex Green function `Φ_c`.
#[derive(Debug, Clone)]
pub struct Green {
    pot: Arc<Potential>,
    pole: C,
    fam: Abelian<PoleFamily>,
    weights: Vec<f64>,
    p: Vec<f64>,
    star_im: f64,
}

impl Green {
    pub fn new(pot: Arc<Potential>, c: C) -> Result<Self> {
        let surf = pot.surface().clone();
        let n = surf.n();
        if let Point::Upper(x) = Point::Interior(c).canonical() {
            if surf.gaps().is_on_spectrum(x) {
                return Err(Error::OnSpectrum(format!("{x}")));
            }
        }
        let (poles, weights) = if c.im == 0.0 {
            (vec![c], vec![1.0])
        } else {
            (vec![c, c.conj()], vec![0.5, 0.5])
        };
        let fam = Abelian::new(surf.clone(), PoleFamily::new(surf.clone(), &poles));
        let nm = n + 1;
        let mut rhs = DVector::zeros(n);
        for m in 0..n {
            let piece = fam.piece_integral(2 * m + 1, Side::Upper);
            let gap = surf.gaps().gap(m);
            let log_re = (C::new(gap.b, 0.0) - c).norm().ln() - (C::new(gap.a, 0.0) - c).norm().ln();
            let reg: f64 = weights
                .iter()
                .enumerate()
                .map(|(i, w)| w * piece[nm + i].re)
                .sum();
            rhs[m] = -(log_re + reg);
        }
        let p: Vec<f64> = solve(pot.period_matrix(), &rhs, "Green period")?
            .iter()
            .copied()
            .collect();
        let mut g = Green {
            pot,
            pole: c,
            fam,
            weights,
            p,
            star_im: 0.0,
        };
        let star = C::new(g.pot.lambda_star(), 0.0);
        g.star_im = if star == c {
            g.regular_at(Point::Interior(star)).im
        } else {
            g.w(Point::Interior(star)).im
        };
        Ok(g)
    }

    pub fn pole(&self) -> C {
        self.pole
    }

    pub fn potential(&self) -> &Arc<Potential> {
        &self.pot
    }

    /// Coefficients of the holomorphic correction `i·p(x)/√R`.
    pub fn correction(&self) -> &[f64] {
        &self.p
    }

    fn p_poly(&self, x: f64) -> f64 {
        self.p.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Everything except the logarithm: regular parts plus holomorphic correction.
    fn regular_at(&self, p: Point) -> C {
        let v = self.fam.at(p);
        self.combine(&v)
    }

    fn combine(&self, v: &[C]) -> C {
        let nm = self.pot.n() + 1;
        let mut s = C::new(0.0, 0.0);
        for (i, w) in self.weights.iter().enumerate() {
            s += v[nm + i] * *w;
        }
        for (k, pk) in self.p.iter().enumerate() {
            s += I * v[k] * *pk;
        }
        s
    }

    /// Abelian integral `W` with `𝒢 = −Re W`.
    pub fn w(&self, p: Point) -> C {
        log_part(self.pole, p) + self.regular_at(p)
    }

    pub fn w_in(&self, p: Point, h: &Homology) -> C {
        let mut v = self.w(p);
        for (j, &k) in h.0.iter().enumerate() {
            if k != 0 {
                v += I * (2.0 * PI * self.character_raw(j) * k as f64);
            }
        }
        v
    }

    pub fn value(&self, p: Point) -> f64 {
        -self.w(p).re
    }

    /// `log Φ_c` normalized by `arg Φ_c(λ*) = 0`.
    pub fn log_phi(&self, p: Point) -> C {
        self.w(p) - I * self.star_im
    }

    pub fn log_phi_in(&self, p: Point, h: &Homology) -> C {
        self.w_in(p, h) - I * self.star_im
    }

    pub fn phi(&self, p: Point) -> C {
        self.log_phi(p).exp()
    }

    /// `log(Φ_c(λ)/(λ − c))` for a real pole; regular at `λ = c`.
    pub fn log_phi_over_linear(&self, p: Point) -> C {
        let c = self.pole.re;
        let side = p.side();
        let arg0 = if c > 0.0 { side.sign() * PI } else { 0.0 };
        C::new(-c.abs().ln(), -arg0) + self.regular_at(p) - I * self.star_im
    }

    /// `dW/dλ`.
    pub fn omega(&self, p: Point) -> C {
        let surf = self.pot.surface();
        let z = p.canonical().z();
        let r = surf.r(p);
        let fam = self.fam.integrand();
        let mut s = 1.0 / (z - self.pole);
        for (i, w) in self.weights.iter().enumerate() {
            s += fam.regular(i, z, r) * *w;
        }
        let pz = self
            .p
            .iter()
            .rev()
            .fold(C::new(0.0, 0.0), |acc, c| acc * z + *c);
        s + I * pz / r
    }

    fn character_raw(&self, j: usize) -> f64 {
        let a = self.pot.gaps().gap(j).a;
        let up = self.w(Point::Upper(a));
        let lo = self.w(Point::Lower(a));
        (up - lo).im / (2.0 * PI)
    }

    /// Character of `Φ_c`.
    pub fn character(&self) -> Character {
        Character::new(
            (0..self.pot.n())
                .map(|j| wrap01(self.character_raw(j)))
                .collect(),
        )
    }

    /// Residuals of the gap-period conditions `Re ∫_gap dW = 0`.
    pub fn period_residuals(&self) -> Vec<f64> {
        let surf = self.pot.surface();
        (0..self.pot.n())
            .map(|m| {
                let gap = surf.gaps().gap(m);
                let a = self.w(Point::Upper(gap.a)).re;
                let b = self.w(Point::Upper(gap.b)).re;
                b - a
            })
            .collect()
    }
}

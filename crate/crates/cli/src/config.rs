use std::path::{Path, PathBuf};
use std::sync::Arc;

use denjoy::acceptance::AcceptanceOptions;
use denjoy::geometry::{DivisorPoint, Gap};
use denjoy::potential::Potential;
use denjoy::products::abel_map;
use denjoy::products::InversionOptions;
use denjoy::quad::Tolerance;
use denjoy::{Character, Complex64 as C, Divisor, Error, GapSet, Surface};
use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Green,
    Kernel,
    MFunction,
    Flow,
    Transfer,
    FourierCheck,
    Acceptance,
}

/// `a_n = ρⁿa₀`, `b_n = ρⁿb₀` for `n < count`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometric {
    pub a0: f64,
    pub b0: f64,
    pub rho: f64,
    pub count: usize,
}

/// `count` evenly spaced values from `start` to `end`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Axis {
    fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.end - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub re: Axis,
    #[serde(default = "LambdaGrid::real_axis")]
    pub im: Axis,
}

impl LambdaGrid {
    fn real_axis() -> Axis {
        Axis { start: 0.0, end: 0.0, count: 1 }
    }
}

/// Numerical tolerances; every field may also come from the environment.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub quad_rel: Option<f64>,
    pub quad_abs: Option<f64>,
    pub inversion: Option<f64>,
    pub inversion_max_iter: Option<usize>,
}

impl Tolerances {
    /// Fields set in `over` win.
    pub fn merged(self, over: Tolerances) -> Tolerances {
        Tolerances {
            quad_rel: over.quad_rel.or(self.quad_rel),
            quad_abs: over.quad_abs.or(self.quad_abs),
            inversion: over.inversion.or(self.inversion),
            inversion_max_iter: over.inversion_max_iter.or(self.inversion_max_iter),
        }
    }

    fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("quad_rel", self.quad_rel),
            ("quad_abs", self.quad_abs),
            ("inversion", self.inversion),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!("tolerance {name} must be positive, got {v}")));
                }
            }
        }
        if self.inversion_max_iter == Some(0) {
            return Err(Error::invalid("inversion_max_iter must be positive"));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> Tolerance {
        let d = Tolerance::default();
        Tolerance::new(self.quad_rel.unwrap_or(d.rel), self.quad_abs.unwrap_or(d.abs))
    }

    pub fn inversion_options(&self) -> InversionOptions {
        let mut opt = InversionOptions::default();
        if let Some(t) = self.inversion {
            opt.tol = t;
        }
        if let Some(m) = self.inversion_max_iter {
            opt.max_newton = m;
        }
        opt
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub lambda_star: Option<f64>,
    #[serde(default)]
    pub gaps: Vec<Gap>,
    pub geometric: Option<Geometric>,
    pub divisor: Option<Vec<DivisorPoint>>,
    pub alpha: Option<Vec<f64>>,
    pub lambda_grid: Option<LambdaGrid>,
    pub lambda_points: Option<Vec<[f64; 2]>>,
    /// Second argument of kernels and pole of the Green function; `λ*` by default.
    pub lambda0: Option<[f64; 2]>,
    pub x_max: Option<f64>,
    pub x_step: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub boundary_cap: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())).into())
    }

    pub fn is_experimental(&self) -> bool {
        self.geometric.is_some()
    }

    pub fn gapset(&self) -> Result<GapSet, Error> {
        let star = self.lambda_star.ok_or_else(|| Error::invalid("lambda_star is required"))?;
        match &self.geometric {
            Some(g) => {
                if !self.gaps.is_empty() {
                    return Err(Error::invalid("give either gaps or geometric, not both"));
                }
                GapSet::geometric(g.a0, g.b0, g.rho, g.count, star)
            }
            None => {
                let raw: Vec<(f64, f64)> = self.gaps.iter().map(|g| (g.a, g.b)).collect();
                GapSet::new(&raw, star)
            }
        }
    }

    /// Checks everything that does not need numerics.
    pub fn validate(&self, mode: Mode) -> Result<(), Error> {
        self.tolerances.validate()?;
        if mode == Mode::Acceptance {
            return Ok(());
        }
        let g = self.gapset()?;
        if self.alpha.is_some() && self.divisor.is_some() {
            return Err(Error::invalid("give either alpha or divisor, not both"));
        }
        if let Some(a) = &self.alpha {
            if a.len() != g.n() {
                return Err(Error::Dimension { expected: g.n(), got: a.len() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("alpha must be finite"));
            }
        }
        if let Some(d) = &self.divisor {
            Divisor::new(&g, d.clone())?;
        }
        let needs_lambda = matches!(mode, Mode::Green | Mode::Kernel | Mode::MFunction | Mode::Transfer | Mode::FourierCheck);
        if needs_lambda && self.lambda_grid.is_none() && self.lambda_points.is_none() {
            return Err(Error::invalid("this mode needs lambda_grid or lambda_points"));
        }
        if self.lambda_grid.is_some() && self.lambda_points.is_some() {
            return Err(Error::invalid("give either lambda_grid or lambda_points, not both"));
        }
        if let Some(grid) = &self.lambda_grid {
            for axis in [grid.re, grid.im] {
                if axis.count == 0 || !(axis.start.is_finite() && axis.end.is_finite()) {
                    return Err(Error::invalid("grid axes need a positive count and finite ends"));
                }
            }
        }
        if matches!(mode, Mode::Flow | Mode::Transfer | Mode::FourierCheck) {
            let x = self.x_max.ok_or_else(|| Error::invalid("this mode needs x_max"))?;
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::invalid(format!("x_max must be positive, got {x}")));
            }
        }
        if let Some(h) = self.x_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid(format!("x_step must be positive, got {h}")));
            }
        }
        if let Some(cap) = self.boundary_cap {
            if cap.is_nan() || cap <= 0.0 {
                return Err(Error::invalid("boundary_cap must be positive"));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Arc<Potential>, Error> {
        let surf = Surface::with_tolerance(self.gapset()?, self.tolerances.quadrature());
        Potential::on(surf)
    }

    pub fn character(&self, pot: &Arc<Potential>) -> Result<Character, Error> {
        if let Some(a) = &self.alpha {
            return Ok(Character::new(a.clone()));
        }
        if let Some(d) = &self.divisor {
            return abel_map(pot, &Divisor::new(pot.gaps(), d.clone())?);
        }
        Ok(Character::zero(pot.n()))
    }

    pub fn lambdas(&self) -> Vec<C> {
        if let Some(p) = &self.lambda_points {
            return p.iter().map(|[re, im]| C::new(*re, *im)).collect();
        }
        let Some(grid) = &self.lambda_grid else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for im in grid.im.values() {
            for re in grid.re.values() {
                out.push(C::new(re, im));
            }
        }
        out
    }

    pub fn lambda0(&self) -> C {
        self.lambda0
            .map(|[re, im]| C::new(re, im))
            .unwrap_or(C::new(self.lambda_star.unwrap_or(-1.0), 0.0))
    }

    pub fn x_step(&self) -> f64 {
        self.x_step.unwrap_or(0.02)
    }

    pub fn acceptance_options(&self) -> AcceptanceOptions {
        let d = AcceptanceOptions::default();
        AcceptanceOptions {
            seed: self.seed.unwrap_or(d.seed),
            flow_step: self.x_step.unwrap_or(d.flow_step),
            boundary_cap: self.boundary_cap.unwrap_or(d.boundary_cap),
        }
    }
}

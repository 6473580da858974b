//! Finite-gap sets, divisors and the character torus.
//!
//! The spectrum is `E = [0, a_1] ∪ [b_1, a_2] ∪ … ∪ [b_N, ∞)` and the
//! normalization point `λ*` sits on the negative half axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub a: f64,
    pub b: f64,
}

impl Gap {
    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

/// A validated finite-gap set together with its normalization point.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSet {
    gaps: Vec<Gap>,
    lambda_star: f64,
}

impl GapSet {
    /// Validates raw gap endpoints; gaps are sorted by their left end.
    pub fn new(raw: &[(f64, f64)], lambda_star: f64) -> Result<Self> {
        if !lambda_star.is_finite() || lambda_star >= 0.0 {
            return Err(Error::invalid(format!(
                "lambda_star must be negative, got {lambda_star}"
            )));
        }
        let mut gaps: Vec<Gap> = raw.iter().map(|&(a, b)| Gap { a, b }).collect();
        for g in &gaps {
            if !(g.a.is_finite() && g.b.is_finite()) {
                return Err(Error::invalid("gap endpoints must be finite"));
            }
            if g.a >= g.b {
                return Err(Error::invalid(format!(
                    "gap ({}, {}) is empty or reversed",
                    g.a, g.b
                )));
            }
            if g.a <= 0.0 {
                return Err(Error::invalid(format!(
                    "gap ({}, {}) must lie in the positive half axis",
                    g.a, g.b
                )));
            }
        }
        gaps.sort_by(|x, y| x.a.total_cmp(&y.a));
        for w in gaps.windows(2) {
            if w[1].a <= w[0].b {
                return Err(Error::invalid(format!(
                    "gaps ({}, {}) and ({}, {}) overlap or touch",
                    w[0].a, w[0].b, w[1].a, w[1].b
                )));
            }
        }
        Ok(GapSet { gaps, lambda_star })
    }

    pub fn zero_gap(lambda_star: f64) -> Result<Self> {
        Self::new(&[], lambda_star)
    }

    /// Truncated geometric family `a_n = ρⁿ a₀`, `b_n = ρⁿ b₀`.
    pub fn geometric(a0: f64, b0: f64, rho: f64, n: usize, lambda_star: f64) -> Result<Self> {
        if n > 6 {
            return Err(Error::invalid("geometric families are limited to 6 gaps"));
        }
        if rho <= 1.0 {
            return Err(Error::invalid("geometric ratio must exceed 1"));
        }
        let raw: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let s = rho.powi(k as i32);
                (a0 * s, b0 * s)
            })
            .collect();
        Self::new(&raw, lambda_star)
    }

    pub fn n(&self) -> usize {
        self.gaps.len()
    }

    pub fn gaps(&self) -> &[Gap] {
        &self.gaps
    }

    pub fn gap(&self, j: usize) -> Gap {
        self.gaps[j]
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    /// Branch points `0, a_1, b_1, …, a_N, b_N`.
    pub fn branch_points(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(2 * self.n() + 1);
        e.push(0.0);
        for g in &self.gaps {
            e.push(g.a);
            e.push(g.b);
        }
        e
    }

    /// Index of the gap containing `x`, if any.
    pub fn gap_of(&self, x: f64) -> Option<usize> {
        self.gaps.iter().position(|g| g.contains(x))
    }

    /// True when `x` belongs to the interior of a band.
    pub fn in_spectrum_interior(&self, x: f64) -> bool {
        x > 0.0 && self.gap_of(x).is_none() && !self.gaps.iter().any(|g| g.a == x || g.b == x)
    }

    pub fn is_on_spectrum(&self, x: f64) -> bool {
        x >= 0.0 && self.gap_of(x).is_none()
    }

    /// Closed bands; the last one is unbounded.
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let e = self.branch_points();
        let mut out = Vec::with_capacity(self.n() + 1);
        for j in 0..self.n() {
            out.push((e[2 * j], e[2 * j + 1]));
        }
        out.push((e[2 * self.n()], f64::INFINITY));
        out
    }

    pub fn to_config(&self) -> GeometryConfig {
        GeometryConfig {
            lambda_star: self.lambda_star,
            gaps: self.gaps.clone(),
            divisor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisorPoint {
    pub lambda: f64,
    pub eps: i8,
}

/// One point per gap, each with a sheet sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Divisor {
    points: Vec<DivisorPoint>,
}

impl Divisor {
    pub fn new(g: &GapSet, points: Vec<DivisorPoint>) -> Result<Self> {
        if points.len() != g.n() {
            return Err(Error::Dimension {
                expected: g.n(),
                got: points.len(),
            });
        }
        let mut out = Vec::with_capacity(points.len());
        for (p, gap) in points.into_iter().zip(g.gaps()) {
            if !(p.lambda >= gap.a && p.lambda <= gap.b) {
                return Err(Error::invalid(format!(
                    "divisor point {} outside [{}, {}]",
                    p.lambda, gap.a, gap.b
                )));
            }
            if p.eps != 1 && p.eps != -1 {
                return Err(Error::invalid(format!("sign must be ±1, got {}", p.eps)));
            }
            let eps = if p.lambda == gap.a || p.lambda == gap.b {
                1
            } else {
                p.eps
            };
            out.push(DivisorPoint {
                lambda: p.lambda,
                eps,
            });
        }
        Ok(Divisor { points: out })
    }

    pub fn empty() -> Self {
        Divisor { points: Vec::new() }
    }

    pub fn points(&self) -> &[DivisorPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Flips every sign; endpoint points stay fixed.
    pub fn dual(&self, g: &GapSet) -> Divisor {
        let points = self
            .points
            .iter()
            .zip(g.gaps())
            .map(|(p, gap)| {
                let at_end = p.lambda == gap.a || p.lambda == gap.b;
                DivisorPoint {
                    lambda: p.lambda,
                    eps: if at_end { 1 } else { -p.eps },
                }
            })
            .collect();
        Divisor { points }
    }

    /// Divisor with every point at the left gap end.
    pub fn left_endpoints(g: &GapSet) -> Divisor {
        Divisor {
            points: g
                .gaps()
                .iter()
                .map(|gap| DivisorPoint {
                    lambda: gap.a,
                    eps: 1,
                })
                .collect(),
        }
    }
}

/// A point of the character torus, coordinates in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Character(Vec<f64>);

pub fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `x` mod 1 in `[-1/2, 1/2)`.
pub fn wrap_centered(x: f64) -> f64 {
    let r = wrap01(x + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}

impl Character {
    pub fn new(coords: Vec<f64>) -> Self {
        Character(coords.into_iter().map(wrap01).collect())
    }

    pub fn zero(n: usize) -> Self {
        Character(vec![0.0; n])
    }

    /// The character of `√λ`: one half on every generator.
    pub fn half(n: usize) -> Self {
        Character(vec![0.5; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    fn check(&self, other: &Character) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: other.n(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Character) -> Result<Character> {
        self.check(other)?;
        Ok(Character::new(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Character) -> Result<Character> {
        self.check(other)?;
        Ok(Character::new(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&self, t: f64) -> Character {
        Character::new(self.0.iter().map(|a| a * t).collect())
    }

    pub fn neg(&self) -> Character {
        self.scale(-1.0)
    }

    /// `self + t·other`, the building block of flows `α − ηx`.
    pub fn shifted(&self, other: &Character, t: f64) -> Result<Character> {
        self.check(other)?;
        Ok(Character::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * b)
                .collect(),
        ))
    }

    pub fn plus_half(&self) -> Character {
        Character::new(self.0.iter().map(|a| a + 0.5).collect())
    }

    /// Max-coordinate circular distance.
    pub fn dist(&self, other: &Character) -> Result<f64> {
        self.check(other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = (a - b).abs();
                d.min(1.0 - d)
            })
            .fold(0.0, f64::max))
    }
}

/// Smooth chart of the divisor torus: `λ_j = mid_j + half_j·cos φ_j`,
/// sign `+1` iff `sin φ_j ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisorAngles(pub Vec<f64>);

fn wrap_angle(phi: f64) -> f64 {
    let t = phi.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

pub fn divisor_to_angles(d: &Divisor, g: &GapSet) -> Result<DivisorAngles> {
    if d.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: d.len(),
        });
    }
    let phi = d
        .points()
        .iter()
        .zip(g.gaps())
        .map(|(p, gap)| {
            if p.lambda == gap.a {
                return PI;
            }
            if p.lambda == gap.b {
                return 0.0;
            }
            let c = ((p.lambda - gap.mid()) / gap.half_width()).clamp(-1.0, 1.0);
            let t = c.acos();
            if p.eps > 0 {
                t
            } else {
                2.0 * PI - t
            }
        })
        .collect();
    Ok(DivisorAngles(phi))
}

pub fn angles_to_divisor(phi: &DivisorAngles, g: &GapSet) -> Result<Divisor> {
    if phi.0.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: phi.0.len(),
        });
    }
    let points = phi
        .0
        .iter()
        .zip(g.gaps())
        .map(|(&p, gap)| {
            let t = wrap_angle(p);
            let lambda = (gap.mid() + gap.half_width() * t.cos()).clamp(gap.a, gap.b);
            DivisorPoint {
                lambda,
                eps: if t.sin() >= 0.0 { 1 } else { -1 },
            }
        })
        .collect();
    Divisor::new(g, points)
}

/// Largest circular distance between two angle vectors.
pub fn angle_distance(x: &DivisorAngles, y: &DivisorAngles) -> f64 {
    x.0.iter()
        .zip(&y.0)
        .map(|(a, b)| {
            let d = (wrap_angle(*a) - wrap_angle(*b)).abs();
            d.min(2.0 * PI - d)
        })
        .fold(0.0, f64::max)
}

/// JSON form of the inputs: `{"lambda_star", "gaps": [{"a","b"}], "divisor": [{"lambda","eps"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub lambda_star: f64,
    #[serde(default)]
    pub gaps: Vec<Gap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor: Option<Vec<DivisorPoint>>,
}

impl GeometryConfig {
    pub fn gapset(&self) -> Result<GapSet> {
        let raw: Vec<(f64, f64)> = self.gaps.iter().map(|g| (g.a, g.b)).collect();
        GapSet::new(&raw, self.lambda_star)
    }

    pub fn divisor(&self, g: &GapSet) -> Result<Option<Divisor>> {
        match &self.divisor {
            None => Ok(None),
            Some(p) => Divisor::new(g, p.clone()).map(Some),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e2() -> GapSet {
        GapSet::new(&[(1.0, 2.0), (3.0, 5.0)], -1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(GapSet::new(&[], -1.0).unwrap().n(), 0);
        assert_eq!(GapSet::new(&[(1.0, 2.0)], -1.0).unwrap().n(), 1);
        assert!(GapSet::new(&[(1.0, 2.0), (1.5, 3.0)], -1.0).is_err());
        assert!(GapSet::new(&[(1.0, 2.0)], 0.0).is_err());
        assert!(GapSet::new(&[(0.0, 2.0)], -1.0).is_err());
        let g = GapSet::new(&[(3.0, 5.0), (1.0, 2.0)], -1.0).unwrap();
        assert_eq!(g.gap(0).a, 1.0);
    }

    #[test]
    fn character_arithmetic() {
        let a = Character::new(vec![0.7]);
        let b = Character::new(vec![0.6]);
        assert!((a.add(&b).unwrap().coords()[0] - 0.3).abs() < 1e-15);
        let s = a.sub(&a).unwrap();
        assert_eq!(s, Character::zero(1));
        assert_eq!(Character::half(3).scale(2.0), Character::zero(3));
        assert!(a.add(&Character::zero(2)).is_err());
    }

    #[test]
    fn angles_chart() {
        let g = GapSet::new(&[(1.0, 2.0)], -1.0).unwrap();
        let d = Divisor::new(&g, vec![DivisorPoint { lambda: 1.5, eps: 1 }]).unwrap();
        let phi = divisor_to_angles(&d, &g).unwrap();
        assert!((phi.0[0] - PI / 2.0).abs() < 1e-15);
        for eps in [1, -1] {
            let d = Divisor::new(&g, vec![DivisorPoint { lambda: 1.0, eps }]).unwrap();
            assert_eq!(divisor_to_angles(&d, &g).unwrap().0[0], PI);
        }
    }

    #[test]
    fn divisor_round_trip_e2() {
        let g = e2();
        let d = Divisor::new(
            &g,
            vec![
                DivisorPoint {
                    lambda: 1.3,
                    eps: -1,
                },
                DivisorPoint {
                    lambda: 4.1,
                    eps: 1,
                },
            ],
        )
        .unwrap();
        let back = angles_to_divisor(&divisor_to_angles(&d, &g).unwrap(), &g).unwrap();
        for (p, q) in d.points().iter().zip(back.points()) {
            assert!((p.lambda - q.lambda).abs() < 1e-12);
            assert_eq!(p.eps, q.eps);
        }
    }

    #[test]
    fn json_field_names() {
        let s = r#"{"lambda_star": -1.0, "gaps": [{"a":1.0,"b":2.0}], "divisor": [{"lambda":1.5,"eps":1}]}"#;
        let c = GeometryConfig::from_json(s).unwrap();
        let g = c.gapset().unwrap();
        let d = c.divisor(&g).unwrap().unwrap();
        assert_eq!(d.points()[0].lambda, 1.5);
        let again = GeometryConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn dual_is_involution() {
        let g = e2();
        let d = Divisor::new(
            &g,
            vec![
                DivisorPoint {
                    lambda: 1.0,
                    eps: 1,
                },
                DivisorPoint {
                    lambda: 3.5,
                    eps: -1,
                },
            ],
        )
        .unwrap();
        assert_eq!(d.dual(&g).dual(&g), d);
        assert_eq!(d.dual(&g).points()[0].eps, 1);
    }
}

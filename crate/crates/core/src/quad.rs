//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued complex integrands.

#![allow(clippy::excessive_precision)]

use num_complex::Complex64 as C;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights paired with `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-13,
            abs: 1e-15,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Tolerance {
            rel,
            abs,
            ..Default::default()
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    val: Vec<C>,
    err: Vec<f64>,
}

/// One 15-point Kronrod panel with its embedded Gauss error estimate.
fn panel<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [C]) -> (Vec<C>, Vec<f64>)
where
    F: FnMut(f64, &mut [C]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![C::new(0.0, 0.0); dim];
    let mut g = vec![C::new(0.0, 0.0); dim];
    for (i, &x) in XGK.iter().enumerate() {
        let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in nodes {
            f(c + s * h * x, buf);
            for d in 0..dim {
                k[d] += buf[d] * WGK[i];
                if i % 2 == 1 {
                    g[d] += buf[d] * WG[i / 2];
                }
            }
        }
    }
    let mut err = vec![0.0; dim];
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err[d] = (k[d] - g[d]).norm();
    }
    (k, err)
}

/// Integrates `f` over `[a, b]`; `f(x, out)` fills `dim` components.
///
/// The interval with the worst normalized error is bisected until every
/// component meets `rel·|I| + abs` or the interval budget runs out.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, tol: Tolerance) -> Vec<C>
where
    F: FnMut(f64, &mut [C]),
{
    integrate_checked(&mut f, a, b, dim, tol).0
}

/// As [`integrate`], also returning the estimated absolute error per component.
pub fn integrate_checked<F>(
    f: &mut F,
    a: f64,
    b: f64,
    dim: usize,
    tol: Tolerance,
) -> (Vec<C>, Vec<f64>)
where
    F: FnMut(f64, &mut [C]),
{
    if dim == 0 || a == b {
        return (vec![C::new(0.0, 0.0); dim], vec![0.0; dim]);
    }
    let mut buf = vec![C::new(0.0, 0.0); dim];
    let (val, err) = panel(f, a, b, dim, &mut buf);
    let mut segs = vec![Segment { a, b, val, err }];
    loop {
        let (total, total_err) = totals(&segs, dim);
        let bound: Vec<f64> = total
            .iter()
            .map(|v| tol.rel * v.norm() + tol.abs)
            .collect();
        let done = (0..dim).all(|d| total_err[d] <= bound[d]);
        if done || segs.len() >= tol.max_intervals {
            return (total, total_err);
        }
        let score = |s: &Segment| -> f64 {
            (0..dim)
                .map(|d| s.err[d] / bound[d])
                .fold(0.0, f64::max)
        };
        let worst = (0..segs.len())
            .max_by(|&i, &j| score(&segs[i]).total_cmp(&score(&segs[j])))
            .unwrap_or(0);
        let m = 0.5 * (segs[worst].a + segs[worst].b);
        if m <= segs[worst].a || m >= segs[worst].b {
            return (total, total_err);
        }
        let s = segs.swap_remove(worst);
        let (v1, e1) = panel(f, s.a, m, dim, &mut buf);
        let (v2, e2) = panel(f, m, s.b, dim, &mut buf);
        segs.push(Segment {
            a: s.a,
            b: m,
            val: v1,
            err: e1,
        });
        segs.push(Segment {
            a: m,
            b: s.b,
            val: v2,
            err: e2,
        });
    }
}

fn totals(segs: &[Segment], dim: usize) -> (Vec<C>, Vec<f64>) {
    let mut total = vec![C::new(0.0, 0.0); dim];
    let mut total_err = vec![0.0; dim];
    for s in segs {
        for d in 0..dim {
            total[d] += s.val[d];
            total_err[d] += s.err[d];
        }
    }
    (total, total_err)
}

/// Scalar real convenience wrapper.
pub fn integrate_real<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> f64
where
    F: FnMut(f64) -> f64,
{
    integrate(
        |x, out: &mut [C]| out[0] = C::new(f(x), 0.0),
        a,
        b,
        1,
        tol,
    )[0]
    .re
}

/// Scalar complex convenience wrapper.
pub fn integrate_complex<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> C
where
    F: FnMut(f64) -> C,
{
    integrate(|x, out: &mut [C]| out[0] = f(x), a, b, 1, tol)[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_for_degree_23() {
        for deg in 0..=23 {
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let mut buf = vec![C::new(0.0, 0.0)];
            let (k, _) = panel(
                &mut |x: f64, out: &mut [C]| out[0] = C::new(x.powi(deg), 0.0),
                -1.0,
                1.0,
                1,
                &mut buf,
            );
            assert!((k[0].re - exact).abs() < 1e-15, "degree {deg}");
        }
    }

    #[test]
    fn gauss_exact_for_degree_13() {
        for deg in 0..=13 {
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let mut s = WG[3];
            if deg > 0 {
                s = 0.0;
            }
            for (j, w) in WG.iter().take(3).enumerate() {
                let x = XGK[2 * j + 1];
                s += w * (x.powi(deg) + (-x).powi(deg));
            }
            assert!((s - exact).abs() < 1e-15, "degree {deg}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = integrate_real(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-10, 1e-12));
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn vector_components() {
        let v = integrate(
            |x, out: &mut [C]| {
                out[0] = C::new(x.cos(), x.sin());
                out[1] = C::new(x * x, 0.0);
            },
            0.0,
            std::f64::consts::PI,
            2,
            Tolerance::default(),
        );
        assert!((v[0] - C::new(0.0, 2.0)).norm() < 1e-13);
        assert!((v[1].re - std::f64::consts::PI.powi(3) / 3.0).abs() < 1e-12);
    }
}

//! Quadrature rules: Gauss–Legendre panels with doubling, adaptive
//! Gauss–Kronrod bisection, tanh–sinh for endpoint singularities, and the
//! arithmetic–geometric mean used for complete elliptic integrals.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// A quadrature value together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let hi = if p + 1 == panels { b } else { lo + h };
            for (x, w) in self.mapped(lo, hi) {
                sum += w * f(x);
            }
        }
        sum
    }

    /// Composite rule over consecutive breakpoints.
    pub fn over_breakpoints<F: FnMut(f64) -> f64>(&self, f: &mut F, points: &[f64]) -> f64 {
        points
            .windows(2)
            .map(|w| {
                self.mapped(w[0], w[1])
                    .map(|(x, wt)| wt * f(x))
                    .sum::<f64>()
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre with panel doubling until two successive
/// answers differ by less than `tol / 4` (absolute).
pub fn integrate_doubling<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rule: &GaussLegendre,
    start_panels: usize,
    max_panels: usize,
    tol: f64,
) -> Result<Estimate> {
    let mut panels = start_panels.max(1);
    let mut prev = rule.composite(&mut f, a, b, panels);
    let mut evaluations = panels * rule.len();
    loop {
        panels *= 2;
        let next = rule.composite(&mut f, a, b, panels);
        evaluations += panels * rule.len();
        let diff = (next - prev).abs();
        if diff < tol / 4.0 {
            return Ok(Estimate {
                value: next,
                error: diff,
                evaluations,
            });
        }
        if panels >= max_panels {
            return Err(Error::Accuracy {
                what: "panel doubling",
                estimate: diff,
                tol,
            });
        }
        prev = next;
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment {
        a,
        b,
        value,
        error: err,
    }
}

/// Adaptive 15-point Gauss–Kronrod bisection over the intervals delimited
/// by `points` (which must be increasing). Integrable endpoint
/// singularities and interior kinks placed at breakpoints are handled by
/// repeated bisection.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Estimate> {
    let mut segs: Vec<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&mut f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * segs.len();
    if segs.is_empty() {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        let (worst, _) = segs.iter().enumerate().fold((0, -1.0), |(bi, be), (i, s)| {
            if s.error > be {
                (i, s.error)
            } else {
                (bi, be)
            }
        });
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if segs.len() + 2 > max_segments || mid <= s.a || mid >= s.b {
            return Err(Error::Accuracy {
                what: "adaptive Gauss-Kronrod",
                estimate: error,
                tol: target,
            });
        }
        segs.push(gk15(&mut f, s.a, mid));
        segs.push(gk15(&mut f, mid, s.b));
        evaluations += 30;
    }
}

/// Tanh–sinh (double exponential) quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` so that it can evaluate
/// endpoint singularities without cancellation. Levels are halved until two
/// successive estimates agree to `tol` (absolute).
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_level: usize,
) -> Result<Estimate> {
    let half = 0.5 * (b - a);
    let t_max = 4.5;
    let eval = |t: f64, f: &mut F| -> f64 {
        let s = 0.5 * PI * t.sinh();
        let c = s.cosh();
        let w = 0.5 * PI * t.cosh() / (c * c);
        // 1 - tanh(s) computed without cancellation
        let e = (-2.0 * s.abs()).exp();
        let one_minus = 2.0 * e / (1.0 + e);
        let (da, db) = if s >= 0.0 {
            (half * (2.0 - one_minus), half * one_minus)
        } else {
            (half * one_minus, half * (2.0 - one_minus))
        };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if s >= 0.0 { b - db } else { a + da };
        w * f(x, da, db)
    };
    let mut h = 1.0;
    let mut sum = eval(0.0, &mut f);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t, &mut f) + eval(-t, &mut f);
        k += 1;
    }
    let mut evaluations = 2 * k - 1;
    let mut prev = sum * h * half;
    for _ in 0..max_level {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t, &mut f) + eval(-t, &mut f);
            evaluations += 2;
            k += 2;
        }
        let next = sum * h * half;
        let diff = (next - prev).abs();
        if diff <= tol {
            return Ok(Estimate {
                value: next,
                error: diff,
                evaluations,
            });
        }
        prev = next;
    }
    Err(Error::Accuracy {
        what: "tanh-sinh",
        estimate: (prev - sum * h * half).abs().max(tol * 2.0),
        tol,
    })
}

/// Arithmetic–geometric mean of two non-negative numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    a
}

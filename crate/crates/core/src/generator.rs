//! The operator A applied to test functions, once through the Fourier
//! definition Af(x) = -∫ q(x,ξ) e^{ix·ξ} f̂(ξ) dξ and once through the
//! characteristics, plus Lyapunov constants for u = 1/(1+|x|²), v = 1+|x|².

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::checker::{decide, fit_trend, Limit, ProbeSchedule};
use crate::error::{config, Error, Result};
use crate::measure::IntegrateOpts;
use crate::quad::{self, QuadSpec};
use crate::report::Verdict;
use crate::special::{dot, hermite_he, norm};
use crate::symbol::{CharacteristicsView, SymbolField};

/// Below this radius the jump integrand is replaced by its Taylor term.
pub const DEFAULT_DELTA: f64 = 1e-3;
/// Allowed |Im Af| relative to 1 + |Re Af| in the Fourier route.
pub const IMAG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    GaussianBump,
    PolynomialTimesGaussian,
    SmoothCutoff,
    Constant,
    LyapunovU,
    LyapunovV,
}

/// One term a·Π_j He_{k_j}(u_j) of a Hermite expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteTerm {
    pub coef: f64,
    pub orders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// Σ a Π_j He_{k_j}(u_j) e^{-|u|²/2}, u = (x - c)/s
    Hermite {
        center: Vec<f64>,
        width: f64,
        terms: Vec<HermiteTerm>,
    },
    /// h(ρ + 1 - |x|) with h a smooth step from 0 on (-∞, 0] to 1 on [1, ∞)
    Cutoff {
        rho: f64,
    },
    Constant(f64),
    LyapunovU,
    LyapunovV,
}

/// A smooth function with analytic gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    dim: usize,
    family: TestFamily,
    shape: Arc<Shape>,
}

/// φ_k(u) = He_k(u) e^{-u²/2}; note φ_k' = -φ_{k+1}.
fn phi(k: usize, u: f64) -> f64 {
    hermite_he(k, u) * (-0.5 * u * u).exp()
}

/// Smooth step e^{-1/t}/(e^{-1/t} + e^{-1/(1-t)}) and its first two derivatives.
fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let e = |t: f64| (-1.0 / t).exp();
    let (a, b) = (e(t), e(1.0 - t));
    let a1 = a / (t * t);
    let a2 = a * (1.0 / t.powi(4) - 2.0 / t.powi(3));
    let s = 1.0 - t;
    let b1 = -b / (s * s);
    let b2 = b * (1.0 / s.powi(4) - 2.0 / s.powi(3));
    let sum = a + b;
    let sum1 = a1 + b1;
    let n = a1 * b - a * b1;
    let n1 = a2 * b - a * b2;
    (
        a / sum,
        n / (sum * sum),
        n1 / (sum * sum) - 2.0 * n * sum1 / sum.powi(3),
    )
}

impl TestFunction {
    /// e^{-|x-c|²/(2s²)}.
    pub fn gaussian_bump(center: Vec<f64>, width: f64) -> Result<Self> {
        let d = center.len();
        Self::hermite(
            TestFamily::GaussianBump,
            center,
            width,
            vec![HermiteTerm {
                coef: 1.0,
                orders: vec![0; d],
            }],
        )
    }

    /// Σ a Π_j He_{k_j}((x_j - c_j)/s) · e^{-|x-c|²/(2s²)}.
    pub fn polynomial_times_gaussian(
        center: Vec<f64>,
        width: f64,
        terms: Vec<HermiteTerm>,
    ) -> Result<Self> {
        Self::hermite(TestFamily::PolynomialTimesGaussian, center, width, terms)
    }

    fn hermite(
        family: TestFamily,
        center: Vec<f64>,
        width: f64,
        terms: Vec<HermiteTerm>,
    ) -> Result<Self> {
        let d = center.len();
        if d == 0 {
            return Err(config("test function dimension must be at least 1"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(config(format!(
                "gaussian width must be positive, got {width}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(config("gaussian center must be finite"));
        }
        for t in &terms {
            if t.orders.len() != d {
                return Err(Error::Dimension {
                    context: "hermite term orders",
                    expected: d,
                    got: t.orders.len(),
                });
            }
            if t.orders.iter().sum::<usize>() > 12 {
                return Err(config("hermite terms are limited to total order 12"));
            }
        }
        Ok(TestFunction {
            dim: d,
            family,
            shape: Arc::new(Shape::Hermite {
                center,
                width,
                terms,
            }),
        })
    }

    /// A radial cutoff χ with 1 on B(0, ρ) and 0 outside B(0, ρ+1).
    pub fn smooth_cutoff(dim: usize, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(config("test function dimension must be at least 1"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(config(format!("cutoff radius must be positive, got {rho}")));
        }
        Ok(TestFunction {
            dim,
            family: TestFamily::SmoothCutoff,
            shape: Arc::new(Shape::Cutoff { rho }),
        })
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        TestFunction {
            dim,
            family: TestFamily::Constant,
            shape: Arc::new(Shape::Constant(c)),
        }
    }

    /// f ≡ 0.
    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    /// u(x) = 1/(1+|x|²).
    pub fn lyapunov_u(dim: usize) -> Self {
        TestFunction {
            dim,
            family: TestFamily::LyapunovU,
            shape: Arc::new(Shape::LyapunovU),
        }
    }

    /// v(x) = 1+|x|².
    pub fn lyapunov_v(dim: usize) -> Self {
        TestFunction {
            dim,
            family: TestFamily::LyapunovV,
            shape: Arc::new(Shape::LyapunovV),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> TestFamily {
        self.family
    }

    pub fn is_gaussian_family(&self) -> bool {
        matches!(*self.shape, Shape::Hermite { .. })
    }

    /// Radius of the support, for compactly supported functions.
    pub fn support_radius(&self) -> Option<f64> {
        match *self.shape {
            Shape::Cutoff { rho } => Some(rho + 1.0),
            Shape::Constant(c) if c == 0.0 => Some(0.0),
            _ => None,
        }
    }

    /// Gaussians decay faster than any power.
    pub fn rapidly_decaying(&self) -> bool {
        self.is_gaussian_family()
    }

    /// sup |f|, when finite.
    pub fn sup_abs(&self) -> Option<f64> {
        match &*self.shape {
            Shape::Hermite { terms, .. } => {
                // |He_k(u)| e^{-u²/2} ≤ √(k!) up to a factor < 1.09
                Some(
                    terms
                        .iter()
                        .map(|t| {
                            t.coef.abs()
                                * t.orders
                                    .iter()
                                    .map(|&k| {
                                        1.09 * (1..=k).map(|i| i as f64).product::<f64>().sqrt()
                                    })
                                    .product::<f64>()
                        })
                        .sum(),
                )
            }
            Shape::Cutoff { .. } => Some(1.0),
            Shape::Constant(c) => Some(c.abs()),
            Shape::LyapunovU => Some(1.0),
            Shape::LyapunovV => None,
        }
    }

    /// Radius around x beyond which f(x + y) is negligible (below 1e-30
    /// relative) or exactly zero; infinite when f does not decay.
    pub fn reach(&self, x: &[f64]) -> f64 {
        match &*self.shape {
            Shape::Hermite {
                center,
                width,
                terms,
            } => {
                let kmax = terms
                    .iter()
                    .map(|t| t.orders.iter().sum::<usize>())
                    .max()
                    .unwrap_or(0);
                let dist = norm(&sub(x, center));
                dist + width * (12.0 + 2.0 * (kmax as f64).sqrt())
            }
            Shape::Cutoff { rho } => norm(x) + rho + 1.0,
            Shape::Constant(c) if *c == 0.0 => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &*self.shape {
            Shape::Hermite {
                center,
                width,
                terms,
            } => {
                let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c) / width).collect();
                terms
                    .iter()
                    .map(|t| {
                        t.coef
                            * t.orders
                                .iter()
                                .zip(&u)
                                .map(|(&k, &uj)| phi(k, uj))
                                .product::<f64>()
                    })
                    .sum()
            }
            Shape::Cutoff { rho } => smooth_step(rho + 1.0 - norm(x)).0,
            Shape::Constant(c) => *c,
            Shape::LyapunovU => 1.0 / (1.0 + dot(x, x)),
            Shape::LyapunovV => 1.0 + dot(x, x),
        }
    }

    /// f(x+y) − f(x) − ∇f(x)·y, in closed form for the Lyapunov functions
    /// where the plain difference cancels catastrophically at large |x|.
    pub fn first_order_remainder(&self, x: &[f64], y: &[f64], fx: f64, grad: &[f64]) -> f64 {
        match &*self.shape {
            Shape::LyapunovV => dot(y, y),
            Shape::LyapunovU => {
                let (xy, yy) = (dot(x, y), dot(y, y));
                let xx = dot(x, x);
                let xyy: f64 = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
                (2.0 * xy * (2.0 * xy + yy) - yy * (1.0 + xx))
                    / ((1.0 + xyy) * (1.0 + xx) * (1.0 + xx))
            }
            _ => {
                let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                self.value(&z) - fx - dot(grad, y)
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        match &*self.shape {
            Shape::Hermite {
                center,
                width,
                terms,
            } => {
                let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c) / width).collect();
                let mut g = vec![0.0; d];
                for t in terms {
                    for j in 0..d {
                        let mut p = -t.coef / width;
                        for i in 0..d {
                            p *= phi(t.orders[i] + usize::from(i == j), u[i]);
                        }
                        g[j] += p;
                    }
                }
                g
            }
            Shape::Cutoff { rho } => {
                let r = norm(x);
                let (_, h1, _) = smooth_step(rho + 1.0 - r);
                if h1 == 0.0 || r == 0.0 {
                    return vec![0.0; d];
                }
                x.iter().map(|v| -h1 * v / r).collect()
            }
            Shape::Constant(_) => vec![0.0; d],
            Shape::LyapunovU => {
                let u = 1.0 / (1.0 + dot(x, x));
                x.iter().map(|v| -2.0 * v * u * u).collect()
            }
            Shape::LyapunovV => x.iter().map(|v| 2.0 * v).collect(),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        match &*self.shape {
            Shape::Hermite {
                center,
                width,
                terms,
            } => {
                let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c) / width).collect();
                let mut h = DMatrix::zeros(d, d);
                for t in terms {
                    for j in 0..d {
                        for l in j..d {
                            let mut p = t.coef / (width * width);
                            for i in 0..d {
                                let k = t.orders[i] + usize::from(i == j) + usize::from(i == l);
                                p *= phi(k, u[i]);
                            }
                            h[(j, l)] += p;
                            if l != j {
                                h[(l, j)] += p;
                            }
                        }
                    }
                }
                h
            }
            Shape::Cutoff { rho } => {
                let r = norm(x);
                let (_, h1, h2) = smooth_step(rho + 1.0 - r);
                if r == 0.0 || (h1 == 0.0 && h2 == 0.0) {
                    return DMatrix::zeros(d, d);
                }
                let mut h = DMatrix::zeros(d, d);
                for j in 0..d {
                    for l in 0..d {
                        let p = x[j] * x[l] / (r * r);
                        let id = if j == l { 1.0 } else { 0.0 };
                        h[(j, l)] = h2 * p - h1 * (id - p) / r;
                    }
                }
                h
            }
            Shape::Constant(_) => DMatrix::zeros(d, d),
            Shape::LyapunovU => {
                let u = 1.0 / (1.0 + dot(x, x));
                let mut h = DMatrix::identity(d, d) * (-2.0 * u * u);
                for j in 0..d {
                    for l in 0..d {
                        h[(j, l)] += 8.0 * u * u * u * x[j] * x[l];
                    }
                }
                h
            }
            Shape::LyapunovV => DMatrix::identity(d, d) * 2.0,
        }
    }

    /// f̂(ξ) = (2π)^{-d} ∫ e^{-ix·ξ} f(x) dx in closed form for the gaussian
    /// families.
    pub fn fourier_transform(&self, xi: &[f64]) -> Option<Complex64> {
        let Shape::Hermite {
            center,
            width,
            terms,
        } = &*self.shape
        else {
            return None;
        };
        let s = *width;
        let d = self.dim as i32;
        let r2 = dot(xi, xi);
        let env = (s / (2.0 * PI).sqrt()).powi(d) * (-0.5 * s * s * r2).exp();
        let phase = Complex64::from_polar(1.0, -dot(center, xi));
        let mut poly = Complex64::new(0.0, 0.0);
        for t in terms {
            let mut p = Complex64::new(t.coef, 0.0);
            for (&k, &x) in t.orders.iter().zip(xi) {
                p *= Complex64::new(0.0, -s * x).powu(k as u32);
            }
            poly += p;
        }
        Some(poly * env * phase)
    }

    fn max_order(&self) -> usize {
        match &*self.shape {
            Shape::Hermite { terms, .. } => terms
                .iter()
                .map(|t| t.orders.iter().sum::<usize>())
                .max()
                .unwrap_or(0),
            _ => 0,
        }
    }

    /// Radii |y| at which y ↦ f(x + y) has features.
    fn breaks(&self, x: &[f64]) -> Vec<f64> {
        match &*self.shape {
            Shape::Hermite { center, width, .. } => {
                let dist = norm(&sub(x, center));
                (-8..=8)
                    .map(|k| dist + k as f64 * width)
                    .filter(|r| *r > 0.0)
                    .collect()
            }
            Shape::Cutoff { rho } => {
                let r = norm(x);
                [r - rho - 1.0, r - rho, r + rho, r + rho + 1.0]
                    .iter()
                    .map(|v| v.abs())
                    .filter(|v| *v > 0.0)
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Length scale of the function's features.
    fn feature_scale(&self) -> f64 {
        match &*self.shape {
            Shape::Hermite { width, terms, .. } => {
                let k = terms
                    .iter()
                    .map(|t| t.orders.iter().sum::<usize>())
                    .max()
                    .unwrap_or(0);
                width / (1.0 + k as f64).sqrt()
            }
            Shape::Cutoff { .. } => 0.25,
            _ => 1.0,
        }
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_dims(q: &SymbolField, f: &TestFunction, x: &[f64]) -> Result<()> {
    if f.dim() != q.dim() {
        return Err(Error::Dimension {
            context: "test function vs symbol",
            expected: q.dim(),
            got: f.dim(),
        });
    }
    if x.len() != q.dim() {
        return Err(Error::Dimension {
            context: "generator evaluation point",
            expected: q.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

fn relabel(e: Error, name: &str) -> Error {
    match e {
        Error::Quadrature {
            estimate, error, ..
        } => Error::Quadrature {
            integral: name.to_string(),
            estimate,
            error,
        },
        other => other,
    }
}

/// Re of -∫ q(x,ξ) e^{ix·ξ} f̂(ξ) dξ; the imaginary part must vanish to
/// within [`IMAG_TOL`].
pub fn apply_fourier(q: &SymbolField, f: &TestFunction, x: &[f64], spec: &QuadSpec) -> Result<f64> {
    let z = apply_fourier_complex(q, f, x, spec)?;
    if z.im.abs() > IMAG_TOL * (1.0 + z.re.abs()) {
        return Err(Error::Consistency(format!(
            "imaginary residual {:e} of the Fourier integral exceeds {IMAG_TOL:e}·(1 + |{:e}|)",
            z.im, z.re
        )));
    }
    Ok(z.re)
}

/// The full complex value of the Fourier integral.
pub fn apply_fourier_complex(
    q: &SymbolField,
    f: &TestFunction,
    x: &[f64],
    spec: &QuadSpec,
) -> Result<Complex64> {
    check_dims(q, f, x)?;
    let d = q.dim();
    if let Shape::Constant(c) = *f.shape {
        // f̂ = c δ₀
        return Ok(-c * q.eval(x, &vec![0.0; d])?);
    }
    if d > 3 {
        return Err(Error::Unsupported(format!(
            "the Fourier route is implemented for d ≤ 3, got d = {d}"
        )));
    }
    match &*f.shape {
        Shape::Hermite { center, width, .. } => {
            let s = *width;
            let kmax = f.max_order() as f64;
            let cutoff = (12.0 + 2.0 * kmax.sqrt()) / s;
            let shift = norm(&sub(x, center));
            let panel = (1.0 / s).min(PI / shift.max(1e-300));
            let g = |xi: &[f64]| -> Result<Complex64> {
                let qv = q.eval(x, xi)?;
                let fh = f.fourier_transform(xi).expect("gaussian family");
                Ok(qv * Complex64::from_polar(1.0, dot(x, xi)) * fh)
            };
            let ang =
                |rho: f64| -> usize { 16 + 2 * (rho * shift).ceil() as usize + 2 * kmax as usize };
            let radial = |rho: f64| -> Result<Complex64> {
                match d {
                    1 => Ok(g(&[rho])? + g(&[-rho])?),
                    2 => {
                        let m = 2 * ang(rho);
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..m {
                            let t = 2.0 * PI * k as f64 / m as f64;
                            acc += g(&[rho * t.cos(), rho * t.sin()])?;
                        }
                        Ok(acc * (2.0 * PI * rho / m as f64))
                    }
                    _ => {
                        let m = 2 * ang(rho);
                        let (zs, ws) = quad::gauss_legendre(ang(rho));
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (zi, wi) in zs.iter().zip(&ws) {
                            let rr = (1.0 - zi * zi).sqrt();
                            for k in 0..m {
                                let t = 2.0 * PI * k as f64 / m as f64;
                                acc +=
                                    g(&[rho * rr * t.cos(), rho * rr * t.sin(), rho * zi])? * *wi;
                            }
                        }
                        Ok(acc * (2.0 * PI * rho * rho / m as f64))
                    }
                }
            };
            let failure = std::cell::RefCell::new(None::<Error>);
            let part = |re: bool| -> Result<f64> {
                let h = |rho: f64| match radial(rho) {
                    Ok(v) => {
                        if re {
                            v.re
                        } else {
                            v.im
                        }
                    }
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                };
                let r = quad::integrate_panels(h, 0.0, cutoff, panel, spec);
                if let Some(e) = failure.borrow_mut().take() {
                    return Err(e);
                }
                r.map(|e| e.value)
                    .map_err(|e| relabel(e, "Fourier ξ-integral"))
            };
            Ok(-Complex64::new(part(true)?, part(false)?))
        }
        _ if d == 1 => fourier_dft_1d(q, f, x),
        _ => Err(Error::Unsupported(format!(
            "the Fourier route needs a gaussian-family test function in d = {d}"
        ))),
    }
}

/// Non-gaussian functions on the line: f̂ on a grid by FFT of the samples,
/// truncated where |f̂| < 1e-12 max|f̂|, then a trapezoid sum in ξ.
fn fourier_dft_1d(q: &SymbolField, f: &TestFunction, x: &[f64]) -> Result<Complex64> {
    let Some(half) = f.support_radius() else {
        return Err(Error::Unsupported(
            "the discrete Fourier route needs a compactly supported test function".into(),
        ));
    };
    if half == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = 1.0 / 128.0;
    let n_x = (2.0 * half / h).ceil() as usize + 1;
    let n = (2.0 * PI / (h * 2e-3))
        .max(n_x as f64 * 4.0)
        .log2()
        .ceil()
        .exp2() as usize;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            if j < n_x {
                Complex64::new(f.value(&[-half + j as f64 * h]), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dxi = 2.0 * PI / (n as f64 * h);
    // f̂(ξ_k) = h/(2π) e^{i half ξ_k} Σ_j f_j e^{-2πi jk/n}
    let fhat = |k: i64| -> (f64, Complex64) {
        let xi = k as f64 * dxi;
        let idx = k.rem_euclid(n as i64) as usize;
        (
            xi,
            buf[idx] * Complex64::from_polar(h / (2.0 * PI), half * xi),
        )
    };
    let kmax_avail = (n / 2 - 1) as i64;
    let peak = fhat(0).1.norm();
    let mut kc = kmax_avail;
    while kc > 0 && fhat(kc).1.norm().max(fhat(-kc).1.norm()) < 1e-12 * peak {
        kc -= 1;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -kc..=kc {
        let (xi, fh) = fhat(k);
        let w = if k.abs() == kc { 0.5 } else { 1.0 };
        acc += q.eval(x, &[xi])? * Complex64::from_polar(1.0, x[0] * xi) * fh * w;
    }
    Ok(-acc * dxi)
}

/// Options for [`apply_characteristics_with`].
#[derive(Debug, Clone)]
pub struct JumpOpts {
    pub spec: QuadSpec,
    /// Taylor radius for the small jumps.
    pub delta: f64,
}

impl Default for JumpOpts {
    fn default() -> Self {
        JumpOpts {
            spec: QuadSpec::with_rel(1e-9),
            delta: DEFAULT_DELTA,
        }
    }
}

/// b·∇f + ½ tr(Q ∇²f) + ∫ (f(x+y) - f(x) - ∇f·y 1_{|y|<1}) ν(dy).
pub fn apply_characteristics(
    q: &SymbolField,
    f: &TestFunction,
    x: &[f64],
    spec: &QuadSpec,
) -> Result<f64> {
    check_dims(q, f, x)?;
    let ch = q.characteristics(x)?;
    apply_with_view(
        &ch,
        f,
        x,
        &JumpOpts {
            spec: *spec,
            ..JumpOpts::default()
        },
    )
}

/// [`apply_characteristics`] on given characteristics.
pub fn apply_with_view(
    ch: &CharacteristicsView,
    f: &TestFunction,
    x: &[f64],
    opts: &JumpOpts,
) -> Result<f64> {
    let d = ch.dim();
    if f.dim() != d || x.len() != d {
        return Err(Error::Dimension {
            context: "characteristics vs test function",
            expected: d,
            got: f.dim().min(x.len()),
        });
    }
    if let Shape::Constant(_) = *f.shape {
        return Ok(0.0);
    }
    let grad = f.gradient(x);
    let hess = f.hessian(x);
    let fx = f.value(x);
    let mut total = dot(&ch.drift, &grad) + 0.5 * ch.diffusion.component_mul(&hess).sum();
    let m = &ch.measure;
    if m.is_zero() {
        return Ok(total);
    }
    let shifted = |y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + b).collect() };
    if m.is_atomic() {
        for a in m.atom_list() {
            let y = &a.location;
            let comp = if norm(y) < 1.0 { dot(&grad, y) } else { 0.0 };
            total += a.weight * (f.value(&shifted(y)) - fx - comp);
        }
        return Ok(total);
    }
    let delta = opts.delta;
    let m2 = m.second_moment_matrix(delta)?;
    total += 0.5 * m2.component_mul(&hess).sum();

    let reach = f.reach(x);
    let sphere_points = match d {
        1 => 0,
        2 => ((16.0 * reach.min(1e3) / f.feature_scale()).ceil() as usize).clamp(64, 1024),
        _ => ((8.0 * reach.min(1e3) / f.feature_scale()).ceil() as usize).clamp(32, 128),
    };
    // |inner| is of order |f''|·∫_{δ≤|y|<1}|y|²ν; a relative tolerance alone
    // cannot be met where the integral crosses zero
    let moment = (m.second_moment_matrix(1.0)? - &m2).trace().abs();
    let curvature = hess.amax() + grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) + fx.abs();
    let inner_spec = QuadSpec {
        abs_tol: opts
            .spec
            .abs_tol
            .max(opts.spec.rel_tol * moment * curvature),
        ..opts.spec
    };
    let iopts = IntegrateOpts {
        spec: inner_spec,
        breaks: f.breaks(x),
        bound: f.sup_abs().map(|b| 2.0 * b),
        wavelength: None,
        sphere_points,
    };
    let inner = m
        .integrate(
            |y| f.first_order_remainder(x, y, fx, &grad),
            delta,
            1.0,
            &iopts,
        )
        .map_err(|e| relabel(e, &format!("jump integral over {delta} ≤ |y| < 1")))?;
    total += inner;

    let (_, hi) = m.support_annulus();
    if m.tail_mass(1.0)? == 0.0 {
        return Ok(total);
    }
    let upper = hi.min(reach.max(1.0));
    if upper.is_infinite() && f.sup_abs().is_none() {
        return Err(Error::Numerical {
            step: 0,
            message:
                "jump integral ∫_{|y|≥1} f(x+y) ν(dy) has unbounded integrand and unbounded support"
                    .into(),
        });
    }
    let iopts = IntegrateOpts {
        spec: opts.spec,
        ..iopts
    };
    let outer = m
        .integrate(|y| f.value(&shifted(y)), 1.0, upper, &iopts)
        .map_err(|e| relabel(e, &format!("jump integral over 1 ≤ |y| < {upper}")))?;
    total += outer - fx * m.tail_mass(1.0)?;
    Ok(total)
}

/// Characteristics with the jumps restricted to |y| < 1 ∨ |x|/2.
pub fn truncated_view(ch: &CharacteristicsView, x: &[f64]) -> CharacteristicsView {
    let r = (0.5 * norm(x)).max(1.0);
    CharacteristicsView {
        drift: ch.drift.clone(),
        diffusion: ch.diffusion.clone(),
        measure: ch.measure.restrict(0.0, r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovKind {
    /// u(x) = 1/(1+|x|²)
    U,
    /// v(x) = 1+|x|²
    V,
}

/// sup |Lw(x)|/w(x) over x = 0 and the schedule's probes, with L the
/// generator of the small-jump truncated characteristics.
pub fn lyapunov_constant(
    q: &SymbolField,
    kind: LyapunovKind,
    sched: &ProbeSchedule,
) -> Result<f64> {
    sched.validate()?;
    if sched.dim != q.dim() {
        return Err(Error::Dimension {
            context: "probe schedule vs symbol",
            expected: q.dim(),
            got: sched.dim,
        });
    }
    let d = q.dim();
    let w = match kind {
        LyapunovKind::U => TestFunction::lyapunov_u(d),
        LyapunovKind::V => TestFunction::lyapunov_v(d),
    };
    let opts = JumpOpts::default();
    let ratio = |x: &[f64]| -> Result<f64> {
        let ch = truncated_view(&q.characteristics(x)?, x);
        Ok(apply_with_view(&ch, &w, x, &opts)?.abs() / w.value(x))
    };
    let mut sup = ratio(&vec![0.0; d])?;
    let mut per_radius = Vec::new();
    for &r in &sched.radii {
        let mut m: f64 = 0.0;
        for dir in &sched.directions {
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            m = m.max(ratio(&x)?);
        }
        if !m.is_finite() {
            return Err(Error::Hypothesis(format!(
                "|Lw|/w is not finite at |x| = {r}"
            )));
        }
        sup = sup.max(m);
        per_radius.push((r, m));
    }
    if let Some(t) = fit_trend(&per_radius) {
        if decide(Limit::Bounded, &t) == Verdict::Fail {
            return Err(Error::Hypothesis(format!(
                "|Lw|/w grows along the probe grid (log-log slope {:.3}, reaching {:e})",
                t.slope, t.last
            )));
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(0.0).0, 0.0);
        assert_eq!(smooth_step(1.0).0, 1.0);
        assert!((smooth_step(0.5).0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hermite_transform_at_zero_is_mass() {
        let f = TestFunction::gaussian_bump(vec![0.3], 0.7).unwrap();
        let mass = 0.7 * (2.0 * PI).sqrt();
        let fh = f.fourier_transform(&[0.0]).unwrap();
        assert!((fh.re - mass / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_remainders_match_plain_difference() {
        for f in [TestFunction::lyapunov_u(2), TestFunction::lyapunov_v(2)] {
            let x = [0.7, -1.3];
            let y = [0.21, 0.05];
            let z = [x[0] + y[0], x[1] + y[1]];
            let fx = f.value(&x);
            let g = f.gradient(&x);
            let plain = f.value(&z) - fx - dot(&g, &y);
            let r = f.first_order_remainder(&x, &y, fx, &g);
            assert!((r - plain).abs() < 1e-13, "{r} vs {plain}");
        }
    }
}

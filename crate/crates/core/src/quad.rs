//! Double-exponential quadrature (tanh-sinh on finite intervals, exp-sinh on
//! half lines) plus fixed Gauss-Legendre rules for smooth panels.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances shared by every adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Number of step halvings before giving up.
    pub max_level: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_level: 9,
        }
    }
}

impl QuadSpec {
    pub fn with_rel(rel_tol: f64) -> Self {
        QuadSpec {
            rel_tol,
            ..Self::default()
        }
    }

    fn converged(&self, value: f64, err: f64) -> bool {
        err <= self.abs_tol || err <= self.rel_tol * value.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

const TS_TMAX: f64 = 4.0;

fn nonconvergence(name: &str, value: f64, error: f64) -> Error {
    Error::Quadrature {
        integral: name.to_string(),
        estimate: value,
        error,
    }
}

/// Tanh-sinh rule on `[a, b]`. Endpoint singularities are fine as long as they
/// are integrable; the integrand is never evaluated exactly at an endpoint.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    if a > b {
        let e = tanh_sinh(f, b, a, spec)?;
        return Ok(Estimate {
            value: -e.value,
            error: e.error,
        });
    }
    let hw = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    // contribution of the node pair at abscissa t (or the centre when t == 0)
    let pair = |t: f64| -> f64 {
        if t == 0.0 {
            return f(c) * hw * FRAC_PI_2;
        }
        let u = FRAC_PI_2 * t.sinh();
        let e2 = (2.0 * u).exp();
        let off = hw * 2.0 / (e2 + 1.0);
        let ch = (u.exp() + (-u).exp()) * 0.5;
        let w = hw * FRAC_PI_2 * t.cosh() / (ch * ch);
        if w == 0.0 || !w.is_finite() || off == 0.0 {
            return 0.0;
        }
        let xl = a + off;
        let xr = b - off;
        let mut s = 0.0;
        if xl > a && xl < b {
            s += f(xl);
        }
        if xr > a && xr < b {
            s += f(xr);
        }
        s * w
    };

    let mut h = 1.0;
    let mut sum = pair(0.0);
    let mut k = 1;
    while (k as f64) * h <= TS_TMAX {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut prev = sum * h;
    if !prev.is_finite() {
        return Err(nonconvergence("tanh-sinh", prev, f64::INFINITY));
    }
    for _level in 1..=spec.max_level {
        h *= 0.5;
        let mut j = 1;
        while (j as f64) * h <= TS_TMAX {
            sum += pair(j as f64 * h);
            j += 2;
        }
        let cur = sum * h;
        let err = (cur - prev).abs();
        if !cur.is_finite() {
            return Err(nonconvergence("tanh-sinh", cur, f64::INFINITY));
        }
        if spec.converged(cur, err) {
            return Ok(Estimate {
                value: cur,
                error: err,
            });
        }
        prev = cur;
    }
    Err(nonconvergence("tanh-sinh", prev, f64::NAN))
}

/// Exp-sinh rule on `[a, ∞)`; `scale` is the length over which the integrand
/// changes, used to place the nodes.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, spec: &QuadSpec) -> Result<Estimate> {
    let scale = if scale > 0.0 && scale.is_finite() {
        scale
    } else {
        1.0
    };
    let tmax = 6.5;
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let eu = u.exp();
        let x = a + scale * eu;
        if eu == 0.0 || !x.is_finite() || x == a {
            return 0.0;
        }
        let w = scale * FRAC_PI_2 * t.cosh() * eu;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * w
        }
    };

    // outward march from 0 to find where the terms become negligible
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut hi = tmax;
    let mut lo = -tmax;
    for dir in [1.0, -1.0] {
        let mut small = 0;
        let mut k = 1;
        loop {
            let t = dir * k as f64 * h;
            if t.abs() > tmax {
                break;
            }
            let term = node(t);
            if !term.is_finite() {
                if small > 0 {
                    // overflow past the decayed region
                    break;
                }
                return Err(nonconvergence("exp-sinh", sum, f64::INFINITY));
            }
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() || term == 0.0 {
                small += 1;
                if small >= 3 {
                    if dir > 0.0 {
                        hi = t.abs();
                    } else {
                        lo = -t.abs();
                    }
                    break;
                }
            } else {
                small = 0;
            }
            k += 1;
        }
    }
    let mut prev = sum * h;
    for _level in 1..=spec.max_level {
        h *= 0.5;
        let mut j = 1;
        loop {
            let t = j as f64 * h;
            if t > hi && -t < lo {
                break;
            }
            if t <= hi {
                let v = node(t);
                if v.is_finite() {
                    sum += v;
                }
            }
            if -t >= lo {
                let v = node(-t);
                if v.is_finite() {
                    sum += v;
                }
            }
            j += 2;
        }
        let cur = sum * h;
        let err = (cur - prev).abs();
        if spec.converged(cur, err) {
            return Ok(Estimate {
                value: cur,
                error: err,
            });
        }
        prev = cur;
    }
    Err(nonconvergence("exp-sinh", prev, f64::NAN))
}

/// Integrates over `[a, b]` (with `b` possibly infinite), splitting at the
/// supplied interior break points.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<Estimate> {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
    };
    let mut left = a;
    for p in pts {
        total = total + tanh_sinh(&f, left, p, spec)?;
        left = p;
    }
    if b.is_infinite() {
        let scale = left.abs().max(1.0);
        total = total + exp_sinh(&f, left, scale, spec)?;
    } else {
        total = total + tanh_sinh(&f, left, b, spec)?;
    }
    Ok(total)
}

/// Integrates over `[a, b]` split into equal panels of width at most `width`;
/// meant for oscillatory integrands.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    width: f64,
    spec: &QuadSpec,
) -> Result<Estimate> {
    let n = (((b - a) / width).ceil() as usize).max(1);
    let h = (b - a) / n as f64;
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for i in 0..n {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == n { b } else { lo + h };
        total = total + tanh_sinh(&f, lo, hi, spec)?;
    }
    Ok(total)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(20))
}

/// 20-point Gauss-Legendre on `[a, b]`.
pub fn gl_fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (x, w) = gl20();
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(c + hw * xi))
        .sum::<f64>()
        * hw
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let spec = QuadSpec::default();
        let e = tanh_sinh(|x: f64| x.powf(-0.5), 0.0, 1.0, &spec).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9);
        let e = tanh_sinh(|x: f64| (1.0 - x * x).sqrt(), -1.0, 1.0, &spec).unwrap();
        assert!((e.value - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn reversed_interval_flips_sign() {
        let spec = QuadSpec::default();
        let e = tanh_sinh(|x: f64| x, 1.0, 0.0, &spec).unwrap();
        assert!((e.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn exp_sinh_on_half_line() {
        let spec = QuadSpec::default();
        let e = exp_sinh(|x: f64| (-x).exp(), 0.0, 1.0, &spec).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        let e = exp_sinh(|x: f64| x.powf(-2.5), 1.0, 1.0, &spec).unwrap();
        assert!((e.value - 1.0 / 1.5).abs() < 1e-10);
        // integrable singularity at the finite end
        let e = exp_sinh(|x: f64| x.powf(-0.5) * (-x).exp(), 0.0, 1.0, &spec).unwrap();
        assert!((e.value - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn split_integration_with_kink() {
        let spec = QuadSpec::default();
        let e = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], &spec).unwrap();
        assert!((e.value - (0.09 + 0.49) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_panels() {
        let spec = QuadSpec::default();
        let w = 50.0;
        let e = integrate_panels(|x: f64| (w * x).cos(), 0.0, 3.0, 0.05, &spec).unwrap();
        assert!((e.value - (3.0 * w).sin() / w).abs() < 1e-12);
    }

    #[test]
    fn divergent_integral_is_reported() {
        let spec = QuadSpec::default();
        assert!(tanh_sinh(|x: f64| 1.0 / x, 0.0, 1.0, &spec).is_err());
    }
}

//! Special functions and small numerical helpers.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_li, gamma_ui, gamma_ur, ln_gamma};

pub use statrs::function::gamma::gamma;

/// Γ(x) for x in (-2, 0) ∪ (0, ∞) without relying on the reflection formula.
pub fn gamma_any(x: f64) -> f64 {
    if x > 0.0 {
        gamma(x)
    } else if x > -1.0 {
        gamma(x + 1.0) / x
    } else {
        gamma(x + 2.0) / (x * (x + 1.0))
    }
}

/// Surface area of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Constant c with ∫(1 - cos y·ξ) c |y|^{-d-α} dy = |ξ|^α.
pub fn stable_constant(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    let ln = alpha.ln() + (alpha - 1.0) * 2f64.ln() + ln_gamma((d + alpha) / 2.0)
        - 0.5 * d * PI.ln()
        - ln_gamma(1.0 - alpha / 2.0);
    ln.exp()
}

/// Exponential integral E1(x) = Γ(0, x) for x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x <= 1.0 {
        const EULER: f64 = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction e^{-x}/(x+1-1/(x+3-4/(x+5-...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Upper incomplete gamma Γ(s, x) for s > -2 and x > 0.
pub fn upper_gamma(s: f64, x: f64) -> f64 {
    if s > 0.0 {
        gamma_ui(s, x)
    } else if s == 0.0 {
        exp_integral_e1(x)
    } else {
        // Γ(s, x) = (Γ(s+1, x) - x^s e^{-x}) / s
        (upper_gamma(s + 1.0, x) - (s * x.ln() - x).exp()) / s
    }
}

/// Lower incomplete gamma γ(s, x) for s > 0.
pub fn lower_gamma(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        gamma(s)
    } else {
        gamma_li(s, x)
    }
}

/// Regularized upper incomplete gamma Q(s, x) for s > 0.
pub fn gamma_q(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(s, x)
    }
}

/// Regularized lower incomplete gamma P(s, x) = 1 - Q(s, x).
pub fn gamma_p(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        statrs::function::gamma::gamma_lr(s, x)
    }
}

/// Pochhammer symbol (r)_α = Γ(r+α)/Γ(r) for r > 0.
pub fn pochhammer(r: f64, alpha: f64) -> f64 {
    (ln_gamma(r + alpha) - ln_gamma(r)).exp()
}

/// (r+ε)_α - (r)_α without losing the small difference.
pub fn pochhammer_diff(r: f64, eps: f64, alpha: f64) -> f64 {
    let a = ln_gamma(r + eps + alpha) - ln_gamma(r + eps);
    let b = ln_gamma(r + alpha) - ln_gamma(r);
    b.exp() * (a - b).exp_m1()
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal survival function P(Z > z).
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// P(lo ≤ Z < hi) for a standard normal, accurate in both tails.
pub fn norm_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        norm_sf(lo) - norm_sf(hi)
    } else if hi <= 0.0 {
        norm_cdf(hi) - norm_cdf(lo)
    } else {
        1.0 - norm_cdf(lo) - norm_sf(hi)
    }
}

/// Probability, first and second moments of Y ~ N(m, s²) restricted to
/// [a, b): (P, E[Y; a ≤ Y < b], E[Y²; a ≤ Y < b]).
pub fn gauss_interval_moments(m: f64, s: f64, a: f64, b: f64) -> (f64, f64, f64) {
    if b <= a {
        return (0.0, 0.0, 0.0);
    }
    if s == 0.0 {
        return if a <= m && m < b {
            (1.0, m, m * m)
        } else {
            (0.0, 0.0, 0.0)
        };
    }
    let za = (a - m) / s;
    let zb = (b - m) / s;
    let p = norm_interval(za, zb);
    let pa = if za.is_finite() { norm_pdf(za) } else { 0.0 };
    let pb = if zb.is_finite() { norm_pdf(zb) } else { 0.0 };
    let e1 = m * p + s * (pa - pb);
    // E[(Y-m)^2; .] = s^2 (P + za φ(za) - zb φ(zb))
    let ta = if za.is_finite() { za * pa } else { 0.0 };
    let tb = if zb.is_finite() { zb * pb } else { 0.0 };
    let c2 = s * s * (p + ta - tb);
    let e2 = c2 + 2.0 * m * e1 - m * m * p;
    (p, e1, e2.max(0.0))
}

/// exp(z) - 1 for complex z, accurate near 0.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let em1 = a.exp_m1();
    let half = (0.5 * b).sin();
    let re = em1 * b.cos() - 2.0 * half * half;
    let im = a.exp() * b.sin();
    Complex64::new(re, im)
}

/// ln(1 + z) for complex z, accurate near 0.
pub fn cln1p(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let re = 0.5 * (a * (2.0 + a) + b * b).ln_1p();
    let im = b.atan2(1.0 + a);
    Complex64::new(re, im)
}

/// Probabilists' Hermite polynomial He_n(x).
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let p2 = x * p1 - k as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Fraction of the sphere {|y| = ρ} ⊂ ℝ^d lying inside the ball B(z, r),
/// where t = |z|.
pub fn sphere_fraction_in_ball(d: usize, rho: f64, t: f64, r: f64) -> f64 {
    if t == 0.0 {
        return if rho <= r { 1.0 } else { 0.0 };
    }
    if rho + t <= r {
        return 1.0;
    }
    if rho >= t + r || rho <= t - r {
        return 0.0;
    }
    // points with angle θ to z satisfy ρ² + t² - 2ρt cos θ ≤ r²
    let c = ((rho * rho + t * t - r * r) / (2.0 * rho * t)).clamp(-1.0, 1.0);
    cap_fraction(d, c)
}

/// Fraction of the unit sphere in ℝ^d with cos θ ≥ c.
pub fn cap_fraction(d: usize, c: f64) -> f64 {
    match d {
        1 => {
            if c > 1.0 {
                0.0
            } else if c > -1.0 {
                0.5
            } else {
                1.0
            }
        }
        2 => c.clamp(-1.0, 1.0).acos() / PI,
        3 => 0.5 * (1.0 - c.clamp(-1.0, 1.0)),
        _ => {
            let c = c.clamp(-1.0, 1.0);
            let s2 = 1.0 - c * c;
            let half = 0.5
                * statrs::function::beta::beta_reg((d as f64 - 1.0) / 2.0, 0.5, s2.clamp(0.0, 1.0));
            if c >= 0.0 {
                half
            } else {
                1.0 - half
            }
        }
    }
}

/// Ordinary least-squares slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

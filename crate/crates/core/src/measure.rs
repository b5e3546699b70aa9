//! Lévy measures: densities, atoms, and the mass/moment/ball queries the
//! checkers and simulator need.
//!
//! A [`LevyMeasure`] is a base shape (stable, tempered, subordinated
//! Gaussian mixture, atoms) pushed forward by `y ↦ s·y`, multiplied by a
//! weight and optionally restricted to an annulus `lo ≤ |y| < hi`. Every
//! query is answered in image coordinates.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadSpec};
use crate::special::{
    gamma, gamma_p, gamma_q, gauss_interval_moments, lower_gamma, norm, norm_interval, sphere_area,
    sphere_fraction_in_ball, stable_constant, upper_gamma,
};

/// A point mass of the Lévy measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

/// Mixing law of a subordinated Gaussian measure ν = ∫ μ(u) N(β u, v u I)(·) du.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SubLaw {
    /// μ(u) = (α/2)/Γ(1-α/2) u^{-1-α/2} e^{-u}
    Relativistic { alpha: f64 },
    /// μ(u) = α/Γ(1-α) e^{-(ϱ+α)u} (1-e^{-u})^{-1-α}
    Lamperti { alpha: f64, rho: f64 },
    /// μ(u) = 2^{α/2}(α/2)/Γ(1-α/2) u^{-1-α/2} e^{-θu/2}
    Tempered { alpha: f64, theta: f64 },
}

impl SubLaw {
    fn ln_mu(&self, u: f64) -> f64 {
        match *self {
            SubLaw::Relativistic { alpha } => {
                let b = alpha / 2.0;
                (b / gamma(1.0 - b)).ln() - (1.0 + b) * u.ln() - u
            }
            SubLaw::Lamperti { alpha, rho } => {
                (alpha / gamma(1.0 - alpha)).ln()
                    - (rho + alpha) * u
                    - (1.0 + alpha) * (-(-u).exp_m1()).ln()
            }
            SubLaw::Tempered { alpha, theta } => {
                let b = alpha / 2.0;
                b * LN_2 + (b / gamma(1.0 - b)).ln() - (1.0 + b) * u.ln() - 0.5 * theta * u
            }
        }
    }
}

/// Radial envelope A ρ^{-1-a} · (b1 if ρ < ρ* else b2 e^{-γρ}) used for
/// rejection sampling; it dominates the radial density of the base shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Envelope {
    amp: f64,
    a: f64,
    b1: f64,
    b2: f64,
    gamma: f64,
    rho_star: f64,
}

impl Envelope {
    fn power(amp: f64, a: f64) -> Self {
        Envelope {
            amp,
            a,
            b1: 1.0,
            b2: 0.0,
            gamma: 0.0,
            rho_star: f64::INFINITY,
        }
    }

    fn tempered(amp: f64, a: f64, b1: f64, b2: f64, gamma: f64) -> Self {
        let rho_star = if b2 <= b1 {
            0.0
        } else {
            ((b2 / b1).ln() / gamma).max(0.0)
        };
        Envelope {
            amp,
            a,
            b1,
            b2,
            gamma,
            rho_star,
        }
    }

    fn radial(&self, rho: f64) -> f64 {
        let base = self.amp * rho.powf(-1.0 - self.a);
        if rho < self.rho_star {
            base * self.b1
        } else {
            base * self.b2 * (-self.gamma * rho).exp()
        }
    }

    fn power_mass(&self, l: f64, h: f64) -> f64 {
        if h <= l {
            return 0.0;
        }
        let hp = if h.is_finite() { h.powf(-self.a) } else { 0.0 };
        self.amp * (l.powf(-self.a) - hp) / self.a
    }

    fn tempered_mass(&self, l: f64, h: f64) -> f64 {
        if h <= l {
            return 0.0;
        }
        let g = self.gamma;
        let up = |x: f64| {
            if x.is_infinite() {
                0.0
            } else {
                upper_gamma(-self.a, g * x)
            }
        };
        self.amp * g.powf(self.a) * (up(l) - up(h))
    }

    fn sample<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> f64 {
        let p_hi = hi.min(self.rho_star);
        let t_lo = lo.max(self.rho_star);
        let m1 = self.b1 * self.power_mass(lo, p_hi);
        let m2 = if self.b2 > 0.0 {
            self.b2 * self.tempered_mass(t_lo, hi)
        } else {
            0.0
        };
        let u: f64 = rng.random::<f64>() * (m1 + m2);
        if u < m1 || m2 <= 0.0 {
            sample_power(self.a, lo, p_hi, rng)
        } else {
            sample_tempered_power(self.a, self.gamma, t_lo, hi, rng)
        }
    }
}

/// ρ with density ∝ ρ^{-1-a} on [l, h).
fn sample_power<R: Rng + ?Sized>(a: f64, l: f64, h: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let la = l.powf(-a);
    let ha = if h.is_finite() { h.powf(-a) } else { 0.0 };
    let rho = (la - u * (la - ha)).powf(-1.0 / a);
    rho.clamp(l, if h.is_finite() { h } else { f64::MAX })
}

/// ρ with density ∝ ρ^{-1-a} e^{-γρ} on [l, h).
fn sample_tempered_power<R: Rng + ?Sized>(a: f64, g: f64, l: f64, h: f64, rng: &mut R) -> f64 {
    loop {
        if g * l >= 1.0 {
            let u: f64 = rng.random();
            let span = if h.is_finite() {
                -(-g * (h - l)).exp_m1()
            } else {
                1.0
            };
            let rho = l - (-u * span).ln_1p() / g;
            let acc: f64 = rng.random();
            if acc < (l / rho).powf(1.0 + a) {
                return rho;
            }
        } else {
            let rho = sample_power(a, l, h, rng);
            let acc: f64 = rng.random();
            if acc < (-g * (rho - l)).exp() {
                return rho;
            }
        }
    }
}

/// Subordinated Gaussian shape.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Subordinated {
    pub(crate) law: SubLaw,
    pub(crate) dim: usize,
    /// mean of the Gaussian per unit of subordinator time (d = 1 only)
    pub(crate) beta: f64,
    /// variance per coordinate per unit of subordinator time
    pub(crate) var: f64,
    pub(crate) env: Envelope,
}

const SUB_SPEC: QuadSpec = QuadSpec {
    rel_tol: 1e-11,
    abs_tol: 1e-300,
    max_level: 10,
};

impl Subordinated {
    pub(crate) fn relativistic(alpha: f64, dim: usize) -> Self {
        let c = stable_constant(dim, alpha);
        let d = dim as f64;
        let area = sphere_area(dim);
        let env = Envelope::tempered(area * c, alpha, 1.0, 2f64.powf((d + alpha) / 2.0), 0.5);
        Subordinated {
            law: SubLaw::Relativistic { alpha },
            dim,
            beta: 0.0,
            var: 2.0,
            env,
        }
    }

    pub(crate) fn lamperti(alpha: f64, rho: f64) -> Self {
        let k = rho + alpha;
        let g = |u: f64, kk: f64| {
            let r = if u < 1e-8 {
                1.0 + 0.5 * u
            } else {
                u / -(-u).exp_m1()
            };
            ((1.0 + alpha) * r.ln() - kk * u).exp()
        };
        let sup = |kk: f64| {
            let mut m: f64 = 1.0;
            for i in 0..4000 {
                let u = 1e-6 * (1e9f64).powf(i as f64 / 3999.0);
                m = m.max(g(u, kk));
            }
            m * 1.02
        };
        let m0 = sup(k);
        let m1 = sup(k / 2.0);
        let c = stable_constant(1, 2.0 * alpha);
        let env = Envelope::tempered(
            2.0 * c,
            2.0 * alpha,
            m0,
            m1 * 2f64.powf(0.5 + alpha),
            (k / 2.0).sqrt() / 2.0,
        );
        Subordinated {
            law: SubLaw::Lamperti { alpha, rho },
            dim: 1,
            beta: 0.0,
            var: 2.0,
            env,
        }
    }

    pub(crate) fn normal_tempered(alpha: f64, kappa: f64, beta: f64) -> Self {
        let kappa = kappa.abs();
        let c = stable_constant(1, alpha);
        let eps = (kappa - beta.abs()) / (2.0 * kappa);
        let gam = (kappa - beta.abs()) / 2.0;
        let b2 = eps.powf(-(1.0 + alpha) / 2.0);
        let rho_star = b2.ln() / (beta.abs() + gam);
        let b1 = (beta.abs() * rho_star).exp();
        let env = Envelope {
            amp: 2.0 * c,
            a: alpha,
            b1,
            b2,
            gamma: gam,
            rho_star,
        };
        Subordinated {
            law: SubLaw::Tempered {
                alpha,
                theta: kappa * kappa - beta * beta,
            },
            dim: 1,
            beta,
            var: 1.0,
            env,
        }
    }

    /// ∫ μ(u) G(u) du.
    fn mix<G: Fn(f64) -> f64>(&self, g: G, r_ref: f64) -> Result<f64> {
        let scale = if r_ref > 0.0 && r_ref.is_finite() {
            (r_ref * r_ref / self.var).clamp(1e-12, 1e12)
        } else {
            1.0
        };
        let law = self.law;
        let f = |u: f64| {
            let gv = g(u);
            if gv == 0.0 || !gv.is_finite() {
                gv
            } else {
                gv.signum() * (law.ln_mu(u) + gv.abs().ln()).exp()
            }
        };
        quad::exp_sinh(f, 0.0, scale, &SUB_SPEC).map(|e| e.value)
    }

    fn moments_1d(&self, u: f64, a: f64, b: f64) -> (f64, f64, f64) {
        gauss_interval_moments(self.beta * u, (self.var * u).sqrt(), a, b)
    }

    /// P, E[Y], E[Y²] of Y ~ N(βu, vu) over {lo ≤ |y| < hi} in d = 1.
    fn annulus_1d(&self, u: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
        let p = self.moments_1d(u, lo, hi);
        let n = self.moments_1d(u, -hi, -lo);
        let m = self.beta * u;
        let s = (self.var * u).sqrt();
        if s == 0.0 {
            return (p.0 + n.0, p.1 + n.1, p.2 + n.2);
        }
        // the pdf terms of the two sides nearly cancel; pair them up first
        let pair = |c: f64| -> f64 {
            if c == 0.0 || c.is_infinite() {
                return 0.0;
            }
            let x = c * m / (s * s);
            let v = if x.abs() < 1.0 {
                (-(c * c + m * m) / (2.0 * s * s)).exp() * 2.0 * x.sinh()
            } else {
                (-(c - m).powi(2) / (2.0 * s * s)).exp() - (-(c + m).powi(2) / (2.0 * s * s)).exp()
            };
            v / (2.0 * std::f64::consts::PI).sqrt()
        };
        let e1 = m * (p.0 + n.0) + s * (pair(lo) - pair(hi));
        (p.0 + n.0, e1, p.2 + n.2)
    }

    fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        if lo == 0.0 {
            return Ok(f64::INFINITY);
        }
        if self.dim == 1 {
            self.mix(|u| self.annulus_1d(u, lo, hi).0, lo)
        } else {
            let h = self.dim as f64 / 2.0;
            let v = self.var;
            self.mix(
                |u| {
                    let ql = gamma_q(h, lo * lo / (2.0 * v * u));
                    let qh = if hi.is_finite() {
                        gamma_q(h, hi * hi / (2.0 * v * u))
                    } else {
                        0.0
                    };
                    (ql - qh).max(0.0)
                },
                lo,
            )
        }
    }

    fn m2(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let r_ref = if lo > 0.0 { lo } else { hi };
        if self.dim == 1 {
            self.mix(|u| self.annulus_1d(u, lo, hi).2, r_ref)
        } else {
            let d = self.dim as f64;
            let h = d / 2.0 + 1.0;
            let v = self.var;
            self.mix(
                |u| {
                    let ph = if hi.is_finite() {
                        gamma_p(h, hi * hi / (2.0 * v * u))
                    } else {
                        1.0
                    };
                    let pl = if lo > 0.0 {
                        gamma_p(h, lo * lo / (2.0 * v * u))
                    } else {
                        0.0
                    };
                    v * u * d * (ph - pl).max(0.0)
                },
                r_ref,
            )
        }
    }

    fn m1(&self, lo: f64, hi: f64) -> Result<f64> {
        if self.dim != 1 || self.beta == 0.0 || hi <= lo {
            return Ok(0.0);
        }
        let r_ref = if lo > 0.0 { lo } else { hi };
        self.mix(|u| self.annulus_1d(u, lo, hi).1, r_ref)
    }

    fn interval_prob_1d(&self, a: f64, b: f64) -> Result<f64> {
        let r_ref = a.abs().min(b.abs()).max(1e-300);
        self.mix(
            |u| {
                let s = (self.var * u).sqrt();
                let m = self.beta * u;
                norm_interval((a - m) / s, (b - m) / s)
            },
            r_ref,
        )
    }

    fn density_1d(&self, y: f64) -> Result<f64> {
        let (v, b) = (self.var, self.beta);
        self.mix(
            |u| {
                let s2 = v * u;
                let z = y - b * u;
                (-(z * z) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt()
            },
            y.abs(),
        )
    }

    /// Radial density ρ ↦ ∫ μ(u) (2π v u)^{-d/2} e^{-ρ²/(2vu)} du (isotropic case).
    fn density_radial(&self, rho: f64) -> Result<f64> {
        let d = self.dim as f64;
        let v = self.var;
        self.mix(
            |u| {
                let s2 = v * u;
                (-(rho * rho) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).powf(d / 2.0)
            },
            rho,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Kind {
    Zero,
    /// c |y|^{-d-α}
    Stable {
        alpha: f64,
        dim: usize,
        c: f64,
    },
    /// C e^{-ϱ|y|} |y|^{-1-α} on the line
    Truncated {
        alpha: f64,
        rho: f64,
        c: f64,
    },
    Sub(Arc<Subordinated>),
    Atoms(Arc<Vec<Atom>>),
}

/// Options for [`LevyMeasure::integrate`].
#[derive(Debug, Clone)]
pub struct IntegrateOpts {
    pub spec: QuadSpec,
    /// Radii (image coordinates) where the integrand has features.
    pub breaks: Vec<f64>,
    /// Upper bound on |g|; lets the integral over an infinite range be cut
    /// where the remaining mass is negligible.
    pub bound: Option<f64>,
    /// Oscillation length of the integrand, if any.
    pub wavelength: Option<f64>,
    /// Angular resolution of the sphere rule in d ≥ 2.
    pub sphere_points: usize,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        IntegrateOpts {
            spec: QuadSpec::with_rel(1e-9),
            breaks: Vec::new(),
            bound: None,
            wavelength: None,
            sphere_points: 64,
        }
    }
}

/// A Lévy measure on ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasure {
    kind: Kind,
    dim: usize,
    scale: f64,
    weight: f64,
    lo: f64,
    hi: f64,
}

fn intersect(lo1: f64, hi1: f64, lo2: f64, hi2: f64) -> (f64, f64) {
    (lo1.max(lo2), hi1.min(hi2))
}

impl LevyMeasure {
    fn from_kind(kind: Kind, dim: usize) -> Self {
        LevyMeasure {
            kind,
            dim,
            scale: 1.0,
            weight: 1.0,
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_kind(Kind::Zero, dim)
    }

    /// Isotropic α-stable measure with ∫(1 - cos y·ξ) ν(dy) = |ξ|^α.
    pub fn stable(dim: usize, alpha: f64) -> Self {
        Self::from_kind(
            Kind::Stable {
                alpha,
                dim,
                c: stable_constant(dim, alpha),
            },
            dim,
        )
    }

    /// Symmetric tempered stable density C e^{-ϱ|y|}|y|^{-1-α} on the line.
    pub fn truncated(alpha: f64, rho: f64) -> Self {
        Self::from_kind(
            Kind::Truncated {
                alpha,
                rho,
                c: stable_constant(1, alpha),
            },
            1,
        )
    }

    pub(crate) fn subordinated(sub: Subordinated) -> Self {
        let dim = sub.dim;
        Self::from_kind(Kind::Sub(Arc::new(sub)), dim)
    }

    pub fn atoms(dim: usize, atoms: Vec<Atom>) -> Self {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .filter(|a| a.weight != 0.0 && norm(&a.location) > 0.0)
            .collect();
        if atoms.is_empty() {
            return Self::zero(dim);
        }
        Self::from_kind(Kind::Atoms(Arc::new(atoms)), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
            || self.weight == 0.0
            || self.scale == 0.0
            || self.hi <= self.lo
    }

    /// True when ν has no density part.
    pub fn is_atomic(&self) -> bool {
        matches!(self.kind, Kind::Atoms(_) | Kind::Zero)
    }

    /// Whether the total mass is finite.
    pub fn is_finite(&self) -> bool {
        self.is_atomic() || self.lo > 0.0 || self.is_zero()
    }

    /// Image under y ↦ s·y.
    pub fn scaled(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.dim);
        }
        let mut m = self.clone();
        m.scale *= s;
        m.lo *= s.abs();
        m.hi *= s.abs();
        m
    }

    /// Image under y ↦ σ y for a d×k matrix; only atomic measures support a
    /// general matrix.
    pub fn linear_image(&self, sigma: &DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if sigma.ncols() != self.dim {
            return Err(Error::Dimension {
                context: "linear image of Lévy measure",
                expected: self.dim,
                got: sigma.ncols(),
            });
        }
        if self.is_zero() || sigma.iter().all(|v| *v == 0.0) {
            return Ok(Self::zero(d));
        }
        if let Some(s) = scalar_multiple(sigma) {
            let mut m = self.scaled(s);
            m.dim = d;
            return Ok(m);
        }
        match &self.kind {
            Kind::Atoms(_) => {
                let atoms = self
                    .atom_list()
                    .into_iter()
                    .map(|a| {
                        let y = nalgebra::DVector::from_column_slice(&a.location);
                        Atom {
                            location: (sigma * y).as_slice().to_vec(),
                            weight: a.weight,
                        }
                    })
                    .collect();
                Ok(Self::atoms(d, atoms))
            }
            _ => Err(Error::Unsupported(
                "jump densities can only be pushed forward by multiples of the identity".into(),
            )),
        }
    }

    pub fn weighted(&self, w: f64) -> Self {
        let mut m = self.clone();
        m.weight *= w;
        m
    }

    /// Restriction to {lo ≤ |y| < hi}, intersected with any existing one.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let mut m = self.clone();
        let (l, h) = intersect(self.lo, self.hi, lo, hi);
        m.lo = l;
        m.hi = h.max(l);
        m
    }

    pub fn support_annulus(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn unit(&self, r: f64) -> f64 {
        r / self.scale.abs()
    }

    /// ν({r1 ≤ |y| < r2}).
    pub fn mass(&self, r1: f64, r2: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let (l, h) = intersect(self.lo, self.hi, r1, r2);
        if h <= l {
            return Ok(0.0);
        }
        let v = match &self.kind {
            Kind::Zero => 0.0,
            Kind::Atoms(a) => a
                .iter()
                .filter(|a| {
                    let r = norm(&a.location) * self.scale.abs();
                    r >= l && r < h
                })
                .map(|a| a.weight)
                .sum(),
            Kind::Stable { alpha, dim, c } => {
                let (l, h) = (self.unit(l), self.unit(h));
                Envelope::power(sphere_area(*dim) * c, *alpha).power_mass(l, h)
            }
            Kind::Truncated { alpha, rho, c } => {
                let (l, h) = (self.unit(l), self.unit(h));
                truncated_mass(*alpha, *rho, *c, l, h)
            }
            Kind::Sub(s) => s.mass(self.unit(l), self.unit(h))?,
        };
        Ok(self.weight * v)
    }

    /// ν({|y| ≥ r}).
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        self.mass(r, f64::INFINITY)
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.mass(0.0, f64::INFINITY)
    }

    /// ∫_{|y|<r} |y|² ν(dy).
    pub fn second_moment(&self, r: f64) -> Result<f64> {
        self.second_moment_between(0.0, r)
    }

    /// ∫_{r1 ≤ |y| < r2} |y|² ν(dy).
    pub fn second_moment_between(&self, r1: f64, r2: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let (l, h) = intersect(self.lo, self.hi, r1, r2);
        if h <= l {
            return Ok(0.0);
        }
        let s2 = self.scale * self.scale;
        let v = match &self.kind {
            Kind::Zero => 0.0,
            Kind::Atoms(a) => a
                .iter()
                .filter(|a| {
                    let r = norm(&a.location) * self.scale.abs();
                    r >= l && r < h
                })
                .map(|a| a.weight * norm(&a.location).powi(2))
                .sum::<f64>(),
            Kind::Stable { alpha, dim, c } => {
                let (l, h) = (self.unit(l), self.unit(h));
                let hp = if h.is_finite() {
                    h.powf(2.0 - alpha)
                } else {
                    f64::INFINITY
                };
                sphere_area(*dim) * c * (hp - l.powf(2.0 - alpha)) / (2.0 - alpha)
            }
            Kind::Truncated { alpha, rho, c } => {
                let (l, h) = (self.unit(l), self.unit(h));
                let s = 2.0 - alpha;
                let lg = |x: f64| {
                    if x.is_infinite() {
                        gamma(s)
                    } else {
                        lower_gamma(s, rho * x)
                    }
                };
                2.0 * c * rho.powf(alpha - 2.0) * (lg(h) - lg(l))
            }
            Kind::Sub(s) => s.m2(self.unit(l), self.unit(h))?,
        };
        Ok(self.weight * s2 * v)
    }

    /// ∫_{|y|<r} y yᵀ ν(dy).
    pub fn second_moment_matrix(&self, r: f64) -> Result<DMatrix<f64>> {
        let d = self.dim;
        if self.is_zero() {
            return Ok(DMatrix::zeros(d, d));
        }
        match &self.kind {
            Kind::Atoms(a) => {
                let (l, h) = intersect(self.lo, self.hi, 0.0, r);
                let mut m = DMatrix::zeros(d, d);
                for at in a.iter() {
                    let rr = norm(&at.location) * self.scale.abs();
                    if rr >= l && rr < h {
                        let y = nalgebra::DVector::from_iterator(
                            d,
                            at.location.iter().map(|v| v * self.scale),
                        );
                        m += &y * y.transpose() * (at.weight * self.weight);
                    }
                }
                Ok(m)
            }
            _ => {
                let m2 = self.second_moment(r)?;
                Ok(DMatrix::identity(d, d) * (m2 / d as f64))
            }
        }
    }

    /// ∫_{r1 ≤ |y| < r2} y ν(dy).
    pub fn first_moment(&self, r1: f64, r2: f64) -> Result<Vec<f64>> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        if self.is_zero() {
            return Ok(out);
        }
        let (l, h) = intersect(self.lo, self.hi, r1, r2);
        if h <= l {
            return Ok(out);
        }
        match &self.kind {
            Kind::Atoms(a) => {
                for at in a.iter() {
                    let rr = norm(&at.location) * self.scale.abs();
                    if rr >= l && rr < h {
                        for (o, y) in out.iter_mut().zip(&at.location) {
                            *o += self.weight * at.weight * self.scale * y;
                        }
                    }
                }
            }
            Kind::Sub(s) => {
                out[0] = self.weight * self.scale * s.m1(self.unit(l), self.unit(h))?;
            }
            _ => {}
        }
        Ok(out)
    }

    /// ν(B(z, r)) for the closed ball; infinite when the ball reaches the
    /// origin of an infinite-activity measure.
    pub fn ball_mass(&self, z: &[f64], r: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let tz = norm(z);
        if let Kind::Atoms(a) = &self.kind {
            let v: f64 = a
                .iter()
                .filter(|at| {
                    let rr = norm(&at.location) * self.scale.abs();
                    if rr < self.lo || rr >= self.hi {
                        return false;
                    }
                    let dist2: f64 = at
                        .location
                        .iter()
                        .zip(z)
                        .map(|(y, zz)| (self.scale * y - zz).powi(2))
                        .sum();
                    dist2.sqrt() <= r
                })
                .map(|a| a.weight)
                .sum();
            return Ok(self.weight * v);
        }
        if tz <= r && self.lo == 0.0 {
            return Ok(f64::INFINITY);
        }
        let v = if self.dim == 1 {
            let mut total = 0.0;
            for (a, b) in annulus_pieces(z[0] - r, z[0] + r, self.lo, self.hi) {
                total += self.interval_mass_1d(a, b)?;
            }
            total
        } else {
            // radial integral of the density against the fraction of each
            // sphere inside the ball
            let d = self.dim;
            let (l, h) = intersect(self.lo, self.hi, (tz - r).max(0.0), tz + r);
            if h <= l {
                return Ok(0.0);
            }
            let area = sphere_area(d);
            let f = |rho: f64| -> f64 {
                let frac = sphere_fraction_in_ball(d, rho, tz, r);
                if frac == 0.0 {
                    return 0.0;
                }
                area * rho.powi(d as i32 - 1) * self.radial_density(rho).unwrap_or(f64::NAN) * frac
            };
            let mut breaks = vec![];
            if r < tz {
                breaks.push(tz);
            }
            quad::integrate(f, l, h, &breaks, &QuadSpec::with_rel(1e-9))?.value
        };
        Ok(v)
    }

    /// Mass of the interval [a, b] (image coordinates, d = 1), which must lie
    /// inside the support annulus on one side of the origin.
    fn interval_mass_1d(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let (ua, ub) = {
            let x = a / self.scale;
            let y = b / self.scale;
            (x.min(y), x.max(y))
        };
        let v = match &self.kind {
            Kind::Zero | Kind::Atoms(_) => 0.0,
            Kind::Stable { .. } | Kind::Truncated { .. } => {
                // symmetric: half the annulus mass
                let (l, h) = (ua.abs().min(ub.abs()), ua.abs().max(ub.abs()));
                let full = self.clone_unrestricted_unit();
                0.5 * full.mass(l, h)?
            }
            Kind::Sub(s) => s.interval_prob_1d(ua, ub)?,
        };
        Ok(self.weight * v)
    }

    fn clone_unrestricted_unit(&self) -> LevyMeasure {
        LevyMeasure::from_kind(self.kind.clone(), self.dim)
    }

    /// Radial density in image coordinates: for d = 1 the sum of both signs,
    /// otherwise the density on the sphere of radius ρ (isotropic shapes).
    pub fn radial_density(&self, rho: f64) -> Result<f64> {
        let d = self.dim as f64;
        let s = self.scale.abs();
        let u = rho / s;
        let jac = self.weight / s.powf(d);
        let v = match &self.kind {
            Kind::Zero | Kind::Atoms(_) => 0.0,
            Kind::Stable { alpha, c, .. } => c * u.powf(-d - alpha),
            Kind::Truncated { alpha, rho: r, c } => 2.0 * c * (-r * u).exp() * u.powf(-1.0 - alpha),
            Kind::Sub(sub) => {
                if sub.dim == 1 {
                    sub.density_1d(u)? + sub.density_1d(-u)?
                } else {
                    sub.density_radial(u)?
                }
            }
        };
        let v = if self.dim == 1 && !matches!(self.kind, Kind::Truncated { .. } | Kind::Sub(_)) {
            2.0 * v
        } else {
            v
        };
        Ok(jac * v)
    }

    /// Density of the absolutely continuous part at y (0 outside the support
    /// annulus).
    pub fn density(&self, y: &[f64]) -> Result<f64> {
        let r = norm(y);
        if r < self.lo || r >= self.hi || r == 0.0 || self.is_zero() {
            return Ok(0.0);
        }
        let d = self.dim as f64;
        let s = self.scale.abs();
        let jac = self.weight / s.powf(d);
        let u = r / s;
        let v = match &self.kind {
            Kind::Zero | Kind::Atoms(_) => 0.0,
            Kind::Stable { alpha, c, .. } => c * u.powf(-d - alpha),
            Kind::Truncated { alpha, rho, c } => c * (-rho * u).exp() * u.powf(-1.0 - alpha),
            Kind::Sub(sub) => {
                if sub.dim == 1 {
                    sub.density_1d(y[0] / self.scale)?
                } else {
                    sub.density_radial(u)?
                }
            }
        };
        Ok(jac * v)
    }

    /// Atoms inside the support annulus, in image coordinates.
    pub fn atom_list(&self) -> Vec<Atom> {
        match &self.kind {
            Kind::Atoms(a) => a
                .iter()
                .filter_map(|at| {
                    let loc: Vec<f64> = at.location.iter().map(|v| v * self.scale).collect();
                    let r = norm(&loc);
                    (r >= self.lo && r < self.hi && self.weight != 0.0).then(|| Atom {
                        location: loc,
                        weight: at.weight * self.weight,
                    })
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Upper bound on ν({|y| ≥ r}) from the dominating envelope, when the
    /// base shape has one with exponential decay.
    pub fn tail_mass_upper_bound(&self, r: f64) -> Option<f64> {
        let env = match &self.kind {
            Kind::Sub(s) => s.env,
            Kind::Truncated { alpha, rho, c } => {
                Envelope::tempered(2.0 * c, *alpha, 1.0, 1.0, *rho)
            }
            _ => return None,
        };
        let l = self.unit(r.max(self.lo));
        let h = self.unit(self.hi);
        let m = env.b1 * env.power_mass(l, h.min(env.rho_star))
            + env.b2 * env.tempered_mass(l.max(env.rho_star), h);
        Some(self.weight * m)
    }

    /// ∫_{r1 ≤ |y| < r2} g(y) ν(dy).
    pub fn integrate<G: Fn(&[f64]) -> f64>(
        &self,
        g: G,
        r1: f64,
        r2: f64,
        opts: &IntegrateOpts,
    ) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let (l, h) = intersect(self.lo, self.hi, r1, r2);
        if h <= l {
            return Ok(0.0);
        }
        if let Kind::Atoms(_) = &self.kind {
            return Ok(self
                .atom_list()
                .iter()
                .filter(|a| {
                    let r = norm(&a.location);
                    r >= l && r < h
                })
                .map(|a| a.weight * g(&a.location))
                .sum());
        }
        if l == 0.0 {
            return Err(Error::Unsupported(
                "density integrals must start away from the origin".into(),
            ));
        }
        let d = self.dim;
        if d > 3 {
            return Err(Error::Unsupported(
                "jump-density integrals are implemented for d ≤ 3".into(),
            ));
        }
        // radial integrand ρ ↦ ∫_{|y|=ρ} g dν
        let h_rad = |rho: f64| -> f64 {
            match d {
                1 => {
                    let p = self.density(&[rho]).unwrap_or(f64::NAN);
                    let n = self.density(&[-rho]).unwrap_or(f64::NAN);
                    let mut s = 0.0;
                    if p != 0.0 {
                        s += p * g(&[rho]);
                    }
                    if n != 0.0 {
                        s += n * g(&[-rho]);
                    }
                    s
                }
                _ => {
                    let dens = self.radial_density(rho).unwrap_or(f64::NAN);
                    if dens == 0.0 {
                        return 0.0;
                    }
                    let avg = sphere_average(d, opts.sphere_points, |w| {
                        let y: Vec<f64> = w.iter().map(|c| c * rho).collect();
                        g(&y)
                    });
                    dens * sphere_area(d) * rho.powi(d as i32 - 1) * avg
                }
            }
        };
        let mut breaks: Vec<f64> = opts.breaks.clone();
        // geometric refinement near the inner radius
        let mut b = l * 2.0;
        while b < h.min(1.0) {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.push(1.0);
        let upper = if h.is_finite() {
            h
        } else if let Some(bound) = opts.bound {
            // cut where the remaining mass times the bound is negligible
            let mut y = breaks.iter().fold(l.max(1.0), |m, v| m.max(*v)) * 2.0;
            let base = self.mass(l, f64::INFINITY)?.max(1e-300);
            loop {
                let rest = self.mass(y, f64::INFINITY)?;
                if rest * bound
                    <= opts
                        .spec
                        .abs_tol
                        .max(opts.spec.rel_tol * 1e-2 * base * bound)
                    || y > 1e12
                {
                    break y;
                }
                y *= 2.0;
            }
        } else {
            f64::INFINITY
        };
        let mut total = 0.0;
        let mut pts: Vec<f64> = breaks
            .into_iter()
            .filter(|p| *p > l && *p < upper)
            .collect();
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        let mut left = l;
        let push_segment = |a: f64, b: f64, total: &mut f64| -> Result<()> {
            if let (Some(w), true) = (opts.wavelength, b.is_finite()) {
                *total += quad::integrate_panels(&h_rad, a, b, w / 2.0, &opts.spec)?.value;
            } else {
                *total += quad::integrate(&h_rad, a, b, &[], &opts.spec)?.value;
            }
            Ok(())
        };
        for p in pts {
            push_segment(left, p, &mut total)?;
            left = p;
        }
        push_segment(left, upper, &mut total)?;
        Ok(total)
    }

    /// Draws from ν restricted to {r1 ≤ |y| < r2}, normalized.
    pub fn sample<R: Rng + ?Sized>(&self, r1: f64, r2: f64, rng: &mut R) -> Result<Vec<f64>> {
        let (l, h) = intersect(self.lo, self.hi, r1, r2);
        if self.is_zero() || h <= l {
            return Err(Error::Numerical {
                step: 0,
                message: "sampling from an empty restriction of the Lévy measure".into(),
            });
        }
        if let Kind::Atoms(_) = &self.kind {
            let atoms: Vec<Atom> = self
                .atom_list()
                .into_iter()
                .filter(|a| {
                    let r = norm(&a.location);
                    r >= l && r < h
                })
                .collect();
            let total: f64 = atoms.iter().map(|a| a.weight).sum();
            let mut u = rng.random::<f64>() * total;
            for a in &atoms {
                if u < a.weight {
                    return Ok(a.location.clone());
                }
                u -= a.weight;
            }
            return Ok(atoms.last().map(|a| a.location.clone()).unwrap_or_default());
        }
        let (ul, uh) = (self.unit(l), self.unit(h));
        let y_unit: Vec<f64> = match &self.kind {
            Kind::Stable { alpha, dim, .. } => {
                let rho = sample_power(*alpha, ul, uh, rng);
                random_direction(*dim, rng)
                    .into_iter()
                    .map(|w| w * rho)
                    .collect()
            }
            Kind::Truncated { alpha, rho, .. } => {
                let r = sample_tempered_power(*alpha, *rho, ul, uh, rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                vec![sign * r]
            }
            Kind::Sub(sub) => sample_subordinated(sub, ul, uh, rng)?,
            Kind::Zero | Kind::Atoms(_) => unreachable!(),
        };
        Ok(y_unit.into_iter().map(|v| v * self.scale).collect())
    }
}

fn truncated_mass(alpha: f64, rho: f64, c: f64, l: f64, h: f64) -> f64 {
    if h <= l {
        return 0.0;
    }
    if l == 0.0 {
        return f64::INFINITY;
    }
    let up = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            upper_gamma(-alpha, rho * x)
        }
    };
    2.0 * c * rho.powf(alpha) * (up(l) - up(h))
}

/// Splits [a, b] ∩ {lo ≤ |y| < hi} into pieces lying on one side of 0.
fn annulus_pieces(a: f64, b: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (pa, pb) = (a.max(lo), b.min(hi));
    if pb > pa && pb > 0.0 {
        out.push((pa.max(0.0), pb));
    }
    let (na, nb) = (a.max(-hi), b.min(-lo));
    if nb > na && na < 0.0 {
        out.push((na, nb.min(0.0)));
    }
    out
}

/// The scalar s when `m = s·I`.
pub(crate) fn scalar_multiple(m: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() != m.ncols() {
        return None;
    }
    let s = m[(0, 0)];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { s } else { 0.0 };
            if m[(i, j)] != want {
                return None;
            }
        }
    }
    Some(s)
}

pub(crate) fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    if d == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Average of g over the unit sphere in d = 2 or 3.
pub(crate) fn sphere_average<G: Fn(&[f64]) -> f64>(d: usize, n: usize, g: G) -> f64 {
    match d {
        2 => {
            let mut s = 0.0;
            for k in 0..n {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                s += g(&[t.cos(), t.sin()]);
            }
            s / n as f64
        }
        3 => {
            let nz = (n / 2).max(4);
            let (z, w) = quad::gauss_legendre(nz);
            let mut s = 0.0;
            for (zi, wi) in z.iter().zip(&w) {
                let rr = (1.0 - zi * zi).sqrt();
                for k in 0..n {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    s += wi * g(&[rr * t.cos(), rr * t.sin(), *zi]) / n as f64;
                }
            }
            s / 2.0
        }
        _ => f64::NAN,
    }
}


/// Exact rejection sampling of a subordinated shape on [ul, uh).
fn sample_subordinated_exact<R: Rng + ?Sized>(
    sub: &Subordinated,
    ul: f64,
    uh: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let unit = LevyMeasure::subordinated(sub.clone());
    for _ in 0..1_000_000 {
        let rho = sub.env.sample(ul, uh, rng);
        let target = unit.radial_density(rho)?;
        let env = sub.env.radial(rho);
        let ratio = if sub.dim == 1 {
            target / env
        } else {
            target * sphere_area(sub.dim) * rho.powi(sub.dim as i32 - 1) / env
        };
        if ratio > 1.0 + 1e-6 {
            return Err(Error::Numerical {
                step: 0,
                message: format!("sampling envelope violated at radius {rho:e}"),
            });
        }
        if rng.random::<f64>() < ratio {
            if sub.dim == 1 {
                let p = sub.density_1d(rho)?;
                let n = sub.density_1d(-rho)?;
                let sign = if rng.random::<f64>() * (p + n) < p {
                    1.0
                } else {
                    -1.0
                };
                return Ok(vec![sign * rho]);
            }
            return Ok(random_direction(sub.dim, rng)
                .into_iter()
                .map(|w| w * rho)
                .collect());
        }
    }
    Err(Error::Numerical {
        step: 0,
        message: "rejection sampler for the Lévy measure stalled".into(),
    })
}

/// Draws from a subordinated shape on [ul, uh) through its cached radial
/// table, falling back to rejection sampling outside the tabulated range.
fn sample_subordinated<R: Rng + ?Sized>(
    sub: &Subordinated,
    ul: f64,
    uh: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let Some(t) = RadialTable::cached(sub) else {
        return sample_subordinated_exact(sub, ul, uh, rng);
    };
    let (a, b) = (ul.max(t.lo()), uh.min(t.hi()));
    let below = if ul < t.lo() {
        sub.mass(ul, t.lo().min(uh))?
    } else {
        0.0
    };
    let (ub, mid) = if b > a {
        (t.upper(b), t.upper(a) - t.upper(b))
    } else {
        (0.0, 0.0)
    };
    if mid <= 0.0 {
        return sample_subordinated_exact(sub, ul, uh, rng);
    }
    if rng.random::<f64>() * (below + mid) < below {
        return sample_subordinated_exact(sub, ul, t.lo().min(uh), rng);
    }
    let (rho, plus) = t.invert(ub + rng.random::<f64>() * mid);
    let rho = rho.clamp(a, b);
    if sub.dim == 1 {
        let sign = if rng.random::<f64>() < plus {
            1.0
        } else {
            -1.0
        };
        return Ok(vec![sign * rho]);
    }
    Ok(random_direction(sub.dim, rng)
        .into_iter()
        .map(|w| w * rho)
        .collect())
}

/// Radial mass density g of a subordinated shape on a log grid, with g
/// interpolated as a power law inside each cell. Cells start at 1e-8 and
/// stop once the remaining mass is negligible next to the mass above 1.
#[derive(Debug)]
struct RadialTable {
    ln_lo: f64,
    h: f64,
    ln_g: Vec<f64>,
    /// mass of [u_k, end of table)
    tail: Vec<f64>,
    /// share of the positive half-line at u_k (d = 1)
    plus: Vec<f64>,
}

impl RadialTable {
    const LO: f64 = 1e-8;
    const HI: f64 = 1e4;
    const STEP: f64 = 0.02;

    fn cached(sub: &Subordinated) -> Option<Arc<RadialTable>> {
        static CACHE: OnceLock<Mutex<HashMap<String, Option<Arc<RadialTable>>>>> = OnceLock::new();
        let key = format!("{:?} {} {:e} {:e}", sub.law, sub.dim, sub.beta, sub.var);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return t.clone();
        }
        let t = RadialTable::build(sub).map(Arc::new);
        cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(key)
            .or_insert(t)
            .clone()
    }

    fn build(sub: &Subordinated) -> Option<RadialTable> {
        let ln_lo = Self::LO.ln();
        let h = Self::STEP;
        let n_max = ((Self::HI.ln() - ln_lo) / h).ceil() as usize + 1;
        let mut t = RadialTable {
            ln_lo,
            h,
            ln_g: Vec::new(),
            tail: Vec::new(),
            plus: Vec::new(),
        };
        let mut cells = Vec::new();
        let mut above_one = 0.0;
        for k in 0..n_max {
            let u = (ln_lo + k as f64 * h).exp();
            let (g, plus) = if sub.dim == 1 {
                let p = sub.density_1d(u).ok()?;
                let n = sub.density_1d(-u).ok()?;
                (p + n, p / (p + n))
            } else {
                let f = sub.density_radial(u).ok()?;
                (f * sphere_area(sub.dim) * u.powi(sub.dim as i32 - 1), 1.0)
            };
            if !(g > 0.0 && g.is_finite()) {
                if k < 2 {
                    return None;
                }
                break;
            }
            t.ln_g.push(g.ln());
            t.plus.push(plus);
            if k == 0 {
                continue;
            }
            let cell = t.cell(k - 1, h);
            cells.push(cell);
            if u > 1.0 {
                above_one += cell;
            }
            if u > 2.0 && cell < 1e-17 * above_one {
                break;
            }
        }
        t.tail = vec![0.0; t.ln_g.len()];
        for k in (0..cells.len()).rev() {
            t.tail[k] = t.tail[k + 1] + cells[k];
        }
        Some(t)
    }

    fn lo(&self) -> f64 {
        Self::LO
    }

    fn hi(&self) -> f64 {
        (self.ln_lo + (self.ln_g.len() - 1) as f64 * self.h).exp()
    }

    fn slope(&self, k: usize) -> f64 {
        (self.ln_g[k + 1] - self.ln_g[k]) / self.h
    }

    /// Mass of [u_k, u_k e^t).
    fn cell(&self, k: usize, t: f64) -> f64 {
        let uk = self.ln_lo + k as f64 * self.h;
        let base = (self.ln_g[k] + uk).exp();
        let e = self.slope(k) + 1.0;
        if e.abs() < 1e-12 {
            base * t
        } else {
            base * (e * t).exp_m1() / e
        }
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let x = (u.ln() - self.ln_lo) / self.h;
        let k = (x.floor().max(0.0) as usize).min(self.ln_g.len() - 2);
        (k, u.ln() - self.ln_lo - k as f64 * self.h)
    }

    /// Mass of [u, end of table).
    fn upper(&self, u: f64) -> f64 {
        let (k, t) = self.locate(u);
        (self.tail[k] - self.cell(k, t)).max(0.0)
    }

    /// Radius u with upper(u) = m, and the positive share there.
    fn invert(&self, m: f64) -> (f64, f64) {
        let k = self
            .tail
            .partition_point(|c| *c >= m)
            .clamp(1, self.tail.len() - 1)
            - 1;
        let uk = self.ln_lo + k as f64 * self.h;
        let base = (self.ln_g[k] + uk).exp();
        let e = self.slope(k) + 1.0;
        let rest = (self.tail[k] - m).max(0.0);
        let t = if e.abs() < 1e-12 {
            rest / base
        } else {
            (rest * e / base).ln_1p() / e
        };
        let t = if t.is_finite() {
            t.clamp(0.0, self.h)
        } else {
            self.h
        };
        let w = t / self.h;
        let plus = (1.0 - w) * self.plus[k] + w * self.plus[k + 1];
        ((uk + t).exp(), plus)
    }
}

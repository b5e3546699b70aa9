//! State-dependent negative definite symbols q(x, ξ) and their
//! characteristics (b(x), Q(x), ν(x, ·)).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::family::ExponentFamily;
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::measure::{scalar_multiple, IntegrateOpts, LevyMeasure};
use crate::quad::QuadSpec;
use crate::report::{CheckReport, ProbeRecord, Verdict};
use crate::special::{dot, norm};

/// How a symbol was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SdeForm,
    StableLike,
    RelativisticStableLike,
    Scaled,
    Raw,
}

/// The Lévy triplet at a fixed state, with cutoff 1_{|y|<1}.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicsView {
    pub drift: Vec<f64>,
    pub diffusion: DMatrix<f64>,
    pub measure: LevyMeasure,
}

impl CharacteristicsView {
    pub fn new(drift: Vec<f64>, diffusion: DMatrix<f64>, measure: LevyMeasure) -> Self {
        CharacteristicsView {
            drift,
            diffusion,
            measure,
        }
    }

    pub fn zero(d: usize) -> Self {
        Self::new(vec![0.0; d], DMatrix::zeros(d, d), LevyMeasure::zero(d))
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    /// The triplet of φ·q.
    pub fn scaled(&self, phi: f64) -> Self {
        CharacteristicsView {
            drift: self.drift.iter().map(|v| v * phi).collect(),
            diffusion: &self.diffusion * phi,
            measure: self.measure.weighted(phi),
        }
    }

    /// Reassembles q(ξ) = -ib·ξ + ½ξ·Qξ + ∫(1 - e^{iy·ξ} + iy·ξ 1_{|y|<1}) ν(dy)
    /// by quadrature. Below |y| < δ the integrand is replaced by its
    /// second-order Taylor term ½(y·ξ)².
    pub fn symbol(&self, xi: &[f64], spec: &QuadSpec) -> Result<Complex64> {
        let d = self.dim();
        if xi.len() != d {
            return Err(Error::Dimension {
                context: "Lévy-Khintchine frequency",
                expected: d,
                got: xi.len(),
            });
        }
        let xv = DVector::from_column_slice(xi);
        let quad_form = (xv.transpose() * &self.diffusion * &xv)[(0, 0)];
        let mut re = 0.5 * quad_form;
        let mut im = -dot(&self.drift, xi);
        let m = &self.measure;
        let r = norm(xi);
        if m.is_zero() || r == 0.0 {
            return Ok(Complex64::new(re, im));
        }
        if m.is_atomic() {
            for a in m.atom_list() {
                let t = dot(&a.location, xi);
                let h = (0.5 * t).sin();
                re += a.weight * 2.0 * h * h;
                let comp = if norm(&a.location) < 1.0 { t } else { 0.0 };
                im += a.weight * (comp - t.sin());
            }
            return Ok(Complex64::new(re, im));
        }
        let delta = (1e-2 / r).min(1e-3);
        let m2 = m.second_moment_matrix(delta)?;
        re += 0.5 * (xv.transpose() * m2 * &xv)[(0, 0)];
        // ν(|y| ≥ 1/|ξ|) sets the size of the jump part
        let tail_tol = spec.rel_tol.max(1e-12) * m.tail_mass(1.0 / r)?.max(1e-2);
        let opts = IntegrateOpts {
            spec: *spec,
            wavelength: Some(2.0 * std::f64::consts::PI / r),
            ..IntegrateOpts::default()
        };
        let mut big_r = (8.0 / r).max(4.0);
        if d == 1 {
            // Beyond R one integration by parts gives the oscillatory tails
            // up to |S'(R)|/ξ², with S, D the even and odd parts of the density.
            let x = xi[0];
            let parts = |y: f64| -> Result<(f64, f64)> {
                let p = m.density(&[y])?;
                let n = m.density(&[-y])?;
                Ok((p + n, p - n))
            };
            let bound = |y: f64| -> Result<f64> {
                let (s0, d0) = parts(y)?;
                let (s1, d1) = parts(1.01 * y)?;
                Ok(2.0 * ((s0 - s1).abs() + (d0 - d1).abs()) / (0.01 * y) / (x * x))
            };
            while bound(big_r)? > tail_tol && big_r < 1e9 {
                big_r *= 2.0;
            }
            let (s_r, d_r) = parts(big_r)?;
            re += m.tail_mass(big_r)? + (x * big_r).sin() * s_r / x;
            im -= (x * big_r).cos() * d_r / x;
        } else {
            // the sphere average of cos(y·ξ) decays like (|y||ξ|)^{-(d-1)/2}
            let bound = |y: f64| -> Result<f64> {
                let decay = if d == 2 {
                    (2.0 / (std::f64::consts::PI * y * r)).sqrt()
                } else {
                    1.0 / (y * r)
                };
                Ok(m.tail_mass(y)? * decay.min(1.0))
            };
            while bound(big_r)? > tail_tol && big_r < 1e9 {
                big_r *= 2.0;
            }
            re += m.tail_mass(big_r)?;
        }
        re += m.integrate(
            |y| {
                let h = (0.5 * dot(y, xi)).sin();
                2.0 * h * h
            },
            delta,
            big_r,
            &opts,
        )?;
        im += m.integrate(
            |y| {
                let t = dot(y, xi);
                t - t.sin()
            },
            delta,
            1.0,
            &opts,
        )?;
        im -= m.integrate(|y| dot(y, xi).sin(), 1.0, big_r, &opts)?;
        Ok(Complex64::new(re, im))
    }
}

type EvalFn = dyn Fn(&[f64], &[f64]) -> Result<Complex64> + Send + Sync;
type CharFn = dyn Fn(&[f64]) -> Result<CharacteristicsView> + Send + Sync;

enum Repr {
    Sde {
        drift: VectorField,
        sigma: MatrixField,
        driver: ExponentFamily,
        base: CharacteristicsView,
    },
    StableLike {
        phi: ScalarField,
        alpha: ScalarField,
    },
    Relativistic {
        kappa: ScalarField,
        mass: ScalarField,
        alpha: ScalarField,
    },
    Scaled {
        phi: ScalarField,
        inner: SymbolField,
    },
    Raw {
        label: String,
        eval: Arc<EvalFn>,
        chars: Option<Arc<CharFn>>,
    },
}

/// A continuous negative definite symbol q(x, ξ) on ℝ^d × ℝ^d.
#[derive(Clone)]
pub struct SymbolField {
    dim: usize,
    repr: Arc<Repr>,
}

impl fmt::Debug for SymbolField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolField(d={}, {})", self.dim, self.describe())
    }
}

fn check_len(context: &'static str, v: &[f64], d: usize) -> Result<()> {
    if v.len() == d {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected: d,
            got: v.len(),
        })
    }
}

fn stable_index(alpha: &ScalarField, x: &[f64]) -> Result<f64> {
    let a = alpha.eval(x);
    if a > 0.0 && a <= 2.0 {
        Ok(a)
    } else {
        Err(config(format!(
            "α(x) = {a} outside (0, 2] at x = {x:?} (α = {})",
            alpha.label()
        )))
    }
}

fn nonnegative(name: &str, f: &ScalarField, x: &[f64]) -> Result<f64> {
    let v = f.eval(x);
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(config(format!(
            "{name}(x) = {v} must be positive at x = {x:?} ({name} = {})",
            f.label()
        )))
    }
}

fn positive_finite(name: &str, f: &ScalarField, x: &[f64]) -> Result<f64> {
    let v = f.eval(x);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config(format!(
            "{name}(x) = {v} must be positive and finite at x = {x:?} ({name} = {})",
            f.label()
        )))
    }
}

/// q(x, ξ) = -iℓ(x)·ξ + ψ(σ(x)ᵀξ).
pub fn make_sde_symbol(
    drift: VectorField,
    sigma: MatrixField,
    driver: ExponentFamily,
) -> Result<SymbolField> {
    driver.validate()?;
    let d = drift.len();
    let (rows, k) = sigma.shape();
    if rows != d {
        return Err(Error::Dimension {
            context: "σ rows vs drift length",
            expected: d,
            got: rows,
        });
    }
    if let Some(kk) = driver.fixed_dim() {
        if kk != k {
            return Err(Error::Dimension {
                context: "σ columns vs driver dimension",
                expected: kk,
                got: k,
            });
        }
    }
    let base = driver.characteristics(k)?;
    Ok(SymbolField {
        dim: d,
        repr: Arc::new(Repr::Sde {
            drift,
            sigma,
            driver,
            base,
        }),
    })
}

/// q(x, ξ) = φ(x)|ξ|^{α(x)}.
pub fn make_stable_like_symbol(
    dim: usize,
    phi: ScalarField,
    alpha: ScalarField,
) -> Result<SymbolField> {
    if dim == 0 {
        return Err(config("dimension must be at least 1"));
    }
    Ok(SymbolField {
        dim,
        repr: Arc::new(Repr::StableLike { phi, alpha }),
    })
}

/// q(x, ξ) = κ(x)[(|ξ|² + m(x)²)^{α(x)/2} - m(x)^{α(x)}].
pub fn make_relativistic_symbol(
    dim: usize,
    kappa: ScalarField,
    mass: ScalarField,
    alpha: ScalarField,
) -> Result<SymbolField> {
    if dim == 0 {
        return Err(config("dimension must be at least 1"));
    }
    Ok(SymbolField {
        dim,
        repr: Arc::new(Repr::Relativistic { kappa, mass, alpha }),
    })
}

/// p(x, ξ) = φ(x) q(x, ξ).
pub fn scale_symbol(phi: ScalarField, q: SymbolField) -> SymbolField {
    SymbolField {
        dim: q.dim,
        repr: Arc::new(Repr::Scaled { phi, inner: q }),
    }
}

impl SymbolField {
    /// A symbol given only by its evaluator; characteristics are optional.
    pub fn raw(
        dim: usize,
        label: impl Into<String>,
        eval: impl Fn(&[f64], &[f64]) -> Result<Complex64> + Send + Sync + 'static,
        chars: Option<Arc<CharFn>>,
    ) -> Self {
        SymbolField {
            dim,
            repr: Arc::new(Repr::Raw {
                label: label.into(),
                eval: Arc::new(eval),
                chars,
            }),
        }
    }

    /// q ≡ 0.
    pub fn zero(dim: usize) -> Self {
        Self::raw(
            dim,
            "0",
            |_, _| Ok(Complex64::new(0.0, 0.0)),
            Some(Arc::new(move |_: &[f64]| {
                Ok(CharacteristicsView::zero(dim))
            })),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        match &*self.repr {
            Repr::Sde { .. } => Provenance::SdeForm,
            Repr::StableLike { .. } => Provenance::StableLike,
            Repr::Relativistic { .. } => Provenance::RelativisticStableLike,
            Repr::Scaled { .. } => Provenance::Scaled,
            Repr::Raw { .. } => Provenance::Raw,
        }
    }

    pub fn describe(&self) -> String {
        match &*self.repr {
            Repr::Sde {
                drift,
                sigma,
                driver,
                ..
            } => {
                let l: Vec<&str> = drift.components().iter().map(|c| c.label()).collect();
                let s: Vec<&str> = sigma.entries().iter().map(|c| c.label()).collect();
                format!("sde(ℓ={l:?}, σ={s:?}, ψ={})", driver.name())
            }
            Repr::StableLike { phi, alpha } => {
                format!("stable_like(φ={}, α={})", phi.label(), alpha.label())
            }
            Repr::Relativistic { kappa, mass, alpha } => format!(
                "relativistic_stable_like(κ={}, m={}, α={})",
                kappa.label(),
                mass.label(),
                alpha.label()
            ),
            Repr::Scaled { phi, inner } => format!("({}) * {}", phi.label(), inner.describe()),
            Repr::Raw { label, .. } => format!("raw({label})"),
        }
    }

    /// q(x, ξ).
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64> {
        check_len("symbol state", x, self.dim)?;
        check_len("symbol frequency", xi, self.dim)?;
        match &*self.repr {
            Repr::Sde {
                drift,
                sigma,
                driver,
                ..
            } => {
                let l = drift.eval(x);
                let s = sigma.eval(x);
                let st = s.transpose() * DVector::from_column_slice(xi);
                let psi = driver.psi(st.as_slice());
                Ok(psi - Complex64::new(0.0, dot(&l, xi)))
            }
            Repr::StableLike { phi, alpha } => {
                let a = stable_index(alpha, x)?;
                let p = nonnegative("φ", phi, x)?;
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                let v = if a == 2.0 { r2 } else { r2.powf(0.5 * a) };
                Ok(Complex64::new(p * v, 0.0))
            }
            Repr::Relativistic { kappa, mass, alpha } => {
                let a = stable_index(alpha, x)?;
                let k = nonnegative("κ", kappa, x)?;
                let m = positive_finite("m", mass, x)?;
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                let v = m.powf(a) * (0.5 * a * (r2 / (m * m)).ln_1p()).exp_m1();
                Ok(Complex64::new(k * v, 0.0))
            }
            Repr::Scaled { phi, inner } => {
                let p = nonnegative("φ", phi, x)?;
                Ok(inner.eval(x, xi)? * p)
            }
            Repr::Raw { eval, .. } => eval(x, xi),
        }
    }

    /// (b(x), Q(x), ν(x, ·)).
    pub fn characteristics(&self, x: &[f64]) -> Result<CharacteristicsView> {
        check_len("characteristics state", x, self.dim)?;
        let d = self.dim;
        match &*self.repr {
            Repr::Sde {
                drift, sigma, base, ..
            } => {
                let l = drift.eval(x);
                let s = sigma.eval(x);
                if l.iter().chain(s.iter()).any(|v| !v.is_finite()) {
                    return Err(config(format!("non-finite SDE coefficients at x = {x:?}")));
                }
                sde_characteristics(&l, &s, base)
            }
            Repr::StableLike { phi, alpha } => {
                let a = stable_index(alpha, x)?;
                let p = nonnegative("φ", phi, x)?;
                let v = ExponentFamily::IsotropicStable { alpha: a }.characteristics(d)?;
                Ok(v.scaled(p))
            }
            Repr::Relativistic { kappa, mass, alpha } => {
                let a = stable_index(alpha, x)?;
                let k = nonnegative("κ", kappa, x)?;
                let m = positive_finite("m", mass, x)?;
                let v =
                    ExponentFamily::RelativisticStable { alpha: a, rho: m }.characteristics(d)?;
                Ok(v.scaled(k))
            }
            Repr::Scaled { phi, inner } => {
                let p = nonnegative("φ", phi, x)?;
                Ok(inner.characteristics(x)?.scaled(p))
            }
            Repr::Raw { chars, label, .. } => match chars {
                Some(c) => c(x),
                None => Err(Error::Unsupported(format!(
                    "symbol raw({label}) exposes no characteristics"
                ))),
            },
        }
    }

    /// Coefficients of an SDE-form symbol.
    pub fn sde_parts(&self) -> Option<(&VectorField, &MatrixField, &ExponentFamily)> {
        match &*self.repr {
            Repr::Sde {
                drift,
                sigma,
                driver,
                ..
            } => Some((drift, sigma, driver)),
            _ => None,
        }
    }

    /// (κ, m, α) of a relativistic stable-like symbol.
    pub fn relativistic_parts(&self) -> Option<(&ScalarField, &ScalarField, &ScalarField)> {
        match &*self.repr {
            Repr::Relativistic { kappa, mass, alpha } => Some((kappa, mass, alpha)),
            _ => None,
        }
    }

    /// α(x) for stable-like and relativistic symbols, looking through scaling.
    pub fn stability_index(&self, x: &[f64]) -> Option<f64> {
        match &*self.repr {
            Repr::StableLike { alpha, .. } | Repr::Relativistic { alpha, .. } => {
                Some(alpha.eval(x))
            }
            Repr::Scaled { inner, .. } => inner.stability_index(x),
            _ => None,
        }
    }
}

/// Pushes the driver triplet forward under y ↦ σy and adds ℓ. The cutoff
/// change contributes -∫ z (1_{|σ⁻¹z|<1} - 1_{|z|<1}) ν_σ(dz) to the drift.
fn sde_characteristics(
    l: &[f64],
    s: &DMatrix<f64>,
    base: &CharacteristicsView,
) -> Result<CharacteristicsView> {
    let d = l.len();
    let bl = DVector::from_column_slice(&base.drift);
    let mut b = DVector::from_column_slice(l) + s * bl;
    let q = s * &base.diffusion * s.transpose();
    let measure = base.measure.linear_image(s)?;
    let nu = &base.measure;
    if nu.is_atomic() {
        for a in nu.atom_list() {
            let y = DVector::from_column_slice(&a.location);
            let z = s * &y;
            let inside_before = y.norm() < 1.0;
            let inside_after = z.norm() < 1.0;
            if inside_before != inside_after {
                let sign = if inside_before { -1.0 } else { 1.0 };
                b += z * (sign * a.weight);
            }
        }
    } else if !measure.is_zero() {
        let sc = scalar_multiple(s)
            .ok_or_else(|| Error::Unsupported("jump densities need σ(x) = s(x)·I".into()))?;
        let a = sc.abs();
        let corr = if a > 1.0 {
            measure
                .first_moment(1.0, a)?
                .iter()
                .map(|v| -v)
                .collect::<Vec<_>>()
        } else if a < 1.0 {
            measure.first_moment(a, 1.0)?
        } else {
            vec![0.0; d]
        };
        b += DVector::from_vec(corr);
    }
    Ok(CharacteristicsView {
        drift: b.as_slice().to_vec(),
        diffusion: q,
        measure,
    })
}

/// Structural audit of q on a list of (x, ξ) probes: q(x, 0) = 0,
/// q(x, -ξ) = conj q(x, ξ), Re q ≥ 0 and |q(x, ξ)| ≤ 2 sup_{|ζ|≤1}|q(x, ζ)|(1 + |ξ|²).
pub fn validate_cndf(q: &SymbolField, grid: &[(Vec<f64>, Vec<f64>)]) -> CheckReport {
    const TOL: f64 = 1e-9;
    let mut zero = CheckReport::new("q(x,0) = 0");
    let mut herm = CheckReport::new("q(x,-ξ) = conj q(x,ξ)");
    let mut repos = CheckReport::new("Re q ≥ 0");
    let mut bound = CheckReport::new("|q| ≤ 2 sup|q(x,ζ)|(1+|ξ|²)");
    let mut errors = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();

    let record = |rep: &mut CheckReport, excess: f64, rec: ProbeRecord| {
        rep.probes.push(rec);
        let i = rep.probes.len() - 1;
        let worse = match rep.worst {
            Some(w) => excess > rep.probes[w].estimate,
            None => true,
        };
        if worse {
            rep.worst = Some(i);
        }
        if excess > 0.0 {
            rep.verdict = Verdict::Fail;
        }
    };

    for (k, (x, xi)) in grid.iter().enumerate() {
        let rx = norm(x);
        let eval = |z: &[f64]| q.eval(x, z);
        let res = (|| -> Result<[f64; 4]> {
            let q0 = eval(&vec![0.0; xi.len()])?;
            let qp = eval(xi)?;
            let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
            let qn = eval(&neg)?;
            let scale = 1.0 + qp.norm();
            let e_zero = q0.norm() - TOL;
            let e_herm = (qn - qp.conj()).norm() - TOL * scale;
            let e_re = -qp.re - TOL * scale;
            // the sup along the ray of ξ already controls |q(ξ)|
            let r = norm(xi);
            let mut sup: f64 = 0.0;
            if r > 0.0 {
                let n = r.ceil().max(1.0);
                let mut fracs: Vec<f64> = (1..=8).map(|j| j as f64 / 8.0 / r).collect();
                fracs.push(1.0 / n);
                for f in fracs {
                    let z: Vec<f64> = xi.iter().map(|v| v * f).collect();
                    sup = sup.max(eval(&z)?.norm());
                }
            }
            let e_bound = qp.norm() - 2.0 * sup * (1.0 + r * r) * (1.0 + TOL) - TOL;
            Ok([e_zero, e_herm, e_re, e_bound])
        })();
        if let Some(a) = q.stability_index(x) {
            alphas.push(a);
        }
        match res {
            Ok([a, b, c, e]) => {
                let rec = |name: &str, v: f64| ProbeRecord::new(rx, k, x, name, v);
                record(&mut zero, a, rec("|q(x,0)| - tol", a));
                record(&mut herm, b, rec("|q(x,-ξ) - conj q(x,ξ)| - tol", b));
                record(&mut repos, c, rec("-Re q - tol", c));
                record(&mut bound, e, rec("|q| - bound", e));
            }
            Err(e) => errors
                .push(ProbeRecord::new(rx, k, x, "evaluation", f64::NAN).with_note(e.to_string())),
        }
    }
    let mut report = CheckReport::combined("validate_cndf", vec![zero, herm, repos, bound]);
    if !errors.is_empty() {
        report.note(format!("{} probes failed to evaluate", errors.len()));
        report.probes = errors;
        report.worst = Some(0);
        report.verdict = Verdict::worst([report.verdict, Verdict::Inconclusive]);
    }
    if grid.is_empty() {
        report.verdict = Verdict::Inconclusive;
        report.note("empty probe grid");
    }
    let has_two = alphas.iter().any(|a| *a == 2.0);
    let has_less = alphas.iter().any(|a| *a < 2.0);
    if has_two && has_less {
        report.note(
            "α(x) reaches 2 on part of the grid: the jump measure vanishes there and Q(x) jumps to 2φ(x)I",
        );
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn sc(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    #[test]
    fn sde_examples() {
        let bm = make_sde_symbol(
            VectorField::zero(2),
            MatrixField::identity(2),
            ExponentFamily::Brownian,
        )
        .unwrap();
        let v = bm.eval(&[3.0, -1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(v, Complex64::new(2.5, 0.0));

        let st = make_sde_symbol(
            VectorField::zero(1),
            MatrixField::scalar(1, sc("x")),
            ExponentFamily::IsotropicStable { alpha: 1.3 },
        )
        .unwrap();
        let v = st.eval(&[-2.0], &[1.5]).unwrap();
        assert!((v.re - 2f64.powf(1.3) * 1.5f64.powf(1.3)).abs() < 1e-12);

        let drift = make_sde_symbol(
            VectorField::new(vec![sc("-x")]),
            MatrixField::scalar(1, ScalarField::constant(0.0)),
            ExponentFamily::IsotropicStable { alpha: 0.7 },
        )
        .unwrap();
        let v = drift.eval(&[2.0], &[3.0]).unwrap();
        assert_eq!(v, Complex64::new(0.0, 6.0));
    }

    #[test]
    fn relativistic_examples() {
        let q = make_relativistic_symbol(1, sc("1"), sc("1"), sc("1")).unwrap();
        assert!((q.eval(&[0.3], &[3f64.sqrt()]).unwrap().re - 1.0).abs() < 1e-14);
        assert_eq!(q.eval(&[0.3], &[0.0]).unwrap().re, 0.0);
        let q = make_relativistic_symbol(1, sc("1"), sc("1e-6"), sc("1.5")).unwrap();
        for xi in [0.5, 1.0, 3.0] {
            assert!((q.eval(&[0.0], &[xi]).unwrap().re - xi.powf(1.5)).abs() < 1e-4);
        }
        let bad = make_relativistic_symbol(1, sc("-1"), sc("1"), sc("1")).unwrap();
        assert!(matches!(bad.eval(&[0.0], &[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn scaling_is_exact() {
        let q = make_stable_like_symbol(1, sc("1"), sc("1.5")).unwrap();
        let p = scale_symbol(sc("2"), q.clone());
        for xi in [0.1, 1.0, 7.0] {
            assert_eq!(
                p.eval(&[1.0], &[xi]).unwrap(),
                q.eval(&[1.0], &[xi]).unwrap() * 2.0
            );
        }
        let a = q
            .characteristics(&[0.0])
            .unwrap()
            .measure
            .tail_mass(0.7)
            .unwrap();
        let b = p
            .characteristics(&[0.0])
            .unwrap()
            .measure
            .tail_mass(0.7)
            .unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-15 * b);
    }

    #[test]
    fn stable_like_alpha_out_of_range() {
        let q = make_stable_like_symbol(1, sc("1"), sc("2.5")).unwrap();
        assert!(matches!(q.eval(&[0.0], &[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn compound_poisson_drift_correction() {
        // unit atom at y = 0.8 pushed forward by σ = 2 leaves the unit ball
        let cp = ExponentFamily::CompoundPoisson {
            rate: 1.5,
            jumps: vec![Atom {
                location: vec![0.8],
                weight: 1.0,
            }],
        };
        let q = make_sde_symbol(VectorField::zero(1), MatrixField::scalar(1, sc("2")), cp).unwrap();
        let ch = q.characteristics(&[0.0]).unwrap();
        // base drift 1.5·0.8 = 1.2, σ b_L = 2.4, correction -1.5·1.6 = -2.4
        assert!(ch.drift[0].abs() < 1e-14);
        for xi in [0.3, 1.0, 2.5] {
            let a = ch.symbol(&[xi], &QuadSpec::default()).unwrap();
            let b = q.eval(&[0.0], &[xi]).unwrap();
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn validate_cndf_catches_planted_defect() {
        let bad = SymbolField::raw(
            1,
            "planted",
            |_, xi| {
                Ok(Complex64::new(
                    if xi[0].abs() > 1.0 { -1.0 } else { 0.0 },
                    0.0,
                ))
            },
            None,
        );
        let grid: Vec<_> = [0.5, 2.0, 3.0]
            .iter()
            .map(|&v| (vec![0.0], vec![v]))
            .collect();
        let r = validate_cndf(&bad, &grid);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.sub_reports[2].verdict, Verdict::Fail);
        assert!(r.sub_reports[2].worst_probe().is_some());

        let bm = make_sde_symbol(
            VectorField::zero(1),
            MatrixField::identity(1),
            ExponentFamily::Brownian,
        )
        .unwrap();
        let grid: Vec<_> = (0..100)
            .map(|i| (vec![i as f64 - 50.0], vec![(i as f64 * 0.37).sin() * 10.0]))
            .collect();
        assert_eq!(validate_cndf(&bm, &grid).verdict, Verdict::Pass);
    }
}

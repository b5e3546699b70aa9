//! Characteristic exponents of the Lévy drivers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::measure::{Atom, LevyMeasure, Subordinated};
use crate::special::{cexpm1, cln1p, dot, pochhammer_diff};
use crate::symbol::CharacteristicsView;

/// A Lévy characteristic exponent ψ with ψ(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExponentFamily {
    /// ψ(ξ) = ½|ξ|²
    Brownian,
    /// ψ(ξ) = |ξ|^α, α ∈ (0, 2]
    IsotropicStable { alpha: f64 },
    /// ψ(ξ) = (|ξ|² + ϱ²)^{α/2} - ϱ^α, α ∈ (0, 2], ϱ > 0
    RelativisticStable { alpha: f64, rho: f64 },
    /// ψ(ξ) = (ξ² + ϱ)_α - (ϱ)_α on the line, α ∈ (0, 1), ϱ > 0
    LampertiStable { alpha: f64, rho: f64 },
    /// Symmetric tempered stable on the line, α ∈ (0, 2) \ {1}, ϱ > 0:
    /// ψ(ξ) = [(ξ² + ϱ²)^{α/2} cos(α arctan(|ξ|/ϱ)) - ϱ^α] / cos(πα/2)
    TruncatedLevy { alpha: f64, rho: f64 },
    /// ψ(ξ) = (κ² + (ξ - iβ)²)^{α/2} - (κ² - β²)^{α/2} on the line,
    /// α ∈ (0, 2), |κ| > |β|
    NormalTemperedStable { alpha: f64, kappa: f64, beta: f64 },
    /// ψ(ξ) = rate Σ p_j (1 - e^{iξ·y_j}); the atom weights are the jump
    /// probabilities p_j.
    CompoundPoisson { rate: f64, jumps: Vec<Atom> },
}

fn check_alpha(name: &str, alpha: f64, lo_open: f64, hi: f64, hi_closed: bool) -> Result<()> {
    let ok = alpha.is_finite() && alpha > lo_open && (alpha < hi || (hi_closed && alpha == hi));
    if ok {
        Ok(())
    } else {
        let bracket = if hi_closed { ']' } else { ')' };
        Err(config(format!(
            "{name}: α = {alpha} outside ({lo_open}, {hi}{bracket}"
        )))
    }
}

fn check_positive(name: &str, what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config(format!("{name}: {what} = {v} must be positive")))
    }
}

impl ExponentFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ExponentFamily::Brownian => "brownian",
            ExponentFamily::IsotropicStable { .. } => "isotropic_stable",
            ExponentFamily::RelativisticStable { .. } => "relativistic_stable",
            ExponentFamily::LampertiStable { .. } => "lamperti_stable",
            ExponentFamily::TruncatedLevy { .. } => "truncated_levy",
            ExponentFamily::NormalTemperedStable { .. } => "normal_tempered_stable",
            ExponentFamily::CompoundPoisson { .. } => "compound_poisson",
        }
    }

    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let n = self.name();
        match self {
            ExponentFamily::Brownian => Ok(()),
            ExponentFamily::IsotropicStable { alpha } => check_alpha(n, *alpha, 0.0, 2.0, true),
            ExponentFamily::RelativisticStable { alpha, rho } => {
                check_alpha(n, *alpha, 0.0, 2.0, true)?;
                check_positive(n, "ϱ", *rho)
            }
            ExponentFamily::LampertiStable { alpha, rho } => {
                check_alpha(n, *alpha, 0.0, 1.0, false)?;
                check_positive(n, "ϱ", *rho)
            }
            ExponentFamily::TruncatedLevy { alpha, rho } => {
                check_alpha(n, *alpha, 0.0, 2.0, false)?;
                if *alpha == 1.0 {
                    return Err(config(format!("{n}: α = 1 is excluded")));
                }
                check_positive(n, "ϱ", *rho)
            }
            ExponentFamily::NormalTemperedStable { alpha, kappa, beta } => {
                check_alpha(n, *alpha, 0.0, 2.0, false)?;
                if !(kappa.is_finite() && beta.is_finite() && kappa.abs() > beta.abs()) {
                    return Err(config(format!(
                        "{n}: requires |κ| > |β|, got κ = {kappa}, β = {beta}"
                    )));
                }
                Ok(())
            }
            ExponentFamily::CompoundPoisson { rate, jumps } => {
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(config(format!("{n}: rate = {rate} must be nonnegative")));
                }
                if jumps.is_empty() {
                    return Err(config(format!("{n}: at least one jump is required")));
                }
                let d = jumps[0].location.len();
                let mut total = 0.0;
                for j in jumps {
                    if j.location.len() != d || d == 0 {
                        return Err(config(format!("{n}: jumps must share one dimension")));
                    }
                    if !(j.weight >= 0.0) || j.location.iter().any(|v| !v.is_finite()) {
                        return Err(config(format!("{n}: invalid jump {j:?}")));
                    }
                    total += j.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(config(format!(
                        "{n}: jump probabilities sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The dimension the family is tied to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            ExponentFamily::LampertiStable { .. }
            | ExponentFamily::TruncatedLevy { .. }
            | ExponentFamily::NormalTemperedStable { .. } => Some(1),
            ExponentFamily::CompoundPoisson { jumps, .. } => {
                jumps.first().map(|j| j.location.len())
            }
            _ => None,
        }
    }

    pub(crate) fn check_dim(&self, k: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(d) if d != k => Err(Error::Dimension {
                context: "exponent argument",
                expected: d,
                got: k,
            }),
            _ if k == 0 => Err(config("dimension must be at least 1")),
            _ => Ok(()),
        }
    }

    /// ψ(ξ). Validation is left to [`eval_exponent`]; this is the hot path.
    pub fn psi(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        match self {
            ExponentFamily::Brownian => Complex64::new(0.5 * r2, 0.0),
            ExponentFamily::IsotropicStable { alpha } => Complex64::new(
                if *alpha == 2.0 {
                    r2
                } else {
                    r2.powf(alpha / 2.0)
                },
                0.0,
            ),
            ExponentFamily::RelativisticStable { alpha, rho } => {
                let v = rho.powf(*alpha) * ((alpha / 2.0) * (r2 / (rho * rho)).ln_1p()).exp_m1();
                Complex64::new(v, 0.0)
            }
            ExponentFamily::LampertiStable { alpha, rho } => {
                Complex64::new(pochhammer_diff(*rho, r2, *alpha), 0.0)
            }
            ExponentFamily::TruncatedLevy { alpha, rho } => {
                // Re[(ϱ + i|ξ|)^α - ϱ^α] = Re ϱ^α expm1(α ln(1 + i|ξ|/ϱ))
                let w = Complex64::new(0.0, r2.sqrt() / rho);
                let v = rho.powf(*alpha) * cexpm1(cln1p(w) * *alpha).re;
                Complex64::new(v / (std::f64::consts::FRAC_PI_2 * alpha).cos(), 0.0)
            }
            ExponentFamily::NormalTemperedStable { alpha, kappa, beta } => {
                let theta = kappa * kappa - beta * beta;
                let x = xi[0];
                let w = Complex64::new(x * x, -2.0 * beta * x) / theta;
                cexpm1(cln1p(w) * (alpha / 2.0)) * theta.powf(alpha / 2.0)
            }
            ExponentFamily::CompoundPoisson { rate, jumps } => {
                let mut s = Complex64::new(0.0, 0.0);
                for j in jumps {
                    let t = dot(&j.location, xi);
                    // 1 - e^{it} = 2 sin²(t/2) - i sin t
                    let h = (0.5 * t).sin();
                    s += Complex64::new(2.0 * h * h, -t.sin()) * j.weight;
                }
                s * *rate
            }
        }
    }

    /// Lévy triplet (b, Q, ν) on ℝ^k with the cutoff 1_{|y|<1}.
    pub fn characteristics(&self, k: usize) -> Result<CharacteristicsView> {
        self.validate()?;
        self.check_dim(k)?;
        let zero_b = vec![0.0; k];
        let zero_q = DMatrix::zeros(k, k);
        let view = match self {
            ExponentFamily::Brownian => {
                CharacteristicsView::new(zero_b, DMatrix::identity(k, k), LevyMeasure::zero(k))
            }
            ExponentFamily::IsotropicStable { alpha } => {
                if *alpha == 2.0 {
                    CharacteristicsView::new(
                        zero_b,
                        DMatrix::identity(k, k) * 2.0,
                        LevyMeasure::zero(k),
                    )
                } else {
                    CharacteristicsView::new(zero_b, zero_q, LevyMeasure::stable(k, *alpha))
                }
            }
            ExponentFamily::RelativisticStable { alpha, rho } => {
                if *alpha == 2.0 {
                    CharacteristicsView::new(
                        zero_b,
                        DMatrix::identity(k, k) * 2.0,
                        LevyMeasure::zero(k),
                    )
                } else {
                    let m = LevyMeasure::subordinated(Subordinated::relativistic(*alpha, k))
                        .scaled(1.0 / rho)
                        .weighted(rho.powf(*alpha));
                    CharacteristicsView::new(zero_b, zero_q, m)
                }
            }
            ExponentFamily::LampertiStable { alpha, rho } => CharacteristicsView::new(
                zero_b,
                zero_q,
                LevyMeasure::subordinated(Subordinated::lamperti(*alpha, *rho)),
            ),
            ExponentFamily::TruncatedLevy { alpha, rho } => {
                CharacteristicsView::new(zero_b, zero_q, LevyMeasure::truncated(*alpha, *rho))
            }
            ExponentFamily::NormalTemperedStable { alpha, kappa, beta } => {
                let m =
                    LevyMeasure::subordinated(Subordinated::normal_tempered(*alpha, *kappa, *beta));
                let b = m.first_moment(0.0, 1.0)?;
                CharacteristicsView::new(b, zero_q, m)
            }
            ExponentFamily::CompoundPoisson { rate, jumps } => {
                let atoms: Vec<Atom> = jumps
                    .iter()
                    .map(|j| Atom {
                        location: j.location.clone(),
                        weight: j.weight * rate,
                    })
                    .collect();
                let m = LevyMeasure::atoms(k, atoms);
                let b = m.first_moment(0.0, 1.0)?;
                CharacteristicsView::new(b, zero_q, m)
            }
        };
        Ok(view)
    }

    /// Whether [`crate::simulator::sample_levy_increment`] draws exactly.
    pub fn has_exact_sampler(&self) -> bool {
        matches!(
            self,
            ExponentFamily::Brownian
                | ExponentFamily::IsotropicStable { .. }
                | ExponentFamily::CompoundPoisson { .. }
        )
    }
}

/// ψ(ξ) with parameter and dimension validation.
pub fn eval_exponent(family: &ExponentFamily, xi: &[f64]) -> Result<Complex64> {
    family.validate()?;
    family.check_dim(xi.len())?;
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(config(format!("non-finite frequency {xi:?}")));
    }
    Ok(family.psi(xi))
}

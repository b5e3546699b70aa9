//! Numerical audits of growth, mapping and boundedness conditions on a
//! symbol, decided by log-log trend fits along a geometric radius grid.

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::field::ScalarField;
use crate::measure::random_direction;
use crate::quad::{self, QuadSpec};
use crate::report::{CheckReport, ProbeRecord, Verdict};
use crate::special::{norm, ols_slope};
use crate::symbol::SymbolField;

/// Slope tolerance for the log-log trend fits.
pub const SLOPE_TOL: f64 = 0.1;
/// Estimates at or below this are treated as zero.
pub const ABS_ZERO: f64 = 1e-9;

const DIRECTION_SEED: u64 = 0x5eed_d1ec;
const XI_SEED: u64 = 0x5eed_0f5e;

/// Where to probe a symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSchedule {
    pub dim: usize,
    /// |x| values, strictly increasing.
    pub radii: Vec<f64>,
    /// Unit vectors; every radius is probed along each of them.
    pub directions: Vec<Vec<f64>>,
    /// Directions on each ξ-sphere in d ≥ 2.
    pub xi_samples: usize,
}

impl ProbeSchedule {
    /// Radii 2^k for k = 0..=k_max; ±e₁ in d = 1, otherwise `n_dirs`
    /// pseudo-random directions from a fixed seed.
    pub fn geometric(dim: usize, k_max: u32, n_dirs: usize, xi_samples: usize) -> Self {
        let radii = (0..=k_max).map(|k| 2f64.powi(k as i32)).collect();
        ProbeSchedule {
            dim,
            radii,
            directions: default_directions(dim, n_dirs),
            xi_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(config("schedule dimension must be at least 1"));
        }
        if self.radii.is_empty() {
            return Err(config("schedule needs at least one radius"));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(config("schedule radii must be positive and finite"));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config("schedule radii must be strictly increasing"));
        }
        if self.dim >= 2 && self.directions.len() < 2 {
            return Err(config("at least 2 directions are required in d ≥ 2"));
        }
        if self.directions.is_empty() {
            return Err(config("schedule needs at least one direction"));
        }
        for d in &self.directions {
            if d.len() != self.dim {
                return Err(Error::Dimension {
                    context: "schedule direction",
                    expected: self.dim,
                    got: d.len(),
                });
            }
            if (norm(d) - 1.0).abs() > 1e-9 {
                return Err(config(format!("direction {d:?} is not a unit vector")));
            }
        }
        if self.xi_samples == 0 {
            return Err(config("xi_samples must be positive"));
        }
        Ok(())
    }

    /// (radius, direction index, x) in schedule order.
    pub fn probes(&self) -> Vec<(f64, usize, Vec<f64>)> {
        let mut v = Vec::with_capacity(self.radii.len() * self.directions.len());
        for &r in &self.radii {
            for (j, d) in self.directions.iter().enumerate() {
                v.push((r, j, d.iter().map(|c| c * r).collect()));
            }
        }
        v
    }
}

pub fn default_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
    (0..n.max(2))
        .map(|_| random_direction(dim, &mut rng))
        .collect()
}

/// Frequencies on the spheres of radius `rho` and `rho/2`. The list for `n`
/// samples is a prefix of the list for any larger `n`.
pub fn xi_probes(dim: usize, rho: f64, n: usize) -> Vec<Vec<f64>> {
    let dirs: Vec<Vec<f64>> = if dim == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(XI_SEED);
        (0..n).map(|_| random_direction(dim, &mut rng)).collect()
    };
    let mut out = Vec::with_capacity(2 * dirs.len());
    for d in &dirs {
        for s in [rho, 0.5 * rho] {
            out.push(d.iter().map(|c| c * s).collect());
        }
    }
    out
}

/// Which limit statement a sequence of estimates is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    /// limsup < ∞
    Bounded,
    /// → 0
    Vanishing,
}

/// Trend statistics of per-radius maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    pub slope: f64,
    /// max beyond the first quartile of radii
    pub fitted: f64,
    pub global: f64,
    pub first_tail: f64,
    pub last: f64,
}

/// Fits the log-log slope over the radii beyond the first quartile.
pub fn fit_trend(points: &[(f64, f64)]) -> Option<Trend> {
    if points.len() < 3 {
        return None;
    }
    let start = points.len() / 4;
    let tail = &points[start..];
    let lx: Vec<f64> = tail.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = tail.iter().map(|p| p.1.max(1e-300).ln()).collect();
    let slope = if tail.iter().any(|p| p.1.is_infinite()) {
        f64::INFINITY
    } else {
        ols_slope(&lx, &ly)
    };
    Some(Trend {
        slope,
        fitted: tail.iter().map(|p| p.1).fold(0.0, f64::max),
        global: points.iter().map(|p| p.1).fold(0.0, f64::max),
        first_tail: tail[0].1,
        last: tail[tail.len() - 1].1,
    })
}

/// The verdict of a limit statement given its trend.
pub fn decide(limit: Limit, t: &Trend) -> Verdict {
    if t.slope.is_nan() || t.fitted.is_nan() {
        return Verdict::Inconclusive;
    }
    match limit {
        Limit::Bounded => {
            if t.fitted.is_infinite() {
                Verdict::Fail
            } else if t.fitted <= ABS_ZERO || t.slope <= SLOPE_TOL {
                Verdict::Pass
            } else if t.last >= 2.0 * t.first_tail {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            }
        }
        Limit::Vanishing => {
            if t.fitted <= ABS_ZERO || (t.slope <= -SLOPE_TOL && t.last <= t.first_tail) {
                Verdict::Pass
            } else if t.slope >= SLOPE_TOL || t.last >= 0.5 * t.first_tail {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            }
        }
    }
}

/// Per-radius maxima over directions, skipping unusable records.
fn radius_maxima(radii: &[f64], probes: &[ProbeRecord]) -> Vec<(f64, f64)> {
    radii
        .iter()
        .filter_map(|&r| {
            let vals: Vec<f64> = probes
                .iter()
                .filter(|p| p.radius == r && p.note.is_none())
                .map(|p| p.estimate)
                .collect();
            if vals.is_empty() {
                None
            } else if vals.iter().any(|v| v.is_nan()) {
                Some((r, f64::NAN))
            } else {
                Some((r, vals.into_iter().fold(0.0, f64::max)))
            }
        })
        .collect()
}

/// Fills trend, constants, worst probe and verdict from recorded probes.
fn finish(mut rep: CheckReport, radii: &[f64], limit: Limit) -> CheckReport {
    let errored = rep.probes.iter().any(|p| p.note.is_some());
    let pts = radius_maxima(radii, &rep.probes);
    rep.worst = rep
        .probes
        .iter()
        .enumerate()
        .filter(|(_, p)| p.note.is_none())
        .max_by(|a, b| a.1.estimate.total_cmp(&b.1.estimate))
        .map(|(i, _)| i);
    let verdict = match fit_trend(&pts) {
        Some(t) => {
            rep.trend = Some(t.slope);
            rep.fitted_constant = Some(t.fitted);
            rep.global_constant = Some(t.global);
            decide(limit, &t)
        }
        None => {
            rep.note("fewer than 3 usable radii");
            Verdict::Inconclusive
        }
    };
    rep.verdict = if errored && verdict != Verdict::Fail {
        rep.note("some probes failed to evaluate");
        Verdict::Inconclusive
    } else {
        verdict
    };
    if rep.verdict == Verdict::Fail && rep.worst.is_none() {
        rep.worst = rep.probes.iter().position(|_| true);
    }
    rep
}

fn error_record(r: f64, j: usize, x: &[f64], quantity: &str, e: &Error) -> ProbeRecord {
    ProbeRecord::new(r, j, x, quantity, f64::NAN).with_note(e.to_string())
}

/// sup_{|ξ| ≤ |x|⁻¹} |q(x, ξ)|, sampled on the spheres |ξ| = |x|⁻¹ and |x|⁻¹/2.
pub fn check_growth_g(q: &SymbolField, sched: &ProbeSchedule) -> Result<CheckReport> {
    sched.validate()?;
    check_dim(q, sched)?;
    let probes = sched.probes();
    let recs: Vec<ProbeRecord> = probes
        .par_iter()
        .map(|(r, j, x)| {
            let mut sup: f64 = 0.0;
            for xi in xi_probes(q.dim(), 1.0 / r, sched.xi_samples) {
                match q.eval(x, &xi) {
                    Ok(v) => {
                        sup = sup.max(if v.norm().is_nan() {
                            f64::NAN
                        } else {
                            v.norm()
                        })
                    }
                    Err(e) => return error_record(*r, *j, x, "sup|q|", &e),
                }
            }
            ProbeRecord::new(*r, *j, x, "sup|q|", sup)
        })
        .collect();
    let mut rep = CheckReport::new("growth_G");
    rep.probes = recs;
    Ok(finish(rep, &sched.radii, Limit::Bounded))
}

fn spectral_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// The three characteristic bounds, normalized by their growth rates:
/// (i) |b(x) + ∫_{1≤|y|<|x|/2} y ν(x,dy)| / (1+|x|),
/// (ii) (|Q(x)| + ∫_{|y|≤|x|/2} |y|² ν(x,dy)) / (1+|x|²),
/// (iii) ν(x, {|y| ≥ 1 ∨ |x|/2}).
pub fn check_characteristics_growth(q: &SymbolField, sched: &ProbeSchedule) -> Result<CheckReport> {
    sched.validate()?;
    check_dim(q, sched)?;
    let probes = sched.probes();
    let rows: Vec<[ProbeRecord; 3]> = probes
        .par_iter()
        .map(|(r, j, x)| {
            let names = ["(i) drift", "(ii) diffusion", "(iii) tail"];
            let res = (|| -> Result<[f64; 3]> {
                let ch = q.characteristics(x)?;
                let half = 0.5 * r;
                let mut b = ch.drift.clone();
                if half > 1.0 {
                    for (bi, mi) in b.iter_mut().zip(ch.measure.first_moment(1.0, half)?) {
                        *bi += mi;
                    }
                }
                let i = norm(&b) / (1.0 + r);
                let ii = (spectral_norm(&ch.diffusion) + ch.measure.second_moment(half)?)
                    / (1.0 + r * r);
                let iii = ch.measure.tail_mass(half.max(1.0))?;
                Ok([i, ii, iii])
            })();
            match res {
                Ok(v) => [0, 1, 2].map(|k| ProbeRecord::new(*r, *j, x, names[k], v[k])),
                Err(e) => [0, 1, 2].map(|k| error_record(*r, *j, x, names[k], &e)),
            }
        })
        .collect();
    let mut parts = Vec::new();
    for (k, name) in ["(i) drift", "(ii) diffusion", "(iii) tail"]
        .iter()
        .enumerate()
    {
        let mut rep = CheckReport::new(*name);
        rep.probes = rows.iter().map(|row| row[k].clone()).collect();
        parts.push(finish(rep, &sched.radii, Limit::Bounded));
    }
    Ok(CheckReport::combined("characteristics_growth", parts))
}

/// Whether the growth condition and the characteristic bounds agree.
pub fn check_equivalence_p3(q: &SymbolField, sched: &ProbeSchedule) -> Result<CheckReport> {
    let g = check_growth_g(q, sched)?;
    let c = check_characteristics_growth(q, sched)?;
    let verdict = match (g.verdict, c.verdict) {
        (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
        (a, b) if a == b => Verdict::Pass,
        _ => Verdict::Fail,
    };
    let mut rep = CheckReport::new("growth_equivalence");
    rep.note(format!(
        "growth_G: {}, characteristics_growth: {}",
        g.verdict.as_str(),
        c.verdict.as_str()
    ));
    rep.sub_reports = vec![g, c];
    rep.verdict = verdict;
    Ok(rep)
}

/// ν(x, B(-x, r)) → 0 for each r, with sup_{|ξ|≤|x|⁻¹} |Re q(x, ξ)| → 0
/// reported alongside as the sufficient condition.
pub fn check_mapping_property(
    q: &SymbolField,
    sched: &ProbeSchedule,
    r_list: &[f64],
) -> Result<CheckReport> {
    sched.validate()?;
    check_dim(q, sched)?;
    if r_list.is_empty() || r_list.iter().any(|r| !(*r > 0.0)) {
        return Err(config("mapping check needs positive ball radii"));
    }
    let probes = sched.probes();
    let mut parts = Vec::new();
    for &rb in r_list {
        let recs: Vec<ProbeRecord> = probes
            .par_iter()
            .filter(|(r, _, _)| *r > rb)
            .map(|(r, j, x)| {
                let name = format!("ν(x,B(-x,{rb}))");
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                match q
                    .characteristics(x)
                    .and_then(|ch| ch.measure.ball_mass(&neg, rb))
                {
                    Ok(m) => ProbeRecord::new(*r, *j, x, name, m),
                    Err(e) => error_record(*r, *j, x, &name, &e),
                }
            })
            .collect();
        let mut rep = CheckReport::new(format!("ball_mass(r={rb})"));
        rep.probes = recs;
        parts.push(finish(rep, &sched.radii, Limit::Vanishing));
    }
    let mut rep = CheckReport::combined("mapping_property", parts);

    let recs: Vec<ProbeRecord> = probes
        .par_iter()
        .map(|(r, j, x)| {
            let mut sup: f64 = 0.0;
            for xi in xi_probes(q.dim(), 1.0 / r, sched.xi_samples) {
                match q.eval(x, &xi) {
                    Ok(v) => sup = sup.max(v.re.abs()),
                    Err(e) => return error_record(*r, *j, x, "sup|Re q|", &e),
                }
            }
            ProbeRecord::new(*r, *j, x, "sup|Re q|", sup)
        })
        .collect();
    let mut secondary = CheckReport::new("sufficient: sup|Re q| → 0 (informational)");
    secondary.probes = recs;
    let secondary = finish(secondary, &sched.radii, Limit::Vanishing);
    rep.note(format!(
        "sufficient Re q condition: {}",
        secondary.verdict.as_str()
    ));
    rep.sub_reports.push(secondary);
    Ok(rep)
}

/// The four suprema sup|q(x,0)|, sup|b(x)|, sup|Q(x)|, sup ∫ 1∧|y|² ν(x,dy)
/// over grids on the balls |x| ≤ R; pass iff all are finite.
pub fn check_local_boundedness(q: &SymbolField, compacts: &[f64]) -> Result<CheckReport> {
    if compacts.is_empty() || compacts.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(config("local boundedness needs positive compact radii"));
    }
    let d = q.dim();
    let mut parts = Vec::new();
    for &big_r in compacts {
        let grid = ball_grid(d, big_r);
        let names = ["sup|q(x,0)|", "sup|b(x)|", "sup|Q(x)|", "sup∫1∧|y|²ν(x,dy)"];
        type Cell = std::result::Result<f64, String>;
        let rows: Vec<[Cell; 4]> = grid
            .par_iter()
            .map(|x| {
                let s = |e: Error| e.to_string();
                let zero = vec![0.0; d];
                let q0 = q.eval(x, &zero).map(|v| v.norm()).map_err(s);
                match q.characteristics(x) {
                    Ok(ch) => [
                        q0,
                        Ok(norm(&ch.drift)),
                        Ok(spectral_norm(&ch.diffusion)),
                        ch.measure
                            .second_moment(1.0)
                            .and_then(|a| Ok(a + ch.measure.tail_mass(1.0)?))
                            .map_err(s),
                    ],
                    Err(e) => {
                        let m = e.to_string();
                        [q0, Err(m.clone()), Err(m.clone()), Err(m)]
                    }
                }
            })
            .collect();
        let mut rep = CheckReport::new(format!("local_boundedness(|x| ≤ {big_r})"));
        // (sup value, grid index) per quantity; non-finite values dominate
        let key = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
        let mut best: [Option<(f64, usize)>; 4] = [None; 4];
        let mut errors = 0;
        for (i, row) in rows.iter().enumerate() {
            for k in 0..4 {
                match &row[k] {
                    Ok(v) => {
                        if best[k].is_none_or(|(b, _)| key(*v) > key(b)) {
                            best[k] = Some((*v, i));
                        }
                    }
                    Err(msg) => {
                        errors += 1;
                        let x = &grid[i];
                        rep.probes.push(
                            ProbeRecord::new(norm(x), 0, x, names[k], f64::NAN)
                                .with_note(msg.clone()),
                        );
                    }
                }
            }
        }
        let mut sups = [0.0f64; 4];
        for k in 0..4 {
            if let Some((v, i)) = best[k] {
                sups[k] = key(v);
                let x = &grid[i];
                rep.probes
                    .push(ProbeRecord::new(norm(x), 0, x, names[k], v));
            }
        }
        let infinite = sups.iter().any(|s| s.is_infinite());
        rep.global_constant = Some(sups.iter().cloned().fold(0.0, f64::max));
        rep.verdict = if infinite {
            Verdict::Fail
        } else if errors > 0 {
            rep.note(format!("{errors} evaluations failed on the grid"));
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        rep.worst = rep
            .probes
            .iter()
            .enumerate()
            .filter(|(_, p)| p.note.is_none())
            .max_by(|a, b| key(a.1.estimate).total_cmp(&key(b.1.estimate)))
            .map(|(i, _)| i);
        for k in 0..4 {
            rep.note(format!("{} = {:e}", names[k], sups[k]));
        }
        parts.push(rep);
    }
    Ok(CheckReport::combined("local_boundedness", parts))
}

/// Grid on the closed ball of radius R: step 1/16 on the line (so integers
/// and dyadic points are hit), shells × directions otherwise.
fn ball_grid(d: usize, big_r: f64) -> Vec<Vec<f64>> {
    if d == 1 {
        let n = (big_r * 16.0).floor() as i64;
        let mut v: Vec<Vec<f64>> = (-n..=n).map(|k| vec![k as f64 / 16.0]).collect();
        if (n as f64) / 16.0 < big_r {
            v.push(vec![-big_r]);
            v.push(vec![big_r]);
        }
        return v;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED ^ 0xba11);
    let dirs: Vec<Vec<f64>> = (0..16 * d)
        .map(|k| {
            if k < 2 * d {
                let mut e = vec![0.0; d];
                e[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
                e
            } else {
                random_direction(d, &mut rng)
            }
        })
        .collect();
    let shells = (big_r * 8.0).ceil() as usize;
    let mut v = vec![vec![0.0; d]];
    for s in 1..=shells {
        let rho = big_r * s as f64 / shells as f64;
        for w in &dirs {
            v.push(w.iter().map(|c| c * rho).collect());
        }
    }
    v
}

fn check_dim(q: &SymbolField, sched: &ProbeSchedule) -> Result<()> {
    if q.dim() != sched.dim {
        return Err(Error::Dimension {
            context: "probe schedule vs symbol",
            expected: q.dim(),
            got: sched.dim,
        });
    }
    Ok(())
}

/// g(η) = ½ ∫_0^∞ (2πr)^{-d/2} exp(-|η|²/(2r) - r/2) dr by quadrature.
pub fn g_kernel(d: usize, eta: f64, spec: &QuadSpec) -> Result<f64> {
    let h = d as f64 / 2.0;
    let e2 = eta * eta;
    let f = |r: f64| -> f64 {
        let l = -h * (2.0 * std::f64::consts::PI * r).ln() - e2 / (2.0 * r) - 0.5 * r;
        l.exp()
    };
    // the integrand peaks near r = |η| for large |η|
    let scale = eta.max(1e-8);
    let v = quad::exp_sinh(f, 0.0, scale, spec).map_err(|e| match e {
        Error::Quadrature {
            estimate, error, ..
        } => Error::Quadrature {
            integral: format!("inner r-integral of g at |η| = {eta}"),
            estimate,
            error,
        },
        other => other,
    })?;
    Ok(0.5 * v.value)
}

/// | |z|²/(1+|z|²) - ∫ (1 - cos(η·z)) g(η) dη | with g by quadrature, for
/// d ∈ {1, 3} where the angular integral is elementary.
pub fn g_identity_residual(z: &[f64], spec: &QuadSpec) -> Result<f64> {
    let d = z.len();
    let r = norm(z);
    let lhs = r * r / (1.0 + r * r);
    if r == 0.0 {
        return Ok(lhs);
    }
    // g decays like e^{-|η|}
    let cut = 60.0;
    let panel = (std::f64::consts::PI / r).min(1.0);
    let inner_spec = QuadSpec {
        rel_tol: spec.rel_tol.min(1e-13),
        ..*spec
    };
    // panels far out carry e^{-η}-small mass; judge them absolutely
    let outer_spec = QuadSpec {
        abs_tol: spec.abs_tol.max(spec.rel_tol * 1e-3),
        ..*spec
    };
    let outer = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        quad::integrate_panels(f, 0.0, cut, panel, &outer_spec)
            .map(|e| e.value)
            .map_err(|e| match e {
                Error::Quadrature {
                    estimate, error, ..
                } => Error::Quadrature {
                    integral: "outer η-integral of the g identity".into(),
                    estimate,
                    error,
                },
                other => other,
            })
    };
    let failure = std::cell::RefCell::new(None);
    let g = |eta: f64| -> f64 {
        match g_kernel(d, eta, &inner_spec) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let rhs = match d {
        1 => outer(&|eta: f64| {
            let s = (0.5 * eta * r).sin();
            2.0 * 2.0 * s * s * g(eta)
        }),
        3 => outer(&|rho: f64| {
            let t = rho * r;
            let one_minus_sinc = if t < 1e-3 {
                t * t / 6.0 - t.powi(4) / 120.0
            } else {
                1.0 - t.sin() / t
            };
            4.0 * std::f64::consts::PI * rho * rho * one_minus_sinc * g(rho)
        }),
        _ => {
            return Err(Error::Unsupported(format!(
                "the g identity is evaluated for d ∈ {{1, 3}}, got d = {d}"
            )))
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((lhs - rhs?).abs())
}

/// Relativistic stable-like conditions:
/// κ(x)/(|x|² m(x)^{2-α(x)}) bounded on |x| ≥ 1 and κ(x) m(x) e^{-|x|m(x)/4} → 0,
/// both evaluated in log space.
pub fn check_relativistic_conditions(
    kappa: &ScalarField,
    mass: &ScalarField,
    alpha: &ScalarField,
    sched: &ProbeSchedule,
) -> Result<CheckReport> {
    sched.validate()?;
    let mut bounded = LogProbes::new("κ/(|x|² m^{2-α}) bounded");
    let mut vanishing = LogProbes::new("κ m e^{-|x|m/4} → 0");
    for (r, j, x) in sched.probes() {
        if r < 1.0 {
            continue;
        }
        let k = kappa.eval(&x);
        let m = mass.eval(&x);
        let a = alpha.eval(&x);
        if !(k > 0.0 && m > 0.0 && a > 0.0 && a <= 2.0) {
            let msg = format!("κ = {k}, m = {m}, α = {a} outside their ranges");
            bounded.error(r, j, &x, "ratio", &msg);
            vanishing.error(r, j, &x, "decay", &msg);
            continue;
        }
        let (lk, lm) = (k.ln(), m.ln());
        // m^0 = 1 even when m overflowed
        let m_pow = if a == 2.0 { 0.0 } else { (2.0 - a) * lm };
        let l17 = lk - 2.0 * r.ln() - m_pow;
        let l19 = if m.is_infinite() {
            f64::NEG_INFINITY
        } else {
            lk + lm - r * m / 4.0
        };
        bounded.push(r, j, &x, "ratio", l17);
        vanishing.push(r, j, &x, "decay", l19);
    }
    let radii: Vec<f64> = sched.radii.iter().cloned().filter(|r| *r >= 1.0).collect();
    Ok(CheckReport::combined(
        "relativistic_conditions",
        vec![
            bounded.finish(&radii, Limit::Bounded),
            vanishing.finish(&radii, Limit::Vanishing),
        ],
    ))
}

/// Probe records paired with the natural log of each estimate, so that
/// trends survive under- and overflow of exp().
struct LogProbes {
    rep: CheckReport,
    logs: Vec<f64>,
}

impl LogProbes {
    fn new(name: &str) -> Self {
        LogProbes {
            rep: CheckReport::new(name),
            logs: Vec::new(),
        }
    }

    fn push(&mut self, r: f64, j: usize, x: &[f64], quantity: &str, log: f64) {
        self.rep
            .probes
            .push(ProbeRecord::new(r, j, x, quantity, log.exp()));
        self.logs.push(log);
    }

    fn error(&mut self, r: f64, j: usize, x: &[f64], quantity: &str, msg: &str) {
        self.rep
            .probes
            .push(ProbeRecord::new(r, j, x, quantity, f64::NAN).with_note(msg));
        self.logs.push(f64::NAN);
    }

    fn finish(self, radii: &[f64], limit: Limit) -> CheckReport {
        let LogProbes { mut rep, logs } = self;
        let usable = |i: &usize| rep.probes[*i].note.is_none();
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .filter_map(|&r| {
                (0..logs.len())
                    .filter(usable)
                    .filter(|&i| rep.probes[i].radius == r)
                    .map(|i| logs[i])
                    .reduce(f64::max)
                    .map(|l| (r, l))
            })
            .collect();
        let errored = rep.probes.iter().any(|p| p.note.is_some());
        rep.worst = (0..logs.len())
            .filter(usable)
            .max_by(|a, b| logs[*a].total_cmp(&logs[*b]));
        let verdict = if pts.len() < 3 {
            rep.note("fewer than 3 usable radii");
            Verdict::Inconclusive
        } else {
            let tail = &pts[pts.len() / 4..];
            let lx: Vec<f64> = tail.iter().map(|p| p.0.ln()).collect();
            // -∞ clamps far below ln(ABS_ZERO), keeping the fit finite
            let ly: Vec<f64> = tail.iter().map(|p| p.1.max(-700.0)).collect();
            let slope = ols_slope(&lx, &ly);
            let fitted = tail.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let global = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            rep.trend = Some(slope);
            rep.fitted_constant = Some(fitted.exp());
            rep.global_constant = Some(global.exp());
            let (first, last) = (tail[0].1, tail[tail.len() - 1].1);
            let ln_zero = ABS_ZERO.ln();
            match limit {
                Limit::Bounded => {
                    if fitted == f64::INFINITY {
                        Verdict::Fail
                    } else if fitted <= ln_zero || slope <= SLOPE_TOL {
                        Verdict::Pass
                    } else if last >= first + 2f64.ln() {
                        Verdict::Fail
                    } else {
                        Verdict::Inconclusive
                    }
                }
                Limit::Vanishing => {
                    if fitted <= ln_zero || (slope <= -SLOPE_TOL && last <= first) {
                        Verdict::Pass
                    } else if slope >= SLOPE_TOL || last >= first - 2f64.ln() {
                        Verdict::Fail
                    } else {
                        Verdict::Inconclusive
                    }
                }
            }
        };
        rep.verdict = if errored && verdict != Verdict::Fail {
            rep.note("some probes failed to evaluate");
            Verdict::Inconclusive
        } else {
            verdict
        };
        rep
    }
}

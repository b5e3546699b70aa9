//! Lévy increments, Euler schemes for SDEs and symbols, and the interlacing
//! of a small-jump flow with thinned large jumps.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checker::{decide, fit_trend, Limit};
use crate::error::{config, Error, Result};
use crate::family::ExponentFamily;
use crate::field::{MatrixField, VectorField};
use crate::measure::{random_direction, LevyMeasure};
use crate::report::Verdict;
use crate::special::norm;
use crate::symbol::SymbolField;

/// Safety factor applied to the probed sup of the large-jump mass.
pub const INTENSITY_SAFETY: f64 = 1.05;

/// Per-path generator: ChaCha8 seeded by `seed` on stream `path_id`.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(path_id);
    r
}

/// Runs `f` for path ids 0..n in parallel; results come back in id order.
pub fn run_paths<T: Send>(
    n: usize,
    seed: u64,
    f: impl Fn(u64, &mut ChaCha8Rng) -> T + Sync,
) -> Vec<T> {
    (0..n as u64)
        .into_par_iter()
        .map(|id| f(id, &mut path_rng(seed, id)))
        .collect()
}

fn normals<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// √dt·Z with Z standard normal in ℝ^d.
fn brownian_increment<R: Rng + ?Sized>(d: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let s = dt.sqrt();
    normals(d, rng).into_iter().map(|z| s * z).collect()
}

/// Symmetric stable on the line with E e^{iξX} = e^{-|ξ|^α}
/// (Chambers-Mallows-Stuck).
fn symmetric_stable_1d<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * v).sin() / v.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Positive stable with E e^{-sA} = e^{-s^β}, β ∈ (0, 1) (Kanter).
fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = PI * rng.random::<f64>();
    let w: f64 = Exp1.sample(rng);
    (beta * u).sin() / u.sin().powf(1.0 / beta)
        * (((1.0 - beta) * u).sin() / w).powf((1.0 - beta) / beta)
}

/// An increment L_dt of the Lévy process with exponent ψ = `family`.
///
/// Brownian motion, isotropic stable and compound Poisson laws are sampled
/// exactly. The other families need `delta`: jumps below it are replaced by
/// a gaussian with the same second moment, jumps above it are drawn as a
/// compound Poisson sum. Use [`IncrementSampler`] to draw many increments
/// of one law without repeating the setup.
pub fn sample_levy_increment<R: Rng + ?Sized>(
    family: &ExponentFamily,
    dim: usize,
    dt: f64,
    delta: Option<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    IncrementSampler::new(family, dim, delta)?.sample(dt, rng)
}

/// Sampler for increments of one Lévy law, with the small-jump
/// approximation precomputed.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    family: ExponentFamily,
    dim: usize,
    approx: Option<Prepared>,
}

impl IncrementSampler {
    pub fn new(family: &ExponentFamily, dim: usize, delta: Option<f64>) -> Result<Self> {
        family.validate()?;
        if let Some(k) = family.fixed_dim() {
            if k != dim {
                return Err(Error::Dimension {
                    context: "Lévy increment",
                    expected: k,
                    got: dim,
                });
            }
        }
        let exact = matches!(
            family,
            ExponentFamily::Brownian
                | ExponentFamily::IsotropicStable { .. }
                | ExponentFamily::CompoundPoisson { .. }
        );
        let approx = if exact {
            None
        } else {
            let Some(delta) = delta else {
                return Err(config(format!(
                    "the {} family has no exact sampler; an approximation radius δ is required",
                    family.name()
                )));
            };
            if !(delta > 0.0 && delta < 1.0) {
                return Err(config(format!(
                    "approximation radius must lie in (0, 1), got {delta}"
                )));
            }
            let ch = family.characteristics(dim)?;
            Some(Prepared::new(
                &ch.drift,
                &ch.diffusion,
                &ch.measure,
                f64::INFINITY,
                delta,
            )?)
        };
        Ok(IncrementSampler {
            family: family.clone(),
            dim,
            approx,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config(format!("time step must be positive, got {dt}")));
        }
        let dim = self.dim;
        match &self.family {
            ExponentFamily::Brownian => Ok(brownian_increment(dim, dt, rng)),
            ExponentFamily::IsotropicStable { alpha } if *alpha == 2.0 => {
                // ψ = |ξ|² is Brownian motion run at twice the speed
                let s = 2f64.sqrt();
                Ok(brownian_increment(dim, dt, rng)
                    .into_iter()
                    .map(|v| s * v)
                    .collect())
            }
            ExponentFamily::IsotropicStable { alpha } => {
                let scale = dt.powf(1.0 / alpha);
                if dim == 1 {
                    return Ok(vec![scale * symmetric_stable_1d(*alpha, rng)]);
                }
                // sub-gaussian representation √(2A)·G
                let a = positive_stable(0.5 * alpha, rng);
                let s = scale * (2.0 * a).sqrt();
                Ok(normals(dim, rng).into_iter().map(|z| s * z).collect())
            }
            ExponentFamily::CompoundPoisson { rate, jumps } => {
                let mut out = vec![0.0; dim];
                let n = poisson(rate * dt, rng);
                for _ in 0..n {
                    let mut u = rng.random::<f64>();
                    let mut pick = &jumps[jumps.len() - 1];
                    for a in jumps {
                        if u < a.weight {
                            pick = a;
                            break;
                        }
                        u -= a.weight;
                    }
                    for (o, y) in out.iter_mut().zip(&pick.location) {
                        *o += y;
                    }
                }
                Ok(out)
            }
            _ => self
                .approx
                .as_ref()
                .expect("approximation prepared")
                .step(dt, rng),
        }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

/// Symmetric square root of a positive semidefinite matrix.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 1 {
        return DMatrix::from_element(1, 1, m[(0, 0)].max(0.0).sqrt());
    }
    let e = SymmetricEigen::new(m.clone());
    let s = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &e.eigenvectors * s * e.eigenvectors.transpose()
}

/// One step of b dt + gaussian(Q + ∫_{|y|<δ} yyᵀν) + compound Poisson
/// jumps of ν on [δ, r), compensated on [δ, 1).
#[derive(Debug, Clone)]
struct Prepared {
    shift: Vec<f64>,
    root: DMatrix<f64>,
    measure: LevyMeasure,
    mass: f64,
    delta: f64,
    r: f64,
}

impl Prepared {
    fn new(drift: &[f64], q: &DMatrix<f64>, nu: &LevyMeasure, r: f64, delta: f64) -> Result<Self> {
        let measure = nu.restrict(0.0, r);
        let cov = q + measure.second_moment_matrix(delta)?;
        let comp = measure.first_moment(delta, 1.0)?;
        let mass = measure.mass(delta, r)?;
        if !mass.is_finite() {
            return Err(Error::Numerical {
                step: 0,
                message: format!("jump mass above δ = {delta} is not finite"),
            });
        }
        Ok(Prepared {
            shift: drift.iter().zip(&comp).map(|(b, c)| b - c).collect(),
            root: psd_sqrt(&cov),
            measure,
            mass,
            delta,
            r,
        })
    }

    fn step<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
        let d = self.shift.len();
        let z = DVector::from_vec(brownian_increment(d, dt, rng));
        let g = &self.root * z;
        let mut out: Vec<f64> = (0..d).map(|i| self.shift[i] * dt + g[i]).collect();
        for _ in 0..poisson(self.mass * dt, rng) {
            let y = self.measure.sample(self.delta, self.r, rng)?;
            for (o, v) in out.iter_mut().zip(y) {
                *o += v;
            }
        }
        Ok(out)
    }
}

fn approximate_step<R: Rng + ?Sized>(
    drift: &[f64],
    q: &DMatrix<f64>,
    nu: &LevyMeasure,
    r: f64,
    delta: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Prepared::new(drift, q, nu, r, delta)?.step(dt, rng)
}

/// Time grid, step size, explosion radius and small-jump approximation
/// radius shared by the path simulators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub horizon: f64,
    pub dt: f64,
    pub r_max: f64,
    /// Jumps below δ are simulated as a gaussian.
    pub delta: f64,
    /// Keep every grid state, or only the first and last.
    pub record_all: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            horizon: 1.0,
            dt: 1e-3,
            r_max: 1e6,
            delta: 1e-3,
            record_all: true,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(config(format!(
                "dt must lie in (0, horizon], got {}",
                self.dt
            )));
        }
        if !(self.r_max > 0.0) {
            return Err(config("R_max must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config(format!("δ must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub jumps: Vec<JumpRecord>,
    pub exploded: bool,
    pub explosion_time: Option<f64>,
    /// inf and sup of |X| over the grid and jump states, recorded or not
    pub min_norm: f64,
    pub max_norm: f64,
}

impl PathSample {
    fn start(x0: &[f64]) -> Self {
        PathSample {
            times: vec![0.0],
            states: vec![x0.to_vec()],
            jumps: Vec::new(),
            exploded: false,
            explosion_time: None,
            min_norm: norm(x0),
            max_norm: norm(x0),
        }
    }

    fn visit(&mut self, x: &[f64]) -> f64 {
        let r = norm(x);
        self.min_norm = self.min_norm.min(r);
        self.max_norm = self.max_norm.max(r);
        r
    }

    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("paths hold their initial state")
    }

    /// Rows `path_id,t,x_1..x_d,event`, with jump events placed at their
    /// arrival times.
    pub fn write_csv<W: Write>(&self, path_id: u64, w: &mut W) -> std::io::Result<()> {
        let row = |w: &mut W, t: f64, x: &[f64], ev: &str| -> std::io::Result<()> {
            write!(w, "{path_id},{t}")?;
            for v in x {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{ev}")
        };
        let mut j = 0;
        for (t, x) in self.times.iter().zip(&self.states) {
            while j < self.jumps.len() && self.jumps[j].time <= *t {
                let jr = &self.jumps[j];
                let ev = if jr.accepted {
                    "jump_accepted"
                } else {
                    "jump_thinned"
                };
                row(w, jr.time, &jr.post, ev)?;
                j += 1;
            }
            row(w, *t, x, "step")?;
        }
        for jr in &self.jumps[j..] {
            let ev = if jr.accepted {
                "jump_accepted"
            } else {
                "jump_thinned"
            };
            row(w, jr.time, &jr.post, ev)?;
        }
        if let Some(t) = self.explosion_time {
            row(w, t, self.terminal(), "exploded")?;
        }
        Ok(())
    }
}

/// Header matching [`PathSample::write_csv`].
pub fn csv_header(dim: usize) -> String {
    let mut h = String::from("path_id,t");
    for k in 1..=dim {
        h.push_str(&format!(",x_{k}"));
    }
    h.push_str(",event");
    h
}

fn check_state(x: &[f64], step: usize) -> Result<()> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical {
            step,
            message: format!("state became NaN: {x:?}"),
        });
    }
    Ok(())
}

/// X + ℓ(X) dt + σ(X) ΔL.
fn sde_step<R: Rng + ?Sized>(
    drift: &VectorField,
    sigma: &MatrixField,
    driver: &ExponentFamily,
    x: &[f64],
    cfg: &StepConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (_, k) = sigma.shape();
    let dl = sample_levy_increment(driver, k, cfg.dt, Some(cfg.delta), rng)?;
    let s = sigma.eval(x) * DVector::from_vec(dl);
    let l = drift.eval(x);
    Ok((0..x.len())
        .map(|i| (x[i] + l[i] * cfg.dt) + s[i])
        .collect())
}

/// Records the new state; returns true when the path exploded.
fn advance(path: &mut PathSample, x: &[f64], t: f64, cfg: &StepConfig, last: bool) -> bool {
    let out = path.visit(x) > cfg.r_max;
    if cfg.record_all || last || out {
        path.times.push(t);
        path.states.push(x.to_vec());
    }
    if out {
        path.exploded = true;
        path.explosion_time = Some(t);
    }
    out
}

/// Explicit Euler for dX = ℓ(X-) dt + σ(X-) dL.
pub fn simulate_sde_euler<R: Rng + ?Sized>(
    drift: &VectorField,
    sigma: &MatrixField,
    driver: &ExponentFamily,
    x0: &[f64],
    cfg: &StepConfig,
    rng: &mut R,
) -> Result<PathSample> {
    cfg.validate()?;
    let (d, k) = sigma.shape();
    if drift.len() != d || x0.len() != d {
        return Err(Error::Dimension {
            context: "Euler state",
            expected: d,
            got: x0.len(),
        });
    }
    if let Some(m) = driver.fixed_dim() {
        if m != k {
            return Err(Error::Dimension {
                context: "driver vs σ columns",
                expected: k,
                got: m,
            });
        }
    }
    let mut path = PathSample::start(x0);
    let mut x = x0.to_vec();
    let n = cfg.steps();
    for step in 1..=n {
        x = sde_step(drift, sigma, driver, &x, cfg, rng)?;
        check_state(&x, step)?;
        if advance(&mut path, &x, cfg.time(step), cfg, step == n) {
            break;
        }
    }
    Ok(path)
}

/// ν(x, ·) split at r(x) = 1 ∨ |x|/2.
#[derive(Debug, Clone)]
pub struct SplitMeasure {
    pub small: LevyMeasure,
    pub large: LevyMeasure,
    pub cutoff: f64,
}

pub fn cutoff_radius(x: &[f64]) -> f64 {
    (0.5 * norm(x)).max(1.0)
}

pub fn split_levy_measure(q: &SymbolField, x: &[f64]) -> Result<SplitMeasure> {
    let nu = q.characteristics(x)?.measure;
    let r = cutoff_radius(x);
    Ok(SplitMeasure {
        small: nu.restrict(0.0, r),
        large: nu.restrict(r, f64::INFINITY),
        cutoff: r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityEstimate {
    /// max of ν_l(z, ℝ^d) over the probes
    pub sup: f64,
    pub argmax: Vec<f64>,
    /// sup times the safety factor
    pub lambda: f64,
    /// λ - sup
    pub margin: f64,
    /// max beyond the first quartile of probe radii
    pub asymptotic: Option<f64>,
}

/// Probe states for the intensity sup: the origin, a 1/16 grid out to
/// |z| = 4 and a geometric grid out to `r_max`, along ±e_k and a few
/// further directions.
pub fn intensity_probes(dim: usize, r_max: f64) -> Vec<Vec<f64>> {
    let mut radii: Vec<f64> = (1..=64).map(|k| k as f64 / 16.0).collect();
    let mut r = 8.0;
    while r <= r_max {
        radii.push(r);
        r *= 2.0;
    }
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[k] = s;
            dirs.push(e);
        }
    }
    if dim > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a3b);
        dirs.extend((0..4).map(|_| random_direction(dim, &mut rng)));
    }
    let mut out = vec![vec![0.0; dim]];
    for r in radii {
        for w in &dirs {
            out.push(w.iter().map(|c| c * r).collect());
        }
    }
    out
}

/// λ = sup_z ν_l(z, ℝ^d \ {0}) estimated over the probes.
pub fn large_jump_intensity(q: &SymbolField, probes: &[Vec<f64>]) -> Result<IntensityEstimate> {
    if probes.is_empty() {
        return Err(config(
            "intensity estimation needs at least one probe state",
        ));
    }
    let masses: Vec<Result<f64>> = probes
        .par_iter()
        .map(|z| split_levy_measure(q, z)?.large.total_mass())
        .collect();
    let mut sup = 0.0;
    let mut argmax = probes[0].clone();
    let mut by_radius: Vec<(f64, f64)> = Vec::new();
    for (z, m) in probes.iter().zip(masses) {
        let m = m?;
        if !m.is_finite() {
            return Err(Error::Hypothesis(format!(
                "large-jump mass is infinite at z = {z:?}"
            )));
        }
        if m > sup {
            sup = m;
            argmax = z.clone();
        }
        let r = norm(z);
        if r >= 1.0 {
            match by_radius.iter_mut().find(|p| p.0 == r) {
                Some(p) => p.1 = p.1.max(m),
                None => by_radius.push((r, m)),
            }
        }
    }
    by_radius.sort_by(|a, b| a.0.total_cmp(&b.0));
    let asymptotic = fit_trend(&by_radius).map(|t| (decide(Limit::Bounded, &t), t.fitted));
    if let Some((Verdict::Fail, _)) = asymptotic {
        return Err(Error::Hypothesis(
            "the large-jump mass grows along the probe radii; λ would be infinite".into(),
        ));
    }
    let lambda = INTENSITY_SAFETY * sup;
    Ok(IntensityEstimate {
        sup,
        argmax,
        lambda,
        margin: lambda - sup,
        asymptotic: asymptotic.map(|a| a.1),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinningOutcome {
    pub post: Vec<f64>,
    pub accepted: bool,
}

/// With probability ν_l(z)/λ jumps to z + y, y ~ ν_l(z)/ν_l(z, ℝ^d);
/// otherwise stays at z.
pub fn thinning_step<R: Rng + ?Sized>(
    q: &SymbolField,
    lambda: f64,
    z: &[f64],
    rng: &mut R,
) -> Result<ThinningOutcome> {
    let split = split_levy_measure(q, z)?;
    let mass = split.large.total_mass()?;
    if mass > lambda * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!(
            "ν_l mass {mass:e} at z = {z:?} exceeds λ = {lambda:e}; re-estimate λ on a finer probe grid"
        )));
    }
    let u: f64 = rng.random();
    if mass > 0.0 && u * lambda < mass {
        let y = split.large.sample(split.cutoff, f64::INFINITY, rng)?;
        Ok(ThinningOutcome {
            post: z.iter().zip(&y).map(|(a, b)| a + b).collect(),
            accepted: true,
        })
    } else {
        Ok(ThinningOutcome {
            post: z.to_vec(),
            accepted: false,
        })
    }
}

/// One Euler step of the small-jump dynamics (b, Q, ν_s) at x.
fn small_jump_step<R: Rng + ?Sized>(
    q: &SymbolField,
    x: &[f64],
    cfg: &StepConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if let Some((drift, sigma, driver)) = q.sde_parts() {
        if driver_is_gaussian(driver) {
            return sde_step(drift, sigma, driver, x, cfg, rng);
        }
    }
    let ch = q.characteristics(x)?;
    let inc = approximate_step(
        &ch.drift,
        &ch.diffusion,
        &ch.measure,
        cutoff_radius(x),
        cfg.delta,
        cfg.dt,
        rng,
    )?;
    Ok(x.iter().zip(inc).map(|(a, b)| a + b).collect())
}

fn driver_is_gaussian(f: &ExponentFamily) -> bool {
    matches!(f, ExponentFamily::Brownian)
        || matches!(f, ExponentFamily::IsotropicStable { alpha } if *alpha == 2.0)
}

/// The small-jump flow alone: Euler steps of (b, Q, ν_s) with no large jumps.
pub fn simulate_small_jump_flow<R: Rng + ?Sized>(
    q: &SymbolField,
    x0: &[f64],
    cfg: &StepConfig,
    rng: &mut R,
) -> Result<PathSample> {
    simulate_interlaced(q, 0.0, x0, cfg, rng)
}

/// Interlacing: exponential(λ) arrivals, thinning at each arrival from the
/// last grid state, small-jump Euler steps in between.
pub fn simulate_interlaced<R: Rng + ?Sized>(
    q: &SymbolField,
    lambda: f64,
    x0: &[f64],
    cfg: &StepConfig,
    rng: &mut R,
) -> Result<PathSample> {
    cfg.validate()?;
    if x0.len() != q.dim() {
        return Err(Error::Dimension {
            context: "initial state",
            expected: q.dim(),
            got: x0.len(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(config(format!(
            "λ must be finite and non-negative, got {lambda}"
        )));
    }
    let next = |rng: &mut R| -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / lambda
    };
    let mut path = PathSample::start(x0);
    let mut x = x0.to_vec();
    let mut arrival = if lambda > 0.0 {
        next(rng)
    } else {
        f64::INFINITY
    };
    let n = cfg.steps();
    for step in 1..=n {
        let t = cfg.time(step);
        while arrival <= t {
            let out = thinning_step(q, lambda, &x, rng)?;
            check_state(&out.post, step)?;
            path.jumps.push(JumpRecord {
                time: arrival,
                pre: x.clone(),
                post: out.post.clone(),
                accepted: out.accepted,
            });
            x = out.post;
            if path.visit(&x) > cfg.r_max {
                path.times.push(arrival);
                path.states.push(x.clone());
                path.exploded = true;
                path.explosion_time = Some(arrival);
                return Ok(path);
            }
            arrival += next(rng);
        }
        x = small_jump_step(q, &x, cfg, rng)?;
        check_state(&x, step)?;
        if advance(&mut path, &x, t, cfg, step == n) {
            break;
        }
    }
    Ok(path)
}

/// λ from the default probes, then [`simulate_interlaced`] for `n` paths.
pub fn simulate_interlaced_paths(
    q: &SymbolField,
    x0: &[f64],
    cfg: &StepConfig,
    n: usize,
    seed: u64,
) -> Result<(IntensityEstimate, Vec<PathSample>)> {
    cfg.validate()?;
    let est = large_jump_intensity(q, &intensity_probes(q.dim(), cfg.r_max.min(1e4)))?;
    let paths: Result<Vec<PathSample>> = run_paths(n, seed, |_, rng| {
        simulate_interlaced(q, est.lambda, x0, cfg, rng)
    })
    .into_iter()
    .collect();
    Ok((est, paths?))
}

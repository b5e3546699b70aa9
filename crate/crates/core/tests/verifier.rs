use feller_core::checker::ProbeSchedule;
use feller_core::generator::TestFunction;
use feller_core::simulator::{path_rng, run_paths, simulate_interlaced, StepConfig};
use feller_core::verifier::*;
use feller_core::*;

fn f(s: &str) -> ScalarField {
    ScalarField::parse(s).unwrap()
}

/// q = |ξ|², so Q = 2 and X_t = x + √2 B_t.
fn brownian() -> SymbolField {
    make_stable_like_symbol(1, f("1"), f("2")).unwrap()
}

fn sde(drift: &str, sigma: &str, driver: ExponentFamily) -> SymbolField {
    make_sde_symbol(
        VectorField::new(vec![f(drift)]),
        MatrixField::scalar(1, f(sigma)),
        driver,
    )
    .unwrap()
}

fn unit_atom() -> SymbolField {
    sde(
        "0",
        "1",
        ExponentFamily::CompoundPoisson {
            rate: 1.0,
            jumps: vec![Atom {
                location: vec![2.0],
                weight: 1.0,
            }],
        },
    )
}

fn bump() -> TestFunction {
    TestFunction::gaussian_bump(vec![0.0], 1.0).unwrap()
}

fn sim(seed: u64, dt: f64) -> SimConfig {
    let mut s = SimConfig::with_seed(seed);
    s.step.dt = dt;
    s
}

/// ∫ e^{-y²/2} N(0, v)(dy) by a midpoint sum.
fn gaussian_smoothing(v: f64) -> f64 {
    let h = 1e-4;
    let s = v.sqrt();
    (-200_000..200_000)
        .map(|k| {
            let y = (k as f64 + 0.5) * h;
            (-y * y / 2.0).exp() * (-y * y / (2.0 * v)).exp()
                / (s * (2.0 * std::f64::consts::PI).sqrt())
        })
        .sum::<f64>()
        * h
}

#[test]
fn heat_oracle() {
    let want = gaussian_smoothing(2.0);
    assert!((want - 1.0 / 3f64.sqrt()).abs() < 1e-9);
    let e = estimate_semigroup(&brownian(), &sim(3, 1e-2), &bump(), &[0.0], 1.0, 20_000).unwrap();
    assert!(
        (e.estimate - want).abs() < 3.0 * e.std_error,
        "{} ± {} vs {want}",
        e.estimate,
        e.std_error
    );
    assert_eq!(e.exploded, 0);
}

#[test]
fn trivial_estimates() {
    let c = TestFunction::constant(1, 2.5);
    let e = estimate_semigroup(&brownian(), &sim(1, 1e-3), &c, &[0.3], 0.0, 100).unwrap();
    assert_eq!((e.estimate, e.std_error), (2.5, 0.0));
    let z = SymbolField::zero(1);
    let e = estimate_semigroup(&z, &sim(1, 1e-2), &bump(), &[0.7], 1.0, 200).unwrap();
    assert_eq!(e.estimate, (-0.245f64).exp());
    assert_eq!(e.std_error, 0.0);
    assert!(estimate_semigroup(&z, &sim(1, 1e-2), &bump(), &[0.7], 1.0, 99).is_err());
}

#[test]
fn contraction_and_positivity() {
    let q = sde(
        "-x",
        "1+0.5*abs(x)",
        ExponentFamily::IsotropicStable { alpha: 1.3 },
    );
    let g = TestFunction::smooth_cutoff(1, 0.5).unwrap();
    for (k, x) in [-3.0, 0.0, 1.0, 8.0].into_iter().enumerate() {
        let e = estimate_semigroup(&q, &sim(10 + k as u64, 1e-2), &g, &[x], 0.5, 300).unwrap();
        assert!(e.estimate >= 0.0 && e.estimate <= 1.0, "{}", e.estimate);
    }
}

#[test]
fn semigroup_law() {
    // T_{0.6} f(0) in one run against T_{0.3}(T_{0.3} f)(0) with a restart
    let q = brownian();
    let n = 20_000;
    let one = estimate_semigroup(&q, &sim(5, 1e-2), &bump(), &[0.0], 0.6, n).unwrap();
    let cfg = StepConfig {
        horizon: 0.3,
        dt: 1e-2,
        record_all: false,
        ..StepConfig::default()
    };
    let vals: Vec<f64> = run_paths(n, 6, |_, rng| {
        let a = simulate_interlaced(&q, 0.0, &[0.0], &cfg, rng).unwrap();
        let b = simulate_interlaced(&q, 0.0, a.terminal(), &cfg, rng).unwrap();
        bump().value(b.terminal())
    });
    let (two, se) = mean_and_se(&vals);
    let tol = 3.0 * (se * se + one.std_error * one.std_error).sqrt();
    assert!(
        (two - one.estimate).abs() < tol,
        "{two} vs {}",
        one.estimate
    );
}

#[test]
fn gronwall_envelope() {
    // E u(X_{t∧τ_R}) ≤ e^{Ct} u(x) with C from the u-constant
    let q = sde("1-x", "1", ExponentFamily::IsotropicStable { alpha: 1.5 });
    let sched = ProbeSchedule::geometric(1, 8, 2, 1);
    let c = feller_core::generator::lyapunov_constant(
        &q,
        feller_core::generator::LyapunovKind::U,
        &sched,
    )
    .unwrap();
    let u = TestFunction::lyapunov_u(1);
    for x in [0.0, 2.0] {
        let e = estimate_stopped_expectation(&q, &sim(7, 1e-2), &u, &[x], 1.0, 50.0, 2000).unwrap();
        let bound = (c * 1.0f64).exp() * u.value(&[x]);
        assert!(
            e.estimate <= bound * (1.0 + 3.0 * e.std_error / e.estimate),
            "{} vs {bound}",
            e.estimate
        );
    }
}

#[test]
fn vanishing_examples() {
    let sched = ProbeSchedule::geometric(1, 8, 2, 1);
    let chi = TestFunction::smooth_cutoff(1, 0.5).unwrap();
    let r = verify_feller_vanishing(
        &SymbolField::zero(1),
        &sim(1, 1e-2),
        &chi,
        0.5,
        &[5.0, 10.0],
        0.01,
        100,
        &sched,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    assert!(r.sub_reports[0].probes.iter().all(|p| p.estimate == 0.0));

    let planted = make_stable_like_symbol(1, f("1+abs(x)^4"), f("2")).unwrap();
    let e = verify_feller_vanishing(
        &planted,
        &sim(1, 1e-2),
        &chi,
        0.5,
        &[5.0, 10.0],
        0.01,
        100,
        &sched,
    );
    assert!(matches!(e, Err(Error::Hypothesis(_))));

    let q = sde("0", "1", ExponentFamily::IsotropicStable { alpha: 1.5 });
    let r = verify_feller_vanishing(
        &q,
        &sim(2, 1e-2),
        &chi,
        0.5,
        &[2.0, 5.0, 10.0, 20.0],
        0.01,
        2000,
        &sched,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    let t = &r.sub_reports[0].probes;
    assert!(t[0].estimate > t[3].estimate);

    // a hitting-probability target ε far too small for the path count
    let r = verify_feller_vanishing(
        &q,
        &sim(2, 1e-2),
        &chi,
        0.5,
        &[5.0, 10.0],
        1e-4,
        200,
        &sched,
    )
    .unwrap();
    assert_ne!(r.verdict, Verdict::Pass);
}

/// P(sup_{s≤t} |x + √2 B_s| ≥ R) ≤ P(sup B ≥ a) + P(inf B ≤ -b) = 2Φ̄(a/√t) + 2Φ̄(b/√t).
fn reflection_bound(x: f64, r: f64, t: f64) -> f64 {
    let tail = |z: f64| 0.5 * statrs::function::erf::erfc(z / 2f64.sqrt());
    let a = (r - x) / 2f64.sqrt();
    let b = (r + x) / 2f64.sqrt();
    (2.0 * tail(a / t.sqrt()) + 2.0 * tail(b / t.sqrt())).min(1.0)
}

#[test]
fn conservative_examples() {
    let sched = ProbeSchedule::geometric(1, 8, 2, 1);
    let starts = vec![vec![-1.0], vec![0.0], vec![1.0]];
    let radii = [2.0, 3.0, 4.0, 6.0, 8.0];
    let r = verify_conservative(
        &brownian(),
        &sim(4, 1e-3),
        1.0,
        &starts,
        &radii,
        0.01,
        4000,
        &sched,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    for p in &r.probes {
        let bound = reflection_bound(p.x[0].abs(), p.radius, 1.0);
        let se = (bound * (1.0 - bound) / 4000.0).sqrt().max(1e-3);
        assert!(
            p.estimate <= bound + 3.0 * se,
            "R = {}: {} vs {bound}",
            p.radius,
            p.estimate
        );
    }

    let r = verify_conservative(
        &SymbolField::zero(1),
        &sim(4, 1e-2),
        1.0,
        &starts,
        &radii,
        0.01,
        100,
        &sched,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.probes.iter().all(|p| p.estimate == 0.0));

    // sup |X| = e for the ODE x' = x from 1
    let q = sde("x", "0", ExponentFamily::Brownian);
    let r = verify_conservative(
        &q,
        &sim(4, 1e-3),
        1.0,
        &[vec![1.0]],
        &[2.0, 2.7, 2.72, 3.0],
        0.01,
        100,
        &sched,
    )
    .unwrap();
    let p: Vec<f64> = r.probes.iter().map(|p| p.estimate).collect();
    assert_eq!(p, vec![1.0, 1.0, 0.0, 0.0]);
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
}

#[test]
fn generator_consistency_examples() {
    let g = bump();
    let r = verify_generator_consistency(
        &SymbolField::zero(1),
        &sim(1, 1e-3),
        &g,
        &[vec![0.0]],
        1e-3,
        100,
        5.0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.probes[0].estimate, 0.0);

    let r = verify_generator_consistency(
        &brownian(),
        &sim(2, 1e-3),
        &g,
        &[vec![0.0], vec![1.0]],
        1e-3,
        100_000,
        5.0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());

    let r = verify_generator_consistency(
        &unit_atom(),
        &sim(3, 1e-3),
        &g,
        &[vec![0.0]],
        1e-3,
        200_000,
        5.0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());

    // a wrong symbol: the paths of |ξ|² against the operator of 2|ξ|²
    let twice = make_stable_like_symbol(1, f("2"), f("2")).unwrap();
    let mut s = sim(2, 1e-3);
    s.lambda = Some(0.0);
    let paths = estimate_semigroup(&brownian(), &s, &g, &[0.0], 1e-3, 100_000).unwrap();
    let af = feller_core::generator::apply_characteristics(&twice, &g, &[0.0], &Default::default())
        .unwrap();
    let dq = (paths.estimate - 1.0) / 1e-3;
    assert!((dq - af).abs() > 3.0 * (paths.std_error / 1e-3 + 5e-3));
}

#[test]
fn strong_continuity_examples() {
    let g = bump();
    let r = verify_strong_continuity(
        &brownian(),
        &sim(8, 1e-3),
        &g,
        &[vec![0.0]],
        &[0.1, 0.01, 0.001],
        20_000,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    // |T_t f(0) - 1| = 1 - (1+2t)^{-1/2} ≈ t
    assert!((r.trend.unwrap() - 1.0).abs() < 0.15, "{:?}", r.trend);
    let r = verify_strong_continuity(
        &SymbolField::zero(1),
        &sim(8, 1e-3),
        &g,
        &[vec![0.4]],
        &[0.1, 0.0],
        100,
    )
    .unwrap();
    assert!(r.probes.iter().all(|p| p.estimate == 0.0));
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn empirical_cf_examples() {
    let xis = vec![vec![0.0], vec![1.0]];
    let r = empirical_cf_test(
        &ExponentFamily::Brownian,
        1,
        1.0,
        &xis,
        50_000,
        1,
        None,
        0.0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    assert_eq!(r.probes[0].estimate, 0.0);
    let r = empirical_cf_test(
        &ExponentFamily::IsotropicStable { alpha: 1.5 },
        1,
        1.0,
        &xis,
        50_000,
        2,
        None,
        0.0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    // a mislabelled law fails: stable samples tested against the brownian exponent
    let wrong = ExponentFamily::Brownian;
    let sampler = feller_core::simulator::IncrementSampler::new(
        &ExponentFamily::IsotropicStable { alpha: 1.5 },
        1,
        None,
    )
    .unwrap();
    let mut rng = path_rng(1, 0);
    let n = 20_000;
    let re: f64 = (0..n)
        .map(|_| sampler.sample(1.0, &mut rng).unwrap()[0].cos())
        .sum::<f64>()
        / n as f64;
    assert!((re - (-wrong.psi(&[1.0]).re).exp()).abs() > 3.0 / (n as f64).sqrt());
}

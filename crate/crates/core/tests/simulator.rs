use feller_core::simulator::*;
use feller_core::*;
use num_complex::Complex64;

fn f(s: &str) -> ScalarField {
    ScalarField::parse(s).unwrap()
}

fn sde(drift: &str, sigma: &str, driver: ExponentFamily) -> SymbolField {
    make_sde_symbol(
        VectorField::new(vec![f(drift)]),
        MatrixField::scalar(1, f(sigma)),
        driver,
    )
    .unwrap()
}

fn atom_family(rate: f64, at: f64) -> ExponentFamily {
    ExponentFamily::CompoundPoisson {
        rate,
        jumps: vec![Atom {
            location: vec![at],
            weight: 1.0,
        }],
    }
}

/// max over ξ of |φ_n(ξ) - e^{-tψ(ξ)}| in units of its standard error.
fn cf_z_scores(samples: &[Vec<f64>], xis: &[Vec<f64>], want: impl Fn(&[f64]) -> Complex64) -> f64 {
    let n = samples.len() as f64;
    xis.iter()
        .map(|xi| {
            let mut s = Complex64::new(0.0, 0.0);
            for x in samples {
                let t: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
                s += Complex64::from_polar(1.0, t);
            }
            let emp = s / n;
            let w = want(xi);
            // Var(cos) + Var(sin) ≤ 1 - |φ|²
            let se = ((1.0 - w.norm_sqr()).max(1e-12) / n).sqrt();
            (emp - w).norm() / se
        })
        .fold(0.0, f64::max)
}

fn increments(
    family: &ExponentFamily,
    dim: usize,
    dt: f64,
    delta: Option<f64>,
    n: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let sampler = IncrementSampler::new(family, dim, delta).unwrap();
    run_paths(n, seed, |_, rng| sampler.sample(dt, rng).unwrap())
}

#[test]
fn exact_samplers_match_their_exponents() {
    let n = 100_000;
    let xis: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|v| vec![*v]).collect();
    for fam in [
        ExponentFamily::Brownian,
        ExponentFamily::IsotropicStable { alpha: 0.8 },
        ExponentFamily::IsotropicStable { alpha: 1.0 },
        ExponentFamily::IsotropicStable { alpha: 1.5 },
        ExponentFamily::IsotropicStable { alpha: 2.0 },
        atom_family(1.3, 2.0),
    ] {
        let s = increments(&fam, 1, 1.0, None, n, 11);
        let z = cf_z_scores(&s, &xis, |xi| (-fam.psi(xi)).exp());
        assert!(z < 4.0, "{fam:?}: z = {z}");
    }
    // isotropic in d = 2 through the subordinated gaussian
    let fam = ExponentFamily::IsotropicStable { alpha: 1.2 };
    let s = increments(&fam, 2, 0.5, None, n, 12);
    let xis = vec![vec![0.5, 0.0], vec![0.6, -0.8], vec![-1.0, 1.0]];
    let z = cf_z_scores(&s, &xis, |xi| (-0.5 * fam.psi(xi)).exp());
    assert!(z < 4.0, "d=2: z = {z}");
}

#[test]
fn alpha_two_is_the_brownian_sampler() {
    let mut a = path_rng(5, 3);
    let mut b = path_rng(5, 3);
    for _ in 0..100 {
        let x = sample_levy_increment(
            &ExponentFamily::IsotropicStable { alpha: 2.0 },
            2,
            0.3,
            None,
            &mut a,
        )
        .unwrap();
        let y = sample_levy_increment(&ExponentFamily::Brownian, 2, 0.3, None, &mut b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert_eq!(*u, 2f64.sqrt() * v);
        }
    }
}

#[test]
fn approximate_samplers_match_their_exponents() {
    let n = 40_000;
    let dt = 0.2;
    let xis: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|v| vec![*v]).collect();
    for fam in [
        ExponentFamily::RelativisticStable {
            alpha: 1.2,
            rho: 0.7,
        },
        ExponentFamily::LampertiStable {
            alpha: 0.75,
            rho: 1.0,
        },
        ExponentFamily::TruncatedLevy {
            alpha: 1.5,
            rho: 1.0,
        },
        ExponentFamily::NormalTemperedStable {
            alpha: 1.5,
            kappa: 2.0,
            beta: 0.5,
        },
    ] {
        let s = increments(&fam, 1, dt, Some(1e-2), n, 21);
        let z = cf_z_scores(&s, &xis, |xi| (-dt * fam.psi(xi)).exp());
        assert!(z < 4.0, "{fam:?}: z = {z}");
    }
    let mut rng = path_rng(1, 1);
    let err = sample_levy_increment(
        &ExponentFamily::LampertiStable {
            alpha: 0.5,
            rho: 1.0,
        },
        1,
        0.1,
        None,
        &mut rng,
    );
    assert!(matches!(err, Err(Error::Config(_))));
}

#[test]
fn euler_examples() {
    let cfg = StepConfig {
        horizon: 1.0,
        dt: 1e-3,
        ..StepConfig::default()
    };
    let mut rng = path_rng(1, 0);
    let p = simulate_sde_euler(
        &VectorField::zero(1),
        &MatrixField::scalar(1, f("0")),
        &ExponentFamily::Brownian,
        &[0.7],
        &cfg,
        &mut rng,
    )
    .unwrap();
    assert!(p.states.iter().all(|x| x[0] == 0.7));
    assert_eq!(p.states.len(), 1001);

    let p = simulate_sde_euler(
        &VectorField::new(vec![f("-x")]),
        &MatrixField::scalar(1, f("0")),
        &ExponentFamily::Brownian,
        &[1.0],
        &cfg,
        &mut rng,
    )
    .unwrap();
    let want = (-1.0f64).exp();
    assert!(
        (p.terminal()[0] - want).abs() < cfg.dt,
        "{}",
        p.terminal()[0]
    );

    let n = 10_000;
    let cfg = StepConfig {
        record_all: false,
        ..cfg
    };
    let ends: Vec<f64> = run_paths(n, 9, |_, rng| {
        simulate_sde_euler(
            &VectorField::zero(1),
            &MatrixField::identity(1),
            &ExponentFamily::Brownian,
            &[0.0],
            &cfg,
            rng,
        )
        .unwrap()
        .terminal()[0]
    });
    let m2: f64 = ends.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let se = (2.0 / n as f64).sqrt();
    assert!((m2 - 1.0).abs() < 3.0 * se, "{m2}");
}

#[test]
fn nan_states_are_reported_with_the_step() {
    let cfg = StepConfig {
        horizon: 1.0,
        dt: 0.1,
        ..StepConfig::default()
    };
    let mut rng = path_rng(1, 0);
    let r = simulate_sde_euler(
        &VectorField::new(vec![f("-10*(x-0.5)^0.5")]),
        &MatrixField::scalar(1, f("0")),
        &ExponentFamily::Brownian,
        &[0.9],
        &cfg,
        &mut rng,
    );
    assert!(matches!(r, Err(Error::Numerical { step, .. }) if step > 0));
}

#[test]
fn explosion_is_flagged() {
    let cfg = StepConfig {
        horizon: 1.0,
        dt: 1e-3,
        r_max: 100.0,
        ..StepConfig::default()
    };
    let mut rng = path_rng(1, 0);
    let p = simulate_sde_euler(
        &VectorField::new(vec![f("x^2")]),
        &MatrixField::scalar(1, f("0")),
        &ExponentFamily::Brownian,
        &[2.0],
        &cfg,
        &mut rng,
    )
    .unwrap();
    assert!(p.exploded);
    let t = p.explosion_time.unwrap();
    assert!(t > 0.45 && t < 0.55, "{t}");
    assert_eq!(*p.times.last().unwrap(), t);
}

#[test]
fn split_examples() {
    let q = sde("0", "1", ExponentFamily::IsotropicStable { alpha: 1.5 });
    assert_eq!(split_levy_measure(&q, &[1.0]).unwrap().cutoff, 1.0);
    assert_eq!(split_levy_measure(&q, &[-10.0]).unwrap().cutoff, 5.0);
    let q = sde("0", "1", atom_family(1.0, 3.0));
    let s = split_levy_measure(&q, &[4.0]).unwrap();
    assert_eq!(s.large.total_mass().unwrap(), 1.0);
    assert_eq!(s.small.total_mass().unwrap(), 0.0);
    let s = split_levy_measure(&q, &[10.0]).unwrap();
    assert_eq!(s.small.total_mass().unwrap(), 1.0);
    assert_eq!(s.large.total_mass().unwrap(), 0.0);
}

#[test]
fn splitting_conserves_mass() {
    let q = sde(
        "0",
        "1+x^2",
        ExponentFamily::NormalTemperedStable {
            alpha: 1.2,
            kappa: 1.5,
            beta: 0.3,
        },
    );
    for x in [0.0, 1.5, 6.0, 20.0] {
        let full = q.characteristics(&[x]).unwrap().measure;
        let s = split_levy_measure(&q, &[x]).unwrap();
        for r in [0.01, 0.5, 2.0, 7.0, 30.0] {
            let a = s.small.tail_mass(r).unwrap() + s.large.tail_mass(r).unwrap();
            let b = full.tail_mass(r).unwrap();
            assert!((a - b).abs() <= 1e-12 * b, "x={x} r={r}: {a} vs {b}");
        }
    }
}

#[test]
fn intensity_examples() {
    let probes = intensity_probes(1, 1e4);
    let q = sde("0", "1", ExponentFamily::IsotropicStable { alpha: 1.5 });
    let est = large_jump_intensity(&q, &probes).unwrap();
    let want = LevyMeasure::stable(1, 1.5).tail_mass(1.0).unwrap();
    assert!((est.sup - want).abs() < 1e-12 * want);
    assert!((est.lambda - 1.05 * want).abs() < 1e-12 * want);

    let q = sde("0", "1", atom_family(1.0, 2.0));
    let est = large_jump_intensity(&q, &probes).unwrap();
    assert_eq!(est.sup, 1.0);
    assert_eq!(
        large_jump_intensity(&SymbolField::zero(1), &probes)
            .unwrap()
            .lambda,
        0.0
    );

    let grows = make_stable_like_symbol(1, f("1+abs(x)^3"), f("1.5")).unwrap();
    assert!(matches!(
        large_jump_intensity(&grows, &probes),
        Err(Error::Hypothesis(_))
    ));
}

#[test]
fn thinning_examples() {
    let mut rng = path_rng(3, 0);
    let q = sde("0", "1", atom_family(1.0, 2.0));
    for _ in 0..100 {
        let o = thinning_step(&q, 1.0, &[0.5], &mut rng).unwrap();
        assert!(o.accepted);
        assert_eq!(o.post, vec![2.5]);
        let o = thinning_step(&q, 1.0, &[10.0], &mut rng).unwrap();
        assert!(!o.accepted);
        assert_eq!(o.post, vec![10.0]);
    }
    assert!(matches!(
        thinning_step(&q, 0.9, &[0.0], &mut rng),
        Err(Error::Hypothesis(_))
    ));

    let q = sde("0", "1", atom_family(0.5, 2.0));
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| thinning_step(&q, 1.0, &[1.0], &mut rng).unwrap().accepted)
        .count();
    let p = hits as f64 / n as f64;
    assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{p}");
}

#[test]
fn degenerate_interlacing_is_the_euler_path() {
    let cfg = StepConfig {
        horizon: 0.5,
        dt: 1e-3,
        ..StepConfig::default()
    };
    let q = make_sde_symbol(
        VectorField::new(vec![f("0.5-x")]),
        MatrixField::scalar(1, f("2^0.5")),
        ExponentFamily::Brownian,
    )
    .unwrap();
    let (est, paths) = simulate_interlaced_paths(&q, &[0.3], &cfg, 4, 17).unwrap();
    assert_eq!(est.lambda, 0.0);
    for (id, p) in paths.iter().enumerate() {
        let (drift, sigma, driver) = q.sde_parts().unwrap();
        let e = simulate_sde_euler(
            drift,
            sigma,
            driver,
            &[0.3],
            &cfg,
            &mut path_rng(17, id as u64),
        )
        .unwrap();
        assert_eq!(p, &e);
    }
    // the same for Q ≡ 2 built as a stable-like symbol
    let q = make_stable_like_symbol(1, f("1"), f("2")).unwrap();
    let a = simulate_interlaced(&q, 0.0, &[0.0], &cfg, &mut path_rng(2, 0)).unwrap();
    let b = simulate_small_jump_flow(&q, &[0.0], &cfg, &mut path_rng(2, 0)).unwrap();
    assert_eq!(a, b);
    assert!(a.jumps.is_empty());
}

#[test]
fn interlaced_unit_atoms() {
    let cfg = StepConfig {
        horizon: 1.0,
        dt: 1e-3,
        record_all: false,
        ..StepConfig::default()
    };
    let q = sde("0", "1", atom_family(1.0, 2.0));
    let n = 10_000;
    let (est, paths) = simulate_interlaced_paths(&q, &[0.0], &cfg, n, 99).unwrap();
    assert_eq!(est.sup, 1.0);
    let accepted = paths
        .iter()
        .map(|p| p.jumps.iter().filter(|j| j.accepted).count())
        .sum::<usize>();
    assert!(accepted > 0);
    // jumps of the atom are large while |x| < 4 and small afterwards; the
    // total count X₁/2 is Poisson(1) either way
    let totals: Vec<f64> = paths.iter().map(|p| p.terminal()[0] / 2.0).collect();
    let mean = totals.iter().sum::<f64>() / n as f64;
    let var = totals.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt(), "{mean}");
    assert!((var - 1.0).abs() < 0.1, "{var}");
}

#[test]
fn seed_determinism_and_csv() {
    let cfg = StepConfig {
        horizon: 0.05,
        dt: 1e-2,
        ..StepConfig::default()
    };
    let q = sde("0", "1", atom_family(20.0, 1.5));
    let (_, a) = simulate_interlaced_paths(&q, &[0.0], &cfg, 3, 5).unwrap();
    let (_, b) = simulate_interlaced_paths(&q, &[0.0], &cfg, 3, 5).unwrap();
    assert_eq!(a, b);
    let mut buf = Vec::new();
    for (i, p) in a.iter().enumerate() {
        p.write_csv(i as u64, &mut buf).unwrap();
    }
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(csv_header(1), "path_id,t,x_1,event");
    assert!(text.lines().all(|l| l.split(',').count() == 4));
    assert!(text.contains(",step"));
    assert!(text.contains(",jump_accepted"));
    let times: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("0,"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

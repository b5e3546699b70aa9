use feller_core::checker::*;
use feller_core::quad::QuadSpec;
use feller_core::*;

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

/// c(x)|ξ|² as a stable-like symbol with α ≡ 2.
fn quadratic(c: &str) -> SymbolField {
    make_stable_like_symbol(1, f(c), f("2")).unwrap()
}

fn sched() -> ProbeSchedule {
    ProbeSchedule::geometric(1, 9, 2, 1)
}

#[test]
fn growth_g_examples() {
    let s = sched();
    let r = check_growth_g(&quadratic("1"), &s).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    // sup over |ξ| ≤ 1/|x| of |ξ|² is |x|⁻²
    for p in &r.probes {
        assert!((p.estimate - p.radius.powi(-2)).abs() < 1e-12 * p.estimate);
    }
    let r = check_growth_g(&quadratic("1+abs(x)^2"), &s).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let last = r.probes.last().unwrap();
    assert!((last.estimate - 1.0).abs() < 1e-5);
    let r = check_growth_g(&quadratic("1+abs(x)^4"), &s).unwrap();
    assert_eq!(r.verdict, Verdict::Fail, "{}", r.summary());
    assert!((r.trend.unwrap() - 2.0).abs() < 0.05);
    assert!(r.worst_probe().unwrap().radius == 512.0);
}

#[test]
fn characteristics_growth_examples() {
    let s = sched();
    let r = check_characteristics_growth(&sde("0", "x", ExponentFamily::Brownian), &s).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    // (ii) is x²/(1+x²) with c → 1
    let ii = &r.sub_reports[1];
    assert!((ii.fitted_constant.unwrap() - 512.0 * 512.0 / (1.0 + 512.0 * 512.0)).abs() < 1e-12);
    assert_eq!(r.sub_reports[0].fitted_constant, Some(0.0));
    assert_eq!(r.sub_reports[2].fitted_constant, Some(0.0));

    let r = check_characteristics_growth(&quadratic("1+abs(x)^4"), &s).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.sub_reports[1].verdict, Verdict::Fail);

    let r = check_characteristics_growth(
        &sde("0", "1", ExponentFamily::IsotropicStable { alpha: 1.5 }),
        &s,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    let iii = &r.sub_reports[2];
    assert!((iii.trend.unwrap() + 1.5).abs() < 0.05, "{}", r.summary());
}

#[test]
fn equivalence_examples() {
    let s = sched();
    let cases = [
        (sde("0", "x", ExponentFamily::Brownian), Verdict::Pass),
        (quadratic("1+abs(x)^4"), Verdict::Fail),
        (
            make_stable_like_symbol(1, f("1+abs(x)^(1.2+0.6/(1+x^2))"), f("1.2+0.6/(1+x^2)"))
                .unwrap(),
            Verdict::Pass,
        ),
    ];
    for (q, want) in cases {
        let r = check_equivalence_p3(&q, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
        assert_eq!(r.sub_reports[0].verdict, want, "{}", r.summary());
        assert_eq!(r.sub_reports[1].verdict, want, "{}", r.summary());
    }
}

#[test]
fn mapping_property_examples() {
    let s = sched();
    let r_list = [0.5, 1.0, 2.0];
    let q = sde("0", "1", ExponentFamily::IsotropicStable { alpha: 1.5 });
    let r = check_mapping_property(&q, &s, &r_list).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());

    // ν(x, B(-x, r)) = ν_L({y: |y + 1| ≤ r/|x|})
    let q = sde("0", "x", ExponentFamily::IsotropicStable { alpha: 1.5 });
    let r = check_mapping_property(&q, &s, &r_list).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
    let c = feller_core::special::stable_constant(1, 1.5);
    for p in &r.sub_reports[0].probes {
        let h = 0.5 / p.radius;
        let want = c * ((1.0 - h).powf(-1.5) - (1.0 + h).powf(-1.5)) / 1.5;
        assert!(
            (p.estimate - want).abs() < 1e-8 * want,
            "{} vs {want}",
            p.estimate
        );
    }

    let cp = ExponentFamily::CompoundPoisson {
        rate: 1.0,
        jumps: vec![Atom {
            location: vec![1.0],
            weight: 1.0,
        }],
    };
    let q = sde("0", "1-x", cp);
    let r = check_mapping_property(&q, &s, &r_list).unwrap();
    assert_eq!(r.verdict, Verdict::Fail, "{}", r.summary());
    assert!(r.sub_reports[1].worst_probe().unwrap().estimate >= 1.0);
}

#[test]
fn local_boundedness_examples() {
    let q = make_stable_like_symbol(1, f("1"), f("1.5")).unwrap();
    assert_eq!(
        check_local_boundedness(&q, &[10.0]).unwrap().verdict,
        Verdict::Pass
    );
    let q = make_stable_like_symbol(1, f("1/abs(x-1)"), f("1.5")).unwrap();
    let r = check_local_boundedness(&q, &[0.5, 2.0]).unwrap();
    assert_eq!(r.sub_reports[0].verdict, Verdict::Pass);
    assert_eq!(r.sub_reports[1].verdict, Verdict::Fail, "{}", r.summary());
    let q = sde(
        "-x",
        "1",
        ExponentFamily::NormalTemperedStable {
            alpha: 1.5,
            kappa: 2.0,
            beta: 0.5,
        },
    );
    assert_eq!(
        check_local_boundedness(&q, &[3.0]).unwrap().verdict,
        Verdict::Pass
    );
}

#[test]
fn g_identity() {
    let spec = QuadSpec::with_rel(1e-10);
    for z in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
        let r = g_identity_residual(&[z], &spec).unwrap();
        assert!(r < 1e-6, "z = {z}: {r}");
    }
    for z in [0.5, 3.0] {
        let r = g_identity_residual(&[z, 0.0, 0.0], &spec).unwrap();
        assert!(r < 1e-6, "d = 3, z = {z}: {r}");
    }
    assert!(matches!(
        g_identity_residual(&[1.0, 0.0], &spec),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn relativistic_constants_pass() {
    let r = check_relativistic_conditions(&f("1"), &f("1"), &f("1"), &sched()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.summary());
}

#[test]
fn monotone_refinement() {
    let q = make_sde_symbol(
        VectorField::new(vec![f("x1"), f("0")]),
        MatrixField::scalar(2, f("1+x2^2")),
        ExponentFamily::IsotropicStable { alpha: 1.3 },
    )
    .unwrap();
    let a = check_growth_g(&q, &ProbeSchedule::geometric(2, 5, 3, 4)).unwrap();
    let b = check_growth_g(&q, &ProbeSchedule::geometric(2, 5, 3, 8)).unwrap();
    for (p, r) in a.probes.iter().zip(&b.probes) {
        assert!(r.estimate >= p.estimate);
    }
}

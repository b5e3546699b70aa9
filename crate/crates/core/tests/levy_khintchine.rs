//! The exposed characteristics reproduce the evaluator through the
//! Lévy-Khintchine formula.

use feller_core::measure::Atom;
use feller_core::quad::QuadSpec;
use feller_core::*;
use num_complex::Complex64;

fn families() -> Vec<ExponentFamily> {
    vec![
        ExponentFamily::Brownian,
        ExponentFamily::IsotropicStable { alpha: 0.8 },
        ExponentFamily::IsotropicStable { alpha: 1.5 },
        ExponentFamily::IsotropicStable { alpha: 2.0 },
        ExponentFamily::RelativisticStable {
            alpha: 1.2,
            rho: 0.7,
        },
        ExponentFamily::RelativisticStable {
            alpha: 0.5,
            rho: 2.0,
        },
        ExponentFamily::LampertiStable {
            alpha: 0.75,
            rho: 1.0,
        },
        ExponentFamily::LampertiStable {
            alpha: 0.3,
            rho: 2.5,
        },
        ExponentFamily::TruncatedLevy {
            alpha: 1.5,
            rho: 1.0,
        },
        ExponentFamily::TruncatedLevy {
            alpha: 0.6,
            rho: 0.3,
        },
        ExponentFamily::NormalTemperedStable {
            alpha: 1.5,
            kappa: 2.0,
            beta: 0.5,
        },
        ExponentFamily::NormalTemperedStable {
            alpha: 0.7,
            kappa: 1.0,
            beta: -0.6,
        },
        ExponentFamily::CompoundPoisson {
            rate: 1.3,
            jumps: vec![
                Atom {
                    location: vec![0.5],
                    weight: 0.25,
                },
                Atom {
                    location: vec![-2.0],
                    weight: 0.75,
                },
            ],
        },
    ]
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + b.norm())
}

#[test]
fn families_in_one_dimension() {
    let spec = QuadSpec::with_rel(1e-8);
    for f in families() {
        let ch = f.characteristics(1).unwrap();
        for xi in [0.3, -1.0, 2.5, 7.0] {
            let want = f.psi(&[xi]);
            let got = ch.symbol(&[xi], &spec).unwrap();
            assert!(close(got, want, 1e-5), "{f:?} ξ={xi}: {got} vs {want}");
        }
    }
}

#[test]
fn isotropic_families_in_higher_dimensions() {
    let spec = QuadSpec::with_rel(1e-8);
    for d in [2usize, 3] {
        for f in [
            ExponentFamily::IsotropicStable { alpha: 1.5 },
            ExponentFamily::RelativisticStable {
                alpha: 1.2,
                rho: 0.7,
            },
        ] {
            let ch = f.characteristics(d).unwrap();
            let mut xi = vec![0.0; d];
            xi[0] = 1.1;
            xi[d - 1] += 0.6;
            let want = f.psi(&xi);
            let got = ch.symbol(&xi, &spec).unwrap();
            assert!(close(got, want, 1e-4), "{f:?} d={d}: {got} vs {want}");
        }
    }
}

#[test]
fn sde_pushforward_with_scalar_sigma() {
    let spec = QuadSpec::with_rel(1e-8);
    // every other family keeps each kind of measure represented
    for f in families().into_iter().step_by(2) {
        let q = make_sde_symbol(
            VectorField::new(vec![ScalarField::parse("0.3 - x").unwrap()]),
            MatrixField::scalar(1, ScalarField::parse("1 + x^2").unwrap()),
            f.clone(),
        )
        .unwrap();
        for x in [-1.5, 0.2] {
            let ch = q.characteristics(&[x]).unwrap();
            for xi in [0.4, -2.0] {
                let want = q.eval(&[x], &[xi]).unwrap();
                let got = ch.symbol(&[xi], &spec).unwrap();
                assert!(
                    close(got, want, 1e-5),
                    "{f:?} x={x} ξ={xi}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn stable_like_and_relativistic_like() {
    let spec = QuadSpec::with_rel(1e-8);
    let sl = make_stable_like_symbol(
        1,
        ScalarField::parse("1 + |x|^1.5").unwrap(),
        ScalarField::parse("1.2 + 0.6/(1 + x^2)").unwrap(),
    )
    .unwrap();
    let rel = make_relativistic_symbol(
        1,
        ScalarField::parse("1 + |x|^3").unwrap(),
        ScalarField::parse("exp(|x|)").unwrap(),
        ScalarField::parse("1.5").unwrap(),
    )
    .unwrap();
    for q in [sl, rel] {
        for x in [0.0, 0.7, 3.0] {
            let ch = q.characteristics(&[x]).unwrap();
            for xi in [0.1, 1.0, 4.0] {
                let want = q.eval(&[x], &[xi]).unwrap();
                let got = ch.symbol(&[xi], &spec).unwrap();
                assert!(
                    close(got, want, 1e-5),
                    "{q:?} x={x} ξ={xi}: {got} vs {want}"
                );
            }
        }
    }
}

//! Shared fixtures for the criterion benches under `benches/`.

use feller_core::{
    make_sde_symbol, make_stable_like_symbol, ExponentFamily, MatrixField, ScalarField,
    SymbolField, VectorField,
};

fn f(s: &str) -> ScalarField {
    ScalarField::parse(s).expect("fixture expressions parse")
}

/// A named set of one-dimensional symbols with different characteristics.
pub fn symbols() -> Vec<(&'static str, SymbolField)> {
    let sde = |drift: &str, sigma: &str, driver| {
        make_sde_symbol(
            VectorField::new(vec![f(drift)]),
            MatrixField::scalar(1, f(sigma)),
            driver,
        )
        .expect("valid SDE")
    };
    vec![
        ("brownian_sde", sde("0", "x", ExponentFamily::Brownian)),
        (
            "stable_sde",
            sde("0", "1", ExponentFamily::IsotropicStable { alpha: 1.5 }),
        ),
        (
            "nts_ou",
            sde(
                "-x",
                "1",
                ExponentFamily::NormalTemperedStable {
                    alpha: 1.5,
                    kappa: 2.0,
                    beta: 0.5,
                },
            ),
        ),
        (
            "stable_like",
            make_stable_like_symbol(1, f("1"), f("1.2 + 0.6/(1 + x^2)"))
                .expect("valid stable-like"),
        ),
    ]
}

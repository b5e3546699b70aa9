//! Example configurations shipped with the binary.
//!
//! Any of them can be run with `--config bundled:<name>`.

/// `(name, toml)` for every bundled configuration.
pub const BUNDLED: &[(&str, &str)] = &[
    ("brownian", include_str!("../configs/brownian.toml")),
    ("brownian_sde", include_str!("../configs/brownian_sde.toml")),
    ("planted", include_str!("../configs/planted.toml")),
    ("stable_like", include_str!("../configs/stable_like.toml")),
    (
        "stable_like_boundary",
        include_str!("../configs/stable_like_boundary.toml"),
    ),
    (
        "isotropic_stable",
        include_str!("../configs/isotropic_stable.toml"),
    ),
    (
        "relativistic_like",
        include_str!("../configs/relativistic_like.toml"),
    ),
    (
        "relativistic_violating",
        include_str!("../configs/relativistic_violating.toml"),
    ),
    ("nts_ou", include_str!("../configs/nts_ou.toml")),
    ("unit_atom_cp", include_str!("../configs/unit_atom_cp.toml")),
    ("cubic_drift", include_str!("../configs/cubic_drift.toml")),
    ("zero", include_str!("../configs/zero.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

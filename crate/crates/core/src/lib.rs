pub mod checker;
pub mod error;
pub mod expr;
pub mod family;
pub mod field;
pub mod generator;
pub mod measure;
pub mod quad;
pub mod report;
pub mod simulator;
pub mod special;
pub mod symbol;
pub mod verifier;

pub use error::{Error, Result};
pub use family::{eval_exponent, ExponentFamily};
pub use field::{MatrixField, ScalarField, VectorField};
pub use measure::{Atom, LevyMeasure};
pub use report::{CheckReport, ProbeRecord, Verdict};
pub use symbol::{
    make_relativistic_symbol, make_sde_symbol, make_stable_like_symbol, scale_symbol,
    validate_cndf, CharacteristicsView, Provenance, SymbolField,
};

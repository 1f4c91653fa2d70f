//! Desk-scale engine for causal perturbative QFT: symbolic normal-ordered
//! operator products with exact sign tracking, momentum-space contraction
//! quadratures with the massless ε-limit, Epstein–Glaser causal splitting,
//! and a truncated-Fock matrix oracle that cross-checks every identity.
//!
//! Layout:
//! - [`fields`]: free-field specs, plane-wave kernels, Dirac spinor algebra
//! - [`fock`]: occupation-basis matrix oracle on a finite momentum grid
//! - [`wick`]: symbolic Wick products and finite Fock expansions
//! - [`quad`]: Gaussian–Hermite test functions, contraction integrals, ε-scan
//! - [`causal`]: Taylor subtraction, θ-splitting, partition sums, axiom checks
//! - [`grassmann`]: finite-rank exterior algebra with Berezin involution
//! - [`config`]/[`report`]: plain-text config and JSON-lines reports
//! - [`suites`]: the randomized verification suites shared by CLI and tests

pub mod causal;
pub mod config;
pub mod fields;
pub mod fock;
pub mod grassmann;
pub mod quad;
pub mod report;
pub mod suites;
pub mod wick;

pub use fields::{FieldId, FieldKind, FieldRoster, FieldSpec, Statistics};
pub use fock::{KreinMetric, ModeGrid, OperatorMatrix};
pub use quad::{ContractionValue, QuadRule, QuadratureSpec, SchwartzTestFn};
pub use wick::{FieldFactor, FockExpansion, NormalMonomial, PairingDescriptor, Part, WickProduct};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

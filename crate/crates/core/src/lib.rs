//! Numerical laboratory for Li-Yau type gradient estimates under a Kato
//! condition on the negative part of the Ricci curvature.
//!
//! The crate discretizes closed surfaces with linear finite elements
//! (cotangent stiffness, lumped mass), realizes heat and Schrödinger
//! semigroups through generalized eigen-decompositions, computes Kato
//! constants by adaptive quadrature and checks the resulting closed-form
//! bounds against measured solutions.
//!
//! Module map:
//! - [`manifold`]: meshes, analytic flat tori, curvature, distances, gradients
//! - [`spectral`]: eigen-decompositions, semigroups, kernels, operator norms
//! - [`kato`]: the Kato constant and admissible `(alpha, beta)` search
//! - [`estimates`]: closed-form constants and bounds
//! - [`verify`]: end-to-end checks producing [`verify::VerificationReport`]s

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod field;
pub mod kato;
pub mod manifold;
pub mod quadrature;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use estimates::EstimateParams;
pub use field::ScalarField;
pub use kato::KatoCertificate;
pub use manifold::{AnalyticFlatTorus, DiscreteManifold, Manifold};
pub use spectral::SpectralData;
pub use verify::VerificationReport;

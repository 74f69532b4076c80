//! Curvature, duality and quasi-Einstein verification for neutral-signature
//! Walker geometry, driven by truncated Taylor arithmetic.

pub mod affine;
pub mod duality;
pub mod error;
pub mod expr;
pub mod extensions;
pub mod field;
pub mod jet;
pub mod loaders;
pub mod tensor;
pub mod verifier;

pub use error::{Error, Result};

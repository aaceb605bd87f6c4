//! Numerical toolkit for multiple q-hypergeometric series, Jackson integrals
//! of Riemann–Papperitz type and the q-difference systems they satisfy.

pub mod error;
pub mod identities;
pub mod jackson;
pub mod operators;
pub mod qcore;
pub mod series;

pub use error::{QError, QResult};
pub use qcore::{QContext, C64};

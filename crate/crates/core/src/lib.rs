//! Whitney-form finite element spaces on cubical meshes.
//!
//! The crate builds the lowest-order polynomial form spaces on boxes, the
//! conforming tensor-product spaces on tensor grids, the adjoint projection
//! onto piecewise Whitney forms, the nonconforming space `W^def` defined by
//! adjoint constraints against conforming dual fields, and a Galerkin solver
//! for the `HΛᵏ` elliptic problem on that space. Structural identities are
//! checked in exact rational arithmetic.

pub mod cell;
pub mod error;
pub mod exterior;
pub mod form;
pub mod global_spaces;
pub mod linalg;
pub mod local_spaces;
pub mod manufactured;
pub mod mesh;
pub mod modular;
pub mod poly;
pub mod projection;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod span;
pub mod text;
pub mod verify;
pub mod whitney;

pub use cell::CellBox;
pub use error::{Error, Result};
pub use exterior::{binomial, enumerate_multi_indices, hodge_sign, wedge_sign, MultiIndex};
pub use form::{Coefficient, Form, PolyForm};
pub use poly::{int, rat, Monomial, Polynomial, Scalar};
pub use text::parse_form;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

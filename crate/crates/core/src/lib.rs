//! Discrete varifolds, isoperimetric inequalities and curve-shortening flow
//! on Riemannian surfaces.

pub mod ambient;
pub mod config;
pub mod error;
pub mod expr;
pub mod family;
pub mod field;
pub mod inequality;
pub mod io;
pub mod mesh;
pub mod flow;
pub mod numerics;
pub mod runner;
pub mod stability;
pub mod varifold;
pub mod welzl;

pub use error::{Error, Result};

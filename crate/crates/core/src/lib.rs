//! Counting square-free and power-free values of integer polynomials and
//! binary forms, together with the local densities, Euler products, sieve
//! inequalities, lattice counts and exponent tables that go with them.

pub mod avgprod;
pub mod census;
pub mod error;
pub mod eulerprod;
pub mod exponents;
pub mod lattice;
pub mod localdens;
pub mod modp;
pub mod numutil;
pub mod par;
pub mod poly;
pub mod soil;

pub use error::{Error, Result};

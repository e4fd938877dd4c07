#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod atomdata;
pub mod blockade;
pub mod constants;
pub mod dipole;
pub mod error;
pub mod expsim;
pub mod halfint;
pub mod io;
pub mod linalg;
pub mod pairint;
pub mod radial;
pub mod wigner;

pub use error::{Error, Result};
pub use halfint::HalfInt;

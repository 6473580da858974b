//! Potential theory, reproducing kernels and canonical systems for finite-gap
//! Denjoy domains `Ω = ℂ \ E`, `E = [0, ∞)` minus finitely many open gaps.

pub mod acceptance;
pub mod boundary;
pub mod canonical;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod kernels;
pub mod potential;
pub mod products;
pub mod quad;
pub mod surface;
pub mod weyl;

pub use error::{Error, Result};
pub use geometry::{Character, Divisor, DivisorAngles, DivisorPoint, Gap, GapSet, GeometryConfig};
pub use num_complex::Complex64;
pub use surface::{Point, Side, Surface};

//! Logarithmic capacity of compact subsets of the complex plane.
//!
//! The set `E` is described by the Jordan curves that bound it. For each
//! boundary component an interior auxiliary point is chosen, and one
//! boundary integral equation with the Neumann kernel is solved per
//! component. The component means of the resulting piecewise constant
//! functions define a small linear system whose last unknown is
//! `log c(E)`.
//!
//! Sets made of real intervals are handled by first "opening up" the
//! intervals into ellipses through an iterative parallel-slit map
//! ([`slitmap`]); Cantor-type sets build on that ([`cantor`]).
//! Closed-form capacities used for validation live in [`reference`].
//!
//! ```no_run
//! use logcap::geometry::{discretize, BoundaryComponent, Mesh};
//! use logcap::capacity::{logcapacity, CapacityOptions};
//! use num_complex::Complex64;
//!
//! let disk = BoundaryComponent::circle(Complex64::new(0.0, 0.0), 2.0);
//! let disc = discretize(&[disk], &Mesh::uniform(256).unwrap()).unwrap();
//! let result = logcapacity(&disc, &CapacityOptions::default()).unwrap();
//! assert!((result.mu - 2.0).abs() < 1e-12);
//! ```

pub mod bie;
pub mod cantor;
pub mod capacity;
mod error;
pub mod geometry;
pub mod reference;
pub mod slitmap;
pub mod spec;

pub use error::{Error, Result};
pub use num_complex::Complex64;

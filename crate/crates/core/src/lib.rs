//! Synthesis of quantum circuits over the controlled gates CX, CV and CV†.
//!
//! A target is given as the images of all computational basis states. The
//! [`search`] module un-applies gates from the target until nothing but the
//! identity remains, either uniformly at random or guided by the
//! complex-valued classifier in [`cvnn`], which is trained on pairs extracted
//! from random circuits by [`dataset`].
//!
//! ```
//! use qsynth::circuit::Circuit;
//! use qsynth::state::circuit_unitary;
//! use qsynth::target::Benchmark;
//!
//! let c = Circuit::parse("CV(0,3), CV(1,3), CV(2,3), CX(0,2), CX(1,2), CVDG(2,3)", 4)?;
//! let hng = Benchmark::Hng.targets()?;
//! assert!(circuit_unitary(&c)?.max_abs_diff(hng.table()) < 1e-12);
//! assert_eq!(c.quantum_cost(), 6);
//! # Ok::<(), qsynth::Error>(())
//! ```

pub mod bench;
pub mod circuit;
pub mod cvnn;
pub mod dataset;
pub mod error;
pub mod gates;
pub mod relabel;
pub mod search;
pub mod state;
pub mod target;

pub use error::{Error, Result};

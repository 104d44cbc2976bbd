//! Quantum natural-language-processing experiments on an exact statevector
//! simulator.

pub mod assoc;
pub mod bow;
pub mod circuit;
pub mod composition;
pub mod datasets;
pub mod error;
pub mod qcbm;
pub mod qprob;
pub mod qsvm;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};

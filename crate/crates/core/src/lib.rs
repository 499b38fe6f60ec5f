// SPDX-License-Identifier: Apache-2.0

pub mod analysis;
pub mod cli;
pub mod dense;
pub mod error;
pub mod krylov;
pub mod netlist;
pub mod orth;
pub mod regularize;
pub mod sparse;
pub mod superpose;
pub mod synth;

pub use dense::DenseBlock;
pub use error::{Error, Result};
pub use sparse::{Factorization, SparseMatrix};

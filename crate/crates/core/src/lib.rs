//! Systematic error of weak measurements whose probe decoheres, with and
//! without postselection of the system.
//!
//! The crate is layered:
//!
//! - [`linalg`]: small dense complex matrices, states, eigendecomposition and
//!   partial traces;
//! - [`quantum`]: weak values and first-order probe states for a generic
//!   [`quantum::WeakMeasurementSetup`];
//! - [`estimation`]: Fisher information, the first-order bias of the maximum
//!   likelihood estimator and a brute-force likelihood maximizer;
//! - [`dephasing`]: a qubit probe dephased by a thermal bosonic bath, with
//!   parameter sweeps;
//! - [`report`] and [`validate`]: the CSV table format and the self-checks.
//!
//! ```
//! use weakbias::dephasing::{bias_point, DephasingParams};
//!
//! let r = bias_point(&DephasingParams::default(), false)?;
//! println!("standard {:e}, postselected {:e}, ratio {:e}", r.dg_n, r.dg_p, r.ratio);
//! # Ok::<(), weakbias::Error>(())
//! ```

pub mod dephasing;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod quantum;
pub mod report;
pub mod validate;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/weak-values.md")]
    pub struct WeakValues;
    #[doc = include_str!("../../../book/src/first-order-bias.md")]
    pub struct FirstOrderBias;
    #[doc = include_str!("../../../book/src/dephasing.md")]
    pub struct Dephasing;
    #[doc = include_str!("../../../book/src/cli-and-csv.md")]
    pub struct CliAndCsv;
    #[doc = include_str!("../../../book/src/validation.md")]
    pub struct Validation;
}

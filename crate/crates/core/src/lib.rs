pub mod catalog;
pub mod complex;
pub mod error;
pub mod harness;
pub mod series;
pub mod theta;

pub use complex::{ComplexAp, DecimalComplex};
pub use error::{Error, Result};
pub use series::{Evaluator, PochPath, ThetaPath};
pub use theta::{NomeFrame, PochSpec};

//! Two-point polynomial configurations `(a, a + P(d))` in random subsets of `[n]`.
//!
//! * [`instances`]: difference sets, the instance graph, exact instance counts.
//! * [`adversary`]: largest instance-free subsets and density verdicts.
//! * [`montecarlo`]: seeded sampling, probability estimates, threshold scans,
//!   exact expectations and union bounds.
//! * [`lemma`]: the ordered bad-set selection process and its accounting.
//!
//! Trial-level work runs on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; results do not depend on which.

pub mod adversary;
pub mod error;
pub mod instances;
pub mod lemma;
pub mod mask;
pub mod montecarlo;
pub mod output;
pub mod par;
pub mod poly;

pub use error::{Error, Result};
pub use mask::{GroundSet, SubsetMask};
pub use par::Parallelism;
pub use poly::Polynomial;

pub use num_rational::BigRational;

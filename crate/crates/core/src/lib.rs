//! Expected data persistency of replicated erasure codes REC(p, p+q, r).
//!
//! A document is split into `p` chunks, encoded into `p + q`, and each
//! encoded chunk is replicated `r` times across `N` storage nodes. Nodes
//! leave one at a time in uniformly random order; the persistency `X` is
//! the number of departures until some document can no longer be restored.
//!
//! * [`specfun`]: log-Gamma, Beta, log-binomial, integer incomplete Beta
//! * [`model`]: parameters, placements, loss rules
//! * [`analytic`]: exact, integral and asymptotic formulas for `E[X]`
//! * [`simulator`]: seeded, parallel Monte Carlo over both placement strategies
//! * [`oracle`]: exact big-integer/rational enumeration used for cross-checks
//!
//! The numeric core is generic over [`Scalar`]; the aliases below fix it to `f64`.

pub mod analytic;
pub mod error;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod simulator;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{
    is_document_lost, validate_symmetric_preconditions, LossSemantics, Persistency, Placement,
    RecParams, RemovalOrder, Strategy, SymmetricViolation, SystemParams,
};
pub use scalar::Scalar;

pub type Real = f64;
pub type Probability = specfun::Probability<Real>;
pub type LogReal = specfun::LogReal<Real>;
pub type AnalyticResult = analytic::AnalyticResult<Real>;
pub type SurvivalCurve = analytic::SurvivalCurve<Real>;
pub type ExactRational = oracle::ExactRational;

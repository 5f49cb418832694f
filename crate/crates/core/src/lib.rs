//! Error-recurrence design of zeroing dynamics: attracting laws, closed-form
//! settling times, disturbance compensation, scalar and time-variant QP
//! simulation, and a verification suite.

pub mod compensate;
pub mod dynamics;
pub mod error;
pub mod laws;
pub mod linalg;
pub mod oracle;
pub mod qp;
pub mod scenario;
pub mod settle;
pub mod specfun;
pub mod verify;

pub use compensate::{compensate, residual_radius, Compensation, GainSplit};
pub use dynamics::{empirical_residual, empirical_settling_time, integrate_scalar, Disturbance, ErsConfig, Trace};
pub use error::{Error, Result};
pub use laws::{sig, AttractingLaw};
pub use qp::{integrate_tznn, make_benchmark_qp, QpTrace, TimeVariantQP};
pub use settle::{EstimateKind, FormulaId, SettlingEstimate};

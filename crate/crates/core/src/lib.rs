//! Closed-loop system identification.
//!
//! The crate implements the stabilized prediction-error method (identify a
//! plant directly through a simulated stable loop with a virtual
//! controller), the dual-Youla method built on a doubly-coprime
//! factorization of the controller, and direct ARX/ARMAX baselines, together
//! with the LTI machinery, closed-loop data generator and optimizers they
//! share.

pub mod coprime;
pub mod direct;
pub mod error;
pub mod linalg;
pub mod lti;
pub mod maglev;
pub mod numfmt;
pub mod optimize;
pub mod poly;
pub mod spem;
pub mod simulate;

pub use error::{Error, Result};

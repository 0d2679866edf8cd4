//! Single-input/single-output LTI systems: transfer functions, state-space
//! realizations, interconnection, discretization and frequency response.
//!
//! Three time domains are supported. `Continuous` uses the differential
//! operator `s`, `Discrete` the forward shift `q` with period `ts`, and
//! `Delta` the delta operator `δ = (q − 1)/ts`. Delta-domain models describe
//! the same sampled systems as shift-domain ones but keep their coefficients
//! well conditioned when `ts` is small compared to the system time constants.

mod discretize;
mod freq;
mod interconnect;
mod sim;
mod state_space;
mod transfer_function;

pub use discretize::{discretize, Hold};
pub use freq::{logspace, FrequencyResponse};
pub use interconnect::{feedback, parallel, scale, series, Sign};
pub use sim::{lsim, DiscreteSimulator};
pub use state_space::StateSpace;
pub use transfer_function::TransferFunction;

use num_complex::Complex64;

use crate::error::Result;

/// Tolerance for stability classification, shared by every domain.
pub const STABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Continuous,
    /// Shift operator `q`, sample period `ts` seconds.
    Discrete { ts: f64 },
    /// Delta operator `(q − 1)/ts`, sample period `ts` seconds.
    Delta { ts: f64 },
}

impl Domain {
    pub fn ts(&self) -> Option<f64> {
        match *self {
            Domain::Continuous => None,
            Domain::Discrete { ts } | Domain::Delta { ts } => Some(ts),
        }
    }

    pub fn is_sampled(&self) -> bool {
        !matches!(self, Domain::Continuous)
    }

    /// Value of the complex variable at angular frequency `omega` (rad/s).
    pub fn contour(&self, omega: f64) -> Complex64 {
        match *self {
            Domain::Continuous => Complex64::new(0.0, omega),
            Domain::Discrete { ts } => Complex64::from_polar(1.0, omega * ts),
            Domain::Delta { ts } => {
                // (e^{jωT} − 1)/T without cancellation for small ωT
                let h = 0.5 * omega * ts;
                Complex64::new(-2.0 * h.sin() * h.sin(), 2.0 * h.sin() * h.cos()) / ts
            }
        }
    }

    /// Signed distance of a pole from the stability boundary; positive means
    /// unstable. Continuous: real part. Shift: `|p| − 1`. Delta: `|1 + ts·p| − 1`.
    pub fn instability(&self, p: Complex64) -> f64 {
        match *self {
            Domain::Continuous => p.re,
            Domain::Discrete { .. } => p.norm() - 1.0,
            Domain::Delta { ts } => (Complex64::new(1.0, 0.0) + p * ts).norm() - 1.0,
        }
    }

    pub fn same_as(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Continuous, Domain::Continuous) => true,
            (Domain::Discrete { ts: a }, Domain::Discrete { ts: b }) | (Domain::Delta { ts: a }, Domain::Delta { ts: b }) => {
                (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
            }
            _ => false,
        }
    }
}

/// Behaviour shared by both system representations.
pub trait Lti {
    fn domain(&self) -> Domain;

    /// Poles sorted by real part, descending.
    fn poles(&self) -> Result<Vec<Complex64>>;

    /// Frequency response at each angular frequency in `omega`.
    fn freq_response(&self, omega: &[f64]) -> Result<FrequencyResponse>;

    /// Largest [`Domain::instability`] over all poles (`-inf` without poles).
    fn max_instability(&self) -> Result<f64> {
        let d = self.domain();
        Ok(self.poles()?.into_iter().map(|p| d.instability(p)).fold(f64::NEG_INFINITY, f64::max))
    }

    fn is_stable(&self) -> Result<bool> {
        Ok(self.max_instability()? < -STABILITY_TOL)
    }
}

pub fn tf_to_ss(tf: &TransferFunction) -> Result<StateSpace> {
    tf.to_ss()
}

pub fn ss_to_tf(ss: &StateSpace) -> Result<TransferFunction> {
    ss.to_tf()
}

pub fn poles(sys: &impl Lti) -> Result<Vec<Complex64>> {
    sys.poles()
}

pub fn is_stable(sys: &impl Lti) -> Result<bool> {
    sys.is_stable()
}

pub fn freq_response(sys: &impl Lti, omega: &[f64]) -> Result<FrequencyResponse> {
    sys.freq_response(omega)
}

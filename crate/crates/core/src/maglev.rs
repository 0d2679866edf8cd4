//! Magnetic-levitation benchmark: linearized plant, H∞ controller, PID
//! alternative and gray-box physical constants.

use num_complex::Complex64;

use crate::lti::{Domain, TransferFunction};

/// True black-box parameters `[θ1, θ2, θ3, θ4]` of
/// `P(p) = θ1 / (p³ + θ2 p² + θ3 p + θ4)`.
pub const THETA_TRUE: [f64; 4] = [-7.148, 13.34, -494.4, -6593.0];

/// Sample period (s).
pub const TS: f64 = 1e-4;
/// Output measurement noise scale (m).
pub const SIGMA_W: f64 = 0.2e-3;
/// Input disturbance scale (V).
pub const SIGMA_XI: f64 = 10.0;
pub const PULSE_WIDTH: f64 = 0.25;
pub const PULSE_HEIGHT: f64 = 1e-3;
pub const PULSE_START: f64 = 0.05;
pub const DURATION: f64 = 1.0;

/// Electromagnetic-force constants at the operating point.
pub const KI_TRUE: f64 = 5.187;
pub const KX_TRUE: f64 = 177.0;

/// Directly measurable gray-box constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrayBoxConstants {
    /// Coil resistance (Ω).
    pub r: f64,
    /// Coil inductance (H).
    pub l: f64,
    /// Ball mass (kg).
    pub m: f64,
}

impl Default for GrayBoxConstants {
    fn default() -> Self {
        Self { r: 27.03, l: 2.027, m: 0.358 }
    }
}

pub fn plant(theta: &[f64; 4]) -> TransferFunction {
    TransferFunction::continuous(vec![theta[0]], vec![1.0, theta[1], theta[2], theta[3]]).expect("monic denominator")
}

/// H∞ controller
/// `−1.197e8 (p+9.294)(p+13.99)(p+20.9) / ((p+399.9)(p+0.1)((p+121.5)² + 141.1²))`.
pub fn controller_hinf() -> TransferFunction {
    let re = |x: f64| Complex64::new(x, 0.0);
    TransferFunction::from_zpk(
        &[re(-9.294), re(-13.99), re(-20.9)],
        &[re(-399.9), re(-0.1), Complex64::new(-121.5, 141.1), Complex64::new(-121.5, -141.1)],
        -1.197e8,
        Domain::Continuous,
    )
    .expect("finite coefficients")
}

/// Filtered PID `kp·(1 + 1/(ti·p) + td·p/(1 + tau·p))` over the common
/// denominator `p·(1 + tau·p)`.
pub fn pid(kp: f64, ti: f64, td: f64, tau: f64) -> TransferFunction {
    let num = vec![kp * (tau + td), kp * (1.0 + tau / ti), kp / ti];
    TransferFunction::continuous(num, vec![tau, 1.0, 0.0]).expect("finite coefficients")
}

/// The PID alternative used as a mismatched virtual controller.
pub fn controller_pid() -> TransferFunction {
    pid(-1798.1, 0.1438, 0.1778, 8.6336e-4)
}

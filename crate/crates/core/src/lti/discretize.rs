use nalgebra::DMatrix;

use super::{Domain, Lti, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::expm;

/// Input reconstruction between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hold {
    /// Piecewise-constant inputs.
    Zoh,
    /// Piecewise-linear (triangle-hold) inputs.
    Foh,
}

/// Exact sampled equivalent of a continuous realization under the given hold.
///
/// ZOH: `exp([[A, B], [0, 0]]·T)` yields `(Φ, Γ)`. FOH: the three-block
/// exponential `exp([[A, B, 0], [0, 0, I/T], [0, 0, 0]]·T)` yields
/// `(Φ, Γ₁, Γ₂)`; with state `ξ = x − Γ₂u` the realization is
/// `(Φ, Γ₁ + ΦΓ₂ − Γ₂, C, D + CΓ₂)`.
pub fn discretize(sys: &StateSpace, ts: f64, hold: Hold) -> Result<StateSpace> {
    if sys.domain() != Domain::Continuous {
        return Err(Error::DomainMismatch);
    }
    if !(ts > 0.0) || !ts.is_finite() {
        return Err(Error::InvalidArgument(format!("sample period must be positive, got {ts}")));
    }
    let n = sys.order();
    let m = sys.inputs();
    let out = Domain::Discrete { ts };
    match hold {
        Hold::Zoh => {
            let mut big = DMatrix::zeros(n + m, n + m);
            big.view_mut((0, 0), (n, n)).copy_from(&(sys.a() * ts));
            big.view_mut((0, n), (n, m)).copy_from(&(sys.b() * ts));
            let e = expm(&big);
            let phi = e.view((0, 0), (n, n)).into_owned();
            let gamma = e.view((0, n), (n, m)).into_owned();
            StateSpace::new(phi, gamma, sys.c().clone(), sys.d().clone(), out)
        }
        Hold::Foh => {
            let size = n + 2 * m;
            let mut big = DMatrix::zeros(size, size);
            big.view_mut((0, 0), (n, n)).copy_from(&(sys.a() * ts));
            big.view_mut((0, n), (n, m)).copy_from(&(sys.b() * ts));
            for i in 0..m {
                big[(n + i, n + m + i)] = 1.0;
            }
            let e = expm(&big);
            let phi = e.view((0, 0), (n, n)).into_owned();
            let g1 = e.view((0, n), (n, m)).into_owned();
            let g2 = e.view((0, n + m), (n, m)).into_owned();
            let b = &g1 + &phi * &g2 - &g2;
            let d = sys.d() + sys.c() * &g2;
            StateSpace::new(phi, b, sys.c().clone(), d, out)
        }
    }
}

use nalgebra::DMatrix;

use super::StateSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

fn check_domains(a: &StateSpace, b: &StateSpace) -> Result<()> {
    use super::Lti;
    if a.domain().same_as(&b.domain()) {
        Ok(())
    } else {
        Err(Error::DomainMismatch)
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut(a.shape(), b.shape()).copy_from(b);
    m
}

/// `first` followed by `second`: the output of `first` drives `second`.
pub fn series(first: &StateSpace, second: &StateSpace) -> Result<StateSpace> {
    use super::Lti;
    check_domains(first, second)?;
    if first.outputs() != second.inputs() {
        return Err(Error::Dimension("series: output/input count mismatch".into()));
    }
    let (n1, n2) = (first.order(), second.order());
    let mut a = block_diag(first.a(), second.a());
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(second.b() * first.c()));
    let mut b = DMatrix::zeros(n1 + n2, first.inputs());
    b.view_mut((0, 0), (n1, first.inputs())).copy_from(first.b());
    b.view_mut((n1, 0), (n2, first.inputs())).copy_from(&(second.b() * first.d()));
    let mut c = DMatrix::zeros(second.outputs(), n1 + n2);
    c.view_mut((0, 0), (second.outputs(), n1)).copy_from(&(second.d() * first.c()));
    c.view_mut((0, n1), (second.outputs(), n2)).copy_from(second.c());
    StateSpace::new(a, b, c, second.d() * first.d(), first.domain())
}

/// Sum of two systems driven by the same input.
pub fn parallel(x: &StateSpace, y: &StateSpace) -> Result<StateSpace> {
    use super::Lti;
    check_domains(x, y)?;
    if x.inputs() != y.inputs() || x.outputs() != y.outputs() {
        return Err(Error::Dimension("parallel: shape mismatch".into()));
    }
    let (n1, n2) = (x.order(), y.order());
    let a = block_diag(x.a(), y.a());
    let mut b = DMatrix::zeros(n1 + n2, x.inputs());
    b.view_mut((0, 0), (n1, x.inputs())).copy_from(x.b());
    b.view_mut((n1, 0), (n2, x.inputs())).copy_from(y.b());
    let mut c = DMatrix::zeros(x.outputs(), n1 + n2);
    c.view_mut((0, 0), (x.outputs(), n1)).copy_from(x.c());
    c.view_mut((0, n1), (x.outputs(), n2)).copy_from(y.c());
    StateSpace::new(a, b, c, x.d() + y.d(), x.domain())
}

/// Output scaled by `k`.
pub fn scale(sys: &StateSpace, k: f64) -> StateSpace {
    use super::Lti;
    StateSpace::new(sys.a().clone(), sys.b().clone(), sys.c() * k, sys.d() * k, sys.domain()).expect("shape preserved")
}

/// Closed loop `forward / (1 ± forward·backward)` with the reference
/// entering the summing junction in front of `forward`. States are ordered
/// `[forward; backward]`.
pub fn feedback(forward: &StateSpace, backward: &StateSpace, sign: Sign) -> Result<StateSpace> {
    use super::Lti;
    check_domains(forward, backward)?;
    forward.require_siso()?;
    backward.require_siso()?;
    // e = r + σ·(backward output), σ = −1 for negative feedback
    let sigma = match sign {
        Sign::Negative => -1.0,
        Sign::Positive => 1.0,
    };
    let (dg, dh) = (forward.feedthrough(), backward.feedthrough());
    let loop_gain = 1.0 - sigma * dg * dh;
    if loop_gain.abs() < 1e-14 {
        return Err(Error::AlgebraicLoop);
    }
    let kappa = 1.0 / loop_gain;
    let (ng, nh) = (forward.order(), backward.order());
    let n = ng + nh;
    // y = κ(Cg xg + σ Dg Ch xh + Dg r)
    let mut cy = DMatrix::zeros(1, n);
    for j in 0..ng {
        cy[(0, j)] = kappa * forward.c()[(0, j)];
    }
    for j in 0..nh {
        cy[(0, ng + j)] = kappa * sigma * dg * backward.c()[(0, j)];
    }
    let dy = kappa * dg;
    // e = r + σ(Ch xh + Dh y)
    let mut ce = DMatrix::zeros(1, n);
    for j in 0..n {
        ce[(0, j)] = sigma * dh * cy[(0, j)];
    }
    for j in 0..nh {
        ce[(0, ng + j)] += sigma * backward.c()[(0, j)];
    }
    let de = 1.0 + sigma * dh * dy;

    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 1);
    for i in 0..ng {
        for j in 0..ng {
            a[(i, j)] = forward.a()[(i, j)];
        }
        let bg = forward.b()[(i, 0)];
        for j in 0..n {
            a[(i, j)] += bg * ce[(0, j)];
        }
        b[(i, 0)] = bg * de;
    }
    for i in 0..nh {
        for j in 0..nh {
            a[(ng + i, ng + j)] = backward.a()[(i, j)];
        }
        let bh = backward.b()[(i, 0)];
        for j in 0..n {
            a[(ng + i, j)] += bh * cy[(0, j)];
        }
        b[(ng + i, 0)] = bh * dy;
    }
    StateSpace::new(a, b, cy, DMatrix::from_element(1, 1, dy), forward.domain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{Domain, Lti, TransferFunction};
    use num_complex::Complex64;

    fn tf(num: &[f64], den: &[f64]) -> StateSpace {
        TransferFunction::continuous(num.to_vec(), den.to_vec()).unwrap().to_ss().unwrap()
    }

    #[test]
    fn unit_gains_negative_feedback_halve() {
        let g = StateSpace::gain(1.0, Domain::Continuous);
        let cl = feedback(&g, &g, Sign::Negative).unwrap();
        assert_eq!(cl.order(), 0);
        assert!((cl.feedthrough() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_loop_detected() {
        let g = StateSpace::gain(1.0, Domain::Continuous);
        assert!(matches!(feedback(&g, &g, Sign::Positive), Err(Error::AlgebraicLoop)));
    }

    #[test]
    fn gains_in_series() {
        let a = StateSpace::gain(2.0, Domain::Continuous);
        let b = StateSpace::gain(3.0, Domain::Continuous);
        assert_eq!(series(&a, &b).unwrap().feedthrough(), 6.0);
        let dyn_sys = tf(&[1.0, 2.0], &[1.0, 3.0, 2.0]);
        let id = StateSpace::gain(1.0, Domain::Continuous);
        let s = series(&dyn_sys, &id).unwrap();
        assert_eq!(s.a(), dyn_sys.a());
        assert_eq!(s.c(), dyn_sys.c());
    }

    #[test]
    fn feedback_matches_rational_formula() {
        let g = tf(&[2.0, 1.0], &[1.0, 0.5, 3.0]);
        let h = tf(&[4.0, 1.0], &[1.0, 7.0]);
        let cl = feedback(&g, &h, Sign::Negative).unwrap();
        for w in [0.1, 1.0, 10.0] {
            let x = Complex64::new(0.0, w);
            let (gv, hv) = (g.eval(x), h.eval(x));
            let want = gv / (1.0 + gv * hv);
            assert!((cl.eval(x) - want).norm() < 1e-12 * want.norm());
        }
        let cl_pos = feedback(&g, &h, Sign::Positive).unwrap();
        let x = Complex64::new(0.0, 2.0);
        let want = g.eval(x) / (1.0 - g.eval(x) * h.eval(x));
        assert!((cl_pos.eval(x) - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn parallel_and_scale() {
        let g = tf(&[1.0], &[1.0, 1.0]);
        let h = tf(&[1.0], &[1.0, 2.0]);
        let p = scale(&parallel(&g, &h).unwrap(), 2.0);
        let x = Complex64::new(0.0, 1.5);
        let want = 2.0 * (g.eval(x) + h.eval(x));
        assert!((p.eval(x) - want).norm() < 1e-14);
        assert!(p.is_stable().unwrap());
    }
}

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Domain, FrequencyResponse, Lti, TransferFunction};
use crate::error::{Error, Result};
use crate::{linalg, poly};

/// State-space realization `(A, B, C, D)`.
///
/// The public operations treat it as SISO; multi-input/multi-output
/// realizations are allowed for internal interconnections (predictors,
/// closed-loop simulators).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    domain: Domain,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>, domain: Domain) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(Self { a, b, c, d, domain })
    }

    pub fn gain(k: f64, domain: Domain) -> Self {
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, 1),
            c: DMatrix::zeros(1, 0),
            d: DMatrix::from_element(1, 1, k),
            domain,
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }

    pub fn feedthrough(&self) -> f64 {
        self.d[(0, 0)]
    }

    pub(crate) fn require_siso(&self) -> Result<()> {
        if self.is_siso() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("expected SISO system, got {} inputs / {} outputs", self.inputs(), self.outputs())))
        }
    }

    /// `C(λI − A)⁻¹B + D` as a coefficient ratio. The denominator is the
    /// characteristic polynomial of `A`; the strictly proper numerator is
    /// `det(λI − A + BC) − det(λI − A)`.
    pub fn to_tf(&self) -> Result<TransferFunction> {
        self.require_siso()?;
        let d = self.d[(0, 0)];
        let n = self.order();
        if n == 0 {
            return TransferFunction::new(vec![d], vec![1.0], self.domain);
        }
        let den = linalg::char_poly(&self.a);
        let closed = linalg::char_poly(&(&self.a - &self.b * &self.c));
        let mut sp: Vec<f64> = Vec::with_capacity(n);
        let mut leading = true;
        for k in 1..=n {
            let diff = closed[k] - den[k];
            // treat pure rounding residue in leading positions as an exact zero
            let noise = 64.0 * f64::EPSILON * closed[k].abs().max(den[k].abs());
            if leading && diff.abs() <= noise {
                continue;
            }
            leading = false;
            sp.push(diff);
        }
        if sp.is_empty() {
            sp.push(0.0);
        }
        let num = poly::add(&sp, &poly::scale(&den, d));
        TransferFunction::new(num, den, self.domain)
    }

    /// Evaluate the SISO response at a point of the complex plane.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let n = self.order();
        let d = Complex64::new(self.d[(0, 0)], 0.0);
        if n == 0 {
            return d;
        }
        let mut m = DMatrix::<Complex64>::from_fn(n, n, |i, j| Complex64::new(-self.a[(i, j)], 0.0));
        for i in 0..n {
            m[(i, i)] += x;
        }
        let rhs = DMatrix::<Complex64>::from_fn(n, 1, |i, _| Complex64::new(self.b[(i, 0)], 0.0));
        match m.lu().solve(&rhs) {
            Some(sol) => (0..n).fold(d, |acc, i| acc + sol[(i, 0)] * self.c[(0, i)]),
            None => Complex64::new(f64::INFINITY, 0.0),
        }
    }

    /// Shift-domain equivalent of a delta-domain realization.
    pub fn to_shift(&self) -> Result<StateSpace> {
        match self.domain {
            Domain::Discrete { .. } => Ok(self.clone()),
            Domain::Delta { ts } => {
                let n = self.order();
                let a = DMatrix::identity(n, n) + &self.a * ts;
                Self::new(a, &self.b * ts, self.c.clone(), self.d.clone(), Domain::Discrete { ts })
            }
            Domain::Continuous => Err(Error::DomainMismatch),
        }
    }

    /// Delta-domain equivalent of a shift-domain realization.
    pub fn to_delta(&self) -> Result<StateSpace> {
        match self.domain {
            Domain::Delta { .. } => Ok(self.clone()),
            Domain::Discrete { ts } => {
                let n = self.order();
                let a = (&self.a - DMatrix::identity(n, n)) / ts;
                Self::new(a, &self.b / ts, self.c.clone(), self.d.clone(), Domain::Delta { ts })
            }
            Domain::Continuous => Err(Error::DomainMismatch),
        }
    }

    /// Inverse of a biproper SISO system.
    pub fn inverse(&self) -> Result<StateSpace> {
        self.require_siso()?;
        let d = self.d[(0, 0)];
        if d == 0.0 {
            return Err(Error::InvalidSystem("inverse of a strictly proper system is improper".into()));
        }
        let di = 1.0 / d;
        let a = &self.a - &self.b * &self.c * di;
        Self::new(a, &self.b * di, &self.c * (-di), DMatrix::from_element(1, 1, di), self.domain)
    }

    pub fn negate(&self) -> StateSpace {
        Self { c: -&self.c, d: -&self.d, ..self.clone() }
    }
}

impl Lti for StateSpace {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    fn freq_response(&self, omega: &[f64]) -> Result<FrequencyResponse> {
        self.require_siso()?;
        let value = omega.iter().map(|&w| self.eval(self.domain.contour(w))).collect();
        FrequencyResponse::new(omega.to_vec(), value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_gain_to_tf() {
        let tf = StateSpace::gain(3.0, Domain::Continuous).to_tf().unwrap();
        assert_eq!(tf.num(), &[3.0]);
        assert_eq!(tf.den(), &[1.0]);
    }

    #[test]
    fn first_order_lag_to_tf() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let ss = StateSpace::new(one(-1.0), one(1.0), one(1.0), one(0.0), Domain::Continuous).unwrap();
        let tf = ss.to_tf().unwrap();
        assert_eq!(tf.num(), &[1.0]);
        assert_eq!(tf.den(), &[1.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let r = StateSpace::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1), Domain::Continuous);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn delta_shift_round_trip() {
        let tf = TransferFunction::new(vec![0.5, 0.1], vec![1.0, -1.5, 0.7], Domain::Discrete { ts: 0.01 }).unwrap();
        let ss = tf.to_ss().unwrap();
        let back = ss.to_delta().unwrap().to_shift().unwrap();
        assert!((back.a() - ss.a()).abs().max() < 1e-12);
        let x = Complex64::from_polar(1.0, 0.3);
        assert!((ss.eval(x) - tf.eval(x)).norm() < 1e-12);
        let dl = ss.to_delta().unwrap();
        let xd = Domain::Delta { ts: 0.01 }.contour(0.3 / 0.01);
        assert!((dl.eval(xd) - tf.eval(x)).norm() < 1e-10);
    }

    #[test]
    fn inverse_cancels() {
        let tf = TransferFunction::continuous(vec![2.0, 3.0], vec![1.0, 5.0]).unwrap();
        let ss = tf.to_ss().unwrap();
        let inv = ss.inverse().unwrap();
        let x = Complex64::new(0.3, 2.0);
        assert!((ss.eval(x) * inv.eval(x) - 1.0).norm() < 1e-13);
    }
}

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Domain, FrequencyResponse, Lti, StateSpace};
use crate::error::{Error, Result};
use crate::poly;

/// Rational SISO transfer function `num/den`, coefficients in descending
/// powers of the domain variable.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    domain: Domain,
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>, domain: Domain) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidSystem("non-finite coefficient".into()));
        }
        let den = poly::trim(&den);
        if den[0] == 0.0 {
            return Err(Error::InvalidSystem("denominator is identically zero".into()));
        }
        if let Some(ts) = domain.ts() {
            if !(ts > 0.0) {
                return Err(Error::InvalidArgument(format!("sample period must be positive, got {ts}")));
            }
        }
        Ok(Self { num: poly::trim(&num), den, domain })
    }

    pub fn continuous(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        Self::new(num, den, Domain::Continuous)
    }

    pub fn gain(k: f64, domain: Domain) -> Self {
        Self { num: vec![k], den: vec![1.0], domain }
    }

    /// Build from zeros, poles and a gain multiplying the monic factors.
    pub fn from_zpk(zeros: &[Complex64], poles: &[Complex64], gain: f64, domain: Domain) -> Result<Self> {
        Self::new(poly::scale(&poly::from_roots(zeros), gain), poly::from_roots(poles), domain)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    /// Denominator degree.
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        poly::is_zero(&self.num) || self.num.len() <= self.den.len()
    }

    pub fn is_strictly_proper(&self) -> bool {
        poly::is_zero(&self.num) || self.num.len() < self.den.len()
    }

    /// Same system with a monic denominator.
    pub fn normalized(&self) -> Self {
        let lead = self.den[0];
        Self { num: poly::scale(&self.num, 1.0 / lead), den: poly::scale(&self.den, 1.0 / lead), domain: self.domain }
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        poly::eval(&self.num, x) / poly::eval(&self.den, x)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if poly::is_zero(&self.num) {
            return Ok(Vec::new());
        }
        poly::roots(&self.num)
    }

    pub fn with_domain(&self, domain: Domain) -> Self {
        Self { domain, ..self.clone() }
    }

    /// Controllable canonical realization.
    ///
    /// With monic `den = [1, a1, …, an]` and padded `num = [b0, …, bn]`,
    /// `A` has first row `[−a1 … −an]` and ones on the subdiagonal, `B = e1`,
    /// `C = [b1 − b0·a1, …, bn − b0·an]`, `D = b0`.
    pub fn to_ss(&self) -> Result<StateSpace> {
        if !self.is_proper() {
            return Err(Error::Improper { num: self.num.len() - 1, den: self.order() });
        }
        let tf = self.normalized();
        let n = tf.order();
        let b = poly::pad(&tf.num, n + 1);
        let d0 = b[0];
        let mut a = DMatrix::zeros(n, n);
        let mut bm = DMatrix::zeros(n, 1);
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            a[(0, j)] = -tf.den[j + 1];
            c[(0, j)] = b[j + 1] - d0 * tf.den[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        if n > 0 {
            bm[(0, 0)] = 1.0;
        }
        StateSpace::new(a, bm, c, DMatrix::from_element(1, 1, d0), self.domain)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        Self::new(poly::mul(&self.num, &other.num), poly::mul(&self.den, &other.den), self.domain)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        let num = poly::add(&poly::mul(&self.num, &other.den), &poly::mul(&other.num, &self.den));
        Self::new(num, poly::mul(&self.den, &other.den), self.domain)
    }

    pub fn neg(&self) -> Self {
        Self { num: poly::scale(&self.num, -1.0), ..self.clone() }
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.domain.same_as(&other.domain) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

impl Lti for TransferFunction {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn poles(&self) -> Result<Vec<Complex64>> {
        match self.domain {
            // shift-operator roots near q = 1 are found through the delta form
            Domain::Discrete { ts } => {
                let mut p: Vec<Complex64> = poly::roots(&poly::shift_to_delta(&self.den, ts))?.into_iter().map(|r| 1.0 + r * ts).collect();
                crate::linalg::sort_desc_real(&mut p);
                Ok(p)
            }
            _ => poly::roots(&self.den),
        }
    }

    fn freq_response(&self, omega: &[f64]) -> Result<FrequencyResponse> {
        let (num, den, domain) = match self.domain {
            Domain::Discrete { ts } => (poly::shift_to_delta(&self.num, ts), poly::shift_to_delta(&self.den, ts), Domain::Delta { ts }),
            d => (self.num.clone(), self.den.clone(), d),
        };
        let poles = poly::roots(&den)?;
        let value = omega
            .iter()
            .map(|&w| {
                let x = domain.contour(w);
                if poles.iter().any(|p| (x - p).norm() <= 1e-12 * p.norm().max(1.0)) {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    poly::eval(&num, x) / poly::eval(&den, x)
                }
            })
            .collect();
        FrequencyResponse::new(omega.to_vec(), value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::Lti;

    #[test]
    fn unit_gain_realizes_as_static() {
        let tf = TransferFunction::continuous(vec![1.0], vec![1.0]).unwrap();
        let ss = tf.to_ss().unwrap();
        assert_eq!(ss.order(), 0);
        assert_eq!(ss.d()[(0, 0)], 1.0);
    }

    #[test]
    fn improper_rejected() {
        let tf = TransferFunction::continuous(vec![1.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(tf.to_ss(), Err(Error::Improper { num: 2, den: 1 })));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(TransferFunction::continuous(vec![1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn biproper_feedthrough() {
        let tf = TransferFunction::continuous(vec![2.0, 3.0], vec![1.0, 1.0]).unwrap();
        let ss = tf.to_ss().unwrap();
        assert_eq!(ss.d()[(0, 0)], 2.0);
        assert_eq!(ss.c()[(0, 0)], 1.0);
    }

    #[test]
    fn first_order_lag_pole() {
        let tf = TransferFunction::continuous(vec![1.0], vec![1.0, 1.0]).unwrap();
        let p = tf.poles().unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].re + 1.0).abs() < 1e-15);
        assert!(tf.is_stable().unwrap());
    }

    #[test]
    fn pole_on_contour_flagged() {
        let integrator = TransferFunction::continuous(vec![1.0], vec![1.0, 0.0]).unwrap();
        let fr = integrator.freq_response(&[1e-13, 1.0]).unwrap();
        assert!(fr.value[0].re.is_infinite());
        assert!((fr.value[1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }
}

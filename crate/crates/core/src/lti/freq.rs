use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex response sampled on a strictly increasing positive frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub omega: Vec<f64>,
    pub value: Vec<Complex64>,
}

impl FrequencyResponse {
    pub fn new(omega: Vec<f64>, value: Vec<Complex64>) -> Result<Self> {
        if omega.len() != value.len() {
            return Err(Error::Dimension("frequency grid and response lengths differ".into()));
        }
        if omega.iter().any(|&w| !(w > 0.0)) || omega.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidArgument("frequency grid must be positive and strictly increasing".into()));
        }
        Ok(Self { omega, value })
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.value.iter().map(|v| v.norm()).collect()
    }

    /// Phase in degrees, unwrapped along the grid starting from the
    /// principal value at the first point.
    pub fn phase_deg(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.value.len());
        let mut prev: Option<f64> = None;
        for v in &self.value {
            let mut p = v.arg().to_degrees();
            if let Some(q) = prev {
                while p - q > 180.0 {
                    p -= 360.0;
                }
                while p - q < -180.0 {
                    p += 360.0;
                }
            }
            out.push(p);
            if p.is_finite() {
                prev = Some(p);
            }
        }
        out
    }
}

/// `points` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

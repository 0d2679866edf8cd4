//! Real polynomials stored as coefficient vectors in descending powers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::linalg;

/// Drop leading exact zeros, keeping at least one coefficient.
pub fn trim(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|&c| c != 0.0).unwrap_or(p.len().saturating_sub(1));
    if p.is_empty() {
        return vec![0.0];
    }
    p[first..].to_vec()
}

/// Drop leading coefficients that are negligible against the largest one.
pub fn trim_rel(p: &[f64], rel: f64) -> Vec<f64> {
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let first = p.iter().position(|c| c.abs() > rel * scale).unwrap_or(p.len().saturating_sub(1));
    if p.is_empty() {
        return vec![0.0];
    }
    p[first..].to_vec()
}

pub fn degree(p: &[f64]) -> usize {
    trim(p).len() - 1
}

pub fn is_zero(p: &[f64]) -> bool {
    p.iter().all(|&c| c == 0.0)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum aligned on the constant term.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    for (i, &x) in b.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    out
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    add(a, &scale(b, -1.0))
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|c| c * k).collect()
}

/// Left-pad with zeros to `len` coefficients.
pub fn pad(a: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len.saturating_sub(a.len())];
    out.extend_from_slice(a);
    out
}

pub fn eval(p: &[f64], x: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

pub fn eval_real(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Roots as eigenvalues of the (balanced) companion matrix.
pub fn roots(p: &[f64]) -> Result<Vec<Complex64>> {
    let p = trim(p);
    let n = p.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    // strip zero roots
    let nz = p.iter().rev().take_while(|&&c| c == 0.0).count();
    let core = &p[..p.len() - nz];
    let m = core.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); nz];
    if m > 0 {
        let mut comp = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            comp[(0, j)] = -core[j + 1] / core[0];
        }
        for i in 1..m {
            comp[(i, i - 1)] = 1.0;
        }
        out.extend(linalg::eigenvalues(&comp)?);
    }
    linalg::sort_desc_real(&mut out);
    Ok(out)
}

/// Coefficients of `p(1 + ts·δ)` in descending powers of `δ`. The Taylor
/// shift is summed exactly in double-double arithmetic, so shift-operator
/// polynomials with roots clustered at `q = 1` keep their small
/// low-order coefficients.
pub fn shift_to_delta(p: &[f64], ts: f64) -> Vec<f64> {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }
    fn dd_add(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
        let (s, e) = two_sum(x.0, y.0);
        let e = e + x.1 + y.1;
        two_sum(s, e)
    }
    let n = p.len().saturating_sub(1);
    let mut c: Vec<(f64, f64)> = p.iter().map(|&v| (v, 0.0)).collect();
    for i in 0..n {
        for j in 1..=n - i {
            c[j] = dd_add(c[j], c[j - 1]);
        }
    }
    let mut scale = 1.0;
    let mut out = vec![0.0; n + 1];
    for j in (0..=n).rev() {
        out[j] = (c[j].0 + c[j].1) * scale;
        scale *= ts;
    }
    out
}

/// Monic real polynomial with the given roots. Complex roots are expected
/// in conjugate pairs; the imaginary residue is discarded.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &c) in acc.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        acc = next;
    }
    acc.iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_shift_of_clustered_roots() {
        // q³ − 3q² + 3q − 1 + 2⁻⁵⁰ = (q − 1)³ + 2⁻⁵⁰
        let tiny = 2f64.powi(-50);
        let d = shift_to_delta(&[1.0, -3.0, 3.0, -1.0 + tiny], 0.5);
        assert_eq!(d, vec![0.125, 0.0, 0.0, tiny]);
        let q = from_roots(&[Complex64::new(1.0 + 1e-3, 0.0), Complex64::new(1.0 - 2e-3, 0.0)]);
        let d = shift_to_delta(&q, 1e-4);
        for (a, b) in d.iter().zip([1e-8, 1e-3 * 1e-4, -2e-6]) {
            assert!((a - b).abs() <= 1e-9 * b.abs(), "{d:?}");
        }
    }

    #[test]
    fn arithmetic() {
        assert_eq!(mul(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
        assert_eq!(add(&[1.0, 2.0, 3.0], &[1.0]), vec![1.0, 2.0, 4.0]);
        assert_eq!(sub(&[1.0, 2.0], &[1.0, 2.0]), vec![0.0, 0.0]);
        assert_eq!(trim(&[0.0, 0.0, 2.0, 0.0]), vec![2.0, 0.0]);
        assert_eq!(trim(&[0.0, 0.0]), vec![0.0]);
        assert_eq!(degree(&[0.0, 3.0, 1.0]), 1);
    }

    #[test]
    fn roots_with_zero_and_complex() {
        // s (s^2 + 2s + 5) -> 0, -1 ± 2j
        let r = roots(&[1.0, 2.0, 5.0, 0.0]).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0].norm() < 1e-15);
        assert!((r[1] - Complex64::new(-1.0, 2.0)).norm() < 1e-12);
        assert!((r[2] - Complex64::new(-1.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_round_trip() {
        let rs = [Complex64::new(-0.1, 0.0), Complex64::new(-121.5, 141.1), Complex64::new(-121.5, -141.1), Complex64::new(-399.9, 0.0)];
        let p = from_roots(&rs);
        let got = roots(&p).unwrap();
        for want in rs {
            let best = got.iter().map(|g| (g - want).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9 * want.norm().max(1.0), "{want}: {best}");
        }
    }
}

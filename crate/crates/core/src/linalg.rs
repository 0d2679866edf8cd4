//! Dense real linear-algebra kernels: balancing, Hessenberg reduction,
//! shifted-QR eigenvalues, characteristic polynomials and the matrix
//! exponential.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;
const MAX_QR_ITERATIONS: usize = 60;

/// Diagonal similarity scaling `A' = D⁻¹·A·D` (Parlett–Reinsch, radix 2).
///
/// Returns the balanced matrix and the diagonal of `D`. Powers of two keep
/// the transformation exact in floating point.
pub fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut scale = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
                scale[i] *= f;
            }
        }
    }
    (m, scale)
}

/// Reduce to upper Hessenberg form by stabilized elementary similarity
/// transformations. Entries below the first subdiagonal are zeroed.
pub fn hessenberg(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    for m in 1..n - 1 {
        let mut x: f64 = 0.0;
        let mut piv = m;
        for j in m..n {
            if h[(j, m - 1)].abs() > x.abs() {
                x = h[(j, m - 1)];
                piv = j;
            }
        }
        if piv != m {
            h.swap_rows(piv, m);
            h.swap_columns(piv, m);
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = h[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    h[(i, m - 1)] = y;
                    for j in m..n {
                        let v = h[(m, j)];
                        h[(i, j)] -= y * v;
                    }
                    for j in 0..n {
                        let v = h[(j, i)];
                        h[(j, m)] += y * v;
                    }
                }
            }
        }
    }
    for j in 0..n {
        for i in j + 2..n {
            h[(i, j)] = 0.0;
        }
    }
    h
}

/// Eigenvalues of a real upper Hessenberg matrix by Francis double-shift QR.
#[allow(unused_assignments)]
fn hqr(h: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    // 1-based working copy, mirrors the classic formulation.
    let mut a = vec![0.0; (n + 1) * (n + 1)];
    let ix = |i: usize, j: usize| i * (n + 1) + j;
    for i in 0..n {
        for j in 0..n {
            a[ix(i + 1, j + 1)] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[ix(i, j)].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                s = a[ix(l - 1, l - 1)].abs() + a[ix(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[ix(l, l - 1)].abs() + s == s {
                    a[ix(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[ix(nn, nn)];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                y = a[ix(nn - 1, nn - 1)];
                w = a[ix(nn, nn - 1)] * a[ix(nn - 1, nn)];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_ITERATIONS {
                        return Err(Error::NoConvergence);
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            a[ix(i, i)] -= x;
                        }
                        s = a[ix(nn, nn - 1)].abs() + a[ix(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a[ix(m, m)];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[ix(m + 1, m)] + a[ix(m, m + 1)];
                        q = a[ix(m + 1, m + 1)] - z - r - s;
                        r = a[ix(m + 2, m + 1)];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[ix(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[ix(m - 1, m - 1)].abs() + z.abs() + a[ix(m + 1, m + 1)].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[ix(i, i - 2)] = 0.0;
                        if i != m + 2 {
                            a[ix(i, i - 3)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nn {
                        if k != m {
                            p = a[ix(k, k - 1)];
                            q = a[ix(k + 1, k - 1)];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[ix(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[ix(k, k - 1)] = -a[ix(k, k - 1)];
                                }
                            } else {
                                a[ix(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[ix(k, j)] + q * a[ix(k + 1, j)];
                                if k != nn - 1 {
                                    p += r * a[ix(k + 2, j)];
                                    a[ix(k + 2, j)] -= p * z;
                                }
                                a[ix(k + 1, j)] -= p * y;
                                a[ix(k, j)] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[ix(i, k)] + y * a[ix(i, k + 1)];
                                if k != nn - 1 {
                                    p += z * a[ix(i, k + 2)];
                                    a[ix(i, k + 2)] -= p * r;
                                }
                                a[ix(i, k + 1)] -= p * q;
                                a[ix(i, k)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn == 0 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Eigenvalues of a real square matrix (balance, Hessenberg, shifted QR).
///
/// Sorted by real part descending, ties broken by imaginary part descending.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("eigenvalues of {}x{} matrix", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSystem("non-finite matrix entry".into()));
    }
    let (b, _) = balance(a);
    let h = hessenberg(&b);
    let mut ev = hqr(&h)?;
    sort_desc_real(&mut ev);
    Ok(ev)
}

pub(crate) fn sort_desc_real(v: &mut [Complex64]) {
    v.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

/// Characteristic polynomial `det(sI − A)` in descending powers (monic),
/// evaluated through the Hessenberg determinant recurrence.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    if n == 0 {
        return vec![1.0];
    }
    let h = hessenberg(a);
    // p[k] holds the characteristic polynomial of the leading k×k block,
    // stored in ascending powers while building.
    let mut p: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    p.push(vec![1.0]);
    for k in 1..=n {
        let prev = &p[k - 1];
        let hkk = h[(k - 1, k - 1)];
        let mut next = vec![0.0; k + 1];
        for (i, &c) in prev.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= hkk * c;
        }
        let mut prod = 1.0;
        for i in (1..k).rev() {
            prod *= h[(i, i - 1)];
            let coef = h[(i - 1, k - 1)] * prod;
            if coef != 0.0 {
                for (j, &c) in p[i - 1].iter().enumerate() {
                    next[j] -= coef * c;
                }
            }
        }
        p.push(next);
    }
    let mut out = p.pop().unwrap_or_else(|| vec![1.0]);
    out.reverse();
    out
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant, applied to the balanced matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (bal, d) = balance(a);
    let norm = norm1(&bal);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scaled = &bal * 2f64.powi(-s);

    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let num = &v + &u;
    let den = &v - &u;
    let mut r = den.lu().solve(&num).expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..s {
        r = &r * &r;
    }
    // undo balancing: exp(A) = D·exp(D⁻¹AD)·D⁻¹
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] *= d[i] / d[j];
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_companion_cubic() {
        // (s-1)(s-2)(s-3) = s^3 - 6s^2 + 11s - 6
        let a = DMatrix::from_row_slice(3, 3, &[6.0, -11.0, 6.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let ev = eigenvalues(&a).unwrap();
        let re: Vec<f64> = ev.iter().map(|c| c.re).collect();
        for (got, want) in re.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(ev.iter().all(|c| c.im.abs() < 1e-12));
    }

    #[test]
    fn eigenvalues_complex_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -4.0, 1.0, 0.0]);
        let ev = eigenvalues(&a).unwrap();
        assert!((ev[0] - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(0.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_triangular_and_zero() {
        let a = DMatrix::<f64>::zeros(4, 4);
        let ev = eigenvalues(&a).unwrap();
        assert!(ev.iter().all(|c| c.norm() == 0.0));
        let t = DMatrix::from_row_slice(3, 3, &[-1.0, 5.0, 7.0, 0.0, -2.0, 3.0, 0.0, 0.0, -3.0]);
        let ev = eigenvalues(&t).unwrap();
        assert!((ev[0].re + 1.0).abs() < 1e-12 && (ev[2].re + 3.0).abs() < 1e-12);
    }

    #[test]
    fn char_poly_matches_known() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, -1.0, 3.0, 2.0, 4.0, 0.0, 1.0]);
        let p = char_poly(&a);
        // trace = 6, det computed by cofactor expansion
        let det = 2.0 * (3.0 * 1.0 - 2.0 * 0.0) - 1.0 * (-1.0 * 1.0 - 2.0 * 4.0) + 0.5 * (0.0 - 3.0 * 4.0);
        assert!((p[0] - 1.0).abs() < 1e-14);
        assert!((p[1] + 6.0).abs() < 1e-12);
        assert!((p[3] + det).abs() < 1e-12);
        // sum of principal 2x2 minors
        let m2 = (2.0 * 3.0 + 1.0) + (2.0 * 1.0 - 0.5 * 4.0) + (3.0 * 1.0 - 0.0);
        assert!((p[2] - m2).abs() < 1e-12);
    }

    #[test]
    fn expm_scalar_and_nilpotent() {
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!((expm(&a)[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = expm(&n);
        assert_eq!(e[(0, 0)], 1.0);
        assert!((e[(0, 1)] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn expm_rotation_large_norm() {
        let w = 50.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - w.cos()).abs() < 1e-11);
        assert!((e[(0, 1)] - w.sin()).abs() < 1e-11);
    }

    #[test]
    fn expm_badly_scaled_diagonalizable() {
        // A = V diag(-1, -400) V^-1 with wildly scaled coordinates
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 1e4, 1e-4, 2.0]);
        let vinv = v.clone().try_inverse().unwrap();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -400.0]));
        let a = &v * &lam * &vinv;
        let t = 1e-2;
        let e = expm(&(&a * t));
        let want = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![(-t).exp(), (-400.0 * t).exp()])) * &vinv;
        let err = (&e - &want).abs().max();
        assert!(err < 1e-9 * want.abs().max(), "err {err}");
    }
}

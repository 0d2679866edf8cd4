use super::{Domain, Lti, StateSpace};
use crate::error::{Error, Result};

/// Zero-initial-state simulator for a sampled realization, with the matrices
/// flattened row-major for a tight inner loop.
#[derive(Debug, Clone)]
pub struct DiscreteSimulator {
    n: usize,
    m: usize,
    p: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl DiscreteSimulator {
    pub fn new(sys: &StateSpace) -> Result<Self> {
        let sys = match sys.domain() {
            Domain::Continuous => return Err(Error::DomainMismatch),
            Domain::Delta { .. } => sys.to_shift()?,
            Domain::Discrete { .. } => sys.clone(),
        };
        let flat = |m: &nalgebra::DMatrix<f64>| {
            let mut v = Vec::with_capacity(m.len());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    v.push(m[(i, j)]);
                }
            }
            v
        };
        Ok(Self {
            n: sys.order(),
            m: sys.inputs(),
            p: sys.outputs(),
            a: flat(sys.a()),
            b: flat(sys.b()),
            c: flat(sys.c()),
            d: flat(sys.d()),
        })
    }

    /// Simulate; `inputs[j]` is the sample sequence of input `j`. Returns one
    /// sequence per output.
    pub fn run(&self, inputs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        if inputs.len() != self.m {
            return Err(Error::Dimension(format!("expected {} input signals, got {}", self.m, inputs.len())));
        }
        let len = inputs.first().map_or(0, |s| s.len());
        if inputs.iter().any(|s| s.len() != len) {
            return Err(Error::Dimension("input signals differ in length".into()));
        }
        let (n, m, p) = (self.n, self.m, self.p);
        let mut out = vec![vec![0.0; len]; p];
        let mut x = vec![0.0; n];
        let mut xn = vec![0.0; n];
        let mut u = vec![0.0; m];
        for k in 0..len {
            for j in 0..m {
                u[j] = inputs[j][k];
            }
            for i in 0..p {
                let mut acc = 0.0;
                let crow = &self.c[i * n..(i + 1) * n];
                for (cv, xv) in crow.iter().zip(&x) {
                    acc += cv * xv;
                }
                let drow = &self.d[i * m..(i + 1) * m];
                for (dv, uv) in drow.iter().zip(&u) {
                    acc += dv * uv;
                }
                out[i][k] = acc;
            }
            for i in 0..n {
                let mut acc = 0.0;
                let arow = &self.a[i * n..(i + 1) * n];
                for (av, xv) in arow.iter().zip(&x) {
                    acc += av * xv;
                }
                let brow = &self.b[i * m..(i + 1) * m];
                for (bv, uv) in brow.iter().zip(&u) {
                    acc += bv * uv;
                }
                xn[i] = acc;
            }
            std::mem::swap(&mut x, &mut xn);
        }
        Ok(out)
    }

    /// Single-output convenience: sum of squared differences between the
    /// simulated output and `target`, without materializing the output.
    pub fn sse_against(&self, inputs: &[&[f64]], target: &[f64]) -> Result<f64> {
        if self.p != 1 {
            return Err(Error::Dimension("sse_against needs a single output".into()));
        }
        if inputs.len() != self.m || inputs.iter().any(|s| s.len() != target.len()) {
            return Err(Error::Dimension("input/target length mismatch".into()));
        }
        macro_rules! fixed {
            ($($n:literal)*) => {
                match (self.n, self.m) {
                    $(($n, 1) => return Ok(sse_fixed::<$n, 1>(self, inputs, target)),
                      ($n, 2) => return Ok(sse_fixed::<$n, 2>(self, inputs, target)),)*
                    _ => {}
                }
            };
        }
        fixed!(1 2 3 4 5 6 7 8 9 10 11 12);
        let (n, m) = (self.n, self.m);
        let mut x = vec![0.0; n];
        let mut xn = vec![0.0; n];
        let mut u = vec![0.0; m];
        let mut sse = 0.0;
        for k in 0..target.len() {
            for j in 0..m {
                u[j] = inputs[j][k];
            }
            let mut yk = 0.0;
            for (cv, xv) in self.c.iter().zip(&x) {
                yk += cv * xv;
            }
            for (dv, uv) in self.d.iter().zip(&u) {
                yk += dv * uv;
            }
            let e = target[k] - yk;
            sse += e * e;
            for i in 0..n {
                let mut acc = 0.0;
                let arow = &self.a[i * n..(i + 1) * n];
                for (av, xv) in arow.iter().zip(&x) {
                    acc += av * xv;
                }
                let brow = &self.b[i * m..(i + 1) * m];
                for (bv, uv) in brow.iter().zip(&u) {
                    acc += bv * uv;
                }
                xn[i] = acc;
            }
            std::mem::swap(&mut x, &mut xn);
        }
        Ok(sse)
    }
}

/// Fixed-size kernel: column-major state update so the compiler can unroll
/// and vectorize across states.
fn sse_fixed<const N: usize, const M: usize>(sim: &DiscreteSimulator, inputs: &[&[f64]], target: &[f64]) -> f64 {
    let mut acol = [[0.0; N]; N];
    let mut bcol = [[0.0; N]; M];
    let mut c = [0.0; N];
    let mut d = [0.0; M];
    for i in 0..N {
        for j in 0..N {
            acol[j][i] = sim.a[i * N + j];
        }
        for j in 0..M {
            bcol[j][i] = sim.b[i * M + j];
        }
        c[i] = sim.c[i];
    }
    d.copy_from_slice(&sim.d[..M]);
    let mut x = [0.0; N];
    let mut sse = 0.0;
    for k in 0..target.len() {
        let mut u = [0.0; M];
        for j in 0..M {
            u[j] = inputs[j][k];
        }
        let mut yk = 0.0;
        for i in 0..N {
            yk += c[i] * x[i];
        }
        for j in 0..M {
            yk += d[j] * u[j];
        }
        let e = target[k] - yk;
        sse += e * e;
        let mut xn = [0.0; N];
        for j in 0..N {
            for i in 0..N {
                xn[i] += acol[j][i] * x[j];
            }
        }
        for j in 0..M {
            for i in 0..N {
                xn[i] += bcol[j][i] * u[j];
            }
        }
        x = xn;
    }
    sse
}

/// Simulate a sampled SISO system from zero initial state.
pub fn lsim(sys: &StateSpace, u: &[f64]) -> Result<Vec<f64>> {
    sys.require_siso()?;
    let mut out = DiscreteSimulator::new(sys)?.run(&[u])?;
    Ok(out.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;

    #[test]
    fn first_order_difference_equation() {
        // y[k] = 0.5 y[k-1] + u[k-1]
        let tf = TransferFunction::new(vec![1.0], vec![1.0, -0.5], Domain::Discrete { ts: 1.0 }).unwrap();
        let y = lsim(&tf.to_ss().unwrap(), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn continuous_rejected() {
        let ss = StateSpace::gain(1.0, Domain::Continuous);
        assert!(DiscreteSimulator::new(&ss).is_err());
    }

    #[test]
    fn sse_matches_run() {
        let tf = TransferFunction::new(vec![0.3, 0.1], vec![1.0, -0.9], Domain::Discrete { ts: 1.0 }).unwrap();
        let sim = DiscreteSimulator::new(&tf.to_ss().unwrap()).unwrap();
        let u: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let target: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
        let y = sim.run(&[&u]).unwrap().remove(0);
        let want: f64 = y.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((sim.sse_against(&[&u], &target).unwrap() - want).abs() < 1e-12);
    }
}

//! Closed-loop data generation: pulse reference, held Gaussian measurement
//! noise and input disturbance, exact sampled simulation.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lti::{discretize, feedback, DiscreteSimulator, Domain, Hold, Lti, Sign, StateSpace, TransferFunction};
use crate::maglev;
use crate::numfmt::g17;

/// Uniformly sampled closed-loop record.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub t: Vec<f64>,
    /// Reference samples.
    pub r_y: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub ts: f64,
}

impl Dataset {
    pub fn new(t: Vec<f64>, r_y: Vec<f64>, u: Vec<f64>, y: Vec<f64>, ts: f64) -> Result<Self> {
        let n = t.len();
        if r_y.len() != n || u.len() != n || y.len() != n {
            return Err(Error::Dimension("dataset columns differ in length".into()));
        }
        if n < 2 {
            return Err(Error::InvalidArgument("dataset needs at least two samples".into()));
        }
        if !(ts > 0.0) {
            return Err(Error::InvalidArgument(format!("sample period must be positive, got {ts}")));
        }
        Ok(Self { t, r_y, u, y, ts })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV with header `t,r,u,y` and 17 significant digits per value.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(self.len() * 80);
        s.push_str("t,r,u,y\n");
        for k in 0..self.len() {
            let _ = writeln!(s, "{},{},{},{}", g17(self.t[k]), g17(self.r_y[k]), g17(self.u[k]), g17(self.y[k]));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Parse a `t,r,u,y` CSV. The sample period is taken from the first
    /// time step.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        if cols != ["t", "r", "u", "y"] {
            return Err(Error::Parse(format!("unexpected header {header:?}, want t,r,u,y")));
        }
        let (mut t, mut r, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))?;
            if vals.len() != 4 {
                return Err(Error::Parse(format!("row {}: expected 4 columns, got {}", i + 2, vals.len())));
            }
            t.push(vals[0]);
            r.push(vals[1]);
            u.push(vals[2]);
            y.push(vals[3]);
        }
        if t.len() < 2 {
            return Err(Error::Parse("dataset needs at least two rows".into()));
        }
        let ts = t[1] - t[0];
        Self::new(t, r, u, y, ts)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Scale of the output measurement noise `w`.
    pub sigma_w: f64,
    /// Scale of the input disturbance `ξ`.
    pub sigma_xi: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { sigma_w: 0.0, sigma_xi: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Rectangular pulse; active on samples `k` with `start ≤ k·ts < start + width`.
    Pulse { start: f64, width: f64, height: f64 },
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub plant: TransferFunction,
    pub controller: TransferFunction,
    pub reference: Reference,
    /// Record length in seconds; the record holds `duration/ts + 1` samples.
    pub duration: f64,
    pub ts: f64,
    pub noise: NoiseSpec,
}

impl ExperimentSpec {
    pub fn samples(&self) -> usize {
        (self.duration / self.ts).round() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0) || !(self.duration > 0.0) {
            return Err(Error::InvalidArgument("duration and sample period must be positive".into()));
        }
        if self.noise.sigma_w < 0.0 || self.noise.sigma_xi < 0.0 {
            return Err(Error::InvalidArgument("noise scales must be non-negative".into()));
        }
        match &self.reference {
            Reference::Pulse { start, width, .. } => {
                if self.duration < start + width - 1e-12 {
                    return Err(Error::InvalidArgument("record ends before the pulse does".into()));
                }
            }
            Reference::Samples(v) => {
                if v.len() != self.samples() {
                    return Err(Error::Dimension(format!("reference has {} samples, record has {}", v.len(), self.samples())));
                }
            }
        }
        if self.plant.domain() != Domain::Continuous || self.controller.domain() != Domain::Continuous {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    pub fn reference_samples(&self) -> Vec<f64> {
        let n = self.samples();
        match &self.reference {
            Reference::Samples(v) => v.clone(),
            Reference::Pulse { start, width, height } => {
                let k0 = (start / self.ts).round() as usize;
                let k1 = ((start + width) / self.ts).round() as usize;
                (0..n).map(|k| if k >= k0 && k < k1 { *height } else { 0.0 }).collect()
            }
        }
    }
}

/// Magnetic-levitation acquisition setup: true plant, H∞ controller,
/// 0.25 s × 1 mm pulse starting at 0.05 s, 1 s record at 10 kHz.
pub fn maglev_defaults() -> ExperimentSpec {
    ExperimentSpec {
        plant: maglev::plant(&maglev::THETA_TRUE),
        controller: maglev::controller_hinf(),
        reference: Reference::Pulse { start: maglev::PULSE_START, width: maglev::PULSE_WIDTH, height: maglev::PULSE_HEIGHT },
        duration: maglev::DURATION,
        ts: maglev::TS,
        noise: NoiseSpec { sigma_w: maglev::SIGMA_W, sigma_xi: maglev::SIGMA_XI, seed: 1 },
    }
}

/// Continuous closed loop with exogenous inputs `[r, w, ξ]` and outputs
/// `[u, y]`:
///
/// ```text
/// y = P·u + σ_w·w
/// u = K·(r − y) + σ_ξ·ξ
/// ```
///
/// States are ordered `[plant; controller]`.
pub fn closed_loop_system(plant: &StateSpace, controller: &StateSpace, sigma_w: f64, sigma_xi: f64) -> Result<StateSpace> {
    let (np, nk) = (plant.order(), controller.order());
    let n = np + nk;
    let (dp, dk) = (plant.feedthrough(), controller.feedthrough());
    let delta = 1.0 + dp * dk;
    if delta.abs() < 1e-14 {
        return Err(Error::AlgebraicLoop);
    }
    // y = cy·x + dy·[r, w, ξ]
    let mut cy = DMatrix::zeros(1, n);
    for j in 0..np {
        cy[(0, j)] = plant.c()[(0, j)] / delta;
    }
    for j in 0..nk {
        cy[(0, np + j)] = dp * controller.c()[(0, j)] / delta;
    }
    let dy = [dp * dk / delta, sigma_w / delta, dp * sigma_xi / delta];
    // u = cu·x + du·[r, w, ξ]
    let mut cu = DMatrix::zeros(1, n);
    for j in 0..nk {
        cu[(0, np + j)] = controller.c()[(0, j)];
    }
    for j in 0..n {
        cu[(0, j)] -= dk * cy[(0, j)];
    }
    let du = [dk - dk * dy[0], -dk * dy[1], sigma_xi - dk * dy[2]];

    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 3);
    for i in 0..np {
        let bp = plant.b()[(i, 0)];
        for j in 0..np {
            a[(i, j)] = plant.a()[(i, j)];
        }
        for j in 0..n {
            a[(i, j)] += bp * cu[(0, j)];
        }
        for j in 0..3 {
            b[(i, j)] = bp * du[j];
        }
    }
    let e_r = [1.0, 0.0, 0.0];
    for i in 0..nk {
        let bk = controller.b()[(i, 0)];
        for j in 0..nk {
            a[(np + i, np + j)] = controller.a()[(i, j)];
        }
        for j in 0..n {
            a[(np + i, j)] -= bk * cy[(0, j)];
        }
        for j in 0..3 {
            b[(np + i, j)] = bk * (e_r[j] - dy[j]);
        }
    }
    let mut c = DMatrix::zeros(2, n);
    let mut d = DMatrix::zeros(2, 3);
    for j in 0..n {
        c[(0, j)] = cu[(0, j)];
        c[(1, j)] = cy[(0, j)];
    }
    for j in 0..3 {
        d[(0, j)] = du[j];
        d[(1, j)] = dy[j];
    }
    StateSpace::new(a, b, c, d, Domain::Continuous)
}

/// Held standard-normal sequences `(w, ξ)` for a seed; independent streams
/// so that zeroing one scale leaves the other realization unchanged.
pub fn noise_sequences(seed: u64, len: usize) -> (Vec<f64>, Vec<f64>) {
    let draw = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..len).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>()
    };
    (draw(0), draw(1))
}

/// Dataset plus the sampled controller states, for consistency checks.
#[derive(Debug, Clone)]
pub struct ClosedLoopRecord {
    pub data: Dataset,
    pub w: Vec<f64>,
    pub xi: Vec<f64>,
    /// `controller_states[i][k]`: controller state `i` at sample `k`.
    pub controller_states: Vec<Vec<f64>>,
}

pub fn simulate_closed_loop(spec: &ExperimentSpec) -> Result<Dataset> {
    Ok(simulate_closed_loop_record(spec)?.data)
}

/// Exact ZOH simulation of the joint loop with held `r`, `w`, `ξ`, from the
/// zero state. Refuses unstable loops.
pub fn simulate_closed_loop_record(spec: &ExperimentSpec) -> Result<ClosedLoopRecord> {
    spec.validate()?;
    let plant = spec.plant.to_ss()?;
    let controller = spec.controller.to_ss()?;
    let cl = feedback(&plant, &controller, Sign::Negative)?;
    let margin = cl.max_instability()?;
    if !cl.is_stable()? {
        return Err(Error::UnstableLoop(margin));
    }
    let sys = closed_loop_system(&plant, &controller, spec.noise.sigma_w, spec.noise.sigma_xi)?;
    let n = spec.samples();
    let r = spec.reference_samples();
    let (w, xi) = noise_sequences(spec.noise.seed, n);

    // append the controller states as extra outputs
    let np = plant.order();
    let nk = controller.order();
    let mut c = DMatrix::zeros(2 + nk, sys.order());
    c.view_mut((0, 0), (2, sys.order())).copy_from(sys.c());
    for i in 0..nk {
        c[(2 + i, np + i)] = 1.0;
    }
    let mut d = DMatrix::zeros(2 + nk, 3);
    d.view_mut((0, 0), (2, 3)).copy_from(sys.d());
    let sys = StateSpace::new(sys.a().clone(), sys.b().clone(), c, d, Domain::Continuous)?;
    let dsys = discretize(&sys, spec.ts, Hold::Zoh)?;
    let mut out = DiscreteSimulator::new(&dsys)?.run(&[&r, &w, &xi])?;
    let controller_states = out.split_off(2);
    let y = out.pop().expect("y output");
    let u = out.pop().expect("u output");
    let t = (0..n).map(|k| k as f64 * spec.ts).collect();
    Ok(ClosedLoopRecord { data: Dataset::new(t, r, u, y, spec.ts)?, w, xi, controller_states })
}

/// `count` datasets with seeds `seed, seed+1, …`; same reference, independent noise.
pub fn monte_carlo_datasets(spec: &ExperimentSpec, count: usize) -> Result<Vec<Dataset>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = spec.clone();
            s.noise.seed = spec.noise.seed.wrapping_add(i);
            simulate_closed_loop(&s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_spec() -> ExperimentSpec {
        let mut s = maglev_defaults();
        s.duration = 0.4;
        s
    }

    #[test]
    fn defaults_carry_benchmark_constants() {
        let s = maglev_defaults();
        assert_eq!(s.plant.den(), &[1.0, 13.34, -494.4, -6593.0]);
        assert_eq!(s.noise.sigma_w, 2e-4);
        assert_eq!(s.noise.sigma_xi, 10.0);
        assert_eq!(s.ts, 1e-4);
        assert_eq!(s.samples(), 10_001);
        let cl = feedback(&s.plant.to_ss().unwrap(), &s.controller.to_ss().unwrap(), Sign::Negative).unwrap();
        assert!(cl.is_stable().unwrap());
    }

    #[test]
    fn equilibrium_without_excitation() {
        let mut s = short_spec();
        s.noise = NoiseSpec::none();
        s.reference = Reference::Samples(vec![0.0; s.samples()]);
        let d = simulate_closed_loop(&s).unwrap();
        assert!(d.u.iter().chain(&d.y).all(|&v| v == 0.0));
    }

    #[test]
    fn seeds_are_deterministic() {
        let s = short_spec();
        let a = simulate_closed_loop(&s).unwrap();
        let b = simulate_closed_loop(&s).unwrap();
        assert_eq!(a, b);
        let mut s2 = s.clone();
        s2.noise.seed += 1;
        let c = simulate_closed_loop(&s2).unwrap();
        assert_ne!(a.y, c.y);
        assert_eq!(a.r_y, c.r_y);
    }

    #[test]
    fn unstable_loop_refused() {
        let mut s = short_spec();
        s.controller = TransferFunction::gain(0.0, Domain::Continuous);
        assert!(matches!(simulate_closed_loop(&s), Err(Error::UnstableLoop(_))));
    }

    #[test]
    fn pulse_timing() {
        let s = maglev_defaults();
        let r = s.reference_samples();
        assert_eq!(r[499], 0.0);
        assert_eq!(r[500], 1e-3);
        assert_eq!(r[2999], 1e-3);
        assert_eq!(r[3000], 0.0);
        assert_eq!(r.iter().filter(|&&v| v > 0.0).count(), 2500);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let d = simulate_closed_loop(&short_spec()).unwrap();
        let back = Dataset::read_csv(d.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back.u, d.u);
        assert_eq!(back.y, d.y);
        assert_eq!(back.t, d.t);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(matches!(Dataset::read_csv("a,b,c,d\n0,0,0,0\n".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn monte_carlo_seeds_follow_base() {
        let mut s = short_spec();
        s.duration = 0.3;
        let sets = monte_carlo_datasets(&s, 3).unwrap();
        let mut s1 = s.clone();
        s1.noise.seed += 2;
        assert_eq!(sets[2], simulate_closed_loop(&s1).unwrap());
        assert_eq!(monte_carlo_datasets(&s, 1).unwrap()[0], simulate_closed_loop(&s).unwrap());
    }
}

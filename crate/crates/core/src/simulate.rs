//! Three simulators of the same spreading process, from most to least
//! detailed: a stochastic cellular automaton, the nonlinear mean-field ODE
//! `x_i' = -delta_i x_i + (1 - x_i) sum_j beta(j -> i) x_j`, and its
//! linearization `x' = A x`. For matching inputs the linear flow bounds the
//! mean-field flow, which bounds the automaton's mean occupancy.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DynamicsMatrix, SpreadGraph};
use crate::intervention::ControlMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Automaton only.
    pub seed: u64,
    /// Automaton replicates.
    pub runs: usize,
    /// Keep every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 10.0,
            seed: 0,
            runs: 1000,
            record_every: 1,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::Config(format!(
                "horizon = {} must be >= dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil() as usize
    }

    fn recorded(&self, step: usize, steps: usize) -> bool {
        step.is_multiple_of(self.record_every) || step == steps
    }
}

/// States sampled at increasing times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }

    /// Header `t,x_0,...,x_{n-1}`, one line per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.n() {
            let _ = write!(out, ",x_{i}");
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t}");
            for v in x {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Replicate-averaged automaton output.
#[derive(Debug, Clone, PartialEq)]
pub struct CaResult {
    /// Mean occupancy per sample.
    pub mean: Trajectory,
    /// Standard error of the mean, same layout as `mean.states`.
    pub stderr: Vec<Vec<f64>>,
    /// Fraction of replicates in which each node burned at some point.
    pub ever_burned: Vec<f64>,
    pub runs: usize,
}

/// One automaton run.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    /// 0/1 states per sample.
    pub trajectory: Trajectory,
    /// Nodes that burned at any step up to the horizon.
    pub ever_burned: Vec<bool>,
}

struct Automaton {
    out: Vec<Vec<(usize, f64)>>,
    recover: Vec<f64>,
}

impl Automaton {
    fn new(graph: &SpreadGraph, dt: f64) -> Result<Self> {
        let mut worst = 0.0f64;
        for node in graph.nodes() {
            worst = worst.max(node.delta);
        }
        for e in graph.edges() {
            worst = worst.max(e.beta);
        }
        if worst * dt > 1.0 {
            return Err(Error::Config(format!(
                "dt = {dt} gives a transition probability above 1; need dt <= {}",
                1.0 / worst
            )));
        }
        Ok(Self {
            out: graph
                .out_adjacency()
                .into_iter()
                .map(|adj| adj.into_iter().map(|(i, b)| (i, b * dt)).collect())
                .collect(),
            recover: graph.nodes().iter().map(|n| n.delta * dt).collect(),
        })
    }

    /// Runs one replicate, calling `sample` with the state at each recorded
    /// step. Returns the ever-burned mask.
    fn run(
        &self,
        x0: &[bool],
        cfg: &SimConfig,
        stream: u64,
        mut sample: impl FnMut(&[bool]),
    ) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        let steps = cfg.steps();
        let mut state = x0.to_vec();
        let mut next = state.clone();
        let mut ever = state.clone();
        let mut burning: Vec<usize> = (0..state.len()).filter(|&i| state[i]).collect();
        sample(&state);
        for step in 1..=steps {
            // all draws read the time-t state
            for &j in &burning {
                if rng.random::<f64>() < self.recover[j] {
                    next[j] = false;
                }
                for &(i, p) in &self.out[j] {
                    if !state[i] && rng.random::<f64>() < p {
                        next[i] = true;
                    }
                }
            }
            burning.clear();
            for (i, (s, &nx)) in state.iter_mut().zip(&next).enumerate() {
                *s = nx;
                if nx {
                    burning.push(i);
                    ever[i] = true;
                }
            }
            if cfg.recorded(step, steps) {
                sample(&state);
            }
        }
        ever
    }
}

fn sample_times(cfg: &SimConfig) -> Vec<f64> {
    let steps = cfg.steps();
    (0..=steps)
        .filter(|&s| cfg.recorded(s, steps))
        .map(|s| (s as f64 * cfg.dt).min(cfg.horizon))
        .collect()
}

fn check_ca_inputs(graph: &SpreadGraph, x0: &[bool], cfg: &SimConfig) -> Result<Automaton> {
    cfg.validate()?;
    if x0.len() != graph.n() {
        return Err(Error::Config(format!(
            "initial state has {} entries for {} nodes",
            x0.len(),
            graph.n()
        )));
    }
    Automaton::new(graph, cfg.dt)
}

/// A single automaton replicate; replicate `k` of [`simulate_ca`] uses the
/// same random stream.
pub fn ca_replicate(
    graph: &SpreadGraph,
    x0: &[bool],
    cfg: &SimConfig,
    k: u64,
) -> Result<Replicate> {
    let automaton = check_ca_inputs(graph, x0, cfg)?;
    let mut states = Vec::new();
    let ever_burned = automaton.run(x0, cfg, k, |s| {
        states.push(s.iter().map(|&b| f64::from(u8::from(b))).collect())
    });
    Ok(Replicate {
        trajectory: Trajectory {
            times: sample_times(cfg),
            states,
        },
        ever_burned,
    })
}

/// Stochastic automaton averaged over `cfg.runs` replicates. Per step a
/// burning node recovers with probability `delta dt` and ignites each
/// non-burning out-neighbor with probability `beta dt`, all draws taken from
/// the state at the start of the step. Replicate `k` draws from stream `k` of
/// a generator seeded with `cfg.seed`.
pub fn simulate_ca(graph: &SpreadGraph, x0: &[bool], cfg: &SimConfig) -> Result<CaResult> {
    let automaton = check_ca_inputs(graph, x0, cfg)?;
    if cfg.runs == 0 {
        return Err(Error::Config("runs must be >= 1".into()));
    }
    let n = graph.n();
    let times = sample_times(cfg);
    let samples = times.len();

    let zero = || (vec![0u32; samples * n], vec![0u32; n]);
    let (occupied, ever) = (0..cfg.runs as u64)
        .into_par_iter()
        .fold(zero, |(mut occ, mut ever), k| {
            let mut s = 0;
            let mask = automaton.run(x0, cfg, k, |state| {
                for (c, &b) in occ[s * n..(s + 1) * n].iter_mut().zip(state) {
                    *c += u32::from(b);
                }
                s += 1;
            });
            for (c, b) in ever.iter_mut().zip(mask) {
                *c += u32::from(b);
            }
            (occ, ever)
        })
        .reduce(zero, |(mut a, mut ea), (b, eb)| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            ea.iter_mut().zip(eb).for_each(|(x, y)| *x += y);
            (a, ea)
        });

    let runs = cfg.runs as f64;
    let mut states = Vec::with_capacity(samples);
    let mut stderr = Vec::with_capacity(samples);
    for chunk in occupied.chunks(n.max(1)).take(samples) {
        let mean: Vec<f64> = chunk.iter().map(|&c| f64::from(c) / runs).collect();
        let se = mean
            .iter()
            .map(|&m| {
                if cfg.runs > 1 {
                    (m * (1.0 - m) / (runs - 1.0)).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        states.push(mean);
        stderr.push(se);
    }
    if n == 0 {
        states = vec![Vec::new(); samples];
        stderr = vec![Vec::new(); samples];
    }
    Ok(CaResult {
        mean: Trajectory { times, states },
        stderr,
        ever_burned: ever.iter().map(|&c| f64::from(c) / runs).collect(),
        runs: cfg.runs,
    })
}

/// Graph with a control applied as rate changes: edge entries lower the
/// corresponding spreading rate, diagonal entries raise the recovery rate.
pub fn apply_control(graph: &SpreadGraph, k: &ControlMatrix) -> Result<SpreadGraph> {
    if k.n() != graph.n() {
        return Err(Error::Config(format!(
            "control is {}x{} for {} nodes",
            k.n(),
            k.n(),
            graph.n()
        )));
    }
    let mut nodes = graph.nodes().to_vec();
    let mut edges = graph.edges().to_vec();
    for &(i, j, amount) in k.entries() {
        if i == j {
            nodes[i].delta += amount;
        } else {
            let e = edges
                .iter_mut()
                .find(|e| e.src == j && e.dst == i)
                .ok_or_else(|| {
                    Error::Config(format!("control entry ({i}, {j}) is not on an edge"))
                })?;
            e.beta = (e.beta - amount).max(0.0);
            if e.beta < 1e-15 {
                e.beta = 0.0;
            }
        }
    }
    let controlled = SpreadGraph::new(nodes, edges)?;
    match graph.geometry() {
        Some(g) => controlled.with_geometry(g.clone()),
        None => Ok(controlled),
    }
}

/// Fixed-step RK4 with internal substeps no longer than `0.1 / |A|_inf`.
fn integrate(
    a: &DynamicsMatrix,
    x0: &[f64],
    cfg: &SimConfig,
    rhs: impl Fn(&[f64], &mut [f64]),
    project: impl Fn(f64, usize, &mut [f64]) -> Result<()>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = a.n();
    if x0.len() != n {
        return Err(Error::Config(format!(
            "initial state has {} entries for {} nodes",
            x0.len(),
            n
        )));
    }
    let bound = a.eigenvalue_bound();
    let substeps = if bound > 0.0 {
        (cfg.dt * bound / 0.1).ceil().max(1.0) as usize
    } else {
        1
    };
    let h = cfg.dt / substeps as f64;
    let steps = cfg.steps();

    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for step in 1..=steps {
        for _ in 0..substeps {
            rhs(&x, &mut k1);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            rhs(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            rhs(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            rhs(&tmp, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let t = (step as f64 * cfg.dt).min(cfg.horizon);
        project(t, step, &mut x)?;
        if cfg.recorded(step, steps) {
            times.push(t);
            states.push(x.clone());
        }
    }
    Ok(Trajectory { times, states })
}

/// RK4 integration of `x' = A x` (or of a closed loop `A - K`).
pub fn simulate_linear(a: &DynamicsMatrix, x0: &[f64], cfg: &SimConfig) -> Result<Trajectory> {
    if x0.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::Config(
            "initial state must be finite and >= 0".into(),
        ));
    }
    integrate(
        a,
        x0,
        cfg,
        |x, y| a.apply_into(x, y),
        |t, _, x| {
            for (i, v) in x.iter_mut().enumerate() {
                if !v.is_finite() || *v < -1e-9 {
                    return Err(Error::Unstable {
                        t,
                        node: i,
                        value: *v,
                    });
                }
                *v = v.max(0.0);
            }
            Ok(())
        },
    )
}

/// RK4 integration of the mean-field ODE built from the off-diagonal
/// (spreading) and diagonal (recovery) parts of `A`.
pub fn simulate_nonlinear(a: &DynamicsMatrix, x0: &[f64], cfg: &SimConfig) -> Result<Trajectory> {
    if x0.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Config("initial state must lie in [0, 1]".into()));
    }
    let recovery: Vec<f64> = a.diagonal().iter().map(|d| -d).collect();
    integrate(
        a,
        x0,
        cfg,
        |x, y| {
            a.apply_into(x, y);
            for i in 0..x.len() {
                let spread = y[i] + recovery[i] * x[i];
                y[i] -= x[i] * spread;
            }
        },
        |t, _, x| {
            for (i, v) in x.iter_mut().enumerate() {
                if !v.is_finite() || *v < -1e-6 || *v > 1.0 + 1e-6 {
                    return Err(Error::Unstable {
                        t,
                        node: i,
                        value: *v,
                    });
                }
                *v = v.clamp(0.0, 1.0);
            }
            Ok(())
        },
    )
}

/// Trapezoidal approximation of `int_0^tf e^{-rt} C x(t) dt`.
///
/// The neglected tail is at most `e^{-r tf} C x(tf) / (r - s)` for a linear
/// trajectory whose growth rate is bounded by `s < r`; see [`tail_bound`].
pub fn empirical_cost(traj: &Trajectory, costs: &[f64], r: f64) -> f64 {
    let f: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| (-r * t).exp() * x.iter().zip(costs).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    traj.times
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Upper bound on the cost beyond the final sample when `x` grows no faster
/// than `e^{s t}`, `s < r`. Infinite if `s >= r`.
pub fn tail_bound(traj: &Trajectory, costs: &[f64], r: f64, s: f64) -> f64 {
    if s >= r {
        return f64::INFINITY;
    }
    let Some(&tf) = traj.times.last() else {
        return 0.0;
    };
    let cx: f64 = traj.last().iter().zip(costs).map(|(a, b)| a * b).sum();
    (-r * tf).exp() * cx / (r - s)
}

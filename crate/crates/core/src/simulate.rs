//! Path simulation for every regime plus exact samplers for the laws known in closed form.
//!
//! The Walsh family shares one construction: a signed Brownian driver on an
//! intrinsic grid whose magnitude is the distance to the vertex. A fresh edge is
//! drawn from `Categorical(w)` whenever the driver changes sign. Vertex local time
//! is estimated per step; Elastic and General paths are killed once it exceeds an
//! independent `Exponential(β)` level, and Sticky and General paths report their
//! states on the slowed clock `t = s + γ L_s`.

use std::io::{Read, Write};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::graph::{GraphPoint, ProcessParams, Regime};

/// Reproducible random stream: identical `(seed, stream)` gives identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngConfig {
    pub seed: u64,
    pub stream: u64,
}

impl RngConfig {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeEstimator {
    /// `dL = dt/(2ε) · 1{|y| ≤ ε}` at the left grid point.
    #[default]
    Occupation,
    /// `dL = δ` each time the driver returns to 0 after reaching `|y| ≥ δ`.
    Downcrossing,
    /// Exact draw of the local time accrued by the Brownian bridge between the
    /// step's endpoints, `P(ℓ > x) = exp(-((|a|+|b|+x)² - (a-b)²)/(2dt))`. The
    /// edge is redrawn whenever the bridge touched the vertex, which makes
    /// `(X, L)` exact in law at grid times for the Walsh and Elastic regimes.
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    /// End time on the process clock.
    pub horizon: f64,
    /// `ε₀` in `ε = ε₀ √dt`.
    pub local_time_eps_factor: f64,
    pub n_paths: usize,
    pub local_time_estimator: LocalTimeEstimator,
    /// Level of the downcrossing estimator in units of `√dt`.
    pub downcrossing_factor: f64,
    /// Keep every k-th grid point when recording trajectories.
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 1.0,
            local_time_eps_factor: 1.0,
            n_paths: 1000,
            local_time_estimator: LocalTimeEstimator::Occupation,
            downcrossing_factor: 10.0,
            record_every: 1,
        }
    }
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, n_paths: usize) -> Result<Self> {
        let c = Self { dt, horizon, n_paths, ..Self::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(validation(format!("{name} > 0 violated (got {v})")))
            }
        };
        pos("dt", self.dt)?;
        pos("horizon", self.horizon)?;
        pos("local_time_eps_factor", self.local_time_eps_factor)?;
        pos("downcrossing_factor", self.downcrossing_factor)?;
        if self.dt >= self.horizon {
            return Err(validation(format!(
                "dt < horizon violated (dt {}, horizon {})",
                self.dt, self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(validation("n_paths >= 1 violated"));
        }
        if self.record_every == 0 {
            return Err(validation("record_every >= 1 violated"));
        }
        Ok(())
    }

    /// Local-time window `ε = ε₀ √dt`.
    pub fn eps(&self) -> f64 {
        self.local_time_eps_factor * self.dt.sqrt()
    }
}

/// A discretized path. `times` are on the process clock (`s + γL` for sticky vertices).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GraphPoint>,
    pub local_time: Vec<f64>,
    /// `f64::INFINITY` if the path was not killed before the horizon.
    pub lifetime: f64,
    pub killed: bool,
}

impl Trajectory {
    fn push(&mut self, t: f64, p: GraphPoint, l: f64) {
        self.times.push(t);
        self.states.push(p);
        self.local_time.push(l);
    }
}

/// State of a path at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    /// `None` when the path was killed before the horizon.
    pub state: Option<GraphPoint>,
    /// `f64::INFINITY` if not killed before the horizon.
    pub lifetime: f64,
    /// Vertex local time accumulated up to the horizon or the kill.
    pub local_time: f64,
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// First hitting time of the vertex from distance `d > 0`: `d²/Z²`.
pub fn sample_first_hitting<R: Rng + ?Sized>(d: f64, rng: &mut R) -> f64 {
    let z = standard_normal(rng);
    d * d / (z * z)
}

/// Exact draw of `(|B_t|, L_t)` for Brownian motion started at the vertex: the sum
/// `u = x + ℓ` is `√t` times a 3-dimensional Maxwell radius and `x | u` is uniform on `[0, u]`.
pub fn sample_reflected_localtime<R: Rng + ?Sized>(t: f64, rng: &mut R) -> (f64, f64) {
    let (a, b, c) = (standard_normal(rng), standard_normal(rng), standard_normal(rng));
    let u = t.sqrt() * (a * a + b * b + c * c).sqrt();
    let x = rng.random::<f64>() * u;
    (x, u - x)
}

/// Inverse local time at level `r`: `r²/Z² + γ r`, exactly 0 at `r = 0`.
pub fn sample_inverse_localtime<R: Rng + ?Sized>(r: f64, gamma: f64, rng: &mut R) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    sample_first_hitting(r, rng) + gamma * r
}

/// Index drawn from cumulative weights; zero-weight entries are never returned.
#[inline]
fn sample_cumulative<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    w.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Draw an edge index from `Categorical(w)`.
pub fn sample_categorical<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> usize {
    sample_cumulative(&cumulative(w), rng)
}

/// Grid-free draw of the Walsh process at time `t`.
pub fn exact_marginal_walsh<R: Rng + ?Sized>(
    w: &[f64],
    start: GraphPoint,
    t: f64,
    rng: &mut R,
) -> Result<GraphPoint> {
    if w.is_empty() || (w.iter().sum::<f64>() - 1.0).abs() > crate::graph::SIMPLEX_TOL {
        return Err(validation("sum(w) = 1 violated"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(validation(format!("t > 0 violated (got {t})")));
    }
    match start {
        GraphPoint::Vertex => {
            let (x, _) = sample_reflected_localtime(t, rng);
            let edge = sample_categorical(w, rng);
            GraphPoint::new(edge, x)
        }
        GraphPoint::Interior { edge, x } => {
            if edge >= w.len() {
                return Err(validation(format!("edge index {edge} out of range")));
            }
            // endpoint of the unreflected driver; Y ≤ 0 means the vertex was hit
            let y = x + t.sqrt() * standard_normal(rng);
            let hit = y <= 0.0 || rng.random::<f64>() < (-2.0 * x * y / t).exp();
            let m = if hit { sample_categorical(w, rng) } else { edge };
            GraphPoint::new(m, y.abs())
        }
    }
}

/// One grid step of a Walsh-family path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Clock at the start of the step.
    pub t0: f64,
    /// End of the vertex hold (`t0 + γ dL`).
    pub hold_end: f64,
    /// Clock at the end of the step.
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
    /// Edge after the step (meaningless while the driver is 0).
    pub edge: usize,
    pub dl: f64,
    /// Local time after the step.
    pub l1: f64,
    /// Lifetime if the path was killed during this step.
    pub killed: Option<f64>,
}

/// Incremental simulator for Walsh, Elastic, Sticky and General paths.
pub struct PathWalker<'r, R: Rng + ?Sized> {
    rng: &'r mut R,
    cum_w: Vec<f64>,
    dt: f64,
    sqrt_dt: f64,
    eps: f64,
    gamma: f64,
    estimator: LocalTimeEstimator,
    dc_level: f64,
    dc_armed: bool,
    y: f64,
    edge: usize,
    l: f64,
    steps: u64,
    kill_level: f64,
    lifetime: Option<f64>,
}

impl<'r, R: Rng + ?Sized> PathWalker<'r, R> {
    pub fn new(params: &ProcessParams, start: GraphPoint, cfg: &SimConfig, rng: &'r mut R) -> Result<Self> {
        cfg.validate()?;
        params.graph().check_point(start)?;
        if params.regime() == Regime::AbsorbedKilled {
            return Err(validation("PathWalker handles the Walsh family only; use simulate_path"));
        }
        let kill_level = if params.beta() > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / params.beta()
        } else {
            f64::INFINITY
        };
        let (y, edge) = match start {
            GraphPoint::Vertex => (0.0, 0),
            GraphPoint::Interior { edge, x } => (x, edge),
        };
        Ok(Self {
            rng,
            cum_w: cumulative(params.weights()),
            dt: cfg.dt,
            sqrt_dt: cfg.dt.sqrt(),
            eps: cfg.eps(),
            gamma: params.gamma(),
            estimator: cfg.local_time_estimator,
            dc_level: cfg.downcrossing_factor * cfg.dt.sqrt(),
            dc_armed: y >= cfg.downcrossing_factor * cfg.dt.sqrt(),
            y,
            edge,
            l: 0.0,
            steps: 0,
            kill_level,
            lifetime: None,
        })
    }

    /// Intrinsic (Brownian) time elapsed.
    pub fn intrinsic_time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Process clock `s + γL`.
    pub fn clock(&self) -> f64 {
        self.intrinsic_time() + self.gamma * self.l
    }

    pub fn local_time(&self) -> f64 {
        self.l
    }

    pub fn kill_level(&self) -> f64 {
        self.kill_level
    }

    pub fn lifetime(&self) -> Option<f64> {
        self.lifetime
    }

    /// The walker's random stream, for auxiliary draws tied to the same path.
    pub fn rng_mut(&mut self) -> &mut R {
        self.rng
    }

    pub fn position(&self) -> GraphPoint {
        if self.y == 0.0 {
            GraphPoint::Vertex
        } else {
            GraphPoint::Interior { edge: self.edge, x: self.y.abs() }
        }
    }

    /// Advances one intrinsic step of length `dt`. Must not be called after a kill.
    pub fn step(&mut self) -> Step {
        debug_assert!(self.lifetime.is_none());
        let t0 = self.clock();
        let y0 = self.y;
        let y1 = y0 + self.sqrt_dt * standard_normal(self.rng);
        let crossed = y0 == 0.0 || (y0 > 0.0) != (y1 > 0.0);
        let bridge = self.estimator == LocalTimeEstimator::Bridge;
        let dl = match self.estimator {
            LocalTimeEstimator::Occupation => {
                if y0.abs() <= self.eps {
                    self.dt / (2.0 * self.eps)
                } else {
                    0.0
                }
            }
            LocalTimeEstimator::Downcrossing => {
                let mut d = 0.0;
                if self.dc_armed && crossed {
                    d = self.dc_level;
                    self.dc_armed = false;
                }
                if y1.abs() >= self.dc_level {
                    self.dc_armed = true;
                }
                d
            }
            LocalTimeEstimator::Bridge => {
                let u = 1.0 - self.rng.random::<f64>();
                let span = y0.abs() + y1.abs();
                (((y1 - y0).powi(2) - 2.0 * self.dt * u.ln()).sqrt() - span).max(0.0)
            }
        };
        if dl > 0.0 && self.l + dl > self.kill_level {
            let f = (self.kill_level - self.l) / dl;
            let lifetime = t0 + f * (self.dt + self.gamma * dl);
            self.lifetime = Some(lifetime);
            self.l = self.kill_level;
            self.y = 0.0;
            return Step {
                t0,
                hold_end: t0,
                t1: lifetime,
                y0,
                y1: 0.0,
                edge: self.edge,
                dl,
                l1: self.l,
                killed: Some(lifetime),
            };
        }
        let touched = if bridge { dl > 0.0 } else { crossed && y1 != 0.0 };
        if touched {
            self.edge = sample_cumulative(&self.cum_w, self.rng);
        }
        self.y = y1;
        self.l += dl;
        self.steps += 1;
        Step {
            t0,
            hold_end: t0 + self.gamma * dl,
            t1: self.clock(),
            y0,
            y1,
            edge: self.edge,
            dl,
            l1: self.l,
            killed: None,
        }
    }
}

fn point_from(y: f64, edge: usize) -> GraphPoint {
    if y == 0.0 {
        GraphPoint::Vertex
    } else {
        GraphPoint::Interior { edge, x: y.abs() }
    }
}

/// Number of whole steps covering `horizon` when the clock is intrinsic time.
fn step_count(horizon: f64, dt: f64) -> u64 {
    let r = horizon / dt;
    let n = r.round();
    if (r - n).abs() < 1e-9 * r.max(1.0) {
        n as u64
    } else {
        r.ceil() as u64
    }
}

fn exp_holding<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    if beta > 0.0 {
        let e: f64 = rng.sample(Exp1);
        e / beta
    } else {
        f64::INFINITY
    }
}

/// Exact one-step draw of Brownian motion started at `y > 0` and killed at 0:
/// returns `Err(h)` with the hitting time `h ≤ dt`, or `Ok(y')` at time `dt`.
fn killed_bm_step<R: Rng + ?Sized>(y: f64, dt: f64, rng: &mut R) -> std::result::Result<f64, f64> {
    let h = sample_first_hitting(y, rng);
    if h <= dt {
        return Err(h);
    }
    let sd = dt.sqrt();
    loop {
        let y1 = y + sd * standard_normal(rng);
        if y1 <= 0.0 {
            continue;
        }
        let accept = -(-2.0 * y * y1 / dt).exp_m1();
        if rng.random::<f64>() < accept {
            return Ok(y1);
        }
    }
}

/// Core loop shared by [`simulate_path`] and [`terminal_state`]; `record` receives
/// `(clock, state, local time)` for each recorded point.
fn run_path<R: Rng + ?Sized>(
    params: &ProcessParams,
    start: GraphPoint,
    cfg: &SimConfig,
    rng: &mut R,
    mut record: impl FnMut(f64, GraphPoint, f64),
) -> Result<Terminal> {
    cfg.validate()?;
    params.graph().check_point(start)?;
    let horizon = cfg.horizon;
    if params.regime() == Regime::AbsorbedKilled {
        return run_absorbed(params.beta(), start, cfg, rng, record);
    }
    let stride = cfg.record_every as u64;
    let sticky = params.gamma() > 0.0;
    let mut walker = PathWalker::new(params, start, cfg, rng)?;
    record(0.0, start, 0.0);
    let n_fixed = step_count(horizon, cfg.dt);
    let mut i = 0u64;
    loop {
        let st = walker.step();
        i += 1;
        if let Some(lifetime) = st.killed {
            if lifetime <= horizon {
                record(lifetime, GraphPoint::Vertex, st.l1);
                return Ok(Terminal { state: None, lifetime, local_time: st.l1 });
            }
            // killed after the horizon: the horizon falls inside this step, before the kill
            let state = if sticky {
                GraphPoint::Vertex
            } else {
                point_from(st.y0, walker.edge)
            };
            record(horizon, state, st.l1);
            return Ok(Terminal { state: Some(state), lifetime: f64::INFINITY, local_time: st.l1 });
        }
        if sticky {
            if st.hold_end > st.t0 && horizon < st.hold_end {
                record(horizon, GraphPoint::Vertex, st.l1);
                return Ok(Terminal {
                    state: Some(GraphPoint::Vertex),
                    lifetime: f64::INFINITY,
                    local_time: st.l1,
                });
            }
            if st.hold_end > st.t0 && i.is_multiple_of(stride) {
                record(st.hold_end, GraphPoint::Vertex, st.l1);
            }
            if st.t1 >= horizon {
                let p = point_from(st.y1, st.edge);
                record(st.t1, p, st.l1);
                return Ok(Terminal { state: Some(p), lifetime: f64::INFINITY, local_time: st.l1 });
            }
        } else if i >= n_fixed {
            let p = point_from(st.y1, st.edge);
            record(st.t1, p, st.l1);
            return Ok(Terminal { state: Some(p), lifetime: f64::INFINITY, local_time: st.l1 });
        }
        if i.is_multiple_of(stride) {
            record(st.t1, point_from(st.y1, st.edge), st.l1);
        }
    }
}

fn run_absorbed<R: Rng + ?Sized>(
    beta: f64,
    start: GraphPoint,
    cfg: &SimConfig,
    rng: &mut R,
    mut record: impl FnMut(f64, GraphPoint, f64),
) -> Result<Terminal> {
    let horizon = cfg.horizon;
    record(0.0, start, 0.0);
    let finish = |hit: f64, rng: &mut R, record: &mut dyn FnMut(f64, GraphPoint, f64)| {
        let lifetime = hit + exp_holding(beta, rng);
        if lifetime <= horizon {
            record(lifetime, GraphPoint::Vertex, 0.0);
            Terminal { state: None, lifetime, local_time: 0.0 }
        } else {
            record(horizon, GraphPoint::Vertex, 0.0);
            Terminal { state: Some(GraphPoint::Vertex), lifetime: f64::INFINITY, local_time: 0.0 }
        }
    };
    let (edge, mut y) = match start {
        GraphPoint::Vertex => return Ok(finish(0.0, rng, &mut record)),
        GraphPoint::Interior { edge, x } => (edge, x),
    };
    let n = step_count(horizon, cfg.dt);
    let stride = cfg.record_every as u64;
    for i in 0..n {
        let s0 = i as f64 * cfg.dt;
        let dt = cfg.dt.min(horizon - s0);
        match killed_bm_step(y, dt, rng) {
            Err(h) => {
                record(s0 + h, GraphPoint::Vertex, 0.0);
                return Ok(finish(s0 + h, rng, &mut record));
            }
            Ok(y1) => {
                y = y1;
                if (i + 1) % stride == 0 || i + 1 == n {
                    record(s0 + dt, GraphPoint::Interior { edge, x: y }, 0.0);
                }
            }
        }
    }
    Ok(Terminal { state: Some(GraphPoint::Interior { edge, x: y }), lifetime: f64::INFINITY, local_time: 0.0 })
}

/// Simulates one path up to `cfg.horizon` (process clock) and records it.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &ProcessParams,
    start: GraphPoint,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut traj = Trajectory { lifetime: f64::INFINITY, ..Default::default() };
    let term = run_path(params, start, cfg, rng, |t, p, l| traj.push(t, p, l))?;
    traj.killed = term.state.is_none();
    traj.lifetime = term.lifetime;
    Ok(traj)
}

/// Same law as the final state of [`simulate_path`] without storing the path.
pub fn terminal_state<R: Rng + ?Sized>(
    params: &ProcessParams,
    start: GraphPoint,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Terminal> {
    run_path(params, start, cfg, rng, |_, _, _| {})
}

/// Lifetime of the General process built as a Walsh path killed at level `S`,
/// shifted by `γS`: `ζ_{β,γ} = ζ_{β,0} + γ S`. Returns `INFINITY` if the Walsh path
/// survives past `max_intrinsic`.
pub fn general_lifetime_via_shift<R: Rng + ?Sized>(
    params: &ProcessParams,
    start: GraphPoint,
    cfg: &SimConfig,
    max_intrinsic: f64,
    rng: &mut R,
) -> Result<f64> {
    let elastic = ProcessParams::new(params.weights().to_vec(), params.beta(), 0.0)?;
    let mut walker = PathWalker::new(&elastic, start, cfg, rng)?;
    let s_level = walker.kill_level();
    while walker.intrinsic_time() < max_intrinsic {
        if let Some(z) = walker.step().killed {
            return Ok(z + params.gamma() * s_level);
        }
    }
    Ok(f64::INFINITY)
}

/// Maps `f` over path indices with one RNG stream per path, so results do not
/// depend on how paths are distributed over threads.
pub fn map_paths<T, F>(n_paths: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    map_paths_range(0..n_paths, seed, f)
}

/// [`map_paths`] over a sub-range of path indices; path `i` always uses stream `i`.
pub fn map_paths_range<T, F>(paths: Range<usize>, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    let run = |i: usize| {
        let mut rng = RngConfig::new(seed, i as u64).rng();
        f(i, &mut rng)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        paths.into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        paths.map(run).collect()
    }
}

/// Caps the worker pool from `STARWALK_THREADS` if set. Safe to call repeatedly.
pub fn configure_threads() -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("STARWALK_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| validation(format!("STARWALK_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(validation("STARWALK_THREADS must be a positive integer, got 0"));
        }
        // a second initialization attempt is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Terminal states of `cfg.n_paths` independent paths.
pub fn simulate_terminal_batch(
    params: &ProcessParams,
    start: GraphPoint,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Vec<Terminal>> {
    cfg.validate()?;
    params.graph().check_point(start)?;
    map_paths(cfg.n_paths, seed, |_, rng| terminal_state(params, start, cfg, rng))
        .into_iter()
        .collect()
}

/// Full trajectories of `cfg.n_paths` independent paths.
pub fn simulate_batch(
    params: &ProcessParams,
    start: GraphPoint,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    simulate_batch_range(params, start, cfg, seed, 0..cfg.n_paths)
}

/// Trajectories for the path indices in `paths`; identical to the matching slice
/// of [`simulate_batch`], so large batches can be produced in ordered chunks.
pub fn simulate_batch_range(
    params: &ProcessParams,
    start: GraphPoint,
    cfg: &SimConfig,
    seed: u64,
    paths: Range<usize>,
) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    params.graph().check_point(start)?;
    map_paths_range(paths, seed, |_, rng| simulate_path(params, start, cfg, rng)).into_iter().collect()
}

/// CSV with columns `path_id,time,edge,x,local_time,alive`. Edges are 1-based and
/// 0 denotes the vertex; numbers use the shortest round-trip representation.
pub fn write_csv<W: Write>(out: &mut W, paths: &[Trajectory]) -> Result<()> {
    writeln!(out, "path_id,time,edge,x,local_time,alive")?;
    for (id, p) in paths.iter().enumerate() {
        write_csv_rows(out, id, p)?;
    }
    Ok(())
}

pub fn write_csv_rows<W: Write + ?Sized>(out: &mut W, id: usize, p: &Trajectory) -> Result<()> {
    let last = p.times.len().saturating_sub(1);
    for (j, ((t, s), l)) in p.times.iter().zip(&p.states).zip(&p.local_time).enumerate() {
        let (edge, x) = match *s {
            GraphPoint::Vertex => (0, 0.0),
            GraphPoint::Interior { edge, x } => (edge + 1, x),
        };
        let alive = !(p.killed && j == last);
        writeln!(out, "{id},{t:?},{edge},{x:?},{l:?},{}", u8::from(alive))?;
    }
    Ok(())
}

const SUMMARY_MAGIC: &[u8; 4] = b"SWSM";
const SUMMARY_VERSION: u32 = 1;
const KILLED_EDGE: u32 = u32::MAX;

/// Compact binary summary: magic `SWSM`, version, path count, then per path
/// `edge: u32` (0 vertex, 1-based edge, `u32::MAX` killed), `x`, `lifetime`,
/// `local_time` as little-endian `f64`.
pub fn write_summary<W: Write>(out: &mut W, terms: &[Terminal]) -> Result<()> {
    out.write_all(SUMMARY_MAGIC)?;
    out.write_all(&SUMMARY_VERSION.to_le_bytes())?;
    out.write_all(&(terms.len() as u64).to_le_bytes())?;
    for t in terms {
        let (edge, x) = match t.state {
            None => (KILLED_EDGE, 0.0),
            Some(GraphPoint::Vertex) => (0, 0.0),
            Some(GraphPoint::Interior { edge, x }) => (edge as u32 + 1, x),
        };
        out.write_all(&edge.to_le_bytes())?;
        out.write_all(&x.to_le_bytes())?;
        out.write_all(&t.lifetime.to_le_bytes())?;
        out.write_all(&t.local_time.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_summary<Rd: Read>(inp: &mut Rd) -> Result<Vec<Terminal>> {
    let bad = |m: &str| Error::Io(std::io::ErrorKind::InvalidData, format!("malformed summary: {m}"));
    let mut magic = [0u8; 4];
    inp.read_exact(&mut magic)?;
    if &magic != SUMMARY_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    inp.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != SUMMARY_VERSION {
        return Err(bad("unsupported version"));
    }
    inp.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut out = Vec::with_capacity(n.min(1 << 24));
    let mut f = |inp: &mut Rd| -> Result<f64> {
        inp.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    for _ in 0..n {
        inp.read_exact(&mut b4)?;
        let edge = u32::from_le_bytes(b4);
        let x = f(inp)?;
        let lifetime = f(inp)?;
        let local_time = f(inp)?;
        let state = match edge {
            KILLED_EDGE => None,
            0 => Some(GraphPoint::Vertex),
            e => Some(GraphPoint::Interior { edge: e as usize - 1, x }),
        };
        out.push(Terminal { state, lifetime, local_time });
    }
    Ok(out)
}

//! Transition kernels and resolvents of every process on the star graph.
//!
//! All kernels share one shape: the Dirichlet part (Brownian motion killed at the
//! vertex, only on the source edge) plus a reflected part `2 w_m G(d_v)` that
//! depends on the source and target only through the distance via the vertex,
//! plus an optional point mass at the vertex.

use serde::Serialize;

use crate::error::{domain, validation, Result};
use crate::graph::{GraphPoint, ProcessParams, Regime};
use crate::quad::{gk15, integrate};
use crate::special::{
    absorbed_atom_unchecked, g_0gamma_unchecked, g_beta0_unchecked, g_betagamma_unchecked,
    gauss_unchecked, SpecialFnConfig,
};

/// Gaussian tails are negligible past this many standard deviations.
const GAUSS_SPAN: f64 = 40.0;
/// `e^{-EXP_SPAN}` is negligible for exponentially decaying resolvents.
const EXP_SPAN: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    /// Transition kernel `p(t, ξ, ·)`.
    Transition,
    /// Resolvent kernel `r_λ(ξ, ·)`.
    Resolvent,
    /// Heat kernel of Brownian motion killed at the vertex.
    DirichletTransition,
    /// Resolvent of Brownian motion killed at the vertex.
    DirichletResolvent,
}

impl KernelKind {
    fn is_transition(self) -> bool {
        matches!(self, KernelKind::Transition | KernelKind::DirichletTransition)
    }

    fn is_dirichlet(self) -> bool {
        matches!(self, KernelKind::DirichletTransition | KernelKind::DirichletResolvent)
    }
}

/// A measure on the star graph: per-edge density plus an atom at the vertex.
#[derive(Debug, Clone)]
pub struct KernelMeasure {
    kind: KernelKind,
    /// `t` for transition kernels, `λ` for resolvents.
    param: f64,
    params: ProcessParams,
    source: GraphPoint,
    atom: f64,
    cfg: SpecialFnConfig,
}

fn check_source(params: &ProcessParams, source: GraphPoint) -> Result<()> {
    params.graph().check_point(source)
}

fn check_param(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// Transition kernel at time `t` with default quadrature settings.
pub fn transition(params: &ProcessParams, t: f64, source: GraphPoint) -> Result<KernelMeasure> {
    transition_with(params, t, source, &SpecialFnConfig::default())
}

pub fn transition_with(
    params: &ProcessParams,
    t: f64,
    source: GraphPoint,
    cfg: &SpecialFnConfig,
) -> Result<KernelMeasure> {
    KernelMeasure::build(KernelKind::Transition, params, t, source, cfg)
}

/// Resolvent kernel at rate `λ` with default quadrature settings.
pub fn resolvent(params: &ProcessParams, lambda: f64, source: GraphPoint) -> Result<KernelMeasure> {
    resolvent_with(params, lambda, source, &SpecialFnConfig::default())
}

pub fn resolvent_with(
    params: &ProcessParams,
    lambda: f64,
    source: GraphPoint,
    cfg: &SpecialFnConfig,
) -> Result<KernelMeasure> {
    KernelMeasure::build(KernelKind::Resolvent, params, lambda, source, cfg)
}

/// Heat kernel of Brownian motion killed on hitting the vertex.
pub fn dirichlet(params: &ProcessParams, t: f64, source: GraphPoint) -> Result<KernelMeasure> {
    KernelMeasure::build(KernelKind::DirichletTransition, params, t, source, &SpecialFnConfig::default())
}

/// Resolvent of Brownian motion killed on hitting the vertex.
pub fn dirichlet_resolvent(
    params: &ProcessParams,
    lambda: f64,
    source: GraphPoint,
) -> Result<KernelMeasure> {
    KernelMeasure::build(KernelKind::DirichletResolvent, params, lambda, source, &SpecialFnConfig::default())
}

impl KernelMeasure {
    fn build(
        kind: KernelKind,
        params: &ProcessParams,
        param: f64,
        source: GraphPoint,
        cfg: &SpecialFnConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        check_source(params, source)?;
        check_param(if kind.is_transition() { "t" } else { "lambda" }, param)?;
        let mut k = Self { kind, param, params: params.clone(), source, atom: 0.0, cfg: *cfg };
        k.atom = k.compute_atom()?;
        Ok(k)
    }

    fn compute_atom(&self) -> Result<f64> {
        if self.kind.is_dirichlet() {
            return Ok(0.0);
        }
        let x = self.source.dist_to_vertex();
        let (beta, gamma) = (self.params.beta(), self.params.gamma());
        match (self.params.regime(), self.kind) {
            (Regime::Walsh | Regime::Elastic, _) => Ok(0.0),
            (Regime::AbsorbedKilled, KernelKind::Transition) => {
                absorbed_atom_unchecked(self.param, x, beta, &self.cfg)
            }
            (Regime::AbsorbedKilled, _) => {
                let lambda = self.param;
                Ok((-(2.0 * lambda).sqrt() * x).exp() / (beta + lambda))
            }
            (Regime::Sticky | Regime::General, _) => Ok(gamma * self.reflected(x)?),
        }
    }

    /// The regime's reflected function `G` evaluated at distance `dv`
    /// (`g`, `g_{β,0}`, `g_{0,γ}`, `g_{β,γ}` in time; `ρ(λ) e^{-√(2λ) dv}` in λ).
    fn reflected(&self, dv: f64) -> Result<f64> {
        let (beta, gamma) = (self.params.beta(), self.params.gamma());
        if self.kind.is_dirichlet() {
            return Ok(0.0);
        }
        if self.kind == KernelKind::Resolvent {
            return Ok(match self.params.regime() {
                Regime::AbsorbedKilled => 0.0,
                _ => self.params.rho(self.param) * (-(2.0 * self.param).sqrt() * dv).exp(),
            });
        }
        let t = self.param;
        Ok(match self.params.regime() {
            Regime::AbsorbedKilled => 0.0,
            Regime::Walsh => gauss_unchecked(t, dv),
            Regime::Elastic => g_beta0_unchecked(t, dv, beta),
            Regime::Sticky => g_0gamma_unchecked(t, dv, gamma),
            Regime::General => g_betagamma_unchecked(t, dv, beta, gamma, &self.cfg)?,
        })
    }

    /// Dirichlet part on the source edge, written to avoid cancellation near the vertex.
    fn dirichlet_part(&self, x: f64, y: f64) -> f64 {
        if self.kind.is_transition() {
            let t = self.param;
            gauss_unchecked(t, x - y) * -(-2.0 * x * y / t).exp_m1()
        } else {
            let s = (2.0 * self.param).sqrt();
            (-s * (x - y).abs()).exp() * -(-2.0 * s * x.min(y)).exp_m1() / s
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// `t` for transition kernels, `λ` for resolvents.
    pub fn t_or_lambda(&self) -> f64 {
        self.param
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn source(&self) -> GraphPoint {
        self.source
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }

    pub fn n_edges(&self) -> usize {
        self.params.n_edges()
    }

    /// Density at `(m, y)`, `y ≥ 0`; `y = 0` gives the one-sided limit on edge `m`.
    pub fn density(&self, m: usize, y: f64) -> Result<f64> {
        if m >= self.n_edges() {
            return Err(validation(format!(
                "edge index {m} out of range for a graph with {} edges",
                self.n_edges()
            )));
        }
        if !(y >= 0.0 && y.is_finite()) {
            return Err(domain(format!("y must be finite and >= 0, got {y}")));
        }
        self.density_unchecked(m, y)
    }

    fn density_unchecked(&self, m: usize, y: f64) -> Result<f64> {
        let x = self.source.dist_to_vertex();
        let mut v = match self.source {
            GraphPoint::Interior { edge, x } if edge == m => self.dirichlet_part(x, y),
            _ => 0.0,
        };
        if !self.kind.is_dirichlet() && self.params.regime() != Regime::AbsorbedKilled {
            let w = self.params.weights()[m];
            if w > 0.0 {
                v += 2.0 * w * self.reflected(x + y)?;
            }
        }
        Ok(v)
    }

    /// Upper end of the numerically relevant support on edge `m`.
    fn support_end(&self) -> f64 {
        let x = self.source.dist_to_vertex();
        let scale = if self.kind.is_transition() {
            GAUSS_SPAN * self.param.sqrt()
        } else {
            EXP_SPAN / (2.0 * self.param).sqrt()
        };
        x + scale
    }

    fn breakpoints(&self, m: usize, upper: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        if let GraphPoint::Interior { edge, x } = self.source {
            if edge == m && x < upper {
                pts.push(x);
            }
        }
        pts.push(upper);
        pts
    }

    fn integrate_edge(&self, m: usize, upper: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut first_err = None;
        let pts = self.breakpoints(m, upper);
        let mut total = 0.0;
        for w in pts.windows(2) {
            let r = integrate(
                |y| match self.density_unchecked(m, y) {
                    Ok(d) => d * f(y),
                    Err(e) => {
                        first_err.get_or_insert(e);
                        0.0
                    }
                },
                w[0],
                w[1],
                self.cfg.quad_abs_tol,
                self.cfg.quad_max_subdiv,
            )?;
            total += r.value;
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// `∫₀^∞ density(m, y) dy`.
    pub fn edge_mass(&self, m: usize) -> Result<f64> {
        self.density(m, 0.0)?;
        self.integrate_edge(m, self.support_end(), |_| 1.0)
    }

    /// Sum of edge masses plus the atom.
    pub fn total_mass(&self) -> Result<f64> {
        let mut s = self.atom;
        for m in 0..self.n_edges() {
            s += self.edge_mass(m)?;
        }
        Ok(s)
    }

    /// Mass of the closed ball of radius `eps` around the vertex, atom included.
    pub fn mass_near_vertex(&self, eps: f64) -> Result<f64> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(domain(format!("eps must be finite and >= 0, got {eps}")));
        }
        let mut s = self.atom;
        for m in 0..self.n_edges() {
            s += self.integrate_edge(m, eps.min(self.support_end()), |_| 1.0)?;
        }
        Ok(s)
    }

    /// `∫ f dμ` for a function given per edge as `f(m, y)` with vertex value `f_v`.
    pub fn integrate_fn(&self, f_v: f64, f: impl Fn(usize, f64) -> f64) -> Result<f64> {
        let mut s = self.atom * f_v;
        for m in 0..self.n_edges() {
            s += self.integrate_edge(m, self.support_end(), |y| f(m, y))?;
        }
        Ok(s)
    }

    /// Cumulative mass table on edge `m`, used for KS tests of edge magnitudes.
    pub fn edge_cdf(&self, m: usize, cells: usize) -> Result<EdgeCdf> {
        self.density(m, 0.0)?;
        let cells = cells.max(16);
        let upper = self.support_end();
        let mut ys: Vec<f64> = (0..=cells).map(|i| upper * i as f64 / cells as f64).collect();
        if let GraphPoint::Interior { edge, x } = self.source {
            if edge == m && x < upper && !ys.contains(&x) {
                ys.push(x);
                ys.sort_by(f64::total_cmp);
            }
        }
        let mut first_err = None;
        let mut dens = Vec::with_capacity(ys.len());
        for &y in &ys {
            dens.push(self.density_unchecked(m, y)?);
        }
        let mut cdf = vec![0.0; ys.len()];
        for i in 1..ys.len() {
            let (v, _) = gk15(
                &mut |y| match self.density_unchecked(m, y) {
                    Ok(d) => d,
                    Err(e) => {
                        first_err.get_or_insert(e);
                        0.0
                    }
                },
                ys[i - 1],
                ys[i],
            );
            cdf[i] = cdf[i - 1] + v;
        }
        if let Some(e) = first_err {
            return Err(e);
        }
        Ok(EdgeCdf { ys, cdf, dens })
    }
}

/// Piecewise cubic Hermite interpolant of an edge's cumulative mass.
#[derive(Debug, Clone)]
pub struct EdgeCdf {
    ys: Vec<f64>,
    cdf: Vec<f64>,
    dens: Vec<f64>,
}

impl EdgeCdf {
    pub fn mass(&self) -> f64 {
        *self.cdf.last().expect("non-empty table")
    }

    /// `∫₀^y density`.
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let last = self.ys.len() - 1;
        if y >= self.ys[last] {
            return self.cdf[last];
        }
        let i = self.ys.partition_point(|&v| v <= y) - 1;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = y1 - y0;
        let s = (y - y0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.cdf[i] + h10 * h * self.dens[i] + h01 * self.cdf[i + 1] + h11 * h * self.dens[i + 1];
        v.clamp(self.cdf[i].min(self.cdf[i + 1]), self.cdf[i].max(self.cdf[i + 1]))
    }

    /// Conditional CDF of the magnitude given the edge.
    pub fn conditional(&self, y: f64) -> f64 {
        let m = self.mass();
        if m > 0.0 {
            (self.eval(y) / m).min(1.0)
        } else {
            0.0
        }
    }
}

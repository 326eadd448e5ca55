//! Star-graph geometry, Feller boundary conditions and the map to process parameters.
//!
//! A star graph has a single vertex `v` and `n` semi-infinite edges. A point is
//! either the vertex or `(edge, x)` with `x > 0` the distance to the vertex.
//! Edge indices are 0-based throughout the library.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Tolerance on the simplex constraint `a + c + Σ b_k = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarGraph {
    n_edges: usize,
}

impl StarGraph {
    pub fn new(n_edges: usize) -> Result<Self> {
        if n_edges == 0 {
            return Err(validation("n_edges >= 1 violated"));
        }
        Ok(Self { n_edges })
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn check_point(&self, p: GraphPoint) -> Result<()> {
        match p {
            GraphPoint::Vertex => Ok(()),
            GraphPoint::Interior { edge, x } => {
                if edge >= self.n_edges {
                    Err(validation(format!(
                        "edge index {edge} out of range for a graph with {} edges",
                        self.n_edges
                    )))
                } else if !(x > 0.0 && x.is_finite()) {
                    Err(validation(format!("interior coordinate must be finite and > 0, got {x}")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// A point of the star graph. `x = 0` is only ever represented as [`GraphPoint::Vertex`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphPoint {
    Vertex,
    Interior { edge: usize, x: f64 },
}

impl GraphPoint {
    /// Builds a point from local coordinates; `x == 0` maps to the vertex.
    pub fn new(edge: usize, x: f64) -> Result<Self> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(validation(format!("coordinate must be finite and >= 0, got {x}")));
        }
        if x == 0.0 {
            Ok(GraphPoint::Vertex)
        } else {
            Ok(GraphPoint::Interior { edge, x })
        }
    }

    /// Distance to the vertex.
    pub fn dist_to_vertex(&self) -> f64 {
        match *self {
            GraphPoint::Vertex => 0.0,
            GraphPoint::Interior { x, .. } => x,
        }
    }

    pub fn edge(&self) -> Option<usize> {
        match *self {
            GraphPoint::Vertex => None,
            GraphPoint::Interior { edge, .. } => Some(edge),
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self, GraphPoint::Vertex)
    }
}

/// Returns `(d, d_v)`: the graph metric and the distance "via the vertex".
pub fn distances(g: &StarGraph, p: GraphPoint, q: GraphPoint) -> Result<(f64, f64)> {
    g.check_point(p)?;
    g.check_point(q)?;
    let dv = p.dist_to_vertex() + q.dist_to_vertex();
    let d = match (p, q) {
        (GraphPoint::Interior { edge: k, x }, GraphPoint::Interior { edge: m, x: y }) if k == m => {
            (x - y).abs()
        }
        _ => dv,
    };
    Ok((d, dv))
}

/// Feller triple `(a, b_1..b_n, c)` of the vertex condition
/// `a f(v) + (c/2) f''(v) = Σ b_k f'(v_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    a: f64,
    b: Vec<f64>,
    c: f64,
}

impl BoundaryCondition {
    /// Validates the triple. A sum off by less than [`SIMPLEX_TOL`] is renormalized;
    /// anything larger is rejected.
    pub fn new(a: f64, b: Vec<f64>, c: f64) -> Result<Self> {
        if b.is_empty() {
            return Err(validation("n_edges >= 1 violated (b is empty)"));
        }
        let check = |name: &str, v: f64| -> Result<()> {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                Err(validation(format!("{name} in [0,1] violated (got {v})")))
            } else {
                Ok(())
            }
        };
        check("a", a)?;
        check("c", c)?;
        for (k, &bk) in b.iter().enumerate() {
            check(&format!("b[{}]", k + 1), bk)?;
        }
        let sum = a + c + b.iter().sum::<f64>();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(validation(format!("a + c + sum(b) = 1 violated (sum = {sum})")));
        }
        let (a, c, b) = if sum != 1.0 {
            (a / sum, c / sum, b.iter().map(|v| v / sum).collect())
        } else {
            (a, c, b)
        };
        if a == 1.0 {
            return Err(validation("a != 1 violated"));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n_edges(&self) -> usize {
        self.b.len()
    }

    pub fn graph(&self) -> StarGraph {
        StarGraph { n_edges: self.b.len() }
    }

    /// Residual of the vertex condition for given `f(v)`, `f''(v)` and edge derivatives `f'(v_k)`.
    pub fn residual(&self, f_v: f64, f2_v: f64, f1: &[f64]) -> f64 {
        let rhs: f64 = self.b.iter().zip(f1).map(|(b, d)| b * d).sum();
        self.a * f_v + 0.5 * self.c * f2_v - rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `b = 0`: stopped at the vertex, then killed after an Exponential(β) holding time.
    AbsorbedKilled,
    Walsh,
    Elastic,
    Sticky,
    General,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::AbsorbedKilled => "absorbed-killed",
            Regime::Walsh => "walsh",
            Regime::Elastic => "elastic",
            Regime::Sticky => "sticky",
            Regime::General => "general",
        };
        f.write_str(s)
    }
}

/// Process-side parameters: edge weights `w`, killing rate `β`, stickiness `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    regime: Regime,
    n_edges: usize,
    /// Empty for [`Regime::AbsorbedKilled`].
    w: Vec<f64>,
    beta: f64,
    gamma: f64,
}

impl ProcessParams {
    /// Walsh-family parameters; the regime follows from which of `β`, `γ` are positive.
    pub fn new(w: Vec<f64>, beta: f64, gamma: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(validation("n_edges >= 1 violated (w is empty)"));
        }
        for (k, &wk) in w.iter().enumerate() {
            if !wk.is_finite() || !(0.0..=1.0).contains(&wk) {
                return Err(validation(format!("w[{}] in [0,1] violated (got {wk})", k + 1)));
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(validation(format!("sum(w) = 1 violated (sum = {sum})")));
        }
        let w = if sum != 1.0 { w.iter().map(|v| v / sum).collect() } else { w };
        if !beta.is_finite() || beta < 0.0 {
            return Err(validation(format!("beta >= 0 violated (got {beta})")));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(validation(format!("gamma >= 0 violated (got {gamma})")));
        }
        let regime = match (beta > 0.0, gamma > 0.0) {
            (false, false) => Regime::Walsh,
            (true, false) => Regime::Elastic,
            (false, true) => Regime::Sticky,
            (true, true) => Regime::General,
        };
        Ok(Self { regime, n_edges: w.len(), w, beta, gamma })
    }

    pub fn walsh(w: Vec<f64>) -> Result<Self> {
        Self::new(w, 0.0, 0.0)
    }

    /// Equal weights `1/n`.
    pub fn uniform(n: usize, beta: f64, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(validation("n_edges >= 1 violated"));
        }
        Self::new(vec![1.0 / n as f64; n], beta, gamma)
    }

    /// The `b = 0` process on `n` edges with holding rate `β` at the vertex.
    pub fn absorbed(n_edges: usize, beta: f64) -> Result<Self> {
        if n_edges == 0 {
            return Err(validation("n_edges >= 1 violated"));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(validation(format!("beta >= 0 violated (got {beta})")));
        }
        Ok(Self { regime: Regime::AbsorbedKilled, n_edges, w: Vec::new(), beta, gamma: 0.0 })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn graph(&self) -> StarGraph {
        StarGraph { n_edges: self.n_edges }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Whether the process can die (Elastic, General, and AbsorbedKilled with β > 0).
    pub fn is_killing(&self) -> bool {
        self.beta > 0.0
    }

    /// `ρ(λ) = 1/(β + √(2λ) + γλ)`; reduces to every regime's reflection factor.
    pub fn rho(&self, lambda: f64) -> f64 {
        1.0 / (self.beta + (2.0 * lambda).sqrt() + self.gamma * lambda)
    }

    /// Inverse of [`classify_boundary`].
    pub fn to_boundary(&self) -> BoundaryCondition {
        match self.regime {
            Regime::AbsorbedKilled => BoundaryCondition {
                a: self.beta / (1.0 + self.beta),
                b: vec![0.0; self.n_edges],
                c: 1.0 / (1.0 + self.beta),
            },
            _ => {
                let scale = 1.0 / (1.0 + self.beta + self.gamma);
                BoundaryCondition {
                    a: self.beta * scale,
                    b: self.w.iter().map(|w| w * scale).collect(),
                    c: self.gamma * scale,
                }
            }
        }
    }
}

/// Maps a Feller triple to the parameters of the process realizing it.
pub fn classify_boundary(bc: &BoundaryCondition) -> ProcessParams {
    let n = bc.b.len();
    let b_sum: f64 = bc.b.iter().sum();
    if b_sum == 0.0 {
        // c = 1 - a > 0 because a != 1
        return ProcessParams {
            regime: Regime::AbsorbedKilled,
            n_edges: n,
            w: Vec::new(),
            beta: bc.a / bc.c,
            gamma: 0.0,
        };
    }
    // 1 - r = Σ b_k; summing b directly avoids cancellation in 1 - (a + c)
    let w = bc.b.iter().map(|b| b / b_sum).collect();
    let beta = bc.a / b_sum;
    let gamma = bc.c / b_sum;
    let regime = match (beta > 0.0, gamma > 0.0) {
        (false, false) => Regime::Walsh,
        (true, false) => Regime::Elastic,
        (false, true) => Regime::Sticky,
        (true, true) => Regime::General,
    };
    ProcessParams { regime, n_edges: n, w, beta, gamma }
}

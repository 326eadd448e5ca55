//! Vertex boundary matrices, on-shell scattering matrices and the sticky bound state.
//!
//! Boundary conditions are written `A F + B F' = 0` with `F`, `F'` the vectors of
//! edge values and outgoing derivatives at the vertex. The on-shell S-matrix at
//! energy `E = k²` is `-(A + ik B)⁻¹ (A - ik B)`; on the resolvent axis
//! `E = -2λ` this becomes the real matrix `-(A + √(2λ) B)⁻¹ (A - √(2λ) B)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, validation, Error, Result};
use crate::graph::{ProcessParams, Regime};

/// Relative singular-value threshold for the rank of `(A, B)`.
pub const RANK_TOL: f64 = 1e-10;
/// Condition numbers above this are reported as a pole.
pub const POLE_COND: f64 = 1e12;
/// Largest imaginary part accepted when an S-matrix is returned as real.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMatrices {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl BoundaryMatrices {
    /// Validates shapes and that the `n × 2n` block `(A, B)` has rank `n`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(validation(format!(
                "A and B must be square of equal size, got {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(validation("A and B must have finite entries"));
        }
        let mut ab = DMatrix::zeros(n, 2 * n);
        ab.view_mut((0, 0), (n, n)).copy_from(&a);
        ab.view_mut((0, n), (n, n)).copy_from(&b);
        let sv = ab.singular_values();
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
        if rank < n {
            return Err(validation(format!("rank (A, B) = n violated (rank {rank}, n {n})")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Whether `A Bᵀ` is symmetric, the self-adjointness condition for real `(A, B)`.
    pub fn is_self_adjoint(&self) -> bool {
        let m = &self.a * self.b.transpose();
        let scale = m.amax().max(1.0);
        (&m - m.transpose()).amax() <= 1e-12 * scale
    }

    /// `(CA, CB)` for an invertible `C`.
    pub fn left_multiply(&self, c: &DMatrix<f64>) -> Result<Self> {
        Self::new(c * &self.a, c * &self.b)
    }
}

/// Where an S-matrix was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SpectralParam {
    /// Resolvent parameter `λ > 0`.
    Lambda(f64),
    /// Energy `E`; negative values lie on the resolvent axis `E = -2λ`.
    Energy(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix {
    entries: DMatrix<f64>,
    spectral_param: SpectralParam,
    regime: Option<Regime>,
    boundary: Option<BoundaryMatrices>,
}

impl SMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn spectral_param(&self) -> SpectralParam {
        self.spectral_param
    }

    pub fn regime(&self) -> Option<Regime> {
        self.regime
    }

    /// The `(A, B)` pair the matrix was computed from, when it came from [`onshell`].
    pub fn boundary(&self) -> Option<&BoundaryMatrices> {
        self.boundary.as_ref()
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    /// `‖S² - I‖∞` (max row sum).
    pub fn involution_residual(&self) -> f64 {
        let n = self.n();
        let r = &self.entries * &self.entries - DMatrix::<f64>::identity(n, n);
        inf_norm(&r)
    }
}

/// Max absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// On-shell S-matrix `S_{A,B}(E)`. `E < 0` uses the real form with `√(-E)`;
/// `E > 0` is evaluated in complex arithmetic and must come out real.
pub fn onshell(ab: &BoundaryMatrices, energy: f64) -> Result<SMatrix> {
    if !energy.is_finite() || energy == 0.0 {
        return Err(domain(format!("energy must be finite and non-zero, got {energy}")));
    }
    let n = ab.n();
    let entries = if energy < 0.0 {
        let s = (-energy).sqrt();
        let m = &ab.a + &ab.b * s;
        let cond = condition_number(&m);
        if cond > POLE_COND {
            return Err(Error::Pole { param: energy, condition: cond });
        }
        let rhs = &ab.a - &ab.b * s;
        let lu = m.lu();
        -lu.solve(&rhs).ok_or(Error::Pole { param: energy, condition: cond })?
    } else {
        let k = Complex64::new(0.0, energy.sqrt());
        let a = ab.a.map(|v| Complex64::new(v, 0.0));
        let b = ab.b.map(|v| Complex64::new(v, 0.0));
        let m = &a + &b * k;
        let sv = m.clone().singular_values();
        let cond = if sv.min() == 0.0 { f64::INFINITY } else { sv.max() / sv.min() };
        if cond > POLE_COND {
            return Err(Error::Pole { param: energy, condition: cond });
        }
        let rhs = &a - &b * k;
        let s = -m.lu().solve(&rhs).ok_or(Error::Pole { param: energy, condition: cond })?;
        let max_imag = s.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_imag > IMAG_TOL {
            return Err(Error::ComplexValued { energy, max_imag });
        }
        DMatrix::from_fn(n, n, |i, j| s[(i, j)].re)
    };
    Ok(SMatrix {
        entries,
        spectral_param: SpectralParam::Energy(energy),
        regime: None,
        boundary: Some(ab.clone()),
    })
}

/// Reflection factor `φ(λ)` with `S_km = 2 φ w_m - δ_km`.
pub fn reflection_factor(params: &ProcessParams, lambda: f64) -> f64 {
    let s = (2.0 * lambda).sqrt();
    match params.regime() {
        Regime::Walsh => 1.0,
        Regime::AbsorbedKilled => 0.0,
        _ => s * params.rho(lambda),
    }
}

/// The S-matrix appearing in the reflected part of the process resolvent.
pub fn process_smatrix(params: &ProcessParams, lambda: f64) -> Result<SMatrix> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("lambda must be finite and > 0, got {lambda}")));
    }
    let n = params.n_edges();
    let entries = if params.regime() == Regime::AbsorbedKilled {
        -DMatrix::<f64>::identity(n, n)
    } else {
        let phi = reflection_factor(params, lambda);
        let w = params.weights();
        DMatrix::from_fn(n, n, |k, m| 2.0 * phi * w[m] - if k == m { 1.0 } else { 0.0 })
    };
    Ok(SMatrix {
        entries,
        spectral_param: SpectralParam::Lambda(lambda),
        regime: Some(params.regime()),
        boundary: None,
    })
}

/// Boundary matrices realizing the process's vertex condition. Walsh and Elastic
/// use the continuity-plus-flux form and are valid at every energy; Sticky and
/// General are built from `S(λ₀)` and reproduce the process S-matrix at `λ₀`.
pub fn boundary_matrices(params: &ProcessParams, lambda0: f64) -> Result<BoundaryMatrices> {
    let n = params.n_edges();
    match params.regime() {
        Regime::AbsorbedKilled => {
            BoundaryMatrices::new(DMatrix::identity(n, n), DMatrix::zeros(n, n))
        }
        Regime::Walsh | Regime::Elastic => {
            let mut a = DMatrix::zeros(n, n);
            let mut b = DMatrix::zeros(n, n);
            for i in 1..n {
                a[(i, i - 1)] = 1.0;
                a[(i, i)] = -1.0;
            }
            a[(0, n - 1)] += params.beta();
            for (m, &w) in params.weights().iter().enumerate() {
                b[(0, m)] = w;
            }
            BoundaryMatrices::new(a, b)
        }
        Regime::Sticky | Regime::General => {
            if !(lambda0 > 0.0 && lambda0.is_finite()) {
                return Err(domain(format!("lambda0 must be finite and > 0, got {lambda0}")));
            }
            let s = process_smatrix(params, lambda0)?.entries;
            let id = DMatrix::<f64>::identity(n, n);
            let a = (&s - &id) * -0.5;
            let b = (&s + &id) / (2.0 * (2.0 * lambda0).sqrt());
            BoundaryMatrices::new(a, b)
        }
    }
}

/// Sticky S-matrix continued to real wavenumber `k` (energy `k²`):
/// `2 φ(k) 1wᵀ - I` with `φ(k) = 2i / (2i - γk)`.
pub fn sticky_smatrix_k(gamma: f64, w: &[f64], k: f64) -> DMatrix<Complex64> {
    let i2 = Complex64::new(0.0, 2.0);
    let phi = i2 / (i2 - gamma * k);
    let n = w.len();
    DMatrix::from_fn(n, n, |r, c| {
        let d = if r == c { 1.0 } else { 0.0 };
        phi * (2.0 * w[c]) - d
    })
}

/// Time-delay matrix `(2ik)⁻¹ S⁻¹ ∂ₖS` of the sticky vertex with a central
/// difference of step `h` for `∂ₖS`.
pub fn sticky_time_delay_fd(gamma: f64, w: &[f64], k: f64, h: f64) -> Result<DMatrix<Complex64>> {
    if !(k > 0.0 && h > 0.0 && h < k) {
        return Err(domain(format!("need 0 < h < k, got k = {k}, h = {h}")));
    }
    let s = sticky_smatrix_k(gamma, w, k);
    let ds = (sticky_smatrix_k(gamma, w, k + h) - sticky_smatrix_k(gamma, w, k - h))
        / Complex64::new(2.0 * h, 0.0);
    let s_inv = s.try_inverse().ok_or(Error::Pole { param: k, condition: f64::INFINITY })?;
    Ok(s_inv * ds / Complex64::new(0.0, 2.0 * k))
}

/// Bound state and time delay of the sticky vertex with equal weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StickySpectral {
    pub gamma: f64,
    pub n: usize,
    pub k: f64,
    /// `E_b = -4/γ²`.
    pub energy: f64,
    /// Non-zero eigenvalue `-2γ / (k (4 + k²γ²))` of the time-delay matrix.
    pub time_delay: f64,
}

impl StickySpectral {
    /// Normalized bound state `(2/√(nγ)) e^{-2d/γ}` at distance `d` from the vertex.
    pub fn psi(&self, d: f64) -> f64 {
        2.0 / (self.n as f64 * self.gamma).sqrt() * (-2.0 * d / self.gamma).exp()
    }

    /// Decay rate `κ` of the bound state, `E_b = -κ²`.
    pub fn kappa(&self) -> f64 {
        2.0 / self.gamma
    }
}

pub fn sticky_spectral(gamma: f64, n: usize, k: f64) -> Result<StickySpectral> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain(format!("gamma must be finite and > 0, got {gamma}")));
    }
    if n == 0 {
        return Err(validation("n_edges >= 1 violated"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(domain(format!("k must be finite and > 0, got {k}")));
    }
    Ok(StickySpectral {
        gamma,
        n,
        k,
        energy: -4.0 / (gamma * gamma),
        time_delay: -2.0 * gamma / (k * (4.0 + k * k * gamma * gamma)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax()
    }

    #[test]
    fn walsh_two_edges_onshell() {
        let p = ProcessParams::walsh(vec![0.5, 0.5]).unwrap();
        let ab = boundary_matrices(&p, 1.0).unwrap();
        assert_eq!(ab.a(), &mat(&[&[0.0, 0.0], &[1.0, -1.0]]));
        assert_eq!(ab.b(), &mat(&[&[0.5, 0.5], &[0.0, 0.0]]));
        let swap = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        for e in [0.01, 1.0, 37.0, -0.5, -8.0] {
            let s = onshell(&ab, e).unwrap();
            assert!(max_diff(s.entries(), &swap) < 1e-14, "E = {e}");
        }
        assert!(ab.is_self_adjoint());
    }

    #[test]
    fn walsh_relations() {
        let p = ProcessParams::walsh(vec![0.1, 0.6, 0.3]).unwrap();
        let ab = boundary_matrices(&p, 1.0).unwrap();
        let s = process_smatrix(&p, 1.0).unwrap();
        assert!(max_diff(&(ab.a() * s.entries()), &-ab.a()) < 1e-12);
        assert!(max_diff(&(ab.b() * s.entries()), ab.b()) < 1e-12);
        assert!(!ab.is_self_adjoint());
    }

    #[test]
    fn walsh_three_edges_example() {
        let p = ProcessParams::walsh(vec![1.0, 0.0, 0.0]).unwrap();
        let s = process_smatrix(&p, 1.0).unwrap();
        let expect = mat(&[&[1.0, 0.0, 0.0], &[2.0, -1.0, 0.0], &[2.0, 0.0, -1.0]]);
        assert_eq!(s.entries(), &expect);
        assert!(s.involution_residual() < 1e-15);
        assert!((s.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn left_multiplication_invariance() {
        let p = ProcessParams::walsh(vec![0.2, 0.3, 0.5]).unwrap();
        let ab = boundary_matrices(&p, 1.0).unwrap();
        let c = mat(&[&[2.0, -1.0, 0.3], &[0.5, 1.0, 0.0], &[0.0, 0.7, 3.0]]);
        let cab = ab.left_multiply(&c).unwrap();
        for e in [2.0, -3.0] {
            let s1 = onshell(&ab, e).unwrap();
            let s2 = onshell(&cab, e).unwrap();
            assert!(max_diff(s1.entries(), s2.entries()) < 1e-10);
        }
    }

    #[test]
    fn elastic_onshell_matches_process() {
        let p = ProcessParams::new(vec![0.3, 0.7], 1.5, 0.0).unwrap();
        let ab = boundary_matrices(&p, 1.0).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let s = onshell(&ab, -2.0 * lambda).unwrap();
            let t = process_smatrix(&p, lambda).unwrap();
            assert!(max_diff(s.entries(), t.entries()) < 1e-12);
        }
        // the elastic vertex is genuinely complex at positive energy
        assert!(matches!(onshell(&ab, 1.0), Err(Error::ComplexValued { .. })));
    }

    #[test]
    fn general_reduces_to_elastic() {
        let pe = ProcessParams::new(vec![0.5, 0.5], 1.0, 0.0).unwrap();
        let s = process_smatrix(&pe, 2.0).unwrap();
        assert!((reflection_factor(&pe, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        let pg = ProcessParams::new(vec![0.5, 0.5], 1.0, 1e-15).unwrap();
        let g = process_smatrix(&pg, 2.0).unwrap();
        assert!(max_diff(s.entries(), g.entries()) < 1e-12);
    }

    #[test]
    fn sticky_zero_gamma_is_walsh() {
        let w = vec![0.25, 0.25, 0.5];
        let ps = ProcessParams::new(w.clone(), 0.0, 0.0).unwrap();
        let pw = ProcessParams::walsh(w).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let a = process_smatrix(&ps, lambda).unwrap();
            let b = process_smatrix(&pw, lambda).unwrap();
            assert_eq!(a.entries(), b.entries());
        }
    }

    #[test]
    fn sticky_round_trip_at_lambda0() {
        let p = ProcessParams::uniform(3, 0.0, 1.0).unwrap();
        let ab = boundary_matrices(&p, 1.0).unwrap();
        let s = onshell(&ab, -2.0).unwrap();
        let t = process_smatrix(&p, 1.0).unwrap();
        assert!(max_diff(s.entries(), t.entries()) < 1e-10);
        // a single constant (A, B) cannot track the λ-dependence of φ = √(2λ)/(√(2λ)+γλ)
        let s = onshell(&ab, -2.0 * 4.0).unwrap();
        let t = process_smatrix(&p, 4.0).unwrap();
        assert!(max_diff(s.entries(), t.entries()) > 1e-3);
    }

    #[test]
    fn absorbed_is_minus_identity() {
        let p = ProcessParams::absorbed(3, 1.0).unwrap();
        let s = process_smatrix(&p, 0.7).unwrap();
        assert_eq!(s.entries(), &-DMatrix::<f64>::identity(3, 3));
        let ab = boundary_matrices(&p, 1.0).unwrap();
        let t = onshell(&ab, -1.4).unwrap();
        assert_eq!(t.entries(), s.entries());
    }

    #[test]
    fn rank_deficiency_rejected() {
        let a = mat(&[&[1.0, 0.0], &[2.0, 0.0]]);
        let b = mat(&[&[0.0, 1.0], &[0.0, 2.0]]);
        assert!(BoundaryMatrices::new(a, b).is_err());
        assert!(BoundaryMatrices::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn pole_reported() {
        // A + √(-E) B = 0 at E = -1
        let ab = BoundaryMatrices::new(mat(&[&[1.0]]), mat(&[&[-1.0]])).unwrap();
        assert!(matches!(onshell(&ab, -1.0), Err(Error::Pole { .. })));
        assert!(onshell(&ab, -4.0).is_ok());
    }

    #[test]
    fn sticky_spectral_values() {
        let sp = sticky_spectral(2.0, 3, 1.0).unwrap();
        assert_eq!(sp.energy, -1.0);
        assert!((sp.time_delay - (-4.0 / 8.0)).abs() < 1e-15);
        let far = sticky_spectral(1.0, 2, 1e6).unwrap();
        assert!(far.time_delay.abs() < 1e-11);
        let near = sticky_spectral(1.0, 2, 1e-6).unwrap();
        assert!(near.time_delay < -1e5);
        assert!(sticky_spectral(0.0, 2, 1.0).is_err());
    }

    #[test]
    fn bound_state_solves_eigen_equation() {
        let sp = sticky_spectral(0.8, 4, 1.0).unwrap();
        let h = 1e-3;
        for x in [0.1, 0.5, 1.2] {
            let d2 = (sp.psi(x + h) - 2.0 * sp.psi(x) + sp.psi(x - h)) / (h * h);
            assert!((-d2 - sp.energy * sp.psi(x)).abs() < 1e-5 * sp.psi(x).abs().max(1.0));
        }
        // the pole of φ(k) sits at k = iκ, i.e. E = -κ²
        assert!((-sp.kappa() * sp.kappa() - sp.energy).abs() < 1e-15);
    }

    #[test]
    fn time_delay_rank_one() {
        let (gamma, n, k) = (0.7, 3, 1.3);
        let w = vec![1.0 / n as f64; n];
        let t = sticky_time_delay_fd(gamma, &w, k, 1e-4).unwrap();
        let sp = sticky_spectral(gamma, n, k).unwrap();
        let trace: Complex64 = (0..n).map(|i| t[(i, i)]).sum();
        assert!((trace.re - sp.time_delay).abs() < 1e-7);
        assert!(trace.im.abs() < 1e-7);
        // T = τ P_n
        for i in 0..n {
            for j in 0..n {
                assert!((t[(i, j)] - Complex64::new(sp.time_delay / n as f64, 0.0)).norm() < 1e-7);
            }
        }
    }

    fn weights() -> impl Strategy<Value = Vec<f64>> {
        (1usize..=6).prop_flat_map(|n| proptest::collection::vec(0.001f64..1.0, n)).prop_map(|raw| {
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
    }

    proptest! {
        #[test]
        fn walsh_involution_and_determinant(w in weights()) {
            let n = w.len();
            let s = process_smatrix(&ProcessParams::walsh(w).unwrap(), 1.0).unwrap();
            prop_assert!(s.involution_residual() < 1e-12);
            let expect = if n % 2 == 1 { 1.0 } else { -1.0 };
            prop_assert!((s.determinant() - expect).abs() < 1e-10);
        }

        #[test]
        fn sticky_family_commutes(w in weights(), gamma in 0.01f64..5.0, l1 in 0.01f64..10.0, l2 in 0.01f64..10.0) {
            let p = ProcessParams::new(w, 0.0, gamma).unwrap();
            let a = process_smatrix(&p, l1).unwrap();
            let b = process_smatrix(&p, l2).unwrap();
            let ab = a.entries() * b.entries();
            let ba = b.entries() * a.entries();
            prop_assert!((ab - ba).amax() < 1e-12);
        }

        #[test]
        fn walsh_elastic_round_trip(w in weights(), beta in 0.0f64..5.0, l0 in 0.05f64..5.0, l in 0.05f64..20.0) {
            let p = ProcessParams::new(w, beta, 0.0).unwrap();
            let ab = boundary_matrices(&p, l0).unwrap();
            let s = onshell(&ab, -2.0 * l).unwrap();
            let t = process_smatrix(&p, l).unwrap();
            prop_assert!((s.entries() - t.entries()).amax() < 1e-10);
        }

        #[test]
        fn sticky_general_round_trip_at_lambda0(w in weights(), beta in 0.0f64..3.0, gamma in 0.05f64..3.0, l0 in 0.05f64..10.0) {
            let p = ProcessParams::new(w, beta, gamma).unwrap();
            let ab = boundary_matrices(&p, l0).unwrap();
            let s = onshell(&ab, -2.0 * l0).unwrap();
            let t = process_smatrix(&p, l0).unwrap();
            prop_assert!((s.entries() - t.entries()).amax() < 1e-10);
        }

        #[test]
        fn equal_weights_projection(n in 1usize..=6) {
            let p = ProcessParams::uniform(n, 0.0, 0.0).unwrap();
            let s = process_smatrix(&p, 1.0).unwrap();
            let id = DMatrix::<f64>::identity(n, n);
            let pn = (s.entries() + &id) / 2.0;
            prop_assert!((&pn * &pn - &pn).amax() < 1e-14);
            prop_assert!((&pn - pn.transpose()).amax() == 0.0);
            prop_assert!(pn.iter().all(|v| (v - 1.0 / n as f64).abs() < 1e-15));
        }
    }
}

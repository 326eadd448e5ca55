//! Gaussian, first-passage and reflected heat-kernel building blocks.
//!
//! Every erfc-bearing function is evaluated through `erfcx(z) = e^{z²} erfc(z)`,
//! using `(x/√(2t) + β√(t/2))² = x²/2t + βx + β²t/2` (and its γ analogue) so that
//! no intermediate exponential overflows.

use std::f64::consts::PI;

use errorfunctions::RealErrorFunctions;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::quad::integrate;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Past this many standard deviations the Gaussian tail is below 1e-300.
const U_SPAN: f64 = 40.0;

/// Numerical settings for quadrature-backed kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecialFnConfig {
    pub quad_abs_tol: f64,
    pub quad_max_subdiv: usize,
}

impl Default for SpecialFnConfig {
    fn default() -> Self {
        Self { quad_abs_tol: 1e-10, quad_max_subdiv: 2000 }
    }
}

impl SpecialFnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_abs_tol > 0.0 && self.quad_abs_tol.is_finite()) {
            return Err(validation(format!(
                "quad_abs_tol > 0 violated (got {})",
                self.quad_abs_tol
            )));
        }
        if self.quad_max_subdiv == 0 {
            return Err(validation("quad_max_subdiv >= 1 violated"));
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be finite and > 0, got {t}")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// `erfc(x)` for real `x`.
pub fn erfc(x: f64) -> f64 {
    RealErrorFunctions::erfc(x)
}

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    RealErrorFunctions::erfcx(x)
}

/// Gaussian kernel `g(t, x) = e^{-x²/2t} / √(2πt)`.
pub fn gauss(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    if !x.is_finite() {
        return Err(domain(format!("x must be finite, got {x}")));
    }
    Ok(gauss_unchecked(t, x))
}

#[inline]
pub(crate) fn gauss_unchecked(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Density of the first time a Brownian motion started at distance `d` hits the vertex.
/// For `d = 0` the law is a point mass at `t = 0` and the density is 0.
pub fn hitting_density(t: f64, d: f64) -> Result<f64> {
    check_time(t)?;
    check_nonneg("d", d)?;
    Ok(hitting_unchecked(t, d))
}

#[inline]
pub(crate) fn hitting_unchecked(t: f64, d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    d / (2.0 * PI * t * t * t).sqrt() * (-d * d / (2.0 * t)).exp()
}

/// `E_ξ[e^{-λ H_v}] = e^{-√(2λ) d}`.
pub fn e_lambda(lambda: f64, d: f64) -> Result<f64> {
    check_pos("lambda", lambda)?;
    check_nonneg("d", d)?;
    Ok((-(2.0 * lambda).sqrt() * d).exp())
}

/// `1/√π - z·erfcx(z)` for `z ≥ 0`, without cancellation for large `z`.
fn mills_gap(z: f64) -> f64 {
    if z >= 30.0 {
        // asymptotic: (1/√π) Σ_{k≥1} (-1)^{k+1} (2k-1)!! / (2^k z^{2k})
        let r = 1.0 / (2.0 * z * z);
        let mut term = r;
        let mut sum = 0.0;
        for k in 1..8 {
            sum += term;
            term *= -(2 * k + 1) as f64 * r;
        }
        FRAC_1_SQRT_PI * sum
    } else {
        FRAC_1_SQRT_PI - z * erfcx(z)
    }
}

/// Reflected kernel with killing rate `β`:
/// `g(t,x) - (β/2) e^{βx + β²t/2} erfc(x/√(2t) + β√(t/2))`.
pub fn g_beta0(t: f64, x: f64, beta: f64) -> Result<f64> {
    check_time(t)?;
    check_nonneg("x", x)?;
    check_nonneg("beta", beta)?;
    Ok(g_beta0_unchecked(t, x, beta))
}

pub(crate) fn g_beta0_unchecked(t: f64, x: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return gauss_unchecked(t, x);
    }
    let s = (2.0 * t).sqrt();
    let a = x / s;
    let z = a + beta * (0.5 * t).sqrt();
    // g - (β/2) erfcx(z) e^{-a²} with β/2 = (z - a)/√(2t), regrouped as a sum of
    // non-negative terms
    let val = (-a * a).exp() / s * (mills_gap(z) + a * erfcx(z));
    val.max(0.0)
}

/// Sticky kernel: `(1/γ) e^{2x/γ + 2t/γ²} erfc(x/√(2t) + √(2t)/γ)`.
pub fn g_0gamma(t: f64, x: f64, gamma: f64) -> Result<f64> {
    check_time(t)?;
    check_nonneg("x", x)?;
    check_pos("gamma", gamma)?;
    Ok(g_0gamma_unchecked(t, x, gamma))
}

pub(crate) fn g_0gamma_unchecked(t: f64, x: f64, gamma: f64) -> f64 {
    let s = (2.0 * t).sqrt();
    let a = x / s;
    let z = a + s / gamma;
    (-a * a).exp() * erfcx(z) / gamma
}

/// General kernel with killing `β` and stickiness `γ`, written as
/// `∫₀^{t/γ} e^{-βr} h(t - γr, x + r) dr` with `h` the hitting density.
/// Its Laplace transform in `t` is `e^{-√(2λ)x} / (β + √(2λ) + γλ)`.
pub fn g_betagamma(t: f64, x: f64, beta: f64, gamma: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    check_time(t)?;
    check_nonneg("x", x)?;
    check_nonneg("beta", beta)?;
    check_pos("gamma", gamma)?;
    cfg.validate()?;
    g_betagamma_unchecked(t, x, beta, gamma, cfg)
}

pub(crate) fn g_betagamma_unchecked(
    t: f64,
    x: f64,
    beta: f64,
    gamma: f64,
    cfg: &SpecialFnConfig,
) -> Result<f64> {
    // u = (x + r)/√τ with τ = t - γr maps r ∈ [0, t/γ) onto [x/√t, ∞) and turns
    // the integrand into a smooth Gaussian-weighted function of u.
    let c = t + gamma * x;
    let integrand = |u: f64| {
        let sq = 2.0 * c / ((gamma * gamma * u * u + 4.0 * c).sqrt() + gamma * u);
        let r = (u * sq - x).max(0.0);
        2.0 * u / (2.0 * sq + gamma * u) * FRAC_1_SQRT_2PI * (-0.5 * u * u - beta * r).exp()
    };
    let u0 = x / t.sqrt();
    match integrate(integrand, u0, u0 + U_SPAN, cfg.quad_abs_tol, cfg.quad_max_subdiv) {
        Ok(r) => Ok(r.value.max(0.0)),
        Err(Error::Quadrature { .. }) => {
            // direct form in r; the endpoint r = t/γ is integrable since h(τ, ·) → 0
            let direct = |r: f64| {
                let tau = t - gamma * r;
                if tau <= 0.0 {
                    0.0
                } else {
                    (-beta * r).exp() * hitting_unchecked(tau, x + r)
                }
            };
            let r = integrate(direct, 0.0, t / gamma, cfg.quad_abs_tol, cfg.quad_max_subdiv)
                .map_err(|e| match e {
                    Error::Quadrature { value, error_estimate, tolerance, .. } => {
                        Error::Quadrature {
                            context: format!("g_betagamma(t={t}, x={x}, beta={beta}, gamma={gamma})"),
                            value,
                            error_estimate,
                            tolerance,
                        }
                    }
                    other => other,
                })?;
            Ok(r.value.max(0.0))
        }
        Err(e) => Err(e),
    }
}

/// `∫₀ᵗ e^{-β(t-s)} h(s, d) ds`: probability of having hit the vertex by `t`
/// and not yet been killed by an Exponential(β) clock started at the hit.
/// Equals `erfc(d/√(2t))` at `β = 0` and `e^{-βt}` at `d = 0`.
pub fn absorbed_atom(t: f64, d: f64, beta: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    check_time(t)?;
    check_nonneg("d", d)?;
    check_nonneg("beta", beta)?;
    cfg.validate()?;
    absorbed_atom_unchecked(t, d, beta, cfg)
}

pub(crate) fn absorbed_atom_unchecked(t: f64, d: f64, beta: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    if d == 0.0 {
        return Ok((-beta * t).exp());
    }
    if beta == 0.0 {
        return Ok(erfc(d / (2.0 * t).sqrt()));
    }
    // u = d/√s: h(s,d) ds = √(2/π) e^{-u²/2} du, s = d²/u²
    let integrand = |u: f64| {
        let s = d * d / (u * u);
        2.0 * FRAC_1_SQRT_2PI * (-0.5 * u * u - beta * (t - s)).exp()
    };
    let u0 = d / t.sqrt();
    let r = integrate(integrand, u0, u0 + U_SPAN, cfg.quad_abs_tol, cfg.quad_max_subdiv)?;
    Ok(r.value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gauss_values() {
        assert!((gauss(1.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert_eq!(gauss(1.0, 1.0).unwrap(), gauss(1.0, -1.0).unwrap());
        assert!(rel(gauss(2.0, 1.0).unwrap(), 0.219_695_644_733_861_2) < 1e-14);
        assert!(rel(gauss(0.3, -0.7).unwrap(), 0.321_866_377_037_830_09) < 1e-14);
        assert!(gauss(0.0, 1.0).is_err());
        assert!(gauss(-1.0, 1.0).is_err());
    }

    #[test]
    fn hitting_values() {
        assert!(rel(hitting_density(1.0, 1.0).unwrap(), 0.241_970_724_519_143_35) < 1e-14);
        assert!(rel(hitting_density(0.25, 0.4).unwrap(), 0.927_012_968_836_744_76) < 1e-14);
        for t in [1e-3, 0.5, 7.0] {
            assert_eq!(hitting_density(t, 0.0).unwrap(), 0.0);
        }
        assert!(hitting_density(1.0, -0.1).is_err());
    }

    #[test]
    fn hitting_laplace_transform() {
        // t = s² removes the t^{-3/2} behaviour at 0
        let r = integrate(
            |s: f64| 2.0 * s * (-s * s).exp() * hitting_unchecked(s * s, 1.0),
            0.0,
            12.0,
            1e-13,
            500,
        )
        .unwrap();
        assert!(rel(r.value, 0.243_116_734_434_214_21) < 1e-10);
        assert!(rel(r.value, (-(2f64).sqrt()).exp()) < 1e-10);
    }

    #[test]
    fn e_lambda_values() {
        assert_eq!(e_lambda(3.0, 0.0).unwrap(), 1.0);
        assert!((e_lambda(0.5, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-16);
        assert!((e_lambda(2.0, 2.0).unwrap() - (-4f64).exp()).abs() < 1e-16);
        assert!(e_lambda(0.0, 1.0).is_err());
    }

    #[test]
    fn g_beta0_values() {
        for (t, x) in [(0.1, 0.0), (1.0, 0.7), (3.0, 2.0)] {
            assert_eq!(g_beta0(t, x, 0.0).unwrap(), gauss(t, x).unwrap());
        }
        let exact = FRAC_1_SQRT_2PI - 0.5 * 0.5f64.exp() * erfc(1.0 / 2f64.sqrt());
        assert!(rel(g_beta0(1.0, 0.0, 1.0).unwrap(), exact) < 1e-13);
        assert!(rel(g_beta0(1.0, 0.0, 1.0).unwrap(), 0.137_363_988_536_309_31) < 1e-13);
        assert!(rel(g_beta0(0.5, 0.3, 2.0).unwrap(), 0.188_769_666_348_065_36) < 1e-13);
        assert!(rel(g_beta0(2.0, 1.5, 0.7).unwrap(), 0.094_930_600_349_425_105) < 1e-13);
        assert!(rel(g_beta0(1e-3, 0.01, 100.0).unwrap(), 1.829_581_886_118_577_1) < 1e-12);
        assert!(rel(g_beta0(1.0, 0.0, 200.0).unwrap(), 9.972_809_086_745_802e-6) < 1e-12);
    }

    #[test]
    fn g_beta0_extreme_arguments() {
        // true value ≈ 4.5e-544 is below the f64 range
        let v = g_beta0(1.0, 50.0, 10.0).unwrap();
        assert!(v.is_finite() && v >= 0.0);
        // naive form computes e^{1350}·erfc(42.4); true value is representable
        let v = g_beta0(1.0, 30.0, 30.0).unwrap();
        assert!(v > 0.0);
        assert!(rel(v, 7.370_275_701_890_978_7e-197) < 1e-12);
    }

    #[test]
    fn g_0gamma_values() {
        let exact = 2f64.exp() * erfc(2f64.sqrt());
        assert!(rel(g_0gamma(1.0, 0.0, 1.0).unwrap(), exact) < 1e-13);
        assert!(rel(exact, 0.336_204_002_446_341_21) < 1e-13);
        assert!(rel(g_0gamma(0.5, 0.3, 0.6).unwrap(), 0.394_517_566_262_375_53) < 1e-13);
        assert!(rel(g_0gamma(2.0, 1.0, 3.0).unwrap(), 0.100_204_801_524_257_83) < 1e-13);
        assert!(rel(g_0gamma(1.0, 5.0, 0.01).unwrap(), 1.450_423_551_447_311_1e-6) < 1e-12);
        // γ ↓ 0 recovers the Gaussian
        assert!((g_0gamma(1.0, 0.0, 1e-6).unwrap() - gauss(1.0, 0.0).unwrap()).abs() < 1e-5);
        assert!(g_0gamma(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn g_betagamma_values() {
        let cfg = SpecialFnConfig::default();
        let v = g_betagamma(1.0, 0.5, 1.0, 1.0, &cfg).unwrap();
        assert!((v - 0.168_408_496_121_328_58).abs() < 1e-10);
        let v = g_betagamma(0.5, 0.0, 0.4, 0.6, &cfg).unwrap();
        assert!((v - 0.409_139_331_458_981_66).abs() < 1e-10);
        let v = g_betagamma(2.0, 1.0, 2.0, 0.3, &cfg).unwrap();
        assert!((v - 0.057_735_215_444_388_983).abs() < 1e-10);
    }

    #[test]
    fn g_betagamma_limits() {
        let cfg = SpecialFnConfig::default();
        for (t, x) in [(1.0, 0.0), (0.5, 0.8), (2.0, 0.1)] {
            let a = g_betagamma(t, x, 1e-8, 0.7, &cfg).unwrap();
            let b = g_0gamma(t, x, 0.7).unwrap();
            assert!((a - b).abs() < 1e-6, "beta limit at ({t},{x}): {a} vs {b}");
            let a = g_betagamma(t, x, 1.3, 1e-6, &cfg).unwrap();
            let b = g_beta0(t, x, 1.3).unwrap();
            assert!((a - b).abs() < 1e-5, "gamma limit at ({t},{x}): {a} vs {b}");
        }
    }

    #[test]
    fn absorbed_atom_values() {
        let cfg = SpecialFnConfig::default();
        assert!(rel(absorbed_atom(1.0, 1.0, 0.0, &cfg).unwrap(), 0.317_310_507_862_914_1) < 1e-13);
        assert!((absorbed_atom(1.0, 1.0, 2.0, &cfg).unwrap() - 0.137_918_572_327_347_5).abs() < 1e-10);
        assert!((absorbed_atom(0.5, 0.3, 3.0, &cfg).unwrap() - 0.245_903_685_050_150_91).abs() < 1e-10);
        assert!((absorbed_atom(2.0, 0.0, 0.5, &cfg).unwrap() - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn mills_gap_branches_agree() {
        for z in [29.0, 29.9, 30.0, 31.0] {
            let direct = FRAC_1_SQRT_PI - z * erfcx(z);
            assert!(rel(mills_gap(z), direct) < 1e-9, "z = {z}");
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SpecialFnConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.quad_abs_tol = 0.0;
        assert!(cfg.validate().is_err());
    }
}

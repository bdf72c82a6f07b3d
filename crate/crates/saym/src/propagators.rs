//! Momentum-space gauge and ghost propagators dressed by the truncated form
//! factor, verification that they invert the quadratic kernel, and the
//! measured large-momentum scaling exponent.
//!
//! The gauge propagator is
//!
//! ```text
//! D_{mu nu}^{ab}(p) = [g_{mu nu} - (1 - xi) p_mu p_nu / (p^2 + i eta)]
//!                     delta^{ab} / ((p^2 + i eta) phi(p^2))
//! ```
//!
//! and the ghost propagator is the scalar prefactor alone.  The color factor
//! delta^{ab} is carried as a separate symbolic marker so it can never mix
//! into the Lorentz tensor.  The default working signature is euclidean
//! (eta = 0, p != 0 required); the lorentzian +i eta mode exists for formula
//! fidelity.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::cutoff::FormFactor;

#[derive(Debug, Error)]
pub enum PropError {
    #[error("on-shell pole: p^2 = 0 in euclidean mode")]
    Pole,
    #[error("form factor vanishes at p^2 = {0}")]
    FormFactorZero(f64),
    #[error("degenerate quadratic form: {0}")]
    Degenerate(String),
    #[error("{0} requires euclidean signature")]
    EuclideanRequired(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signature {
    Euclidean,
    /// Mostly-minus metric diag(1, -1, -1, -1) with pole prescription
    /// p^2 + i eta, eta > 0.
    Lorentzian { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum {
    pub components: [f64; 4],
    pub signature: Signature,
}

impl Momentum {
    pub fn euclidean(components: [f64; 4]) -> Self {
        Momentum { components, signature: Signature::Euclidean }
    }

    pub fn lorentzian(components: [f64; 4], eta: f64) -> Self {
        assert!(eta > 0.0, "lorentzian mode needs eta > 0");
        Momentum { components, signature: Signature::Lorentzian { eta } }
    }

    /// Euclidean length of the component vector (used for scaling sweeps).
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn metric(&self) -> [f64; 4] {
        match self.signature {
            Signature::Euclidean => [1.0; 4],
            Signature::Lorentzian { .. } => [1.0, -1.0, -1.0, -1.0],
        }
    }

    /// Covariant components p_mu = g_{mu nu} p^nu.
    fn lower(&self) -> [f64; 4] {
        let g = self.metric();
        std::array::from_fn(|i| g[i] * self.components[i])
    }

    /// p^2 with the signature's pole prescription folded in.
    pub fn p_squared(&self) -> Complex64 {
        let g = self.metric();
        let re: f64 = self
            .components
            .iter()
            .zip(g)
            .map(|(x, gi)| gi * x * x)
            .sum();
        match self.signature {
            Signature::Euclidean => Complex64::new(re, 0.0),
            Signature::Lorentzian { eta } => Complex64::new(re, eta),
        }
    }

    fn is_euclidean(&self) -> bool {
        matches!(self.signature, Signature::Euclidean)
    }
}

/// Kronecker delta in the color indices, carried symbolically alongside the
/// Lorentz tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColorDelta;

impl fmt::Display for ColorDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "delta^{{ab}}")
    }
}

/// A propagator value: 4x4 complex Lorentz tensor times the symbolic color
/// delta.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorValue {
    pub tensor: [[Complex64; 4]; 4],
    pub color: ColorDelta,
}

impl PropagatorValue {
    /// Largest entry magnitude of the Lorentz tensor.
    pub fn max_abs(&self) -> f64 {
        self.tensor
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn checked_phi(phi: &FormFactor, psq: Complex64) -> Result<Complex64, PropError> {
    let value = phi.eval_complex(psq);
    if value.norm() < 1e-250 {
        return Err(PropError::FormFactorZero(psq.re));
    }
    Ok(value)
}

fn checked_psq(p: &Momentum) -> Result<Complex64, PropError> {
    let psq = p.p_squared();
    if p.is_euclidean() && psq.re == 0.0 {
        return Err(PropError::Pole);
    }
    Ok(psq)
}

/// The dressed gauge propagator at momentum `p` and gauge parameter `xi`.
pub fn gauge_propagator(
    p: &Momentum,
    xi: f64,
    phi: &FormFactor,
) -> Result<PropagatorValue, PropError> {
    let psq = checked_psq(p)?;
    let phi_val = checked_phi(phi, psq)?;
    let denom = psq * phi_val;
    let g = p.metric();
    let pl = p.lower();
    let mut tensor = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (mu, row) in tensor.iter_mut().enumerate() {
        for (nu, entry) in row.iter_mut().enumerate() {
            let metric_part = if mu == nu {
                Complex64::new(g[mu], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let long_part = (1.0 - xi) * pl[mu] * pl[nu] / psq;
            *entry = (metric_part - long_part) / denom;
        }
    }
    Ok(PropagatorValue { tensor, color: ColorDelta })
}

/// The dressed ghost propagator (scalar times the symbolic color delta).
pub fn ghost_propagator(p: &Momentum, phi: &FormFactor) -> Result<Complex64, PropError> {
    let psq = checked_psq(p)?;
    let phi_val = checked_phi(phi, psq)?;
    Ok(Complex64::new(1.0, 0.0) / (psq * phi_val))
}

/// Builds the momentum-space kernel of the quadratic action,
/// K_{mu nu}(p) = phi(p^2) [p^2 g_{mu nu} - p_mu p_nu] + xi^{-1} phi(p^2)
/// p_mu p_nu, multiplies it against the propagator, and returns the largest
/// deviation from the identity.
///
/// Euclidean mode only; the gauge parameter must be positive and finite
/// (xi^{-1} = 0 leaves the kernel with a singular longitudinal sector).
pub fn inversion_check(p: &Momentum, xi: f64, phi: &FormFactor) -> Result<f64, PropError> {
    if !p.is_euclidean() {
        return Err(PropError::EuclideanRequired("inversion check"));
    }
    if !xi.is_finite() || xi <= 0.0 {
        return Err(PropError::Degenerate(format!(
            "gauge parameter must be positive and finite, got xi = {xi}"
        )));
    }
    let psq = checked_psq(p)?.re;
    let phi_val = phi.eval(psq);
    if phi_val.abs() < 1e-250 {
        return Err(PropError::FormFactorZero(psq));
    }
    let pv = p.components;
    let mut kernel = [[0.0f64; 4]; 4];
    for (mu, row) in kernel.iter_mut().enumerate() {
        for (nu, entry) in row.iter_mut().enumerate() {
            let diag = if mu == nu { psq } else { 0.0 };
            *entry = phi_val * (diag - pv[mu] * pv[nu]) + phi_val / xi * pv[mu] * pv[nu];
        }
    }
    let prop = gauge_propagator(p, xi, phi)?;
    let mut residual = 0.0f64;
    for mu in 0..4 {
        for nu in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (alpha, krow) in kernel.iter().enumerate().map(|(a, r)| (a, r[mu])) {
                acc += krow * prop.tensor[alpha][nu];
            }
            let target = if mu == nu { 1.0 } else { 0.0 };
            residual = residual.max((acc - target).norm());
        }
    }
    Ok(residual)
}

fn slope_of_log_log(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

const SWEEP_DIRECTION: [f64; 4] = [0.2, 0.4, 0.4, 0.8];

fn sweep_momentum(scale: f64) -> Momentum {
    Momentum::euclidean(std::array::from_fn(|i| SWEEP_DIRECTION[i] * scale))
}

/// Samples |p| log-spaced over the decade [10^2 Lambda, 10^3 Lambda] and
/// returns the least-squares slope of log ||D|| against log |p| for the
/// gauge propagator; the expected value is -(n - 2).
pub fn uv_scaling_exponent(phi: &FormFactor, xi: f64) -> f64 {
    let points: Vec<(f64, f64)> = scan(phi, xi, 100.0 * phi.lambda, 1000.0 * phi.lambda, 25)
        .into_iter()
        .map(|(p, d)| (p.ln(), d.ln()))
        .collect();
    slope_of_log_log(&points)
}

/// Same sweep for the scalar ghost propagator.
pub fn uv_scaling_exponent_ghost(phi: &FormFactor) -> f64 {
    let lambda = phi.lambda;
    let count = 25;
    let ratio = (1000.0f64 / 100.0).ln();
    let points: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let scale = 100.0 * lambda * (ratio * i as f64 / (count - 1) as f64).exp();
            let p = sweep_momentum(scale);
            let d = ghost_propagator(&p, phi).expect("sweep momenta are off-shell").norm();
            (scale.ln(), d.ln())
        })
        .collect();
    slope_of_log_log(&points)
}

/// Magnitude sweep for scaling plots: returns (|p|, max |D entry|) pairs at
/// `count` log-spaced magnitudes in [pmin, pmax].
pub fn scan(phi: &FormFactor, xi: f64, pmin: f64, pmax: f64, count: usize) -> Vec<(f64, f64)> {
    assert!(count >= 2 && pmax > pmin && pmin > 0.0);
    let ratio = (pmax / pmin).ln();
    (0..count)
        .map(|i| {
            let scale = pmin * (ratio * i as f64 / (count - 1) as f64).exp();
            let p = sweep_momentum(scale);
            let d = gauge_propagator(&p, xi, phi).expect("sweep momenta are off-shell");
            (scale, d.max_abs())
        })
        .collect()
}

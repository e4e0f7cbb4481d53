//! Closed-form capacity and secrecy-capacity evaluation, plus the classical
//! null-space artificial-noise baseline.
//!
//! With injected noise power `sigma_k2` and signal power `sigma_u2`, the
//! legitimate receiver sees capacity `log2(1 + g_h*u / (g_h*k + sigma_n2))`;
//! a receiver that cancels the injected noise through the shared codebook
//! sees `log2(1 + g_h*u / sigma_n2)` instead. The eavesdropper cannot cancel
//! and always sees `log2(1 + g_g*u / (g_g*k + sigma_e2))`. Secrecy capacity
//! is the difference, reported both raw and clamped at zero.

use num_complex::Complex64;

use crate::channel::{effective_gain, ChannelRealization, ComplexMatrix, Precoder};
use crate::error::{Error, PowerConstraint, Result};
use crate::linalg;
use crate::rng::RngStream;

/// Feasibility slack on the total power constraint; absorbs the rounding of
/// solver iterates sitting exactly on the budget face.
pub const POWER_SLACK: f64 = 1e-9;

/// Transmit power split between the information signal and the injected
/// noise, under a total budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation {
    pub sigma_u2: f64,
    pub sigma_k2: f64,
    pub p_budget: f64,
}

impl PowerAllocation {
    pub fn new(sigma_u2: f64, sigma_k2: f64, p_budget: f64) -> Result<Self> {
        let alloc = PowerAllocation {
            sigma_u2,
            sigma_k2,
            p_budget,
        };
        alloc.validate()?;
        Ok(alloc)
    }

    /// Checks the three feasibility constraints, reporting which one failed.
    pub fn validate(&self) -> Result<()> {
        let violation = |constraint| Error::ConstraintViolation {
            constraint,
            sigma_u2: self.sigma_u2,
            sigma_k2: self.sigma_k2,
            p_budget: self.p_budget,
        };
        if !(self.sigma_u2 >= 0.0 && self.sigma_u2.is_finite()) {
            return Err(violation(PowerConstraint::SignalNonNegative));
        }
        if !(self.sigma_k2 >= 0.0 && self.sigma_k2.is_finite()) {
            return Err(violation(PowerConstraint::NoranNonNegative));
        }
        if !(self.p_budget >= 0.0 && self.p_budget.is_finite())
            || self.sigma_u2 + self.sigma_k2 > self.p_budget + POWER_SLACK
        {
            return Err(violation(PowerConstraint::Budget));
        }
        Ok(())
    }
}

/// Capacities of both links and their difference for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyReport {
    /// Legitimate-link capacity, bits per channel use.
    pub c_bob: f64,
    /// Eavesdropper-link capacity, bits per channel use.
    pub c_eve: f64,
    /// `c_bob - c_eve`; may be negative.
    pub c_secrecy_raw: f64,
    /// `max(c_secrecy_raw, 0)`.
    pub c_secrecy: f64,
    /// Whether codebook cancellation was assumed at the legitimate receiver.
    pub cancellation: bool,
}

/// Legitimate-link capacity. Without cancellation the injected noise adds to
/// the receiver noise floor; with cancellation it is removed entirely.
pub fn capacity_bob(gain_h: f64, alloc: &PowerAllocation, sigma_n2: f64, cancellation: bool) -> Result<f64> {
    if !(sigma_n2 > 0.0 && sigma_n2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "receiver noise power must be positive, got {sigma_n2}"
        )));
    }
    if !(gain_h >= 0.0 && gain_h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "channel gain must be finite and nonnegative, got {gain_h}"
        )));
    }
    let denom = if cancellation {
        sigma_n2
    } else {
        gain_h * alloc.sigma_k2 + sigma_n2
    };
    Ok((1.0 + gain_h * alloc.sigma_u2 / denom).log2())
}

/// Eavesdropper-link capacity; unaffected by legitimate-side cancellation.
pub fn capacity_eve(gain_g: f64, alloc: &PowerAllocation, sigma_e2: f64) -> Result<f64> {
    if !(sigma_e2 > 0.0 && sigma_e2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eavesdropper noise power must be positive, got {sigma_e2}"
        )));
    }
    if !(gain_g >= 0.0 && gain_g.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "channel gain must be finite and nonnegative, got {gain_g}"
        )));
    }
    Ok((1.0 + gain_g * alloc.sigma_u2 / (gain_g * alloc.sigma_k2 + sigma_e2)).log2())
}

/// Secrecy report from precomputed effective gains.
pub fn secrecy_from_gains(
    gain_h: f64,
    gain_g: f64,
    alloc: &PowerAllocation,
    sigma_n2: f64,
    sigma_e2: f64,
    cancellation: bool,
) -> Result<SecrecyReport> {
    let c_bob = capacity_bob(gain_h, alloc, sigma_n2, cancellation)?;
    let c_eve = capacity_eve(gain_g, alloc, sigma_e2)?;
    let raw = c_bob - c_eve;
    Ok(SecrecyReport {
        c_bob,
        c_eve,
        c_secrecy_raw: raw,
        c_secrecy: raw.max(0.0),
        cancellation,
    })
}

/// Secrecy report for one channel realization and precoder.
pub fn secrecy_capacity(
    ch: &ChannelRealization,
    p: &Precoder,
    alloc: &PowerAllocation,
    cancellation: bool,
) -> Result<SecrecyReport> {
    alloc.validate()?;
    let gain_h = effective_gain(&ch.h, p)?;
    let gain_g = effective_gain(&ch.g, p)?;
    secrecy_from_gains(gain_h, gain_g, alloc, ch.sigma_n2, ch.sigma_e2, cancellation)
}

/// Whether classical null-space artificial noise is feasible at these antenna
/// counts: a generic full-rank fading matrix has a nontrivial null space iff
/// there are more transmit than receive antennas.
pub fn an_feasible(n_tx: usize, n_rx: usize) -> bool {
    n_tx > n_rx
}

/// Tolerance on singular-value proxies when deciding the rank of a measured
/// channel matrix.
pub const RANK_TOL: f64 = 1e-10;

/// Draws a unit-norm vector uniformly from the null space of `h`, so the
/// legitimate receiver is untouched by noise sent along it. Errors when the
/// dimensions admit no null space.
pub fn null_space_an(h: &ComplexMatrix, rng: &mut RngStream) -> Result<Vec<Complex64>> {
    if !an_feasible(h.cols(), h.rows()) {
        return Err(Error::NoNullSpace {
            n_rx: h.rows(),
            n_tx: h.cols(),
        });
    }
    let basis = linalg::null_space_basis(h, RANK_TOL);
    if basis.is_empty() {
        return Err(Error::NoNullSpace {
            n_rx: h.rows(),
            n_tx: h.cols(),
        });
    }
    // Gaussian coefficients over an orthonormal basis give a uniform
    // direction within the null space.
    let coeffs: Vec<Complex64> = (0..basis.len()).map(|_| rng.next_cn01()).collect();
    let n_tx = h.cols();
    let mut w = vec![Complex64::new(0.0, 0.0); n_tx];
    for (c, b) in coeffs.iter().zip(basis.iter()) {
        for (wi, bi) in w.iter_mut().zip(b.iter()) {
            *wi += c * bi;
        }
    }
    let norm = linalg::vec_norm(&w);
    if norm <= 1e-100 {
        return Err(Error::NumericalFailure(
            "null-space combination degenerated to zero".into(),
        ));
    }
    for wi in &mut w {
        *wi /= norm;
    }
    Ok(w)
}

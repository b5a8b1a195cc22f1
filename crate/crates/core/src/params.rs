//! System parameterization shared by every other module.
//!
//! The model is a line of identical cells. In each cell one mobile terminal
//! (MT) transmits with power `P`; a dedicated full-duplex relay (RT) scales
//! what it hears by a gain `g` and retransmits it `lambda` symbols later; the
//! base station (BS) listens to its own relay and the two adjacent ones. The
//! five amplitude gains describe the hops:
//!
//! ```text
//!   beta   MT  -> local RT          alpha  MT  -> adjacent RT
//!   gamma  RT  -> local BS          eta    RT  -> adjacent BS
//!   mu     RT  -> adjacent RT   (the inter-relay coupling)
//! ```
//!
//! All gains are amplitudes, not powers: the power gain of the `beta` hop is
//! `beta^2`. Noise enters twice, at the relay input (variance `var_z`) and at
//! the BS input (variance `var_w`).
//!
//! Because each relay hears its neighbours' previous transmissions through
//! `mu`, the relays form a feedback loop. The loop is stable — finite relay
//! output power — exactly when `2 * mu * g < 1`, and every gain-dependent
//! operation in this crate enforces that bound through
//! [`SystemParams::check_stable_gain`].

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// SystemParams
// ---------------------------------------------------------------------------

/// Complete description of the cellular array.
///
/// Construct with [`SystemParams::new`] to get validation, or fill the public
/// fields directly when a test deliberately needs a degenerate corner (zero
/// power, say) that `new` rejects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// MT -> adjacent-RT amplitude gain.
    pub alpha: f64,
    /// MT -> local-RT amplitude gain.
    pub beta: f64,
    /// RT -> local-BS amplitude gain.
    pub gamma: f64,
    /// RT -> adjacent-BS amplitude gain.
    pub eta: f64,
    /// RT -> adjacent-RT amplitude gain (inter-relay coupling).
    pub mu: f64,
    /// MT transmit power `P` (linear units).
    pub power_mt: f64,
    /// RT average output-power budget `Q` (linear units).
    pub power_rt: f64,
    /// Relay-stage noise variance.
    pub var_z: f64,
    /// BS-stage noise variance.
    pub var_w: f64,
    /// Relay processing delay in symbols, at least 1.
    pub lambda: u32,
}

impl SystemParams {
    /// Builds and validates a parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: f64,
        eta: f64,
        mu: f64,
        power_mt: f64,
        power_rt: f64,
        var_z: f64,
        var_w: f64,
        lambda: u32,
    ) -> Result<Self> {
        Self {
            alpha,
            beta,
            gamma,
            eta,
            mu,
            power_mt,
            power_rt,
            var_z,
            var_w,
            lambda,
        }
        .validate()
    }

    /// Checks every field invariant and returns the value unchanged on
    /// success. Idempotent: a validated value validates again.
    pub fn validate(self) -> Result<Self> {
        let gains = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("mu", self.mu),
        ];
        for (field, value) in gains {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeGain { field, value });
            }
        }
        let powers = [
            ("power_mt", self.power_mt),
            ("power_rt", self.power_rt),
            ("var_z", self.var_z),
            ("var_w", self.var_w),
        ];
        for (field, value) in powers {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositivePower { field, value });
            }
        }
        if self.lambda == 0 {
            return Err(Error::ZeroDelay { value: 0 });
        }
        Ok(self)
    }

    /// Supremum of the stable relay-gain interval: `1 / (2 * mu)`, or
    /// `+inf` when `mu == 0` (no feedback, every gain is stable).
    pub fn max_stable_gain(&self) -> f64 {
        if self.mu > 0.0 {
            1.0 / (2.0 * self.mu)
        } else {
            f64::INFINITY
        }
    }

    /// Errors unless `g` is a nonnegative gain with `2 * mu * g < 1`
    /// (strictly — the marginal point already has divergent power).
    pub fn check_stable_gain(&self, g: f64) -> Result<()> {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::NegativeGain {
                field: "gain",
                value: g,
            });
        }
        let loop_gain = 2.0 * self.mu * g;
        if loop_gain >= 1.0 {
            return Err(Error::UnstableGain {
                mu: self.mu,
                gain: g,
                loop_gain,
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Gain solutions
// ---------------------------------------------------------------------------

/// Which condition pinned a solved relay gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// The relay power budget is met with equality: `sigma_r^2(g) = Q`.
    PowerConstraint,
    /// The gain ran into the stability bound `1 / (2 * mu)` before the
    /// power budget (only reachable for astronomically large budgets).
    StabilityBound,
    /// The gain is an interior maximizer of a rate objective, strictly
    /// below the full-power gain.
    Interior,
}

/// A relay gain together with the relay output power it achieves and the
/// condition that fixed it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSolution {
    /// The solved amplitude gain `g`.
    pub gain: f64,
    /// Relay output power `sigma_r^2(gain)`.
    pub achieved_power: f64,
    /// What determined the gain.
    pub binding: Binding,
}

// ---------------------------------------------------------------------------
// Unit helpers
// ---------------------------------------------------------------------------

/// Converts a dB quantity to linear scale: `10^(x_db / 10)`.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

// ---------------------------------------------------------------------------

//! Per-cell sum-rate under joint processing of all base stations.
//!
//! When every BS antenna feeds one joint decoder, the array is a 2D
//! Gaussian channel with signal PSD `P |H_S|^2` and noise PSD
//! `var_z |H_N|^2 + var_w`, and the per-cell sum-rate is the mean of
//! `log(1 + signal/noise)` over the frequency torus. The `phi`-average has
//! a closed form — with `c = cos(theta)` and
//!
//! ```text
//!   A(theta) = P g^2 (beta + 2 alpha c)^2 (gamma + 2 eta c)^2
//!   B(theta) = var_z g^2 (gamma + 2 eta c)^2 + var_w (1 + 4 g^2 mu^2 c^2)
//!   C(theta) = 4 var_w g mu c
//! ```
//!
//! the rate is the `theta`-mean of
//! `log[(A + B + sqrt((A+B)^2 - C^2)) / (B + sqrt(B^2 - C^2))]`.
//! `B` dominates `|C|` pointwise — their gap is
//! `var_z g^2 (gamma + 2 eta c)^2 + var_w (1 - 2 g mu |c|)^2 >= 0` — so both
//! radicands are nonnegative and the log argument is at least 1: the closed
//! form is finite and the rate nonnegative on the whole stable gain region.
//!
//! [`mcp_rate_integral_2d`] keeps the unreduced double integral as an
//! independent oracle, and two variants cover relays whose antennas are
//! shielded from each other (`mu = 0`, [`mcp_rate_da`]) and time-slotted
//! half-duplex operation ([`mcp_rate_half_duplex`]).

use crate::error::Result;
use crate::params::SystemParams;
use crate::quadrature::{integrate_periodic_1d, integrate_periodic_2d, QuadratureSettings};
use crate::relay_power::{solve_optimal_gain_mcp, DEFAULT_RESIDUAL_TOL};
use crate::spectra::{noise_psd, signal_psd, FreqPair};

// ---------------------------------------------------------------------------
// Result type
// ---------------------------------------------------------------------------

/// Which processing scheme a rate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Joint processing, full-duplex relays.
    Mcp,
    /// Joint processing with directional relay antennas (`mu` forced to 0).
    McpDa,
    /// Joint processing, time-slotted relays (half the symbols, twice the
    /// powers).
    McpHalfDuplex,
    /// Per-cell processing: other cells' signals are treated as noise.
    Scp,
}

/// How a rate value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// The production single-integral closed form.
    ClosedForm,
    /// The unreduced double-integral oracle.
    IntegralOracle,
    /// A Monte Carlo estimate from the ring simulator.
    Simulation,
}

/// A per-cell sum-rate in bits per channel use, tagged with the scheme and
/// the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    /// Rate in bits per channel use per cell.
    pub rate_bits: f64,
    pub scheme: Scheme,
    /// The relay gain the rate was evaluated at.
    pub gain_used: f64,
    pub method: Method,
}

impl RateResult {
    /// The same rate in nats.
    pub fn rate_nats(&self) -> f64 {
        self.rate_bits * std::f64::consts::LN_2
    }
}

// ---------------------------------------------------------------------------
// Closed form and oracle
// ---------------------------------------------------------------------------

/// Joint-processing rate at relay gain `g`, single-integral closed form.
pub fn mcp_rate_closed(p: &SystemParams, g: f64, quad: &QuadratureSettings) -> Result<RateResult> {
    p.check_stable_gain(g)?;
    let (raw, _) = integrate_periodic_1d(|theta| log_rate_integrand(p, g, theta), quad)?;
    Ok(RateResult {
        rate_bits: raw / std::f64::consts::TAU / std::f64::consts::LN_2,
        scheme: Scheme::Mcp,
        gain_used: g,
        method: Method::ClosedForm,
    })
}

/// The pointwise log term of the closed form (natural log).
fn log_rate_integrand(p: &SystemParams, g: f64, theta: f64) -> f64 {
    let c = theta.cos();
    let h1 = p.beta + 2.0 * p.alpha * c;
    let h2 = p.gamma + 2.0 * p.eta * c;
    let gmc = 2.0 * g * p.mu * c;
    let a = p.power_mt * g * g * h1 * h1 * h2 * h2;
    let b = p.var_z * g * g * h2 * h2 + p.var_w * (1.0 + gmc * gmc);
    let cc = 2.0 * p.var_w * gmc;
    let disc_noise = b * b - cc * cc;
    // Provable: b - |cc| = var_z g^2 h2^2 + var_w (1 - 2 g mu |c|)^2 >= 0.
    // A negative radicand beyond rounding dust means the expression above
    // was coded wrong, not a bad input.
    assert!(
        disc_noise >= -1e-12 * b * b,
        "noise quadratic lost positivity: B = {b}, C = {cc} at theta = {theta}"
    );
    let disc_total = (a + b) * (a + b) - cc * cc;
    let s_total = disc_total.max(0.0).sqrt();
    let s_noise = disc_noise.max(0.0).sqrt();
    // log((a + b + s_total) / (b + s_noise)) rearranged through ln_1p so a
    // vanishing signal term keeps full relative precision: the ratio minus
    // one is a / (b + s_noise) times a positive factor, assembled without
    // cancellation.
    let x = a * (1.0 + (a + 2.0 * b) / (s_total + s_noise)) / (b + s_noise);
    x.ln_1p()
}

/// Joint-processing rate as the unreduced mean of `log(1 + S_S/S_N)` over
/// the torus, evaluated with relay delay `lambda` (overriding `p.lambda`).
/// Independent of `lambda`; kept as the oracle for [`mcp_rate_closed`].
pub fn mcp_rate_integral_2d(
    p: &SystemParams,
    g: f64,
    lambda: u32,
    quad: &QuadratureSettings,
) -> Result<RateResult> {
    p.check_stable_gain(g)?;
    let mut pl = *p;
    pl.lambda = lambda.max(1);
    let (raw, _) = integrate_periodic_2d(
        |theta, phi| {
            let f = FreqPair { theta, phi };
            let s = signal_psd(&pl, g, f).expect("stability was checked before integrating");
            let n = noise_psd(&pl, g, f).expect("stability was checked before integrating");
            (1.0 + s / n).ln()
        },
        quad,
    )?;
    let tau = std::f64::consts::TAU;
    Ok(RateResult {
        rate_bits: raw / (tau * tau) / std::f64::consts::LN_2,
        scheme: Scheme::Mcp,
        gain_used: g,
        method: Method::IntegralOracle,
    })
}

// ---------------------------------------------------------------------------
// Variants
// ---------------------------------------------------------------------------

/// Rate with directional relay antennas: the inter-relay path is shielded,
/// so `mu` is forced to 0 whatever `p.mu` says.
pub fn mcp_rate_da(p: &SystemParams, g: f64, quad: &QuadratureSettings) -> Result<RateResult> {
    let mut pda = *p;
    pda.mu = 0.0;
    let r = mcp_rate_closed(&pda, g, quad)?;
    Ok(RateResult {
        scheme: Scheme::McpDa,
        ..r
    })
}

/// Rate with half-duplex relays: MTs and relays transmit in alternate
/// symbol slots, each with doubled power (`2P`, `2Q`), and only half the
/// symbols carry payload. Equals half the directional-antenna rate at the
/// doubled powers and the matching full-power gain.
pub fn mcp_rate_half_duplex(p: &SystemParams, quad: &QuadratureSettings) -> Result<RateResult> {
    let mut doubled = p.validate()?;
    doubled.power_mt *= 2.0;
    doubled.power_rt *= 2.0;
    doubled.mu = 0.0;
    let gain = solve_optimal_gain_mcp(&doubled, DEFAULT_RESIDUAL_TOL)?.gain;
    let full = mcp_rate_da(&doubled, gain, quad)?;
    Ok(RateResult {
        rate_bits: 0.5 * full.rate_bits,
        scheme: Scheme::McpHalfDuplex,
        gain_used: gain,
        method: Method::ClosedForm,
    })
}

/// Joint-processing rate at the full-power gain. Spending the whole relay
/// budget is optimal under joint processing: the rate increases with `g`
/// on the stable interval.
pub fn mcp_rate_optimal(p: &SystemParams, quad: &QuadratureSettings) -> Result<RateResult> {
    let sol = solve_optimal_gain_mcp(p, DEFAULT_RESIDUAL_TOL)?;
    mcp_rate_closed(p, sol.gain, quad)
}

// ---------------------------------------------------------------------------

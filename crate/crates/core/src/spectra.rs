//! Transfer functions and power spectral densities of the 2D relay channel.
//!
//! Over (cell index, symbol time) the array is linear and shift-invariant,
//! so it is characterized on the 2D torus of (spatial frequency `theta`,
//! temporal frequency `phi`) by four elementary transfer functions:
//!
//! ```text
//!   H1(theta) = beta  + 2 alpha cos(theta)    MTs   -> relay inputs
//!   H2(theta) = gamma + 2 eta   cos(theta)    relays -> BS antennas
//!   H3(theta) = 2 mu cos(theta)               relays -> neighbour relays
//!   Hr(phi)   = g exp(-j lambda phi)          the relay itself: scale, delay
//! ```
//!
//! Closing the inter-relay feedback loop (`Hr H3` around the relay stage)
//! gives the composite responses from the MT signal and from the relay-stage
//! noise to a BS antenna:
//!
//! ```text
//!   H_S = H1 Hr H2 / (1 - Hr H3)        H_N = Hr H2 / (1 - Hr H3)
//! ```
//!
//! from which the output PSDs follow: signal `P |H_S|^2` and noise
//! `var_z |H_N|^2 + var_w`. The loop is stable iff `2 mu g < 1`; all
//! evaluators reject gains at or beyond that bound.
//!
//! A useful consequence of `phi` entering only through `exp(-j lambda phi)`:
//! the moduli at delay `lambda` equal the delay-1 moduli at `lambda * phi`,
//! so full-period integrals over `phi` of any function of `|H_S|`, `|H_N|`
//! do not depend on the delay.

use num_complex::Complex64;

use crate::error::Result;
use crate::params::SystemParams;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A point on the frequency torus: spatial `theta`, temporal `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqPair {
    pub theta: f64,
    pub phi: f64,
}

impl FreqPair {
    /// Builds a frequency pair, reducing both coordinates into `[0, 2*pi)`.
    pub fn new(theta: f64, phi: f64) -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            theta: theta.rem_euclid(tau),
            phi: phi.rem_euclid(tau),
        }
    }
}

/// All transfer functions evaluated at one frequency pair.
///
/// `h1`, `h2`, `h3` are real by construction (cosine polynomials); the
/// relay response and everything downstream of it are complex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferEval {
    /// MTs -> relay inputs, `beta + 2 alpha cos(theta)`.
    pub h1: f64,
    /// Relays -> BS antennas, `gamma + 2 eta cos(theta)`.
    pub h2: f64,
    /// Relays -> neighbour relays, `2 mu cos(theta)`.
    pub h3: f64,
    /// The relay: `g exp(-j lambda phi)`.
    pub hr: Complex64,
    /// Feedback-loop denominator `1 - hr * h3`.
    pub denominator: Complex64,
    /// Composite signal response `h1 * hr * h2 / denominator`.
    pub hs: Complex64,
    /// Composite relay-noise response `hr * h2 / denominator`.
    pub hn: Complex64,
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluates all transfer functions at `f` for relay gain `g`.
///
/// Fails with `UnstableGain` when `2 mu g >= 1` (the marginal point counts
/// as unstable: the closed loop has a pole on the unit circle there).
pub fn eval_transfers(p: &SystemParams, g: f64, f: FreqPair) -> Result<TransferEval> {
    p.check_stable_gain(g)?;
    let cos_theta = f.theta.cos();
    let h1 = p.beta + 2.0 * p.alpha * cos_theta;
    let h2 = p.gamma + 2.0 * p.eta * cos_theta;
    let h3 = 2.0 * p.mu * cos_theta;
    let hr = Complex64::from_polar(g, -(p.lambda as f64) * f.phi);
    let denominator = Complex64::new(1.0, 0.0) - hr * h3;
    let hn = hr * h2 / denominator;
    let hs = hn * h1;
    Ok(TransferEval {
        h1,
        h2,
        h3,
        hr,
        denominator,
        hs,
        hn,
    })
}

/// Output PSD of the useful signal: `P |H_S|^2`.
pub fn signal_psd(p: &SystemParams, g: f64, f: FreqPair) -> Result<f64> {
    let t = eval_transfers(p, g, f)?;
    Ok(p.power_mt * t.hs.norm_sqr())
}

/// Output PSD of the accumulated noise: `var_z |H_N|^2 + var_w`.
///
/// Never smaller than `var_w` — the BS-stage noise floor.
pub fn noise_psd(p: &SystemParams, g: f64, f: FreqPair) -> Result<f64> {
    let t = eval_transfers(p, g, f)?;
    Ok(p.var_z * t.hn.norm_sqr() + p.var_w)
}

// ---------------------------------------------------------------------------

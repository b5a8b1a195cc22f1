//! Relay output power and the full-power relay gain.
//!
//! Each relay retransmits its input scaled by `g`, so its output power
//! `sigma_r^2(g)` is set by the MT signals it hears, the relay-stage noise,
//! and — through the inter-relay coupling `mu` — the neighbouring relays'
//! own outputs. Integrating the relay-stage PSD over the frequency torus
//! and reducing gives three equivalent expressions, all implemented here:
//!
//! * a closed form,
//!
//!   ```text
//!   sigma_r^2(g) = (P beta^2 + var_z) g^2 / sqrt(1 - (2 mu g)^2)
//!                + 4 P alpha^2 g^2 / (sqrt(1 - (2 mu g)^2) + 1 - (2 mu g)^2)
//!   ```
//!
//!   which follows from the reference integrals (with `c = 2 mu g`)
//!   `mean of 1/(1 - c^2 cos^2 t) = 1/sqrt(1 - c^2)` and
//!   `mean of cos^2 t/(1 - c^2 cos^2 t) = (1/sqrt(1 - c^2) - 1)/c^2`;
//!
//! * a single integral over spatial frequency,
//!   `mean over theta of (P (beta + 2 alpha cos theta)^2 + var_z) g^2
//!   / (1 - 4 g^2 mu^2 cos^2 theta)`;
//!
//! * the defining double integral of the relay-stage PSD,
//!   `mean over (theta, phi) of (P H1^2 + var_z) g^2 / |1 - Hr H3|^2`,
//!   whose value is independent of the relay delay.
//!
//! The three agree to quadrature tolerance on the whole stable region
//! `2 mu g < 1`; the test suites of this module and of the acceptance
//! target hold them against each other.
//!
//! `sigma_r^2` is strictly increasing in `g` and diverges at the stability
//! edge, so the power budget `sigma_r^2(g) = Q` always has a unique solution
//! on the stable interval — [`solve_optimal_gain_mcp`] finds it by bisection
//! (the derivative blows up near the edge, which rules Newton steps out).

use crate::error::Result;
use crate::params::{Binding, GainSolution, SystemParams};
use crate::quadrature::{integrate_periodic_1d, integrate_periodic_2d, QuadratureSettings};
use crate::spectra::{eval_transfers, FreqPair};

/// Default relative residual `|sigma_r^2(g) - Q| / Q` for the gain solver.
/// Rates are insensitive to gain perturbations below this level.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// The three forms of sigma_r^2
// ---------------------------------------------------------------------------

/// Closed-form relay output power (see the module doc for the expression).
///
/// With `mu = 0` this reduces exactly to `g^2 (P (beta^2 + 2 alpha^2) +
/// var_z)` — the same formula, no special-casing.
pub fn relay_power_closed(p: &SystemParams, g: f64) -> Result<f64> {
    p.check_stable_gain(g)?;
    let c2 = (2.0 * p.mu * g) * (2.0 * p.mu * g);
    let root = (1.0 - c2).sqrt();
    let direct = (p.power_mt * p.beta * p.beta + p.var_z) * g * g / root;
    let adjacent = 4.0 * p.power_mt * p.alpha * p.alpha * g * g / (root + 1.0 - c2);
    Ok(direct + adjacent)
}

/// Relay output power as a single integral over spatial frequency.
pub fn relay_power_integral_1d(p: &SystemParams, g: f64, quad: &QuadratureSettings) -> Result<f64> {
    p.check_stable_gain(g)?;
    let (raw, _) = integrate_periodic_1d(
        |theta| {
            let h1 = p.beta + 2.0 * p.alpha * theta.cos();
            let c = 2.0 * g * p.mu * theta.cos();
            (p.power_mt * h1 * h1 + p.var_z) * g * g / (1.0 - c * c)
        },
        quad,
    )?;
    Ok(raw / std::f64::consts::TAU)
}

/// Relay output power as the defining double integral of the relay-stage
/// PSD, evaluated with relay delay `lambda` (overriding `p.lambda`); the
/// result must not depend on it.
pub fn relay_power_integral_2d(
    p: &SystemParams,
    g: f64,
    lambda: u32,
    quad: &QuadratureSettings,
) -> Result<f64> {
    p.check_stable_gain(g)?;
    let mut pl = *p;
    pl.lambda = lambda.max(1);
    let (raw, _) = integrate_periodic_2d(
        |theta, phi| {
            let t = eval_transfers(&pl, g, FreqPair { theta, phi })
                .expect("stability was checked before integrating");
            (pl.power_mt * t.h1 * t.h1 + pl.var_z) * g * g / t.denominator.norm_sqr()
        },
        quad,
    )?;
    let tau = std::f64::consts::TAU;
    Ok(raw / (tau * tau))
}

// ---------------------------------------------------------------------------
// Full-power gain
// ---------------------------------------------------------------------------

/// Solves `sigma_r^2(g) = Q` for the relay gain that spends the whole power
/// budget.
///
/// Without inter-relay coupling the solution is explicit:
/// `g = sqrt(Q / (P (beta^2 + 2 alpha^2) + var_z))`. With coupling, the
/// root is bracketed by `[0, (1 - 1e-12) / (2 mu)]` and bisected until the
/// relative residual drops below `tol`; monotonicity and divergence at the
/// stability edge guarantee existence and uniqueness. Should the budget be
/// so large that even a gain within `1e-15` of the edge cannot spend it,
/// the result carries `Binding::StabilityBound` instead of a root.
pub fn solve_optimal_gain_mcp(p: &SystemParams, tol: f64) -> Result<GainSolution> {
    let p = p.validate()?;
    let q = p.power_rt;

    if p.mu == 0.0 {
        let denom = p.power_mt * (p.beta * p.beta + 2.0 * p.alpha * p.alpha) + p.var_z;
        let gain = (q / denom).sqrt();
        return Ok(GainSolution {
            gain,
            achieved_power: relay_power_closed(&p, gain)?,
            binding: Binding::PowerConstraint,
        });
    }

    let edge = p.max_stable_gain();
    let mut lo = 0.0f64;
    let mut hi = edge * (1.0 - 1e-12);
    if relay_power_closed(&p, hi)? < q {
        // Expand precision toward the edge, never the bracket beyond it.
        hi = edge * (1.0 - 1e-15);
        let achieved = relay_power_closed(&p, hi)?;
        if achieved < q {
            return Ok(GainSolution {
                gain: hi,
                achieved_power: achieved,
                binding: Binding::StabilityBound,
            });
        }
    }

    let mut gain = 0.5 * hi;
    let mut achieved = relay_power_closed(&p, gain)?;
    for _ in 0..200 {
        if (achieved - q).abs() <= tol * q {
            break;
        }
        if achieved < q {
            lo = gain;
        } else {
            hi = gain;
        }
        let next = 0.5 * (lo + hi);
        if next == gain || next == lo || next == hi {
            break; // interval collapsed to adjacent floats
        }
        gain = next;
        achieved = relay_power_closed(&p, gain)?;
    }

    Ok(GainSolution {
        gain,
        achieved_power: achieved,
        binding: Binding::PowerConstraint,
    })
}

// ---------------------------------------------------------------------------

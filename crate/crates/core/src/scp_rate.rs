//! Per-cell sum-rate when each base station decodes alone.
//!
//! Without cooperation a BS sees its own cell's signal through the
//! spatial-DC part of the channel and every other cell's signal as colored
//! interference. At temporal frequency `phi` the three 1D PSDs are
//! `theta`-averages of the 2D responses:
//!
//! ```text
//!   S_U(phi) = P |mean of H_S|^2                   useful
//!   S_I(phi) = P  mean of |H_S - mean of H_S|^2    interference
//!   S_N(phi) = var_z mean of |H_N|^2 + var_w       noise
//! ```
//!
//! and the rate is the `phi`-mean of `log(1 + S_U / (S_I + S_N))`.
//!
//! The interference PSD is written above as a *centered* second moment
//! rather than the algebraically identical `P mean|H_S|^2 - S_U`: the
//! centered integrand is pointwise nonnegative, so its trapezoid sum can
//! never go negative through cancellation, no matter how large the PSDs
//! get. The complex mean it subtracts comes from the exact-mean grid
//! machinery in [`quadrature`](crate::quadrature) — for a `theta`-flat
//! `H_S` (decoupled cells) the mean reproduces `H_S` bitwise and the
//! interference is exactly zero. A defensive clamp still guards the result
//! (tiny negatives are zeroed, anything beyond `-1e-12` is an error) even
//! though the construction cannot produce them.
//!
//! Interference makes full relay power suboptimal here: past a point, more
//! gain amplifies other cells' signals faster than the desired one, so
//! [`scp_optimal_gain`] searches the whole feasible interval instead of
//! assuming the budget binds.

use crate::error::{Error, Result};
use crate::mcp_rate::{Method, RateResult, Scheme};
use crate::params::{Binding, GainSolution, SystemParams};
use crate::quadrature::{
    integrate_periodic_1d, mean_periodic_1d, mean_periodic_1d_multi, QuadratureSettings,
};
use crate::relay_power::{relay_power_closed, solve_optimal_gain_mcp, DEFAULT_RESIDUAL_TOL};
use crate::spectra::{eval_transfers, FreqPair};

/// Relative slack (as a fraction of the full-power gain) within which a
/// maximizer is considered to sit *on* the power constraint. Matches the
/// resolution the rate search can reliably distinguish under quadrature
/// noise.
const BINDING_TOL: f64 = 1e-3;

// ---------------------------------------------------------------------------
// PSD decomposition
// ---------------------------------------------------------------------------

/// The useful / interference / noise PSDs at one temporal frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScpPsdTriple {
    /// `P |mean of H_S|^2` — the spatial-DC signal component.
    pub psd_useful: f64,
    /// `P mean of |H_S - mean|^2` — everything the other cells leak in.
    pub psd_interference: f64,
    /// `var_z mean of |H_N|^2 + var_w`, never below `var_w`.
    pub psd_noise: f64,
}

/// Computes the three PSDs at temporal frequency `phi` for relay gain `g`.
///
/// Both `theta`-passes (complex mean plus noise moment, then the centered
/// signal moment) run on the shared-grid integrator at the given settings.
pub fn scp_psds(
    p: &SystemParams,
    g: f64,
    phi: f64,
    quad: &QuadratureSettings,
) -> Result<ScpPsdTriple> {
    p.check_stable_gain(g)?;

    let ([hs_re, hs_im, hn_sq], _) = mean_periodic_1d_multi(
        |theta| {
            let t = eval_transfers(p, g, FreqPair { theta, phi })
                .expect("stability was checked before integrating");
            [t.hs.re, t.hs.im, t.hn.norm_sqr()]
        },
        quad,
    )?;
    let mean_hs = num_complex::Complex64::new(hs_re, hs_im);

    let (centered, _) = mean_periodic_1d(
        |theta| {
            let t = eval_transfers(p, g, FreqPair { theta, phi })
                .expect("stability was checked before integrating");
            (t.hs - mean_hs).norm_sqr()
        },
        quad,
    )?;

    let psd_useful = p.power_mt * mean_hs.norm_sqr();
    let mut psd_interference = p.power_mt * centered;
    if psd_interference < 0.0 {
        if psd_interference >= -1e-12 {
            psd_interference = 0.0;
        } else {
            return Err(Error::InvalidConfig {
                field: "psd_interference",
                detail: format!(
                    "centered interference moment went negative ({psd_interference}) at phi = {phi}"
                ),
            });
        }
    }
    let psd_noise = p.var_z * hn_sq + p.var_w;

    Ok(ScpPsdTriple {
        psd_useful,
        psd_interference,
        psd_noise,
    })
}

// ---------------------------------------------------------------------------
// Rate
// ---------------------------------------------------------------------------

/// Per-cell sum-rate at relay gain `g` under per-cell decoding.
///
/// Nested quadrature: the inner `theta`-integrals run at a tolerance ten
/// times tighter than the outer `phi`-integral, the usual budgeting that
/// keeps inner noise from polluting the outer convergence test.
pub fn scp_rate(p: &SystemParams, g: f64, quad: &QuadratureSettings) -> Result<RateResult> {
    p.check_stable_gain(g)?;
    let inner = quad.with_rel_tol(quad.rel_tol / 10.0);
    let (raw, _) = integrate_periodic_1d(
        |phi| {
            let t = scp_psds(p, g, phi, &inner).expect("stability was checked before integrating");
            (1.0 + t.psd_useful / (t.psd_interference + t.psd_noise)).ln()
        },
        quad,
    )?;
    Ok(RateResult {
        rate_bits: raw / std::f64::consts::TAU / std::f64::consts::LN_2,
        scheme: Scheme::Scp,
        gain_used: g,
        method: Method::ClosedForm,
    })
}

// ---------------------------------------------------------------------------
// Gain search
// ---------------------------------------------------------------------------

/// Maximizes the per-cell-decoding rate over the feasible gains `(0, g_o]`,
/// where `g_o` spends the full relay budget.
///
/// Unimodality is not assumed: a 64-point scan clustered toward both ends
/// of the interval locates the best basin, then golden-section refines it.
/// If the winner sits within a `1e-3` relative margin of `g_o` — or `g_o`
/// itself is at least as good — the power constraint is reported as
/// binding; otherwise the maximizer is interior and strictly cheaper than
/// the budget.
pub fn scp_optimal_gain(p: &SystemParams, quad: &QuadratureSettings) -> Result<GainSolution> {
    let p = p.validate()?;
    let g_full = solve_optimal_gain_mcp(&p, DEFAULT_RESIDUAL_TOL)?.gain;
    let rate_at = |g: f64| -> Result<f64> { Ok(scp_rate(&p, g, quad)?.rate_bits) };

    // Scan: 32 points rising out of 0 and 32 falling into g_full, both
    // geometrically spaced so the ends get the resolution.
    let mut grid = Vec::with_capacity(65);
    let half = 32;
    for i in 0..half {
        let e = -5.0 * (1.0 - i as f64 / (half - 1) as f64)
            + 0.5f64.log10() * i as f64 / (half - 1) as f64;
        grid.push(g_full * 10f64.powf(e));
    }
    for i in 0..half {
        let d = 0.5 * (2e-6f64).powf(i as f64 / (half - 1) as f64);
        grid.push(g_full * (1.0 - d));
    }
    grid.push(g_full);

    let mut best_idx = 0;
    let mut best_rate = f64::NEG_INFINITY;
    let mut rates = Vec::with_capacity(grid.len());
    for (i, &g) in grid.iter().enumerate() {
        let r = rate_at(g)?;
        rates.push(r);
        if r > best_rate {
            best_rate = r;
            best_idx = i;
        }
    }

    // Golden-section refinement on the winning bracket.
    let mut a = if best_idx == 0 {
        0.0
    } else {
        grid[best_idx - 1]
    };
    let mut b = if best_idx + 1 < grid.len() {
        grid[best_idx + 1]
    } else {
        g_full
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = rate_at(c)?;
    let mut fd = rate_at(d)?;
    let mut best_g = grid[best_idx];
    let track = |g: f64, r: f64, best_g: &mut f64, best_rate: &mut f64| {
        if r > *best_rate {
            *best_rate = r;
            *best_g = g;
        }
    };
    track(c, fc, &mut best_g, &mut best_rate);
    track(d, fd, &mut best_g, &mut best_rate);
    while b - a > 1e-9 * g_full {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = rate_at(c)?;
            track(c, fc, &mut best_g, &mut best_rate);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = rate_at(d)?;
            track(d, fd, &mut best_g, &mut best_rate);
        }
    }

    // Classify: the full-power endpoint wins ties.
    let rate_full = *rates.last().expect("grid is nonempty");
    if rate_full >= best_rate - 1e-12 * best_rate.abs() || best_g >= g_full * (1.0 - BINDING_TOL) {
        Ok(GainSolution {
            gain: g_full,
            achieved_power: relay_power_closed(&p, g_full)?,
            binding: Binding::PowerConstraint,
        })
    } else {
        Ok(GainSolution {
            gain: best_g,
            achieved_power: relay_power_closed(&p, best_g)?,
            binding: Binding::Interior,
        })
    }
}

// ---------------------------------------------------------------------------

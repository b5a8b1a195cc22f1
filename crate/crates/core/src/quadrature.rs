//! Trapezoidal quadrature for smooth 2*pi-periodic integrands.
//!
//! Every integral in this crate runs over one period of a function that is
//! analytic on the whole real line (ratios of trigonometric polynomials whose
//! denominators stay away from zero on the stable gain region, and logs of
//! such ratios bounded away from zero). For that class the humble uniform
//! trapezoidal rule is the method of choice: its error decays geometrically
//! in the number of points, far faster than any fixed-order panel rule, so a
//! grid-doubling loop converges in a handful of refinements.
//!
//! The `integrate_*` functions return *raw* integrals over `[0, 2*pi)`; the
//! `mean_*` variants return the integral divided by the period, computed
//! directly from the grid mean (grid sizes are powers of two, and sums are
//! accumulated pairwise, so the mean of a grid-constant integrand is *bitwise
//! exact* — downstream identities that must hold to the last ulp rely on
//! this). A result is the pair `(value, est_error)` where `est_error` is the
//! relative change produced by the final grid doubling, measured against
//! `max(|integral|, integral of |f|)` so that integrands with huge
//! cancellation (or a zero integral) are judged on a meaningful scale.
//!
//! # Example
//!
//! ```
//! use relay_rates_core::quadrature::{integrate_periodic_1d, QuadratureSettings};
//!
//! let s = QuadratureSettings::default();
//! let (raw, _) = integrate_periodic_1d(|t| (2.0 + t.cos()).ln(), &s).unwrap();
//! let mean = raw / std::f64::consts::TAU;
//! assert!((mean - ((2.0 + 3f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
//! ```

use std::f64::consts::TAU;

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Settings
// ---------------------------------------------------------------------------

/// Grid-doubling controls shared by all integrators.
///
/// `max_points` caps the number of points per axis (so a 2D integral may
/// evaluate up to `max_points^2` samples before giving up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Starting grid size per axis; a power of two, at least 8.
    pub initial_points: usize,
    /// Largest grid size per axis before `NoConvergence` is returned.
    pub max_points: usize,
    /// Relative tolerance on the change under one grid doubling.
    pub rel_tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            initial_points: 256,
            max_points: 1 << 16,
            rel_tol: 1e-9,
        }
    }
}

impl QuadratureSettings {
    /// Same settings with a different relative tolerance.
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.initial_points < 8 || !self.initial_points.is_power_of_two() {
            return Err(Error::InvalidConfig {
                field: "initial_points",
                detail: format!("must be a power of two >= 8, got {}", self.initial_points),
            });
        }
        if self.max_points < self.initial_points {
            return Err(Error::InvalidConfig {
                field: "max_points",
                detail: format!(
                    "must be >= initial_points = {}, got {}",
                    self.initial_points, self.max_points
                ),
            });
        }
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::InvalidConfig {
                field: "rel_tol",
                detail: format!("must be a positive finite number, got {}", self.rel_tol),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// 1D
// ---------------------------------------------------------------------------

/// Integrates `f` over `[0, 2*pi)`, doubling the grid until the value moves
/// by less than `rel_tol` (relatively) under a refinement.
///
/// Returns the raw integral and the final relative change. Fails with
/// `NonFinite` if the integrand produces NaN or infinity, and with
/// `NoConvergence` (carrying the best value) if `max_points` is reached
/// first.
pub fn integrate_periodic_1d<F>(f: F, s: &QuadratureSettings) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let ([value], err) = integrate_periodic_1d_multi(|t| [f(t)], s)?;
    Ok((value, err))
}

/// Mean of `f` over the period: `integrate_periodic_1d` divided by `2*pi`,
/// but computed straight from the grid mean (see the module docs for why
/// that distinction matters).
pub fn mean_periodic_1d<F>(f: F, s: &QuadratureSettings) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let ([value], err) = mean_periodic_1d_multi(|t| [f(t)], s)?;
    Ok((value, err))
}

/// Integrates `K` integrands sharing one grid over `[0, 2*pi)`.
///
/// All components see exactly the same sample points and refine together,
/// which matters when algebraic relations between the component integrals
/// (a Cauchy-Schwarz inequality, say) must survive discretization. The
/// doubling stops only when every component has converged; the returned
/// error estimate is the worst component's.
pub fn integrate_periodic_1d_multi<const K: usize, F>(
    f: F,
    s: &QuadratureSettings,
) -> Result<([f64; K], f64)>
where
    F: Fn(f64) -> [f64; K],
{
    match mean_periodic_1d_multi(f, s) {
        Ok((means, err)) => Ok((std::array::from_fn(|k| TAU * means[k]), err)),
        Err(Error::NoConvergence {
            value,
            est_error,
            rel_tol,
            points,
        }) => Err(Error::NoConvergence {
            value: TAU * value,
            est_error,
            rel_tol,
            points,
        }),
        Err(other) => Err(other),
    }
}

/// Shared-grid means of `K` integrands over the period (the multi-component
/// counterpart of [`mean_periodic_1d`]).
pub fn mean_periodic_1d_multi<const K: usize, F>(
    f: F,
    s: &QuadratureSettings,
) -> Result<([f64; K], f64)>
where
    F: Fn(f64) -> [f64; K],
{
    s.validate()?;
    let mut n = s.initial_points;
    let (mut sum, mut abs_sum) = row_sums(&f, n, false)?;
    let mut values = means_from_sums(&sum, n);
    let mut est_error = f64::INFINITY;

    while 2 * n <= s.max_points {
        // The doubled grid is the old points plus the old cells' midpoints,
        // so only the midpoints are freshly evaluated.
        let (mid_sum, mid_abs) = row_sums(&f, n, true)?;
        for k in 0..K {
            sum[k] += mid_sum[k];
            abs_sum[k] += mid_abs[k];
        }
        n *= 2;
        let new_values = means_from_sums(&sum, n);
        let abs_values = means_from_sums(&abs_sum, n);
        est_error = relative_change(&values, &new_values, &abs_values);
        values = new_values;
        if est_error <= s.rel_tol {
            return Ok((values, est_error));
        }
    }

    Err(Error::NoConvergence {
        value: values[0],
        est_error,
        rel_tol: s.rel_tol,
        points: n,
    })
}

// ---------------------------------------------------------------------------
// 2D
// ---------------------------------------------------------------------------

/// Integrates `f` over `[0, 2*pi)^2` on a tensor grid, doubling both axes
/// per refinement. Same contract as [`integrate_periodic_1d`]; `max_points`
/// bounds each axis.
pub fn integrate_periodic_2d<F>(f: F, s: &QuadratureSettings) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    s.validate()?;
    let mut n = s.initial_points;
    let (mut value, _) = tensor_integral(&f, n)?;
    let mut est_error = f64::INFINITY;

    while 2 * n <= s.max_points {
        n *= 2;
        let (new_value, new_abs) = tensor_integral(&f, n)?;
        est_error = relative_change(&[value], &[new_value], &[new_abs]);
        value = new_value;
        if est_error <= s.rel_tol {
            return Ok((value, est_error));
        }
    }

    Err(Error::NoConvergence {
        value,
        est_error,
        rel_tol: s.rel_tol,
        points: n,
    })
}

// ---------------------------------------------------------------------------
// Internals
// ---------------------------------------------------------------------------

/// Sums `f` over the `n`-point uniform grid (`offset_half = false`) or over
/// the midpoints of its cells (`true`), returning plain and absolute sums.
///
/// Accumulation is pairwise, which keeps roundoff at `O(eps log n)` and —
/// because `n` is a power of two — makes the sum of a grid-constant
/// integrand exact: every addition in the tree doubles an identical value,
/// which only bumps the exponent.
fn row_sums<const K: usize, F>(f: &F, n: usize, offset_half: bool) -> Result<([f64; K], [f64; K])>
where
    F: Fn(f64) -> [f64; K],
{
    let shift = if offset_half { 0.5 } else { 0.0 };
    let step = TAU / n as f64;
    pairwise_sums(f, 0, n, shift, step)
}

fn pairwise_sums<const K: usize, F>(
    f: &F,
    lo: usize,
    len: usize,
    shift: f64,
    step: f64,
) -> Result<([f64; K], [f64; K])>
where
    F: Fn(f64) -> [f64; K],
{
    if len == 1 {
        let t = (lo as f64 + shift) * step;
        let y = f(t);
        let mut abs = [0.0; K];
        for k in 0..K {
            if !y[k].is_finite() {
                return Err(Error::NonFinite {
                    axis: "angle",
                    at: t,
                });
            }
            abs[k] = y[k].abs();
        }
        return Ok((y, abs));
    }
    let half = len / 2;
    let (left, left_abs) = pairwise_sums(f, lo, half, shift, step)?;
    let (right, right_abs) = pairwise_sums(f, lo + half, len - half, shift, step)?;
    Ok((
        std::array::from_fn(|k| left[k] + right[k]),
        std::array::from_fn(|k| left_abs[k] + right_abs[k]),
    ))
}

/// Grid means: exact division because `n` is a power of two.
fn means_from_sums<const K: usize>(sum: &[f64; K], n: usize) -> [f64; K] {
    std::array::from_fn(|k| sum[k] / n as f64)
}

/// Worst-case relative change across components, each judged against
/// `max(|new value|, integral of |f|)`. A component whose scale is exactly
/// zero is an identically-zero integrand and counts as converged.
fn relative_change<const K: usize>(old: &[f64; K], new: &[f64; K], abs: &[f64; K]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..K {
        let scale = new[k].abs().max(abs[k]);
        if scale > 0.0 {
            worst = worst.max((new[k] - old[k]).abs() / scale);
        }
    }
    worst
}

/// Raw trapezoid value of `f` on the `n x n` tensor grid, plus the same for
/// `|f|`. Rebuilt from scratch per refinement: the geometric growth of the
/// grid makes the total cost only 4/3 of the final grid anyway, and not
/// caching keeps memory flat.
fn tensor_integral<F>(f: &F, n: usize) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    let step = TAU / n as f64;
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for i in 0..n {
        let theta = i as f64 * step;
        for j in 0..n {
            let phi = j as f64 * step;
            let y = f(theta, phi);
            if !y.is_finite() {
                return Err(Error::NonFinite {
                    axis: "angle",
                    at: theta,
                });
            }
            sum += y;
            abs_sum += y.abs();
        }
    }
    let w = step * step;
    Ok((w * sum, w * abs_sum))
}

// ---------------------------------------------------------------------------

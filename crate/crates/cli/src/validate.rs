//! End-to-end cross-check: one ring simulation against the closed forms.
//!
//! The check runs the time-domain recursion at a pinned gain, then compares
//! two independent summaries of the run against analytic predictions:
//!
//! * relay output power — batch-means estimate vs. the closed form, scored
//!   as a z value against the batch standard error;
//! * output PSD — Welch estimate on the (spatial mode, temporal bin) grid
//!   vs. `P |H_S|^2 + var_z |H_N|^2 + var_w`, scored as the fraction of
//!   bins within four standard errors.
//!
//! The analytic side takes its own parameter set. Normally it is the same
//! one the simulation ran with; handing it a deliberately wrong copy turns
//! the command into a negative control that must fail, which is how the
//! check itself is tested.

use std::f64::consts::TAU;

use serde::Serialize;

use relay_rates_core::relay_power::relay_power_closed;
use relay_rates_core::simulator::{default_burn_in, estimate_output_psd, run_ring, RingConfig};
use relay_rates_core::spectra::{noise_psd, signal_psd, FreqPair};
use relay_rates_core::{Result, SystemParams};

/// Run shape for one validation.
#[derive(Debug, Clone, Copy)]
pub struct ValidateConfig {
    pub gain: f64,
    pub num_cells: usize,
    pub num_symbols: usize,
    /// Discarded leading symbols; `None` picks the feedback-memory default.
    pub burn_in: Option<usize>,
    pub seed: u64,
    pub segment_len: usize,
}

#[derive(Debug, Serialize)]
pub struct RelayPowerCheck {
    pub analytic: f64,
    pub simulated: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct PsdCheck {
    pub bins: usize,
    pub outside_4_stderr: usize,
    pub fraction_within: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub num_cells: usize,
    pub num_symbols: usize,
    pub burn_in: usize,
    pub segments: usize,
    pub gain: f64,
    pub seed: u64,
    pub relay_power: RelayPowerCheck,
    pub psd: PsdCheck,
    pub pass: bool,
}

/// Simulates with `sim_params` and scores the run against the closed forms
/// evaluated at `analytic_params`.
pub fn run_validate(
    sim_params: &SystemParams,
    analytic_params: &SystemParams,
    vcfg: &ValidateConfig,
) -> Result<ValidateReport> {
    let burn_in = vcfg
        .burn_in
        .unwrap_or_else(|| default_burn_in(sim_params, vcfg.gain, vcfg.num_symbols));
    let cfg = RingConfig {
        num_cells: vcfg.num_cells,
        num_symbols: vcfg.num_symbols,
        burn_in,
        seed: vcfg.seed,
        gain: vcfg.gain,
    };
    let traj = run_ring(sim_params, &cfg)?;
    let est = estimate_output_psd(&traj, &cfg, vcfg.segment_len)?;

    // --- relay power ---------------------------------------------------
    let analytic = relay_power_closed(analytic_params, vcfg.gain)?;
    let diff = est.relay_power_mean - analytic;
    let z = if est.relay_power_stderr > 0.0 {
        diff / est.relay_power_stderr
    } else if diff == 0.0 {
        0.0 // degenerate runs (e.g. zero gain) agree exactly
    } else {
        f64::INFINITY
    };
    let relay_power = RelayPowerCheck {
        analytic,
        simulated: est.relay_power_mean,
        stderr: est.relay_power_stderr,
        z,
        pass: z.abs() <= 4.0,
    };

    // --- output PSD ------------------------------------------------------
    let mut outside = 0usize;
    let mut bins = 0usize;
    for (k, (row, err_row)) in est.psd_output.iter().zip(&est.psd_stderr).enumerate() {
        let theta = TAU * k as f64 / vcfg.num_cells as f64;
        for (j, (&sim, &stderr)) in row.iter().zip(err_row).enumerate() {
            let phi = TAU * j as f64 / est.segment_len as f64;
            let f = FreqPair::new(theta, phi);
            let expected = signal_psd(analytic_params, vcfg.gain, f)?
                + noise_psd(analytic_params, vcfg.gain, f)?;
            bins += 1;
            let gap = (sim - expected).abs();
            if gap > 4.0 * stderr {
                outside += 1;
            }
        }
    }
    let fraction_within = 1.0 - outside as f64 / bins as f64;
    let psd = PsdCheck {
        bins,
        outside_4_stderr: outside,
        fraction_within,
        pass: fraction_within >= 0.95,
    };

    let pass = relay_power.pass && psd.pass;
    Ok(ValidateReport {
        num_cells: vcfg.num_cells,
        num_symbols: vcfg.num_symbols,
        burn_in,
        segments: est.num_segments,
        gain: vcfg.gain,
        seed: vcfg.seed,
        relay_power,
        psd,
        pass,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ParamOverrides;

    fn reference() -> SystemParams {
        ParamOverrides::default().resolve().unwrap()
    }

    fn small_run() -> ValidateConfig {
        ValidateConfig {
            gain: 0.4,
            num_cells: 16,
            num_symbols: 1 << 14,
            burn_in: None,
            seed: 1,
            segment_len: 256,
        }
    }

    #[test]
    fn honest_comparison_passes() {
        let p = reference();
        let report = run_validate(&p, &p, &small_run()).unwrap();
        assert!(report.relay_power.pass, "z = {}", report.relay_power.z);
        assert!(report.psd.pass, "fraction = {}", report.psd.fraction_within);
        assert!(report.pass);
        assert!(report.segments >= 64);
    }

    #[test]
    fn misdeclared_noise_variance_fails_both_checks() {
        let p = reference();
        let wrong = SystemParams { var_z: 25.0, ..p };
        let report = run_validate(&p, &wrong, &small_run()).unwrap();
        assert!(!report.relay_power.pass, "z = {}", report.relay_power.z);
        assert!(
            !report.psd.pass,
            "fraction = {}",
            report.psd.fraction_within
        );
        assert!(!report.pass);
    }

    #[test]
    fn zero_gain_run_agrees_exactly_on_relay_power() {
        let p = reference();
        let vcfg = ValidateConfig {
            gain: 0.0,
            ..small_run()
        };
        let report = run_validate(&p, &p, &vcfg).unwrap();
        assert_eq!(report.relay_power.z, 0.0);
        assert_eq!(report.relay_power.analytic, 0.0);
        assert!(report.pass);
    }
}

//! Sweep execution and table emission.
//!
//! A sweep is a grid of (value, scheme) jobs evaluated in parallel; rows
//! come back in grid order regardless of completion order, so the output
//! is deterministic. A row that fails (say an invalid point mid-sweep)
//! carries its message in the `error` column and the run continues.
//!
//! CSV columns are `sweep_var,scheme,rate_bits,gain,relay_power,binding,
//! error` — the `sweep_var` column holds the swept value for the row (the
//! variable's *name* lives in the JSON spec, which is also embedded in
//! JSON output so a result file can be fed back as a config).

use rayon::prelude::*;
use serde::Serialize;

use relay_rates_core::mcp_rate::{mcp_rate_closed, mcp_rate_da, mcp_rate_half_duplex};
use relay_rates_core::params::Binding;
use relay_rates_core::quadrature::QuadratureSettings;
use relay_rates_core::relay_power::{solve_optimal_gain_mcp, DEFAULT_RESIDUAL_TOL};
use relay_rates_core::scp_rate::{scp_optimal_gain, scp_rate};
use relay_rates_core::SystemParams;

use crate::config::{SchemeArg, SweepSpec};

/// One evaluated scheme at one operating point.
pub struct SchemeEval {
    pub rate_bits: f64,
    pub gain: f64,
    pub relay_power: f64,
    pub binding: Binding,
}

pub fn binding_name(b: Binding) -> &'static str {
    match b {
        Binding::PowerConstraint => "power",
        Binding::StabilityBound => "stability",
        Binding::Interior => "interior",
    }
}

/// Evaluates `scheme` at its own optimal gain.
///
/// Each scheme is reported against the budget it actually spends: the
/// time-slotted scheme solves its gain on the doubled-power system, so its
/// `relay_power` is the per-active-slot output power.
pub fn evaluate_scheme(
    p: &SystemParams,
    scheme: SchemeArg,
    quad: &QuadratureSettings,
) -> Result<SchemeEval, relay_rates_core::Error> {
    match scheme {
        SchemeArg::Mcp => {
            let sol = solve_optimal_gain_mcp(p, DEFAULT_RESIDUAL_TOL)?;
            let rate = mcp_rate_closed(p, sol.gain, quad)?;
            Ok(SchemeEval {
                rate_bits: rate.rate_bits,
                gain: sol.gain,
                relay_power: sol.achieved_power,
                binding: sol.binding,
            })
        }
        SchemeArg::McpDa => {
            let decoupled = SystemParams { mu: 0.0, ..*p };
            let sol = solve_optimal_gain_mcp(&decoupled, DEFAULT_RESIDUAL_TOL)?;
            let rate = mcp_rate_da(p, sol.gain, quad)?;
            Ok(SchemeEval {
                rate_bits: rate.rate_bits,
                gain: sol.gain,
                relay_power: sol.achieved_power,
                binding: sol.binding,
            })
        }
        SchemeArg::McpHd => {
            let doubled = SystemParams {
                mu: 0.0,
                power_mt: 2.0 * p.power_mt,
                power_rt: 2.0 * p.power_rt,
                ..*p
            };
            let sol = solve_optimal_gain_mcp(&doubled, DEFAULT_RESIDUAL_TOL)?;
            let rate = mcp_rate_half_duplex(p, quad)?;
            Ok(SchemeEval {
                rate_bits: rate.rate_bits,
                gain: rate.gain_used,
                relay_power: sol.achieved_power,
                binding: sol.binding,
            })
        }
        SchemeArg::Scp => {
            let sol = scp_optimal_gain(p, quad)?;
            let rate = scp_rate(p, sol.gain, quad)?;
            Ok(SchemeEval {
                rate_bits: rate.rate_bits,
                gain: sol.gain,
                relay_power: sol.achieved_power,
                binding: sol.binding,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Rows
// ---------------------------------------------------------------------------

/// One output row. Field names match the CSV columns; a failed row has
/// the value/scheme context, empty results, and the `error` set.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub sweep_var: f64,
    pub scheme: SchemeArg,
    pub rate_bits: Option<f64>,
    pub gain: Option<f64>,
    pub relay_power: Option<f64>,
    pub binding: Option<&'static str>,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct SweepOutput {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

/// Runs the whole grid. Jobs are value-major (all schemes of the first
/// value, then the next value), which is also the emission order.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &crate::config::ParamOverrides,
    quad: &QuadratureSettings,
) -> Vec<SweepRow> {
    let jobs: Vec<(f64, SchemeArg)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.schemes.iter().map(move |&s| (v, s)))
        .collect();
    jobs.par_iter()
        .map(|&(value, scheme)| {
            let outcome = spec
                .sweep_var
                .apply(base, value)
                .resolve()
                .map_err(|e| e.to_string())
                .and_then(|p| evaluate_scheme(&p, scheme, quad).map_err(|e| e.to_string()));
            match outcome {
                Ok(eval) => SweepRow {
                    sweep_var: value,
                    scheme,
                    rate_bits: Some(eval.rate_bits),
                    gain: Some(eval.gain),
                    relay_power: Some(eval.relay_power),
                    binding: Some(binding_name(eval.binding)),
                    error: None,
                },
                Err(message) => SweepRow {
                    sweep_var: value,
                    scheme,
                    rate_bits: None,
                    gain: None,
                    relay_power: None,
                    binding: None,
                    error: Some(message),
                },
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

pub const CSV_HEADER: &str = "sweep_var,scheme,rate_bits,gain,relay_power,binding,error";

/// Renders rows as CSV. Floats print in Rust's shortest round-trip form,
/// so identical inputs give byte-identical tables.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let fields = [
            row.sweep_var.to_string(),
            row.scheme.as_str().to_string(),
            opt(&row.rate_bits),
            opt(&row.gain),
            opt(&row.relay_power),
            row.binding.unwrap_or_default().to_string(),
            row.error.clone().unwrap_or_default(),
        ];
        let line: Vec<String> = fields.iter().map(|f| csv_escape(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn to_json(spec: &SweepSpec, rows: Vec<SweepRow>) -> String {
    let out = SweepOutput {
        spec: spec.clone(),
        rows,
    };
    serde_json::to_string_pretty(&out).expect("sweep output serializes")
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{OutputFormat, ParamOverrides, ResolvedParams, SweepVar};

    fn quick_quad() -> QuadratureSettings {
        QuadratureSettings::default().with_rel_tol(1e-6)
    }

    #[test]
    fn all_four_schemes_evaluate_at_the_reference_point() {
        let p = ParamOverrides::default().resolve().unwrap();
        let quad = quick_quad();
        let mcp = evaluate_scheme(&p, SchemeArg::Mcp, &quad).unwrap();
        let da = evaluate_scheme(&p, SchemeArg::McpDa, &quad).unwrap();
        let hd = evaluate_scheme(&p, SchemeArg::McpHd, &quad).unwrap();
        let scp = evaluate_scheme(&p, SchemeArg::Scp, &quad).unwrap();
        assert!(mcp.rate_bits > scp.rate_bits);
        assert!(da.rate_bits >= mcp.rate_bits); // no coupling can only help
        assert!(hd.rate_bits < mcp.rate_bits); // half the symbols hurt more
        assert!(mcp.gain > 0.0 && scp.gain > 0.0);
    }

    #[test]
    fn failed_rows_keep_their_place_and_message() {
        let base = ParamOverrides {
            power_mt: Some(-1.0), // invalid: forces a per-row failure
            ..Default::default()
        };
        let params = ResolvedParams {
            alpha: 0.2,
            beta: 0.8,
            gamma: 0.8,
            eta: 0.2,
            mu: 0.1,
            power_mt: -1.0,
            power_rt: 100.0,
            var_z: 1.0,
            var_w: 1.0,
            sigma2: 1.0,
            lambda: 1,
        };
        let spec = SweepSpec {
            sweep_var: SweepVar::Mu,
            values: vec![0.0, 0.1],
            schemes: vec![SchemeArg::Mcp],
            output_format: OutputFormat::Csv,
            params,
        };
        let rows = run_sweep(&spec, &base, &quick_quad());
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].sweep_var, 0.0);
        assert!(rows[0].rate_bits.is_none());
        assert!(rows[0].error.as_deref().unwrap().contains("power_mt"));
        assert!(rows[1].error.is_some());
    }

    #[test]
    fn csv_escapes_awkward_fields() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}

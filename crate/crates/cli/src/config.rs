//! Operating-point resolution and config-file parsing.
//!
//! Users describe an operating point in the measurement convention: powers
//! in dB over a reference noise variance `sigma2` (both noise stages
//! default to `sigma2`), channel gains and the interference factor as plain
//! numbers. Every knob is optional; the defaults are the reference point
//! used throughout the test suite (10 dB mobile power, 20 dB relay budget,
//! 0.8 direct / 0.2 cross gains, mu = 0.1, unit delay).
//!
//! A sweep can also be driven by a config file, either flat `key = value`
//! lines (with `#` comments) or JSON. The JSON form accepts exactly what
//! `sweep --output-format json` emits — a `{"spec": ..., "rows": ...}`
//! document or the bare spec object — so a sweep's output can be fed back
//! in to reproduce it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use relay_rates_core::{db_to_linear, SystemParams};

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_BETA: f64 = 0.8;
pub const DEFAULT_GAMMA: f64 = 0.8;
pub const DEFAULT_ETA: f64 = 0.2;
pub const DEFAULT_MU: f64 = 0.1;
pub const DEFAULT_P_DB: f64 = 10.0;
pub const DEFAULT_Q_DB: f64 = 20.0;
pub const DEFAULT_SIGMA2: f64 = 1.0;
pub const DEFAULT_LAMBDA: u32 = 1;

// ---------------------------------------------------------------------------
// Overrides
// ---------------------------------------------------------------------------

/// Partial operating point: everything a config file or flag set may pin
/// down. Mirrors the flag names; unset fields fall back to the defaults
/// above at resolution time.
#[derive(Debug, Clone, Default)]
pub struct ParamOverrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    pub p_db: Option<f64>,
    pub q_db: Option<f64>,
    pub sigma2: Option<f64>,
    pub var_z: Option<f64>,
    pub var_w: Option<f64>,
    pub power_mt: Option<f64>,
    pub power_rt: Option<f64>,
    pub lambda: Option<u32>,
}

impl ParamOverrides {
    /// Field-wise overlay: values in `self` win over `base`.
    pub fn over(self, base: ParamOverrides) -> ParamOverrides {
        ParamOverrides {
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            gamma: self.gamma.or(base.gamma),
            eta: self.eta.or(base.eta),
            mu: self.mu.or(base.mu),
            p_db: self.p_db.or(base.p_db),
            q_db: self.q_db.or(base.q_db),
            sigma2: self.sigma2.or(base.sigma2),
            var_z: self.var_z.or(base.var_z),
            var_w: self.var_w.or(base.var_w),
            power_mt: self.power_mt.or(base.power_mt),
            power_rt: self.power_rt.or(base.power_rt),
            lambda: self.lambda.or(base.lambda),
        }
    }

    /// The reference variance dB powers convert against.
    pub fn reference_sigma2(&self) -> f64 {
        self.sigma2.unwrap_or(DEFAULT_SIGMA2)
    }

    /// Fills in defaults and builds the validated parameter set.
    ///
    /// dB and linear power specifications are mutually exclusive per power:
    /// a point that pins both `p_db` and `power_mt` (or `q_db` and
    /// `power_rt`) is ambiguous and rejected rather than silently ranked.
    pub fn resolve(&self) -> Result<SystemParams, String> {
        if self.p_db.is_some() && self.power_mt.is_some() {
            return Err("p_db and power_mt both given; specify the mobile power once".into());
        }
        if self.q_db.is_some() && self.power_rt.is_some() {
            return Err("q_db and power_rt both given; specify the relay budget once".into());
        }
        let sigma2 = self.reference_sigma2();
        let power_mt = self
            .power_mt
            .unwrap_or_else(|| sigma2 * db_to_linear(self.p_db.unwrap_or(DEFAULT_P_DB)));
        let power_rt = self
            .power_rt
            .unwrap_or_else(|| sigma2 * db_to_linear(self.q_db.unwrap_or(DEFAULT_Q_DB)));
        SystemParams::new(
            self.alpha.unwrap_or(DEFAULT_ALPHA),
            self.beta.unwrap_or(DEFAULT_BETA),
            self.gamma.unwrap_or(DEFAULT_GAMMA),
            self.eta.unwrap_or(DEFAULT_ETA),
            self.mu.unwrap_or(DEFAULT_MU),
            power_mt,
            power_rt,
            self.var_z.unwrap_or(sigma2),
            self.var_w.unwrap_or(sigma2),
            self.lambda.unwrap_or(DEFAULT_LAMBDA),
        )
        .map_err(|e| e.to_string())
    }
}

/// Fully resolved parameters as they appear in JSON output (linear powers,
/// both noise variances explicit). Feeding them back through [`resolve`]
/// reproduces the identical `SystemParams`; the reference variance rides
/// along so a dB *sweep* re-run from this record converts against the same
/// reference as the original run.
///
/// [`resolve`]: ParamOverrides::resolve
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub mu: f64,
    pub power_mt: f64,
    pub power_rt: f64,
    pub var_z: f64,
    pub var_w: f64,
    pub sigma2: f64,
    pub lambda: u32,
}

impl ResolvedParams {
    /// Records a validated point together with the dB reference it was
    /// resolved against.
    pub fn new(p: &SystemParams, sigma2: f64) -> Self {
        ResolvedParams {
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            eta: p.eta,
            mu: p.mu,
            power_mt: p.power_mt,
            power_rt: p.power_rt,
            var_z: p.var_z,
            var_w: p.var_w,
            sigma2,
            lambda: p.lambda,
        }
    }
}

impl From<ResolvedParams> for ParamOverrides {
    fn from(r: ResolvedParams) -> Self {
        ParamOverrides {
            alpha: Some(r.alpha),
            beta: Some(r.beta),
            gamma: Some(r.gamma),
            eta: Some(r.eta),
            mu: Some(r.mu),
            sigma2: Some(r.sigma2),
            power_mt: Some(r.power_mt),
            power_rt: Some(r.power_rt),
            var_z: Some(r.var_z),
            var_w: Some(r.var_w),
            lambda: Some(r.lambda),
            ..Default::default()
        }
    }
}

// ---------------------------------------------------------------------------
// Sweep vocabulary
// ---------------------------------------------------------------------------

/// Which knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    Mu,
    Alpha,
    Eta,
    PDb,
    QDb,
}

impl SweepVar {
    /// Returns the base point with this variable pinned to `value`.
    /// Sweeping a dB power clears any linear counterpart the base carried.
    pub fn apply(self, base: &ParamOverrides, value: f64) -> ParamOverrides {
        let mut o = base.clone();
        match self {
            SweepVar::Mu => o.mu = Some(value),
            SweepVar::Alpha => o.alpha = Some(value),
            SweepVar::Eta => o.eta = Some(value),
            SweepVar::PDb => {
                o.p_db = Some(value);
                o.power_mt = None;
            }
            SweepVar::QDb => {
                o.q_db = Some(value);
                o.power_rt = None;
            }
        }
        o
    }
}

/// Decoding schemes the CLI can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    /// Joint decoding across all base stations.
    Mcp,
    /// Joint decoding with directional relay antennas (no inter-relay
    /// coupling).
    McpDa,
    /// Joint decoding with time-slotted relays (half the symbols, twice
    /// the powers).
    McpHd,
    /// Each base station decodes alone.
    Scp,
}

impl SchemeArg {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeArg::Mcp => "mcp",
            SchemeArg::McpDa => "mcp-da",
            SchemeArg::McpHd => "mcp-hd",
            SchemeArg::Scp => "scp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A fully assembled sweep: the resolved base point plus the sweep axis.
/// This is the `"spec"` object embedded in JSON sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub sweep_var: SweepVar,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeArg>,
    pub output_format: OutputFormat,
    pub params: ResolvedParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("sweep needs at least one value".into());
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err("sweep values must be strictly increasing".into());
        }
        if self.schemes.is_empty() {
            return Err("sweep needs at least one scheme".into());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/// Everything a config file may set: the base point plus sweep fields.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub overrides: ParamOverrides,
    pub sweep_var: Option<SweepVar>,
    pub values: Option<Vec<f64>>,
    pub schemes: Option<Vec<SchemeArg>>,
    pub output_format: Option<OutputFormat>,
}

/// Loads a config file, sniffing the format: JSON if the first
/// non-whitespace byte is `{`, flat `key = value` lines otherwise.
pub fn load_config(path: &Path) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    if text.trim_start().starts_with('{') {
        parse_json_config(&text)
    } else {
        parse_flat_config(&text)
    }
}

/// Accepts a bare [`SweepSpec`] object or a whole sweep-output document
/// (`{"spec": ..., "rows": ...}`); the rows are ignored on ingestion.
fn parse_json_config(text: &str) -> Result<ConfigFile, String> {
    #[derive(Deserialize)]
    struct SweepOutputEnvelope {
        spec: SweepSpec,
    }
    let spec = match serde_json::from_str::<SweepOutputEnvelope>(text) {
        Ok(env) => env.spec,
        Err(_) => serde_json::from_str::<SweepSpec>(text)
            .map_err(|e| format!("config is not a sweep spec or sweep output: {e}"))?,
    };
    Ok(ConfigFile {
        overrides: spec.params.into(),
        sweep_var: Some(spec.sweep_var),
        values: Some(spec.values),
        schemes: Some(spec.schemes),
        output_format: Some(spec.output_format),
    })
}

fn parse_flat_config(text: &str) -> Result<ConfigFile, String> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))?;
        let key = key.trim().to_string();
        if entries
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(format!("line {}: duplicate key {key:?}", lineno + 1));
        }
    }

    let mut cfg = ConfigFile::default();
    for (key, value) in entries {
        let f = |field: &str| -> Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|_| format!("{field}: expected a number, got {value:?}"))
        };
        match key.as_str() {
            "alpha" => cfg.overrides.alpha = Some(f(&key)?),
            "beta" => cfg.overrides.beta = Some(f(&key)?),
            "gamma" => cfg.overrides.gamma = Some(f(&key)?),
            "eta" => cfg.overrides.eta = Some(f(&key)?),
            "mu" => cfg.overrides.mu = Some(f(&key)?),
            "p_db" => cfg.overrides.p_db = Some(f(&key)?),
            "q_db" => cfg.overrides.q_db = Some(f(&key)?),
            "sigma2" => cfg.overrides.sigma2 = Some(f(&key)?),
            "var_z" => cfg.overrides.var_z = Some(f(&key)?),
            "var_w" => cfg.overrides.var_w = Some(f(&key)?),
            "power_mt" => cfg.overrides.power_mt = Some(f(&key)?),
            "power_rt" => cfg.overrides.power_rt = Some(f(&key)?),
            "lambda" => {
                cfg.overrides.lambda =
                    Some(value.parse::<u32>().map_err(|_| {
                        format!("lambda: expected a positive integer, got {value:?}")
                    })?)
            }
            "sweep_var" => {
                cfg.sweep_var = Some(match value.as_str() {
                    "mu" => SweepVar::Mu,
                    "alpha" => SweepVar::Alpha,
                    "eta" => SweepVar::Eta,
                    "p_db" => SweepVar::PDb,
                    "q_db" => SweepVar::QDb,
                    other => return Err(format!("sweep_var: unknown variable {other:?}")),
                })
            }
            "values" => {
                let parsed: Result<Vec<f64>, _> =
                    value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                cfg.values =
                    Some(parsed.map_err(|_| format!("values: expected numbers, got {value:?}"))?);
            }
            "schemes" => {
                let mut schemes = Vec::new();
                for s in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    schemes.push(match s {
                        "mcp" => SchemeArg::Mcp,
                        "mcp-da" => SchemeArg::McpDa,
                        "mcp-hd" => SchemeArg::McpHd,
                        "scp" => SchemeArg::Scp,
                        other => return Err(format!("schemes: unknown scheme {other:?}")),
                    });
                }
                cfg.schemes = Some(schemes);
            }
            "output_format" => {
                cfg.output_format = Some(match value.as_str() {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => return Err(format!("output_format: unknown format {other:?}")),
                })
            }
            other => return Err(format!("unknown config key {other:?}")),
        }
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_the_reference_point() {
        let p = ParamOverrides::default().resolve().unwrap();
        assert_eq!(p.alpha, 0.2);
        assert_eq!(p.beta, 0.8);
        assert!((p.power_mt - 10.0).abs() < 1e-12);
        assert!((p.power_rt - 100.0).abs() < 1e-12);
        assert_eq!(p.var_z, 1.0);
        assert_eq!(p.lambda, 1);
    }

    #[test]
    fn db_values_scale_with_the_reference_variance() {
        let o = ParamOverrides {
            sigma2: Some(4.0),
            p_db: Some(0.0),
            ..Default::default()
        };
        let p = o.resolve().unwrap();
        assert!((p.power_mt - 4.0).abs() < 1e-12);
        assert_eq!(p.var_z, 4.0);
        assert_eq!(p.var_w, 4.0);
    }

    #[test]
    fn linear_and_db_powers_conflict() {
        let o = ParamOverrides {
            p_db: Some(10.0),
            power_mt: Some(10.0),
            ..Default::default()
        };
        assert!(o.resolve().unwrap_err().contains("p_db"));
    }

    #[test]
    fn flat_config_round_trips_through_overrides() {
        let cfg = parse_flat_config(
            "# reference sweep\nmu = 0.3\np_db = 12  # twelve dB\nvalues = 0, 0.1, 0.2\nschemes = mcp, scp\nsweep_var = mu\noutput_format = json\n",
        )
        .unwrap();
        assert_eq!(cfg.overrides.mu, Some(0.3));
        assert_eq!(cfg.overrides.p_db, Some(12.0));
        assert_eq!(cfg.values.as_deref(), Some(&[0.0, 0.1, 0.2][..]));
        assert_eq!(
            cfg.schemes.as_deref(),
            Some(&[SchemeArg::Mcp, SchemeArg::Scp][..])
        );
        assert_eq!(cfg.output_format, Some(OutputFormat::Json));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_flat_config("bogus = 1\n").unwrap_err();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_flat_config("mu = 0.1\nmu = 0.2\n").unwrap_err();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn sweep_spec_validation_catches_bad_axes() {
        let params = ResolvedParams::new(&ParamOverrides::default().resolve().unwrap(), 1.0);
        let mut spec = SweepSpec {
            sweep_var: SweepVar::Mu,
            values: vec![0.0, 0.1],
            schemes: vec![SchemeArg::Mcp],
            output_format: OutputFormat::Csv,
            params,
        };
        assert!(spec.validate().is_ok());
        spec.values = vec![0.1, 0.1];
        assert!(spec.validate().is_err());
        spec.values = vec![0.1, 0.2];
        spec.schemes.clear();
        assert!(spec.validate().is_err());
        spec.schemes = vec![SchemeArg::Scp];
        spec.values.clear();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn resolved_params_round_trip_keeps_the_db_reference() {
        let o = ParamOverrides {
            sigma2: Some(4.0),
            ..Default::default()
        };
        let p = o.resolve().unwrap();
        let record = ResolvedParams::new(&p, o.reference_sigma2());
        let back: ParamOverrides = record.into();
        assert_eq!(back.resolve().unwrap(), p);
        // A dB sweep over the re-ingested point converts against the
        // original reference, not the default one.
        let swept = SweepVar::PDb.apply(&back, 0.0).resolve().unwrap();
        assert!((swept.power_mt - 4.0).abs() < 1e-12);
    }

    #[test]
    fn db_sweep_clears_a_linear_base_power() {
        let base = ParamOverrides {
            power_mt: Some(5.0),
            ..Default::default()
        };
        let at = SweepVar::PDb.apply(&base, 0.0);
        let p = at.resolve().unwrap();
        assert!((p.power_mt - 1.0).abs() < 1e-12);
    }
}

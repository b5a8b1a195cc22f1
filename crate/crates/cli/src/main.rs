//! `relay-rates` — per-cell uplink rates of a relay-assisted linear
//! cellular array.
//!
//! Three subcommands:
//!
//! * `rate` — the schemes' rates at one operating point (JSON to stdout);
//! * `sweep` — rate curves over a parameter grid (CSV or JSON);
//! * `validate` — a time-domain Monte-Carlo run scored against the
//!   closed forms.
//!
//! Exit codes: 0 success; 2 invalid flags or config; 3 a forced relay gain
//! outside its stability region; 4 validation checks failed; 1 any other
//! runtime failure.

mod config;
mod sweep;
mod validate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use relay_rates_core::mcp_rate::{mcp_rate_closed, mcp_rate_da};
use relay_rates_core::quadrature::QuadratureSettings;
use relay_rates_core::relay_power::relay_power_closed;
use relay_rates_core::scp_rate::scp_rate;
use relay_rates_core::{Error as CoreError, SystemParams};

use config::{
    load_config, OutputFormat, ParamOverrides, ResolvedParams, SchemeArg, SweepSpec, SweepVar,
};
use sweep::{binding_name, evaluate_scheme, run_sweep, to_csv, to_json};
use validate::{run_validate, ValidateConfig};

const THREADS_ENV: &str = "RELAY_RATES_THREADS";

// ---------------------------------------------------------------------------
// CLI surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "relay-rates",
    version,
    about = "Uplink sum-rates of a linear cellular array with full-duplex relays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the schemes' rates at one operating point.
    Rate(RateArgs),
    /// Evaluate rate curves over a parameter grid.
    Sweep(SweepArgs),
    /// Cross-check the closed forms against a Monte-Carlo run.
    Validate(ValidateArgs),
}

/// Operating-point flags shared by every subcommand. Powers are given in
/// dB over `--sigma2` or linearly, never both ways at once.
#[derive(Args, Debug, Default)]
struct ParamArgs {
    /// Cross gain, mobile to neighbour relay.
    #[arg(long)]
    alpha: Option<f64>,
    /// Direct gain, mobile to its own relay.
    #[arg(long)]
    beta: Option<f64>,
    /// Direct gain, relay to its own base-station antenna.
    #[arg(long)]
    gamma: Option<f64>,
    /// Cross gain, relay to neighbour base-station antenna.
    #[arg(long)]
    eta: Option<f64>,
    /// Inter-relay coupling gain.
    #[arg(long)]
    mu: Option<f64>,
    /// Mobile transmit power in dB over sigma2.
    #[arg(long)]
    p_db: Option<f64>,
    /// Relay output-power budget in dB over sigma2.
    #[arg(long)]
    q_db: Option<f64>,
    /// Reference noise variance: the dB anchor and the default for both
    /// noise stages.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Relay-stage noise variance (defaults to sigma2).
    #[arg(long)]
    var_z: Option<f64>,
    /// Base-station-stage noise variance (defaults to sigma2).
    #[arg(long)]
    var_w: Option<f64>,
    /// Mobile transmit power, linear (alternative to --p-db).
    #[arg(long)]
    power_mt: Option<f64>,
    /// Relay output-power budget, linear (alternative to --q-db).
    #[arg(long)]
    power_rt: Option<f64>,
    /// Relay processing delay in symbols.
    #[arg(long)]
    lambda: Option<u32>,
}

impl ParamArgs {
    fn to_overrides(&self) -> ParamOverrides {
        ParamOverrides {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            eta: self.eta,
            mu: self.mu,
            p_db: self.p_db,
            q_db: self.q_db,
            sigma2: self.sigma2,
            var_z: self.var_z,
            var_w: self.var_w,
            power_mt: self.power_mt,
            power_rt: self.power_rt,
            lambda: self.lambda,
        }
    }
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Schemes to evaluate (default: all four).
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<SchemeArg>>,
    /// Evaluate at this relay gain instead of optimizing it.
    #[arg(long)]
    force_gain: Option<f64>,
    /// Report rates in nats instead of bits.
    #[arg(long)]
    nats: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Base point and sweep axis from a file (flat key=value or JSON);
    /// flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Variable to sweep.
    #[arg(long)]
    var: Option<SweepVar>,
    /// Grid values, strictly increasing (default for mu: 0 to 0.45 in
    /// steps of 0.05; required for any other variable).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Schemes to evaluate per value (default: mcp,scp).
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<SchemeArg>>,
    /// Table format on stdout.
    #[arg(long)]
    output_format: Option<OutputFormat>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Relay gain for the run.
    #[arg(long, default_value_t = 0.4)]
    gain: f64,
    /// Cells on the ring.
    #[arg(long, default_value_t = 64)]
    num_cells: usize,
    /// Simulated symbols per cell.
    #[arg(long, default_value_t = 65_536)]
    num_symbols: usize,
    /// Leading symbols to discard (default: sized to the feedback memory).
    #[arg(long)]
    burn_in: Option<usize>,
    /// Simulation seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Periodogram segment length.
    #[arg(long, default_value_t = 256)]
    segment_len: usize,
    /// Score the run against closed forms evaluated with this relay-stage
    /// noise variance instead of the true one (negative control: a
    /// mis-declared variance must make the checks fail).
    #[arg(long, hide = true)]
    analytic_var_z: Option<f64>,
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad flags, parameters, or config file.
    Usage(String),
    /// A forced relay gain outside the stable region.
    Unstable(String),
    /// Validation checks failed (the report was already printed).
    ChecksFailed,
    /// Any other runtime failure.
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Unstable(_) => 3,
            CliError::ChecksFailed => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Unstable(m) | CliError::Failed(m) => m,
            CliError::ChecksFailed => "validation checks failed (see report)",
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::UnstableGain { .. } => CliError::Unstable(e.to_string()),
            CoreError::NonPositivePower { .. }
            | CoreError::NegativeGain { .. }
            | CoreError::ZeroDelay { .. }
            | CoreError::InvalidConfig { .. }
            | CoreError::InsufficientSamples { .. } => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

// ---------------------------------------------------------------------------
// Entry
// ---------------------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    if let Err(e) = real_main(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    match cli.command {
        Command::Rate(args) => cmd_rate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

/// Honors `RELAY_RATES_THREADS`; the rayon default (all cores) otherwise.
fn init_thread_pool() -> Result<(), CliError> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .to_str()
        .and_then(|s| s.parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            usage(format!(
                "{THREADS_ENV} must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Failed(format!("thread pool: {e}")))
}

/// Quadrature settings for interactive evaluation: tighter than any
/// tolerance quoted on the outputs, looser than the library default.
fn cli_quad() -> QuadratureSettings {
    QuadratureSettings::default().with_rel_tol(1e-8)
}

// ---------------------------------------------------------------------------
// rate
// ---------------------------------------------------------------------------

/// One scheme's result as printed by `rate`. Exactly one of `rate_bits` /
/// `rate_nats` is present, matching the requested unit.
#[derive(Serialize)]
struct RateReport {
    scheme: SchemeArg,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_nats: Option<f64>,
    gain: f64,
    relay_power: f64,
    binding: &'static str,
}

fn cmd_rate(args: RateArgs) -> Result<(), CliError> {
    let p = args.params.to_overrides().resolve().map_err(usage)?;
    let schemes = args.schemes.unwrap_or_else(|| {
        vec![
            SchemeArg::Mcp,
            SchemeArg::McpDa,
            SchemeArg::McpHd,
            SchemeArg::Scp,
        ]
    });
    if schemes.is_empty() {
        return Err(usage("rate needs at least one scheme"));
    }
    let quad = cli_quad();

    let mut reports = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let (rate_bits, gain, relay_power, binding) = match args.force_gain {
            Some(g) => forced_scheme(&p, scheme, g, &quad)?,
            None => {
                let eval = evaluate_scheme(&p, scheme, &quad)?;
                (
                    eval.rate_bits,
                    eval.gain,
                    eval.relay_power,
                    binding_name(eval.binding),
                )
            }
        };
        reports.push(RateReport {
            scheme,
            rate_bits: (!args.nats).then_some(rate_bits),
            rate_nats: args.nats.then_some(rate_bits * std::f64::consts::LN_2),
            gain,
            relay_power,
            binding,
        });
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&reports).expect("reports serialize")
    );
    Ok(())
}

/// Evaluates `scheme` at a user-pinned gain. The gain is interpreted in
/// each scheme's own system: the coupled one for mcp/scp, the decoupled
/// one for directional antennas, the decoupled doubled-power one for the
/// time-slotted scheme.
fn forced_scheme(
    p: &SystemParams,
    scheme: SchemeArg,
    g: f64,
    quad: &QuadratureSettings,
) -> Result<(f64, f64, f64, &'static str), CliError> {
    let (rate_bits, relay_power) = match scheme {
        SchemeArg::Mcp => {
            let rate = mcp_rate_closed(p, g, quad)?;
            (rate.rate_bits, relay_power_closed(p, g)?)
        }
        SchemeArg::Scp => {
            let rate = scp_rate(p, g, quad)?;
            (rate.rate_bits, relay_power_closed(p, g)?)
        }
        SchemeArg::McpDa => {
            let decoupled = SystemParams { mu: 0.0, ..*p };
            let rate = mcp_rate_da(p, g, quad)?;
            (rate.rate_bits, relay_power_closed(&decoupled, g)?)
        }
        SchemeArg::McpHd => {
            let doubled = SystemParams {
                mu: 0.0,
                power_mt: 2.0 * p.power_mt,
                power_rt: 2.0 * p.power_rt,
                ..*p
            };
            let full = mcp_rate_da(&doubled, g, quad)?;
            (0.5 * full.rate_bits, relay_power_closed(&doubled, g)?)
        }
    };
    Ok((rate_bits, g, relay_power, "forced"))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Default grid for the coupling sweep: 0 to 0.45 in steps of 0.05.
/// Dividing (rather than accumulating) keeps each value correctly rounded,
/// so the grid prints as written: 0, 0.05, 0.1, ...
fn default_mu_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 20.0).collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config(path).map_err(usage)?,
        None => Default::default(),
    };
    // Flags override the file, field by field.
    let base = args.params.to_overrides().over(file.overrides);
    let sweep_var = args.var.or(file.sweep_var).unwrap_or(SweepVar::Mu);
    let values = match args.values.or(file.values) {
        Some(v) => v,
        None if sweep_var == SweepVar::Mu => default_mu_grid(),
        None => return Err(usage("--values is required when sweeping anything but mu")),
    };
    let schemes = args
        .schemes
        .or(file.schemes)
        .unwrap_or_else(|| vec![SchemeArg::Mcp, SchemeArg::Scp]);
    let output_format = args
        .output_format
        .or(file.output_format)
        .unwrap_or(OutputFormat::Csv);

    let base_point = base.resolve().map_err(usage)?;
    let spec = SweepSpec {
        sweep_var,
        values,
        schemes,
        output_format,
        params: ResolvedParams::new(&base_point, base.reference_sigma2()),
    };
    spec.validate().map_err(usage)?;

    let rows = run_sweep(&spec, &base, &cli_quad());
    match output_format {
        OutputFormat::Csv => print!("{}", to_csv(&rows)),
        OutputFormat::Json => println!("{}", to_json(&spec, rows)),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let p = args.params.to_overrides().resolve().map_err(usage)?;
    let analytic = match args.analytic_var_z {
        Some(var_z) => SystemParams { var_z, ..p }
            .validate()
            .map_err(|e| usage(e.to_string()))?,
        None => p,
    };
    let vcfg = ValidateConfig {
        gain: args.gain,
        num_cells: args.num_cells,
        num_symbols: args.num_symbols,
        burn_in: args.burn_in,
        seed: args.seed,
        segment_len: args.segment_len,
    };
    let report = run_validate(&p, &analytic, &vcfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    if report.pass {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}

//! Per-cell uplink sum-rates for a linear cellular array whose mobiles reach
//! the base stations only through full-duplex amplify-and-forward relays.
//!
//! The array is modeled as a 2D linear time-invariant system over (cell
//! index, symbol time). Everything the crate computes flows from the four
//! elementary transfer functions of that system and two processing
//! assumptions at the base stations:
//!
//! * **Joint processing** ([`mcp_rate`]): all base stations decode together;
//!   the per-cell sum-rate is a single-integral closed form, cross-checked
//!   here against a two-dimensional integral oracle.
//! * **Per-cell processing** ([`scp_rate`]): each base station decodes alone
//!   and treats other cells' signals as noise; the rate is an integral over
//!   a useful/interference/noise spectral decomposition.
//!
//! The relay gain is limited twice — by a relay output-power budget and by
//! the stability of the inter-relay feedback loop ([`relay_power`]) — and
//! every closed form is validated against
//! [quadrature oracles](quadrature) and a
//! [time-domain ring simulator](simulator).
//!
//! # Example
//!
//! ```
//! use relay_rates_core::{
//!     mcp_rate::mcp_rate_closed, quadrature::QuadratureSettings,
//!     relay_power::solve_optimal_gain_mcp, scp_rate::scp_rate, SystemParams,
//! };
//!
//! // Weak cross-gains, 10 dB mobile power, 20 dB relay budget.
//! let p = SystemParams::new(0.2, 0.8, 0.8, 0.2, 0.1, 10.0, 100.0, 1.0, 1.0, 1).unwrap();
//! let quad = QuadratureSettings::default();
//!
//! // Spend the whole relay budget, then compare the two processing modes.
//! let g = solve_optimal_gain_mcp(&p, 1e-10).unwrap().gain;
//! let joint = mcp_rate_closed(&p, g, &quad).unwrap();
//! let per_cell = scp_rate(&p, g, &quad).unwrap();
//! assert!(joint.rate_bits > per_cell.rate_bits);
//! ```

pub mod error;
pub mod mcp_rate;
pub mod params;
pub mod quadrature;
pub mod relay_power;
pub mod scp_rate;
pub mod simulator;
pub mod spectra;

pub use error::{Error, Result};
pub use params::{db_to_linear, Binding, GainSolution, SystemParams};

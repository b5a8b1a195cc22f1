//! Time-domain Monte Carlo oracle: a finite ring of cells running the exact
//! per-symbol recursions.
//!
//! Everything analytic in this crate describes an infinite line of cells.
//! The simulator closes the loop instead: `num_cells` cells on a ring
//! (wrap-around adjacency), each symbol drawing fresh i.i.d. circular
//! complex Gaussians and stepping
//!
//! ```text
//!   R[m,n] = g ( beta X[m,n] + alpha X[m-1,n] + alpha X[m+1,n]
//!              + mu R[m-1,n-lambda] + mu R[m+1,n-lambda] + Z[m,n] )
//!   Y[m,n] = gamma R[m,n-lambda] + eta R[m-1,n-lambda]
//!              + eta R[m+1,n-lambda] + W[m,n]
//! ```
//!
//! with `R` taken as zero before time 0 (the loop is stable, so the
//! stationary statistics forget the initial condition; a burn-in prefix is
//! discarded before estimating anything).
//!
//! The ring is the right truncation because it keeps the system circulant:
//! the spatial DFT diagonalizes it *exactly* at finite size, so the
//! analytic PSDs sampled at the ring's spatial modes `theta_k = 2 pi k /
//! num_cells` are the exact spectra of the simulated process — no edge
//! effects to excuse. Estimators here give the empirical relay output
//! power (batch means) and the empirical output PSD (spatial DFT followed
//! by a Welch-averaged temporal periodogram) with standard errors, which
//! the test suites hold against the closed forms.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::params::SystemParams;

const TRAJECTORY_MAGIC: &[u8; 8] = b"RINGTRAJ";
const RELAY_POWER_BATCHES: usize = 16;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Size, seed, and gain of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingConfig {
    /// Cells on the ring; at least 8 so wrap-around neighbours are distinct.
    pub num_cells: usize,
    /// Simulated symbols per cell.
    pub num_symbols: usize,
    /// Leading symbols discarded by the estimators.
    pub burn_in: usize,
    /// Seed for the deterministic generator.
    pub seed: u64,
    /// Relay gain `g`; must satisfy `2 mu g < 1`.
    pub gain: f64,
}

impl RingConfig {
    fn validate(&self, p: &SystemParams) -> Result<()> {
        if self.num_cells < 8 {
            return Err(Error::InvalidConfig {
                field: "num_cells",
                detail: format!("ring needs at least 8 cells, got {}", self.num_cells),
            });
        }
        if self.burn_in >= self.num_symbols {
            return Err(Error::InvalidConfig {
                field: "burn_in",
                detail: format!(
                    "burn-in {} must be shorter than the run of {} symbols",
                    self.burn_in, self.num_symbols
                ),
            });
        }
        p.check_stable_gain(self.gain)
    }
}

/// Default burn-in: `100 * lambda / (1 - 2 mu g)` symbols — a hundred times
/// the feedback loop's memory — capped at a quarter of the run.
pub fn default_burn_in(p: &SystemParams, gain: f64, num_symbols: usize) -> usize {
    let memory = 100.0 * p.lambda as f64 / (1.0 - 2.0 * p.mu * gain).max(1e-9);
    (memory.ceil() as usize).min(num_symbols / 4)
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Complete sample paths of one run. Arrays are symbol-major: the sample
/// for cell `m` at time `n` sits at index `n * num_cells + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingTrajectories {
    pub num_cells: usize,
    pub num_symbols: usize,
    /// Relay delay the run used (copied from the parameters).
    pub lambda: u32,
    x: Vec<Complex64>,
    r: Vec<Complex64>,
    y: Vec<Complex64>,
    z: Vec<Complex64>,
    w: Vec<Complex64>,
}

impl RingTrajectories {
    #[inline]
    fn idx(&self, m: usize, n: usize) -> usize {
        debug_assert!(m < self.num_cells && n < self.num_symbols);
        n * self.num_cells + m
    }

    /// MT signal of cell `m` at time `n`.
    pub fn x(&self, m: usize, n: usize) -> Complex64 {
        self.x[self.idx(m, n)]
    }

    /// Relay output of cell `m` at time `n`.
    pub fn r(&self, m: usize, n: usize) -> Complex64 {
        self.r[self.idx(m, n)]
    }

    /// BS antenna signal of cell `m` at time `n`.
    pub fn y(&self, m: usize, n: usize) -> Complex64 {
        self.y[self.idx(m, n)]
    }

    /// Relay-stage noise of cell `m` at time `n`. Zero when the value was
    /// read back from a dump (the file format stores `X`, `R`, `Y` only).
    pub fn z(&self, m: usize, n: usize) -> Complex64 {
        self.z[self.idx(m, n)]
    }

    /// BS-stage noise of cell `m` at time `n`. Zero when read from a dump.
    pub fn w(&self, m: usize, n: usize) -> Complex64 {
        self.w[self.idx(m, n)]
    }
}

/// Runs the ring recursion.
///
/// Randomness is a single ChaCha stream consumed in a fixed order — per
/// symbol: the `X` row, then the `Z` row, then the `W` row, each cell-major,
/// two standard normals per complex sample — so identical `(params, config)`
/// reproduce identical trajectories bit for bit, and runs differing only in
/// `lambda` share their noise realizations.
///
/// The parameter fields are used as given (a zero power is a legitimate
/// degenerate experiment here); only the config invariants and loop
/// stability are enforced.
pub fn run_ring(p: &SystemParams, cfg: &RingConfig) -> Result<RingTrajectories> {
    cfg.validate(p)?;
    let m_cells = cfg.num_cells;
    let t_total = cfg.num_symbols;
    let lambda = p.lambda as usize;
    let g = cfg.gain;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sd_x = (p.power_mt / 2.0).sqrt();
    let sd_z = (p.var_z / 2.0).sqrt();
    let sd_w = (p.var_w / 2.0).sqrt();
    let draw_row = |buf: &mut Vec<Complex64>, sd: f64, rng: &mut ChaCha8Rng| {
        for _ in 0..m_cells {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            buf.push(Complex64::new(sd * re, sd * im));
        }
    };

    let total = m_cells * t_total;
    let mut x = Vec::with_capacity(total);
    let mut z = Vec::with_capacity(total);
    let mut w = Vec::with_capacity(total);
    let mut r = vec![Complex64::new(0.0, 0.0); total];
    let mut y = vec![Complex64::new(0.0, 0.0); total];

    for n in 0..t_total {
        draw_row(&mut x, sd_x, &mut rng);
        draw_row(&mut z, sd_z, &mut rng);
        draw_row(&mut w, sd_w, &mut rng);

        let row = n * m_cells;
        let delayed = n.checked_sub(lambda).map(|nd| nd * m_cells);
        for m in 0..m_cells {
            let left = (m + m_cells - 1) % m_cells;
            let right = (m + 1) % m_cells;
            let feedback = match delayed {
                Some(d) => r[d + left] + r[d + right],
                None => Complex64::new(0.0, 0.0),
            };
            r[row + m] = g
                * (p.beta * x[row + m]
                    + p.alpha * (x[row + left] + x[row + right])
                    + p.mu * feedback
                    + z[row + m]);
        }
        for m in 0..m_cells {
            let left = (m + m_cells - 1) % m_cells;
            let right = (m + 1) % m_cells;
            let heard = match delayed {
                Some(d) => p.gamma * r[d + m] + p.eta * (r[d + left] + r[d + right]),
                None => Complex64::new(0.0, 0.0),
            };
            y[row + m] = heard + w[row + m];
        }
    }

    Ok(RingTrajectories {
        num_cells: m_cells,
        num_symbols: t_total,
        lambda: p.lambda,
        x,
        r,
        y,
        z,
        w,
    })
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Empirical relay output power: mean of `|R|^2` over all cells and
/// post-burn-in symbols, with a batch-means standard error (16 contiguous
/// time batches).
pub fn estimate_relay_power(traj: &RingTrajectories, cfg: &RingConfig) -> Result<(f64, f64)> {
    let usable = traj.num_symbols.saturating_sub(cfg.burn_in);
    if usable < RELAY_POWER_BATCHES {
        return Err(Error::InsufficientSamples {
            detail: format!(
                "{usable} post-burn-in symbols cannot fill {RELAY_POWER_BATCHES} batches"
            ),
        });
    }
    let batch_len = usable / RELAY_POWER_BATCHES;
    let mut batch_means = [0.0f64; RELAY_POWER_BATCHES];
    for (b, mean) in batch_means.iter_mut().enumerate() {
        let start = cfg.burn_in + b * batch_len;
        let mut acc = 0.0;
        for n in start..start + batch_len {
            for m in 0..traj.num_cells {
                acc += traj.r(m, n).norm_sqr();
            }
        }
        *mean = acc / (batch_len * traj.num_cells) as f64;
    }
    let mean = batch_means.iter().sum::<f64>() / RELAY_POWER_BATCHES as f64;
    let var = batch_means
        .iter()
        .map(|b| (b - mean) * (b - mean))
        .sum::<f64>()
        / (RELAY_POWER_BATCHES - 1) as f64;
    Ok((mean, (var / RELAY_POWER_BATCHES as f64).sqrt()))
}

/// Empirical estimates from one run: relay power and the output PSD over
/// (spatial mode, temporal bin), each with standard errors.
///
/// `psd_output[k][j]` estimates the output PSD at spatial frequency
/// `theta = 2 pi k / num_cells` and temporal frequency
/// `phi = 2 pi j / segment_len`.
#[derive(Debug, Clone)]
pub struct SimulationEstimate {
    pub relay_power_mean: f64,
    pub relay_power_stderr: f64,
    /// `num_cells` rows of `segment_len` bins.
    pub psd_output: Vec<Vec<f64>>,
    /// Same shape as `psd_output`.
    pub psd_stderr: Vec<Vec<f64>>,
    /// Temporal segment length the periodograms used.
    pub segment_len: usize,
    /// Number of (half-overlapping) segments averaged.
    pub num_segments: usize,
}

/// Estimates the output PSD on the (spatial mode, temporal bin) grid.
///
/// Per post-burn-in symbol, a unitary DFT across the ring splits `Y` into
/// spatial modes; each mode's time series is then cut into
/// `segment_len`-long, 50%-overlapping segments, and flat-window
/// periodograms `|FFT|^2 / segment_len` are averaged across segments.
/// The normalization makes a white input of variance `v` read back as a
/// flat PSD at level `v`. Standard errors are per-bin sample errors across
/// segments (overlap makes them mildly conservative to interpret, not
/// biased).
pub fn estimate_output_psd(
    traj: &RingTrajectories,
    cfg: &RingConfig,
    segment_len: usize,
) -> Result<SimulationEstimate> {
    if segment_len < 256 {
        return Err(Error::InsufficientSamples {
            detail: format!("segment length {segment_len} below the minimum of 256"),
        });
    }
    let usable = traj.num_symbols.saturating_sub(cfg.burn_in);
    let hop = segment_len / 2;
    let num_segments = if usable >= segment_len {
        (usable - segment_len) / hop + 1
    } else {
        0
    };
    if num_segments < 64 {
        return Err(Error::InsufficientSamples {
            detail: format!(
                "{usable} post-burn-in symbols give {num_segments} segments of {segment_len}; \
                 at least 64 are required"
            ),
        });
    }

    let m_cells = traj.num_cells;
    let (relay_power_mean, relay_power_stderr) = estimate_relay_power(traj, cfg)?;

    let mut planner = FftPlanner::new();
    let spatial_fft = planner.plan_fft_forward(m_cells);
    let temporal_fft = planner.plan_fft_forward(segment_len);

    // Spatial DFT per symbol, gathered mode-major for the temporal pass.
    let spatial_scale = 1.0 / (m_cells as f64).sqrt();
    let mut modes = vec![Complex64::new(0.0, 0.0); m_cells * usable];
    let mut row = vec![Complex64::new(0.0, 0.0); m_cells];
    for t in 0..usable {
        let n = cfg.burn_in + t;
        for m in 0..m_cells {
            row[m] = traj.y(m, n);
        }
        spatial_fft.process(&mut row);
        for k in 0..m_cells {
            modes[k * usable + t] = row[k] * spatial_scale;
        }
    }

    let mut psd_output = vec![vec![0.0f64; segment_len]; m_cells];
    let mut psd_sq = vec![vec![0.0f64; segment_len]; m_cells];
    let mut seg = vec![Complex64::new(0.0, 0.0); segment_len];
    for k in 0..m_cells {
        let series = &modes[k * usable..(k + 1) * usable];
        for s in 0..num_segments {
            let start = s * hop;
            seg.copy_from_slice(&series[start..start + segment_len]);
            temporal_fft.process(&mut seg);
            for (j, v) in seg.iter().enumerate() {
                let pxx = v.norm_sqr() / segment_len as f64;
                psd_output[k][j] += pxx;
                psd_sq[k][j] += pxx * pxx;
            }
        }
        for j in 0..segment_len {
            let mean = psd_output[k][j] / num_segments as f64;
            let var = (psd_sq[k][j] / num_segments as f64 - mean * mean).max(0.0)
                * num_segments as f64
                / (num_segments - 1) as f64;
            psd_output[k][j] = mean;
            psd_sq[k][j] = (var / num_segments as f64).sqrt();
        }
    }

    Ok(SimulationEstimate {
        relay_power_mean,
        relay_power_stderr,
        psd_output,
        psd_stderr: psd_sq,
        segment_len,
        num_segments,
    })
}

// ---------------------------------------------------------------------------
// Trajectory dump
// ---------------------------------------------------------------------------

/// Writes `(X, R, Y)` to a binary file: a 32-byte header — the magic
/// `"RINGTRAJ"`, then `num_cells`, `num_symbols`, `lambda` as little-endian
/// u64 — followed by symbol-major, cell-major triples of complex samples,
/// each component a little-endian f32 (so the dump is single-precision).
pub fn write_trajectories(traj: &RingTrajectories, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(TRAJECTORY_MAGIC)?;
    out.write_all(&(traj.num_cells as u64).to_le_bytes())?;
    out.write_all(&(traj.num_symbols as u64).to_le_bytes())?;
    out.write_all(&(traj.lambda as u64).to_le_bytes())?;
    for n in 0..traj.num_symbols {
        for m in 0..traj.num_cells {
            for v in [traj.x(m, n), traj.r(m, n), traj.y(m, n)] {
                out.write_all(&(v.re as f32).to_le_bytes())?;
                out.write_all(&(v.im as f32).to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a dump written by [`write_trajectories`]. The noise arrays are not
/// part of the format and come back as zeros.
pub fn read_trajectories(path: &Path) -> Result<RingTrajectories> {
    let mut input = BufReader::new(File::open(path)?);
    let mut header = [0u8; 32];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::MalformedTrajectoryFile {
            detail: "file shorter than the 32-byte header".into(),
        })?;
    if &header[0..8] != TRAJECTORY_MAGIC {
        return Err(Error::MalformedTrajectoryFile {
            detail: "bad magic; not a trajectory dump".into(),
        });
    }
    let read_u64 = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("slice is 8 bytes"));
    let num_cells = read_u64(&header[8..16]) as usize;
    let num_symbols = read_u64(&header[16..24]) as usize;
    let lambda = read_u64(&header[24..32]);
    if num_cells == 0 || num_symbols == 0 || lambda == 0 || lambda > u32::MAX as u64 {
        return Err(Error::MalformedTrajectoryFile {
            detail: format!(
                "implausible header: {num_cells} cells, {num_symbols} symbols, delay {lambda}"
            ),
        });
    }
    let total =
        num_cells
            .checked_mul(num_symbols)
            .ok_or_else(|| Error::MalformedTrajectoryFile {
                detail: "cell/symbol counts overflow".into(),
            })?;

    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != total * 24 {
        return Err(Error::MalformedTrajectoryFile {
            detail: format!(
                "payload is {} bytes, expected {} for {num_cells} x {num_symbols} triples",
                payload.len(),
                total * 24
            ),
        });
    }

    let mut x = Vec::with_capacity(total);
    let mut r = Vec::with_capacity(total);
    let mut y = Vec::with_capacity(total);
    let f32_at = |bytes: &[u8]| f32::from_le_bytes(bytes.try_into().expect("slice is 4 bytes"));
    for i in 0..total {
        let base = i * 24;
        let mut triple = [Complex64::new(0.0, 0.0); 3];
        for (t, slot) in triple.iter_mut().enumerate() {
            let off = base + t * 8;
            *slot = Complex64::new(
                f32_at(&payload[off..off + 4]) as f64,
                f32_at(&payload[off + 4..off + 8]) as f64,
            );
        }
        x.push(triple[0]);
        r.push(triple[1]);
        y.push(triple[2]);
    }

    Ok(RingTrajectories {
        num_cells,
        num_symbols,
        lambda: lambda as u32,
        x,
        r,
        y,
        z: vec![Complex64::new(0.0, 0.0); total],
        w: vec![Complex64::new(0.0, 0.0); total],
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relay_power::relay_power_closed;
    use crate::spectra::{noise_psd, signal_psd, FreqPair};

    fn baseline(mu: f64) -> SystemParams {
        SystemParams::new(0.2, 0.8, 0.8, 0.2, mu, 10.0, 100.0, 1.0, 1.0, 1).unwrap()
    }

    fn small_cfg(p: &SystemParams, gain: f64, seed: u64) -> RingConfig {
        let num_symbols = 1 << 14;
        RingConfig {
            num_cells: 32,
            num_symbols,
            burn_in: default_burn_in(p, gain, num_symbols),
            seed,
            gain,
        }
    }

    #[test]
    fn silent_inputs_silence_the_relay() {
        // MT power and relay noise off: nothing circulates, Y is pure W.
        let p = SystemParams {
            power_mt: 0.0,
            var_z: 0.0,
            ..baseline(0.3)
        };
        let cfg = RingConfig {
            num_cells: 8,
            num_symbols: 64,
            burn_in: 0,
            seed: 7,
            gain: 1.2,
        };
        let traj = run_ring(&p, &cfg).unwrap();
        for n in 0..cfg.num_symbols {
            for m in 0..cfg.num_cells {
                assert_eq!(traj.r(m, n), Complex64::new(0.0, 0.0));
                assert_eq!(traj.y(m, n), traj.w(m, n));
            }
        }
    }

    #[test]
    fn zero_gain_silences_the_relay() {
        let p = baseline(0.1);
        let cfg = RingConfig {
            num_cells: 8,
            num_symbols: 64,
            burn_in: 0,
            seed: 7,
            gain: 0.0,
        };
        let traj = run_ring(&p, &cfg).unwrap();
        for n in 0..cfg.num_symbols {
            for m in 0..cfg.num_cells {
                assert_eq!(traj.r(m, n), Complex64::new(0.0, 0.0));
                assert_eq!(traj.y(m, n), traj.w(m, n));
            }
        }
        let (mean, stderr) = estimate_relay_power(&traj, &cfg).unwrap();
        assert_eq!(mean, 0.0);
        assert_eq!(stderr, 0.0);
    }

    #[test]
    fn no_coupling_recursion_is_memoryless() {
        // With mu = 0 the relay output is a pure function of same-time
        // inputs; rebuild it from the stored draws.
        let mut p = baseline(0.0);
        p.lambda = 1;
        let cfg = RingConfig {
            num_cells: 16,
            num_symbols: 256,
            burn_in: 0,
            seed: 42,
            gain: 0.7,
        };
        let traj = run_ring(&p, &cfg).unwrap();
        for n in 0..cfg.num_symbols {
            for m in 0..cfg.num_cells {
                let left = (m + 15) % 16;
                let right = (m + 1) % 16;
                let expect = cfg.gain
                    * (p.beta * traj.x(m, n)
                        + p.alpha * (traj.x(left, n) + traj.x(right, n))
                        + traj.z(m, n));
                let diff = (traj.r(m, n) - expect).norm();
                assert!(diff <= 1e-14 * expect.norm().max(1.0), "cell {m} time {n}");
            }
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_paths() {
        let p = baseline(0.1);
        let cfg = small_cfg(&p, 0.4, 123);
        let a = run_ring(&p, &cfg).unwrap();
        let b = run_ring(&p, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_undersized_rings_and_unstable_gains() {
        let p = baseline(0.25);
        let bad_ring = RingConfig {
            num_cells: 4,
            num_symbols: 64,
            burn_in: 0,
            seed: 1,
            gain: 0.1,
        };
        assert!(matches!(
            run_ring(&p, &bad_ring),
            Err(Error::InvalidConfig { .. })
        ));
        let unstable = RingConfig {
            num_cells: 8,
            num_symbols: 64,
            burn_in: 0,
            seed: 1,
            gain: 2.0, // 2 * 0.25 * 2 = 1
        };
        assert!(matches!(
            run_ring(&p, &unstable),
            Err(Error::UnstableGain { .. })
        ));
        let eats_itself = RingConfig {
            num_cells: 8,
            num_symbols: 64,
            burn_in: 64,
            seed: 1,
            gain: 0.1,
        };
        assert!(run_ring(&p, &eats_itself).is_err());
    }

    #[test]
    fn relay_power_estimate_brackets_the_closed_form() {
        let p = baseline(0.1);
        let cfg = small_cfg(&p, 0.4, 2024);
        let traj = run_ring(&p, &cfg).unwrap();
        let (mean, stderr) = estimate_relay_power(&traj, &cfg).unwrap();
        let analytic = relay_power_closed(&p, cfg.gain).unwrap();
        let z = (mean - analytic) / stderr;
        assert!(
            z.abs() <= 4.0,
            "z = {z}: mean {mean} vs analytic {analytic}"
        );
    }

    #[test]
    fn relay_power_is_invariant_to_the_delay() {
        let mut p = baseline(0.1);
        let cfg = small_cfg(&p, 0.4, 555);
        let (m1, s1) = {
            let traj = run_ring(&p, &cfg).unwrap();
            estimate_relay_power(&traj, &cfg).unwrap()
        };
        p.lambda = 3;
        let (m3, s3) = {
            let traj = run_ring(&p, &cfg).unwrap();
            estimate_relay_power(&traj, &cfg).unwrap()
        };
        let z = (m1 - m3) / (s1 * s1 + s3 * s3).sqrt();
        assert!(z.abs() <= 4.0, "z = {z}");
    }

    #[test]
    fn doubling_the_ring_does_not_move_the_estimate() {
        // Spatial correlations decay geometrically, so 32 cells already
        // behave like the infinite line to well within one standard error.
        let p = baseline(0.1);
        let mut cfg32 = small_cfg(&p, 0.4, 9013);
        cfg32.num_cells = 32;
        let mut cfg64 = cfg32;
        cfg64.num_cells = 64;
        let (m32, s32) = {
            let t = run_ring(&p, &cfg32).unwrap();
            estimate_relay_power(&t, &cfg32).unwrap()
        };
        let (m64, s64) = {
            let t = run_ring(&p, &cfg64).unwrap();
            estimate_relay_power(&t, &cfg64).unwrap()
        };
        let combined = (s32 * s32 + s64 * s64).sqrt();
        assert!(
            (m32 - m64).abs() <= combined,
            "sizes disagree: {m32} vs {m64} (combined stderr {combined})"
        );
    }

    #[test]
    fn batch_means_show_no_time_trend_after_burn_in() {
        let p = baseline(0.2);
        let gain = 2.0; // 2 mu g = 0.8: long memory, a real burn-in test
        let num_symbols = 1 << 14;
        let cfg = RingConfig {
            num_cells: 32,
            num_symbols,
            burn_in: default_burn_in(&p, gain, num_symbols),
            seed: 31337,
            gain,
        };
        assert!(cfg.burn_in >= 50 * p.lambda as usize); // loop memory x50
        let traj = run_ring(&p, &cfg).unwrap();

        // Regress per-batch means of |R|^2 on the batch index; the slope's
        // t-statistic should be unremarkable at the 5% level.
        let batches = 16usize;
        let usable = cfg.num_symbols - cfg.burn_in;
        let len = usable / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| {
                let start = cfg.burn_in + b * len;
                let mut acc = 0.0;
                for n in start..start + len {
                    for m in 0..cfg.num_cells {
                        acc += traj.r(m, n).norm_sqr();
                    }
                }
                acc / (len * cfg.num_cells) as f64
            })
            .collect();
        let n = batches as f64;
        let tbar = (n - 1.0) / 2.0;
        let ybar = means.iter().sum::<f64>() / n;
        let sxx: f64 = (0..batches).map(|i| (i as f64 - tbar).powi(2)).sum();
        let sxy: f64 = means
            .iter()
            .enumerate()
            .map(|(i, y)| (i as f64 - tbar) * (y - ybar))
            .sum();
        let slope = sxy / sxx;
        let residual_var: f64 = means
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let fit = ybar + slope * (i as f64 - tbar);
                (y - fit) * (y - fit)
            })
            .sum::<f64>()
            / (n - 2.0);
        let t = slope / (residual_var / sxx).sqrt();
        assert!(t.abs() < 2.145, "trend detected: t = {t}"); // t(14), 5%
    }

    #[test]
    fn psd_of_pure_bs_noise_is_flat() {
        let p = baseline(0.1);
        let num_symbols = 1 << 14;
        let cfg = RingConfig {
            num_cells: 16,
            num_symbols,
            burn_in: 0,
            seed: 77,
            gain: 0.0,
        };
        let traj = run_ring(&p, &cfg).unwrap();
        let est = estimate_output_psd(&traj, &cfg, 256).unwrap();
        let mut outside = 0usize;
        let mut grand = 0.0;
        for k in 0..16 {
            for j in 0..256 {
                let z = (est.psd_output[k][j] - p.var_w) / est.psd_stderr[k][j];
                if z.abs() > 4.0 {
                    outside += 1;
                }
                grand += est.psd_output[k][j];
            }
        }
        grand /= (16 * 256) as f64;
        let frac = outside as f64 / (16.0 * 256.0);
        assert!(frac < 0.05, "{outside} bins outside 4 stderr");
        assert!(
            (grand - p.var_w).abs() < 0.02 * p.var_w,
            "grand mean {grand}"
        );
    }

    #[test]
    fn psd_of_isolated_cells_is_flat_at_the_closed_level() {
        let p = SystemParams::new(0.0, 0.8, 0.8, 0.0, 0.0, 10.0, 100.0, 1.0, 1.0, 1).unwrap();
        let g = 0.9;
        let num_symbols = 1 << 14;
        let cfg = RingConfig {
            num_cells: 16,
            num_symbols,
            burn_in: default_burn_in(&p, g, num_symbols),
            seed: 4242,
            gain: g,
        };
        let traj = run_ring(&p, &cfg).unwrap();
        let est = estimate_output_psd(&traj, &cfg, 256).unwrap();
        let level = 10.0 * g * g * 0.8f64.powi(4) + g * g * 0.8 * 0.8 + 1.0;
        let mut outside = 0usize;
        for k in 0..16 {
            for j in 0..256 {
                let z = (est.psd_output[k][j] - level) / est.psd_stderr[k][j];
                if z.abs() > 4.0 {
                    outside += 1;
                }
            }
        }
        let frac = outside as f64 / (16.0 * 256.0);
        assert!(frac < 0.05, "{outside} bins outside 4 stderr");
    }

    #[test]
    fn psd_tracks_the_analytic_spectra_bin_by_bin() {
        let p = baseline(0.1);
        let cfg = small_cfg(&p, 0.4, 60601);
        let traj = run_ring(&p, &cfg).unwrap();
        let est = estimate_output_psd(&traj, &cfg, 256).unwrap();
        let tau = std::f64::consts::TAU;
        let mut outside = 0usize;
        let mut total = 0usize;
        for k in 0..cfg.num_cells {
            let theta = tau * k as f64 / cfg.num_cells as f64;
            for j in 0..est.segment_len {
                let phi = tau * j as f64 / est.segment_len as f64;
                let f = FreqPair { theta, phi };
                let analytic =
                    signal_psd(&p, cfg.gain, f).unwrap() + noise_psd(&p, cfg.gain, f).unwrap();
                let z = (est.psd_output[k][j] - analytic) / est.psd_stderr[k][j];
                total += 1;
                if z.abs() > 4.0 {
                    outside += 1;
                }
            }
        }
        assert!(
            (outside as f64) < 0.05 * total as f64,
            "{outside} of {total} bins outside 4 stderr"
        );
    }

    #[test]
    fn too_little_data_is_refused() {
        let p = baseline(0.1);
        let cfg = RingConfig {
            num_cells: 8,
            num_symbols: 512,
            burn_in: 500,
            seed: 5,
            gain: 0.4,
        };
        let traj = run_ring(&p, &cfg).unwrap();
        assert!(matches!(
            estimate_relay_power(&traj, &cfg),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(matches!(
            estimate_output_psd(&traj, &cfg, 256),
            Err(Error::InsufficientSamples { .. })
        ));
        let short_segments = RingConfig { burn_in: 0, ..cfg };
        let traj = run_ring(&p, &short_segments).unwrap();
        assert!(matches!(
            estimate_output_psd(&traj, &short_segments, 128),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn trajectory_dump_round_trips() {
        let p = baseline(0.1);
        let cfg = RingConfig {
            num_cells: 8,
            num_symbols: 128,
            burn_in: 0,
            seed: 99,
            gain: 0.4,
        };
        let traj = run_ring(&p, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path_a = dir.path().join("run.trj");
        let path_b = dir.path().join("run2.trj");
        write_trajectories(&traj, &path_a).unwrap();
        let back = read_trajectories(&path_a).unwrap();
        assert_eq!(back.num_cells, 8);
        assert_eq!(back.num_symbols, 128);
        assert_eq!(back.lambda, 1);
        for n in 0..128 {
            for m in 0..8 {
                // The format is single-precision; values agree to f32 eps.
                assert!((back.x(m, n) - traj.x(m, n)).norm() <= 1e-6 * traj.x(m, n).norm() + 1e-7);
                assert!((back.r(m, n) - traj.r(m, n)).norm() <= 1e-6 * traj.r(m, n).norm() + 1e-7);
                assert!((back.y(m, n) - traj.y(m, n)).norm() <= 1e-6 * traj.y(m, n).norm() + 1e-7);
            }
        }
        // Re-dumping the read-back trajectories is byte-identical.
        write_trajectories(&back, &path_b).unwrap();
        assert_eq!(
            std::fs::read(&path_a).unwrap(),
            std::fs::read(&path_b).unwrap()
        );
    }

    #[test]
    fn malformed_dumps_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.trj");
        std::fs::write(&path, b"NOTATRAJ").unwrap();
        assert!(matches!(
            read_trajectories(&path),
            Err(Error::MalformedTrajectoryFile { .. })
        ));
        let mut bytes = Vec::new();
        bytes.extend_from_slice(TRAJECTORY_MAGIC);
        bytes.extend_from_slice(&8u64.to_le_bytes());
        bytes.extend_from_slice(&4u64.to_le_bytes());
        bytes.extend_from_slice(&1u64.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 100]); // truncated payload
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_trajectories(&path),
            Err(Error::MalformedTrajectoryFile { .. })
        ));
    }
}

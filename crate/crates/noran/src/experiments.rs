//! Monte Carlo sweep harness: secrecy capacity and eavesdropper bit error
//! rate over grids of antenna counts and SNRs, with deterministic per-trial
//! seeding and CSV output.
//!
//! SNRs are defined power-fair as `P / sigma_n2` (legitimate side) and
//! `P / sigma_e2` (eavesdropper side), so different injection modes compare
//! at the same total transmit power. Every trial derives its own seed from
//! `(master_seed, trial_index, grid_hash)`; the grid hash covers the sweep
//! kind and grid coordinates but not the injection mode, so A-vs-B mode
//! comparisons at the same master seed see identical channel and noise draws
//! (paired seeds). Aggregation collects per-trial results in trial order and
//! reduces them with pairwise summation, making output bytes independent of
//! the worker count.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    effective_gain, sample_rayleigh_channel, select_precoder, transmit, ChannelRealization,
    Precoder, PrecoderMode,
};
use crate::codebook::{build_codebook_with, fnv1a64, lookup, BuildOptions, EveGainModel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::optimizer::{ccp_solve, CcpConfig, DcObjective};
use crate::rng::{derive_seed, RngStream};
use crate::secrecy::{secrecy_from_gains, PowerAllocation};

/// Symbol constellation for bit-error sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    Bpsk,
}

/// Artificial-noise injection policy for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoranMode {
    /// No injected noise: all power on the signal.
    Off,
    /// Fixed injected-noise power; the signal gets the remaining budget.
    Fixed(f64),
    /// Power split from the concave-convex solver; the legitimate receiver
    /// does not cancel (no codebook).
    Optimized,
    /// Same optimized split, with codebook build/lookup and receiver-side
    /// cancellation.
    OptimizedWithCodebook,
}

impl NoranMode {
    fn label(&self) -> String {
        match self {
            NoranMode::Off => "off".into(),
            NoranMode::Fixed(k) => format!("fixed({})", fmt_sig9(*k)),
            NoranMode::Optimized => "optimized".into(),
            NoranMode::OptimizedWithCodebook => "optimized-with-codebook".into(),
        }
    }
}

/// Full sweep description. Defaults give a smoke-sized run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_tx: Vec<usize>,
    pub n_rx: Vec<usize>,
    pub n_eve: Vec<usize>,
    /// Legitimate-side SNR grid, dB, defined as `P / sigma_n2`.
    pub snr_bob_db: Vec<f64>,
    /// Eavesdropper-side SNR grid, dB, defined as `P / sigma_e2`.
    pub snr_eve_db: Vec<f64>,
    pub p_budget: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub modulation: Modulation,
    pub noran_mode: NoranMode,
    pub precoder_mode: PrecoderMode,
    /// CSI quantization step for codebook builds.
    pub delta: f64,
    /// Symbols per trial in bit-error sweeps.
    pub symbols_per_trial: usize,
    pub ccp: CcpConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_tx: vec![2],
            n_rx: vec![2],
            n_eve: vec![2],
            snr_bob_db: vec![0.0, 10.0, 20.0],
            snr_eve_db: vec![10.0],
            p_budget: 10.0,
            trials: 50,
            master_seed: 1,
            modulation: Modulation::Bpsk,
            noran_mode: NoranMode::Optimized,
            precoder_mode: PrecoderMode::MaxGain,
            delta: 0.1,
            symbols_per_trial: 10_000,
            ccp: CcpConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if self.trials == 0 {
            return invalid("trials must be >= 1".into());
        }
        for (name, grid) in [("n_tx", &self.n_tx), ("n_rx", &self.n_rx), ("n_eve", &self.n_eve)] {
            if grid.is_empty() {
                return invalid(format!("{name} grid must be non-empty"));
            }
            if grid.iter().any(|&n| n == 0) {
                return invalid(format!("{name} entries must be >= 1"));
            }
        }
        for (name, grid) in [("snr_bob_db", &self.snr_bob_db), ("snr_eve_db", &self.snr_eve_db)] {
            if grid.is_empty() {
                return invalid(format!("{name} grid must be non-empty"));
            }
            if grid.iter().any(|x| !x.is_finite()) {
                return invalid(format!("{name} entries must be finite"));
            }
        }
        if !(self.p_budget > 0.0 && self.p_budget.is_finite()) {
            return invalid(format!("p_budget must be positive, got {}", self.p_budget));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return invalid(format!("delta must be positive, got {}", self.delta));
        }
        if let NoranMode::Fixed(k) = self.noran_mode {
            if !(k >= 0.0 && k <= self.p_budget) {
                return invalid(format!(
                    "fixed noise power {k} must lie within [0, p_budget={}]",
                    self.p_budget
                ));
            }
        }
        if self.symbols_per_trial < 10_000 {
            return invalid(format!(
                "symbols_per_trial must be >= 10000 for a meaningful bit-error estimate, got {}",
                self.symbols_per_trial
            ));
        }
        self.ccp.validate()
    }
}

/// Which sweep a grid hash belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    SecrecyCapacity,
    BitErrorRate,
}

/// Canonical hash of one grid point, mixed into per-trial seeds. The
/// injection mode is deliberately not hashed: sweeps that differ only in mode
/// share channel and noise draws.
pub fn grid_hash(
    kind: SweepKind,
    n_tx: usize,
    n_rx: usize,
    n_eve: usize,
    snr_bob_db: f64,
    snr_eve_db: f64,
) -> u64 {
    let mut bytes = Vec::with_capacity(29);
    bytes.push(match kind {
        SweepKind::SecrecyCapacity => 0u8,
        SweepKind::BitErrorRate => 1u8,
    });
    bytes.extend_from_slice(&(n_tx as u32).to_le_bytes());
    bytes.extend_from_slice(&(n_rx as u32).to_le_bytes());
    bytes.extend_from_slice(&(n_eve as u32).to_le_bytes());
    bytes.extend_from_slice(&snr_bob_db.to_bits().to_le_bytes());
    bytes.extend_from_slice(&snr_eve_db.to_bits().to_le_bytes());
    fnv1a64(&bytes)
}

/// Pooled bit-error estimate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerStats {
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub errors: u64,
    pub symbols: u64,
}

fn wilson_interval(errors: u64, symbols: u64) -> BerStats {
    let z = 1.959963984540054f64;
    let n = symbols as f64;
    let p_hat = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    BerStats {
        mean: p_hat,
        lo95: (center - half).max(0.0),
        hi95: (center + half).min(1.0),
        errors,
        symbols,
    }
}

/// One aggregated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_eve: usize,
    pub snr_bob_db: f64,
    pub snr_eve_db: f64,
    pub mode: NoranMode,
    pub trials: usize,
    pub c_bob_mean: f64,
    pub c_eve_mean: f64,
    pub sc_raw_mean: f64,
    pub sc_raw_std: f64,
    pub sc_clamped_mean: f64,
    /// Present for bit-error sweeps only.
    pub ber: Option<BerStats>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct TrialCapacities {
    c_bob: f64,
    c_eve: f64,
    raw: f64,
    clamped: f64,
}

/// Deterministic pairwise summation; reduction order is fixed by the slice
/// layout, not the worker count.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, var.sqrt())
}

fn noise_powers(p_budget: f64, snr_bob_db: f64, snr_eve_db: f64) -> (f64, f64) {
    let sigma_n2 = p_budget / 10f64.powf(snr_bob_db / 10.0);
    let sigma_e2 = p_budget / 10f64.powf(snr_eve_db / 10.0);
    (sigma_n2, sigma_e2)
}

/// Per-trial resolution of the injection mode: the power split, whether the
/// legitimate receiver cancels, and the precoder actually transmitted with.
fn resolve_mode(
    cfg: &ExperimentConfig,
    ch: &ChannelRealization,
    p: &Precoder,
    trial_seed: u64,
) -> Result<(PowerAllocation, bool, Precoder)> {
    let plain = |u: f64, k: f64| PowerAllocation {
        sigma_u2: u,
        sigma_k2: k,
        p_budget: cfg.p_budget,
    };
    match cfg.noran_mode {
        NoranMode::Off => Ok((plain(cfg.p_budget, 0.0), false, p.clone())),
        NoranMode::Fixed(k) => Ok((plain(cfg.p_budget - k, k), false, p.clone())),
        NoranMode::Optimized => {
            let dc = DcObjective::new(
                effective_gain(&ch.g, p)?,
                effective_gain(&ch.h, p)?,
                ch.sigma_n2,
                ch.sigma_e2,
                cfg.p_budget,
            )?;
            let state = ccp_solve(&dc, &cfg.ccp)?;
            Ok((state.alloc, false, p.clone()))
        }
        NoranMode::OptimizedWithCodebook => {
            let cb = build_codebook_with(
                std::slice::from_ref(ch),
                cfg.delta,
                cfg.p_budget,
                &cfg.ccp,
                trial_seed,
                BuildOptions {
                    eve_model: EveGainModel::Genie,
                    precoder_mode: cfg.precoder_mode,
                },
            )?;
            let entry = lookup(&cb, &ch.h)?.ok_or_else(|| {
                Error::NumericalFailure("codebook lookup missed its own build input".into())
            })?;
            Ok((
                plain(entry.sigma_u2, entry.sigma_k2),
                true,
                entry.precoder.clone(),
            ))
        }
    }
}

fn draw_channel(
    cfg: &ExperimentConfig,
    n_tx: usize,
    n_rx: usize,
    n_eve: usize,
    sigma_n2: f64,
    sigma_e2: f64,
    rng: &mut RngStream,
) -> Result<(ChannelRealization, Precoder)> {
    let h = sample_rayleigh_channel(n_rx, n_tx, rng)?;
    let g = sample_rayleigh_channel(n_eve, n_tx, rng)?;
    let ch = ChannelRealization::new(h, g, sigma_n2, sigma_e2)?;
    let p = select_precoder(&ch.h, cfg.precoder_mode, rng)?;
    Ok((ch, p))
}

fn capacities_for_trial(
    ch: &ChannelRealization,
    used: &Precoder,
    alloc: &PowerAllocation,
    cancellation: bool,
) -> Result<TrialCapacities> {
    let report = secrecy_from_gains(
        effective_gain(&ch.h, used)?,
        effective_gain(&ch.g, used)?,
        alloc,
        ch.sigma_n2,
        ch.sigma_e2,
        cancellation,
    )?;
    Ok(TrialCapacities {
        c_bob: report.c_bob,
        c_eve: report.c_eve,
        raw: report.c_secrecy_raw,
        clamped: report.c_secrecy,
    })
}

fn sc_trial(
    cfg: &ExperimentConfig,
    n_tx: usize,
    n_rx: usize,
    n_eve: usize,
    sigma_n2: f64,
    sigma_e2: f64,
    trial_seed: u64,
) -> Result<TrialCapacities> {
    let mut rng = RngStream::from_seed(trial_seed);
    let (ch, p) = draw_channel(cfg, n_tx, n_rx, n_eve, sigma_n2, sigma_e2, &mut rng)?;
    let (alloc, cancellation, used) = resolve_mode(cfg, &ch, &p, trial_seed)?;
    capacities_for_trial(&ch, &used, &alloc, cancellation)
}

/// Eavesdropper bit-error count for one channel realization: BPSK symbols
/// through the eavesdropper's received-signal equation, maximal-ratio
/// combining with perfect knowledge of the effective channel (worst case for
/// the defender), hard decisions.
pub fn eve_ber_trial(
    ch: &ChannelRealization,
    p: &Precoder,
    alloc: &PowerAllocation,
    symbols: usize,
    rng: &mut RngStream,
) -> Result<(u64, u64)> {
    let gp = ch.g.matvec(p.as_slice())?;
    if linalg::vec_norm_sqr(&gp) <= 0.0 {
        // Combiner output carries no signal; every decision is a coin flip
        // against the transmitted bit. Count it by simulation anyway.
    }
    let s_amp = alloc.sigma_u2.sqrt();
    let k_sd = alloc.sigma_k2.sqrt();
    let mut errors = 0u64;
    for _ in 0..symbols {
        let bit_plus = rng.next_u64() & 1 == 0;
        let t = rng.next_cn01() * k_sd;
        let s = Complex64::new(if bit_plus { s_amp } else { -s_amp }, 0.0);
        let (_z, y) = transmit(ch, p, s, t, rng)?;
        let combined: Complex64 = gp.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
        let decided_plus = combined.re > 0.0;
        if decided_plus != bit_plus {
            errors += 1;
        }
    }
    Ok((errors, symbols as u64))
}

fn ber_trial(
    cfg: &ExperimentConfig,
    n_tx: usize,
    n_rx: usize,
    n_eve: usize,
    sigma_n2: f64,
    sigma_e2: f64,
    trial_seed: u64,
) -> Result<(u64, u64, TrialCapacities)> {
    let mut rng = RngStream::from_seed(trial_seed);
    let (ch, p) = draw_channel(cfg, n_tx, n_rx, n_eve, sigma_n2, sigma_e2, &mut rng)?;
    let (alloc, cancellation, used) = resolve_mode(cfg, &ch, &p, trial_seed)?;
    let caps = capacities_for_trial(&ch, &used, &alloc, cancellation)?;
    let (errors, symbols) = eve_ber_trial(&ch, &used, &alloc, cfg.symbols_per_trial, &mut rng)?;
    Ok((errors, symbols, caps))
}

fn grid_points(cfg: &ExperimentConfig) -> Vec<(usize, usize, usize, f64, f64)> {
    let mut points = Vec::new();
    for &n_tx in &cfg.n_tx {
        for &n_rx in &cfg.n_rx {
            for &n_eve in &cfg.n_eve {
                for &sb in &cfg.snr_bob_db {
                    for &se in &cfg.snr_eve_db {
                        points.push((n_tx, n_rx, n_eve, sb, se));
                    }
                }
            }
        }
    }
    points
}

fn aggregate_row(
    cfg: &ExperimentConfig,
    point: (usize, usize, usize, f64, f64),
    caps: &[TrialCapacities],
    ber: Option<BerStats>,
) -> SweepRow {
    let (n_tx, n_rx, n_eve, sb, se) = point;
    let bobs: Vec<f64> = caps.iter().map(|c| c.c_bob).collect();
    let eves: Vec<f64> = caps.iter().map(|c| c.c_eve).collect();
    let raws: Vec<f64> = caps.iter().map(|c| c.raw).collect();
    let clamps: Vec<f64> = caps.iter().map(|c| c.clamped).collect();
    let (raw_mean, raw_std) = mean_std(&raws);
    SweepRow {
        n_tx,
        n_rx,
        n_eve,
        snr_bob_db: sb,
        snr_eve_db: se,
        mode: cfg.noran_mode,
        trials: cfg.trials,
        c_bob_mean: mean_std(&bobs).0,
        c_eve_mean: mean_std(&eves).0,
        sc_raw_mean: raw_mean,
        sc_raw_std: raw_std,
        sc_clamped_mean: mean_std(&clamps).0,
        ber,
        seed: cfg.master_seed,
    }
}

/// Secrecy-capacity sweep: per grid point, `trials` independent channel
/// draws evaluated under the configured injection mode. Rows are ordered by
/// grid coordinates and byte-reproducible from the config alone.
pub fn run_sc_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for point in grid_points(cfg) {
        let (n_tx, n_rx, n_eve, sb, se) = point;
        let (sigma_n2, sigma_e2) = noise_powers(cfg.p_budget, sb, se);
        let gh = grid_hash(SweepKind::SecrecyCapacity, n_tx, n_rx, n_eve, sb, se);
        let caps: Vec<TrialCapacities> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(cfg.master_seed, t as u64 ^ gh);
                sc_trial(cfg, n_tx, n_rx, n_eve, sigma_n2, sigma_e2, seed)
            })
            .collect::<Result<_>>()?;
        rows.push(aggregate_row(cfg, point, &caps, None));
    }
    Ok(rows)
}

/// Eavesdropper bit-error sweep under BPSK signalling.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let Modulation::Bpsk = cfg.modulation;
    let mut rows = Vec::new();
    for point in grid_points(cfg) {
        let (n_tx, n_rx, n_eve, sb, se) = point;
        let (sigma_n2, sigma_e2) = noise_powers(cfg.p_budget, sb, se);
        let gh = grid_hash(SweepKind::BitErrorRate, n_tx, n_rx, n_eve, sb, se);
        let outs: Vec<(u64, u64, TrialCapacities)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(cfg.master_seed, t as u64 ^ gh);
                ber_trial(cfg, n_tx, n_rx, n_eve, sigma_n2, sigma_e2, seed)
            })
            .collect::<Result<_>>()?;
        let errors: u64 = outs.iter().map(|o| o.0).sum();
        let symbols: u64 = outs.iter().map(|o| o.1).sum();
        let caps: Vec<TrialCapacities> = outs.iter().map(|o| o.2).collect();
        rows.push(aggregate_row(cfg, point, &caps, Some(wilson_interval(errors, symbols))));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

pub const CSV_HEADER: &str = "n_tx,n_rx,n_eve,snr_bob_db,snr_eve_db,mode,trials,c_bob_mean,c_eve_mean,sc_raw_mean,sc_raw_std,sc_clamped_mean,eve_ber,eve_ber_lo95,eve_ber_hi95,seed";

/// Formats a float with 9 significant digits.
fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.8e}")
    }
}

/// Renders rows as CSV text (header + one line per row).
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (ber, lo, hi) = match &r.ber {
            Some(b) => (fmt_sig9(b.mean), fmt_sig9(b.lo95), fmt_sig9(b.hi95)),
            None => ("NaN".into(), "NaN".into(), "NaN".into()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n_tx,
            r.n_rx,
            r.n_eve,
            fmt_sig9(r.snr_bob_db),
            fmt_sig9(r.snr_eve_db),
            r.mode.label(),
            r.trials,
            fmt_sig9(r.c_bob_mean),
            fmt_sig9(r.c_eve_mean),
            fmt_sig9(r.sc_raw_mean),
            fmt_sig9(r.sc_raw_std),
            fmt_sig9(r.sc_clamped_mean),
            ber,
            lo,
            hi,
            r.seed,
        ));
    }
    out
}

/// Writes rows to a CSV file.
pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows))
        .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secrecy::secrecy_capacity;

    fn smoke_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_tx: vec![2],
            n_rx: vec![2],
            n_eve: vec![2],
            snr_bob_db: vec![10.0],
            snr_eve_db: vec![5.0],
            trials: 10,
            master_seed: 7,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = smoke_cfg();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = smoke_cfg();
        cfg.snr_bob_db.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = smoke_cfg();
        cfg.snr_eve_db = vec![f64::INFINITY];
        assert!(cfg.validate().is_err());
        let mut cfg = smoke_cfg();
        cfg.noran_mode = NoranMode::Fixed(99.0);
        assert!(cfg.validate().is_err());
        let mut cfg = smoke_cfg();
        cfg.symbols_per_trial = 10;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_trial_off_mode_matches_direct_evaluation() {
        let mut cfg = smoke_cfg();
        cfg.trials = 1;
        cfg.noran_mode = NoranMode::Off;
        let rows = run_sc_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);

        // Reconstruct the single draw by replaying the seeding scheme.
        let gh = grid_hash(SweepKind::SecrecyCapacity, 2, 2, 2, 10.0, 5.0);
        let seed = derive_seed(cfg.master_seed, 0u64 ^ gh);
        let mut rng = RngStream::from_seed(seed);
        let (sigma_n2, sigma_e2) = noise_powers(cfg.p_budget, 10.0, 5.0);
        let h = sample_rayleigh_channel(2, 2, &mut rng).unwrap();
        let g = sample_rayleigh_channel(2, 2, &mut rng).unwrap();
        let ch = ChannelRealization::new(h, g, sigma_n2, sigma_e2).unwrap();
        let p = select_precoder(&ch.h, PrecoderMode::MaxGain, &mut rng).unwrap();
        let alloc = PowerAllocation {
            sigma_u2: cfg.p_budget,
            sigma_k2: 0.0,
            p_budget: cfg.p_budget,
        };
        let report = secrecy_capacity(&ch, &p, &alloc, false).unwrap();
        assert_eq!(rows[0].sc_raw_mean, report.c_secrecy_raw);
        assert_eq!(rows[0].c_bob_mean, report.c_bob);
        assert_eq!(rows[0].c_eve_mean, report.c_eve);
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = smoke_cfg();
        let a = rows_to_csv(&run_sc_sweep(&cfg).unwrap());
        let b = rows_to_csv(&run_sc_sweep(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_bytes_independent_of_worker_count() {
        let cfg = smoke_cfg();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = pool1.install(|| rows_to_csv(&run_sc_sweep(&cfg).unwrap()));
        let b = pool8.install(|| rows_to_csv(&run_sc_sweep(&cfg).unwrap()));
        assert_eq!(a, b);
    }

    #[test]
    fn codebook_mode_dominates_plain_optimized_per_trial() {
        // Paired seeds: the codebook run sees the same draws; cancellation
        // can only help.
        let mut opt = smoke_cfg();
        opt.trials = 25;
        let mut cb = opt.clone();
        cb.noran_mode = NoranMode::OptimizedWithCodebook;
        let gh = grid_hash(SweepKind::SecrecyCapacity, 2, 2, 2, 10.0, 5.0);
        let (sigma_n2, sigma_e2) = noise_powers(opt.p_budget, 10.0, 5.0);
        for t in 0..opt.trials {
            let seed = derive_seed(opt.master_seed, t as u64 ^ gh);
            let plain = sc_trial(&opt, 2, 2, 2, sigma_n2, sigma_e2, seed).unwrap();
            let with_cb = sc_trial(&cb, 2, 2, 2, sigma_n2, sigma_e2, seed).unwrap();
            assert!(
                with_cb.raw >= plain.raw - 1e-12,
                "trial {t}: codebook {} < optimized {}",
                with_cb.raw,
                plain.raw
            );
        }
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(rows_to_csv(&[]), format!("{CSV_HEADER}\n"));
        let cfg = ExperimentConfig {
            trials: 1,
            snr_bob_db: vec![10.0],
            snr_eve_db: vec![0.0],
            ..smoke_cfg()
        };
        let rows = run_sc_sweep(&cfg).unwrap();
        let csv = rows_to_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with(CSV_HEADER));
    }

    #[test]
    fn csv_round_trips_to_nine_significant_digits() {
        let cfg = smoke_cfg();
        let rows = run_sc_sweep(&cfg).unwrap();
        let csv = rows_to_csv(&rows);
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 16);
        let parsed: f64 = fields[9].parse().unwrap();
        let rel = (parsed - rows[0].sc_raw_mean).abs() / rows[0].sc_raw_mean.abs().max(1e-300);
        assert!(rel < 1e-8, "round trip error {rel}");
        // BER columns are NaN for secrecy sweeps
        assert_eq!(fields[12], "NaN");
    }

    #[test]
    fn write_csv_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let cfg = smoke_cfg();
        let rows = run_sc_sweep(&cfg).unwrap();
        write_csv(&rows, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), rows_to_csv(&rows));
    }

    #[test]
    fn ber_saturates_at_half_under_huge_noise() {
        let mut cfg = smoke_cfg();
        cfg.n_rx = vec![1];
        cfg.n_eve = vec![1];
        cfg.noran_mode = NoranMode::Fixed(cfg.p_budget * 0.999999);
        cfg.trials = 5;
        // nearly all power on noise, almost none on signal
        let rows = run_ber_sweep(&cfg).unwrap();
        let ber = rows[0].ber.unwrap();
        assert!(ber.mean > 0.45, "ber {}", ber.mean);
    }

    #[test]
    fn ber_off_mode_matches_q_function_oracle() {
        use statrs::function::erf::erfc;
        // Scalar deterministic channel with gain 1: effective SNR gamma =
        // P / sigma_e2; check at 0, 4, 8 dB against Q(sqrt(2 gamma)).
        let q = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
        let p_budget = 10.0;
        for (i, gamma_db) in [0.0, 4.0, 8.0].into_iter().enumerate() {
            let gamma = 10f64.powf(gamma_db / 10.0);
            let sigma_e2 = p_budget / gamma;
            let one = ComplexMatrix::new(1, 1, vec![Complex64::new(1.0, 0.0)]).unwrap();
            let ch = ChannelRealization::new(one.clone(), one, 1.0, sigma_e2).unwrap();
            let p = Precoder::from_vector(vec![Complex64::new(1.0, 0.0)]).unwrap();
            let alloc = PowerAllocation {
                sigma_u2: p_budget,
                sigma_k2: 0.0,
                p_budget,
            };
            let mut rng = RngStream::from_seed(4100 + i as u64);
            let symbols = 100_000;
            let (errors, total) = eve_ber_trial(&ch, &p, &alloc, symbols, &mut rng).unwrap();
            let expected = q((2.0 * gamma).sqrt());
            let ber = errors as f64 / total as f64;
            // 99% binomial interval around the true value
            let bound = 2.5758 * (expected * (1.0 - expected) / total as f64).sqrt();
            assert!(
                (ber - expected).abs() <= bound,
                "gamma {gamma_db} dB: ber {ber} vs Q {expected} (bound {bound})"
            );
        }
    }

    #[test]
    fn ber_increases_with_injected_power_paired() {
        let base = ExperimentConfig {
            n_rx: vec![1],
            n_eve: vec![1],
            snr_bob_db: vec![10.0],
            snr_eve_db: vec![10.0],
            trials: 3,
            ..smoke_cfg()
        };
        let mut previous = -1.0;
        for k in [0.0, 2.5, 5.0] {
            let cfg = ExperimentConfig {
                noran_mode: if k == 0.0 { NoranMode::Off } else { NoranMode::Fixed(k) },
                ..base.clone()
            };
            let rows = run_ber_sweep(&cfg).unwrap();
            let ber = rows[0].ber.unwrap().mean;
            assert!(ber >= previous, "ber {ber} dropped below {previous} at k={k}");
            previous = ber;
        }
    }

    #[test]
    fn sc_mean_monotone_in_bob_snr() {
        let cfg = ExperimentConfig {
            snr_bob_db: vec![-5.0, 5.0, 15.0],
            snr_eve_db: vec![5.0],
            trials: 40,
            noran_mode: NoranMode::OptimizedWithCodebook,
            ..smoke_cfg()
        };
        let rows = run_sc_sweep(&cfg).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].sc_raw_mean >= w[0].sc_raw_mean - 1e-9);
        }
    }

    #[test]
    fn grid_hash_distinguishes_points_but_not_modes() {
        let a = grid_hash(SweepKind::SecrecyCapacity, 2, 2, 2, 10.0, 5.0);
        let b = grid_hash(SweepKind::SecrecyCapacity, 2, 2, 2, 10.0, 6.0);
        assert_ne!(a, b);
        let c = grid_hash(SweepKind::BitErrorRate, 2, 2, 2, 10.0, 5.0);
        assert_ne!(a, c);
    }

    use crate::channel::ComplexMatrix;
}

//! CSI-keyed codebook: maps quantized channel state to a precomputed noise
//! design (power split, precoder, and noise seed) shared between transmitter
//! and legitimate receiver.
//!
//! The legitimate channel matrix is quantized with step `delta`, canonically
//! serialized, and hashed with FNV-1a-64 to form the lookup key. A hit is
//! only reported when the stored quantized CSI matches the query exactly, so
//! hash collisions can never return a wrong entry. Each entry carries a
//! 64-bit noise seed; the transmitter draws its per-symbol noise from that
//! seed's deterministic stream, and the receiver regenerates the identical
//! sequence to subtract the noise from its received signal.
//!
//! Codebooks persist as versioned JSON with reals encoded as IEEE-754 bit
//! patterns in hex, so a save/load round trip is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{effective_gain, select_precoder, ChannelRealization, ComplexMatrix, Precoder, PrecoderMode};
use crate::error::{Error, Result};
use crate::optimizer::{ccp_solve, CcpConfig, DcObjective};
use crate::rng::{derive_seed, RngStream};

/// Current on-disk format version.
pub const CODEBOOK_VERSION: u64 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Quantized-CSI lookup key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsiKey {
    /// FNV-1a-64 hash of the canonical byte serialization of the quantized
    /// CSI, prefixed by the matrix dimensions and the quantization step bits.
    pub key64: u64,
    /// Per channel entry, row-major: (round(re/delta), round(im/delta)).
    pub quantized: Vec<(i64, i64)>,
}

fn canonical_bytes(n_rx: u32, n_tx: u32, delta: f64, quantized: &[(i64, i64)]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + 16 * quantized.len());
    buf.extend_from_slice(&n_rx.to_le_bytes());
    buf.extend_from_slice(&n_tx.to_le_bytes());
    buf.extend_from_slice(&delta.to_bits().to_le_bytes());
    for &(re, im) in quantized {
        buf.extend_from_slice(&re.to_le_bytes());
        buf.extend_from_slice(&im.to_le_bytes());
    }
    buf
}

/// Quantizes a channel matrix and hashes it into a lookup key. Rounding is
/// nearest-integer, half away from zero; the result is platform-independent.
pub fn derive_key(h: &ComplexMatrix, delta: f64) -> Result<CsiKey> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "quantization step must be positive, got {delta}"
        )));
    }
    let mut quantized = Vec::with_capacity(h.rows() * h.cols());
    for z in h.entries() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "cannot quantize non-finite CSI entries".into(),
            ));
        }
        let re = (z.re / delta).round();
        let im = (z.im / delta).round();
        if re.abs() >= 9.0e18 || im.abs() >= 9.0e18 {
            return Err(Error::InvalidArgument(
                "quantized CSI exceeds the integer range".into(),
            ));
        }
        quantized.push((re as i64, im as i64));
    }
    let bytes = canonical_bytes(h.rows() as u32, h.cols() as u32, delta, &quantized);
    Ok(CsiKey {
        key64: fnv1a64(&bytes),
        quantized,
    })
}

/// One codebook entry: the noise design selected for a quantized channel
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    pub key: CsiKey,
    /// Signal power of the stored design.
    pub sigma_u2: f64,
    /// Injected-noise power of the stored design.
    pub sigma_k2: f64,
    /// Seed of the per-symbol noise stream shared by both ends.
    pub noise_seed: u64,
    pub precoder: Precoder,
}

impl CodebookEntry {
    /// The stored quantized CSI, compared verbatim on lookup.
    pub fn quantized_csi(&self) -> &[(i64, i64)] {
        &self.key.quantized
    }
}

/// How the builder models the eavesdropper's effective gain, which the
/// transmitter cannot measure directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveGainModel {
    /// Rayleigh average: `E||G p||^2` equals the eavesdropper antenna count.
    Expected,
    /// Use the realization's actual eavesdropper channel (genie-aided).
    Genie,
}

/// Builder knobs beyond the spec'd positional arguments.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub eve_model: EveGainModel,
    pub precoder_mode: PrecoderMode,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            eve_model: EveGainModel::Expected,
            precoder_mode: PrecoderMode::MaxGain,
        }
    }
}

/// Shared table of noise designs keyed by quantized CSI.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub version: u64,
    pub delta: f64,
    pub p_budget: f64,
    pub sigma_n2: f64,
    pub sigma_e2_assumed: f64,
    entries: BTreeMap<u64, CodebookEntry>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &CodebookEntry> {
        self.entries.values()
    }
}

/// Builds a codebook with default options (expected-gain eavesdropper model,
/// max-gain precoder).
pub fn build_codebook(
    realizations: &[ChannelRealization],
    delta: f64,
    p_budget: f64,
    cfg: &CcpConfig,
    master_seed: u64,
) -> Result<Codebook> {
    build_codebook_with(realizations, delta, p_budget, cfg, master_seed, BuildOptions::default())
}

/// Builds a codebook: for each realization, select a precoder, solve the
/// power split, and store the design keyed by the quantized legitimate CSI.
/// Duplicate keys with identical quantized CSI keep the first entry; a key
/// collision between different CSI vectors is an error.
pub fn build_codebook_with(
    realizations: &[ChannelRealization],
    delta: f64,
    p_budget: f64,
    cfg: &CcpConfig,
    master_seed: u64,
    options: BuildOptions,
) -> Result<Codebook> {
    if realizations.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot build a codebook from zero channel realizations".into(),
        ));
    }
    if !(p_budget > 0.0 && p_budget.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "power budget must be positive, got {p_budget}"
        )));
    }
    let sigma_n2 = realizations[0].sigma_n2;
    let sigma_e2 = realizations[0].sigma_e2;
    if realizations
        .iter()
        .any(|r| r.sigma_n2 != sigma_n2 || r.sigma_e2 != sigma_e2)
    {
        return Err(Error::InvalidArgument(
            "all realizations in one codebook must share the same noise powers".into(),
        ));
    }
    cfg.validate()?;

    // Per-entry work is independent; order is restored before insertion so
    // the resulting codebook does not depend on the worker count.
    let built: Vec<Result<CodebookEntry>> = realizations
        .par_iter()
        .map(|ch| build_entry(ch, delta, p_budget, cfg, master_seed, options))
        .collect();

    let mut entries: BTreeMap<u64, CodebookEntry> = BTreeMap::new();
    for entry in built {
        let entry = entry?;
        match entries.get(&entry.key.key64) {
            None => {
                entries.insert(entry.key.key64, entry);
            }
            Some(existing) if existing.key.quantized == entry.key.quantized => {
                // same cell: first design wins
            }
            Some(existing) => {
                return Err(Error::KeyCollision {
                    key64: entry.key.key64,
                    existing: existing.key.quantized.clone(),
                    incoming: entry.key.quantized,
                });
            }
        }
    }

    Ok(Codebook {
        version: CODEBOOK_VERSION,
        delta,
        p_budget,
        sigma_n2,
        sigma_e2_assumed: sigma_e2,
        entries,
    })
}

fn build_entry(
    ch: &ChannelRealization,
    delta: f64,
    p_budget: f64,
    cfg: &CcpConfig,
    master_seed: u64,
    options: BuildOptions,
) -> Result<CodebookEntry> {
    let key = derive_key(&ch.h, delta)?;
    // The precoder draw (random-unit mode) comes from a per-entry stream so
    // the build is order-independent.
    let mut rng = RngStream::from_seed(derive_seed(master_seed, key.key64 ^ 0x5052_4543)); // "PREC"
    let precoder = select_precoder(&ch.h, options.precoder_mode, &mut rng)?;
    let gain_bob = effective_gain(&ch.h, &precoder)?;
    let gain_eve = match options.eve_model {
        EveGainModel::Expected => ch.g.rows() as f64,
        EveGainModel::Genie => effective_gain(&ch.g, &precoder)?,
    };
    let dc = DcObjective::new(gain_eve, gain_bob, ch.sigma_n2, ch.sigma_e2, p_budget)?;
    let state = ccp_solve(&dc, cfg)?;
    Ok(CodebookEntry {
        noise_seed: derive_seed(master_seed, key.key64),
        key,
        sigma_u2: state.alloc.sigma_u2,
        sigma_k2: state.alloc.sigma_k2,
        precoder,
    })
}

/// Looks up the entry for a channel matrix. Returns `None` on a miss — either
/// no entry in that quantization cell, or a hash collision whose stored CSI
/// does not match the query.
pub fn lookup<'a>(cb: &'a Codebook, h: &ComplexMatrix) -> Result<Option<&'a CodebookEntry>> {
    let key = derive_key(h, cb.delta)?;
    Ok(cb
        .entries
        .get(&key.key64)
        .filter(|entry| entry.key.quantized == key.quantized))
}

/// Deterministic per-symbol noise stream shared by transmitter and receiver.
/// Each symbol consumes exactly one complex Gaussian draw, so position `i`
/// is reproducible by counted regeneration from the seed.
#[derive(Debug, Clone)]
pub struct NoranStream {
    rng: RngStream,
    sigma_k2: f64,
}

impl NoranStream {
    pub fn new(noise_seed: u64, sigma_k2: f64) -> Self {
        NoranStream {
            rng: RngStream::from_seed(noise_seed),
            sigma_k2,
        }
    }

    pub fn for_entry(entry: &CodebookEntry) -> Self {
        Self::new(entry.noise_seed, entry.sigma_k2)
    }

    /// Next noise symbol, CN(0, sigma_k2).
    pub fn next_symbol(&mut self) -> Complex64 {
        self.rng.next_cn(self.sigma_k2)
    }

    /// The noise symbol at a given stream position, by regeneration.
    pub fn symbol_at(noise_seed: u64, sigma_k2: f64, index: usize) -> Complex64 {
        let mut stream = Self::new(noise_seed, sigma_k2);
        for _ in 0..index {
            stream.next_symbol();
        }
        stream.next_symbol()
    }
}

/// Receiver-side cancellation: regenerates the transmitter's noise symbol at
/// `symbol_index` from the entry's seed and subtracts its channel image from
/// the received vector.
pub fn cancel_noran(
    z: &[Complex64],
    h: &ComplexMatrix,
    entry: &CodebookEntry,
    symbol_index: usize,
) -> Result<Vec<Complex64>> {
    if z.len() != h.rows() {
        return Err(Error::InvalidArgument(format!(
            "received vector length {} does not match {} receive antennas",
            z.len(),
            h.rows()
        )));
    }
    let t = NoranStream::symbol_at(entry.noise_seed, entry.sigma_k2, symbol_index);
    let w = entry.precoder.scale(t);
    let hw = h.matvec(&w)?;
    Ok(z.iter().zip(hw.iter()).map(|(zi, wi)| zi - wi).collect())
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

fn f64_to_hex(x: f64) -> String {
    let mut s = String::with_capacity(18);
    let _ = write!(s, "0x{:016x}", x.to_bits());
    s
}

fn f64_from_hex(s: &str) -> Result<f64> {
    let digits = s
        .strip_prefix("0x")
        .ok_or_else(|| Error::Parse(format!("expected 0x-prefixed IEEE-754 hex, got {s:?}")))?;
    let bits = u64::from_str_radix(digits, 16)
        .map_err(|e| Error::Parse(format!("bad IEEE-754 hex {s:?}: {e}")))?;
    Ok(f64::from_bits(bits))
}

fn u64_from_dec(s: &str) -> Result<u64> {
    s.parse::<u64>()
        .map_err(|e| Error::Parse(format!("bad unsigned integer {s:?}: {e}")))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    version: u64,
    delta: String,
    p_budget: String,
    sigma_n2: String,
    sigma_e2_assumed: String,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    key64: String,
    quantized: Vec<(i64, i64)>,
    sigma_u2: String,
    sigma_k2: String,
    noise_seed: String,
    precoder: Vec<(String, String)>,
}

/// Serializes a codebook to the versioned JSON format.
pub fn save_codebook(cb: &Codebook, path: &Path) -> Result<()> {
    let file = CodebookFile {
        version: cb.version,
        delta: f64_to_hex(cb.delta),
        p_budget: f64_to_hex(cb.p_budget),
        sigma_n2: f64_to_hex(cb.sigma_n2),
        sigma_e2_assumed: f64_to_hex(cb.sigma_e2_assumed),
        entries: cb
            .entries
            .values()
            .map(|e| EntryFile {
                key64: e.key.key64.to_string(),
                quantized: e.key.quantized.clone(),
                sigma_u2: f64_to_hex(e.sigma_u2),
                sigma_k2: f64_to_hex(e.sigma_k2),
                noise_seed: e.noise_seed.to_string(),
                precoder: e
                    .precoder
                    .as_slice()
                    .iter()
                    .map(|z| (f64_to_hex(z.re), f64_to_hex(z.im)))
                    .collect(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Io(format!("serializing codebook: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

/// Reads a codebook back, verifying the format version, the power invariants,
/// and that every stored key matches its quantized CSI.
pub fn load_codebook(path: &Path) -> Result<Codebook> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Parse(format!("{}: missing integer field \"version\"", path.display())))?;
    if version != CODEBOOK_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: CODEBOOK_VERSION,
        });
    }
    let file: CodebookFile = serde_json::from_value(value)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;

    let delta = f64_from_hex(&file.delta)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parse(format!("non-positive quantization step {delta}")));
    }
    let p_budget = f64_from_hex(&file.p_budget)?;
    let sigma_n2 = f64_from_hex(&file.sigma_n2)?;
    let sigma_e2_assumed = f64_from_hex(&file.sigma_e2_assumed)?;

    let mut entries = BTreeMap::new();
    for (i, e) in file.entries.iter().enumerate() {
        let key64 = u64_from_dec(&e.key64)?;
        let precoder_vec: Vec<Complex64> = e
            .precoder
            .iter()
            .map(|(re, im)| Ok(Complex64::new(f64_from_hex(re)?, f64_from_hex(im)?)))
            .collect::<Result<_>>()?;
        let n_tx = precoder_vec.len();
        if n_tx == 0 || e.quantized.is_empty() || e.quantized.len() % n_tx != 0 {
            return Err(Error::Parse(format!(
                "entry {i}: quantized CSI length {} is not a multiple of the precoder length {n_tx}",
                e.quantized.len()
            )));
        }
        let n_rx = e.quantized.len() / n_tx;
        let expected =
            fnv1a64(&canonical_bytes(n_rx as u32, n_tx as u32, delta, &e.quantized));
        if expected != key64 {
            return Err(Error::Parse(format!(
                "entry {i}: key64 {key64} does not match its quantized CSI (expected {expected})"
            )));
        }
        let sigma_u2 = f64_from_hex(&e.sigma_u2)?;
        let sigma_k2 = f64_from_hex(&e.sigma_k2)?;
        if !(sigma_u2 >= 0.0 && sigma_k2 >= 0.0 && sigma_u2 + sigma_k2 <= p_budget + 1e-9) {
            return Err(Error::Parse(format!(
                "entry {i}: stored allocation ({sigma_u2}, {sigma_k2}) violates the budget {p_budget}"
            )));
        }
        let entry = CodebookEntry {
            key: CsiKey {
                key64,
                quantized: e.quantized.clone(),
            },
            sigma_u2,
            sigma_k2,
            noise_seed: u64_from_dec(&e.noise_seed)?,
            precoder: Precoder::from_vector(precoder_vec)?,
        };
        if entries.insert(key64, entry).is_some() {
            return Err(Error::Parse(format!("entry {i}: duplicate key64 {key64}")));
        }
    }

    Ok(Codebook {
        version,
        delta,
        p_budget,
        sigma_n2,
        sigma_e2_assumed,
        entries,
    })
}

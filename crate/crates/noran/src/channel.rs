//! Complex channel modeling: Rayleigh fading draws, precoder selection, and
//! the received-signal equations for the legitimate receiver and the
//! eavesdropper.
//!
//! Matrices are receiver-by-transmitter (`n_rx x n_tx`), so `z = H x` with
//! `x` of length `n_tx` type-checks. Every stochastic operation takes an
//! explicit [`RngStream`] and is bit-reproducible given the same seed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::RngStream;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Dimensions must be at least
    /// 1x1, the entry count must match, and every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be >= 1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Convenience constructor from real row slices (tests, examples).
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::InvalidArgument("ragged rows".into()));
            }
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        ComplexMatrix::new(r, c, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        ComplexMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix-vector product `self * x`.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::InvalidArgument(format!(
                "matvec dimension mismatch: {}x{} matrix with length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| self.get(r, c) * x[c])
                    .sum::<Complex64>()
            })
            .collect())
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> ComplexMatrix {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c).conj());
            }
        }
        ComplexMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Gram matrix `self^H * self` (Hermitian, cols x cols).
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.cols;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..self.rows {
                    acc += self.get(r, i).conj() * self.get(r, j);
                }
                data[i * n + j] = acc;
            }
        }
        ComplexMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.norm() <= tol)
    }
}

/// One draw of the legitimate channel, the eavesdropping channel, and the
/// receiver noise powers.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub g: ComplexMatrix,
    pub sigma_n2: f64,
    pub sigma_e2: f64,
}

impl ChannelRealization {
    pub fn new(h: ComplexMatrix, g: ComplexMatrix, sigma_n2: f64, sigma_e2: f64) -> Result<Self> {
        if h.cols() != g.cols() {
            return Err(Error::InvalidArgument(format!(
                "legitimate and eavesdropper channels disagree on transmit antennas: {} vs {}",
                h.cols(),
                g.cols()
            )));
        }
        if !(sigma_n2 >= 0.0 && sigma_n2.is_finite() && sigma_e2 >= 0.0 && sigma_e2.is_finite()) {
            return Err(Error::InvalidArgument(
                "noise powers must be finite and nonnegative".into(),
            ));
        }
        Ok(ChannelRealization {
            h,
            g,
            sigma_n2,
            sigma_e2,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.h.cols()
    }
}

/// Unit-norm transmit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    p: Vec<Complex64>,
}

impl Precoder {
    /// Wraps a vector after normalizing it; rejects zero vectors.
    pub fn from_vector(v: Vec<Complex64>) -> Result<Self> {
        let norm = linalg::vec_norm(&v);
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(Error::NoValidPrecoder);
        }
        let p = v.into_iter().map(|z| z / norm).collect();
        Ok(Precoder { p })
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// The transmit vector for a scalar symbol: `p * symbol`.
    pub fn scale(&self, symbol: Complex64) -> Vec<Complex64> {
        self.p.iter().map(|&z| z * symbol).collect()
    }
}

/// How the transmit direction is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderMode {
    /// Dominant right singular vector of the legitimate channel (maximizes
    /// the effective gain).
    MaxGain,
    /// Uniformly random unit vector, redrawn until the channel projection is
    /// nonzero.
    RandomUnit,
}

/// Draws an `n_rx x n_tx` matrix of i.i.d. CN(0, 1) entries, so each entry
/// magnitude is Rayleigh with unit second moment.
pub fn sample_rayleigh_channel(n_rx: usize, n_tx: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    if n_rx == 0 || n_tx == 0 {
        return Err(Error::InvalidArgument(format!(
            "antenna counts must be >= 1, got {n_rx}x{n_tx}"
        )));
    }
    let data = (0..n_rx * n_tx).map(|_| rng.next_cn01()).collect();
    ComplexMatrix::new(n_rx, n_tx, data)
}

const MIN_PROJECTION: f64 = 1e-9;

/// Selects a unit-norm precoder for `h` under the given mode. Both modes
/// guarantee `||H p|| > 1e-9`; an all-zero channel has no valid precoder.
pub fn select_precoder(h: &ComplexMatrix, mode: PrecoderMode, rng: &mut RngStream) -> Result<Precoder> {
    if h.is_zero(0.0) {
        return Err(Error::NoValidPrecoder);
    }
    match mode {
        PrecoderMode::MaxGain => {
            let eig = linalg::hermitian_eig(&h.gram());
            if eig.values.first().copied().unwrap_or(0.0) <= MIN_PROJECTION * MIN_PROJECTION {
                return Err(Error::NoValidPrecoder);
            }
            let top = eig.vectors.into_iter().next().ok_or(Error::NoValidPrecoder)?;
            let p = Precoder::from_vector(linalg::canonical_phase(top))?;
            if effective_gain(h, &p)?.sqrt() <= MIN_PROJECTION {
                return Err(Error::NoValidPrecoder);
            }
            Ok(p)
        }
        PrecoderMode::RandomUnit => {
            for _ in 0..1000 {
                let v: Vec<Complex64> = (0..h.cols()).map(|_| rng.next_cn01()).collect();
                if linalg::vec_norm(&v) <= 1e-12 {
                    continue;
                }
                let p = Precoder::from_vector(v)?;
                if effective_gain(h, &p)?.sqrt() > MIN_PROJECTION {
                    return Ok(p);
                }
            }
            Err(Error::NoValidPrecoder)
        }
    }
}

/// Squared effective channel gain `||H p||^2` seen after maximal-ratio
/// combining at the receiver.
pub fn effective_gain(h: &ComplexMatrix, p: &Precoder) -> Result<f64> {
    let hp = h.matvec(p.as_slice())?;
    Ok(linalg::vec_norm_sqr(&hp))
}

/// Applies the received-signal equations for one channel use: both receivers
/// see the precoded symbol plus the precoded noise symbol plus their own
/// additive Gaussian noise.
///
/// Noise is always drawn (legitimate receiver first, then eavesdropper) and
/// scaled by the configured standard deviation, so the stream consumption per
/// call is independent of the noise powers; paired-seed comparisons across
/// configurations stay aligned.
pub fn transmit(
    ch: &ChannelRealization,
    p: &Precoder,
    symbol: Complex64,
    noran_symbol: Complex64,
    rng: &mut RngStream,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let x = p.scale(symbol);
    let w = p.scale(noran_symbol);
    let hx = ch.h.matvec(&x)?;
    let hw = ch.h.matvec(&w)?;
    let gx = ch.g.matvec(&x)?;
    let gw = ch.g.matvec(&w)?;
    let sd_n = ch.sigma_n2.sqrt();
    let sd_e = ch.sigma_e2.sqrt();
    let z: Vec<Complex64> = (0..ch.h.rows())
        .map(|i| hx[i] + hw[i] + rng.next_cn01() * sd_n)
        .collect();
    let y: Vec<Complex64> = (0..ch.g.rows())
        .map(|i| gx[i] + gw[i] + rng.next_cn01() * sd_e)
        .collect();
    Ok((z, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> RngStream {
        RngStream::from_seed(seed)
    }

    #[test]
    fn rayleigh_same_seed_same_matrix() {
        let a = sample_rayleigh_channel(1, 1, &mut rng(5)).unwrap();
        let b = sample_rayleigh_channel(1, 1, &mut rng(5)).unwrap();
        assert_eq!(a.get(0, 0), b.get(0, 0));
    }

    #[test]
    fn rayleigh_shape_and_finiteness() {
        let m = sample_rayleigh_channel(2, 2, &mut rng(9)).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert!(m.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert_eq!(m.entries().len(), 4);
    }

    #[test]
    fn rayleigh_rejects_zero_dims() {
        assert!(matches!(
            sample_rayleigh_channel(0, 2, &mut rng(1)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_rayleigh_channel(2, 0, &mut rng(1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rayleigh_unit_second_moment() {
        // Monte Carlo check of the CN(0,1) normalization at 1e5 draws.
        let mut r = rng(42);
        let n = 100_000;
        let mean_sq: f64 = (0..n)
            .map(|_| sample_rayleigh_channel(1, 1, &mut r).unwrap().get(0, 0).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean_sq - 1.0).abs() <= 0.02, "E|h|^2 = {mean_sq}");
    }

    #[test]
    fn max_gain_precoder_rank_one_row() {
        let h = ComplexMatrix::from_real_rows(&[&[1.0, 0.0]]).unwrap();
        let p = select_precoder(&h, PrecoderMode::MaxGain, &mut rng(1)).unwrap();
        // [1, 0] up to global phase; canonical phase makes it exactly real.
        assert!((p.as_slice()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(p.as_slice()[1].norm() < 1e-12);
        assert!((effective_gain(&h, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_gain_precoder_identity_channel() {
        let h = ComplexMatrix::identity(2);
        let p = select_precoder(&h, PrecoderMode::MaxGain, &mut rng(1)).unwrap();
        // Isotropic singular values: any unit vector is optimal, gain 1.
        assert!((effective_gain(&h, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_gain_precoder_diagonal_channel() {
        let h = ComplexMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap();
        let p = select_precoder(&h, PrecoderMode::MaxGain, &mut rng(1)).unwrap();
        assert!((p.as_slice()[0].norm() - 1.0).abs() < 1e-10);
        assert!(p.as_slice()[1].norm() < 1e-10);
        assert!((effective_gain(&h, &p).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn precoder_unit_norm_both_modes() {
        let mut r = rng(31);
        for _ in 0..50 {
            let h = sample_rayleigh_channel(2, 4, &mut r).unwrap();
            for mode in [PrecoderMode::MaxGain, PrecoderMode::RandomUnit] {
                let p = select_precoder(&h, mode, &mut r).unwrap();
                let norm = linalg::vec_norm(p.as_slice());
                assert!((norm - 1.0).abs() <= 1e-12, "|p| = {norm} for {mode:?}");
            }
        }
    }

    #[test]
    fn max_gain_beats_random_directions() {
        let mut r = rng(77);
        for _ in 0..20 {
            let h = sample_rayleigh_channel(3, 3, &mut r).unwrap();
            let p = select_precoder(&h, PrecoderMode::MaxGain, &mut r).unwrap();
            let best = effective_gain(&h, &p).unwrap();
            for _ in 0..100 {
                let q = select_precoder(&h, PrecoderMode::RandomUnit, &mut r).unwrap();
                let gain = effective_gain(&h, &q).unwrap();
                assert!(best + 1e-9 >= gain, "max-gain {best} < random {gain}");
            }
        }
    }

    #[test]
    fn all_zero_channel_has_no_precoder() {
        let h = ComplexMatrix::new(2, 2, vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        assert!(matches!(
            select_precoder(&h, PrecoderMode::MaxGain, &mut rng(1)),
            Err(Error::NoValidPrecoder)
        ));
        assert!(matches!(
            select_precoder(&h, PrecoderMode::RandomUnit, &mut rng(1)),
            Err(Error::NoValidPrecoder)
        ));
    }

    #[test]
    fn effective_gain_hand_values() {
        let h = ComplexMatrix::from_real_rows(&[&[1.0, 1.0]]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = Precoder::from_vector(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap();
        assert!((effective_gain(&h, &p).unwrap() - 2.0).abs() < 1e-12);

        // p orthogonal to the row space.
        let q = Precoder::from_vector(vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)]).unwrap();
        assert!(effective_gain(&h, &q).unwrap() < 1e-15);

        let id = ComplexMatrix::identity(2);
        assert!((effective_gain(&id, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_gain_dimension_mismatch() {
        let h = ComplexMatrix::identity(2);
        let p = Precoder::from_vector(vec![Complex64::new(1.0, 0.0); 3]).unwrap();
        assert!(matches!(effective_gain(&h, &p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn transmit_noiseless_identity() {
        let h = ComplexMatrix::identity(2);
        let g = ComplexMatrix::identity(2);
        let ch = ChannelRealization::new(h, g, 0.0, 0.0).unwrap();
        let p = select_precoder(&ch.h, PrecoderMode::MaxGain, &mut rng(1)).unwrap();
        let s = Complex64::new(1.5, -0.5);
        let (z, _y) = transmit(&ch, &p, s, Complex64::new(0.0, 0.0), &mut rng(2)).unwrap();
        let expect = ch.h.matvec(&p.scale(s)).unwrap();
        for (a, b) in z.iter().zip(expect.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transmit_pure_noise_power() {
        let h = ComplexMatrix::identity(2);
        let g = ComplexMatrix::identity(2);
        let ch = ChannelRealization::new(h, g, 1.0, 1.0).unwrap();
        let p = select_precoder(&ch.h, PrecoderMode::MaxGain, &mut rng(1)).unwrap();
        let mut r = rng(13);
        let trials = 100_000;
        let zero = Complex64::new(0.0, 0.0);
        let mean: f64 = (0..trials)
            .map(|_| {
                let (z, _) = transmit(&ch, &p, zero, zero, &mut r).unwrap();
                linalg::vec_norm_sqr(&z) / z.len() as f64
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 1.0).abs() <= 0.02, "noise power {mean}");
    }

    #[test]
    fn transmit_fixed_seed_repeatable() {
        let mut r = rng(21);
        let h = sample_rayleigh_channel(2, 2, &mut r).unwrap();
        let g = sample_rayleigh_channel(2, 2, &mut r).unwrap();
        let ch = ChannelRealization::new(h, g, 0.7, 1.3).unwrap();
        let p = select_precoder(&ch.h, PrecoderMode::MaxGain, &mut r).unwrap();
        let s = Complex64::new(1.0, 0.0);
        let t = Complex64::new(0.0, 0.5);
        let (z1, y1) = transmit(&ch, &p, s, t, &mut rng(99)).unwrap();
        let (z2, y2) = transmit(&ch, &p, s, t, &mut rng(99)).unwrap();
        assert_eq!(z1, z2);
        assert_eq!(y1, y2);
    }

    #[test]
    fn transmit_linear_when_noiseless() {
        let mut r = rng(23);
        let h = sample_rayleigh_channel(2, 3, &mut r).unwrap();
        let g = sample_rayleigh_channel(2, 3, &mut r).unwrap();
        let ch = ChannelRealization::new(h, g, 0.0, 0.0).unwrap();
        let p = select_precoder(&ch.h, PrecoderMode::MaxGain, &mut r).unwrap();
        let s1 = Complex64::new(0.3, 0.4);
        let t1 = Complex64::new(-0.2, 0.9);
        let s2 = Complex64::new(-1.1, 0.6);
        let t2 = Complex64::new(0.5, -0.7);
        let (za, ya) = transmit(&ch, &p, s1, t1, &mut rng(1)).unwrap();
        let (zb, yb) = transmit(&ch, &p, s2, t2, &mut rng(1)).unwrap();
        let (zs, ys) = transmit(&ch, &p, s1 + s2, t1 + t2, &mut rng(1)).unwrap();
        for i in 0..za.len() {
            assert!((za[i] + zb[i] - zs[i]).norm() < 1e-12);
        }
        for i in 0..ya.len() {
            assert!((ya[i] + yb[i] - ys[i]).norm() < 1e-12);
        }
    }
}

//! Small dense complex linear algebra: vector helpers, a cyclic Jacobi
//! eigensolver for Hermitian matrices, and a column-pivoted Householder QR.
//! Channel matrices here are at most 8x8, so simple dense algorithms with
//! deterministic iteration order are the right tool.

use num_complex::Complex64;

use crate::channel::ComplexMatrix;

pub fn vec_norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    vec_norm_sqr(v).sqrt()
}

/// Rotates a vector by a global phase so its first non-negligible entry is
/// real and nonnegative; fixes the phase ambiguity of eigenvectors.
pub(crate) fn canonical_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-12) {
        let phase = lead / lead.norm();
        let rot = phase.conj();
        for z in &mut v {
            *z *= rot;
        }
    }
    v
}

pub(crate) struct HermitianEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Matching unit eigenvectors (columns of the diagonalizing unitary).
    pub vectors: Vec<Vec<Complex64>>,
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Each rotation first
/// phase-aligns the off-diagonal entry, then applies the classical symmetric
/// 2x2 Schur rotation; sweeps run in a fixed (p, q) order so results are
/// reproducible.
pub(crate) fn hermitian_eig(a: &ComplexMatrix) -> HermitianEig {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|r| (0..n).map(|c| a.get(r, c)).collect())
        .collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();

    let scale: f64 = m
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p][q].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                let abs_apq = apq.norm();
                if abs_apq <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / abs_apq;
                let app = m[p][p].re;
                let aqq = m[q][q].re;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // J[p][p] = c, J[p][q] = s, J[q][p] = -s*conj(phase),
                // J[q][q] = c*conj(phase); apply A <- J^H A J, V <- V J.
                let jqp = -s * phase.conj();
                let jqq = c * phase.conj();
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = mkp * c + mkq * jqp;
                    m[k][q] = mkp * s + mkq * jqq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = mpk * c + mqk * jqp.conj();
                    m[q][k] = mpk * s + mqk * jqq.conj();
                }
                m[p][q] = Complex64::new(0.0, 0.0);
                m[q][p] = Complex64::new(0.0, 0.0);
                m[p][p] = Complex64::new(m[p][p].re, 0.0);
                m[q][q] = Complex64::new(m[q][q].re, 0.0);
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = vkp * c + vkq * jqp;
                    v[k][q] = vkp * s + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].re.partial_cmp(&m[i][i].re).unwrap());
    let values = order.iter().map(|&i| m[i][i].re).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|r| v[r][i]).collect())
        .collect();
    HermitianEig { values, vectors }
}

pub(crate) struct PivotedQr {
    /// Full unitary factor, stored as rows of length m.
    pub q: Vec<Vec<Complex64>>,
    /// Magnitudes of the R diagonal, non-increasing thanks to pivoting;
    /// singular-value proxies for rank decisions.
    pub r_diag: Vec<f64>,
}

/// Column-pivoted Householder QR of an m x n matrix.
pub(crate) fn pivoted_qr(a: &ComplexMatrix) -> PivotedQr {
    let m = a.rows();
    let n = a.cols();
    let mut w: Vec<Vec<Complex64>> = (0..m)
        .map(|r| (0..n).map(|c| a.get(r, c)).collect())
        .collect();
    let mut q: Vec<Vec<Complex64>> = (0..m)
        .map(|r| {
            (0..m)
                .map(|c| Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    let steps = m.min(n);
    let mut r_diag = vec![0.0f64; steps];

    for j in 0..steps {
        // Exact column norms are cheap at this size; no downdating drift.
        let mut best = j;
        let mut best_norm = 0.0f64;
        for c in j..n {
            let nrm: f64 = (j..m).map(|r| w[r][c].norm_sqr()).sum();
            if nrm > best_norm {
                best_norm = nrm;
                best = c;
            }
        }
        if best != j {
            for row in w.iter_mut() {
                row.swap(j, best);
            }
        }
        let norm_x = best_norm.sqrt();
        if norm_x <= 1e-300 {
            break;
        }
        let x0 = w[j][j];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm_x;
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        for r in j..m {
            v[r] = w[r][j];
        }
        v[j] -= alpha;
        let v_norm_sqr = vec_norm_sqr(&v[j..]);
        if v_norm_sqr > 0.0 {
            for c in j..n {
                let inner: Complex64 = (j..m).map(|r| v[r].conj() * w[r][c]).sum();
                let coef = inner * (2.0 / v_norm_sqr);
                for r in j..m {
                    w[r][c] -= coef * v[r];
                }
            }
            // Q <- Q * (I - 2 v v^H / |v|^2)
            for row in q.iter_mut() {
                let inner: Complex64 = (j..m).map(|r| row[r] * v[r]).sum();
                let coef = inner * (2.0 / v_norm_sqr);
                for r in j..m {
                    row[r] -= coef * v[r].conj();
                }
            }
        }
        w[j][j] = alpha;
        for r in (j + 1)..m {
            w[r][j] = Complex64::new(0.0, 0.0);
        }
        r_diag[j] = alpha.norm();
    }

    PivotedQr { q, r_diag }
}

/// Orthonormal basis of the right null space of `h`, i.e. all unit vectors
/// `x` with `h x = 0`. Rank is decided by thresholding the pivoted-QR
/// diagonal of `h^H` at `tol`.
pub(crate) fn null_space_basis(h: &ComplexMatrix, tol: f64) -> Vec<Vec<Complex64>> {
    let hh = h.hermitian();
    let m = hh.rows(); // = n_tx
    let qr = pivoted_qr(&hh);
    let rank = qr.r_diag.iter().filter(|&&d| d > tol).count();
    (rank..m)
        .map(|col| (0..m).map(|r| qr.q[r][col]).collect())
        .collect()
}

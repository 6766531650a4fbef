//! Small dense matrices, singular values of long matrix products, and the
//! singular value function.
//!
//! Products of many contractions underflow any raw floating-point product, so
//! [`ProductAccumulator`] never forms one. It propagates an orthonormal frame
//! and keeps the accumulated triangular factor with one log-scale per row.
//! Singular values are extracted at the end by a one-sided Jacobi SVD that
//! works directly on log-scaled columns, which keeps small singular values
//! accurate relative to themselves rather than to the largest one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are scaled to unit max-magnitude before this threshold is applied.
pub const INVERTIBILITY_TOLERANCE: f64 = 1e-300;

const JACOBI_TOLERANCE: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a `dim × dim` matrix from row-major entries, rejecting
    /// non-finite entries and singular matrices.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        let m = Self::unchecked(dim, data)?;
        let det = m.scaled_determinant();
        if !(det.abs() >= INVERTIBILITY_TOLERANCE) {
            return Err(Error::SingularMatrix { det });
        }
        Ok(m)
    }

    /// Like [`Matrix::new`] but without the invertibility check. Used for
    /// linear parts whose tiny entries may underflow during projection.
    pub fn unchecked(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        Self::new(dim, rows.concat())
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let dim = entries.len();
        let mut data = vec![0.0; dim * dim];
        for (i, &e) in entries.iter().enumerate() {
            data[i * dim + i] = e;
        }
        Self::new(dim, data)
    }

    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        Self::diagonal(&vec![value; dim])
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0).expect("identity is invertible")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.get(i, j);
            }
        }
        Matrix { dim: n, data }
    }

    /// Plain product; may underflow for long chains, see [`product_spectrum`].
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Ok(Matrix { dim: n, data })
    }

    /// `out = self · x`
    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = self.data[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Determinant of the matrix with every row scaled to unit max-magnitude.
    fn scaled_determinant(&self) -> f64 {
        let n = self.dim;
        let mut a = self.data.clone();
        for r in 0..n {
            let m = a[r * n..(r + 1) * n].iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if m == 0.0 {
                return 0.0;
            }
            a[r * n..(r + 1) * n].iter_mut().for_each(|x| *x /= m);
        }
        lu_determinant(&mut a, n)
    }

    pub fn determinant(&self) -> f64 {
        let mut a = self.data.clone();
        lu_determinant(&mut a, self.dim)
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        LogScaledRows::from_matrix_rows(self).into_log_singular_values()[0].exp()
    }
}

fn lu_determinant(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for i in col + 1..n {
            let f = a[i * n + col] / p;
            if f != 0.0 {
                for j in col..n {
                    a[i * n + j] -= f * a[col * n + j];
                }
            }
        }
    }
    det
}

/// Natural logs of the singular values, sorted decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSingularSpectrum {
    log_alphas: Vec<f64>,
}

impl LogSingularSpectrum {
    pub fn new(log_alphas: Vec<f64>) -> Result<Self> {
        if log_alphas.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        if log_alphas.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::InvalidInput("log singular values must be < +inf".into()));
        }
        if log_alphas.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("log singular values must be sorted decreasing".into()));
        }
        Ok(LogSingularSpectrum { log_alphas })
    }

    pub fn dim(&self) -> usize {
        self.log_alphas.len()
    }

    pub fn log_alphas(&self) -> &[f64] {
        &self.log_alphas
    }

    pub fn log_norm(&self) -> f64 {
        self.log_alphas[0]
    }

    /// `ln |det|` of the underlying product.
    pub fn log_volume(&self) -> f64 {
        self.log_alphas.iter().sum()
    }
}

pub fn singular_spectrum(m: &Matrix) -> Result<LogSingularSpectrum> {
    if !(m.scaled_determinant().abs() >= INVERTIBILITY_TOLERANCE) {
        return Err(Error::SingularMatrix { det: m.scaled_determinant() });
    }
    product_spectrum(std::iter::once(m))
}

/// Log singular values of `A_1 · A_2 ⋯ A_n` for the word `A_1, …, A_n`.
pub fn product_spectrum<'a, I>(word: I) -> Result<LogSingularSpectrum>
where
    I: IntoIterator<Item = &'a Matrix>,
{
    let mut iter = word.into_iter();
    let first = iter.next().ok_or_else(|| Error::InvalidInput("empty word".into()))?;
    let mut acc = ProductAccumulator::new(first.dim());
    acc.push(first)?;
    for m in iter {
        acc.push(m)?;
    }
    Ok(acc.spectrum())
}

/// Streaming accumulator for the singular values of `A_1 ⋯ A_n`, pushed in
/// word order.
///
/// Tracks `(A_1 ⋯ A_k)ᵀ = Q · R` with `Q` orthonormal and `R` upper
/// triangular stored as `diag(exp(g)) · U`, rows of `U` having unit norm.
#[derive(Debug, Clone)]
pub struct ProductAccumulator {
    dim: usize,
    q: Vec<f64>,
    rows: LogScaledRows,
    len: usize,
    scratch: Vec<f64>,
}

impl ProductAccumulator {
    pub fn new(dim: usize) -> Self {
        let mut q = vec![0.0; dim * dim];
        for i in 0..dim {
            q[i * dim + i] = 1.0;
        }
        ProductAccumulator { dim, q, rows: LogScaledRows::identity(dim), len: 0, scratch: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, m: &Matrix) -> Result<()> {
        let n = self.dim;
        if m.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
        }
        // scratch = Aᵀ · Q
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += m.get(k, i) * self.q[k * n + j];
                }
                self.scratch[i * n + j] = s;
            }
        }
        let r = householder_qr(&mut self.scratch, &mut self.q, n);
        self.rows.left_multiply_upper(&r);
        self.len += 1;
        Ok(())
    }

    /// Log singular values of the product pushed so far (identity when empty).
    pub fn spectrum(&self) -> LogSingularSpectrum {
        let log_alphas = self.rows.clone().into_log_singular_values();
        LogSingularSpectrum { log_alphas }
    }

    /// Sum of the log diagonal magnitudes of the triangular factor; equals
    /// `ln |det|` of the product.
    pub fn log_volume(&self) -> f64 {
        self.rows.log_diagonal().iter().sum()
    }
}

/// Upper-triangular-capable square matrix whose rows carry their own log scale.
#[derive(Debug, Clone)]
struct LogScaledRows {
    dim: usize,
    /// unit-norm rows, row-major
    unit: Vec<f64>,
    log_scale: Vec<f64>,
    /// compensation for rounding in the running `log_scale` sums
    log_carry: Vec<f64>,
}

impl LogScaledRows {
    fn identity(dim: usize) -> Self {
        let mut unit = vec![0.0; dim * dim];
        for i in 0..dim {
            unit[i * dim + i] = 1.0;
        }
        LogScaledRows { dim, unit, log_scale: vec![0.0; dim], log_carry: vec![0.0; dim] }
    }

    fn from_matrix_rows(m: &Matrix) -> Self {
        let n = m.dim();
        let mut out = LogScaledRows { dim: n, unit: m.as_slice().to_vec(), log_scale: vec![0.0; n], log_carry: vec![0.0; n] };
        for i in 0..n {
            out.renormalize_row(i);
        }
        out
    }

    fn renormalize_row(&mut self, i: usize) {
        let n = self.dim;
        let row = &mut self.unit[i * n..(i + 1) * n];
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
            let (s, c) = two_sum(self.log_scale[i], norm.ln());
            self.log_scale[i] = s;
            self.log_carry[i] += c;
        } else {
            self.log_scale[i] = f64::NEG_INFINITY;
        }
    }

    /// `self ← r · self` for an upper-triangular `r` (row-major, plain scale).
    fn left_multiply_upper(&mut self, r: &[f64]) {
        let n = self.dim;
        let mut new_unit = vec![0.0; n * n];
        let mut new_scale = vec![0.0; n];
        let mut new_carry = vec![0.0; n];
        for i in 0..n {
            let (lead, top) = (i..n)
                .filter(|&k| r[i * n + k] != 0.0)
                .map(|k| (k, self.log_scale[k] + r[i * n + k].abs().ln()))
                .fold((i, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            let row = &mut new_unit[i * n..(i + 1) * n];
            if top == f64::NEG_INFINITY {
                new_scale[i] = f64::NEG_INFINITY;
                continue;
            }
            for k in i..n {
                let rik = r[i * n + k];
                if rik == 0.0 {
                    continue;
                }
                // offsets are taken against the lead row directly; going through
                // `top` would cancel the low bits of a large accumulated scale
                let lead_r = r[i * n + lead].abs();
                let w = if k == lead {
                    rik.signum()
                } else {
                    rik.signum() * ((self.log_scale[k] - self.log_scale[lead]) + (rik.abs() / lead_r).ln()).exp()
                };
                if w == 0.0 {
                    continue;
                }
                let src = &self.unit[k * n..(k + 1) * n];
                for (dst, s) in row.iter_mut().zip(src) {
                    *dst += w * s;
                }
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
                let (s, c) = two_sum(self.log_scale[lead], r[i * n + lead].abs().ln() + norm.ln());
                new_scale[i] = s;
                new_carry[i] = self.log_carry[lead] + c;
            } else {
                new_scale[i] = f64::NEG_INFINITY;
            }
        }
        self.unit = new_unit;
        self.log_scale = new_scale;
        self.log_carry = new_carry;
    }

    fn log_diagonal(&self) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| self.log_scale[i] + self.log_carry[i] + self.unit[i * n + i].abs().ln()).collect()
    }

    /// One-sided Jacobi on the columns of `selfᵀ`, i.e. on the scaled rows.
    fn into_log_singular_values(mut self) -> Vec<f64> {
        let n = self.dim;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..n {
                for j in i + 1..n {
                    rotated |= self.rotate_pair(i, j);
                }
            }
            if !rotated {
                break;
            }
        }
        let mut out: Vec<f64> = self.log_scale.iter().zip(&self.log_carry).map(|(s, c)| s + c).collect();
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }

    /// Orthogonalizes rows `i` and `j`; returns false when already orthogonal.
    fn rotate_pair(&mut self, i: usize, j: usize) -> bool {
        let n = self.dim;
        if self.log_scale[i] == f64::NEG_INFINITY || self.log_scale[j] == f64::NEG_INFINITY {
            return false;
        }
        let r: f64 = (0..n).map(|k| self.unit[i * n + k] * self.unit[j * n + k]).sum();
        if r.abs() <= JACOBI_TOLERANCE {
            return false;
        }
        // a: larger scale, b: smaller
        let (a, b) = if self.log_scale[i] >= self.log_scale[j] { (i, j) } else { (j, i) };
        let rho = (self.log_scale[b] - self.log_scale[a]).exp();
        let rho2 = rho * rho;
        let eta = (rho2 - 1.0) / (2.0 * r);
        let sign = if eta >= 0.0 { 1.0 } else { -1.0 };
        let tau = sign / (eta.abs() + (rho2 + eta * eta).sqrt());
        let c = 1.0 / (1.0 + rho2 * tau * tau).sqrt();
        for k in 0..n {
            let xa = self.unit[a * n + k];
            let xb = self.unit[b * n + k];
            self.unit[a * n + k] = c * (xa - rho2 * tau * xb);
            self.unit[b * n + k] = c * (tau * xa + xb);
        }
        self.renormalize_row(a);
        self.renormalize_row(b);
        true
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let c = if a.abs() >= b.abs() { (a - s) + b } else { (b - s) + a };
    (s, c)
}

/// In-place Householder QR of the row-major `a` (n×n): `a` is overwritten
/// with scratch data, `q` receives the orthonormal factor, and the upper
/// triangular factor is returned.
fn householder_qr(a: &mut [f64], q: &mut [f64], n: usize) -> Vec<f64> {
    q.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let mut v = vec![0.0; n];
    for col in 0..n.saturating_sub(1) {
        let norm = (col..n).map(|i| a[i * n + col].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[col * n + col] > 0.0 { -norm } else { norm };
        v.iter_mut().for_each(|x| *x = 0.0);
        for i in col..n {
            v[i] = a[i * n + col];
        }
        v[col] -= alpha;
        let vnorm2: f64 = v[col..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // a ← (I − 2vvᵀ/vᵀv) a
        for j in col..n {
            let dot: f64 = (col..n).map(|i| v[i] * a[i * n + j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in col..n {
                a[i * n + j] -= f * v[i];
            }
        }
        // q ← q (I − 2vvᵀ/vᵀv)
        for i in 0..n {
            let dot: f64 = (col..n).map(|k| q[i * n + k] * v[k]).sum();
            let f = 2.0 * dot / vnorm2;
            for k in col..n {
                q[i * n + k] -= f * v[k];
            }
        }
    }
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            r[i * n + j] = a[i * n + j];
        }
    }
    r
}

/// `ln φ^s` of a singular spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvfValue {
    pub s: f64,
    pub log_phi: f64,
}

/// Singular value function in the log domain.
///
/// For `s < d` with `k = ⌊s⌋`: `Σ_{l≤k} ln α_l + (s − k) ln α_{k+1}`;
/// for `s ≥ d`: `(s/d) Σ_l ln α_l`. A zero fractional part drops the last
/// term entirely, so `0 · (−∞) = 0` for limit spectra.
pub fn svf(spec: &LogSingularSpectrum, s: f64) -> Result<SvfValue> {
    Ok(SvfValue { s, log_phi: log_svf(spec.log_alphas(), s)? })
}

pub(crate) fn log_svf(log_alphas: &[f64], s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::NegativeExponent(s));
    }
    let d = log_alphas.len();
    if s >= d as f64 {
        return Ok(s / d as f64 * log_alphas.iter().sum::<f64>());
    }
    let k = s.floor() as usize;
    let frac = s - k as f64;
    let mut acc: f64 = log_alphas[..k].iter().sum();
    if frac > 0.0 {
        acc += frac * log_alphas[k];
    }
    Ok(acc)
}

//! Dense complex linear algebra for the modem, channel and detectors.
//!
//! Matrices are row-major. The least-squares solver works on the normal
//! equations `HᴴH x = Hᴴy` so that the executed arithmetic is the same
//! expression whose complex-multiplication budget the complexity reporter
//! audits.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type ComplexVector<T> = Vec<Complex<T>>;

/// Relative pivot threshold below which the normal matrix is declared singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex<T>) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex<T>] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let acc = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (o, &b) in acc.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Result<ComplexVector<T>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} matrix to length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }
}

/// `n×n` circulant whose first column is `h` zero-padded to `n`.
pub fn circulant_from_taps<T: Real>(h: &[Complex<T>], n: usize) -> Result<ComplexMatrix<T>> {
    if h.is_empty() || h.len() > n {
        return Err(Error::Dimension(format!(
            "circulant of size {n} needs between 1 and {n} taps, got {}",
            h.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let lag = (i + n - j) % n;
        h.get(lag).copied().unwrap_or_else(Complex::zero)
    }))
}

/// Direct circular convolution `(h ⊛ x)[i] = Σ_τ h[τ]·x[(i−τ) mod n]`.
pub fn circular_convolve<T: Real>(h: &[Complex<T>], x: &[Complex<T>]) -> ComplexVector<T> {
    let n = x.len();
    (0..n)
        .map(|i| {
            h.iter()
                .enumerate()
                .fold(Complex::zero(), |acc, (tap, &c)| acc + c * x[(i + n - tap % n) % n])
        })
        .collect()
}

/// Sink for complex-multiplication counts.
trait Tally {
    fn add(&mut self, cms: u64);
}

impl Tally for () {
    #[inline(always)]
    fn add(&mut self, _: u64) {}
}

impl Tally for u64 {
    #[inline(always)]
    fn add(&mut self, cms: u64) {
        *self += cms;
    }
}

fn check_ls_dims<T: Real>(h: &ComplexMatrix<T>, y: &[Complex<T>]) -> Result<()> {
    if y.len() != h.rows {
        return Err(Error::Dimension(format!(
            "observation length {} does not match {} channel rows",
            y.len(),
            h.rows
        )));
    }
    if h.rows < h.cols {
        return Err(Error::Dimension(format!(
            "least squares needs at least as many rows as columns, got {}x{}",
            h.rows, h.cols
        )));
    }
    Ok(())
}

/// Zero-forcing least squares `(HᴴH)⁻¹Hᴴy`, solved by Cholesky factorization
/// of the normal matrix.
pub fn hermitian_ls_solve<T: Real>(h: &ComplexMatrix<T>, y: &[Complex<T>]) -> Result<ComplexVector<T>> {
    normal_cholesky_solve(h, y, &mut ())
}

/// [`hermitian_ls_solve`] that also returns the number of complex
/// multiplications executed. Divisions by a real pivot count as one.
pub fn hermitian_ls_solve_counted<T: Real>(
    h: &ComplexMatrix<T>,
    y: &[Complex<T>],
) -> Result<(ComplexVector<T>, u64)> {
    let mut cms = 0u64;
    let x = normal_cholesky_solve(h, y, &mut cms)?;
    Ok((x, cms))
}

fn normal_cholesky_solve<T: Real>(
    h: &ComplexMatrix<T>,
    y: &[Complex<T>],
    tally: &mut impl Tally,
) -> Result<ComplexVector<T>> {
    check_ls_dims(h, y)?;
    let (q, r) = (h.rows, h.cols);

    // Upper triangle of G = HᴴH accumulated one channel row at a time.
    let mut g = vec![Complex::<T>::zero(); r * r];
    let mut b = vec![Complex::<T>::zero(); r];
    for row in 0..q {
        let hr = h.row(row);
        for i in 0..r {
            let ci = hr[i].conj();
            if ci.is_zero() {
                continue;
            }
            for (gij, &hj) in g[i * r + i..(i + 1) * r].iter_mut().zip(&hr[i..]) {
                *gij += ci * hj;
            }
            b[i] += ci * y[row];
        }
    }
    tally.add((q * r * (r + 1) / 2) as u64);
    tally.add((q * r) as u64);

    // In-place Cholesky: lower factor L stored in the lower triangle of `g`.
    let scale = (0..r).map(|i| g[i * r + i].re).fold(T::zero(), T::max);
    let threshold = T::lit(PIVOT_THRESHOLD) * scale;
    for j in 0..r {
        for i in 0..j {
            g[j * r + i] = g[i * r + j].conj();
        }
    }
    for j in 0..r {
        let mut d = g[j * r + j].re;
        for l_jk in &g[j * r..j * r + j] {
            d -= l_jk.norm_sqr();
        }
        tally.add(j as u64);
        if !(d > threshold) || scale <= T::zero() {
            return Err(Error::RankDeficient {
                column: j,
                pivot: d.to_f64().unwrap_or(f64::NAN),
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
            });
        }
        let l_jj = d.sqrt();
        g[j * r + j] = Complex::new(l_jj, T::zero());
        for i in j + 1..r {
            let (upper, lower) = g.split_at_mut(i * r);
            let row_j = &upper[j * r..j * r + j];
            let row_i = &mut lower[..r];
            let mut s = row_i[j];
            for (l_ik, l_jk) in row_i[..j].iter().zip(row_j) {
                s -= *l_ik * l_jk.conj();
            }
            row_i[j] = s.unscale(l_jj);
        }
        tally.add(((r - j - 1) * (j + 1)) as u64);
    }

    // L z = b
    let mut z = b;
    for i in 0..r {
        let mut s = z[i];
        for k in 0..i {
            s -= g[i * r + k] * z[k];
        }
        z[i] = s.unscale(g[i * r + i].re);
        tally.add((i + 1) as u64);
    }
    // Lᴴ x = z
    let mut x = z;
    for i in (0..r).rev() {
        let mut s = x[i];
        for k in i + 1..r {
            s -= g[k * r + i].conj() * x[k];
        }
        x[i] = s.unscale(g[i * r + i].re);
        tally.add((r - i) as u64);
    }
    Ok(x)
}

/// Zero forcing through the explicit pseudo-inverse: form `HᴴH`, invert it
/// by Gauss–Jordan elimination, multiply by `Hᴴ`, then apply to `y`.
///
/// Returns the estimate together with the complex-multiplication count,
/// which is exactly `2r²q + r³ + rq` for a `q×r` channel.
pub fn pinv_solve_counted<T: Real>(h: &ComplexMatrix<T>, y: &[Complex<T>]) -> Result<(ComplexVector<T>, u64)> {
    check_ls_dims(h, y)?;
    let (q, r) = (h.rows, h.cols);
    let mut cms = 0u64;

    let hh = h.hermitian();
    let mut g = hh.matmul(h)?;
    cms += (r * r * q) as u64;

    let scale = (0..r).map(|i| g.get(i, i).re).fold(T::zero(), T::max);
    let threshold = T::lit(PIVOT_THRESHOLD) * scale;
    // Gauss–Jordan in place without pivoting (G is Hermitian positive
    // definite): n multiplicative operations per pivot and row, n³ total.
    for k in 0..r {
        let pivot = g.get(k, k);
        if !(pivot.norm() > threshold) || scale <= T::zero() {
            return Err(Error::RankDeficient {
                column: k,
                pivot: pivot.norm().to_f64().unwrap_or(f64::NAN),
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
            });
        }
        let inv = pivot.inv();
        cms += 1;
        for j in (0..r).filter(|&j| j != k) {
            let v = g.get(k, j) * inv;
            g.set(k, j, v);
        }
        cms += (r - 1) as u64;
        g.set(k, k, inv);
        for i in (0..r).filter(|&i| i != k) {
            let f = g.get(i, k);
            for j in (0..r).filter(|&j| j != k) {
                let v = g.get(i, j) - f * g.get(k, j);
                g.set(i, j, v);
            }
            g.set(i, k, -(f * inv));
            cms += r as u64;
        }
    }

    let p = g.matmul(&hh)?;
    cms += (r * r * q) as u64;
    let x = p.matvec(y)?;
    cms += (r * q) as u64;
    Ok((x, cms))
}

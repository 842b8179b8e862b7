//! Circulant and Toeplitz matrix–vector products in `O((m+n) log(m+n))`
//! through a radix-2 FFT.
//!
//! A Toeplitz `m x n` matrix is embedded into a circulant of power-of-two
//! order `N >= m + n - 1`; the circulant is diagonalized by the DFT, so the
//! product is `IFFT(FFT(c) ⊙ FFT(x))` followed by truncation.

use num_complex::Complex64;

use crate::dense::{vec_norm, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftDirection {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Circulant,
    Toeplitz,
}

/// Compact circulant or Toeplitz matrix.
///
/// Circulant entry `(i, j)` is `first_col[(i - j) mod n]`. Toeplitz entry
/// `(i, j)` is `first_col[i - j]` below the diagonal and `first_row[j - i]`
/// on or above it.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSpec {
    kind: StructureKind,
    n_rows: usize,
    n_cols: usize,
    first_col: Vec<f64>,
    first_row: Vec<f64>,
}

impl StructuredSpec {
    pub fn circulant(first_col: Vec<f64>) -> Result<Self> {
        if first_col.is_empty() {
            return Err(Error::InvalidArgument("empty circulant".into()));
        }
        check_finite(&first_col)?;
        let n = first_col.len();
        let first_row = (0..n).map(|j| first_col[(n - j) % n]).collect();
        Ok(Self {
            kind: StructureKind::Circulant,
            n_rows: n,
            n_cols: n,
            first_col,
            first_row,
        })
    }

    pub fn toeplitz(first_col: Vec<f64>, first_row: Vec<f64>) -> Result<Self> {
        if first_col.is_empty() || first_row.is_empty() {
            return Err(Error::InvalidArgument("empty Toeplitz generator".into()));
        }
        check_finite(&first_col)?;
        check_finite(&first_row)?;
        if first_col[0] != first_row[0] {
            return Err(Error::InvalidArgument(
                "first_row[0] must equal first_col[0]".into(),
            ));
        }
        Ok(Self {
            kind: StructureKind::Toeplitz,
            n_rows: first_col.len(),
            n_cols: first_row.len(),
            first_col,
            first_row,
        })
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn first_col(&self) -> &[f64] {
        &self.first_col
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            StructureKind::Circulant => {
                let n = self.n_rows;
                self.first_col[(i + n - j) % n]
            }
            StructureKind::Toeplitz => {
                if i >= j {
                    self.first_col[i - j]
                } else {
                    self.first_row[j - i]
                }
            }
        }
    }

    pub fn densify(&self) -> Matrix {
        Matrix::from_fn(self.n_rows, self.n_cols, |i, j| self.entry(i, j))
    }

    /// The transpose, which stays in the same class.
    pub fn transpose(&self) -> StructuredSpec {
        match self.kind {
            StructureKind::Circulant => {
                StructuredSpec::circulant(self.first_row.clone()).expect("valid generator")
            }
            StructureKind::Toeplitz => {
                StructuredSpec::toeplitz(self.first_row.clone(), self.first_col.clone())
                    .expect("valid generator")
            }
        }
    }

    /// Generator of the circulant whose leading block is this matrix.
    fn circulant_generator(&self) -> Vec<f64> {
        match self.kind {
            StructureKind::Circulant => self.first_col.clone(),
            StructureKind::Toeplitz => {
                let size = (self.n_rows + self.n_cols - 1).next_power_of_two();
                let mut c = vec![0.0; size];
                c[..self.n_rows].copy_from_slice(&self.first_col);
                for j in 1..self.n_cols {
                    c[size - j] = self.first_row[j];
                }
                c
            }
        }
    }

    /// Moduli of the eigenvalues of a circulant (its singular values, in DFT
    /// order). `None` for Toeplitz specs.
    pub fn circulant_eigen_moduli(&self) -> Option<Vec<f64>> {
        if self.kind != StructureKind::Circulant {
            return None;
        }
        let n = self.first_col.len();
        let x: Vec<Complex64> = self.first_col.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let spectrum = if n.is_power_of_two() {
            fft(&x, FftDirection::Forward).expect("power of two")
        } else {
            (0..n)
                .map(|k| {
                    x.iter()
                        .enumerate()
                        .map(|(j, v)| {
                            let t = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                            v * Complex64::new(t.cos(), t.sin())
                        })
                        .sum()
                })
                .collect()
        };
        Some(spectrum.iter().map(|z| z.norm()).collect())
    }

    /// Precomputes the spectrum so repeated products reuse one FFT of the
    /// generator.
    pub fn plan(&self) -> Result<StructuredPlan> {
        StructuredPlan::new(self)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(p) => Err(Error::NonFinite { row: p, col: 0 }),
        None => Ok(()),
    }
}

/// In-place iterative radix-2 FFT. The inverse is scaled by `1/N`.
pub fn fft_in_place(x: &mut [Complex64], direction: FftDirection) -> Result<()> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::LengthNotPowerOfTwo(n));
    }
    let bits = n.trailing_zeros();
    if bits > 0 {
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                x.swap(i, j);
            }
        }
    }
    let sign = match direction {
        FftDirection::Forward => -1.0,
        FftDirection::Inverse => 1.0,
    };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * k as f64 / len as f64))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = x[start + k];
                let v = x[start + k + half] * twiddles[k];
                x[start + k] = u + v;
                x[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
    if direction == FftDirection::Inverse {
        let scale = 1.0 / n as f64;
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
    Ok(())
}

pub fn fft(x: &[Complex64], direction: FftDirection) -> Result<Vec<Complex64>> {
    let mut out = x.to_vec();
    fft_in_place(&mut out, direction)?;
    Ok(out)
}

/// Circulant product given the circulant's spectrum; `x` is zero-padded to
/// the spectrum length.
fn circulant_apply(spectrum: &[Complex64], gen_norm: f64, x: &[f64]) -> Result<Vec<f64>> {
    let n = spectrum.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft_in_place(&mut buf, FftDirection::Forward)?;
    for (b, s) in buf.iter_mut().zip(spectrum) {
        *b *= s;
    }
    fft_in_place(&mut buf, FftDirection::Inverse)?;
    let imag = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    debug_assert!(
        imag <= 1e-10 * gen_norm * vec_norm(x) + f64::MIN_POSITIVE,
        "imaginary residue {imag:e} too large"
    );
    Ok(buf.iter().map(|c| c.re).collect())
}

/// Cached spectrum of a structured matrix.
#[derive(Debug, Clone)]
pub struct StructuredPlan {
    rows: usize,
    cols: usize,
    /// DFT of the power-of-two embedding circulant's generator.
    spectrum: Vec<Complex64>,
    gen_norm: f64,
    /// Circulant order when a wrap-around fold is needed.
    fold: Option<usize>,
}

impl StructuredPlan {
    fn new(spec: &StructuredSpec) -> Result<Self> {
        let (gen, fold) = match spec.kind {
            StructureKind::Circulant if spec.n_rows.is_power_of_two() => (spec.circulant_generator(), None),
            StructureKind::Circulant => {
                // C·x = first n entries of the linear convolution folded mod n:
                // (c * x)[i] + (c * x)[i + n]
                let n = spec.n_rows;
                let size = (2 * n - 1).next_power_of_two();
                let mut g = vec![0.0; size];
                g[..n].copy_from_slice(&spec.first_col);
                (g, Some(n))
            }
            StructureKind::Toeplitz => (spec.circulant_generator(), None),
        };
        let gen_norm = vec_norm(&gen);
        let mut spectrum: Vec<Complex64> = gen.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_in_place(&mut spectrum, FftDirection::Forward)?;
        Ok(Self {
            rows: spec.n_rows,
            cols: spec.n_cols,
            spectrum,
            gen_norm,
            fold,
        })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                got: format!("length {}", x.len()),
            });
        }
        let full = circulant_apply(&self.spectrum, self.gen_norm, x)?;
        Ok(match self.fold {
            None => full[..self.rows].to_vec(),
            Some(n) => (0..n)
                .map(|i| full[i] + full.get(i + n).copied().unwrap_or(0.0))
                .collect(),
        })
    }
}

/// Circulant matrix–vector product via FFT.
pub fn circ_mul(spec: &StructuredSpec, x: &[f64]) -> Result<Vec<f64>> {
    if spec.kind != StructureKind::Circulant {
        return Err(Error::InvalidArgument("circ_mul expects a circulant".into()));
    }
    spec.plan()?.apply(x)
}

/// Toeplitz matrix–vector product through a power-of-two circulant embedding.
pub fn toeplitz_mul(spec: &StructuredSpec, x: &[f64]) -> Result<Vec<f64>> {
    if spec.kind != StructureKind::Toeplitz {
        return Err(Error::InvalidArgument("toeplitz_mul expects a Toeplitz matrix".into()));
    }
    spec.plan()?.apply(x)
}

/// Product with either structure.
pub fn structured_mul(spec: &StructuredSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.plan()?.apply(x)
}

/// `spec · A`, one FFT product per column of `A`.
pub fn structured_left_mul(spec: &StructuredSpec, a: &Matrix) -> Result<Matrix> {
    if a.rows() != spec.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", spec.cols()),
            got: format!("{} rows", a.rows()),
        });
    }
    let plan = spec.plan()?;
    let cols = (0..a.cols())
        .map(|j| plan.apply(&a.column(j)))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_columns(&cols)
}

/// `A · spec`, computed as `(specᵀ · Aᵀ)ᵀ`.
pub fn structured_right_mul(a: &Matrix, spec: &StructuredSpec) -> Result<Matrix> {
    if a.cols() != spec.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} columns", spec.rows()),
            got: format!("{} columns", a.cols()),
        });
    }
    let plan = spec.transpose().plan()?;
    let rows = (0..a.rows())
        .map(|i| plan.apply(a.row(i)))
        .collect::<Result<Vec<_>>>()?;
    let r = rows.len();
    let c = spec.cols();
    Matrix::new(r, c, rows.into_iter().flatten().collect())
}

//! Dense tensors and tensor-train (TT) decompositions.
//!
//! Layout: every flat buffer here is first-index-fastest. A tensor entry
//! `T(i₁,…,i_d)` lives at `i₁ + n₁·(i₂ + n₂·(…))`, and core `k` stores
//! `G_k(a, i, b)` at `a + r_{k−1}·(i + n_k·b)`. With that convention every
//! unfolding and every carry reshape in a sweep is a relabeling of the same
//! buffer.

use crate::dense::{qr_positive, thin_svd, Matrix};
use crate::error::{Error, Result};
use crate::random::{gaussian_matrix, RngStream};

/// Default cap on entries materialized by [`tt_reconstruct`].
pub const DEFAULT_MAX_ENTRIES: usize = 100_000_000;

/// Fresh sketches tried by [`tt_randomized`] before giving up on a step.
pub const SKETCH_ATTEMPTS: usize = 3;

const SKETCH_RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn entry_count(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n))
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "tensors need at least two positive dimensions, got {dims:?}"
            )));
        }
        let count = entry_count(&dims).ok_or(Error::TooLarge {
            entries: usize::MAX,
            cap: usize::MAX,
        })?;
        if data.len() != count {
            return Err(Error::DimensionMismatch {
                expected: format!("{count} entries"),
                got: format!("{} entries", data.len()),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("tensor entries must be finite".into()));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let count = entry_count(&dims).unwrap_or(0);
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f(&idx));
            for (k, n) in dims.iter().enumerate() {
                idx[k] += 1;
                if idx[k] < *n {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for k in (0..self.dims.len()).rev() {
            flat = flat * self.dims[k] + idx[k];
        }
        self.data[flat]
    }

    pub fn frobenius(&self) -> f64 {
        crate::dense::vec_norm(&self.data)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }
}

/// Column-major `rows x cols` view of a flat buffer as a [`Matrix`].
fn colmajor_to_matrix(flat: &[f64], rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| flat[i + rows * j])
}

fn matrix_to_colmajor(m: &Matrix) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for (j, v) in m.row(i).iter().enumerate() {
            out[i + rows * j] = *v;
        }
    }
    out
}

/// `k`-th unfolding (`1 ≤ k ≤ d−1`): rows indexed by `(i₁…i_k)`, columns by
/// `(i_{k+1}…i_d)`, first index fastest in both.
pub fn unfold(t: &DenseTensor, k: usize) -> Result<Matrix> {
    let d = t.order();
    if k == 0 || k >= d {
        return Err(Error::IndexOutOfRange { index: k, max: d - 1 });
    }
    let rows: usize = t.dims[..k].iter().product();
    let cols: usize = t.dims[k..].iter().product();
    Ok(colmajor_to_matrix(&t.data, rows, cols))
}

/// One order-3 core `G(a, i, b)` of shape `r_left x n x r_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct TtCore {
    pub r_left: usize,
    pub n: usize,
    pub r_right: usize,
    /// `G(a, i, b)` at `a + r_left·(i + n·b)`.
    pub data: Vec<f64>,
}

impl TtCore {
    pub fn new(r_left: usize, n: usize, r_right: usize, data: Vec<f64>) -> Result<Self> {
        if r_left == 0 || n == 0 || r_right == 0 || data.len() != r_left * n * r_right {
            return Err(Error::ShapeMismatch(format!(
                "core {r_left}x{n}x{r_right} with {} entries",
                data.len()
            )));
        }
        Ok(Self { r_left, n, r_right, data })
    }

    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[a + self.r_left * (i + self.n * b)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtTrain {
    cores: Vec<TtCore>,
}

impl TtTrain {
    /// Checks `r₀ = r_d = 1` and that adjacent ranks chain.
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        if cores.len() < 2 {
            return Err(Error::ShapeMismatch("a train needs at least two cores".into()));
        }
        if cores[0].r_left != 1 || cores[cores.len() - 1].r_right != 1 {
            return Err(Error::ShapeMismatch("boundary ranks must be 1".into()));
        }
        for (k, w) in cores.windows(2).enumerate() {
            if w[0].r_right != w[1].r_left {
                return Err(Error::ShapeMismatch(format!(
                    "core {} has right rank {} but core {} has left rank {}",
                    k + 1,
                    w[0].r_right,
                    k + 2,
                    w[1].r_left
                )));
            }
        }
        Ok(Self { cores })
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.n).collect()
    }

    /// `(r₁, …, r_{d−1})`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(|c| c.r_right).collect()
    }

    /// Number of stored parameters.
    pub fn parameter_count(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }
}

/// Contracts the cores left to right into a dense tensor, refusing to
/// materialize more than `max_entries` values.
pub fn tt_reconstruct_capped(train: &TtTrain, max_entries: usize) -> Result<DenseTensor> {
    let dims = train.dims();
    let total = entry_count(&dims).unwrap_or(usize::MAX);
    if total > max_entries {
        return Err(Error::TooLarge {
            entries: total,
            cap: max_entries,
        });
    }
    // acc is column-major (P x r) with P = n₁⋯n_k
    let mut acc: Vec<f64> = vec![1.0];
    let mut p = 1usize;
    for core in train.cores() {
        let (r, n, s) = (core.r_left, core.n, core.r_right);
        let mut next = vec![0.0; p * n * s];
        // next(p', i + n·b) = Σ_a acc(p', a) · G(a, i, b)
        for col in 0..n * s {
            let g = &core.data[r * col..r * (col + 1)];
            let out = &mut next[p * col..p * (col + 1)];
            for (a, &ga) in g.iter().enumerate() {
                if ga == 0.0 {
                    continue;
                }
                let src = &acc[p * a..p * (a + 1)];
                for (o, &x) in out.iter_mut().zip(src) {
                    *o += x * ga;
                }
            }
        }
        acc = next;
        p *= n;
    }
    DenseTensor::new(dims, acc)
}

pub fn tt_reconstruct(train: &TtTrain) -> Result<DenseTensor> {
    tt_reconstruct_capped(train, DEFAULT_MAX_ENTRIES)
}

/// `‖T − reconstruct(train)‖_F`.
pub fn tt_error(t: &DenseTensor, train: &TtTrain) -> Result<f64> {
    if train.dims() != t.dims() {
        return Err(Error::ShapeMismatch(format!(
            "tensor {:?} vs train {:?}",
            t.dims(),
            train.dims()
        )));
    }
    Ok(t.sub(&tt_reconstruct(train)?)?.frobenius())
}

/// How [`tt_svd`] picks each rank.
#[derive(Debug, Clone, PartialEq)]
pub enum TtTruncation {
    /// Fixed `(r₁, …, r_{d−1})`.
    Ranks(Vec<usize>),
    /// Minimal ranks whose discarded Frobenius tail at every sweep is at
    /// most `tol · ‖T‖_F / √(d−1)`.
    Tolerance(f64),
}

#[derive(Debug, Clone)]
pub struct TtSvdOutput {
    pub train: TtTrain,
    /// Frobenius norm of the singular values discarded at each sweep.
    pub tails: Vec<f64>,
}

impl TtSvdOutput {
    /// `√(Σ_k tails_k²)`, an upper bound on the reconstruction error.
    pub fn error_bound(&self) -> f64 {
        self.tails.iter().map(|t| t * t).sum::<f64>().sqrt()
    }
}

fn check_rank(mode: usize, requested: usize, rows: usize, cols: usize) -> Result<()> {
    let bound = rows.min(cols);
    if requested == 0 || requested > bound {
        return Err(Error::RankTooLarge {
            mode,
            requested,
            bound,
        });
    }
    Ok(())
}

fn tail_norm(sigma: &[f64], keep: usize) -> f64 {
    sigma[keep.min(sigma.len())..].iter().map(|s| s * s).sum::<f64>().sqrt()
}

fn last_core(carry: Vec<f64>, r: usize, n: usize) -> Result<TtCore> {
    TtCore::new(r, n, 1, carry)
}

/// TT-SVD: sweeps `k = 1..d−1`, truncating the SVD of the current unfolding
/// and carrying `Σ·Vᵀ` forward as the next unfolding.
pub fn tt_svd(t: &DenseTensor, truncation: &TtTruncation) -> Result<TtSvdOutput> {
    let d = t.order();
    if let TtTruncation::Ranks(r) = truncation {
        if r.len() != d - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} ranks for an order-{d} tensor",
                r.len()
            )));
        }
    }
    let budget = match truncation {
        TtTruncation::Tolerance(tol) => {
            if !(*tol >= 0.0) {
                return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
            }
            tol * t.frobenius() / ((d - 1) as f64).sqrt()
        }
        TtTruncation::Ranks(_) => 0.0,
    };
    let mut cores = Vec::with_capacity(d);
    let mut tails = Vec::with_capacity(d - 1);
    let mut carry = t.data.clone();
    let mut r_prev = 1usize;
    let mut rest: usize = t.dims.iter().product();
    for k in 0..d - 1 {
        let n = t.dims[k];
        let rows = r_prev * n;
        rest /= n;
        let c = colmajor_to_matrix(&carry, rows, rest);
        let f = thin_svd(&c)?;
        let r = match truncation {
            TtTruncation::Ranks(ranks) => {
                check_rank(k + 1, ranks[k], rows, rest)?;
                ranks[k]
            }
            TtTruncation::Tolerance(_) => (1..=f.sigma.len())
                .find(|&r| tail_norm(&f.sigma, r) <= budget)
                .unwrap_or(f.sigma.len()),
        };
        tails.push(tail_norm(&f.sigma, r));
        let u = f.s.leading_columns(r);
        cores.push(TtCore::new(r_prev, n, r, matrix_to_colmajor(&u))?);
        // Σ_r·V_rᵀ, r x rest
        let sv = Matrix::from_fn(r, rest, |i, j| f.sigma[i] * f.t.get(j, i));
        carry = matrix_to_colmajor(&sv);
        r_prev = r;
    }
    cores.push(last_core(carry, r_prev, t.dims[d - 1])?);
    Ok(TtSvdOutput {
        train: TtTrain::new(cores)?,
        tails,
    })
}

/// Orthonormal basis for the range of a sketch with at least `r`
/// numerically independent columns.
fn sketch_basis(sketch: &Matrix, r: usize) -> Option<Matrix> {
    match qr_positive(sketch) {
        Ok(f) => Some(f.q),
        Err(_) => {
            // oversampled sketches of exactly low-rank unfoldings
            let f = thin_svd(sketch).ok()?;
            let top = f.sigma.first().copied().unwrap_or(0.0);
            let rank = f.sigma.iter().take_while(|&&s| s > SKETCH_RANK_TOL * top).count();
            (top > 0.0 && rank >= r).then(|| f.s.leading_columns(rank))
        }
    }
}

/// Randomized TT compression. Each sweep sketches the current unfolding
/// `C` as `C·H` with Gaussian `H` (`r_k + oversample` columns),
/// orthonormalizes the sketch into `Q`, takes a small SVD of `QᵀC` to pick
/// and order `r_k` directions `U_r`, stores `Q·U_r` as the core and carries
/// `U_rᵀ·QᵀC` forward. No SVD of a full unfolding is ever taken.
pub fn tt_randomized(
    t: &DenseTensor,
    ranks: &[usize],
    oversample: usize,
    rng: &mut RngStream,
) -> Result<TtTrain> {
    let d = t.order();
    if ranks.len() != d - 1 {
        return Err(Error::ShapeMismatch(format!(
            "{} ranks for an order-{d} tensor",
            ranks.len()
        )));
    }
    let mut cores = Vec::with_capacity(d);
    let mut carry = t.data.clone();
    let mut r_prev = 1usize;
    let mut rest: usize = t.dims.iter().product();
    for k in 0..d - 1 {
        let n = t.dims[k];
        let rows = r_prev * n;
        rest /= n;
        let r = ranks[k];
        check_rank(k + 1, r, rows, rest)?;
        let width = (r + oversample).min(rows).min(rest);
        let c = colmajor_to_matrix(&carry, rows, rest);
        let mut q = None;
        for _ in 0..SKETCH_ATTEMPTS {
            let h = gaussian_matrix(rest, width, 0.0, 1.0, rng)?;
            if let Some(basis) = sketch_basis(&c.matmul(&h)?, r) {
                q = Some(basis);
                break;
            }
        }
        let q = q.ok_or(Error::RankDeficientSketch {
            attempts: SKETCH_ATTEMPTS,
        })?;
        let b = q.tr_matmul(&c)?;
        let f = thin_svd(&b)?;
        let ur = f.s.leading_columns(r);
        let left = q.matmul(&ur)?;
        cores.push(TtCore::new(r_prev, n, r, matrix_to_colmajor(&left))?);
        carry = matrix_to_colmajor(&ur.tr_matmul(&b)?);
        r_prev = r;
    }
    cores.push(last_core(carry, r_prev, t.dims[d - 1])?);
    TtTrain::new(cores)
}

/// Random train with Gaussian cores; useful for building tensors of known
/// TT ranks.
pub fn random_train(dims: &[usize], ranks: &[usize], rng: &mut RngStream) -> Result<TtTrain> {
    if dims.len() < 2 || ranks.len() != dims.len() - 1 {
        return Err(Error::ShapeMismatch(format!(
            "{} ranks for {} dims",
            ranks.len(),
            dims.len()
        )));
    }
    let mut cores = Vec::with_capacity(dims.len());
    for (k, &n) in dims.iter().enumerate() {
        let rl = if k == 0 { 1 } else { ranks[k - 1] };
        let rr = if k + 1 == dims.len() { 1 } else { ranks[k] };
        let data = (0..rl * n * rr).map(|_| rng.gaussian()).collect();
        cores.push(TtCore::new(rl, n, rr, data)?);
    }
    TtTrain::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{frobenius, numerical_rank};

    #[test]
    fn unfolding_examples() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = unfold(&t, 1).unwrap();
        assert_eq!(m, Matrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]).unwrap());
        assert_eq!(t.get(&[1, 0]), 2.0);
        assert!(unfold(&t, 2).is_err());
        assert!(unfold(&t, 0).is_err());

        let t = DenseTensor::from_fn(vec![2, 3, 2], |i| (i[0] + 2 * i[1] + 6 * i[2]) as f64).unwrap();
        let m = unfold(&t, 2).unwrap();
        assert_eq!(m.shape(), (6, 2));
        assert_eq!(frobenius(&m), t.frobenius());
        assert_eq!(m.get(5, 1), t.get(&[1, 2, 1]));
    }

    #[test]
    fn rank_one_unfoldings() {
        let u = [1.0, -2.0];
        let v = [0.5, 1.0, 3.0];
        let w = [2.0, -1.0, 1.0, 4.0];
        let t = DenseTensor::from_fn(vec![2, 3, 4], |i| u[i[0]] * v[i[1]] * w[i[2]]).unwrap();
        for k in 1..3 {
            assert_eq!(numerical_rank(&unfold(&t, k).unwrap(), 1e-12), 1);
        }
        let out = tt_svd(&t, &TtTruncation::Ranks(vec![1, 1])).unwrap();
        assert!(tt_error(&t, &out.train).unwrap() <= 1e-12 * t.frobenius());
    }

    #[test]
    fn reconstruct_examples() {
        let ones = TtTrain::new(vec![
            TtCore::new(1, 2, 1, vec![1.0; 2]).unwrap(),
            TtCore::new(1, 2, 1, vec![1.0; 2]).unwrap(),
            TtCore::new(1, 2, 1, vec![1.0; 2]).unwrap(),
        ])
        .unwrap();
        let t = tt_reconstruct(&ones).unwrap();
        assert!(t.as_slice().iter().all(|&x| x == 1.0));

        // d = 2: G₁ (n₁ x r) times G₂ (r x n₂)
        let g1 = TtCore::new(1, 3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let g2 = TtCore::new(2, 2, 1, vec![1.0, -1.0, 0.5, 2.0]).unwrap();
        let t = tt_reconstruct(&TtTrain::new(vec![g1.clone(), g2.clone()]).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let expect: f64 = (0..2).map(|a| g1.get(0, i, a) * g2.get(a, j, 0)).sum();
                assert_eq!(t.get(&[i, j]), expect);
            }
        }
        assert!(matches!(
            tt_reconstruct_capped(&ones, 7),
            Err(Error::TooLarge { entries: 8, cap: 7 })
        ));
    }

    #[test]
    fn full_rank_two_way() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        let out = tt_svd(&t, &TtTruncation::Ranks(vec![2])).unwrap();
        assert!(tt_error(&t, &out.train).unwrap() < 1e-14);
        assert!(matches!(
            tt_svd(&t, &TtTruncation::Ranks(vec![3])),
            Err(Error::RankTooLarge { mode: 1, requested: 3, bound: 2 })
        ));
    }

    #[test]
    fn zero_train_error_is_tensor_norm() {
        let t = DenseTensor::from_fn(vec![2, 3], |i| (i[0] + i[1]) as f64).unwrap();
        let z = TtTrain::new(vec![
            TtCore::new(1, 2, 1, vec![0.0; 2]).unwrap(),
            TtCore::new(1, 3, 1, vec![0.0; 3]).unwrap(),
        ])
        .unwrap();
        assert_eq!(tt_error(&t, &z).unwrap(), t.frobenius());
        let wrong = TtTrain::new(vec![
            TtCore::new(1, 3, 1, vec![0.0; 3]).unwrap(),
            TtCore::new(1, 2, 1, vec![0.0; 2]).unwrap(),
        ])
        .unwrap();
        assert!(matches!(tt_error(&t, &wrong), Err(Error::ShapeMismatch(_))));
    }
}

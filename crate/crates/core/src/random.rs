//! Seeded generators for multipliers and test matrices.
//!
//! Every draw goes through an [`RngStream`], a ChaCha20 keystream selected by
//! `(seed, stream_id)`. Trials use distinct stream ids so they can run in any
//! order (or in parallel) and still reproduce bit-for-bit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::dense::{self, Matrix};
use crate::error::{Error, Result};
use crate::structured::{self, StructuredSpec};

/// Counter-based random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream for trial `trial` of experiment `tag`.
    pub fn for_trial(seed: u64, tag: u32, trial: u32) -> Self {
        Self::new(seed, (u64::from(tag) << 32) | u64::from(trial))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream derived from this one, for retries.
    pub fn split(&mut self) -> RngStream {
        let id = self.rng.random::<u64>();
        RngStream::new(self.seed ^ 0xA5A5_5A5A_DEAD_BEEF, id)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[-1, 1)`.
    pub fn uniform_pm1(&mut self) -> f64 {
        self.rng.random::<f64>() * 2.0 - 1.0
    }

    /// `-1` or `+1` with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.random_range(lo..=hi)
    }
}

/// Sampling law and structure of a random multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierKind {
    Gaussian { mu: f64, sigma: f64 },
    UniformPm1,
    ToeplitzGaussian,
    CirculantGaussian,
    CirculantSign,
    HouseholderSign,
}

impl MultiplierKind {
    pub const STANDARD_GAUSSIAN: MultiplierKind = MultiplierKind::Gaussian { mu: 0.0, sigma: 1.0 };

    pub fn is_structured(&self) -> bool {
        matches!(
            self,
            Self::ToeplitzGaussian | Self::CirculantGaussian | Self::CirculantSign
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::UniformPm1 => "uniform",
            Self::ToeplitzGaussian => "toeplitz",
            Self::CirculantGaussian => "circulant",
            Self::CirculantSign => "circulant-sign",
            Self::HouseholderSign => "householder-sign",
        }
    }
}

impl fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MultiplierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian" => Self::STANDARD_GAUSSIAN,
            "uniform" => Self::UniformPm1,
            "toeplitz" => Self::ToeplitzGaussian,
            "circulant" => Self::CirculantGaussian,
            "circulant-sign" => Self::CirculantSign,
            "householder-sign" => Self::HouseholderSign,
            other => return Err(Error::InvalidArgument(format!("unknown multiplier '{other}'"))),
        })
    }
}

pub fn gaussian_matrix(m: usize, n: usize, mu: f64, sigma: f64, rng: &mut RngStream) -> Result<Matrix> {
    if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
        return Err(Error::InvalidArgument("gaussian law needs sigma > 0".into()));
    }
    Ok(Matrix::from_fn(m, n, |_, _| mu + sigma * rng.gaussian()))
}

pub fn uniform_matrix(m: usize, n: usize, rng: &mut RngStream) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.uniform_pm1())
}

/// Random Toeplitz or circulant matrix in compact form.
pub fn random_structured(kind: MultiplierKind, m: usize, n: usize, rng: &mut RngStream) -> Result<StructuredSpec> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimensions {
            rows: m,
            cols: n,
            reason: "structured matrices must be non-empty",
        });
    }
    match kind {
        MultiplierKind::ToeplitzGaussian => {
            let col: Vec<f64> = (0..m).map(|_| rng.gaussian()).collect();
            let mut row = vec![col[0]];
            row.extend((1..n).map(|_| rng.gaussian()));
            StructuredSpec::toeplitz(col, row)
        }
        MultiplierKind::CirculantGaussian | MultiplierKind::CirculantSign => {
            if m != n {
                return Err(Error::DimensionMismatch {
                    expected: "square circulant".into(),
                    got: format!("{m}x{n}"),
                });
            }
            let col = (0..n)
                .map(|_| {
                    if kind == MultiplierKind::CirculantSign {
                        rng.sign()
                    } else {
                        rng.gaussian()
                    }
                })
                .collect();
            StructuredSpec::circulant(col)
        }
        other => Err(Error::InvalidArgument(format!("{other} is not a structured kind"))),
    }
}

/// `I − u·vᵀ / (uᵀv)`; `Degenerate` when `uᵀv = 0`.
pub fn householder_from_vectors(u: &[f64], v: &[f64]) -> Result<Matrix> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: format!("vectors of length {}", u.len()),
            got: format!("length {}", v.len()),
        });
    }
    let utv = dense::dot(u, v);
    if utv == 0.0 {
        return Err(Error::Degenerate { attempts: 1 });
    }
    let n = u.len();
    Ok(Matrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - u[i] * v[j] / utv
    }))
}

const HOUSEHOLDER_ATTEMPTS: usize = 64;

/// Sign Householder multiplier `I − u·vᵀ/(uᵀv)` with `u, v ∈ {−1, 1}ⁿ`,
/// resampled until `uᵀv ≠ 0`. Not orthogonal in general.
pub fn householder_sign(n: usize, rng: &mut RngStream) -> Result<Matrix> {
    for _ in 0..HOUSEHOLDER_ATTEMPTS {
        let u: Vec<f64> = (0..n).map(|_| rng.sign()).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.sign()).collect();
        match householder_from_vectors(&u, &v) {
            Err(Error::Degenerate { .. }) => continue,
            other => return other,
        }
    }
    Err(Error::Degenerate {
        attempts: HOUSEHOLDER_ATTEMPTS,
    })
}

/// Orthogonal factor of the positive-diagonal QR of a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut RngStream) -> Result<Matrix> {
    let g = gaussian_matrix(n, n, 0.0, 1.0, rng)?;
    match dense::qr_positive(&g) {
        Ok(f) => Ok(f.q),
        Err(Error::RankDeficient { .. }) => {
            let mut retry = rng.split();
            let g = gaussian_matrix(n, n, 0.0, 1.0, &mut retry)?;
            Ok(dense::qr_positive(&g)?.q)
        }
        Err(e) => Err(e),
    }
}

/// Matrix with a prescribed spectrum together with its singular factors.
#[derive(Debug, Clone)]
pub struct ProfiledMatrix {
    pub matrix: Matrix,
    pub left: Matrix,
    pub right: Matrix,
    pub sigmas: Vec<f64>,
}

/// Singular values `1/j` for `j <= rho`, then `1e-10`.
pub fn step_profile(n: usize, rho: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| if j <= rho { 1.0 / j as f64 } else { 1e-10 })
        .collect()
}

/// `S · diag(sigmas) · Tᵀ` with random orthogonal `S`, `T`; keeps the factors.
pub fn profile_matrix_with_factors(n: usize, sigmas: &[f64], rng: &mut RngStream) -> Result<ProfiledMatrix> {
    if sigmas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} singular values"),
            got: format!("{}", sigmas.len()),
        });
    }
    if sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) || sigmas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::ProfileNotSorted);
    }
    let left = random_orthogonal(n, rng)?;
    let right = random_orthogonal(n, rng)?;
    let scaled = Matrix::from_fn(n, n, |i, j| left.get(i, j) * sigmas[j]);
    let matrix = scaled.matmul(&right.transpose())?;
    Ok(ProfiledMatrix {
        matrix,
        left,
        right,
        sigmas: sigmas.to_vec(),
    })
}

pub fn profile_matrix(n: usize, sigmas: &[f64], rng: &mut RngStream) -> Result<Matrix> {
    Ok(profile_matrix_with_factors(n, sigmas, rng)?.matrix)
}

/// Linear system with a well conditioned matrix whose leading `n/2` block is
/// ill conditioned, plus its known solution.
#[derive(Debug, Clone)]
pub struct IllBlockSystem {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub solution: Vec<f64>,
}

pub const ILLBLOCK_MAX_COND: f64 = 1e4;
pub const ILLBLOCK_MIN_BLOCK_COND: f64 = 1e8;
pub const ILLBLOCK_SMALL_SIGMA: f64 = 1e-18;
const ILLBLOCK_ATTEMPTS: usize = 8;

pub fn illblock_system(n: usize, rng: &mut RngStream) -> Result<IllBlockSystem> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("illblock_system needs even n >= 4, got {n}")));
    }
    let h = n / 2;
    let small = (h / 4).max(1);
    let sigmas: Vec<f64> = (0..h).map(|j| if j < h - small { 1.0 } else { ILLBLOCK_SMALL_SIGMA }).collect();
    let mut last_cond = f64::NAN;
    for _ in 0..ILLBLOCK_ATTEMPTS {
        let lead = profile_matrix(h, &sigmas, rng)?;
        let rest = uniform_matrix(n, n, rng);
        let a = Matrix::from_fn(n, n, |i, j| {
            if i < h && j < h {
                lead.get(i, j)
            } else {
                rest.get(i, j)
            }
        });
        let cond = dense::cond2(&a, 0.0)?;
        let block_cond = dense::cond2(&a.leading_block(h), 0.0)?;
        last_cond = cond;
        if cond <= ILLBLOCK_MAX_COND && block_cond >= ILLBLOCK_MIN_BLOCK_COND {
            let solution: Vec<f64> = (0..n).map(|_| rng.uniform_pm1()).collect();
            let b = a.matvec(&solution)?;
            return Ok(IllBlockSystem { a, b, solution });
        }
    }
    Err(Error::ConstructionFailed {
        attempts: ILLBLOCK_ATTEMPTS,
        reason: format!("last candidate had cond {last_cond:e}"),
    })
}

/// A drawn multiplier, dense or structured.
#[derive(Debug, Clone)]
pub enum Multiplier {
    Dense(Matrix),
    Structured(StructuredSpec),
}

impl Multiplier {
    /// Draws a `rows x cols` multiplier of the given kind.
    pub fn draw(kind: MultiplierKind, rows: usize, cols: usize, rng: &mut RngStream) -> Result<Multiplier> {
        Ok(match kind {
            MultiplierKind::Gaussian { mu, sigma } => Multiplier::Dense(gaussian_matrix(rows, cols, mu, sigma, rng)?),
            MultiplierKind::UniformPm1 => Multiplier::Dense(uniform_matrix(rows, cols, rng)),
            MultiplierKind::HouseholderSign => {
                if rows != cols {
                    return Err(Error::DimensionMismatch {
                        expected: "square Householder multiplier".into(),
                        got: format!("{rows}x{cols}"),
                    });
                }
                Multiplier::Dense(householder_sign(rows, rng)?)
            }
            structured => Multiplier::Structured(random_structured(structured, rows, cols, rng)?),
        })
    }

    pub fn rows(&self) -> usize {
        match self {
            Self::Dense(m) => m.rows(),
            Self::Structured(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Self::Dense(m) => m.cols(),
            Self::Structured(s) => s.cols(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Self::Dense(m) => m.clone(),
            Self::Structured(s) => s.densify(),
        }
    }

    pub fn transpose(&self) -> Multiplier {
        match self {
            Self::Dense(m) => Self::Dense(m.transpose()),
            Self::Structured(s) => Self::Structured(s.transpose()),
        }
    }

    /// `M · x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Dense(m) => m.matvec(x),
            Self::Structured(s) => structured::structured_mul(s, x),
        }
    }

    /// `M · A`.
    pub fn left_mul(&self, a: &Matrix) -> Result<Matrix> {
        match self {
            Self::Dense(m) => m.matmul(a),
            Self::Structured(s) => structured::structured_left_mul(s, a),
        }
    }

    /// `A · M`.
    pub fn right_mul(&self, a: &Matrix) -> Result<Matrix> {
        match self {
            Self::Dense(m) => a.matmul(m),
            Self::Structured(s) => structured::structured_right_mul(a, s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{frobenius, svd};

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = gaussian_matrix(2, 2, 0.0, 1.0, &mut RngStream::new(5, 0)).unwrap();
        let b = gaussian_matrix(2, 2, 0.0, 1.0, &mut RngStream::new(5, 0)).unwrap();
        let c = gaussian_matrix(2, 2, 0.0, 1.0, &mut RngStream::new(5, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(gaussian_matrix(2, 2, 0.0, 0.0, &mut RngStream::new(5, 0)).is_err());
        let u1 = uniform_matrix(3, 3, &mut RngStream::new(9, 2));
        let u2 = uniform_matrix(3, 3, &mut RngStream::new(9, 2));
        assert_eq!(u1, u2);
    }

    #[test]
    fn gaussian_moments() {
        let g = gaussian_matrix(200, 200, 0.0, 1.0, &mut RngStream::new(17, 0)).unwrap();
        let n = g.as_slice().len() as f64;
        let mean = g.as_slice().iter().sum::<f64>() / n;
        let var = g.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        // 40000 draws: std error of the mean 0.005, of the variance ~0.007
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!(var > 0.9 && var < 1.1, "var {var}");

        let g = gaussian_matrix(100, 100, 0.0, 1.0, &mut RngStream::new(18, 0)).unwrap();
        let outside = g.as_slice().iter().filter(|x| x.abs() > 4.0).count();
        assert!(outside <= 3, "{outside} entries outside ±4σ");
    }

    #[test]
    fn uniform_range_and_mean() {
        let u = uniform_matrix(500, 500, &mut RngStream::new(3, 0));
        assert!(u.as_slice().iter().all(|&x| (-1.0..1.0).contains(&x)));
        let mean = u.as_slice().iter().sum::<f64>() / 250_000.0;
        // std error 1/sqrt(3 * 250000) ≈ 0.00115
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn structured_draws() {
        let mut rng = RngStream::new(1, 0);
        let c = random_structured(MultiplierKind::CirculantSign, 4, 4, &mut rng).unwrap();
        assert!(c.first_col().iter().all(|&x| x == 1.0 || x == -1.0));
        let d = c.densify();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d.get(i, j), d.get((i + 1) % 4, (j + 1) % 4));
            }
        }
        let t = random_structured(MultiplierKind::ToeplitzGaussian, 3, 2, &mut rng).unwrap();
        let d = t.densify();
        assert_eq!(d.get(0, 0), d.get(1, 1));
        assert_eq!(d.get(1, 0), d.get(2, 1));
        assert!(matches!(
            random_structured(MultiplierKind::CirculantGaussian, 3, 4, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));

        let c = random_structured(MultiplierKind::CirculantSign, 64, 64, &mut rng).unwrap();
        let x: Vec<f64> = (0..64).map(|_| rng.gaussian()).collect();
        let fast = structured::circ_mul(&c, &x).unwrap();
        let slow = c.densify().matvec(&x).unwrap();
        let err: f64 = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12 * dense::vec_norm(&slow));
        assert!(dense::two_norm(&c.densify()) <= 64.0);
    }

    #[test]
    fn householder_formula() {
        let ones = vec![1.0; 5];
        let h = householder_from_vectors(&ones, &ones).unwrap();
        for i in 0..5 {
            assert!(h.row(i).iter().sum::<f64>().abs() < 1e-15);
        }
        assert_eq!(
            householder_from_vectors(&[1.0, 1.0], &[1.0, -1.0]),
            Err(Error::Degenerate { attempts: 1 })
        );
        let mut rng = RngStream::new(4, 0);
        for _ in 0..10 {
            let h = householder_sign(2, &mut rng).unwrap();
            assert!(h.all_finite());
        }
    }

    #[test]
    fn householder_annihilates_u() {
        let mut rng = RngStream::new(8, 3);
        let (u, v) = loop {
            let u: Vec<f64> = (0..8).map(|_| rng.sign()).collect();
            let v: Vec<f64> = (0..8).map(|_| rng.sign()).collect();
            if dense::dot(&u, &v) != 0.0 {
                break (u, v);
            }
        };
        let h = householder_from_vectors(&u, &v).unwrap();
        assert!(h.matvec(&u).unwrap().iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn orthogonal_draws() {
        // with R > 0 the 1x1 factor is the sign of the Gaussian draw
        for seed in 0..8 {
            let q1 = random_orthogonal(1, &mut RngStream::new(seed, 0)).unwrap();
            assert!((q1.as_slice()[0].abs() - 1.0).abs() < 1e-15);
        }
        let q = random_orthogonal(16, &mut RngStream::new(2, 0)).unwrap();
        let e = frobenius(&q.tr_matmul(&q).unwrap().sub(&Matrix::identity(16)).unwrap());
        assert!(e < 1e-12 * 16.0);
        let f = svd(&q).unwrap();
        assert!(f.sigma.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn profiles() {
        let mut rng = RngStream::new(6, 0);
        let q = profile_matrix(4, &[1.0; 4], &mut rng).unwrap();
        let e = frobenius(&q.tr_matmul(&q).unwrap().sub(&Matrix::identity(4)).unwrap());
        assert!(e < 1e-13);
        let a = profile_matrix(3, &[3.0, 2.0, 1.0], &mut rng).unwrap();
        let f = svd(&a).unwrap();
        for (s, e) in f.sigma.iter().zip([3.0, 2.0, 1.0]) {
            assert!((s - e).abs() < 1e-12 * 3.0);
        }
        let p = profile_matrix(64, &step_profile(64, 8), &mut rng).unwrap();
        assert_eq!(dense::numerical_rank(&p, 1e-6), 8);
        let sv = dense::singular_values(&p);
        assert!((sv[0] - 1.0).abs() < 1e-12);
        assert!(matches!(
            profile_matrix(2, &[1.0, 2.0], &mut rng),
            Err(Error::ProfileNotSorted)
        ));
    }

    #[test]
    fn illblock_small() {
        let mut rng = RngStream::new(12, 0);
        let sys = illblock_system(4, &mut rng).unwrap();
        assert!(dense::cond2(&sys.a, 0.0).unwrap() <= 1e4);
        assert!(dense::cond2(&sys.a.leading_block(2), 0.0).unwrap() >= 1e8);
        assert_eq!(sys.a.matvec(&sys.solution).unwrap(), sys.b);
        assert!(illblock_system(5, &mut rng).is_err());
    }

    #[test]
    fn multiplier_products_match_dense() {
        let mut rng = RngStream::new(21, 0);
        let a = uniform_matrix(6, 6, &mut rng);
        for kind in [
            MultiplierKind::STANDARD_GAUSSIAN,
            MultiplierKind::UniformPm1,
            MultiplierKind::ToeplitzGaussian,
            MultiplierKind::CirculantGaussian,
            MultiplierKind::CirculantSign,
            MultiplierKind::HouseholderSign,
        ] {
            let m = Multiplier::draw(kind, 6, 6, &mut rng).unwrap();
            let d = m.to_dense();
            let l = m.left_mul(&a).unwrap().sub(&d.matmul(&a).unwrap()).unwrap();
            let r = m.right_mul(&a).unwrap().sub(&a.matmul(&d).unwrap()).unwrap();
            assert!(frobenius(&l) < 1e-12 && frobenius(&r) < 1e-12, "{kind}");
            assert_eq!(kind.name().parse::<MultiplierKind>().unwrap().name(), kind.name());
        }
    }
}

//! Dense matrices and the deterministic factorizations the randomized
//! algorithms are checked against: norms, QR with positive diagonal, full
//! SVD, pseudo-inverse, condition number and numerical rank.
//!
//! The SVD itself is delegated to `faer`; everything around it (full-basis completion, ordering, sign
//! normalization, truncation) lives here.

mod matrix;

pub use matrix::{dot, vec_norm, Matrix};

use crate::error::{Error, Result};

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    One,
    Two,
    Inf,
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Thin QR factors with `R` carrying a strictly positive diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: Matrix,
    pub r: Matrix,
}

/// Full SVD `A = S · diag(sigma) · Tᵀ` with `S` (m x m) and `T` (n x n)
/// orthogonal and `sigma` non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub s: Matrix,
    pub sigma: Vec<f64>,
    pub t: Matrix,
}

impl SvdFactors {
    pub fn rows(&self) -> usize {
        self.s.rows()
    }

    pub fn cols(&self) -> usize {
        self.t.rows()
    }

    /// `sigma[j]`, taken as zero past the end.
    pub fn sigma_or_zero(&self, j: usize) -> f64 {
        self.sigma.get(j).copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> Matrix {
        truncate_svd(self, self.sigma.len())
    }
}

/// Orthonormal basis of a leading singular space.
#[derive(Debug, Clone)]
pub struct LeadingBasis {
    pub basis: Matrix,
    /// Set when `sigma[rho-1]` ties `sigma[rho]`, so the space is not unique.
    pub ambiguous: bool,
}

pub fn norm(a: &Matrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::One => (0..a.cols())
            .map(|j| (0..a.rows()).map(|i| a.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Inf => (0..a.rows())
            .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Frobenius => vec_norm(a.as_slice()),
        NormKind::Two => singular_values(a)[0],
    }
}

pub fn two_norm(a: &Matrix) -> f64 {
    norm(a, NormKind::Two)
}

pub fn frobenius(a: &Matrix) -> f64 {
    norm(a, NormKind::Frobenius)
}

/// Singular values only, sorted non-increasing.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.is_zero() {
        return vec![0.0; a.rows().min(a.cols())];
    }
    let mut sv: Vec<f64> = match a.to_faer().singular_values() {
        Ok(v) => v.into_iter().map(f64::abs).collect(),
        Err(_) => match thin_svd(a) {
            Ok(f) => f.sigma,
            Err(_) => vec![f64::NAN; a.rows().min(a.cols())],
        },
    };
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Householder reflectors of `a` (m >= n): returns the packed reflector
/// vectors, their scalings, and the raw upper triangle.
fn householder(a: &Matrix) -> (Vec<Vec<f64>>, Vec<f64>, Matrix) {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vs = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);
    let mut r = Matrix::zeros(n, n);
    for k in 0..n.min(m) {
        let x = &cols[k][k..];
        let xnorm = vec_norm(x);
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv = dot(&v, &v);
        let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let s = beta * dot(&v, tail);
            for (t, vi) in tail.iter_mut().zip(&v) {
                *t -= s * vi;
            }
        }
        for j in k..n {
            r[(k, j)] = cols[j][k];
        }
        vs.push(v);
        betas.push(beta);
    }
    (vs, betas, r)
}

/// Applies the stored reflectors to the first `k` columns of the identity.
fn accumulate_q(m: usize, k: usize, vs: &[Vec<f64>], betas: &[f64]) -> Matrix {
    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for (p, (v, &beta)) in vs.iter().zip(betas).enumerate().rev() {
        for col in cols.iter_mut() {
            let tail = &mut col[p..];
            let s = beta * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }
    Matrix::from_columns(&cols).expect("well-formed columns")
}

/// Thin QR of a full-column-rank matrix, normalized so that `R` has a
/// strictly positive diagonal (which makes the factorization unique).
pub fn qr_positive(a: &Matrix) -> Result<QrFactors> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::InvalidDimensions {
            rows: m,
            cols: n,
            reason: "qr_positive needs rows >= cols",
        });
    }
    let (vs, betas, mut r) = householder(a);
    let threshold = 1e-13 * two_norm(a);
    let smallest = (0..n).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(smallest > threshold) {
        return Err(Error::RankDeficient {
            smallest,
            threshold,
        });
    }
    let mut q = accumulate_q(m, n, &vs, &betas);
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..m {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(QrFactors { q, r })
}

/// Modified Gram–Schmidt with one reorthogonalization pass. Independent
/// reference route for [`qr_positive`].
pub fn qr_gram_schmidt(a: &Matrix) -> Result<QrFactors> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::InvalidDimensions {
            rows: m,
            cols: n,
            reason: "qr_gram_schmidt needs rows >= cols",
        });
    }
    let threshold = 1e-13 * two_norm(a);
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        let mut v = a.column(j);
        for _pass in 0..2 {
            for (i, q) in qs.iter().enumerate() {
                let c = dot(q, &v);
                r[(i, j)] += c;
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= c * qk;
                }
            }
        }
        let nv = vec_norm(&v);
        if !(nv > threshold) {
            return Err(Error::RankDeficient {
                smallest: nv,
                threshold,
            });
        }
        r[(j, j)] = nv;
        qs.push(v.iter().map(|x| x / nv).collect());
    }
    Ok(QrFactors {
        q: Matrix::from_columns(&qs)?,
        r,
    })
}

/// Extends the orthonormal columns of `u` (m x k) to an m x m orthogonal matrix.
fn complete_basis(u: &Matrix) -> Matrix {
    let (m, k) = u.shape();
    if k == m {
        return u.clone();
    }
    let (vs, betas, _) = householder(u);
    let mut full = accumulate_q(m, m, &vs, &betas);
    for j in 0..k {
        for i in 0..m {
            full[(i, j)] = u.get(i, j);
        }
    }
    full
}

/// Thin SVD: `S` is m x k and `T` is n x k with `k = min(m, n)`, `sigma`
/// sorted non-increasing, each left singular vector signed so that its
/// largest-magnitude entry is positive.
pub fn thin_svd(a: &Matrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if a.is_zero() {
        return Ok(SvdFactors {
            s: Matrix::identity(m).leading_columns(k),
            sigma: vec![0.0; k],
            t: Matrix::identity(n).leading_columns(k),
        });
    }
    let raw = a
        .to_faer()
        .thin_svd()
        .map_err(|_| Error::NoConvergence { iterations: 0 })?;
    let (u, v) = (raw.U(), raw.V());
    let values = raw.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| values[y].abs().total_cmp(&values[x].abs()));
    let sigma: Vec<f64> = order.iter().map(|&j| values[j].abs()).collect();
    let mut s = Matrix::from_fn(m, k, |i, j| u[(i, order[j])] * values[order[j]].signum());
    let mut t = Matrix::from_fn(n, k, |i, j| v[(i, order[j])]);
    for j in 0..k {
        flip_if_negative(&mut s, Some(&mut t), j);
    }
    Ok(SvdFactors { s, sigma, t })
}

fn flip_if_negative(s: &mut Matrix, t: Option<&mut Matrix>, j: usize) {
    let m = s.rows();
    let mut best = 0usize;
    for i in 1..m {
        if s[(i, j)].abs() > s[(best, j)].abs() {
            best = i;
        }
    }
    if s[(best, j)] < 0.0 {
        for i in 0..m {
            s[(i, j)] = -s[(i, j)];
        }
        if let Some(t) = t {
            for i in 0..t.rows() {
                t[(i, j)] = -t[(i, j)];
            }
        }
    }
}

/// Full SVD with `sigma` sorted non-increasing and each left singular vector
/// signed so that its largest-magnitude entry is positive.
pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    if a.is_zero() {
        return Ok(SvdFactors {
            s: Matrix::identity(m),
            sigma: vec![0.0; m.min(n)],
            t: Matrix::identity(n),
        });
    }
    let thin = thin_svd(a)?;
    let mut s = complete_basis(&thin.s);
    let t = complete_basis(&thin.t);
    for j in thin.sigma.len()..m {
        flip_if_negative(&mut s, None, j);
    }
    Ok(SvdFactors { s, sigma: thin.sigma, t })
}

/// Number of singular values kept by a relative tolerance.
fn kept(sigma: &[f64], tol: f64) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sigma
        .iter()
        .take_while(|&&s| s > 0.0 && s >= tol * top)
        .count()
}

/// Moore–Penrose pseudo-inverse; singular values below `tol · sigma[0]` are
/// treated as zero.
pub fn pseudo_inverse(a: &Matrix, tol: f64) -> Result<Matrix> {
    if tol < 0.0 {
        return Err(Error::InvalidArgument("tol must be non-negative".into()));
    }
    let f = svd(a)?;
    let (m, n) = a.shape();
    let rho = kept(&f.sigma, tol);
    Ok(Matrix::from_fn(n, m, |i, j| {
        (0..rho)
            .map(|p| f.t.get(i, p) * f.s.get(j, p) / f.sigma[p])
            .sum()
    }))
}

/// Largest `j` with `sigma[j-1] >= tol · sigma[0]`; zero for the zero matrix.
pub fn numerical_rank(a: &Matrix, tol: f64) -> usize {
    kept(&singular_values(a), tol)
}

/// `sigma[0] / sigma[rho-1]` with `rho` the numerical rank at `tol`.
pub fn cond2(a: &Matrix, tol: f64) -> Result<f64> {
    let sv = singular_values(a);
    let rho = kept(&sv, tol);
    if rho == 0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(sv[0] / sv[rho - 1])
}

/// Nearest matrix of rank at most `rho`.
pub fn truncate_svd(f: &SvdFactors, rho: usize) -> Matrix {
    let rho = rho.min(f.sigma.len());
    Matrix::from_fn(f.rows(), f.cols(), |i, j| {
        (0..rho)
            .map(|p| f.s.get(i, p) * f.sigma[p] * f.t.get(j, p))
            .sum()
    })
}

/// First `rho` columns of `S` (left) or `T` (right).
pub fn leading_basis(f: &SvdFactors, rho: usize, side: Side) -> Result<LeadingBasis> {
    let k = f.sigma.len();
    if rho == 0 || rho > k {
        return Err(Error::InvalidArgument(format!(
            "rho = {rho} outside 1..={k}"
        )));
    }
    let src = match side {
        Side::Left => &f.s,
        Side::Right => &f.t,
    };
    let a = f.sigma[rho - 1];
    let b = f.sigma_or_zero(rho);
    let ambiguous = rho < k && (a - b).abs() <= 1e-12 * a.abs().max(f64::MIN_POSITIVE);
    Ok(LeadingBasis {
        basis: src.leading_columns(rho),
        ambiguous,
    })
}

/// Columns `rho..` of `S` or `T`, spanning the trailing singular space.
pub fn trailing_basis(f: &SvdFactors, rho: usize, side: Side) -> Option<Matrix> {
    let src = match side {
        Side::Left => &f.s,
        Side::Right => &f.t,
    };
    (rho < src.cols()).then(|| src.submatrix(0, src.rows(), rho, src.cols()))
}

/// Least-squares solution `argmin_Y ‖B·Y − C‖_F` for full-column-rank `B`.
pub fn lstsq(b: &Matrix, c: &Matrix) -> Result<Matrix> {
    if b.rows() != c.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", b.rows()),
            got: format!("{} rows", c.rows()),
        });
    }
    let qr = qr_positive(b)?;
    let qtc = qr.q.tr_matmul(c)?;
    let n = b.cols();
    let mut y = Matrix::zeros(n, c.cols());
    for col in 0..c.cols() {
        for i in (0..n).rev() {
            let mut s = qtc.get(i, col);
            for p in i + 1..n {
                s -= qr.r.get(i, p) * y.get(p, col);
            }
            y[(i, col)] = s / qr.r.get(i, i);
        }
    }
    Ok(y)
}

/// LU with partial pivoting: returns the packed factors and row permutation.
fn lu_partial(a: &Matrix) -> Result<(Matrix, Vec<usize>)> {
    if !a.is_square() {
        return Err(Error::InvalidDimensions {
            rows: a.rows(),
            cols: a.cols(),
            reason: "square matrix required",
        });
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.max_abs();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| lu[(x, k)].abs().total_cmp(&lu[(y, k)].abs()))
            .expect("non-empty range");
        if lu[(p, k)].abs() <= f64::EPSILON * scale * n as f64 {
            return Err(Error::PivotBreakdown {
                step: k,
                pivot: lu[(p, k)].abs(),
            });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
    }
    Ok((lu, perm))
}

fn lu_apply(lu: &Matrix, perm: &[usize], b: &[f64]) -> Vec<f64> {
    let n = lu.rows();
    let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            y[i] -= lu.get(i, j) * y[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            y[i] -= lu.get(i, j) * y[j];
        }
        y[i] /= lu.get(i, i);
    }
    y
}

/// Reference dense solve with partial pivoting (test oracle, not the
/// elimination path studied by this crate).
pub fn solve_pivoted(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", a.rows()),
            got: format!("length {}", b.len()),
        });
    }
    let (lu, perm) = lu_partial(a)?;
    Ok(lu_apply(&lu, &perm, b))
}

/// Dense inverse via partially pivoted LU.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let (lu, perm) = lu_partial(a)?;
    let n = a.rows();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            lu_apply(&lu, &perm, &e)
        })
        .collect();
    Matrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(m: usize, n: usize, seed: u64) -> Matrix {
        // small LCG keeps these unit tests independent of the random module
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Matrix::from_fn(m, n, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn orth_err(q: &Matrix) -> f64 {
        let qtq = q.tr_matmul(q).unwrap();
        frobenius(&qtq.sub(&Matrix::identity(q.cols())).unwrap())
    }

    /// Two-norm by power iteration on AᵀA; independent of the SVD path.
    fn power_two_norm(a: &Matrix) -> f64 {
        let mut v = vec![1.0; a.cols()];
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let w = a.tr_matvec(&a.matvec(&v).unwrap()).unwrap();
            let nw = vec_norm(&w);
            lambda = nw;
            v = w.iter().map(|x| x / nw).collect();
        }
        lambda.sqrt()
    }

    #[test]
    fn identity_norms() {
        let i3 = Matrix::identity(3);
        for kind in [NormKind::One, NormKind::Two, NormKind::Inf] {
            assert!((norm(&i3, kind) - 1.0).abs() < 1e-15);
        }
        assert!((norm(&i3, NormKind::Frobenius) - 3f64.sqrt()).abs() < 1e-15);
        let row = Matrix::from_rows(&[&[3.0, 4.0]]).unwrap();
        assert!((norm(&row, NormKind::Two) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn norm_inequality_chain() {
        let a = seeded(8, 8, 11);
        let two = norm(&a, NormKind::Two);
        let oracle = power_two_norm(&a);
        assert!((two - oracle).abs() < 1e-8 * oracle);
        let one = norm(&a, NormKind::One);
        let fro = norm(&a, NormKind::Frobenius);
        let r8 = 8f64.sqrt();
        assert!(one / r8 <= two && two <= r8 * one);
        assert!(two <= fro && fro <= r8 * two);
    }

    #[test]
    fn qr_examples() {
        let d = Matrix::diag(&[2.0, 3.0]);
        let f = qr_positive(&d).unwrap();
        assert!(frobenius(&f.q.sub(&Matrix::identity(2)).unwrap()) < 1e-15);
        assert!(frobenius(&f.r.sub(&d).unwrap()) < 1e-15);

        let p = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let f = qr_positive(&p).unwrap();
        assert!(frobenius(&f.q.sub(&p).unwrap()) < 1e-15);
        assert!(frobenius(&f.r.sub(&Matrix::identity(2)).unwrap()) < 1e-15);

        // hand Gram–Schmidt: columns (1,1,0)/√2 and (1,-1,0)/√2, R = √2·I
        let a = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, -1.0], &[0.0, 0.0]]).unwrap();
        let f = qr_positive(&a).unwrap();
        let h = 0.5f64.sqrt();
        let q_expect = Matrix::from_rows(&[&[h, h], &[h, -h], &[0.0, 0.0]]).unwrap();
        let r_expect = Matrix::diag(&[2f64.sqrt(), 2f64.sqrt()]);
        assert!(frobenius(&f.q.sub(&q_expect).unwrap()) < 1e-15);
        assert!(frobenius(&f.r.sub(&r_expect).unwrap()) < 1e-15);
    }

    #[test]
    fn qr_rejects_rank_deficient() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]).unwrap();
        assert!(matches!(qr_positive(&a), Err(Error::RankDeficient { .. })));
        assert!(qr_positive(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn qr_routes_agree() {
        for seed in 0..10 {
            let a = seeded(9, 5, seed);
            let h = qr_positive(&a).unwrap();
            let g = qr_gram_schmidt(&a).unwrap();
            assert!(frobenius(&h.q.sub(&g.q).unwrap()) < 1e-10);
            assert!(frobenius(&h.r.sub(&g.r).unwrap()) < 1e-10);
            assert!(orth_err(&h.q) < 1e-12 * 9.0);
            let back = h.q.matmul(&h.r).unwrap();
            assert!(two_norm(&back.sub(&a).unwrap()) < 1e-12 * two_norm(&a) * 5.0);
        }
    }

    #[test]
    fn svd_examples() {
        let f = svd(&Matrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        for (s, e) in f.sigma.iter().zip([3.0, 2.0, 1.0]) {
            assert!((s - e).abs() < 1e-14);
        }
        let z = svd(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);

        let s0 = qr_positive(&seeded(3, 3, 5)).unwrap().q;
        let t0 = qr_positive(&seeded(3, 3, 6)).unwrap().q;
        let a = s0
            .matmul(&Matrix::diag(&[1.0, 0.5, 1.0 / 3.0]))
            .unwrap()
            .matmul(&t0.transpose())
            .unwrap();
        let f = svd(&a).unwrap();
        for (s, e) in f.sigma.iter().zip([1.0, 0.5, 1.0 / 3.0]) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_invariants_rectangular() {
        for (m, n) in [(7, 4), (4, 7), (5, 5), (1, 3)] {
            let a = seeded(m, n, (m * 10 + n) as u64);
            let f = svd(&a).unwrap();
            assert_eq!(f.s.shape(), (m, m));
            assert_eq!(f.t.shape(), (n, n));
            assert!(orth_err(&f.s) < 1e-12 * m.max(n) as f64);
            assert!(orth_err(&f.t) < 1e-12 * m.max(n) as f64);
            assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
            let back = f.reconstruct();
            assert!(two_norm(&back.sub(&a).unwrap()) <= 1e-12 * f.sigma[0] * m.min(n) as f64);
            for j in 0..m {
                let col = f.s.column(j);
                let big = col.iter().fold(0.0f64, |b, &x| if x.abs() > b.abs() { x } else { b });
                assert!(big > 0.0);
            }
        }
    }

    #[test]
    fn pseudo_inverse_examples() {
        let p = pseudo_inverse(&Matrix::diag(&[2.0, 0.0]), 1e-12).unwrap();
        assert!(frobenius(&p.sub(&Matrix::diag(&[0.5, 0.0])).unwrap()) < 1e-15);

        let q = qr_positive(&seeded(4, 4, 3)).unwrap().q;
        let qp = pseudo_inverse(&q, 1e-12).unwrap();
        assert!(frobenius(&qp.sub(&q.transpose()).unwrap()) < 1e-13);

        let col = Matrix::from_rows(&[&[1.0], &[1.0]]).unwrap();
        // normal equations: (AᵀA)⁻¹Aᵀ = [1/2, 1/2]
        let ata = col.tr_matmul(&col).unwrap().get(0, 0);
        let oracle = col.transpose().scale(1.0 / ata);
        let pc = pseudo_inverse(&col, 1e-12).unwrap();
        assert!(frobenius(&pc.sub(&oracle).unwrap()) < 1e-15);
    }

    #[test]
    fn cond_and_rank() {
        assert!((cond2(&Matrix::identity(4), 1e-12).unwrap() - 1.0).abs() < 1e-14);
        let c = cond2(&Matrix::diag(&[10.0, 1e-9]), 1e-12).unwrap();
        assert!((c / 1e10 - 1.0).abs() < 1e-12);
        assert_eq!(cond2(&Matrix::diag(&[1.0, 1e-9]), 1e-6).unwrap(), 1.0);
        assert_eq!(cond2(&Matrix::zeros(2, 2), 1e-6), Err(Error::ZeroMatrix));
        assert_eq!(numerical_rank(&Matrix::diag(&[1.0, 0.5, 1e-10]), 1e-6), 2);
        assert_eq!(numerical_rank(&Matrix::identity(5), 1e-6), 5);
        assert_eq!(numerical_rank(&Matrix::zeros(3, 3), 1e-6), 0);
    }

    #[test]
    fn truncation_and_bases() {
        let f = svd(&Matrix::diag(&[3.0, 2.0, 1.0])).unwrap();
        let t = truncate_svd(&f, 2);
        assert!(frobenius(&t.sub(&Matrix::diag(&[3.0, 2.0, 0.0])).unwrap()) < 1e-14);
        let b = leading_basis(&f, 1, Side::Right).unwrap();
        assert!((b.basis.get(0, 0).abs() - 1.0).abs() < 1e-14);
        assert!(!b.ambiguous);
        let l = leading_basis(&f, 2, Side::Left).unwrap().basis;
        for j in 0..2 {
            assert!(l.get(2, j).abs() < 1e-14);
        }
        let tied = svd(&Matrix::diag(&[2.0, 1.0, 1.0])).unwrap();
        assert!(leading_basis(&tied, 2, Side::Right).unwrap().ambiguous);
        assert!(leading_basis(&tied, 0, Side::Right).is_err());
        assert!(trailing_basis(&tied, 3, Side::Right).is_none());
    }

    #[test]
    fn solvers() {
        let a = seeded(6, 6, 9);
        let x = vec![1.0, -2.0, 3.0, 0.5, 0.25, -1.0];
        let b = a.matvec(&x).unwrap();
        let y = solve_pivoted(&a, &b).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-10));
        let inv = inverse(&a).unwrap();
        let id = a.matmul(&inv).unwrap();
        assert!(frobenius(&id.sub(&Matrix::identity(6)).unwrap()) < 1e-10);
        let tall = seeded(8, 3, 2);
        let c = tall.matmul(&seeded(3, 2, 4)).unwrap();
        let y = lstsq(&tall, &c).unwrap();
        assert!(frobenius(&tall.matmul(&y).unwrap().sub(&c).unwrap()) < 1e-12);
    }
}

//! Randomized approximation of leading singular spaces, rank-ρ
//! approximation, and numerical-rank search by condition probing.
//!
//! A Gaussian (or structured) sketch `T′ = Aᵀ·G` spans an approximation of
//! the leading right singular space of `A` once `G` has at least as many
//! columns as the numerical rank. Projecting `A` onto that span gives a
//! rank-ρ approximation whose error is governed by `σ_{ρ+1}(A)`.

use crate::dense::{self, qr_positive, singular_values, thin_svd, two_norm, Matrix, Side};
use crate::error::{Error, Result};
use crate::random::{gaussian_matrix, Multiplier, MultiplierKind, RngStream};

/// Default condition threshold for [`cond_probe`].
pub const DEFAULT_KAPPA_THRESHOLD: f64 = 1e6;

/// Redraws of the multiplier before [`proto_lowrank`] reports failure.
pub const LOWRANK_ATTEMPTS: usize = 3;

/// Singular value ratio below which a gap is considered for `Tau::Auto`.
pub const AUTO_GAP_RATIO: f64 = 1e-3;

const CONVERGENCE_TOL: f64 = 1e-4;

/// Orthogonal projection of `A` onto the span of a basis.
///
/// `Side::Right` returns `A·T·(TᵀT)⁻¹·Tᵀ` for an `n x k` basis `T`;
/// `Side::Left` returns `S·(SᵀS)⁻¹·Sᵀ·A` for an `m x k` basis `S`. With
/// `orthonormal` set the basis is used as is (`A·T·Tᵀ`, `S·Sᵀ·A`); otherwise
/// it is first orthonormalized, which yields the same projector.
pub fn project_onto_basis(a: &Matrix, basis: &Matrix, orthonormal: bool, side: Side) -> Result<Matrix> {
    let dim = match side {
        Side::Right => a.cols(),
        Side::Left => a.rows(),
    };
    if basis.rows() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("basis with {dim} rows"),
            got: format!("{} rows", basis.rows()),
        });
    }
    let sv = singular_values(basis);
    let smallest = *sv.last().expect("non-empty");
    let threshold = 1e-12 * sv[0];
    if basis.cols() > basis.rows() || !(smallest > threshold) {
        return Err(Error::RankDeficient { smallest, threshold });
    }
    let q = if orthonormal {
        basis.clone()
    } else {
        qr_positive(basis)?.q
    };
    match side {
        Side::Right => a.matmul(&q)?.matmul(&q.transpose()),
        Side::Left => q.matmul(&q.tr_matmul(a)?),
    }
}

/// `M·X` for a `rows x cols` multiplier of the given kind applied on the
/// right of `x` (`x·M`). Square-only kinds are drawn at `rows x rows` and
/// truncated to their leading `cols` columns.
fn sketch_right(x: &Matrix, kind: MultiplierKind, cols: usize, rng: &mut RngStream) -> Result<Matrix> {
    let rows = x.cols();
    let square_only = matches!(
        kind,
        MultiplierKind::CirculantGaussian | MultiplierKind::CirculantSign | MultiplierKind::HouseholderSign
    );
    if square_only {
        let m = Multiplier::draw(kind, rows, rows, rng)?;
        Ok(m.right_mul(x)?.leading_columns(cols))
    } else {
        Multiplier::draw(kind, rows, cols, rng)?.right_mul(x)
    }
}

/// Sketch of a singular space: `Aᵀ·G` (`G` m x ρ₊) for the right space,
/// `A·H` (`H` n x ρ₊) for the left one.
pub fn approx_basis(
    a: &Matrix,
    rho_plus: usize,
    kind: MultiplierKind,
    side: Side,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let (m, n) = a.shape();
    if rho_plus == 0 || rho_plus > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "rho_plus = {rho_plus} outside 1..={}",
            m.min(n)
        )));
    }
    match side {
        Side::Right => sketch_right(&a.transpose(), kind, rho_plus, rng),
        Side::Left => sketch_right(a, kind, rho_plus, rng),
    }
}

/// Threshold used to cut the sketch's spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    /// Keep singular values of the sketch above `tau · ‖A‖`.
    Fixed(f64),
    /// Cut at the widest gap whose ratio `σ_{j+1}/σ_j` is below
    /// [`AUTO_GAP_RATIO`]; keep everything if there is none.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowRankStatus {
    Ok,
    Failure,
}

#[derive(Debug, Clone)]
pub struct LowRankResult {
    pub rho: usize,
    /// `n x rho` orthonormal basis of the approximate leading right space;
    /// `None` when `rho = 0`.
    pub basis: Option<Matrix>,
    /// `A·basis·basisᵀ`.
    pub approx: Matrix,
    /// `‖approx − A‖₂ / ‖A‖₂` (zero for `A = O`).
    pub residual: f64,
    pub status: LowRankStatus,
    /// Multiplier draws used.
    pub attempts: usize,
}

fn cut_rank(sigma: &[f64], tau: Tau, a_norm: f64) -> usize {
    match tau {
        Tau::Fixed(t) => {
            // minimal s with sigma[s] <= t·‖A‖ (sigma past the end is zero)
            sigma.iter().position(|&s| s <= t * a_norm).unwrap_or(sigma.len())
        }
        Tau::Auto => {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..sigma.len() {
                let next = sigma.get(j + 1).copied().unwrap_or(0.0);
                if sigma[j] == 0.0 {
                    return best.map_or(j, |(k, _)| k);
                }
                let ratio = next / sigma[j];
                if ratio < AUTO_GAP_RATIO && best.is_none_or(|(_, r)| ratio < r) && j + 1 < sigma.len() {
                    best = Some((j + 1, ratio));
                }
            }
            best.map_or(sigma.len(), |(k, _)| k)
        }
    }
}

/// Rank-ρ approximation from a random sketch.
///
/// Stage 1 sketches `T′ = Aᵀ·G`. Stage 2 takes the SVD of `T′` and keeps
/// the minimal `s` leading left singular vectors such that
/// `σ_{s+1}(T′) ≤ τ·‖A‖`, giving an orthonormal `T`. Stage 3 forms
/// `Â = A·T·Tᵀ` and accepts it when `‖Â − A‖ ≤ τ′·‖A‖`; otherwise the
/// multiplier is redrawn, up to [`LOWRANK_ATTEMPTS`] times.
pub fn proto_lowrank(
    a: &Matrix,
    rho_plus: usize,
    tau: Tau,
    tau_prime: f64,
    kind: MultiplierKind,
    rng: &mut RngStream,
) -> Result<LowRankResult> {
    if let Tau::Fixed(t) = tau {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {t}")));
        }
    }
    if !(tau_prime > 0.0 && tau_prime < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tau_prime must lie in (0, 1), got {tau_prime}"
        )));
    }
    let (m, n) = a.shape();
    if rho_plus == 0 || rho_plus > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "rho_plus = {rho_plus} outside 1..={}",
            m.min(n)
        )));
    }
    let a_norm = two_norm(a);
    if a_norm == 0.0 {
        return Ok(LowRankResult {
            rho: 0,
            basis: None,
            approx: Matrix::zeros(m, n),
            residual: 0.0,
            status: LowRankStatus::Ok,
            attempts: 0,
        });
    }
    let mut last = None;
    for attempt in 1..=LOWRANK_ATTEMPTS {
        let sketch = approx_basis(a, rho_plus, kind, Side::Right, rng)?;
        let f = thin_svd(&sketch)?;
        let s = cut_rank(&f.sigma, tau, a_norm);
        let basis = (s > 0).then(|| f.s.leading_columns(s));
        let approx = match &basis {
            None => Matrix::zeros(m, n),
            Some(t) => project_onto_basis(a, t, true, Side::Right)?,
        };
        let residual = two_norm(&approx.sub(a)?) / a_norm;
        let status = if residual <= tau_prime {
            LowRankStatus::Ok
        } else {
            LowRankStatus::Failure
        };
        let result = LowRankResult {
            rho: s,
            basis,
            approx,
            residual,
            status,
            attempts: attempt,
        };
        if status == LowRankStatus::Ok {
            return Ok(result);
        }
        last = Some(result);
    }
    Ok(last.expect("at least one attempt"))
}

/// `(A·Aᵀ)^h · A`, whose singular values are `σ_j(A)^{2h+1}`.
pub fn power_transform(a: &Matrix, h: usize) -> Result<Matrix> {
    let mut b = a.clone();
    for _ in 0..h {
        b = a.matmul(&a.tr_matmul(&b)?)?;
    }
    Ok(b)
}

/// Cheap randomized acceptance test `‖Kᵀ(A − Â)L‖ ≤ τ·‖K‖·‖A‖·‖L‖` with
/// Gaussian `K` (m x ρ₁) and `L` (n x ρ₂).
pub fn sampled_residual_check(
    a: &Matrix,
    ahat: &Matrix,
    rho1: usize,
    rho2: usize,
    tau: f64,
    rng: &mut RngStream,
) -> Result<bool> {
    if rho1 == 0 || rho2 == 0 {
        return Err(Error::InvalidArgument("rho1 and rho2 must be positive".into()));
    }
    let diff = a.sub(ahat)?;
    let k = gaussian_matrix(a.rows(), rho1, 0.0, 1.0, rng)?;
    let l = gaussian_matrix(a.cols(), rho2, 0.0, 1.0, rng)?;
    let lhs = two_norm(&k.tr_matmul(&diff)?.matmul(&l)?);
    Ok(lhs <= tau * two_norm(&k) * two_norm(a) * two_norm(&l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMethod {
    Power,
    Lanczos,
}

/// Gram operator `x ↦ AᵀA·x` (or `AAᵀ·x` when `A` is wide, so the smallest
/// eigenvalue is `σ_min(A)²` rather than a structural zero).
struct Gram<'a> {
    a: &'a Matrix,
    wide: bool,
}

impl Gram<'_> {
    fn dim(&self) -> usize {
        if self.wide {
            self.a.rows()
        } else {
            self.a.cols()
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.wide {
            self.a.matvec(&self.a.tr_matvec(x).expect("shape")).expect("shape")
        } else {
            self.a.tr_matvec(&self.a.matvec(x).expect("shape")).expect("shape")
        }
    }
}

fn unit_random(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        let nrm = dense::vec_norm(&v);
        if nrm > 0.0 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

fn rel_change(new: f64, old: f64) -> f64 {
    if new == old {
        0.0
    } else {
        (new - old).abs() / new.abs().max(old.abs())
    }
}

/// Dominant eigenvalue of `shift·I − G` (or of `G` when `shift` is `None`)
/// by the power method with Rayleigh quotients. Returns the estimate and the
/// relative change of `report(estimate)` over the final iteration.
fn power_phase(
    g: &Gram<'_>,
    shift: Option<f64>,
    iters: usize,
    rng: &mut RngStream,
    report: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let mut x = unit_random(g.dim(), rng);
    let mut lambda = f64::NAN;
    let mut change = f64::INFINITY;
    for _ in 0..iters {
        let mut y = g.apply(&x);
        if let Some(s) = shift {
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi = s * xi - *yi;
            }
        }
        let next = dense::dot(&x, &y);
        change = if lambda.is_nan() {
            f64::INFINITY
        } else {
            rel_change(report(next), report(lambda))
        };
        lambda = next;
        let nrm = dense::vec_norm(&y);
        if nrm == 0.0 {
            return (lambda, 0.0);
        }
        x = y.into_iter().map(|v| v / nrm).collect();
        if change <= 1e-15 {
            break;
        }
    }
    (lambda, change)
}

/// Extremal eigenvalues of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`.
fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = faer::Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let ev = t
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("tridiagonal eigenvalues converge");
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// Estimates `(σ_max(A), σ_min(A))` from matrix–vector products with `A`
/// and `Aᵀ` only.
///
/// `Power` runs the power method on `AᵀA` for `σ₁²`, takes `σ₊² = 1.01`
/// times that estimate, then runs the power method on `σ₊²I − AᵀA`.
/// `Lanczos` tridiagonalizes `AᵀA` from a random start (with full
/// reorthogonalization) and returns the extremal Ritz values. Either method
/// returns [`Error::NoConvergence`] when an estimate still moves by more
/// than `1e-4` (relative) on the last iteration.
pub fn extremal_sv_estimate(
    a: &Matrix,
    method: ProbeMethod,
    iters: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if iters == 0 {
        return Err(Error::InvalidArgument("iters must be at least 1".into()));
    }
    let g = Gram {
        a,
        wide: a.rows() < a.cols(),
    };
    match method {
        ProbeMethod::Power => {
            let (l1, c1) = power_phase(&g, None, iters, rng, |l| l);
            if l1 <= 0.0 {
                return Ok((0.0, 0.0));
            }
            if c1 > CONVERGENCE_TOL {
                return Err(Error::NoConvergence { iterations: iters });
            }
            let shift = 1.01 * l1;
            let (mu, c2) = power_phase(&g, Some(shift), iters, rng, |mu| shift - mu);
            if c2 > CONVERGENCE_TOL {
                return Err(Error::NoConvergence { iterations: iters });
            }
            Ok((l1.sqrt(), (shift - mu).max(0.0).sqrt()))
        }
        ProbeMethod::Lanczos => {
            let dim = g.dim();
            let steps = iters.min(dim);
            let mut basis: Vec<Vec<f64>> = vec![unit_random(dim, rng)];
            let mut alpha = Vec::with_capacity(steps);
            let mut beta: Vec<f64> = Vec::with_capacity(steps);
            let mut prev = (f64::NAN, f64::NAN);
            let mut change = f64::INFINITY;
            let mut exhausted = false;
            for k in 0..steps {
                let mut w = g.apply(&basis[k]);
                let ak = dense::dot(&basis[k], &w);
                alpha.push(ak);
                // full reorthogonalization, twice
                for _ in 0..2 {
                    for q in &basis {
                        let c = dense::dot(q, &w);
                        for (wi, qi) in w.iter_mut().zip(q) {
                            *wi -= c * qi;
                        }
                    }
                }
                let (tmax, tmin) = tridiagonal_extremes(&alpha, &beta);
                change = if prev.0.is_nan() {
                    f64::INFINITY
                } else {
                    rel_change(tmax, prev.0).max(rel_change(tmin.max(0.0).sqrt(), prev.1.max(0.0).sqrt()))
                };
                prev = (tmax, tmin);
                let bk = dense::vec_norm(&w);
                if bk <= 1e-13 * tmax.abs().max(f64::MIN_POSITIVE) || k + 1 == dim {
                    exhausted = true;
                    break;
                }
                if k + 1 < steps {
                    beta.push(bk);
                    basis.push(w.into_iter().map(|v| v / bk).collect());
                }
            }
            let (tmax, tmin) = prev;
            if tmax <= 0.0 {
                return Ok((0.0, 0.0));
            }
            if !exhausted && change > CONVERGENCE_TOL {
                return Err(Error::NoConvergence { iterations: iters });
            }
            Ok((tmax.max(0.0).sqrt(), tmin.max(0.0).sqrt()))
        }
    }
}

/// Default Lanczos iteration count for probes of width up to `rho_plus`.
pub fn default_probe_iters(rho_plus: usize) -> usize {
    4 * rho_plus + 20
}

/// Whether `B` has full column rank and condition number at most
/// `kappa_threshold`, judged from estimated extremal singular values.
pub fn cond_probe(
    b: &Matrix,
    kappa_threshold: f64,
    method: ProbeMethod,
    iters: usize,
    rng: &mut RngStream,
) -> Result<bool> {
    if !(kappa_threshold > 1.0) {
        return Err(Error::InvalidArgument("kappa_threshold must exceed 1".into()));
    }
    let (smax, smin) = extremal_sv_estimate(b, method, iters, rng)?;
    if !(smax > 0.0) || !(smin > f64::EPSILON * smax) {
        return Ok(false);
    }
    Ok(smax / smin <= kappa_threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchPolicy {
    /// Probe the midpoint `⌈(ρ₋+ρ₊)/2⌉`.
    Binary,
    /// Probe `ρ₊ − d + 1` with `d = max(1, ⌈(ρ₊−ρ₋)/4⌉)`, so a failed probe
    /// lowers `ρ₊` by `d`.
    LinearDown,
}

/// Bracketing state of a numerical-rank search: the rank is known to lie
/// in `[rho_minus, rho_plus]`.
#[derive(Debug, Clone)]
pub struct NrankSearchState {
    pub rho_minus: usize,
    pub rho_plus: usize,
    /// Gaussian `m x ρ₊` probe generator, drawn once.
    pub g: Matrix,
    /// `Ãᵀ·G_ρ` at the largest passing candidate so far.
    pub basis: Option<Matrix>,
    /// `(candidate, passed)` per probe, in order.
    pub probes: Vec<(usize, bool)>,
    a_tilde: Matrix,
}

impl NrankSearchState {
    /// `Ã = A`, or `Aᵀ` when `A` has fewer rows than columns.
    pub fn new(a: &Matrix, rho_minus: usize, rho_plus: usize, rng: &mut RngStream) -> Result<Self> {
        let a_tilde = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
        let n = a_tilde.cols();
        if rho_minus >= rho_plus || rho_plus > n {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= rho_minus < rho_plus <= {n}, got [{rho_minus}, {rho_plus}]"
            )));
        }
        let g = gaussian_matrix(a_tilde.rows(), rho_plus, 0.0, 1.0, rng)?;
        Ok(Self {
            rho_minus,
            rho_plus,
            g,
            basis: None,
            probes: Vec::new(),
            a_tilde,
        })
    }

    pub fn is_done(&self) -> bool {
        self.rho_minus == self.rho_plus
    }

    pub fn candidate(&self, policy: SearchPolicy) -> usize {
        let (lo, hi) = (self.rho_minus, self.rho_plus);
        match policy {
            SearchPolicy::Binary => (lo + hi).div_ceil(2),
            SearchPolicy::LinearDown => hi + 1 - (hi - lo).div_ceil(4).max(1),
        }
    }

    /// `Ãᵀ·G_ρ` for the leading `rho` columns of `G`.
    pub fn probe_matrix(&self, rho: usize) -> Result<Matrix> {
        self.a_tilde.tr_matmul(&self.g.leading_columns(rho))
    }

    /// One probe; shrinks the bracket strictly.
    pub fn step(
        &mut self,
        policy: SearchPolicy,
        kappa_threshold: f64,
        method: ProbeMethod,
        iters: usize,
        rng: &mut RngStream,
    ) -> Result<()> {
        if self.is_done() {
            return Ok(());
        }
        let c = self.candidate(policy);
        let b = self.probe_matrix(c)?;
        let passed = cond_probe(&b, kappa_threshold, method, iters, rng)?;
        self.probes.push((c, passed));
        if passed {
            self.rho_minus = c;
            self.basis = Some(b);
        } else {
            self.rho_plus = c - 1;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NrankOutcome {
    pub rho: usize,
    /// `Ãᵀ·G_ρ` at the final `ρ`; `None` when `ρ = 0`.
    pub basis: Option<Matrix>,
    pub probes: Vec<(usize, bool)>,
}

/// Numerical rank of `A` within `[rho_minus, rho_plus]` without pivoting
/// or orthogonalization of `A`: `Ãᵀ·G_ρ` is well conditioned exactly when
/// `ρ` does not exceed the numerical rank, so the search keeps the largest
/// passing `ρ`.
pub fn nrank_search(
    a: &Matrix,
    rho_minus: usize,
    rho_plus: usize,
    kappa_threshold: f64,
    policy: SearchPolicy,
    method: ProbeMethod,
    rng: &mut RngStream,
) -> Result<NrankOutcome> {
    let mut state = NrankSearchState::new(a, rho_minus, rho_plus, rng)?;
    let iters = default_probe_iters(rho_plus);
    while !state.is_done() {
        state.step(policy, kappa_threshold, method, iters, rng)?;
    }
    let rho = state.rho_plus;
    let basis = match (rho, state.basis.take()) {
        (0, _) => None,
        (_, Some(b)) if b.cols() == rho => Some(b),
        _ => Some(state.probe_matrix(rho)?),
    };
    Ok(NrankOutcome {
        rho,
        basis,
        probes: state.probes,
    })
}

/// `F·G_ρ` with Gaussian `F` (ρ x m): a square `ρ x ρ` stand-in for probing
/// the conditioning of `G_ρ`.
pub fn nrank_probe_compress(g_rho: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
    let f = gaussian_matrix(g_rho.cols(), g_rho.rows(), 0.0, 1.0, rng)?;
    f.matmul(g_rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{frobenius, numerical_rank};
    use crate::random::{step_profile, profile_matrix_with_factors, random_orthogonal};

    #[test]
    fn projection_examples() {
        let a = Matrix::diag(&[3.0, 2.0, 1.0]);
        assert_eq!(project_onto_basis(&a, &Matrix::identity(3), true, Side::Right).unwrap(), a);
        let p = project_onto_basis(&a, &Matrix::identity(3), false, Side::Right).unwrap();
        assert!(frobenius(&p.sub(&a).unwrap()) < 1e-15);
        let t = Matrix::identity(3).leading_columns(2);
        let p = project_onto_basis(&a, &t, false, Side::Right).unwrap();
        assert!(frobenius(&p.sub(&Matrix::diag(&[3.0, 2.0, 0.0])).unwrap()) < 1e-15);
        assert!((two_norm(&a.sub(&p).unwrap()) - 1.0).abs() < 1e-15);
        let bad = Matrix::from_rows(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]).unwrap();
        assert!(matches!(
            project_onto_basis(&a, &bad, false, Side::Right),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn power_transform_examples() {
        let a = Matrix::diag(&[2.0, 1.0]);
        assert_eq!(power_transform(&a, 0).unwrap(), a);
        assert_eq!(power_transform(&a, 1).unwrap(), Matrix::diag(&[8.0, 1.0]));
    }

    #[test]
    fn proto_lowrank_zero_and_profile() {
        let mut rng = RngStream::new(3, 0);
        let z = proto_lowrank(&Matrix::zeros(5, 4), 2, Tau::Fixed(1e-6), 1e-6, MultiplierKind::STANDARD_GAUSSIAN, &mut rng)
            .unwrap();
        assert_eq!(z.rho, 0);
        assert!(z.approx.is_zero());
        assert_eq!(z.status, LowRankStatus::Ok);

        let p = profile_matrix_with_factors(32, &step_profile(32, 4), &mut rng).unwrap();
        for tau in [Tau::Fixed(1e-6), Tau::Auto] {
            let r = proto_lowrank(&p.matrix, 4, tau, 1e-6, MultiplierKind::STANDARD_GAUSSIAN, &mut rng).unwrap();
            assert_eq!(r.rho, 4);
            assert_eq!(r.status, LowRankStatus::Ok);
            assert!(r.residual < 1e-7);
            assert_eq!(numerical_rank(&r.approx, 1e-6), 4);
        }
    }

    #[test]
    fn auto_tau_gap() {
        assert_eq!(cut_rank(&[1.0, 0.5, 1e-9, 1e-10], Tau::Auto, 1.0), 2);
        assert_eq!(cut_rank(&[1.0, 0.5, 0.4], Tau::Auto, 1.0), 3);
        assert_eq!(cut_rank(&[1.0, 1e-4, 1e-12], Tau::Auto, 1.0), 2);
        assert_eq!(cut_rank(&[1.0, 0.0], Tau::Auto, 1.0), 1);
        assert_eq!(cut_rank(&[1.0, 0.5, 1e-9], Tau::Fixed(1e-6), 1.0), 2);
        assert_eq!(cut_rank(&[1e-9], Tau::Fixed(1e-6), 1.0), 0);
    }

    #[test]
    fn extremal_estimates_simple() {
        let mut rng = RngStream::new(9, 0);
        let a = Matrix::diag(&[5.0, 1.0]);
        for method in [ProbeMethod::Power, ProbeMethod::Lanczos] {
            let (hi, lo) = extremal_sv_estimate(&a, method, 200, &mut rng).unwrap();
            assert!((hi - 5.0).abs() < 5e-3 && (lo - 1.0).abs() < 1e-3, "{method:?} {hi} {lo}");
        }
        let q = random_orthogonal(10, &mut rng).unwrap();
        for method in [ProbeMethod::Power, ProbeMethod::Lanczos] {
            let (hi, lo) = extremal_sv_estimate(&q, method, 200, &mut rng).unwrap();
            assert!((hi - 1.0).abs() < 1e-6 && (lo - 1.0).abs() < 1e-6, "{method:?} {hi} {lo}");
        }
    }

    #[test]
    fn probe_examples() {
        let mut rng = RngStream::new(10, 0);
        assert!(cond_probe(&Matrix::identity(8), 1e6, ProbeMethod::Lanczos, 40, &mut rng).unwrap());
        let mut d = vec![1e-10; 8];
        d[0] = 1.0;
        assert!(!cond_probe(&Matrix::diag(&d), 1e6, ProbeMethod::Lanczos, 40, &mut rng).unwrap());
    }

    #[test]
    fn nrank_trivial_ranges() {
        let mut rng = RngStream::new(11, 0);
        let z = nrank_search(&Matrix::zeros(8, 8), 0, 4, 1e6, SearchPolicy::Binary, ProbeMethod::Lanczos, &mut rng)
            .unwrap();
        assert_eq!(z.rho, 0);
        assert!(z.basis.is_none());
        for policy in [SearchPolicy::Binary, SearchPolicy::LinearDown] {
            let i = nrank_search(&Matrix::identity(16), 0, 16, 1e6, policy, ProbeMethod::Lanczos, &mut rng).unwrap();
            assert_eq!(i.rho, 16);
            assert_eq!(i.basis.unwrap().cols(), 16);
        }
    }

    #[test]
    fn candidates_stay_inside_bracket() {
        let mut rng = RngStream::new(12, 0);
        let mut s = NrankSearchState::new(&Matrix::identity(20), 3, 20, &mut rng).unwrap();
        assert_eq!(s.candidate(SearchPolicy::Binary), 12);
        assert_eq!(s.candidate(SearchPolicy::LinearDown), 16);
        s.rho_plus = 4;
        assert_eq!(s.candidate(SearchPolicy::Binary), 4);
        assert_eq!(s.candidate(SearchPolicy::LinearDown), 4);
    }
}

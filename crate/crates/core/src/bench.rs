//! Monte Carlo harness: table reproductions and tail-bound checks.
//!
//! Every trial draws from its own [`RngStream`] keyed by an experiment tag and
//! the trial index, and results are reduced in trial order, so the output does
//! not depend on the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{self, lstsq, numerical_rank, qr_positive, singular_values, two_norm, Matrix};
use crate::error::{Error, Result};
use crate::genp::{randomized_genp, PrecondSide};
use crate::random::{
    gaussian_matrix, illblock_system, step_profile, profile_matrix_with_factors, Multiplier, MultiplierKind,
    RngStream,
};

const TAG_TABLE1: u32 = 0x1000_0000;
const TAG_TABLE23: u32 = 0x2000_0000;
const TAG_THM31: u32 = 0x3000_0000;
const TAG_THM41: u32 = 0x4000_0000;
const TAG_GAUSS_SQUARE: u32 = 0x5000_0000;
const TAG_APPENDIX_A: u32 = 0x6000_0000;

/// Smallest condition-bound value kept on a κ grid; below it the bound
/// is close to vacuous.
pub const MIN_COND_BOUND: f64 = 0.05;

/// Runs `f` for trials `0..trials` in parallel and returns the results in
/// trial order. The first failing trial (by index) is reported.
fn run_trials<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..trials).into_par_iter().map(|t| f(t)).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(t, r)| r.map_err(|e| e.in_trial(t)))
        .collect()
}

fn trial_stream(seed: u64, tag: u32, trial: usize) -> RngStream {
    RngStream::for_trial(seed, tag, trial as u32)
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 || trials > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!("trials must be in 1..=2^32-1, got {trials}")));
    }
    Ok(())
}

/// Summary of one statistic over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub n_trials: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation (divides by `n_trials`).
    pub std: f64,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl TrialStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("NaN sample".into()));
        }
        let n = samples.len() as f64;
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = (samples.iter().sum::<f64>() / n).clamp(min, max);
        let std = if mean.is_finite() {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
        } else {
            f64::INFINITY
        };
        Ok(Self {
            n_trials: samples.len(),
            min,
            max,
            mean,
            std,
            samples: samples.to_vec(),
        })
    }

    pub fn median(&self) -> f64 {
        let mut v = self.samples.clone();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        }
    }
}

/// Direction of a probabilistic claim about an empirical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// The frequency is claimed to be at most the bound.
    Upper,
    /// The frequency is claimed to be at least the bound.
    Lower,
}

/// Empirical frequencies against a stated bound on a grid.
///
/// A grid point passes when `freq <= bound + 3·sqrt(freq·(1−freq)/trials)`
/// (upper bounds) or `freq >= bound − 3·sqrt(...)` (lower bounds).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheckReport {
    pub bound_name: String,
    pub kind: BoundKind,
    pub trials: usize,
    pub grid: Vec<f64>,
    pub empirical_freq: Vec<f64>,
    pub theoretical_bound: Vec<f64>,
    pub margin: Vec<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

impl TailCheckReport {
    fn evaluate(
        bound_name: impl Into<String>,
        kind: BoundKind,
        trials: usize,
        grid: Vec<f64>,
        counts: &[usize],
        theoretical_bound: Vec<f64>,
        note: Option<String>,
    ) -> Self {
        let empirical_freq: Vec<f64> = counts.iter().map(|&c| c as f64 / trials as f64).collect();
        let margin: Vec<f64> = empirical_freq
            .iter()
            .map(|&f| 3.0 * (f * (1.0 - f) / trials as f64).sqrt())
            .collect();
        let mut report = Self {
            bound_name: bound_name.into(),
            kind,
            trials,
            grid,
            empirical_freq,
            theoretical_bound,
            margin,
            pass: false,
            note,
        };
        report.pass = (0..report.grid.len()).all(|i| report.point_passes(i));
        report
    }

    /// The 3-sigma rule at grid point `i`.
    pub fn point_passes(&self, i: usize) -> bool {
        let (f, b, m) = (self.empirical_freq[i], self.theoretical_bound[i], self.margin[i]);
        match self.kind {
            BoundKind::Upper => f <= b + m,
            BoundKind::Lower => f >= b - m,
        }
    }
}

/// One row of the GENP residual table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub n: usize,
    pub refine: usize,
    pub multiplier: String,
    #[serde(flatten)]
    pub stats: TrialStats,
}

/// Plain-GENP residuals on the same systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawContrast {
    pub n: usize,
    pub median: f64,
    #[serde(flatten)]
    pub stats: TrialStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
    pub raw: Vec<RawContrast>,
}

/// Relative residuals of randomized GENP (left multiplier) on
/// [`illblock_system`] inputs, with rows for `refine = 0` and `refine = 1`.
/// Each trial solves once and records the residual before and after the
/// refinement step, so the rows are paired.
pub fn table1_genp(sizes: &[usize], trials: usize, kind: MultiplierKind, seed: u64) -> Result<Table1> {
    table1_genp_refined(sizes, trials, kind, seed, 1)
}

/// [`table1_genp`] with rows for `refine = 0..=max_refine` (at most 2).
pub fn table1_genp_refined(
    sizes: &[usize],
    trials: usize,
    kind: MultiplierKind,
    seed: u64,
    max_refine: usize,
) -> Result<Table1> {
    require_trials(trials)?;
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no sizes given".into()));
    }
    for &n in sizes {
        if n < 4 || n % 2 != 0 || n > 0xFFFF {
            return Err(Error::InvalidArgument(format!("sizes must be even and in 4..=65534, got {n}")));
        }
    }
    if max_refine > 2 {
        return Err(Error::InvalidArgument(format!("refine must be 0, 1 or 2, got {max_refine}")));
    }
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for &n in sizes {
        let tag = TAG_TABLE1 | n as u32;
        let results = run_trials(trials, |t| {
            let mut rng = trial_stream(seed, tag, t);
            let sys = illblock_system(n, &mut rng)?;
            let (_, report) = randomized_genp(&sys.a, &sys.b, kind, PrecondSide::Left, max_refine, &mut rng)?;
            Ok((report.residual_history, report.raw_residual))
        })?;
        for refine in 0..=max_refine {
            let samples: Vec<f64> = results.iter().map(|r| r.0[refine]).collect();
            rows.push(Table1Row {
                n,
                refine,
                multiplier: kind.name().to_string(),
                stats: TrialStats::from_samples(&samples)?,
            });
        }
        let raw_samples: Vec<f64> = results.iter().map(|r| r.1).collect();
        let stats = TrialStats::from_samples(&raw_samples)?;
        raw.push(RawContrast {
            n,
            median: stats.median(),
            stats,
        });
    }
    Ok(Table1 { rows, raw })
}

/// One `(q, n)` row of the low-rank tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table23Row {
    pub q: usize,
    pub n: usize,
    pub multiplier: String,
    pub rn1: TrialStats,
    pub rn2: TrialStats,
}

/// `(rn1, rn2)` for one profile matrix of numerical rank `q`.
fn table23_trial(n: usize, q: usize, kind: MultiplierKind, rng: &mut RngStream) -> Result<(f64, f64)> {
    let pm = profile_matrix_with_factors(n, &step_profile(n, q), rng)?;
    let a = &pm.matrix;
    let g = Multiplier::draw(kind, n, q, rng)?;
    let b = g.right_mul(&a.transpose())?;
    let t_q = pm.right.leading_columns(q);
    let y = lstsq(&b, &t_q)?;
    let rn1 = two_norm(&b.matmul(&y)?.sub(&t_q)?);
    let q_b = qr_positive(&b)?.q;
    let rn2 = two_norm(&a.sub(&a.matmul(&q_b)?.matmul(&q_b.transpose())?)?);
    Ok((rn1, rn2))
}

/// Residuals `rn1 = ‖B·Y − T_q‖` (least-squares `Y`) and
/// `rn2 = ‖A − A·Q·Qᵀ‖` for `B = Aᵀ·G`, over every pair in `qs × ns`.
pub fn table23_lowrank(
    ns: &[usize],
    qs: &[usize],
    trials: usize,
    kind: MultiplierKind,
    seed: u64,
) -> Result<Vec<Table23Row>> {
    require_trials(trials)?;
    if !matches!(
        kind,
        MultiplierKind::Gaussian { .. } | MultiplierKind::UniformPm1 | MultiplierKind::ToeplitzGaussian
    ) {
        return Err(Error::InvalidArgument(format!(
            "low-rank tables use gaussian, uniform or toeplitz multipliers, got {kind}"
        )));
    }
    if ns.is_empty() || qs.is_empty() {
        return Err(Error::InvalidArgument("no (q, n) pairs given".into()));
    }
    for &q in qs {
        for &n in ns {
            if q == 0 || q >= n || n > 0xFFFF || q > 0xFFF {
                return Err(Error::InvalidArgument(format!("need 1 <= q < n, got q = {q}, n = {n}")));
            }
        }
    }
    let mut rows = Vec::new();
    for &q in qs {
        for &n in ns {
            let tag = TAG_TABLE23 | ((q as u32) << 16) | n as u32;
            let results = run_trials(trials, |t| table23_trial(n, q, kind, &mut trial_stream(seed, tag, t)))?;
            let rn1: Vec<f64> = results.iter().map(|r| r.0).collect();
            let rn2: Vec<f64> = results.iter().map(|r| r.1).collect();
            rows.push(Table23Row {
                q,
                n,
                multiplier: kind.name().to_string(),
                rn1: TrialStats::from_samples(&rn1)?,
                rn2: TrialStats::from_samples(&rn2)?,
            });
        }
    }
    Ok(rows)
}

fn check_x_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() || x_grid.iter().any(|&x| !(x > 1.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("x_grid values must be finite and > 1".into()));
    }
    Ok(())
}

/// `‖P⁺‖ = 1/σ_k(P)`, infinite when `σ_k` vanishes.
fn pinv_norm_at(p: &Matrix, k: usize) -> f64 {
    let sv = singular_values(p);
    let s = sv.get(k - 1).copied().unwrap_or(0.0);
    if s > 0.0 {
        1.0 / s
    } else {
        f64::INFINITY
    }
}

/// How often `‖(A − B)⁺‖ >= 2.35·x·√l/σ` for Gaussian `A` (mean 0, std
/// `sigma`), against the bound `1/x`. `B` is the zero matrix.
pub fn tail_check_theorem31(
    m: usize,
    n: usize,
    sigma: f64,
    x_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<TailCheckReport> {
    tail_check_theorem31_shifted(m, n, sigma, None, x_grid, trials, seed)
}

/// [`tail_check_theorem31`] with a fixed shift `B`.
pub fn tail_check_theorem31_shifted(
    m: usize,
    n: usize,
    sigma: f64,
    shift: Option<&Matrix>,
    x_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<TailCheckReport> {
    require_trials(trials)?;
    check_x_grid(x_grid)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if let Some(b) = shift {
        if b.shape() != (m, n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{m}x{n} shift"),
                got: format!("{}x{}", b.rows(), b.cols()),
            });
        }
    }
    let l = m.min(n);
    let norms = run_trials(trials, |t| {
        let mut rng = trial_stream(seed, TAG_THM31, t);
        let mut a = gaussian_matrix(m, n, 0.0, sigma, &mut rng)?;
        if let Some(b) = shift {
            a = a.sub(b)?;
        }
        Ok(pinv_norm_at(&a, l))
    })?;
    let thresholds: Vec<f64> = x_grid.iter().map(|x| 2.35 * x * (l as f64).sqrt() / sigma).collect();
    let counts: Vec<usize> = thresholds.iter().map(|&th| norms.iter().filter(|&&v| v >= th).count()).collect();
    let name = if shift.is_some() { "theorem31_shifted" } else { "theorem31" };
    Ok(TailCheckReport::evaluate(
        name,
        BoundKind::Upper,
        trials,
        x_grid.to_vec(),
        &counts,
        x_grid.iter().map(|x| 1.0 / x).collect(),
        None,
    ))
}

/// Tail checks for Gaussian products `G·M` and `M·H` and their leading blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem41Report {
    /// Numerical rank of `M` at the default relative tolerance.
    pub rank_m: usize,
    pub r_hat: usize,
    pub gm: TailCheckReport,
    pub mh: TailCheckReport,
    /// Leading `j x j` blocks of `G·M`, `j = 1..=r` where `rank(M_j) = j`.
    pub leading_gm: Vec<TailCheckReport>,
    /// Leading `k x k` blocks of `M·H`, `k = 1..=r` where `rank(M^(k)) = k`.
    pub leading_mh: Vec<TailCheckReport>,
    /// Fraction of trials where `G·M` (resp. `M·H`) has full rank `r`.
    pub full_rank_freq_gm: f64,
    pub full_rank_freq_mh: f64,
    /// Whether `rank(M) >= r`, the hypothesis for the full-rank claim.
    pub full_rank_claimed: bool,
}

fn has_full_rank(p: &Matrix) -> bool {
    let k = p.rows().min(p.cols());
    let tol = f64::EPSILON * p.rows().max(p.cols()) as f64;
    numerical_rank(p, tol) == k
}

struct Thm41Sample {
    gm: f64,
    mh: f64,
    lead_gm: Vec<f64>,
    lead_mh: Vec<f64>,
    full_gm: bool,
    full_mh: bool,
}

/// Frequencies of `‖P⁺‖ >= 2.35·x·√r̂·‖M⁺‖` for `P = G·M` (`G` r x m) and
/// `P = M·H` (`H` n x r) with standard Gaussian `G`, `H`, plus the leading
/// block variants and the full-rank frequency. `rank(M)` and `‖M⁺‖` are
/// taken at the default numerical-rank tolerance.
pub fn tail_check_theorem41(
    m_mat: &Matrix,
    r: usize,
    x_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Theorem41Report> {
    require_trials(trials)?;
    check_x_grid(x_grid)?;
    let (m, n) = m_mat.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!("r must be in 1..={}, got {r}", m.min(n))));
    }
    let sv_m = singular_values(m_mat);
    let rank_m = numerical_rank(m_mat, dense::DEFAULT_RANK_TOL);
    if rank_m == 0 {
        return Err(Error::ZeroMatrix);
    }
    let m_pinv = 1.0 / sv_m[rank_m - 1];
    let r_hat = r.min(rank_m);

    // ‖M_j⁺‖ for the leading column blocks and ‖(M^(k))⁺‖ for the leading
    // row blocks, only where those blocks have full rank.
    let mut col_pinv = Vec::new();
    let mut row_pinv = Vec::new();
    for j in 1..=r {
        let mj = m_mat.submatrix(0, m, 0, j);
        if numerical_rank(&mj, dense::DEFAULT_RANK_TOL) == j {
            col_pinv.push((j, pinv_norm_at(&mj, j)));
        }
        let mk = m_mat.submatrix(0, j, 0, n);
        if numerical_rank(&mk, dense::DEFAULT_RANK_TOL) == j {
            row_pinv.push((j, pinv_norm_at(&mk, j)));
        }
    }

    let samples = run_trials(trials, |t| {
        let mut rng = trial_stream(seed, TAG_THM41, t);
        let g = gaussian_matrix(r, m, 0.0, 1.0, &mut rng)?;
        let h = gaussian_matrix(n, r, 0.0, 1.0, &mut rng)?;
        let gm = g.matmul(m_mat)?;
        let mh = m_mat.matmul(&h)?;
        Ok(Thm41Sample {
            gm: pinv_norm_at(&gm, r_hat),
            mh: pinv_norm_at(&mh, r_hat),
            lead_gm: col_pinv.iter().map(|&(j, _)| pinv_norm_at(&gm.leading_block(j), j)).collect(),
            lead_mh: row_pinv.iter().map(|&(k, _)| pinv_norm_at(&mh.leading_block(k), k)).collect(),
            full_gm: has_full_rank(&gm),
            full_mh: has_full_rank(&mh),
        })
    })?;

    let check = |name: String, values: &dyn Fn(&Thm41Sample) -> f64, scale: f64, note: Option<String>| {
        let counts: Vec<usize> = x_grid
            .iter()
            .map(|x| samples.iter().filter(|s| values(s) >= 2.35 * x * scale).count())
            .collect();
        TailCheckReport::evaluate(
            name,
            BoundKind::Upper,
            trials,
            x_grid.to_vec(),
            &counts,
            x_grid.iter().map(|x| 1.0 / x).collect(),
            note,
        )
    };
    let scale = (r_hat as f64).sqrt() * m_pinv;
    let gm = check("theorem41_gm".into(), &|s| s.gm, scale, None);
    let mh = check("theorem41_mh".into(), &|s| s.mh, scale, None);
    let leading_gm = col_pinv
        .iter()
        .enumerate()
        .map(|(idx, &(j, p))| {
            check(
                format!("corollary42_gm_j{j}"),
                &|s| s.lead_gm[idx],
                (j as f64).sqrt() * p,
                None,
            )
        })
        .collect();
    let leading_mh = row_pinv
        .iter()
        .enumerate()
        .map(|(idx, &(k, p))| {
            check(
                format!("corollary42_mh_k{k}"),
                &|s| s.lead_mh[idx],
                (k as f64).sqrt() * p,
                None,
            )
        })
        .collect();
    let frac = |f: &dyn Fn(&Thm41Sample) -> bool| samples.iter().filter(|s| f(s)).count() as f64 / trials as f64;
    Ok(Theorem41Report {
        rank_m,
        r_hat,
        gm,
        mh,
        leading_gm,
        leading_mh,
        full_rank_freq_gm: frac(&|s| s.full_gm),
        full_rank_freq_mh: frac(&|s| s.full_mh),
        full_rank_claimed: rank_m >= r,
    })
}

/// Singular values of `trials` Gaussian `n x n` matrices (mean 0, std `sigma`).
fn gaussian_square_spectra(n: usize, sigma: f64, trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    run_trials(trials, |t| {
        let mut rng = trial_stream(seed, TAG_GAUSS_SQUARE | n as u32, t);
        Ok(singular_values(&gaussian_matrix(n, n, 0.0, sigma, &mut rng)?))
    })
}

fn check_square(n: usize, sigma: f64, trials: usize) -> Result<()> {
    require_trials(trials)?;
    if n == 0 || n > 0xFFFF {
        return Err(Error::InvalidArgument(format!("n must be in 1..=65535, got {n}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Lower bound `1 − exp(−(z − 2σ√h)²/(2σ²))` on `P(‖A‖ <= z)`.
pub fn norm_bound(n: usize, sigma: f64, z: f64) -> f64 {
    let d = z - 2.0 * sigma * (n as f64).sqrt();
    1.0 - (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Lower bound `1 − (14.1 + 4.7·√(2 ln y / n))·n/(y·σ)` on `P(κ(A) <= y)`.
pub fn cond_bound(n: usize, sigma: f64, y: f64) -> f64 {
    let nf = n as f64;
    1.0 - (14.1 + 4.7 * (2.0 * y.ln() / nf).sqrt()) * nf / (y * sigma)
}

/// Empirical `P(‖A‖ <= z)` against [`norm_bound`]. Grid points below
/// `2σ√n`, where the bound does not apply, are dropped.
pub fn norm_check(n: usize, sigma: f64, z_grid: &[f64], trials: usize, seed: u64) -> Result<TailCheckReport> {
    check_square(n, sigma, trials)?;
    let spectra = gaussian_square_spectra(n, sigma, trials, seed)?;
    Ok(norm_report(n, sigma, z_grid, &spectra))
}

fn norm_report(n: usize, sigma: f64, z_grid: &[f64], spectra: &[Vec<f64>]) -> TailCheckReport {
    let floor = 2.0 * sigma * (n as f64).sqrt();
    let grid: Vec<f64> = z_grid.iter().copied().filter(|&z| z >= floor).collect();
    let dropped = z_grid.len() - grid.len();
    let counts: Vec<usize> = grid.iter().map(|&z| spectra.iter().filter(|s| s[0] <= z).count()).collect();
    let note = (dropped > 0).then(|| format!("{dropped} grid point(s) below 2*sigma*sqrt(n) excluded"));
    TailCheckReport::evaluate(
        "theorem32_norm",
        BoundKind::Lower,
        spectra.len(),
        grid.clone(),
        &counts,
        grid.iter().map(|&z| norm_bound(n, sigma, z)).collect(),
        note,
    )
}

/// Empirical `P(κ(A) <= y)` against [`cond_bound`]. Grid points with
/// `y < 1` or a bound below [`MIN_COND_BOUND`] are dropped.
pub fn cond_check(n: usize, sigma: f64, y_grid: &[f64], trials: usize, seed: u64) -> Result<TailCheckReport> {
    check_square(n, sigma, trials)?;
    if sigma > 1.0 {
        return Err(Error::InvalidArgument(format!("the condition bound needs sigma <= 1, got {sigma}")));
    }
    let spectra = gaussian_square_spectra(n, sigma, trials, seed)?;
    Ok(cond_report(n, sigma, y_grid, &spectra))
}

fn cond_report(n: usize, sigma: f64, y_grid: &[f64], spectra: &[Vec<f64>]) -> TailCheckReport {
    let grid: Vec<f64> = y_grid
        .iter()
        .copied()
        .filter(|&y| y >= 1.0 && cond_bound(n, sigma, y) >= MIN_COND_BOUND)
        .collect();
    let dropped = y_grid.len() - grid.len();
    let kappas: Vec<f64> = spectra
        .iter()
        .map(|s| {
            let last = s[s.len() - 1];
            if last > 0.0 {
                s[0] / last
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let counts: Vec<usize> = grid.iter().map(|&y| kappas.iter().filter(|&&k| k <= y).count()).collect();
    let mut note = format!("grid restricted to points where the bound is >= {MIN_COND_BOUND}");
    if dropped > 0 {
        note.push_str(&format!("; {dropped} point(s) excluded"));
    }
    TailCheckReport::evaluate(
        "theorem33_cond",
        BoundKind::Lower,
        spectra.len(),
        grid.clone(),
        &counts,
        grid.iter().map(|&y| cond_bound(n, sigma, y)).collect(),
        Some(note),
    )
}

/// The `y` where [`cond_bound`] equals `target` (bisection in `ln y`).
pub fn cond_bound_inverse(n: usize, sigma: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 80.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cond_bound(n, sigma, mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}

/// Default grids: `z = c·σ√n` for `c` in {2, 2.1, 2.25, 2.5, 3} and the `y`
/// values where the condition bound equals 0.05, 0.25, 0.5, 0.75, 0.9.
pub fn norm_cond_checks(
    n: usize,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<(TailCheckReport, TailCheckReport)> {
    check_square(n, sigma, trials)?;
    if sigma > 1.0 {
        return Err(Error::InvalidArgument(format!("the condition bound needs sigma <= 1, got {sigma}")));
    }
    let root = sigma * (n as f64).sqrt();
    let z_grid: Vec<f64> = [2.0, 2.1, 2.25, 2.5, 3.0].iter().map(|c| c * root).collect();
    let y_grid: Vec<f64> = [MIN_COND_BOUND, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|&p| cond_bound_inverse(n, sigma, p))
        .collect();
    let spectra = gaussian_square_spectra(n, sigma, trials, seed)?;
    Ok((norm_report(n, sigma, &z_grid, &spectra), cond_report(n, sigma, &y_grid, &spectra)))
}

/// Sampling pattern for the integer matrices of the nonsingularity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntStructure {
    General,
    Toeplitz,
}

impl IntStructure {
    fn name(self) -> &'static str {
        match self {
            Self::General => "general",
            Self::Toeplitz => "toeplitz",
        }
    }
}

/// Exact determinant of a `k x k` integer matrix (row-major) by
/// fraction-free Bareiss elimination with row swaps.
pub fn exact_det(entries: &[i64], k: usize) -> Result<i128> {
    if entries.len() != k * k {
        return Err(Error::DimensionMismatch {
            expected: format!("{} entries", k * k),
            got: format!("{}", entries.len()),
        });
    }
    if k == 0 {
        return Ok(1);
    }
    let overflow = || Error::InvalidArgument("integer overflow in exact determinant".into());
    let mut a: Vec<i128> = entries.iter().map(|&v| i128::from(v)).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for p in 0..k {
        if a[p * k + p] == 0 {
            match (p + 1..k).find(|&i| a[i * k + p] != 0) {
                Some(i) => {
                    for j in 0..k {
                        a.swap(p * k + j, i * k + j);
                    }
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        let piv = a[p * k + p];
        for i in p + 1..k {
            for j in p + 1..k {
                let v = a[i * k + j]
                    .checked_mul(piv)
                    .and_then(|x| x.checked_sub(a[i * k + p].checked_mul(a[p * k + j])?))
                    .ok_or_else(overflow)?;
                a[i * k + j] = v / prev;
            }
            a[i * k + p] = 0;
        }
        prev = piv;
    }
    Ok(sign * a[(k - 1) * k + (k - 1)])
}

/// Leading principal minors `det(M_1), …, det(M_k)`, computed exactly.
pub fn leading_minors(entries: &[i64], k: usize) -> Result<Vec<i128>> {
    (1..=k)
        .map(|i| {
            let block: Vec<i64> = (0..i).flat_map(|r| entries[r * k..r * k + i].to_vec()).collect();
            exact_det(&block, i)
        })
        .collect()
}

fn sample_int_matrix(k: usize, card: usize, structure: IntStructure, rng: &mut RngStream) -> Vec<i64> {
    let mut draw = || rng.int_in(1, card as i64);
    match structure {
        IntStructure::General => (0..k * k).map(|_| draw()).collect(),
        IntStructure::Toeplitz => {
            // diag[d + k - 1] holds the entry on diagonal i - j = d.
            let diag: Vec<i64> = (0..2 * k - 1).map(|_| draw()).collect();
            (0..k * k)
                .map(|idx| {
                    let (i, j) = (idx / k, idx % k);
                    diag[i + k - 1 - j]
                })
                .collect()
        }
    }
}

/// Frequencies of singular and of not strongly nonsingular `k x k` matrices
/// with entries uniform on `{1, …, |Δ|}`, against `k/|Δ|` and
/// `k(k+1)/(2|Δ|)`. Determinants are exact. Returns, for each structure and
/// cardinality, a singularity report and a strong-nonsingularity report,
/// each on the grid `k_list`.
pub fn appendix_a_check(
    k_list: &[usize],
    cardinalities: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<TailCheckReport>> {
    require_trials(trials)?;
    if k_list.is_empty() || cardinalities.is_empty() {
        return Err(Error::InvalidArgument("empty k_list or cardinalities".into()));
    }
    if k_list.iter().any(|&k| k == 0 || k > 255) {
        return Err(Error::InvalidArgument("k must be in 1..=255".into()));
    }
    if cardinalities.iter().any(|&c| c == 0 || c > 0xFFFF) {
        return Err(Error::InvalidArgument("cardinalities must be in 1..=65535".into()));
    }
    let mut reports = Vec::new();
    for (si, structure) in [IntStructure::General, IntStructure::Toeplitz].into_iter().enumerate() {
        for &card in cardinalities {
            let mut singular = Vec::new();
            let mut weak = Vec::new();
            for &k in k_list {
                let tag = TAG_APPENDIX_A | ((si as u32) << 24) | ((k as u32) << 16) | card as u32;
                let flags = run_trials(trials, |t| {
                    let mut rng = trial_stream(seed, tag, t);
                    let entries = sample_int_matrix(k, card, structure, &mut rng);
                    let minors = leading_minors(&entries, k)?;
                    Ok((minors[k - 1] == 0, minors.contains(&0)))
                })?;
                singular.push(flags.iter().filter(|f| f.0).count());
                weak.push(flags.iter().filter(|f| f.1).count());
            }
            let grid: Vec<f64> = k_list.iter().map(|&k| k as f64).collect();
            let uninformative: Vec<String> = k_list
                .iter()
                .filter(|&&k| card <= k * (k + 1) / 2)
                .map(|k| k.to_string())
                .collect();
            let weak_note = (!uninformative.is_empty()).then(|| {
                format!("bound >= 1 (uninformative) for k in {{{}}}", uninformative.join(", "))
            });
            reports.push(TailCheckReport::evaluate(
                format!("corollaryA1_singular_{}_d{card}", structure.name()),
                BoundKind::Upper,
                trials,
                grid.clone(),
                &singular,
                k_list.iter().map(|&k| k as f64 / card as f64).collect(),
                None,
            ));
            reports.push(TailCheckReport::evaluate(
                format!("corollaryA1_not_strongly_nonsingular_{}_d{card}", structure.name()),
                BoundKind::Upper,
                trials,
                grid,
                &weak,
                k_list.iter().map(|&k| (k * (k + 1)) as f64 / (2 * card) as f64).collect(),
                weak_note,
            ));
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_population_convention() {
        let s = TrialStats::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.median(), 2.5);
        assert!(TrialStats::from_samples(&[]).is_err());
        let c = TrialStats::from_samples(&[0.1, 0.1, 0.1]).unwrap();
        assert!(c.min <= c.mean && c.mean <= c.max);
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        assert_eq!(exact_det(&[7], 1).unwrap(), 7);
        assert_eq!(exact_det(&[1, 2, 3, 4], 2).unwrap(), -2);
        assert_eq!(exact_det(&[0, 1, 1, 0], 2).unwrap(), -1);
        assert_eq!(exact_det(&[2, 0, 1, 1, 3, 2, 1, 1, 1], 3).unwrap(), 2 * (3 - 2) + (1 - 3));
        assert_eq!(exact_det(&[1, 2, 2, 4], 2).unwrap(), 0);
        assert_eq!(leading_minors(&[0, 1, 1, 0], 2).unwrap(), vec![0, -1]);
    }

    #[test]
    fn toeplitz_sampler_is_toeplitz() {
        let mut rng = RngStream::new(3, 0);
        let k = 4;
        let e = sample_int_matrix(k, 64, IntStructure::Toeplitz, &mut rng);
        for i in 1..k {
            for j in 1..k {
                assert_eq!(e[i * k + j], e[(i - 1) * k + j - 1]);
            }
        }
    }

    #[test]
    fn tail_report_pass_rule() {
        let r = TailCheckReport::evaluate("t", BoundKind::Upper, 100, vec![2.0], &[60], vec![0.5], None);
        let margin = 3.0 * (0.6f64 * 0.4 / 100.0).sqrt();
        assert_eq!(r.margin[0], margin);
        assert!(r.pass);
        let r = TailCheckReport::evaluate("t", BoundKind::Upper, 100, vec![2.0], &[70], vec![0.5], None);
        assert!(!r.pass);
        let r = TailCheckReport::evaluate("t", BoundKind::Lower, 100, vec![2.0], &[30], vec![0.5], None);
        assert!(!r.pass);
    }

    #[test]
    fn cond_bound_inverse_hits_target() {
        let y = cond_bound_inverse(32, 1.0, 0.5);
        assert!((cond_bound(32, 1.0, y) - 0.5).abs() < 1e-9);
    }
}

//! Monte Carlo checks of the random-matrix identities used throughout the
//! crate. Each check reports a sample mean, its analytic target and a
//! tolerance expressed in standard errors.

use crate::linalg::{c, herm_sqrt, hpd_inverse, random_cn_matrix, random_cn_vector, trace, CMat, C64};
use crate::rng::{chunked_trials, Seed, SimRng};
use crate::{Error, Result};

pub const DEFAULT_SIGMAS: f64 = 5.0;
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaCheckResult {
    pub statistic: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub trials: usize,
    /// Standard error of the sample mean.
    pub stderr: f64,
}

impl LemmaCheckResult {
    fn from_moments(mean: C64, target: C64, stderr: f64, sigmas: f64, trials: usize) -> Self {
        let tolerance = sigmas * stderr;
        let dev = (mean - target).norm();
        LemmaCheckResult {
            statistic: mean.re,
            target: target.re,
            tolerance,
            passed: dev <= tolerance,
            trials,
            stderr,
        }
    }

    /// Deviation in units of standard error.
    pub fn z_score(&self) -> f64 {
        if self.stderr == 0.0 {
            if self.statistic == self.target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.statistic - self.target).abs() / self.stderr
        }
    }

    /// Re-evaluates the verdict at a different multiple of the standard error.
    pub fn at_sigmas(&self, sigmas: f64) -> Self {
        let tolerance = sigmas * self.stderr;
        LemmaCheckResult {
            tolerance,
            passed: (self.statistic - self.target).abs() <= tolerance,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: C64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, z: C64) {
        self.n += 1;
        self.sum += z;
        self.sum_sq += z.norm_sqr();
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        Moments { n: a.n + b.n, sum: a.sum + b.sum, sum_sq: a.sum_sq + b.sum_sq }
    }

    fn mean(&self) -> C64 {
        self.sum / self.n as f64
    }

    fn stderr(&self) -> f64 {
        let n = self.n as f64;
        let mean = self.mean();
        let var = (self.sum_sq / n - mean.norm_sqr()).max(0.0) * n / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

fn sample<F>(seed: Seed, trials: usize, f: F) -> Moments
where
    F: Fn(&mut SimRng) -> C64 + Sync,
{
    chunked_trials(
        seed,
        trials,
        CHUNK,
        |rng, n| {
            let mut m = Moments::default();
            for _ in 0..n {
                m.push(f(rng));
            }
            m
        },
        Moments::merge,
    )
    .unwrap_or_default()
}

fn need_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::invalid("need at least two trials"));
    }
    Ok(())
}

fn square(a: &CMat, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!("{what} must be square")));
    }
    Ok(a.nrows())
}

fn hermitian(a: &CMat, what: &str) -> Result<()> {
    let scale = crate::linalg::frob(a).max(1.0);
    if crate::linalg::frob(&(a - a.adjoint())) > 1e-10 * scale {
        return Err(Error::invalid(format!("{what} must be Hermitian")));
    }
    Ok(())
}

/// Trace lemma: quadratic form and cross term for `x, w ~ CN(0, I/M)`.
#[derive(Clone, Debug)]
pub struct TraceLemmaReport {
    pub quadratic: LemmaCheckResult,
    pub cross: LemmaCheckResult,
}

pub fn check_trace_lemma(a: &CMat, trials: usize, seed: Seed) -> Result<TraceLemmaReport> {
    let m = square(a, "A")?;
    need_trials(trials)?;
    let s = c((1.0 / m as f64).sqrt());
    let quad = sample(seed.named("quadratic"), trials, |rng| {
        let x = random_cn_vector(rng, m) * s;
        x.dotc(&(a * &x))
    });
    let cross = sample(seed.named("cross"), trials, |rng| {
        let x = random_cn_vector(rng, m) * s;
        let w = random_cn_vector(rng, m) * s;
        x.dotc(&(a * &w))
    });
    let target = trace(a) / m as f64;
    let quadratic = LemmaCheckResult::from_moments(quad.mean(), target, quad.stderr(), DEFAULT_SIGMAS, trials);
    let cross_mean = cross.mean();
    let mut cross_res =
        LemmaCheckResult::from_moments(cross_mean, c(0.0), cross.stderr(), DEFAULT_SIGMAS, trials);
    cross_res.statistic = cross_mean.norm();
    Ok(TraceLemmaReport { quadratic, cross: cross_res })
}

/// Sample variance of `xᴴx` for `x ~ CN(0, I/M)`, one entry per dimension.
/// The product `M · Var` should stay near one.
pub fn trace_lemma_variance_decay(dims: &[usize], trials: usize, seed: Seed) -> Vec<(usize, f64)> {
    dims.iter()
        .map(|&m| {
            let s = c((1.0 / m as f64).sqrt());
            let mom = sample(seed.child(m as u64), trials, |rng| {
                let x = random_cn_vector(rng, m) * s;
                c(x.norm_squared())
            });
            let var = mom.stderr().powi(2) * mom.n as f64;
            (m, var)
        })
        .collect()
}

/// `E{tr(X⁻¹)} = K/(N−K)` for a K×K central Wishart matrix with N degrees of freedom.
pub fn check_wishart_inverse_trace(k: usize, n: usize, trials: usize, seed: Seed) -> Result<LemmaCheckResult> {
    if k == 0 || n <= k {
        return Err(Error::invalid(format!("expectation diverges unless N > K (got K={k}, N={n})")));
    }
    need_trials(trials)?;
    let mom = sample(seed, trials, |rng| {
        let g = random_cn_matrix(rng, k, n);
        let x = &g * g.adjoint();
        match hpd_inverse(&x) {
            Ok(inv) => c(trace(&inv).re),
            Err(_) => c(f64::INFINITY),
        }
    });
    let target = k as f64 / (n - k) as f64;
    Ok(LemmaCheckResult::from_moments(mom.mean(), c(target), mom.stderr(), DEFAULT_SIGMAS, trials))
}

/// `E{uᴴBu} = μᴴBμ + tr(BΣ)` for `u ~ CN(μ, Σ)`.
pub fn check_quadratic_form_mean(
    mu: &crate::CVec,
    sigma: &CMat,
    b: &CMat,
    trials: usize,
    seed: Seed,
) -> Result<LemmaCheckResult> {
    let n = square(sigma, "Sigma")?;
    if square(b, "B")? != n || mu.len() != n {
        return Err(Error::invalid("shapes of mu, Sigma and B disagree"));
    }
    need_trials(trials)?;
    let root = herm_sqrt(sigma)?;
    let mom = sample(seed, trials, |rng| {
        let u = mu + &root * random_cn_vector(rng, n);
        u.dotc(&(b * &u))
    });
    let target = mu.dotc(&(b * mu)) + trace(&(b * sigma));
    Ok(LemmaCheckResult::from_moments(mom.mean(), target, mom.stderr(), DEFAULT_SIGMAS, trials))
}

/// `E{|uᴴBu|²} = |tr(ΣB)|² + tr(ΣBΣBᴴ)` for zero-mean `u ~ CN(0, Σ)`.
pub fn check_quadratic_form_second_moment(
    sigma: &CMat,
    b: &CMat,
    trials: usize,
    seed: Seed,
) -> Result<LemmaCheckResult> {
    let n = square(sigma, "Sigma")?;
    if square(b, "B")? != n {
        return Err(Error::invalid("Sigma and B must have the same size"));
    }
    need_trials(trials)?;
    let root = herm_sqrt(sigma)?;
    let mom = sample(seed, trials, |rng| {
        let u = &root * random_cn_vector(rng, n);
        c(u.dotc(&(b * &u)).norm_sqr())
    });
    let sb = sigma * b;
    let target = trace(&sb).norm_sqr() + trace(&(&sb * sigma * b.adjoint())).re;
    Ok(LemmaCheckResult::from_moments(mom.mean(), c(target), mom.stderr(), DEFAULT_SIGMAS, trials))
}

/// Entrywise `E{I − Rᴴ(RRᴴ)⁻¹R} = ((M−N)/M) I` for `R` with i.i.d. CN(0,1) entries.
///
/// `statistic` is the largest absolute entry deviation; `tolerance` is five
/// times the largest entry standard error.
pub fn check_projection_expectation(m: usize, n: usize, trials: usize, seed: Seed) -> Result<LemmaCheckResult> {
    if n == 0 || m <= n {
        return Err(Error::invalid(format!("projection lemma needs M > N (got M={m}, N={n})")));
    }
    need_trials(trials)?;
    #[derive(Clone)]
    struct Acc {
        sum: CMat,
        sum_sq: nalgebra::DMatrix<f64>,
        count: usize,
    }
    let acc = chunked_trials(
        seed,
        trials,
        CHUNK,
        |rng, len| {
            let mut a = Acc { sum: CMat::zeros(m, m), sum_sq: nalgebra::DMatrix::zeros(m, m), count: 0 };
            for _ in 0..len {
                let r = random_cn_matrix(rng, n, m);
                let gram = &r * r.adjoint();
                let inv = hpd_inverse(&gram).unwrap_or_else(|_| CMat::zeros(n, n));
                let b = CMat::identity(m, m) - r.adjoint() * inv * &r;
                for (s, (q, z)) in a.sum.iter_mut().zip(a.sum_sq.iter_mut().zip(b.iter())) {
                    *s += *z;
                    *q += z.norm_sqr();
                }
                a.count += 1;
            }
            a
        },
        |mut x, y| {
            x.sum += y.sum;
            x.sum_sq += y.sum_sq;
            x.count += y.count;
            x
        },
    )
    .expect("at least one chunk");
    let cnt = acc.count as f64;
    let diag = (m - n) as f64 / m as f64;
    let mut worst: f64 = 0.0;
    let mut worst_se: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let mean = acc.sum[(i, j)] / cnt;
            let target = if i == j { diag } else { 0.0 };
            worst = worst.max((mean - c(target)).norm());
            let var = (acc.sum_sq[(i, j)] / cnt - mean.norm_sqr()).max(0.0);
            worst_se = worst_se.max((var / cnt).sqrt());
        }
    }
    let tolerance = DEFAULT_SIGMAS * worst_se;
    Ok(LemmaCheckResult {
        statistic: worst,
        target: 0.0,
        tolerance,
        passed: worst <= tolerance,
        trials,
        stderr: worst_se,
    })
}

/// `E{xᴴMx · xᴴNx} = tr(R̄MR̄N) + tr(R̄M) tr(R̄N)` for `x ~ CN(0, R̄)` and
/// Hermitian `M`, `N`.
pub fn check_double_quadratic(
    rbar: &CMat,
    mmat: &CMat,
    nmat: &CMat,
    trials: usize,
    seed: Seed,
) -> Result<LemmaCheckResult> {
    let d = square(rbar, "Rbar")?;
    if square(mmat, "M")? != d || square(nmat, "N")? != d {
        return Err(Error::invalid("Rbar, M and N must have the same size"));
    }
    hermitian(mmat, "M")?;
    hermitian(nmat, "N")?;
    need_trials(trials)?;
    let root = herm_sqrt(rbar)?;
    let mom = sample(seed, trials, |rng| {
        let x = &root * random_cn_vector(rng, d);
        x.dotc(&(mmat * &x)) * x.dotc(&(nmat * &x))
    });
    let rm = rbar * mmat;
    let rn = rbar * nmat;
    let target = trace(&(&rm * &rn)) + trace(&rm) * trace(&rn);
    Ok(LemmaCheckResult::from_moments(mom.mean(), target, mom.stderr(), DEFAULT_SIGMAS, trials))
}

/// Runs every check with pinned instances, as used by `cfsim lemmas`.
pub fn run_all(trials: usize, seed: Seed) -> Result<Vec<(String, LemmaCheckResult)>> {
    let mut rng = seed.named("instances").rng();
    let mut out = Vec::new();
    let a = crate::linalg::random_hermitian(&mut rng, 16);
    let tl = check_trace_lemma(&a, trials, seed.child(1))?;
    out.push(("trace lemma: quadratic form (M=16)".to_string(), tl.quadratic));
    out.push(("trace lemma: cross term (M=16)".to_string(), tl.cross));
    out.push(("wishart inverse trace (K=2, N=4)".to_string(), check_wishart_inverse_trace(2, 4, trials, seed.child(2))?));
    out.push(("wishart inverse trace (K=4, N=16)".to_string(), check_wishart_inverse_trace(4, 16, trials, seed.child(3))?));
    let mu = random_cn_vector(&mut rng, 5);
    let sig = crate::linalg::random_psd(&mut rng, 5);
    let b = crate::linalg::random_psd(&mut rng, 5);
    out.push(("quadratic form mean (n=5)".to_string(), check_quadratic_form_mean(&mu, &sig, &b, trials, seed.child(4))?));
    let sig4 = crate::linalg::random_psd(&mut rng, 4);
    let b4 = crate::linalg::random_psd(&mut rng, 4);
    out.push((
        "quadratic form second moment (n=4)".to_string(),
        check_quadratic_form_second_moment(&sig4, &b4, trials, seed.child(5))?,
    ));
    out.push(("projection expectation (M=4, N=2)".to_string(), check_projection_expectation(4, 2, trials, seed.child(6))?));
    let rb = crate::linalg::random_psd(&mut rng, 4);
    let mm = crate::linalg::random_hermitian(&mut rng, 4);
    let nn = crate::linalg::random_hermitian(&mut rng, 4);
    out.push(("double quadratic form (dim=4)".to_string(), check_double_quadratic(&rb, &mm, &nn, trials, seed.child(7))?));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrices_are_exact() {
        let z = CMat::zeros(3, 3);
        let r = check_trace_lemma(&z, 1000, Seed(1)).unwrap();
        assert_eq!(r.quadratic.statistic, 0.0);
        assert!(r.quadratic.passed);
        let id = CMat::identity(3, 3);
        let r = check_quadratic_form_second_moment(&id, &z, 1000, Seed(2)).unwrap();
        assert_eq!(r.statistic, 0.0);
        let r = check_double_quadratic(&id, &z, &id, 1000, Seed(3)).unwrap();
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn deterministic_quadratic_form() {
        let mu = crate::CVec::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)]);
        let b = CMat::from_row_slice(2, 2, &[c(2.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), c(3.0)]);
        let r = check_quadratic_form_mean(&mu, &CMat::zeros(2, 2), &b, 100, Seed(0)).unwrap();
        assert!(r.passed);
        assert!((r.statistic - r.target).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(check_wishart_inverse_trace(3, 3, 100, Seed(0)).is_err());
        assert!(check_projection_expectation(2, 2, 100, Seed(0)).is_err());
    }

    #[test]
    fn targets_by_hand() {
        let r = check_wishart_inverse_trace(1, 2, 100, Seed(0)).unwrap();
        assert_eq!(r.target, 1.0);
        let id = CMat::identity(2, 2);
        let r = check_quadratic_form_second_moment(&id, &id, 100, Seed(0)).unwrap();
        assert_eq!(r.target, 6.0);
        let r = check_double_quadratic(&id, &id, &id, 100, Seed(0)).unwrap();
        assert_eq!(r.target, 6.0);
    }
}

//! Certified intervals for Monte Carlo estimates under a change of measure.
//!
//! Samples `X_1..X_n` come from a `gamma`-strongly log-concave `P` while the
//! target is `E_Q[phi(X)]` for an `L`-Lipschitz `phi`. The interval is the
//! sample mean plus or minus `4 L^2 log(2/delta) / (n gamma) + K`, where the
//! bias term `K` depends on a divergence between `Q` and `P`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::distributions::{gaussian_gamma, Gaussian1D, LogConcaveSpec};
use crate::divergences::{parse_param, DivergenceValue};
use crate::error::{bad_param, Error, Result};
use crate::numeric::{compensated_sum, gamma, normal_cdf, normal_pdf};
use crate::quadrature::integrate_with_breaks;
use crate::rng;

/// Which divergence controls the bias term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertifyForm {
    /// Pseudo alpha-divergence `E_P|dQ/dP - 1|^alpha`.
    PseudoAlpha(f64),
    Chi2,
    Kl,
}

impl CertifyForm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CertifyForm::PseudoAlpha(a) if !(a > 1.0 && a.is_finite()) => {
                Err(bad_param(format!("alpha must be > 1, got {a}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CertifyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertifyForm::PseudoAlpha(a) => write!(f, "pseudo-alpha:{a}"),
            CertifyForm::Chi2 => write!(f, "chi2"),
            CertifyForm::Kl => write!(f, "kl"),
        }
    }
}

impl FromStr for CertifyForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let form = match token.split_once(':') {
            None => match token {
                "chi2" => CertifyForm::Chi2,
                "kl" => CertifyForm::Kl,
                _ => return Err(Error::Parse(format!("unknown certify form {token:?}"))),
            },
            Some(("pseudo-alpha", v)) => CertifyForm::PseudoAlpha(parse_param(token, v)?),
            Some(_) => return Err(Error::Parse(format!("unknown certify form {token:?}"))),
        };
        form.validate()?;
        Ok(form)
    }
}

/// Parameters of a certification request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyInput {
    /// Lipschitz constant of `phi`.
    pub lipschitz: f64,
    /// Strong log-concavity parameter of `P`.
    pub gamma: f64,
    pub n: usize,
    pub delta: f64,
    /// Divergence matching the chosen form; `+inf` is accepted and yields an
    /// unbounded interval.
    pub div: f64,
}

impl CertifyInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(bad_param(format!(
                "L must be positive, got {}",
                self.lipschitz
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(bad_param(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.n == 0 {
            return Err(bad_param("sample count n must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(bad_param(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.div >= 0.0) {
            return Err(bad_param(format!(
                "divergence must be non-negative, got {}",
                self.div
            )));
        }
        Ok(())
    }

    fn log_term(&self) -> f64 {
        (2.0 / self.delta).ln()
    }

    /// `4 L^2 log(2/delta) / (n gamma)`.
    pub fn deviation_term(&self) -> f64 {
        4.0 * self.lipschitz * self.lipschitz * self.log_term() / (self.n as f64 * self.gamma)
    }
}

/// Components of a half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfWidth {
    pub deviation_term: f64,
    /// Bias term `K`.
    pub bias_term: f64,
    pub half_width: f64,
    /// Declared coverage probability.
    pub level: f64,
}

impl HalfWidth {
    fn new(input: &CertifyInput, bias_term: f64, level: f64) -> Self {
        let deviation_term = input.deviation_term();
        Self {
            deviation_term,
            bias_term,
            half_width: deviation_term + bias_term,
            level,
        }
    }
}

/// Half-width with the pseudo alpha-divergence bias
/// `K = 2^{(2a-1)/a} L div^{1/a} / sqrt(gamma) * Gamma((3a-2)/(2(a-1)))^{(a-1)/a}`.
pub fn half_width_pseudo_alpha(alpha: f64, input: &CertifyInput) -> Result<HalfWidth> {
    CertifyForm::PseudoAlpha(alpha).validate()?;
    input.validate()?;
    let a = alpha;
    let k = 2f64.powf((2.0 * a - 1.0) / a) * input.lipschitz * input.div.powf(1.0 / a)
        / input.gamma.sqrt()
        * gamma((3.0 * a - 2.0) / (2.0 * (a - 1.0))).powf((a - 1.0) / a);
    Ok(HalfWidth::new(input, k, 1.0 - input.delta))
}

/// Half-width with the chi^2 bias; `second_moment` is `(1/n) sum phi(X_i)^2`.
/// The level is `(1 - delta)^2`.
pub fn half_width_chi2(input: &CertifyInput, second_moment: f64) -> Result<HalfWidth> {
    input.validate()?;
    if !(second_moment >= 0.0 && second_moment.is_finite()) {
        return Err(bad_param(format!(
            "empirical second moment must be finite and non-negative, got {second_moment}"
        )));
    }
    let log_term = input.log_term();
    let n = input.n as f64;
    let l2_over_gamma = input.lipschitz * input.lipschitz / input.gamma;
    let spread = if log_term <= n {
        16.0 * l2_over_gamma * (log_term / n).sqrt()
    } else {
        16.0 * l2_over_gamma * log_term / n
    };
    let k = (input.div * (second_moment + spread)).sqrt();
    Ok(HalfWidth::new(input, k, (1.0 - input.delta).powi(2)))
}

/// Half-width with the KL bias `K = KL + L^2 / (n gamma)`.
pub fn half_width_kl(input: &CertifyInput) -> Result<HalfWidth> {
    input.validate()?;
    let k = input.div + input.lipschitz * input.lipschitz / (input.n as f64 * input.gamma);
    Ok(HalfWidth::new(input, k, 1.0 - input.delta))
}

/// `chi^2(Q||P)` between Gaussians; infinite unless `2 var(P) > var(Q)`.
pub fn chi2_gaussian(q: &Gaussian1D, p: &Gaussian1D) -> DivergenceValue {
    let denom = 2.0 * p.variance() - q.variance();
    if denom <= 0.0 {
        return DivergenceValue::Infinite;
    }
    let dm = q.mean() - p.mean();
    let scale = p.variance() / (q.std_dev() * denom.sqrt());
    DivergenceValue::finite(scale * (dm * dm / denom).exp() - 1.0)
}

/// `KL(Q||P)` between Gaussians.
pub fn kl_gaussian(q: &Gaussian1D, p: &Gaussian1D) -> DivergenceValue {
    let ratio = q.variance() / p.variance();
    let dm = q.mean() - p.mean();
    DivergenceValue::finite(0.5 * (ratio + dm * dm / p.variance() - 1.0 - ratio.ln()))
}

/// Default absolute error target of [`pseudo_alpha_gaussian`].
pub const PSEUDO_ALPHA_TOL: f64 = 1e-8;
/// Tail pieces are added until one contributes less than this.
pub const TAIL_CUTOFF: f64 = 1e-10;
const MAX_TAIL_PIECES: usize = 400;

/// `E_P|dQ/dP - 1|^alpha` between Gaussians by adaptive quadrature.
pub fn pseudo_alpha_gaussian(
    alpha: f64,
    q: &Gaussian1D,
    p: &Gaussian1D,
) -> Result<DivergenceValue> {
    pseudo_alpha_gaussian_with_tol(alpha, q, p, PSEUDO_ALPHA_TOL)
}

/// [`pseudo_alpha_gaussian`] with an explicit absolute error target.
pub fn pseudo_alpha_gaussian_with_tol(
    alpha: f64,
    q: &Gaussian1D,
    p: &Gaussian1D,
    tol: f64,
) -> Result<DivergenceValue> {
    CertifyForm::PseudoAlpha(alpha).validate()?;
    if q == p {
        return Ok(DivergenceValue::Finite(0.0));
    }
    // log(q/p) = c2 x^2 + c1 x + c0.
    let (vq, vp) = (q.variance(), p.variance());
    let (mq, mp) = (q.mean(), p.mean());
    let c2 = -0.5 / vq + 0.5 / vp;
    let c1 = mq / vq - mp / vp;
    let c0 = -0.5 * mq * mq / vq + 0.5 * mp * mp / vp + 0.5 * (vp / vq).ln();

    // The integrand behaves like exp(alpha log(q/p) + log p) in the tails.
    let curvature = alpha * c2 - 0.5 / vp;
    if curvature >= 0.0 {
        return Ok(DivergenceValue::Infinite);
    }
    let eff_var = -0.5 / curvature;
    let eff_mean = eff_var * (alpha * c1 + mp / vp);

    let integrand = |x: f64| {
        let lr = (c2 * x + c1) * x + c0;
        let log_gap = if lr > 0.0 {
            lr + (-(-lr).exp_m1()).ln()
        } else {
            (-lr.exp_m1()).ln()
        };
        (alpha * log_gap + p.ln_density(x)).exp()
    };

    // Points where q = p, at which the integrand has a kink.
    let mut roots = Vec::new();
    if c2.abs() > 1e-300 {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            let s = disc.sqrt();
            roots.push((-c1 - s) / (2.0 * c2));
            roots.push((-c1 + s) / (2.0 * c2));
        }
    } else if c1 != 0.0 {
        roots.push(-c0 / c1);
    }

    let sp = p.std_dev();
    let se = eff_var.sqrt();
    let lo = (mp - 12.0 * sp).min(eff_mean - 12.0 * se);
    let hi = (mp + 12.0 * sp).max(eff_mean + 12.0 * se);
    let core = integrate_with_breaks(integrand, lo, hi, &roots, tol)?;

    let width = 4.0 * sp.max(se);
    let mut pieces = vec![core.value];
    for direction in [-1.0, 1.0] {
        let mut edge = if direction < 0.0 { lo } else { hi };
        let mut converged = false;
        for _ in 0..MAX_TAIL_PIECES {
            let next = edge + direction * width;
            let (a, b) = if direction < 0.0 {
                (next, edge)
            } else {
                (edge, next)
            };
            let piece = integrate_with_breaks(integrand, a, b, &roots, tol)?;
            pieces.push(piece.value);
            edge = next;
            if piece.value.abs() < TAIL_CUTOFF {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(format!(
                "tail of the pseudo alpha-divergence integrand still above {TAIL_CUTOFF:e} after {MAX_TAIL_PIECES} pieces"
            )));
        }
    }
    Ok(DivergenceValue::finite(compensated_sum(pieces)))
}

/// A real map with a caller-declared Lipschitz constant.
pub trait LipschitzMap: Sync {
    fn eval(&self, x: f64) -> f64;
    fn lipschitz(&self) -> f64;
}

/// Test functions with an analytic mean under a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestMap {
    /// `slope * x + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `clamp(slope * x + intercept, lo, hi)`.
    ClippedAffine {
        slope: f64,
        intercept: f64,
        lo: f64,
        hi: f64,
    },
}

impl TestMap {
    pub fn identity() -> Self {
        TestMap::Affine {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TestMap::Affine { slope, intercept } => {
                slope.is_finite() && intercept.is_finite() && slope != 0.0
            }
            TestMap::ClippedAffine {
                slope,
                intercept,
                lo,
                hi,
            } => slope.is_finite() && intercept.is_finite() && slope != 0.0 && lo < hi,
        };
        if ok {
            Ok(())
        } else {
            Err(bad_param(format!("invalid test map {self:?}")))
        }
    }

    /// `E[phi(X)]` for `X ~ g`.
    pub fn gaussian_mean(&self, g: &Gaussian1D) -> f64 {
        match *self {
            TestMap::Affine { slope, intercept } => slope * g.mean() + intercept,
            TestMap::ClippedAffine {
                slope,
                intercept,
                lo,
                hi,
            } => {
                // slope * X + intercept ~ N(m, s^2).
                let m = slope * g.mean() + intercept;
                let s = slope.abs() * g.std_dev();
                let a = (lo - m) / s;
                let b = (hi - m) / s;
                lo * normal_cdf(a)
                    + hi * normal_cdf(-b)
                    + m * (normal_cdf(b) - normal_cdf(a))
                    + s * (normal_pdf(a) - normal_pdf(b))
            }
        }
    }
}

impl LipschitzMap for TestMap {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            TestMap::Affine { slope, intercept } => slope * x + intercept,
            TestMap::ClippedAffine {
                slope,
                intercept,
                lo,
                hi,
            } => (slope * x + intercept).clamp(lo, hi),
        }
    }

    fn lipschitz(&self) -> f64 {
        match *self {
            TestMap::Affine { slope, .. } | TestMap::ClippedAffine { slope, .. } => slope.abs(),
        }
    }
}

/// An arbitrary function paired with a declared Lipschitz constant.
pub struct DeclaredLipschitz<F> {
    pub f: F,
    pub lipschitz: f64,
}

impl<F: Fn(f64) -> f64 + Sync> LipschitzMap for DeclaredLipschitz<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// A certified interval around a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalReport {
    pub form: CertifyForm,
    /// Sample mean of `phi`.
    pub estimate: f64,
    pub deviation_term: f64,
    pub bias_term: f64,
    pub half_width: f64,
    pub level: f64,
}

impl IntervalReport {
    pub fn lower(&self) -> f64 {
        self.estimate - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

/// Number of consecutive sample pairs on which the declared Lipschitz
/// constant is spot-checked.
pub const LIPSCHITZ_CHECKS: usize = 1000;

fn check_lipschitz(samples: &[f64], phi: &dyn LipschitzMap, declared: f64) -> Result<()> {
    for w in samples.windows(2).take(LIPSCHITZ_CHECKS) {
        let (x, y) = (w[0], w[1]);
        let rise = (phi.eval(x) - phi.eval(y)).abs();
        let run = (x - y).abs();
        if rise > declared * run * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::LipschitzViolation {
                declared,
                observed: rise / run,
                x,
                y,
            });
        }
    }
    Ok(())
}

/// Certifies `E_Q[phi]` from samples of `P`.
///
/// `input.n` must equal the number of samples, `input.gamma` may not exceed
/// the strong log-concavity of `spec`, and `input.lipschitz` must cover both
/// the map's declared constant and every spot-checked sample pair.
pub fn certify(
    samples: &[f64],
    phi: &dyn LipschitzMap,
    spec: &LogConcaveSpec,
    form: CertifyForm,
    input: &CertifyInput,
) -> Result<IntervalReport> {
    if samples.is_empty() {
        return Err(bad_param("no samples to certify"));
    }
    form.validate()?;
    input.validate()?;
    if input.n != samples.len() {
        return Err(Error::LengthMismatch {
            expected: input.n,
            found: samples.len(),
        });
    }
    if input.gamma > spec.gamma() * (1.0 + 1e-12) {
        return Err(bad_param(format!(
            "gamma {} exceeds the certified {} of the sampler",
            input.gamma,
            spec.gamma()
        )));
    }
    if phi.lipschitz() > input.lipschitz * (1.0 + 1e-12) {
        return Err(bad_param(format!(
            "L = {} is below the map's declared constant {}",
            input.lipschitz,
            phi.lipschitz()
        )));
    }
    check_lipschitz(samples, phi, input.lipschitz)?;

    let values: Vec<f64> = samples.iter().map(|&x| phi.eval(x)).collect();
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    let n = values.len() as f64;
    let estimate = compensated_sum(values.iter().copied()) / n;
    let terms = match form {
        CertifyForm::PseudoAlpha(a) => half_width_pseudo_alpha(a, input)?,
        CertifyForm::Chi2 => {
            let second = compensated_sum(values.iter().map(|v| v * v)) / n;
            half_width_chi2(input, second)?
        }
        CertifyForm::Kl => half_width_kl(input)?,
    };
    Ok(IntervalReport {
        form,
        estimate,
        deviation_term: terms.deviation_term,
        bias_term: terms.bias_term,
        half_width: terms.half_width,
        level: terms.level,
    })
}

/// Divergence between Gaussians that feeds `form`.
pub fn gaussian_divergence(
    form: CertifyForm,
    q: &Gaussian1D,
    p: &Gaussian1D,
) -> Result<DivergenceValue> {
    match form {
        CertifyForm::PseudoAlpha(a) => pseudo_alpha_gaussian(a, q, p),
        CertifyForm::Chi2 => Ok(chi2_gaussian(q, p)),
        CertifyForm::Kl => Ok(kl_gaussian(q, p)),
    }
}

/// Outcome of a Monte Carlo coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCoverage {
    pub form: CertifyForm,
    pub repeats: usize,
    pub covered: usize,
    pub fraction: f64,
    /// Analytic `E_Q[phi]`.
    pub truth: f64,
    pub level: f64,
    pub divergence: DivergenceValue,
    /// Half-width of the first repeat.
    pub first_half_width: f64,
}

/// Fraction of `repeats` certified intervals that contain `E_Q[phi]`. Repeat
/// `r` draws its `n` samples from `P` with seed `seed + r`.
#[allow(clippy::too_many_arguments)]
pub fn mc_coverage_experiment(
    form: CertifyForm,
    q: &Gaussian1D,
    p: &Gaussian1D,
    phi: &TestMap,
    n: usize,
    delta: f64,
    repeats: usize,
    seed: u64,
) -> Result<McCoverage> {
    form.validate()?;
    phi.validate()?;
    if repeats == 0 {
        return Err(bad_param("repeats must be at least 1"));
    }
    let divergence = gaussian_divergence(form, q, p)?;
    let spec = LogConcaveSpec::from_gaussian(*p);
    let input = CertifyInput {
        lipschitz: phi.lipschitz(),
        gamma: gaussian_gamma(p),
        n,
        delta,
        div: divergence.to_f64(),
    };
    input.validate()?;
    let truth = phi.gaussian_mean(q);
    let reports = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let samples = spec.samples(n, rng::derived_seed(seed, r as u64))?;
            certify(&samples, phi, &spec, form, &input)
        })
        .collect::<Result<Vec<_>>>()?;
    let covered = reports.iter().filter(|rep| rep.contains(truth)).count();
    Ok(McCoverage {
        form,
        repeats,
        covered,
        fraction: covered as f64 / repeats as f64,
        truth,
        level: reports[0].level,
        divergence,
        first_half_width: reports[0].half_width,
    })
}

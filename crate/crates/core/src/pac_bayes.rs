//! PAC-Bayes generalization bounds driven by the alpha- and chi^2-divergence,
//! and a finite-hypothesis Gibbs simulator that measures their coverage.
//!
//! Every bound has the shape `R_D(G_Q) <= R_S(G_Q) + addend`. The addends
//! come in two forms, both built from a per-hypothesis deviation scale `c`
//! with `(R_S(h) - R_D(h))^2 <= c` holding with probability `1 - delta`:
//!
//! * multiplicative: `sqrt(c (alpha(alpha-1) D_alpha + 1)^{1/alpha})`
//! * additive: `sqrt((D_alpha + 1/(alpha(alpha-1))) / m + ((alpha-1) m c)^{alpha/(alpha-1)} / (m alpha))`
//!
//! The discrepancy is `(q - p)^2` and the free scale is fixed to `t = m`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::DiscreteDistribution;
use crate::divergences::{f_divergence, parse_param, DivergenceKind, DivergenceValue};
use crate::error::{bad_param, Error, Result};
use crate::numeric::compensated_sum;
use crate::rng::{self, StreamRng};

/// Tail class of the loss, with its certified parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossClass {
    /// Losses in `[0, R]`.
    Bounded { r: f64 },
    /// Variance proxy `sigma^2`.
    SubGaussian { sigma: f64 },
    /// Parameters `(sigma^2, beta)`.
    SubExponential { sigma: f64, beta: f64 },
    /// `Var[loss] <= sigma2`.
    BoundedVariance { sigma2: f64 },
}

impl LossClass {
    pub fn validate(&self) -> Result<()> {
        let params: &[(&str, f64)] = match self {
            LossClass::Bounded { r } => &[("R", *r)],
            LossClass::SubGaussian { sigma } => &[("sigma", *sigma)],
            LossClass::SubExponential { sigma, beta } => &[("sigma", *sigma), ("beta", *beta)],
            LossClass::BoundedVariance { sigma2 } => &[("sigma2", *sigma2)],
        };
        for &(name, v) in params {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad_param(format!(
                    "{name} must be a positive real, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossClass::Bounded { .. } => "bounded",
            LossClass::SubGaussian { .. } => "subgaussian",
            LossClass::SubExponential { .. } => "subexp",
            LossClass::BoundedVariance { .. } => "bounded-variance",
        }
    }
}

impl fmt::Display for LossClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossClass::Bounded { r } => write!(f, "bounded:{r}"),
            LossClass::SubGaussian { sigma } => write!(f, "subgaussian:{sigma}"),
            LossClass::SubExponential { sigma, beta } => write!(f, "subexp:{sigma}:{beta}"),
            LossClass::BoundedVariance { sigma2 } => write!(f, "bounded-variance:{sigma2}"),
        }
    }
}

impl FromStr for LossClass {
    type Err = Error;

    /// Tokens: `bounded:R`, `subgaussian:sigma`, `subexp:sigma:beta`,
    /// `bounded-variance:sigma2`.
    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let mut parts = token.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<f64> = parts
            .map(|v| parse_param(token, v))
            .collect::<Result<_>>()?;
        let class = match (name, args.as_slice()) {
            ("bounded", &[r]) => LossClass::Bounded { r },
            ("subgaussian", &[sigma]) => LossClass::SubGaussian { sigma },
            ("subexp", &[sigma, beta]) => LossClass::SubExponential { sigma, beta },
            ("bounded-variance", &[sigma2]) => LossClass::BoundedVariance { sigma2 },
            _ => return Err(Error::Parse(format!("unknown loss class {token:?}"))),
        };
        class.validate()?;
        Ok(class)
    }
}

/// Inputs shared by every addend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacInput {
    pub m: u64,
    pub delta: f64,
    pub alpha: f64,
    /// `D_alpha(Q||P)`.
    pub div: DivergenceValue,
}

impl PacInput {
    pub fn new(m: u64, delta: f64, alpha: f64, div: DivergenceValue) -> Result<Self> {
        let input = Self {
            m,
            delta,
            alpha,
            div,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(bad_param("sample count m must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(bad_param(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(bad_param(format!("alpha must be > 1, got {}", self.alpha)));
        }
        if let DivergenceValue::Finite(d) = self.div {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(bad_param(format!(
                    "divergence must be non-negative, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Which of the two bound shapes to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundForm {
    Multiplicative,
    Additive,
}

impl fmt::Display for BoundForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundForm::Multiplicative => write!(f, "multiplicative"),
            BoundForm::Additive => write!(f, "additive"),
        }
    }
}

impl FromStr for BoundForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "multiplicative" => Ok(BoundForm::Multiplicative),
            "additive" => Ok(BoundForm::Additive),
            other => Err(Error::Parse(format!("unknown bound form {other:?}"))),
        }
    }
}

/// Regime of the sub-exponential deviation scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubExpRegime {
    /// `2 beta^2 log(2/delta) / sigma^2 <= m`.
    LargeM,
    SmallM,
}

impl fmt::Display for SubExpRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubExpRegime::LargeM => write!(f, "large-m"),
            SubExpRegime::SmallM => write!(f, "small-m"),
        }
    }
}

/// The sub-exponential deviation scale `K^1_delta` and its regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubExpScale {
    pub k1: f64,
    pub regime: SubExpRegime,
    /// Regime boundary `m* = 2 beta^2 log(2/delta) / sigma^2`.
    pub threshold: f64,
}

pub fn subexp_k1(sigma: f64, beta: f64, m: u64, delta: f64) -> Result<SubExpScale> {
    LossClass::SubExponential { sigma, beta }.validate()?;
    PacInput::new(m, delta, 2.0, DivergenceValue::Finite(0.0))?;
    let log_term = (2.0 / delta).ln();
    let mf = m as f64;
    let threshold = 2.0 * beta * beta * log_term / (sigma * sigma);
    Ok(if threshold <= mf {
        SubExpScale {
            k1: 2.0 * sigma * sigma / mf * log_term,
            regime: SubExpRegime::LargeM,
            threshold,
        }
    } else {
        SubExpScale {
            k1: (2.0 * beta / mf * log_term).powi(2),
            regime: SubExpRegime::SmallM,
            threshold,
        }
    })
}

/// Per-hypothesis deviation scale `c`: `(R_S(h) - R_D(h))^2 <= c` with
/// probability at least `1 - delta`.
pub fn deviation_scale(loss: LossClass, m: u64, delta: f64) -> Result<f64> {
    loss.validate()?;
    PacInput::new(m, delta, 2.0, DivergenceValue::Finite(0.0))?;
    let mf = m as f64;
    let log_term = (2.0 / delta).ln();
    Ok(match loss {
        LossClass::Bounded { r } => r * r / (2.0 * mf) * log_term,
        LossClass::SubGaussian { sigma } => 2.0 * sigma * sigma / mf * log_term,
        LossClass::SubExponential { sigma, beta } => subexp_k1(sigma, beta, m, delta)?.k1,
        LossClass::BoundedVariance { sigma2 } => sigma2 / (mf * delta),
    })
}

/// Multiplicative-form addend; `+inf` when the divergence is infinite.
pub fn addend_multiplicative(loss: LossClass, input: &PacInput) -> Result<f64> {
    input.validate()?;
    let c = deviation_scale(loss, input.m, input.delta)?;
    let a = input.alpha;
    Ok(match input.div {
        DivergenceValue::Finite(d) => (c * (a * (a - 1.0) * d + 1.0).powf(1.0 / a)).sqrt(),
        DivergenceValue::Infinite => f64::INFINITY,
    })
}

/// Additive-form addend; `+inf` when the divergence is infinite.
pub fn addend_additive(loss: LossClass, input: &PacInput) -> Result<f64> {
    input.validate()?;
    let c = deviation_scale(loss, input.m, input.delta)?;
    let a = input.alpha;
    let mf = input.m as f64;
    let q = a / (a - 1.0);
    Ok(match input.div {
        DivergenceValue::Finite(d) => {
            let complexity = (d + 1.0 / (a * (a - 1.0))) / mf;
            let moment = ((a - 1.0) * mf * c).powf(q) / (mf * a);
            (complexity + moment).sqrt()
        }
        DivergenceValue::Infinite => f64::INFINITY,
    })
}

pub fn addend(loss: LossClass, form: BoundForm, input: &PacInput) -> Result<f64> {
    match form {
        BoundForm::Multiplicative => addend_multiplicative(loss, input),
        BoundForm::Additive => addend_additive(loss, input),
    }
}

/// `chi^2` corollary of the multiplicative form: `sqrt(c sqrt(chi^2 + 1))`.
pub fn chi2_addend_multiplicative(loss: LossClass, m: u64, delta: f64, chi2: f64) -> Result<f64> {
    check_chi2(chi2)?;
    let c = deviation_scale(loss, m, delta)?;
    Ok((c * (chi2 + 1.0).sqrt()).sqrt())
}

/// `chi^2` corollary of the additive form: `sqrt((chi^2 + 1 + (m c)^2) / (2m))`.
pub fn chi2_addend_additive(loss: LossClass, m: u64, delta: f64, chi2: f64) -> Result<f64> {
    check_chi2(chi2)?;
    let c = deviation_scale(loss, m, delta)?;
    let mf = m as f64;
    Ok(((chi2 + 1.0 + (mf * c).powi(2)) / (2.0 * mf)).sqrt())
}

/// The looser multiplicative addend obtained with the discrepancy `|q - p|`:
/// `sqrt(c (chi^2 + 1))`.
pub fn chi2_addend_abs_discrepancy(loss: LossClass, m: u64, delta: f64, chi2: f64) -> Result<f64> {
    check_chi2(chi2)?;
    let c = deviation_scale(loss, m, delta)?;
    Ok((c * (chi2 + 1.0)).sqrt())
}

fn check_chi2(chi2: f64) -> Result<()> {
    if chi2 >= 0.0 && chi2.is_finite() {
        Ok(())
    } else {
        Err(bad_param(format!(
            "chi^2 must be a finite non-negative real, got {chi2}"
        )))
    }
}

/// Per-hypothesis loss distribution of a simulated learning problem.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    /// 0-1 losses with the given error probabilities.
    Bernoulli { means: Vec<f64> },
    /// `N(mean_h, sd^2)` losses.
    Gaussian { means: Vec<f64>, sd: f64 },
    /// `shift_h + Exp(rate)` losses.
    ShiftedExponential { shifts: Vec<f64>, rate: f64 },
    /// Deterministic losses.
    Constant { values: Vec<f64> },
}

impl LossModel {
    pub fn hypotheses(&self) -> usize {
        match self {
            LossModel::Bernoulli { means } => means.len(),
            LossModel::Gaussian { means, .. } => means.len(),
            LossModel::ShiftedExponential { shifts, .. } => shifts.len(),
            LossModel::Constant { values } => values.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hypotheses() == 0 {
            return Err(bad_param("loss model needs at least one hypothesis"));
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            LossModel::Bernoulli { means } => means.iter().all(|p| (0.0..=1.0).contains(p)),
            LossModel::Gaussian { means, sd } => finite(means) && *sd > 0.0 && sd.is_finite(),
            LossModel::ShiftedExponential { shifts, rate } => {
                finite(shifts) && *rate > 0.0 && rate.is_finite()
            }
            LossModel::Constant { values } => finite(values),
        };
        if ok {
            Ok(())
        } else {
            Err(bad_param(format!("invalid loss model {self:?}")))
        }
    }

    /// Expected loss `R_D(h)` of every hypothesis.
    pub fn mean_losses(&self) -> Vec<f64> {
        match self {
            LossModel::Bernoulli { means } | LossModel::Gaussian { means, .. } => means.clone(),
            LossModel::ShiftedExponential { shifts, rate } => {
                shifts.iter().map(|s| s + 1.0 / rate).collect()
            }
            LossModel::Constant { values } => values.clone(),
        }
    }

    fn draw(&self, h: usize, rng: &mut StreamRng) -> f64 {
        match self {
            LossModel::Bernoulli { means } => f64::from(u8::from(rng.gen::<f64>() < means[h])),
            LossModel::Gaussian { means, sd } => means[h] + sd * rng::standard_normal(rng),
            LossModel::ShiftedExponential { shifts, rate } => {
                shifts[h] + rng::standard_exponential(rng) / rate
            }
            LossModel::Constant { values } => values[h],
        }
    }

    /// Checks that the model's losses provably belong to `loss`.
    ///
    /// Shifted-exponential noise `Exp(rate)` is certified sub-exponential
    /// with `sigma^2 = 2 / rate^2` and `beta = 2 / rate`.
    pub fn certify(&self, loss: LossClass) -> Result<()> {
        self.validate()?;
        loss.validate()?;
        let tol = 1.0 + 1e-12;
        let mismatch = |why: String| Err(Error::ModelMismatch(format!("{loss}: {why}")));
        match (self, loss) {
            (LossModel::Bernoulli { .. }, LossClass::Bounded { r }) if r * tol < 1.0 => {
                mismatch(format!("0-1 losses exceed R = {r}"))
            }
            (LossModel::Bernoulli { .. }, LossClass::Bounded { .. }) => Ok(()),
            (LossModel::Bernoulli { .. }, LossClass::SubGaussian { sigma })
            | (LossModel::Bernoulli { .. }, LossClass::SubExponential { sigma, .. }) => {
                if sigma * tol >= 0.5 {
                    Ok(())
                } else {
                    mismatch(format!("0-1 losses need sigma >= 1/2, got {sigma}"))
                }
            }
            (LossModel::Bernoulli { means }, LossClass::BoundedVariance { sigma2 }) => {
                let worst = means.iter().map(|p| p * (1.0 - p)).fold(0.0, f64::max);
                if sigma2 * tol >= worst {
                    Ok(())
                } else {
                    mismatch(format!("variance {worst} exceeds {sigma2}"))
                }
            }
            (LossModel::Gaussian { .. }, LossClass::Bounded { .. }) => {
                mismatch("Gaussian losses are unbounded".into())
            }
            (LossModel::Gaussian { sd, .. }, LossClass::SubGaussian { sigma })
            | (LossModel::Gaussian { sd, .. }, LossClass::SubExponential { sigma, .. }) => {
                if sigma * tol >= *sd {
                    Ok(())
                } else {
                    mismatch(format!("noise sd {sd} exceeds sigma {sigma}"))
                }
            }
            (LossModel::Gaussian { sd, .. }, LossClass::BoundedVariance { sigma2 }) => {
                if sigma2 * tol >= sd * sd {
                    Ok(())
                } else {
                    mismatch(format!("noise variance {} exceeds {sigma2}", sd * sd))
                }
            }
            (LossModel::ShiftedExponential { .. }, LossClass::Bounded { .. })
            | (LossModel::ShiftedExponential { .. }, LossClass::SubGaussian { .. }) => {
                mismatch("exponential noise has an exponential right tail".into())
            }
            (
                LossModel::ShiftedExponential { rate, .. },
                LossClass::SubExponential { sigma, beta },
            ) => {
                let need_sigma2 = 2.0 / (rate * rate);
                let need_beta = 2.0 / rate;
                if sigma * sigma * tol >= need_sigma2 && beta * tol >= need_beta {
                    Ok(())
                } else {
                    mismatch(format!(
                        "Exp({rate}) noise needs sigma^2 >= {need_sigma2} and beta >= {need_beta}"
                    ))
                }
            }
            (LossModel::ShiftedExponential { rate, .. }, LossClass::BoundedVariance { sigma2 }) => {
                if sigma2 * tol >= 1.0 / (rate * rate) {
                    Ok(())
                } else {
                    mismatch(format!(
                        "noise variance {} exceeds {sigma2}",
                        1.0 / (rate * rate)
                    ))
                }
            }
            (LossModel::Constant { values }, LossClass::Bounded { r }) => {
                match values.iter().find(|&&v| !(0.0..=r).contains(&v)) {
                    Some(v) => mismatch(format!("loss {v} outside [0, {r}]")),
                    None => Ok(()),
                }
            }
            (LossModel::Constant { .. }, _) => Ok(()),
        }
    }
}

/// How the posterior is formed from a training sample.
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorRule {
    /// A data-independent posterior.
    Fixed(DiscreteDistribution),
    /// `Q(h) ∝ P(h) exp(-eta m R_S(h))`.
    ExponentialWeights { eta: f64 },
}

/// A finite-hypothesis PAC-Bayes experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsExperiment {
    pub prior: DiscreteDistribution,
    pub posterior: PosteriorRule,
    pub model: LossModel,
    /// Training-set size.
    pub m: u64,
    pub trials: usize,
    pub seed: u64,
}

impl GibbsExperiment {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.model.hypotheses() != self.prior.len() {
            return Err(Error::LengthMismatch {
                expected: self.prior.len(),
                found: self.model.hypotheses(),
            });
        }
        match &self.posterior {
            PosteriorRule::Fixed(q) => q.ensure_same_support(&self.prior)?,
            PosteriorRule::ExponentialWeights { eta } => {
                if !(*eta >= 0.0 && eta.is_finite()) {
                    return Err(bad_param(format!("eta must be non-negative, got {eta}")));
                }
            }
        }
        if self.m == 0 {
            return Err(bad_param("training-set size m must be at least 1"));
        }
        Ok(())
    }

    /// Per-hypothesis empirical risks `R_S(h)` of trial `trial`.
    pub fn empirical_risks(&self, trial: usize) -> Vec<f64> {
        let mut rng = rng::trial_stream(self.seed, trial as u64);
        (0..self.model.hypotheses())
            .map(|h| {
                let total = compensated_sum((0..self.m).map(|_| self.model.draw(h, &mut rng)));
                total / self.m as f64
            })
            .collect()
    }

    /// Posterior chosen after observing `risks`.
    pub fn posterior_for(&self, risks: &[f64]) -> Result<DiscreteDistribution> {
        match &self.posterior {
            PosteriorRule::Fixed(q) => Ok(q.clone()),
            PosteriorRule::ExponentialWeights { eta } => {
                let scale = eta * self.m as f64;
                let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
                let w: Vec<f64> = self
                    .prior
                    .probs()
                    .iter()
                    .zip(risks)
                    .map(|(p, r)| p * (-scale * (r - best)).exp())
                    .collect();
                let total: f64 = w.iter().sum();
                let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
                DiscreteDistribution::with_labels(self.prior.labels().to_vec(), &probs)
            }
        }
    }
}

/// Gibbs risks of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsRisks {
    /// `R_S(G_Q)`.
    pub empirical: f64,
    /// `R_D(G_Q)`.
    pub true_risk: f64,
    pub posterior: DiscreteDistribution,
}

/// `(R_S(G_Q), R_D(G_Q))` for trial `trial` of the experiment.
pub fn gibbs_risks(exp: &GibbsExperiment, trial: usize) -> Result<GibbsRisks> {
    exp.validate()?;
    let risks = exp.empirical_risks(trial);
    let posterior = exp.posterior_for(&risks)?;
    let weigh = |xs: &[f64]| compensated_sum(posterior.probs().iter().zip(xs).map(|(q, x)| q * x));
    Ok(GibbsRisks {
        empirical: weigh(&risks),
        true_risk: weigh(&exp.model.mean_losses()),
        posterior: posterior.clone(),
    })
}

/// Outcome of a coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub trials: usize,
    /// Trials with `R_D(G_Q) > R_S(G_Q) + addend`.
    pub violations: usize,
    /// Trials whose divergence was infinite.
    pub vacuous: usize,
    pub violation_rate: f64,
}

/// Fraction of trials in which the bound fails. The loss model must certify
/// the declared class. Counts are merged by summation, so the result does not
/// depend on the thread schedule.
pub fn coverage_experiment(
    exp: &GibbsExperiment,
    loss: LossClass,
    form: BoundForm,
    delta: f64,
    alpha: f64,
) -> Result<CoverageReport> {
    exp.validate()?;
    exp.model.certify(loss)?;
    PacInput::new(exp.m, delta, alpha, DivergenceValue::Finite(0.0))?;
    if exp.trials == 0 {
        return Err(bad_param("trials must be at least 1"));
    }
    let (violations, vacuous) = (0..exp.trials)
        .into_par_iter()
        .map(|trial| -> Result<(usize, usize)> {
            let risks = gibbs_risks(exp, trial)?;
            let div = f_divergence(DivergenceKind::Alpha(alpha), &risks.posterior, &exp.prior)?;
            let input = PacInput::new(exp.m, delta, alpha, div)?;
            let bound = addend(loss, form, &input)?;
            let violated = risks.true_risk > risks.empirical + bound;
            Ok((usize::from(violated), usize::from(div.is_infinite())))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(CoverageReport {
        trials: exp.trials,
        violations,
        vacuous,
        violation_rate: violations as f64 / exp.trials as f64,
    })
}

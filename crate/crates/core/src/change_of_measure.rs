//! Upper bounds on `E_Q[phi]` in terms of a divergence `D(Q||P)` and moments
//! of `phi` under `P`, and a checker that evaluates both sides.
//!
//! Three families are covered: bounds from the (constrained or unconstrained)
//! variational representation of f-divergences, multiplicative bounds from
//! Hölder's inequality, and Hammersley–Chapman–Robbins style bounds on the
//! mean gap `|E_Q[phi] - E_P[phi]|`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{
    expectation, variance, weighted_sum, DiscreteDistribution, TestFunction,
};
use crate::divergences::{
    conjugate_fstar, f_divergence, parse_param, pseudo_alpha_divergence, DivergenceKind,
    DivergenceValue,
};
use crate::error::{bad_param, Error, Result};
use crate::rng::{self, StreamRng};

/// Slack below which a bound counts as violated.
pub const SLACK_TOLERANCE: f64 = -1e-9;

/// One change-of-measure inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalityId {
    /// `KL + log E_P[e^phi]` (Donsker–Varadhan).
    KlConstrained,
    /// `KL + E_P[e^phi] - 1`.
    KlUnconstrained,
    /// `chi^2 + E_P[phi] + Var_P[phi] / 4`.
    PearsonChi2Constrained,
    /// `chi^2 + E_P[phi] + E_P[phi^2] / 4`.
    PearsonChi2Unconstrained,
    /// `TV + E_P[phi]` for `phi` in `[0, 1]`.
    TvConstrained,
    /// `D_alpha + ((alpha-1)^{alpha/(alpha-1)} / alpha) E_P[phi^{alpha/(alpha-1)}] + 1/(alpha(alpha-1))`, `phi >= 0`.
    AlphaUnconstrained(f64),
    /// `H^2 + E_P[phi / (1 - phi)]` for `phi < 1`.
    Hellinger2Unconstrained,
    /// `reverse KL + E_P[log(1 / (1 - phi))]` for `phi < 1`.
    ReverseKlUnconstrained,
    /// `Neyman chi^2 + 2 - 2 E_P[sqrt(1 - phi)]` for `phi < 1`.
    NeymanChi2Unconstrained,
    /// `sqrt((chi^2 + 1) E_P[phi^2])`.
    MultiplicativeChi2,
    /// `(alpha(alpha-1) D_alpha + 1)^{1/alpha} (E_P[|phi|^{alpha/(alpha-1)}])^{(alpha-1)/alpha}`.
    MultiplicativeAlpha(f64),
    /// `|E_Q phi - E_P phi| <= sqrt(chi^2 Var_P[phi])`.
    HcrChi2,
    /// `|E_Q phi - E_P phi| <= D~_alpha^{1/alpha} (E_P|phi - mu_P|^{alpha/(alpha-1)})^{(alpha-1)/alpha}`.
    HcrGeneralized(f64),
}

impl InequalityId {
    /// The thirteen inequalities with the given order for the parameterized ones.
    pub fn catalog(alpha: f64) -> [InequalityId; 13] {
        [
            InequalityId::KlConstrained,
            InequalityId::KlUnconstrained,
            InequalityId::PearsonChi2Constrained,
            InequalityId::PearsonChi2Unconstrained,
            InequalityId::TvConstrained,
            InequalityId::AlphaUnconstrained(alpha),
            InequalityId::Hellinger2Unconstrained,
            InequalityId::ReverseKlUnconstrained,
            InequalityId::NeymanChi2Unconstrained,
            InequalityId::MultiplicativeChi2,
            InequalityId::MultiplicativeAlpha(alpha),
            InequalityId::HcrChi2,
            InequalityId::HcrGeneralized(alpha),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InequalityId::AlphaUnconstrained(a)
            | InequalityId::MultiplicativeAlpha(a)
            | InequalityId::HcrGeneralized(a) => check_alpha(a),
            _ => Ok(()),
        }
    }

    /// Whether the left-hand side is the mean gap rather than `E_Q[phi]`.
    pub fn is_hcr(&self) -> bool {
        matches!(
            self,
            InequalityId::HcrChi2 | InequalityId::HcrGeneralized(_)
        )
    }
}

fn check_alpha(a: f64) -> Result<()> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(bad_param(format!(
            "alpha must be a finite real > 1, got {a}"
        )))
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InequalityId::KlConstrained => write!(f, "kl-constrained"),
            InequalityId::KlUnconstrained => write!(f, "kl-unconstrained"),
            InequalityId::PearsonChi2Constrained => write!(f, "pearson-chi2-constrained"),
            InequalityId::PearsonChi2Unconstrained => write!(f, "pearson-chi2-unconstrained"),
            InequalityId::TvConstrained => write!(f, "tv-constrained"),
            InequalityId::AlphaUnconstrained(a) => write!(f, "alpha-unconstrained:{a}"),
            InequalityId::Hellinger2Unconstrained => write!(f, "hellinger2-unconstrained"),
            InequalityId::ReverseKlUnconstrained => write!(f, "reverse-kl-unconstrained"),
            InequalityId::NeymanChi2Unconstrained => write!(f, "neyman-chi2-unconstrained"),
            InequalityId::MultiplicativeChi2 => write!(f, "multiplicative-chi2"),
            InequalityId::MultiplicativeAlpha(a) => write!(f, "multiplicative-alpha:{a}"),
            InequalityId::HcrChi2 => write!(f, "hcr-chi2"),
            InequalityId::HcrGeneralized(a) => write!(f, "hcr-generalized:{a}"),
        }
    }
}

impl FromStr for InequalityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let id = match token.split_once(':') {
            None => match token {
                "kl-constrained" => InequalityId::KlConstrained,
                "kl-unconstrained" => InequalityId::KlUnconstrained,
                "pearson-chi2-constrained" => InequalityId::PearsonChi2Constrained,
                "pearson-chi2-unconstrained" => InequalityId::PearsonChi2Unconstrained,
                "tv-constrained" => InequalityId::TvConstrained,
                "hellinger2-unconstrained" => InequalityId::Hellinger2Unconstrained,
                "reverse-kl-unconstrained" => InequalityId::ReverseKlUnconstrained,
                "neyman-chi2-unconstrained" => InequalityId::NeymanChi2Unconstrained,
                "multiplicative-chi2" => InequalityId::MultiplicativeChi2,
                "hcr-chi2" => InequalityId::HcrChi2,
                _ => return Err(Error::Parse(format!("unknown inequality id {token:?}"))),
            },
            Some((name, value)) => {
                let a = parse_param(token, value)?;
                match name {
                    "alpha-unconstrained" => InequalityId::AlphaUnconstrained(a),
                    "multiplicative-alpha" => InequalityId::MultiplicativeAlpha(a),
                    "hcr-generalized" => InequalityId::HcrGeneralized(a),
                    _ => return Err(Error::Parse(format!("unknown inequality id {token:?}"))),
                }
            }
        };
        id.validate()?;
        Ok(id)
    }
}

/// Admissible range of the test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiDomain {
    AllReals,
    /// `[0, 1]`
    UnitInterval,
    /// `(-inf, 1)`
    BelowOne,
    /// `[0, inf)`
    NonNegative,
}

impl PhiDomain {
    pub fn contains(&self, v: f64) -> bool {
        v.is_finite()
            && match self {
                PhiDomain::AllReals => true,
                PhiDomain::UnitInterval => (0.0..=1.0).contains(&v),
                PhiDomain::BelowOne => v < 1.0,
                PhiDomain::NonNegative => v >= 0.0,
            }
    }

    /// Whether the closed interval `[lo, hi]` lies inside the domain.
    pub fn contains_range(&self, lo: f64, hi: f64) -> bool {
        lo <= hi && self.contains(lo) && self.contains(hi)
    }
}

impl fmt::Display for PhiDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiDomain::AllReals => write!(f, "(-inf, inf)"),
            PhiDomain::UnitInterval => write!(f, "[0, 1]"),
            PhiDomain::BelowOne => write!(f, "(-inf, 1)"),
            PhiDomain::NonNegative => write!(f, "[0, inf)"),
        }
    }
}

pub fn phi_domain(id: InequalityId) -> PhiDomain {
    match id {
        InequalityId::TvConstrained => PhiDomain::UnitInterval,
        InequalityId::Hellinger2Unconstrained
        | InequalityId::ReverseKlUnconstrained
        | InequalityId::NeymanChi2Unconstrained => PhiDomain::BelowOne,
        InequalityId::AlphaUnconstrained(_) => PhiDomain::NonNegative,
        _ => PhiDomain::AllReals,
    }
}

/// Right-hand side of a bound. `Vacuous` when the divergence is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Finite(f64),
    Vacuous,
}

impl BoundValue {
    pub fn value(&self) -> Option<f64> {
        match *self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Vacuous => None,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        matches!(self, BoundValue::Vacuous)
    }

    pub fn to_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Finite(v) => write!(f, "{v}"),
            BoundValue::Vacuous => write!(f, "infinite"),
        }
    }
}

fn with_divergence(div: DivergenceValue, rest: impl FnOnce(f64) -> f64) -> BoundValue {
    match div {
        DivergenceValue::Finite(d) => BoundValue::Finite(rest(d)),
        DivergenceValue::Infinite => BoundValue::Vacuous,
    }
}

fn check_phi(id: InequalityId, p: &DiscreteDistribution, phi: &TestFunction) -> Result<()> {
    phi.ensure_aligned(p)?;
    let dom = phi_domain(id);
    match phi
        .values()
        .iter()
        .enumerate()
        .find(|(_, &v)| !dom.contains(v))
    {
        Some((index, &value)) => Err(Error::PhiDomain {
            index,
            value,
            domain: dom.to_string(),
        }),
        None => Ok(()),
    }
}

/// `E_P[g(phi)]`.
fn moment(p: &DiscreteDistribution, phi: &TestFunction, g: impl Fn(f64) -> f64) -> f64 {
    weighted_sum(p.probs(), phi.values(), g)
}

/// Evaluates the right-hand side of `id` for `(Q, P, phi)`.
pub fn upper_bound(
    id: InequalityId,
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
    phi: &TestFunction,
) -> Result<BoundValue> {
    id.validate()?;
    q.ensure_same_support(p)?;
    check_phi(id, p, phi)?;
    let div = |kind| f_divergence(kind, q, p);

    let rhs = match id {
        InequalityId::KlConstrained => {
            // log E_P[e^phi] with the maximum factored out.
            let top = phi
                .values()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let log_mgf = top + moment(p, phi, |v| (v - top).exp()).ln();
            with_divergence(div(DivergenceKind::Kl)?, |d| d + log_mgf)
        }
        InequalityId::KlUnconstrained => {
            let m = moment(p, phi, |v| v.exp_m1());
            with_divergence(div(DivergenceKind::Kl)?, |d| d + m)
        }
        InequalityId::PearsonChi2Constrained => {
            let mean = expectation(p, phi)?;
            let var = variance(p, phi)?;
            with_divergence(div(DivergenceKind::PearsonChi2)?, |d| d + mean + 0.25 * var)
        }
        InequalityId::PearsonChi2Unconstrained => {
            let mean = expectation(p, phi)?;
            let second = moment(p, phi, |v| v * v);
            with_divergence(div(DivergenceKind::PearsonChi2)?, |d| {
                d + mean + 0.25 * second
            })
        }
        InequalityId::TvConstrained => {
            let mean = expectation(p, phi)?;
            with_divergence(div(DivergenceKind::TotalVariation)?, |d| d + mean)
        }
        InequalityId::AlphaUnconstrained(a) => {
            let e = a / (a - 1.0);
            let m = moment(p, phi, |v| v.powf(e));
            let coef = (a - 1.0).powf(e) / a;
            with_divergence(div(DivergenceKind::Alpha(a))?, |d| {
                d + coef * m + 1.0 / (a * (a - 1.0))
            })
        }
        InequalityId::Hellinger2Unconstrained => {
            let m = moment(p, phi, |v| v / (1.0 - v));
            with_divergence(div(DivergenceKind::SquaredHellinger)?, |d| d + m)
        }
        InequalityId::ReverseKlUnconstrained => {
            let m = moment(p, phi, |v| -(-v).ln_1p());
            with_divergence(div(DivergenceKind::ReverseKl)?, |d| d + m)
        }
        InequalityId::NeymanChi2Unconstrained => {
            let m = moment(p, phi, |v| (1.0 - v).sqrt());
            with_divergence(div(DivergenceKind::NeymanChi2)?, |d| d + 2.0 - 2.0 * m)
        }
        InequalityId::MultiplicativeChi2 => {
            let second = moment(p, phi, |v| v * v);
            with_divergence(div(DivergenceKind::PearsonChi2)?, |d| {
                ((d + 1.0) * second).sqrt()
            })
        }
        InequalityId::MultiplicativeAlpha(a) => {
            let e = a / (a - 1.0);
            let m = moment(p, phi, |v| v.abs().powf(e));
            with_divergence(div(DivergenceKind::Alpha(a))?, |d| {
                (a * (a - 1.0) * d + 1.0).powf(1.0 / a) * m.powf(1.0 / e)
            })
        }
        InequalityId::HcrChi2 => {
            let var = variance(p, phi)?;
            with_divergence(div(DivergenceKind::PearsonChi2)?, |d| (d * var).sqrt())
        }
        InequalityId::HcrGeneralized(a) => hcr_gap_bound(a, q, p, phi)?,
    };
    Ok(rhs)
}

/// Generalized HCR bound on `|E_Q[phi] - E_P[phi]|`.
pub fn hcr_gap_bound(
    alpha: f64,
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
    phi: &TestFunction,
) -> Result<BoundValue> {
    check_alpha(alpha)?;
    q.ensure_same_support(p)?;
    phi.ensure_aligned(p)?;
    let mu = expectation(p, phi)?;
    let e = alpha / (alpha - 1.0);
    let central = moment(p, phi, |v| (v - mu).abs().powf(e));
    Ok(with_divergence(
        pseudo_alpha_divergence(alpha, q, p)?,
        |d| d.powf(1.0 / alpha) * central.powf(1.0 / e),
    ))
}

/// Maximizer of `E_P[phi g - (g - 1)^2]` over `E_P[g] = 1` (sign constraint
/// dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalDensity {
    pub values: Vec<f64>,
    /// Whether every entry is non-negative, i.e. the maximizer is a density.
    pub nonnegative: bool,
}

/// `g*_i = (phi_i - E_P[phi]) / 2 + 1`.
pub fn constrained_chi2_optimal_density(
    p: &DiscreteDistribution,
    phi: &TestFunction,
) -> Result<OptimalDensity> {
    let mean = expectation(p, phi)?;
    let values: Vec<f64> = phi
        .values()
        .iter()
        .map(|&v| 0.5 * (v - mean) + 1.0)
        .collect();
    let nonnegative = values.iter().all(|&g| g >= 0.0);
    Ok(OptimalDensity {
        values,
        nonnegative,
    })
}

/// The objective `E_P[phi g - (g - 1)^2]` of the constrained chi^2 problem.
pub fn chi2_lagrangian_objective(
    p: &DiscreteDistribution,
    phi: &TestFunction,
    g: &[f64],
) -> Result<f64> {
    phi.ensure_aligned(p)?;
    if g.len() != p.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            found: g.len(),
        });
    }
    let terms: Vec<f64> = phi
        .values()
        .iter()
        .zip(g)
        .map(|(&v, &gi)| v * gi - (gi - 1.0) * (gi - 1.0))
        .collect();
    Ok(weighted_sum(p.probs(), &terms, |t| t))
}

/// Both sides of one inequality instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: BoundValue,
    /// `rhs - lhs`; `+inf` when the bound is vacuous.
    pub slack: f64,
    pub holds: bool,
}

impl BoundReport {
    pub fn new(lhs: f64, rhs: BoundValue) -> Self {
        let slack = rhs.to_f64() - lhs;
        let holds = rhs.is_vacuous() || slack >= SLACK_TOLERANCE;
        Self {
            lhs,
            rhs,
            slack,
            holds,
        }
    }
}

/// Evaluates `E_Q[phi]` (or the mean gap for HCR ids) against the bound.
pub fn verify(
    id: InequalityId,
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
    phi: &TestFunction,
) -> Result<BoundReport> {
    let rhs = upper_bound(id, q, p, phi)?;
    let eq = expectation(q, phi)?;
    let lhs = if id.is_hcr() {
        (eq - expectation(p, phi)?).abs()
    } else {
        eq
    };
    Ok(BoundReport::new(lhs, rhs))
}

/// How random `(Q, P, phi)` triples are drawn for soundness sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub min_support: usize,
    pub max_support: usize,
    /// Overrides the default sampling range of `phi`; must lie inside the
    /// inequality's domain.
    pub phi_range: Option<(f64, f64)>,
    /// Probability that a point of `Q` is zeroed out (Q stays absolutely
    /// continuous w.r.t. P, which has full support).
    pub q_zero_prob: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            min_support: 2,
            max_support: 16,
            phi_range: None,
            q_zero_prob: 0.1,
        }
    }
}

/// A probability vector with i.i.d. exponential weights raised to a random
/// power, which spreads draws from near-uniform to very peaked.
fn random_probs(rng: &mut StreamRng, n: usize, zero_prob: f64) -> Vec<f64> {
    let sharpness = 0.25 + 2.75 * rng.gen::<f64>();
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if zero_prob > 0.0 && rng.gen::<f64>() < zero_prob {
                0.0
            } else {
                rng::standard_exponential(rng).powf(sharpness)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        let k = rng.gen_range(0..n);
        w[k] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

fn default_phi_value(dom: PhiDomain, rng: &mut StreamRng) -> f64 {
    match dom {
        PhiDomain::AllReals => {
            let scale = [0.1, 1.0, 3.0][rng.gen_range(0..3)];
            scale * (2.0 * rng.gen::<f64>() - 1.0)
        }
        PhiDomain::UnitInterval => rng.gen::<f64>(),
        // 1 - e^u for u in [-6, 3): values in (-19.1, 0.9975).
        PhiDomain::BelowOne => 1.0 - (-6.0 + 9.0 * rng.gen::<f64>()).exp(),
        PhiDomain::NonNegative => 3.0 * rng.gen::<f64>(),
    }
}

/// Draws one random valid triple for `id`.
pub fn random_triple(
    id: InequalityId,
    rng: &mut StreamRng,
    config: &SweepConfig,
) -> Result<(DiscreteDistribution, DiscreteDistribution, TestFunction)> {
    if config.min_support == 0 || config.min_support > config.max_support {
        return Err(bad_param("support size range must satisfy 1 <= min <= max"));
    }
    let dom = phi_domain(id);
    if let Some((lo, hi)) = config.phi_range {
        if !dom.contains_range(lo, hi) {
            return Err(Error::PhiDomain {
                index: 0,
                value: if dom.contains(lo) { hi } else { lo },
                domain: dom.to_string(),
            });
        }
    }
    let n = rng.gen_range(config.min_support..=config.max_support);
    let p = DiscreteDistribution::new(&random_probs(rng, n, 0.0))?;
    let q = DiscreteDistribution::new(&random_probs(rng, n, config.q_zero_prob))?;
    let values = (0..n)
        .map(|_| match config.phi_range {
            Some((lo, hi)) => lo + (hi - lo) * rng.gen::<f64>(),
            None => default_phi_value(dom, rng),
        })
        .collect();
    Ok((q, p, TestFunction::new(values)?))
}

/// Result of a randomized soundness sweep for one inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub id: InequalityId,
    pub reports: Vec<BoundReport>,
    pub violations: usize,
    pub min_slack: f64,
}

/// Verifies `id` on `trials` random triples; trial `i` uses the stream
/// seeded with `seed + i`. Trials run in parallel, results are in trial order.
pub fn soundness_sweep(
    id: InequalityId,
    trials: usize,
    seed: u64,
    config: &SweepConfig,
) -> Result<SweepOutcome> {
    id.validate()?;
    let reports = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::trial_stream(seed, i as u64);
            let (q, p, phi) = random_triple(id, &mut rng, config)?;
            verify(id, &q, &p, &phi)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = reports.iter().filter(|r| !r.holds).count();
    let min_slack = reports
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    Ok(SweepOutcome {
        id,
        reports,
        violations,
        min_slack,
    })
}

/// `E_P[f*(phi)]` for the divergence behind an unconstrained bound; exposed
/// so callers can compare closed-form bounds with the generic corollary.
pub fn conjugate_moment(
    kind: DivergenceKind,
    p: &DiscreteDistribution,
    phi: &TestFunction,
) -> Result<f64> {
    phi.ensure_aligned(p)?;
    let conj = phi
        .values()
        .iter()
        .map(|&v| conjugate_fstar(kind, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_sum(p.probs(), &conj, |c| c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_discrete;

    fn d(p: &[f64]) -> DiscreteDistribution {
        make_discrete(p).unwrap()
    }

    fn tf(v: &[f64]) -> TestFunction {
        TestFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn phi_domain_examples() {
        assert_eq!(
            phi_domain(InequalityId::TvConstrained),
            PhiDomain::UnitInterval
        );
        assert_eq!(
            phi_domain(InequalityId::Hellinger2Unconstrained),
            PhiDomain::BelowOne
        );
        assert_eq!(phi_domain(InequalityId::KlConstrained), PhiDomain::AllReals);
        assert_eq!(
            phi_domain(InequalityId::AlphaUnconstrained(1.5)),
            PhiDomain::NonNegative
        );
    }

    #[test]
    fn upper_bound_examples() {
        let p = d(&[0.25, 0.75]);
        let c = 0.7;
        let konst = TestFunction::constant(c, 2).unwrap();
        let r = verify(InequalityId::KlConstrained, &p, &p, &konst).unwrap();
        assert!((r.rhs.to_f64() - c).abs() < 1e-15);
        assert!((r.lhs - c).abs() < 1e-15);

        let q = d(&[0.5, 0.5]);
        let phi = tf(&[1.0, 0.0]);
        let rhs = upper_bound(InequalityId::PearsonChi2Constrained, &q, &p, &phi)
            .unwrap()
            .to_f64();
        assert!((rhs - (1.0 / 3.0 + 0.25 + 0.046875)).abs() < 1e-15);
        assert!((rhs - 0.630_208_333_333_333_3).abs() < 1e-15);

        let rhs = upper_bound(InequalityId::MultiplicativeAlpha(2.0), &q, &p, &phi)
            .unwrap()
            .to_f64();
        assert!((rhs - (4.0f64 / 3.0 * 0.25).sqrt()).abs() < 1e-15);
        assert!((rhs - 0.577_350).abs() < 1e-6);

        let at_one = tf(&[0.2, 1.0]);
        assert!(matches!(
            upper_bound(InequalityId::Hellinger2Unconstrained, &q, &p, &at_one),
            Err(Error::PhiDomain { index: 1, .. })
        ));
    }

    #[test]
    fn vacuous_bound_is_reported_not_raised() {
        let q = d(&[0.5, 0.5]);
        let p = d(&[1.0, 0.0]);
        let r = verify(InequalityId::KlConstrained, &q, &p, &tf(&[1.0, 2.0])).unwrap();
        assert!(r.rhs.is_vacuous());
        assert!(r.holds);
        assert_eq!(r.slack, f64::INFINITY);
    }

    #[test]
    fn hcr_examples() {
        let q = d(&[0.5, 0.5]);
        let p = d(&[0.25, 0.75]);
        let phi = tf(&[1.0, 0.0]);
        let b = hcr_gap_bound(2.0, &q, &p, &phi).unwrap().to_f64();
        assert!((b - 0.25).abs() < 1e-15);
        let r = verify(InequalityId::HcrGeneralized(2.0), &q, &p, &phi).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-15);
        assert!(r.holds);

        assert_eq!(
            hcr_gap_bound(1.5, &p, &p, &phi).unwrap(),
            BoundValue::Finite(0.0)
        );
        let konst = TestFunction::constant(3.0, 2).unwrap();
        assert_eq!(
            hcr_gap_bound(2.0, &q, &p, &konst).unwrap(),
            BoundValue::Finite(0.0)
        );
        assert!(hcr_gap_bound(1.0, &q, &p, &phi).is_err());
    }

    #[test]
    fn optimal_density_examples() {
        let p = d(&[0.25, 0.75]);
        let konst = TestFunction::constant(2.0, 2).unwrap();
        assert_eq!(
            constrained_chi2_optimal_density(&p, &konst).unwrap().values,
            vec![1.0, 1.0]
        );
        let g = constrained_chi2_optimal_density(&p, &tf(&[1.0, 0.0])).unwrap();
        assert_eq!(g.values, vec![1.375, 0.875]);
        assert!(g.nonnegative);

        let wide = tf(&[10.0, -10.0]);
        let g = constrained_chi2_optimal_density(&d(&[0.5, 0.5]), &wide).unwrap();
        assert!(!g.nonnegative);
        let total: f64 = g.values.iter().map(|x| 0.5 * x).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verify_rejects_out_of_domain_phi() {
        let p = d(&[0.5, 0.5]);
        assert!(matches!(
            verify(InequalityId::TvConstrained, &p, &p, &tf(&[0.5, 1.5])),
            Err(Error::PhiDomain { .. })
        ));
        assert!(matches!(
            verify(
                InequalityId::AlphaUnconstrained(2.0),
                &p,
                &p,
                &tf(&[-0.5, 1.0])
            ),
            Err(Error::PhiDomain { .. })
        ));
    }

    #[test]
    fn q_equals_p_always_holds() {
        let p = d(&[0.1, 0.2, 0.3, 0.4]);
        for id in InequalityId::catalog(1.7) {
            let phi = match phi_domain(id) {
                PhiDomain::UnitInterval | PhiDomain::NonNegative => tf(&[0.1, 0.9, 0.4, 0.0]),
                PhiDomain::BelowOne => tf(&[-2.0, 0.9, 0.4, 0.0]),
                PhiDomain::AllReals => tf(&[-2.0, 3.0, 0.4, 0.0]),
            };
            assert!(verify(id, &p, &p, &phi).unwrap().holds, "{id}");
        }
    }

    #[test]
    fn sweep_rejects_range_outside_domain() {
        let config = SweepConfig {
            phi_range: Some((0.0, 1.5)),
            ..SweepConfig::default()
        };
        assert!(matches!(
            soundness_sweep(InequalityId::TvConstrained, 10, 1, &config),
            Err(Error::PhiDomain { .. })
        ));
    }

    #[test]
    fn id_tokens_round_trip() {
        for id in InequalityId::catalog(1.5) {
            let token = id.to_string();
            assert_eq!(token.parse::<InequalityId>().unwrap(), id);
        }
        assert!("multiplicative-alpha:0.5".parse::<InequalityId>().is_err());
        assert!("tv-unconstrained".parse::<InequalityId>().is_err());
    }
}

//! f-divergences on finite supports: generators, closed-form convex
//! conjugates, divergence values, variational lower bounds and the
//! convexity probe for `|t - 1|^alpha`.
//!
//! Every kind is an f-divergence `D_f(Q||P) = E_P[f(dQ/dP)]` with `f(1) = 0`.
//! Points where `P` has no mass contribute `q * lim_{t->inf} f(t)/t`, which is
//! infinite for the superlinear generators (KL, Pearson chi^2, alpha,
//! pseudo-alpha, phi_p) and finite for the others.

use std::fmt;
use std::str::FromStr;

use crate::distributions::{weighted_sum, DiscreteDistribution, TestFunction};
use crate::error::{bad_param, domain, Error, Result};
use crate::numeric::CompensatedSum;

/// Selects a member of the f-divergence family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Kl,
    ReverseKl,
    PearsonChi2,
    NeymanChi2,
    TotalVariation,
    SquaredHellinger,
    /// `(t^alpha - 1) / (alpha (alpha - 1))`, alpha > 1.
    Alpha(f64),
    /// `|t - 1|^alpha`, alpha > 1.
    PseudoAlpha(f64),
    /// `t^p - 1`, p > 1.
    PhiP(f64),
}

impl DivergenceKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DivergenceKind::Alpha(a) | DivergenceKind::PseudoAlpha(a) => {
                if !(a > 1.0 && a.is_finite()) {
                    return Err(bad_param(format!(
                        "alpha must be a finite real > 1, got {a}"
                    )));
                }
            }
            DivergenceKind::PhiP(p) => {
                if !(p > 1.0 && p.is_finite()) {
                    return Err(bad_param(format!("p must be a finite real > 1, got {p}")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Whether `f` is superlinear, so that mass of `Q` outside the support
    /// of `P` makes the divergence infinite.
    pub fn is_superlinear(&self) -> bool {
        matches!(
            self,
            DivergenceKind::Kl
                | DivergenceKind::PearsonChi2
                | DivergenceKind::Alpha(_)
                | DivergenceKind::PseudoAlpha(_)
                | DivergenceKind::PhiP(_)
        )
    }

    /// Whether `conjugate_fstar` has a closed form for this kind.
    pub fn has_closed_form_conjugate(&self) -> bool {
        !matches!(self, DivergenceKind::TotalVariation)
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceKind::Kl => write!(f, "kl"),
            DivergenceKind::ReverseKl => write!(f, "reverse-kl"),
            DivergenceKind::PearsonChi2 => write!(f, "pearson-chi2"),
            DivergenceKind::NeymanChi2 => write!(f, "neyman-chi2"),
            DivergenceKind::TotalVariation => write!(f, "tv"),
            DivergenceKind::SquaredHellinger => write!(f, "hellinger2"),
            DivergenceKind::Alpha(a) => write!(f, "alpha:{a}"),
            DivergenceKind::PseudoAlpha(a) => write!(f, "pseudo-alpha:{a}"),
            DivergenceKind::PhiP(p) => write!(f, "phi-p:{p}"),
        }
    }
}

pub(crate) fn parse_param(token: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid numeric parameter in {token:?}")))
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let kind = match token.split_once(':') {
            None => match token {
                "kl" => DivergenceKind::Kl,
                "reverse-kl" => DivergenceKind::ReverseKl,
                "pearson-chi2" => DivergenceKind::PearsonChi2,
                "neyman-chi2" => DivergenceKind::NeymanChi2,
                "tv" => DivergenceKind::TotalVariation,
                "hellinger2" => DivergenceKind::SquaredHellinger,
                _ => return Err(Error::Parse(format!("unknown divergence kind {token:?}"))),
            },
            Some((name, value)) => {
                let v = parse_param(token, value)?;
                match name {
                    "alpha" => DivergenceKind::Alpha(v),
                    "pseudo-alpha" => DivergenceKind::PseudoAlpha(v),
                    "phi-p" => DivergenceKind::PhiP(v),
                    _ => return Err(Error::Parse(format!("unknown divergence kind {token:?}"))),
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// A divergence value, or the marker for an absolute-continuity failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceValue {
    Finite(f64),
    Infinite,
}

impl DivergenceValue {
    /// Clamps rounding noise below zero.
    pub fn finite(value: f64) -> Self {
        DivergenceValue::Finite(value.max(0.0))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            DivergenceValue::Finite(v) => Some(v),
            DivergenceValue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, DivergenceValue::Infinite)
    }

    /// The value as an `f64`, with `Infinite` mapped to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for DivergenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceValue::Finite(v) => write!(f, "{v}"),
            DivergenceValue::Infinite => write!(f, "infinite"),
        }
    }
}

/// The generator `f(t)` of `kind`.
pub fn generator_f(kind: DivergenceKind, t: f64) -> Result<f64> {
    kind.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(format!(
            "generator argument must be finite and >= 0, got {t}"
        )));
    }
    let value = match kind {
        DivergenceKind::Kl => {
            if t == 0.0 {
                1.0
            } else {
                t * t.ln() - t + 1.0
            }
        }
        DivergenceKind::ReverseKl => {
            if t == 0.0 {
                return Err(domain("reverse KL generator -log t needs t > 0"));
            }
            -t.ln()
        }
        DivergenceKind::PearsonChi2 => (t - 1.0) * (t - 1.0),
        DivergenceKind::NeymanChi2 => {
            if t == 0.0 {
                return Err(domain("Neyman chi^2 generator (1-t)^2/t needs t > 0"));
            }
            (1.0 - t) * (1.0 - t) / t
        }
        DivergenceKind::TotalVariation => 0.5 * (t - 1.0).abs(),
        DivergenceKind::SquaredHellinger => {
            let r = t.sqrt() - 1.0;
            r * r
        }
        DivergenceKind::Alpha(a) => (t.powf(a) - 1.0) / (a * (a - 1.0)),
        DivergenceKind::PseudoAlpha(a) => (t - 1.0).abs().powf(a),
        DivergenceKind::PhiP(p) => t.powf(p) - 1.0,
    };
    Ok(value)
}

/// Closed-form convex conjugate `f*(y) = sup_x (x y - f(x))`.
///
/// The supremum runs over `x >= 0` except for Pearson chi^2, whose generator
/// `(x-1)^2` is taken on the whole real line (giving `y + y^2/4`). Reverse KL
/// uses the shifted conjugate `log(1/(1-y))`, i.e. the conjugate of
/// `-log t` evaluated at `y - 1`, plus one.
pub fn conjugate_fstar(kind: DivergenceKind, y: f64) -> Result<f64> {
    kind.validate()?;
    if !y.is_finite() {
        return Err(domain(format!(
            "conjugate argument must be finite, got {y}"
        )));
    }
    let below_one = |name: &str| -> Result<()> {
        if y < 1.0 {
            Ok(())
        } else {
            Err(domain(format!("{name} conjugate requires y < 1, got {y}")))
        }
    };
    let value = match kind {
        DivergenceKind::Kl => y.exp() - 1.0,
        DivergenceKind::ReverseKl => {
            below_one("reverse KL")?;
            -(-y).ln_1p()
        }
        DivergenceKind::PearsonChi2 => y + 0.25 * y * y,
        DivergenceKind::NeymanChi2 => {
            below_one("Neyman chi^2")?;
            2.0 - 2.0 * (1.0 - y).sqrt()
        }
        DivergenceKind::SquaredHellinger => {
            below_one("squared Hellinger")?;
            y / (1.0 - y)
        }
        DivergenceKind::TotalVariation => {
            return Err(Error::Unsupported(
                "total variation has no closed-form conjugate here; use the dedicated bound".into(),
            ))
        }
        DivergenceKind::Alpha(a) => {
            if y < 0.0 {
                return Err(domain(format!("alpha conjugate requires y >= 0, got {y}")));
            }
            let q = a / (a - 1.0);
            (a - 1.0).powf(q) / a * y.powf(q) + 1.0 / (a * (a - 1.0))
        }
        DivergenceKind::PseudoAlpha(a) => {
            if y < -a {
                -1.0
            } else {
                let q = a / (a - 1.0);
                y + (a - 1.0) * (y.abs() / a).powf(q)
            }
        }
        DivergenceKind::PhiP(p) => {
            if y <= 0.0 {
                1.0
            } else {
                (p - 1.0) * (y / p).powf(p / (p - 1.0)) + 1.0
            }
        }
    };
    Ok(value)
}

/// Contribution of one support point; `None` means the sum is infinite.
fn point_term(kind: DivergenceKind, q: f64, p: f64) -> Option<f64> {
    if q == 0.0 && p == 0.0 {
        return Some(0.0);
    }
    let term = match kind {
        DivergenceKind::Kl => {
            if q == 0.0 {
                0.0
            } else if p == 0.0 {
                return None;
            } else {
                q * (q / p).ln()
            }
        }
        DivergenceKind::ReverseKl => {
            if p == 0.0 {
                0.0
            } else if q == 0.0 {
                return None;
            } else {
                p * (p / q).ln()
            }
        }
        DivergenceKind::PearsonChi2 => {
            if p == 0.0 {
                return None;
            }
            (q - p) * (q - p) / p
        }
        DivergenceKind::NeymanChi2 => {
            if q == 0.0 {
                return None;
            }
            (q - p) * (q - p) / q
        }
        DivergenceKind::TotalVariation => 0.5 * (q - p).abs(),
        DivergenceKind::SquaredHellinger => {
            let r = q.sqrt() - p.sqrt();
            r * r
        }
        DivergenceKind::Alpha(a) => {
            if p == 0.0 {
                return None;
            }
            // f(t) - f'(1)(t - 1): same total for Q << P, never negative.
            let t = q / p;
            p * (t.powf(a) - 1.0 - a * (t - 1.0)).max(0.0) / (a * (a - 1.0))
        }
        DivergenceKind::PseudoAlpha(a) => {
            if p == 0.0 {
                return None;
            }
            p * (q / p - 1.0).abs().powf(a)
        }
        DivergenceKind::PhiP(e) => {
            if p == 0.0 {
                return None;
            }
            let t = q / p;
            p * (t.powf(e) - 1.0 - e * (t - 1.0)).max(0.0)
        }
    };
    Some(term)
}

/// `D_f(Q||P)` on a shared finite support, accumulated with compensated
/// summation.
pub fn f_divergence(
    kind: DivergenceKind,
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
) -> Result<DivergenceValue> {
    kind.validate()?;
    q.ensure_same_support(p)?;
    let mut acc = CompensatedSum::new();
    for (&qi, &pi) in q.probs().iter().zip(p.probs()) {
        match point_term(kind, qi, pi) {
            Some(term) => acc.add(term),
            None => return Ok(DivergenceValue::Infinite),
        }
    }
    Ok(DivergenceValue::finite(acc.value()))
}

/// The pseudo alpha-divergence `E_P[|dQ/dP - 1|^alpha]`.
pub fn pseudo_alpha_divergence(
    alpha: f64,
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
) -> Result<DivergenceValue> {
    f_divergence(DivergenceKind::PseudoAlpha(alpha), q, p)
}

/// Best value of `E_Q[phi] - E_P[f*(phi)]` over a finite set of test
/// functions. For total variation the dedicated form `E_Q[phi] - E_P[phi]`
/// with `phi` in `[0, 1]` is used.
pub fn variational_lower_bound(
    kind: DivergenceKind,
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
    grid: &[TestFunction],
) -> Result<f64> {
    kind.validate()?;
    q.ensure_same_support(p)?;
    if grid.is_empty() {
        return Err(domain(
            "variational lower bound needs a non-empty test-function grid",
        ));
    }
    let mut best = f64::NEG_INFINITY;
    for phi in grid {
        phi.ensure_aligned(p)?;
        let eq = weighted_sum(q.probs(), phi.values(), |v| v);
        let penalty = if kind == DivergenceKind::TotalVariation {
            if let Some(v) = phi.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(domain(format!(
                    "total variation test functions must lie in [0, 1], got {v}"
                )));
            }
            weighted_sum(p.probs(), phi.values(), |v| v)
        } else {
            let conj = phi
                .values()
                .iter()
                .map(|&v| conjugate_fstar(kind, v))
                .collect::<Result<Vec<_>>>()?;
            weighted_sum(p.probs(), &conj, |c| c)
        };
        best = best.max(eq - penalty);
    }
    Ok(best)
}

/// Convexity gap of `g(t) = |t - 1|^alpha` along the chord from `x` to `y`:
/// `lambda g(x) + (1 - lambda) g(y) - g(lambda x + (1 - lambda) y)`.
pub fn convexity_probe(alpha: f64, x: f64, y: f64, lambda: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(bad_param(format!(
            "alpha must be a finite real > 1, got {alpha}"
        )));
    }
    if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
        return Err(bad_param(format!(
            "x and y must be finite and >= 0, got {x}, {y}"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(bad_param(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if x == y {
        return Ok(0.0);
    }
    let g = |t: f64| (t - 1.0).abs().powf(alpha);
    let mid = lambda * x + (1.0 - lambda) * y;
    Ok(lambda * g(x) + (1.0 - lambda) * g(y) - g(mid))
}

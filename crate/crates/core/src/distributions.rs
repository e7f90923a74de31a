//! Finite discrete distributions, test functions aligned to their support,
//! one-dimensional Gaussians and the strongly log-concave sampling contract.

use std::collections::HashSet;

use crate::error::{bad_param, Error, Result};
use crate::numeric::compensated_sum;
use crate::rng;

/// Entries down to this value are treated as rounding noise and clamped to 0.
pub const NEGATIVE_MASS_TOLERANCE: f64 = 1e-12;
/// Maximum distance of the raw total mass from 1 that is renormalized.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// A probability distribution on a finite, ordered, labelled support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution on the default support `0, 1, .., n-1`.
    pub fn new(probs: &[f64]) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, probs)
    }

    pub fn with_labels(labels: Vec<String>, probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptySupport);
        }
        if labels.len() != probs.len() {
            return Err(Error::LengthMismatch {
                expected: probs.len(),
                found: labels.len(),
            });
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }

        let mut clamped = Vec::with_capacity(probs.len());
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < -NEGATIVE_MASS_TOLERANCE {
                return Err(Error::NegativeMass { index, value });
            }
            clamped.push(value.max(0.0));
        }
        let sum = compensated_sum(clamped.iter().copied());
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MassTooFar { sum });
        }
        for p in &mut clamped {
            *p /= sum;
        }
        Ok(Self {
            labels,
            probs: clamped,
        })
    }

    /// Uniform distribution on `n` points.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        Self::new(&vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Fails with `SupportMismatch` unless both distributions live on the
    /// same labelled support.
    pub fn ensure_same_support(&self, other: &Self) -> Result<()> {
        if self.labels == other.labels {
            Ok(())
        } else {
            Err(Error::SupportMismatch)
        }
    }
}

/// Validates and renormalizes a probability vector.
pub fn make_discrete(probs: &[f64]) -> Result<DiscreteDistribution> {
    DiscreteDistribution::new(probs)
}

/// Values of a real function on the points of a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    values: Vec<f64>,
}

impl TestFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn constant(value: f64, len: usize) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `g` pointwise.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| g(v)).collect())
    }

    pub(crate) fn ensure_aligned(&self, p: &DiscreteDistribution) -> Result<()> {
        if self.values.len() == p.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: p.len(),
                found: self.values.len(),
            })
        }
    }
}

/// `E_P[phi]`.
pub fn expectation(p: &DiscreteDistribution, phi: &TestFunction) -> Result<f64> {
    phi.ensure_aligned(p)?;
    Ok(weighted_sum(p.probs(), phi.values(), |v| v))
}

/// `Var_P[phi]`, evaluated in centred form and clamped at zero.
pub fn variance(p: &DiscreteDistribution, phi: &TestFunction) -> Result<f64> {
    let mean = expectation(p, phi)?;
    let var = weighted_sum(p.probs(), phi.values(), |v| (v - mean) * (v - mean));
    Ok(var.max(0.0))
}

pub(crate) fn weighted_sum(weights: &[f64], values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    compensated_sum(
        weights
            .iter()
            .zip(values)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &v)| w * g(v)),
    )
}

/// The density ratio `dQ/dP` on a finite support.
#[derive(Debug, Clone, PartialEq)]
pub enum RadonNikodym {
    Finite(Vec<f64>),
    /// `Q` puts mass where `P` has none.
    Infinite,
}

/// Pointwise `q_i / p_i`; points with `q_i = p_i = 0` get ratio 1.
pub fn radon_nikodym(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<RadonNikodym> {
    q.ensure_same_support(p)?;
    let mut ratio = Vec::with_capacity(p.len());
    for (&qi, &pi) in q.probs().iter().zip(p.probs()) {
        if pi > 0.0 {
            ratio.push(qi / pi);
        } else if qi > 0.0 {
            return Ok(RadonNikodym::Infinite);
        } else {
            ratio.push(1.0);
        }
    }
    Ok(RadonNikodym::Finite(ratio))
}

/// A one-dimensional normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    mean: f64,
    variance: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(bad_param(format!(
                "gaussian mean must be finite, got {mean}"
            )));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(bad_param(format!(
                "gaussian variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn standard() -> Self {
        Self {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        let z = x - self.mean;
        -0.5 * z * z / self.variance - 0.5 * (2.0 * std::f64::consts::PI * self.variance).ln()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// The `index`-th draw of the stream for `seed`.
    pub fn sample_at(&self, seed: u64, index: u64) -> f64 {
        self.mean + self.std_dev() * rng::standard_normal_at(seed, index)
    }
}

/// Strong log-concavity parameter of a Gaussian: the second derivative of
/// `-log density`, i.e. `1 / variance`.
pub fn gaussian_gamma(g: &Gaussian1D) -> f64 {
    1.0 / g.variance
}

/// `n` reproducible draws from `g`; the i-th entry equals `g.sample_at(seed, i)`.
pub fn sample_gaussian(g: &Gaussian1D, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    let mut stream = rng::stream(seed);
    let sd = g.std_dev();
    Ok((0..n)
        .map(|_| g.mean + sd * rng::standard_normal(&mut stream))
        .collect())
}

/// A strongly log-concave sampling distribution with a certified parameter
/// `gamma`, backed by a Gaussian sampler.
///
/// A Gaussian with variance `v` is `gamma`-strongly log-concave for every
/// `0 < gamma <= 1 / v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogConcaveSpec {
    gamma: f64,
    source: Gaussian1D,
}

impl LogConcaveSpec {
    pub fn new(gamma: f64, source: Gaussian1D) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(bad_param(format!("gamma must be positive, got {gamma}")));
        }
        let certified = gaussian_gamma(&source);
        if gamma > certified * (1.0 + 1e-12) {
            return Err(bad_param(format!(
                "gamma {gamma} exceeds the strong log-concavity {certified} of the sampler"
            )));
        }
        Ok(Self { gamma, source })
    }

    /// Uses the sharpest parameter of the Gaussian.
    pub fn from_gaussian(source: Gaussian1D) -> Self {
        Self {
            gamma: gaussian_gamma(&source),
            source,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn source(&self) -> &Gaussian1D {
        &self.source
    }

    pub fn sample(&self, seed: u64, index: u64) -> f64 {
        self.source.sample_at(seed, index)
    }

    pub fn samples(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        sample_gaussian(&self.source, n, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> DiscreteDistribution {
        make_discrete(p).unwrap()
    }

    fn tf(v: &[f64]) -> TestFunction {
        TestFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn make_discrete_examples() {
        assert_eq!(dist(&[0.5, 0.5]).probs(), &[0.5, 0.5]);
        assert_eq!(dist(&[0.25, 0.75]).probs(), &[0.25, 0.75]);
        assert!(matches!(
            make_discrete(&[0.3, -0.1]),
            Err(Error::NegativeMass { index: 1, .. })
        ));
    }

    #[test]
    fn make_discrete_errors() {
        assert_eq!(make_discrete(&[]), Err(Error::EmptySupport));
        assert!(matches!(
            make_discrete(&[0.5, 0.4]),
            Err(Error::MassTooFar { .. })
        ));
        assert!(matches!(
            make_discrete(&[0.5, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
        let labels = vec!["a".to_string(), "a".to_string()];
        assert!(matches!(
            DiscreteDistribution::with_labels(labels, &[0.5, 0.5]),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn make_discrete_clamps_and_renormalizes() {
        let d = dist(&[0.5 + 4e-7, 0.5, -1e-13]);
        assert_eq!(d.probs()[2], 0.0);
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(
            expectation(&dist(&[0.5, 0.5]), &tf(&[1.0, 0.0])).unwrap(),
            0.5
        );
        assert_eq!(
            expectation(&dist(&[0.25, 0.75]), &tf(&[1.0, 0.0])).unwrap(),
            0.25
        );
        assert_eq!(expectation(&dist(&[1.0]), &tf(&[3.7])).unwrap(), 3.7);
        assert!(matches!(
            expectation(&dist(&[1.0]), &tf(&[1.0, 2.0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn variance_examples() {
        let v = variance(&dist(&[0.25, 0.75]), &tf(&[1.0, 0.0])).unwrap();
        assert!((v - 0.25 * 0.75).abs() < 1e-15);
        assert_eq!(variance(&dist(&[0.2, 0.8]), &tf(&[4.0, 4.0])).unwrap(), 0.0);
        assert_eq!(
            variance(&dist(&[0.5, 0.5]), &tf(&[1.0, -1.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn radon_nikodym_examples() {
        let p = dist(&[0.5, 0.5]);
        assert_eq!(
            radon_nikodym(&p, &p).unwrap(),
            RadonNikodym::Finite(vec![1.0, 1.0])
        );
        match radon_nikodym(&p, &dist(&[0.25, 0.75])).unwrap() {
            RadonNikodym::Finite(r) => {
                assert_eq!(r[0], 2.0);
                assert!((r[1] - 2.0 / 3.0).abs() < 1e-15);
            }
            RadonNikodym::Infinite => panic!("expected finite ratio"),
        }
        assert_eq!(
            radon_nikodym(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(),
            RadonNikodym::Infinite
        );
        assert_eq!(
            radon_nikodym(&dist(&[1.0, 0.0]), &dist(&[1.0, 0.0])).unwrap(),
            RadonNikodym::Finite(vec![1.0, 1.0])
        );
        assert_eq!(
            radon_nikodym(&dist(&[1.0]), &dist(&[0.5, 0.5])),
            Err(Error::SupportMismatch)
        );
    }

    #[test]
    fn gaussian_gamma_examples() {
        assert_eq!(gaussian_gamma(&Gaussian1D::new(0.0, 1.0).unwrap()), 1.0);
        assert_eq!(gaussian_gamma(&Gaussian1D::new(3.0, 4.0).unwrap()), 0.25);
        assert_eq!(gaussian_gamma(&Gaussian1D::new(0.0, 0.25).unwrap()), 4.0);
        assert!(Gaussian1D::new(0.0, 0.0).is_err());
    }

    #[test]
    fn sample_gaussian_examples() {
        let g = Gaussian1D::standard();
        let a = sample_gaussian(&g, 3, 7).unwrap();
        let b = sample_gaussian(&g, 3, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_gaussian(&g, 0, 1), Err(Error::ZeroSamples));

        let n = 100_000;
        let shifted = Gaussian1D::new(5.0, 1.0).unwrap();
        let xs = sample_gaussian(&shifted, n, 1).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 5.0).abs() < 6.0 / (n as f64).sqrt());
        assert!((mean - 5.0).abs() < 0.02);
    }

    #[test]
    fn log_concave_spec_rejects_overstated_gamma() {
        let g = Gaussian1D::new(0.0, 4.0).unwrap();
        assert!(LogConcaveSpec::new(0.25, g).is_ok());
        assert!(LogConcaveSpec::new(0.1, g).is_ok());
        assert!(LogConcaveSpec::new(0.5, g).is_err());
        assert!(LogConcaveSpec::new(0.0, g).is_err());
        let spec = LogConcaveSpec::from_gaussian(g);
        assert_eq!(spec.sample(9, 17), spec.sample(9, 17));
        assert_eq!(spec.samples(20, 9).unwrap()[17], spec.sample(9, 17));
    }
}

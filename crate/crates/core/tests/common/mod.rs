//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use cmi_core::distributions::{DiscreteDistribution, Gaussian1D, TestFunction};
use cmi_core::divergences::DivergenceKind;
use cmi_core::rng::StreamRng;
use rand::Rng;

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Generators written out independently of the library. Reverse KL uses
/// `-log t + t - 1`, the form whose conjugate is `log(1/(1-y))`.
pub fn generator(kind: DivergenceKind, t: f64) -> f64 {
    match kind {
        DivergenceKind::Kl => {
            if t == 0.0 {
                1.0
            } else {
                t * t.ln() - t + 1.0
            }
        }
        DivergenceKind::ReverseKl => -t.ln() + t - 1.0,
        DivergenceKind::PearsonChi2 => (t - 1.0).powi(2),
        DivergenceKind::NeymanChi2 => (1.0 - t).powi(2) / t,
        DivergenceKind::TotalVariation => 0.5 * (t - 1.0).abs(),
        DivergenceKind::SquaredHellinger => (t.sqrt() - 1.0).powi(2),
        DivergenceKind::Alpha(a) => (t.powf(a) - 1.0) / (a * (a - 1.0)),
        DivergenceKind::PseudoAlpha(a) => (t - 1.0).abs().powf(a),
        DivergenceKind::PhiP(p) => t.powf(p) - 1.0,
    }
}

/// Lower end of the search range for the conjugate supremum.
fn search_floor(kind: DivergenceKind) -> f64 {
    match kind {
        DivergenceKind::PearsonChi2 => -1e4,
        DivergenceKind::ReverseKl | DivergenceKind::NeymanChi2 => 1e-12,
        _ => 0.0,
    }
}

/// `sup_x (x y - f(x))` by a log-spaced grid followed by golden-section
/// refinement around the best grid point (the objective is concave).
pub fn grid_conjugate(kind: DivergenceKind, y: f64) -> f64 {
    let obj = |x: f64| x * y - generator(kind, x);
    let floor = search_floor(kind);
    let mut xs = vec![floor];
    let mut magnitude = 1e-10;
    while magnitude <= 1e4 {
        if magnitude > floor {
            xs.push(magnitude);
        }
        if -magnitude > floor {
            xs.push(-magnitude);
        }
        magnitude *= 1.01;
    }
    xs.push(0.0f64.max(floor));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (best, _) = xs.iter().enumerate().map(|(i, &x)| (i, obj(x))).fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
    );
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(xs.len() - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if obj(c) >= obj(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    obj(x).max(obj(xs[best]))
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn gauss_pdf(x: f64, m: f64, s: f64) -> f64 {
    let z = (x - m) / s;
    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

fn window(q: &Gaussian1D, p: &Gaussian1D) -> (f64, f64) {
    let s = q.std_dev().max(p.std_dev()) * 3.0;
    (
        q.mean().min(p.mean()) - 14.0 * s,
        q.mean().max(p.mean()) + 14.0 * s,
    )
}

/// `int q^2 / p - 1` by Simpson's rule.
pub fn chi2_quadrature(q: &Gaussian1D, p: &Gaussian1D) -> f64 {
    let (a, b) = window(q, p);
    let (qm, qs, pm, ps) = (q.mean(), q.std_dev(), p.mean(), p.std_dev());
    simpson(
        |x| {
            let zq = (x - qm) / qs;
            let zp = (x - pm) / ps;
            (-zq * zq + 0.5 * zp * zp).exp() * ps / (qs * qs * (2.0 * std::f64::consts::PI).sqrt())
        },
        a,
        b,
        200_000,
    ) - 1.0
}

/// `int q log(q / p)` by Simpson's rule.
pub fn kl_quadrature(q: &Gaussian1D, p: &Gaussian1D) -> f64 {
    let (a, b) = window(q, p);
    let (qm, qs, pm, ps) = (q.mean(), q.std_dev(), p.mean(), p.std_dev());
    simpson(
        |x| {
            let qd = gauss_pdf(x, qm, qs);
            let log_ratio =
                -0.5 * ((x - qm) / qs).powi(2) + 0.5 * ((x - pm) / ps).powi(2) + (ps / qs).ln();
            qd * log_ratio
        },
        a,
        b,
        200_000,
    )
}

/// Strictly positive probability vector of length `n`.
pub fn positive_probs(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Probability vector that may contain zeros (but not only zeros).
pub fn probs_with_zeros(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < 0.2 {
                0.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// A random pair `(Q, P)` with `P` of full support and `Q << P`.
pub fn random_pair(rng: &mut StreamRng) -> (DiscreteDistribution, DiscreteDistribution) {
    let n = rng.gen_range(2..=16);
    let p = DiscreteDistribution::new(&positive_probs(rng, n)).unwrap();
    let q = DiscreteDistribution::new(&probs_with_zeros(rng, n)).unwrap();
    (q, p)
}

pub fn random_phi(rng: &mut StreamRng, n: usize, lo: f64, hi: f64) -> TestFunction {
    TestFunction::new((0..n).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect()).unwrap()
}

/// Every divergence kind, with representative parameters.
pub fn all_kinds() -> Vec<DivergenceKind> {
    vec![
        DivergenceKind::Kl,
        DivergenceKind::ReverseKl,
        DivergenceKind::PearsonChi2,
        DivergenceKind::NeymanChi2,
        DivergenceKind::TotalVariation,
        DivergenceKind::SquaredHellinger,
        DivergenceKind::Alpha(1.5),
        DivergenceKind::Alpha(2.0),
        DivergenceKind::Alpha(3.0),
        DivergenceKind::PseudoAlpha(1.5),
        DivergenceKind::PseudoAlpha(2.0),
        DivergenceKind::PseudoAlpha(3.0),
        DivergenceKind::PhiP(1.5),
        DivergenceKind::PhiP(3.0),
    ]
}

/// Range `[lo, hi]` of `y` on which the closed-form conjugate is checked.
pub fn conjugate_range(kind: DivergenceKind) -> (f64, f64) {
    match kind {
        DivergenceKind::Kl => (-3.0, 3.0),
        DivergenceKind::ReverseKl | DivergenceKind::NeymanChi2 => (-5.0, 0.9),
        DivergenceKind::SquaredHellinger => (-5.0, 0.9),
        DivergenceKind::PearsonChi2 => (-6.0, 6.0),
        DivergenceKind::Alpha(_) => (0.0, 3.0),
        DivergenceKind::PseudoAlpha(a) => (-a - 1.0, 3.0),
        DivergenceKind::PhiP(_) => (-1.0, 3.0),
        DivergenceKind::TotalVariation => (0.0, 1.0),
    }
}

/// Clamps a value into the conjugate domain used by random test functions.
pub fn into_conjugate_domain(kind: DivergenceKind, v: f64) -> f64 {
    match kind {
        DivergenceKind::ReverseKl
        | DivergenceKind::NeymanChi2
        | DivergenceKind::SquaredHellinger => v.clamp(-50.0, 0.999),
        DivergenceKind::Alpha(_) => v.clamp(0.0, 50.0),
        DivergenceKind::TotalVariation => v.clamp(0.0, 1.0),
        _ => v.clamp(-50.0, 50.0),
    }
}

/// `f'(t)` of the generator used by the conjugate, at `t = q/p`, clamped into
/// the conjugate domain. This is the maximizing test function of the
/// variational representation.
pub fn optimal_phi(
    kind: DivergenceKind,
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
) -> TestFunction {
    let values = q
        .probs()
        .iter()
        .zip(p.probs())
        .map(|(&qi, &pi)| {
            let t = qi / pi;
            let d = match kind {
                DivergenceKind::Kl => t.ln(),
                DivergenceKind::ReverseKl => 1.0 - 1.0 / t,
                DivergenceKind::PearsonChi2 => 2.0 * (t - 1.0),
                DivergenceKind::NeymanChi2 => 1.0 - 1.0 / (t * t),
                DivergenceKind::TotalVariation => {
                    if t > 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                DivergenceKind::SquaredHellinger => 1.0 - 1.0 / t.sqrt(),
                DivergenceKind::Alpha(a) => t.powf(a - 1.0) / (a - 1.0),
                DivergenceKind::PseudoAlpha(a) => {
                    a * (t - 1.0).signum() * (t - 1.0).abs().powf(a - 1.0)
                }
                DivergenceKind::PhiP(e) => e * t.powf(e - 1.0),
            };
            into_conjugate_domain(kind, if d.is_nan() { 0.0 } else { d })
        })
        .collect();
    TestFunction::new(values).unwrap()
}

/// A random test function inside the conjugate domain of `kind`.
pub fn random_conjugate_phi(kind: DivergenceKind, rng: &mut StreamRng, n: usize) -> TestFunction {
    let values = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let v = match kind {
                DivergenceKind::ReverseKl
                | DivergenceKind::NeymanChi2
                | DivergenceKind::SquaredHellinger => 1.0 - (-4.0 + 6.0 * u).exp(),
                DivergenceKind::Alpha(_) => 3.0 * u,
                DivergenceKind::TotalVariation => u,
                _ => -3.0 + 6.0 * u,
            };
            into_conjugate_domain(kind, v)
        })
        .collect();
    TestFunction::new(values).unwrap()
}

/// Normalizes non-negative weights with a positive total.
pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// `(Q, P, phi)` weights on a shared support of size 2..=12: `P` has full
/// support, `Q` may have zeros, `phi` is in `[-3, 3]`.
pub fn triple_strategy() -> impl proptest::strategy::Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)>
{
    use proptest::prelude::*;
    (2usize..=12).prop_flat_map(|n| {
        (
            proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], n).prop_map(
                |mut w| {
                    if w.iter().all(|&x| x == 0.0) {
                        w[0] = 1.0;
                    }
                    normalize(&w)
                },
            ),
            proptest::collection::vec(0.01f64..1.0, n).prop_map(|w| normalize(&w)),
            proptest::collection::vec(-3.0f64..3.0, n),
        )
    })
}

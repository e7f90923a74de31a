//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maximum bisection depth before giving up on a subinterval.
pub const MAX_DEPTH: u32 = 40;

/// Integral estimate with its accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod rule with the embedded 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    acc: &mut CompensatedSum,
    err: &mut f64,
) -> Result<()> {
    let (value, error) = gk15(f, a, b);
    if !value.is_finite() {
        return Err(Error::NoConvergence(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    if error <= tol || (b - a) <= f64::EPSILON * a.abs().max(b.abs()) {
        acc.add(value);
        *err += error;
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NoConvergence(format!(
            "error estimate {error:e} above {tol:e} on [{a}, {b}] after {MAX_DEPTH} bisections"
        )));
    }
    let mid = 0.5 * (a + b);
    refine(f, a, mid, 0.5 * tol, depth + 1, acc, err)?;
    refine(f, mid, b, 0.5 * tol, depth + 1, acc, err)
}

/// Integrates `f` over `[a, b]` to an absolute error target `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::BadParameter(format!("invalid interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::BadParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut acc = CompensatedSum::new();
    let mut err = 0.0;
    if a < b {
        refine(&f, a, b, tol, 0, &mut acc, &mut err)?;
    }
    Ok(Estimate {
        value: acc.value(),
        error: err,
    })
}

/// Integrates over consecutive pieces split at the sorted `breaks` that fall
/// inside `(a, b)`, sharing the error budget evenly.
pub fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Estimate> {
    let mut points = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    points.extend(inner);
    points.push(b);
    let share = tol / (points.len() - 1) as f64;
    let mut acc = CompensatedSum::new();
    let mut err = 0.0;
    for w in points.windows(2) {
        let piece = integrate(&f, w[0], w[1], share)?;
        acc.add(piece.value);
        err += piece.error;
    }
    Ok(Estimate {
        value: acc.value(),
        error: err,
    })
}

//! Standard normal kernel: density, distribution, survival, inverse survival
//! and moments of the positive part of a normal variable.
//!
//! The distribution functions go through `erfc` so the upper tail keeps full
//! relative accuracy; `1 - cdf(x)` would cancel to zero long before the
//! staffing roots stop caring.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ProbabilityError {
    #[error("tail probability must lie in (0, 1), got {0}")]
    Domain(f64),
    #[error("standard deviation must be finite and > 0, got {0}")]
    NonPositiveStd(f64),
}

pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `P(Z > x)`.
pub fn survival(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `z` with `survival(z) == eps`.
///
/// Acklam's rational approximation gives a seed good to about 1e-9 relative;
/// two Newton steps on `survival` take it to machine precision.
pub fn inverse_survival(eps: f64) -> Result<f64, ProbabilityError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ProbabilityError::Domain(eps));
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    let mut z = -acklam_quantile(eps);
    for _ in 0..2 {
        let density = pdf(z);
        if density == 0.0 {
            break;
        }
        z += (survival(z) - eps) / density;
    }
    Ok(z)
}

/// Lower-tail quantile seed, `cdf(x) ~= prob`.
fn acklam_quantile(prob: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if prob < P_LOW {
        tail((-2.0 * prob.ln()).sqrt())
    } else if prob <= 1.0 - P_LOW {
        let q = prob - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - prob).ln()).sqrt())
    }
}

/// Mean and standard deviation of a normal variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalParams {
    mean: f64,
    std: f64,
}

impl NormalParams {
    pub fn new(mean: f64, std: f64) -> Result<Self, ProbabilityError> {
        if std.is_finite() && std > 0.0 && mean.is_finite() {
            Ok(Self { mean, std })
        } else {
            Err(ProbabilityError::NonPositiveStd(std))
        }
    }

    pub fn from_variance(mean: f64, variance: f64) -> Result<Self, ProbabilityError> {
        if variance > 0.0 {
            Self::new(mean, variance.sqrt())
        } else {
            Err(ProbabilityError::NonPositiveStd(variance))
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn negated(&self) -> Self {
        Self {
            mean: -self.mean,
            std: self.std,
        }
    }
}

/// `E[max(X, 0)]` for `X ~ N(m, sigma^2)`: `sigma*pdf(m/sigma) + m*cdf(m/sigma)`.
pub fn expected_positive_part(d: NormalParams) -> f64 {
    let alpha = d.mean / d.std;
    d.std * pdf(alpha) + d.mean * cdf(alpha)
}

/// First two moments of `X+ = max(X, 0)` for normal `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivePartMoments {
    pub mean: f64,
    pub second: f64,
    pub variance: f64,
}

impl PositivePartMoments {
    pub fn of(d: NormalParams) -> Self {
        let (m, s) = (d.mean, d.std);
        let alpha = m / s;
        let lower = cdf(alpha);
        let upper = survival(alpha);
        let density = pdf(alpha);
        let mean = m * lower + s * density;
        let second = (m * m + s * s) * lower + m * s * density;
        // second - mean^2 regrouped so the large-alpha case does not cancel:
        // sigma^2 [Phi + alpha^2 Phi (1-Phi) + alpha phi (1 - 2 Phi) - phi^2]
        let scaled = lower + alpha * alpha * lower * upper + alpha * density * (upper - lower)
            - density * density;
        let variance = (s * s * scaled).max(0.0);
        Self {
            mean,
            second,
            variance,
        }
    }
}

pub fn positive_part_moments(d: NormalParams) -> PositivePartMoments {
    PositivePartMoments::of(d)
}

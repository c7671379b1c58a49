//! Standard normal helpers: cdf, quantile and the truncated sampler.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{AuditError, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Quantile of the standard normal.
///
/// Acklam's rational approximation (relative error below 1.2e-9) followed by
/// one Halley step against the erfc-based cdf, which brings the result to
/// near machine precision.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
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

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement.
    let e = std_normal_cdf(x) - p;
    let u = e / std_normal_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Variance of the standard normal conditioned on `[-alpha, alpha]`.
pub fn truncated_std_normal_variance(alpha: f64) -> f64 {
    1.0 - 2.0 * alpha * std_normal_pdf(alpha) / (2.0 * std_normal_cdf(alpha) - 1.0)
}

/// Cdf of the standard normal conditioned on `[-alpha, alpha]`.
pub fn truncated_std_normal_cdf(alpha: f64, x: f64) -> f64 {
    if x <= -alpha {
        return 0.0;
    }
    if x >= alpha {
        return 1.0;
    }
    let lo = std_normal_cdf(-alpha);
    (std_normal_cdf(x) - lo) / (std_normal_cdf(alpha) - lo)
}

/// Below this truncation bound rejection gets wasteful and the sampler
/// switches to the inverse cdf.
const INVERSE_CDF_BELOW: f64 = 0.5;

/// One draw from 𝒩(0,1) conditioned on `[-alpha, alpha]`.
pub fn truncated_normal_sample<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(AuditError::config(
            "alpha",
            format!("truncation bound must be a positive finite number, got {alpha}"),
        ));
    }
    Ok(truncated_normal_unchecked(alpha, rng))
}

pub(crate) fn truncated_normal_unchecked<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha < INVERSE_CDF_BELOW {
        let lo = std_normal_cdf(-alpha);
        let hi = std_normal_cdf(alpha);
        let u: f64 = rng.random();
        let x = std_normal_quantile(lo + u * (hi - lo));
        return x.clamp(-alpha, alpha);
    }
    loop {
        let x: f64 = rng.sample(StandardNormal);
        if x.abs() <= alpha {
            return x;
        }
    }
}

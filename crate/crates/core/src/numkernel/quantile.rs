use crate::error::{Error, Result};
use crate::scalar::Real;

use super::special;

/// 0-based index of the order statistic `x_(ceil(q * n))` in a sample of
/// size `n`, with `x_(0)` mapped to `x_(1)`.
///
/// This single helper pins the quantile convention used everywhere: the
/// inverse of the empirical CDF evaluated from the left.
pub fn order_stat_index<T: Real>(n: usize, q: T) -> usize {
    debug_assert!(n > 0);
    let rank = (q * T::of(n as f64)).ceil().to_usize().unwrap_or(n);
    rank.clamp(1, n) - 1
}

/// Empirical quantile of an ascending-sorted sample: the order statistic
/// `x_(ceil(q * n))`, with `x_(0)` defined as `x_(1)`.
///
/// `q = 0` gives the minimum and `q = 1` the maximum.  The result is always
/// one of the sample values, so repeated evaluation is exactly reproducible.
pub fn empirical_quantile<T: Real>(values: &[T], q: T) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile sample"));
    }
    if !(q >= T::zero() && q <= T::one()) {
        return Err(Error::Domain(format!(
            "quantile level must lie in [0, 1], got {q}"
        )));
    }
    debug_assert!(
        values.windows(2).all(|w| w[0] <= w[1]),
        "empirical_quantile requires ascending-sorted input"
    );
    Ok(values[order_stat_index(values.len(), q)])
}

/// Standard normal CDF, accurate to ~1e-14.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    T::of(0.5 * special::erfc(-x / std::f64::consts::SQRT_2))
}

/// Standard normal quantile (inverse CDF) for `q` in the open interval
/// (0, 1).
///
/// A rational initial approximation is polished with Halley steps against
/// [`normal_cdf`], giving `|normal_cdf(result) - q| <= 1e-10` over the whole
/// domain.  Arguments at or above 1/2 are reduced to their complement before
/// evaluation, so exactly complementary levels produce exactly negated
/// results and `normal_quantile(0.5) == 0`.
pub fn normal_quantile<T: Real>(q: T) -> Result<T> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::Domain(format!(
            "normal quantile level must lie in (0, 1), got {q}"
        )));
    }
    let qf = q.as_f64();
    if qf == 0.5 {
        return Ok(T::zero());
    }
    // For q in (1/2, 1) the complement 1 - q is exact (Sterbenz), so the
    // reduced pair shares one evaluation path.
    if qf > 0.5 {
        Ok(T::of(-lower_tail_quantile(1.0 - qf)))
    } else {
        Ok(T::of(lower_tail_quantile(qf)))
    }
}

/// Inverse normal CDF on (0, 1/2); result is negative.
fn lower_tail_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 0.5);
    let mut x = rational_approx(p);
    for _ in 0..2 {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density < 1e-280 {
            break;
        }
        let err = 0.5 * special::erfc(-x / std::f64::consts::SQRT_2) - p;
        let u = err / density;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Rational approximation to the inverse normal CDF (relative error below
/// 1.2e-9), evaluated on the lower tail and central region only.
fn rational_approx(p: f64) -> f64 {
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
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let r = (-2.0 * p.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else {
        let u = p - 0.5;
        let t = u * u;
        (((((A[0] * t + A[1]) * t + A[2]) * t + A[3]) * t + A[4]) * t + A[5]) * u
            / (((((B[0] * t + B[1]) * t + B[2]) * t + B[3]) * t + B[4]) * t + 1.0)
    }
}

//! Normal distribution primitives.
//!
//! `erfc` follows W. J. Cody's rational Chebyshev approximations, which are
//! accurate to roughly double precision over the whole real line. The
//! quantile uses Acklam's rational approximation refined by Halley steps.

use crate::Real;

const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];
const ERFC_C: [f64; 9] = [
    5.641_884_969_886_701e-1,
    8.883_149_794_388_376,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_691e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_5e-8,
];
const ERFC_D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_099e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_6e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];
const ERFC_P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const ERFC_Q: [f64; 5] = [
    2.568_520_192_289_822_4,
    1.872_952_849_923_467_3,
    5.279_051_029_514_284e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_8e-3,
];
const FRAC_1_SQRT_PI: f64 = 5.641_895_835_477_563e-1;

/// `exp(-y^2)` evaluated with the argument split to limit cancellation.
fn exp_neg_sq<T: Real>(y: T) -> T {
    let sixteen = T::lit(16.0);
    let ysq = (y * sixteen).trunc() / sixteen;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

fn erfc_nonneg<T: Real>(y: T) -> T {
    let c = T::lit;
    if y <= c(0.5) {
        return T::one() - erf_small(y);
    }
    if y <= c(4.0) {
        let mut num = c(ERFC_C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + c(ERFC_C[i])) * y;
            den = (den + c(ERFC_D[i])) * y;
        }
        let r = (num + c(ERFC_C[7])) / (den + c(ERFC_D[7]));
        return exp_neg_sq(y) * r;
    }
    if y >= c(27.3) {
        return T::zero();
    }
    let z = T::one() / (y * y);
    let mut num = c(ERFC_P[5]) * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + c(ERFC_P[i])) * z;
        den = (den + c(ERFC_Q[i])) * z;
    }
    let r = z * (num + c(ERFC_P[4])) / (den + c(ERFC_Q[4]));
    let r = (c(FRAC_1_SQRT_PI) - r) / y;
    exp_neg_sq(y) * r
}

fn erf_small<T: Real>(x: T) -> T {
    let c = T::lit;
    let ysq = x * x;
    let mut num = c(ERF_A[4]) * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + c(ERF_A[i])) * ysq;
        den = (den + c(ERF_B[i])) * ysq;
    }
    x * (num + c(ERF_A[3])) / (den + c(ERF_B[3]))
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x >= T::zero() {
        erfc_nonneg(x)
    } else {
        T::lit(2.0) - erfc_nonneg(-x)
    }
}

/// Error function.
pub fn erf<T: Real>(x: T) -> T {
    if x.abs() <= T::lit(0.5) {
        erf_small(x)
    } else {
        T::one() - erfc(x)
    }
}

/// Standard normal CDF.
pub fn norm_cdf<T: Real>(z: T) -> T {
    T::lit(0.5) * erfc(-z / T::SQRT_2())
}

/// Standard normal upper tail, `1 - Φ(z)`, without cancellation.
pub fn norm_sf<T: Real>(z: T) -> T {
    T::lit(0.5) * erfc(z / T::SQRT_2())
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(z: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * T::lit(0.5);
    inv_sqrt_2pi * (-T::lit(0.5) * z * z).exp()
}

/// Log density of `N(mean, sd^2)` at `x`.
pub fn norm_logpdf<T: Real>(x: T, mean: T, sd: T) -> T {
    let z = (x - mean) / sd;
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    -T::lit(0.5) * z * z - sd.ln() - half_ln_2pi
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam(p: f64) -> f64 {
    let (a, b, c, d) = (ACKLAM_A, ACKLAM_B, ACKLAM_C, ACKLAM_D);
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// Standard normal quantile for `p` in `(0, 1)`; returns `±inf` at the ends
/// and NaN outside.
pub fn norm_quantile<T: Real>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    // Work on the lower tail so the Halley correction sees an accurate residual.
    let upper = p > T::lit(0.5);
    let q = if upper { T::one() - p } else { p };
    let mut x = T::lit(acklam(q.to_f64_lossy()));
    let sqrt_2pi = T::lit(2.506_628_274_631_000_5);
    for _ in 0..2 {
        let e = norm_cdf(x) - q;
        let u = e * sqrt_2pi * (x * x / T::lit(2.0)).exp();
        x = x - u / (T::one() + x * u / T::lit(2.0));
    }
    if upper {
        -x
    } else {
        x
    }
}

/// `log(sum(exp(xs)))` without overflow.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<T>().ln()
}

//! Globally adaptive Gauss-Kronrod (G10/K21) integration on finite intervals,
//! plus Gauss-Legendre rules for fixed-node integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Real, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_323_243_300,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        let floor = T::epsilon() * T::lit(100.0);
        Self {
            abs_tol: T::lit(1e-9).max(floor),
            rel_tol: T::lit(1e-10).max(floor),
            max_subdivisions: 2000,
        }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn with_abs_tol(abs_tol: T) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

/// Value of a definite integral with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub abs_error: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod21<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Segment<T> {
    let c = T::lit;
    let center = (a + b) * c(0.5);
    let half = (b - a) * c(0.5);
    let abs_half = half.abs();

    let f_center = f(center);
    let mut res_k = f_center * c(WGK[10]);
    let mut res_g = T::zero();
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let x = half * c(XGK[j]);
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k = res_k + c(WGK[j]) * (f1 + f2);
        res_abs = res_abs + c(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + c(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * c(0.5);
    let mut res_asc = c(WGK[10]) * (f_center - mean).abs();
    for j in 0..10 {
        res_asc = res_asc + c(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * abs_half;
    let res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != T::zero() && err != T::zero() {
        err = res_asc * T::one().min((c(200.0) * err / res_asc).powf(c(1.5)));
    }
    if res_abs > T::min_positive_value() / (c(50.0) * T::epsilon()) {
        err = err.max(c(50.0) * T::epsilon() * res_abs);
    }
    Segment {
        a,
        b,
        value,
        error: err,
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: T, b: T, cfg: &QuadratureConfig<T>) -> Result<Integral<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    integrate_with_breaks(f, &[a, b], cfg)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// partition given by `points`. Interior points mark places where the
/// integrand changes character and seed the adaptive subdivision.
pub fn integrate_with_breaks<T, F>(
    mut f: F,
    points: &[T],
    cfg: &QuadratureConfig<T>,
) -> Result<Integral<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if points.len() < 2 {
        return Err(crate::error::domain("integration needs at least two points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(crate::error::domain("integration limits must be finite"));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod21(&mut f, w[0], w[1]));
            evaluations += 21;
        }
    }
    let totals = |heap: &BinaryHeap<Segment<T>>| {
        heap.iter().fold((T::zero(), T::zero()), |(v, e), s| {
            (v + s.value, e + s.error)
        })
    };
    let (mut value, mut error) = totals(&heap);
    let mut subdivisions = 0;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tol {
            // Running sums drift; report the exact totals.
            let (value, error) = totals(&heap);
            if error <= tol * T::lit(1.01) {
                return Ok(Integral {
                    value,
                    abs_error: error,
                    evaluations,
                });
            }
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => {
                return Ok(Integral {
                    value,
                    abs_error: error,
                    evaluations,
                })
            }
        };
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if subdivisions >= cfg.max_subdivisions || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (value, error) = totals(&heap);
            // Accept when the residual error is at round-off level.
            if error <= tol * T::lit(100.0) || error <= T::epsilon() * T::lit(1e3) * value.abs() {
                return Ok(Integral {
                    value,
                    abs_error: error,
                    evaluations,
                });
            }
            return Err(Error::Quadrature {
                value: value.to_f64_lossy(),
                abs_error: error.to_f64_lossy(),
                subdivisions,
            });
        }
        let left = kronrod21(&mut f, worst.a, mid);
        let right = kronrod21(&mut f, mid, worst.b);
        value = value - worst.value + left.value + right.value;
        error = (error - worst.error + left.error + right.error).max(T::zero());
        heap.push(left);
        heap.push(right);
        evaluations += 42;
        subdivisions += 1;
        if subdivisions % 64 == 0 {
            (value, error) = totals(&heap);
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (
        nodes.into_iter().map(T::lit).collect(),
        weights.into_iter().map(T::lit).collect(),
    )
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_polynomials() {
        // K21 integrates degree <= 31 exactly, the embedded G10 degree <= 19.
        let cfg = QuadratureConfig::<f64>::default();
        let r = integrate(|x: f64| x.powi(18) + 3.0 * x.powi(7), -1.0, 1.0, &cfg).unwrap();
        assert!((r.value - 2.0 / 19.0).abs() < 1e-15);
        assert_eq!(r.evaluations, 21);
        let r = integrate(|x: f64| x.powi(30), -1.0, 1.0, &cfg).unwrap();
        assert!((r.value - 2.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_integral() {
        let cfg = QuadratureConfig::default();
        let r = integrate(
            |x: f64| (-0.5 * x * x).exp(),
            -12.0,
            12.0,
            &cfg,
        )
        .unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(r.abs_error < 1e-9);
    }

    #[test]
    fn adapts_to_kinks_and_peaks() {
        let cfg = QuadratureConfig::with_abs_tol(1e-11);
        let r = integrate(|x: f64| x.abs().sqrt(), -1.0, 4.0, &cfg).unwrap();
        assert!((r.value - (2.0 / 3.0) * (1.0 + 8.0)).abs() < 1e-10);
        let narrow = |x: f64| (-(x - 0.3).powi(2) / (2.0 * 1e-6)).exp();
        let r = integrate_with_breaks(narrow, &[-50.0, 0.29, 0.3, 0.31, 50.0], &cfg).unwrap();
        let want = (2.0 * std::f64::consts::PI * 1e-6).sqrt();
        assert!((r.value - want).abs() < 1e-10, "{} vs {want}", r.value);
    }

    #[test]
    fn rejects_infinite_limits() {
        let cfg = QuadratureConfig::default();
        assert!(integrate(|x: f64| x, 0.0, f64::INFINITY, &cfg).is_err());
    }

    #[test]
    fn gauss_legendre_weights() {
        for n in [1usize, 2, 5, 16, 33, 64] {
            let (x, w) = gauss_legendre::<f64>(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}");
            // exact for degree 2n-1
            let deg = 2 * n - 2;
            let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((m - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let cfg = QuadratureConfig::<f32>::default();
        let r = integrate(|x: f32| x.cos(), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - 1.0f32.sin()).abs() < 1e-5);
    }
}

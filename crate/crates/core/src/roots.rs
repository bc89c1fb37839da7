//! Scalar root finding and one-dimensional optimisation.

use crate::{Error, Real, Result};

/// Brent's method on a bracket `[a, b]` where `f(a)` and `f(b)` differ in sign.
///
/// Terminates when the bracket is narrower than `2 * (xtol + 4 eps |x|)`.
pub fn brent<T, F>(mut f: F, mut a: T, mut b: T, xtol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::Root(format!(
            "interval [{a}, {b}] does not bracket a root (f = {fa}, {fb})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + half * xtol;
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::lit(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > T::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Root(format!("function is NaN at {b}")));
        }
    }
    Err(Error::Root(format!(
        "no convergence after {max_iter} iterations (last x = {b})"
    )))
}

/// Grows `[x0 - step, x0 + step]` geometrically until `f` changes sign across it.
///
/// `f` is expected to be increasing. Returns the bracket `(lo, hi)` with
/// `f(lo) < 0 <= f(hi)`.
pub fn expand_bracket<T, F>(mut f: F, x0: T, step: T, max_doublings: usize) -> Result<(T, T)>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let mut h = step.abs().max(T::epsilon() * (T::one() + x0.abs()));
    let mut lo = x0 - h;
    let mut hi = x0 + h;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..max_doublings {
        if flo < T::zero() && fhi >= T::zero() {
            return Ok((lo, hi));
        }
        h = h * T::lit(2.0);
        if flo >= T::zero() {
            hi = lo;
            fhi = flo;
            lo = lo - h;
            flo = f(lo);
        } else {
            lo = hi;
            flo = fhi;
            hi = hi + h;
            fhi = f(hi);
        }
        if !lo.is_finite() || !hi.is_finite() {
            break;
        }
    }
    Err(Error::Root(format!(
        "could not bracket a sign change around {x0}"
    )))
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<T, F>(mut f: F, mut a: T, mut b: T, xtol: T) -> (T, T)
where
    T: Real,
    F: FnMut(T) -> T,
{
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_simple_roots() {
        let r = brent(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        let r = brent(|x: f64| x.cos() - x, 0.0, 1.0, 1e-15, 100).unwrap();
        assert!((r - 0.739_085_133_215_160_6).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_non_bracket() {
        assert!(brent(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn brent_handles_steep_functions() {
        let r = brent(|x: f64| (x - 1e4).tanh() * 1e-3, -1e6, 1e6, 1e-10, 500).unwrap();
        assert!((r - 1e4).abs() < 1e-8);
    }

    #[test]
    fn bracket_expansion_moves_both_ways() {
        let (lo, hi) = expand_bracket(|x: f64| x - 1000.0, 0.0, 1.0, 64).unwrap();
        assert!(lo < 1000.0 && hi >= 1000.0);
        let (lo, hi) = expand_bracket(|x: f64| x + 77.0, 0.0, 0.5, 64).unwrap();
        assert!(lo < -77.0 && hi >= -77.0);
        assert!(expand_bracket(|_x: f64| 1.0, 0.0, 1.0, 20).is_err());
    }

    #[test]
    fn golden_section_locates_peak() {
        let (x, fx) = golden_max(|x: f64| -(x - 0.3).powi(2) + 2.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }
}

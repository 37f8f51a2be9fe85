//! Bracketing scan and bisection for scalar equations.

use crate::scalar::Scalar;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Stops when the bracket is narrower than `tol` or can no longer be split
/// in floating point. Returns `None` if the endpoints do not bracket a sign
/// change.
pub fn bisect<T: Scalar>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, tol: T) -> Option<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Some(lo);
    }
    if fhi == T::zero() {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    let half = T::lit(0.5);
    for _ in 0..400 {
        let mid = lo + (hi - lo) * half;
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let fmid = f(mid);
        if fmid == T::zero() {
            return Some(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Some(lo + (hi - lo) * half)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn exact_endpoint_root() {
        assert_eq!(bisect(|x: f64| x - 1.0, 1.0, 3.0, 1e-12), Some(1.0));
    }
}

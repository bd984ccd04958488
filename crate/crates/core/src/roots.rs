//! Safeguarded Newton iteration on a sign-changing bracket.

use crate::error::{domain, Result};

/// Finds a root of `f` inside `[lo, hi]`, where `f` returns the value and its
/// derivative. A Newton step is taken when it lands strictly inside the
/// current bracket and bisection is used otherwise, so convergence is
/// guaranteed once the endpoints have opposite signs.
pub(crate) fn newton_bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(domain(
            "newton_bisect",
            format!("no sign change on [{lo}, {hi}]: f = ({f_lo:e}, {f_hi:e})"),
        ));
    }
    // orient so that f(lo) < 0 < f(hi)
    if f_lo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let inside = newton.is_finite() && (newton - lo) * (newton - hi) < 0.0;
        let next = if inside { newton } else { 0.5 * (lo + hi) };
        let step = (next - x).abs();
        x = next;
        if step <= xtol || (hi - lo).abs() <= xtol {
            return Ok(x);
        }
    }
    Err(domain("newton_bisect", format!("no convergence after {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = newton_bisect(|x| (x * x - 2.0, 2.0 * x), 0.0, 5.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn survives_bad_derivative() {
        // derivative deliberately wrong; bisection fallback still converges
        let r = newton_bisect(|x| (x.powi(3) - 1.0, 1e-30), -3.0, 4.0, 1e-13, 500).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn requires_bracket() {
        assert!(newton_bisect(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 1e-12, 50).is_err());
    }
}

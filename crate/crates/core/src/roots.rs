//! Root finding for monotone scalar equations.
//!
//! Every equation the solvers need is of the form `g(x) = target` with `g`
//! continuous and strictly increasing on `[0, inf)`, so a bracket always
//! exists once `hi` is pushed far enough. Newton steps are taken when they
//! land strictly inside the current bracket, bisection otherwise.

use crate::error::{Error, Result};

/// Relative tolerance every root is certified against.
pub const TOL_ROOT: f64 = 1e-10;

/// Iteration cap, after which the solve reports [`Error::NumericalFailure`].
pub const MAX_ROOT_ITERS: usize = 200;

const MAX_BRACKET_DOUBLINGS: usize = 2000;

/// Solves `g(x) = target` for `x >= lo` where `g` is increasing and
/// `g(lo) <= target`. `g` returns `(value, derivative)`.
pub(crate) fn solve_increasing<G>(g: G, target: f64, lo: f64) -> Result<f64>
where
    G: Fn(f64) -> (f64, f64),
{
    if !target.is_finite() {
        return Err(Error::NumericalFailure(format!("non-finite target {target}")));
    }
    let (g_lo, _) = g(lo);
    if g_lo >= target {
        return Ok(lo);
    }

    let mut lo = lo;
    let mut hi = if lo > 0.0 { 2.0 * lo } else { 1.0 };
    let mut doublings = 0;
    loop {
        let (g_hi, _) = g(hi);
        if g_hi >= target {
            break;
        }
        if !g_hi.is_finite() || doublings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::NumericalFailure(format!(
                "could not bracket root for target {target}"
            )));
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ROOT_ITERS {
        let (value, slope) = g(x);
        let residual = value - target;
        if residual == 0.0 {
            return Ok(x);
        }
        if residual < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return certify(&g, x, target);
        }
        let newton = x - residual / slope;
        if slope > 0.0 && newton > lo && newton < hi {
            if (newton - x).abs() <= 2.0 * f64::EPSILON * x.abs() {
                return certify(&g, newton, target);
            }
            x = newton;
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    certify(&g, x, target)
}

fn certify<G>(g: &G, x: f64, target: f64) -> Result<f64>
where
    G: Fn(f64) -> (f64, f64),
{
    let (value, _) = g(x);
    if (value - target).abs() <= TOL_ROOT * target.abs().max(f64::MIN_POSITIVE) {
        Ok(x)
    } else {
        Err(Error::NumericalFailure(format!(
            "root residual {} exceeds tolerance at x = {x}",
            value - target
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let x = solve_increasing(|x| (x * x, 2.0 * x), 2.0, 0.0).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn target_below_start_returns_start() {
        assert_eq!(solve_increasing(|x| (x + 5.0, 1.0), 3.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn huge_and_tiny_targets() {
        let big = solve_increasing(|x| (x.powi(3), 3.0 * x * x), 1e30, 0.0).unwrap();
        assert!((big / 1e10 - 1.0).abs() < 1e-12);
        let small = solve_increasing(|x| (x.powi(3), 3.0 * x * x), 1e-30, 0.0).unwrap();
        assert!((small / 1e-10 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbracketable_target_fails() {
        let err = solve_increasing(|x| (1.0 - (-x).exp(), (-x).exp()), 2.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure(_)));
    }
}

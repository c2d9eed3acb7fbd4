//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Illinois (modified regula falsi) on a sign-changing bracket `a`, `b`
/// given as `(x, f(x))`. Stops when `|f| <= f_tol` or the bracket is
/// narrower than `x_tol`, returning the best point seen.
pub fn illinois(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: (f64, f64),
    b: (f64, f64),
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let ((mut xa, mut fa), (mut xb, mut fb)) = (a, b);
    if fa == 0.0 {
        return Ok(xa);
    }
    if fb == 0.0 {
        return Ok(xb);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter(format!(
            "no sign change on [{xa}, {xb}]"
        )));
    }
    let mut side = 0;
    let mut best = if fa.abs() < fb.abs() {
        (xa, fa)
    } else {
        (xb, fb)
    };
    for _ in 0..max_iter {
        if (xb - xa).abs() <= x_tol || best.1.abs() <= f_tol {
            break;
        }
        let mut x = (xa * fb - xb * fa) / (fb - fa);
        // Guard against stagnation at an endpoint.
        if !(x > xa.min(xb) && x < xa.max(xb)) {
            x = 0.5 * (xa + xb);
        }
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fb.signum() {
            xb = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            xa = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = illinois(f, (0.0, -2.0), (2.0, 6.0), 1e-14, 1e-15, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn requires_bracket() {
        assert!(illinois(Ok, (1.0, 1.0), (2.0, 2.0), 1e-9, 1e-9, 10).is_err());
    }
}

//! Bracketed scalar root finding for monotone functions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RootError {
    #[error("bracket [{lo}, {hi}] does not straddle a root (f(lo)={flo}, f(hi)={fhi})")]
    BracketFailure {
        lo: f64,
        hi: f64,
        flo: f64,
        fhi: f64,
    },
    #[error("root finder did not reach tolerance within {0} iterations")]
    NoConvergence(usize),
}

/// Brent's method on `[lo, hi]`. Stops when `|f| <= f_tol` or the bracket
/// width falls below `x_tol` (absolute).
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::BracketFailure {
            lo,
            hi,
            flo: fa,
            fhi: fb,
        });
    }
    // b is the best estimate, c the previous b, a the contrapoint.
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let m = 0.5 * (c - b);
        if fb.abs() <= f_tol || m.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // inverse quadratic interpolation / secant
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q / 2.0).abs() * 2.0) {
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
        b += if d.abs() > tol {
            d
        } else if m > 0.0 {
            tol
        } else {
            -tol
        };
        fb = f(b);
    }
    Err(RootError::NoConvergence(max_iter))
}

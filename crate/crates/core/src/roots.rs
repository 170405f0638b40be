//! Scalar root finding.

use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: fa.abs().min(fb.abs()),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
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
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: fb.abs(),
    })
}

/// Searches outward from `x0` in steps of `step` (both directions,
/// alternately) for a sign change of `f`, up to `max_steps` each way, and
/// refines it with [`brent`]. The bracket nearest `x0` wins.
pub fn nearest_root<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    step: f64,
    max_steps: usize,
    xtol: f64,
) -> Result<f64> {
    let f0 = f(x0);
    if f0 == 0.0 {
        return Ok(x0);
    }
    let (mut lo, mut flo) = (x0, f0);
    let (mut hi, mut fhi) = (x0, f0);
    for k in 1..=max_steps {
        let x = x0 + k as f64 * step;
        let fx = f(x);
        if fx.is_finite() && fhi.is_finite() && fx * fhi <= 0.0 {
            return brent(&mut f, hi, x, xtol, 200);
        }
        hi = x;
        fhi = fx;
        let x = x0 - k as f64 * step;
        let fx = f(x);
        if fx.is_finite() && flo.is_finite() && fx * flo <= 0.0 {
            return brent(&mut f, x, lo, xtol, 200);
        }
        lo = x;
        flo = fx;
    }
    Err(Error::NoConvergence {
        iterations: max_steps,
        residual: f0.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn nearest_root_prefers_close_bracket() {
        let r = nearest_root(|x: f64| x.sin(), 0.4, 0.1, 100, 1e-14).unwrap();
        assert!(r.abs() < 1e-13);
        let r = nearest_root(|x: f64| x.sin(), 2.9, 0.1, 100, 1e-14).unwrap();
        assert!((r - std::f64::consts::PI).abs() < 1e-13);
    }
}

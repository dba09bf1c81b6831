//! Bracketed scalar root finding and minimization.
//!
//! Every solver in this crate reduces to monotone one-dimensional equations,
//! so two primitives cover all of them: a safeguarded bisection (bisection
//! with false-position acceleration, the Illinois variant) for roots, and
//! Brent-style golden-section/parabolic descent for minima.

use crate::math;

/// Where a bracketed search gave up.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("no sign change on bracket [{lo}, {hi}] (f: {flo} .. {fhi})")]
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("root search did not converge on [{lo}, {hi}] after {iters} iterations")]
    NoConvergence { lo: f64, hi: f64, iters: usize },
}

/// Solve `f(x) = 0` on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite
/// signs (non-finite endpoint values are treated as signed infinities).
///
/// Bisection safeguarded with Illinois false-position steps; the bracket
/// never grows, so the result is always within `xtol` of a sign change or
/// has residual below `ftol`.
pub fn safeguarded_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if sign(flo) == sign(fhi) {
        return Err(RootError::NoBracket { lo, hi, flo, fhi });
    }
    // Illinois scaling state: which side was retained last.
    let mut side = 0i8;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let width = hi - lo;
        if width <= xtol || width <= f64::EPSILON * math::abs(mid) {
            return Ok(mid);
        }
        // False-position proposal when both endpoint values are finite.
        let mut x = if flo.is_finite() && fhi.is_finite() && fhi != flo {
            let p = (lo * fhi - hi * flo) / (fhi - flo);
            // Keep proposals strictly interior; fall back to bisection.
            if p > lo + 0.01 * width && p < hi - 0.01 * width {
                p
            } else {
                mid
            }
        } else {
            mid
        };
        if !x.is_finite() {
            x = mid;
        }
        let fx = f(x);
        if fx == 0.0 || (fx.is_finite() && math::abs(fx) <= ftol) {
            return Ok(x);
        }
        if sign(fx) == sign(flo) {
            lo = x;
            flo = fx;
            if side == -1 && fhi.is_finite() {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 && flo.is_finite() {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    // The bracket kept shrinking; return its midpoint with the iteration
    // count surfaced only if the interval is still wide.
    let mid = 0.5 * (lo + hi);
    if hi - lo <= xtol.max(1e-9 * (1.0 + math::abs(mid))) {
        Ok(mid)
    } else {
        Err(RootError::NoConvergence { lo, hi, iters: max_iter })
    }
}

#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Brent's minimization (golden section with parabolic interpolation) of a
/// unimodal `f` on `[a, b]`. Returns `(x_min, f(x_min))`.
pub fn brent_min<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1; // 2 - phi
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x = lo + GOLD * (hi - lo);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let m = 0.5 * (lo + hi);
        let tol1 = xtol * math::abs(x).max(1.0) + 1e-300;
        let tol2 = 2.0 * tol1;
        if math::abs(x - m) <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut use_golden = true;
        if math::abs(e) > tol1 {
            // Parabolic fit through (v, w, x).
            let r = (x - w) * (fx - fv);
            let q0 = (x - v) * (fx - fw);
            let mut p = (x - v) * q0 - (x - w) * r;
            let mut q = 2.0 * (q0 - r);
            if q > 0.0 {
                p = -p;
            }
            q = math::abs(q);
            let e_old = e;
            e = d;
            if math::abs(p) < math::abs(0.5 * q * e_old) && p > q * (lo - x) && p < q * (hi - x) {
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { hi - x } else { lo - x };
            d = GOLD * e;
        }
        let u = if math::abs(d) >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                hi = x;
            } else {
                lo = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Golden-section line minimization for strictly bracketed convex sections.
pub fn golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if b - a <= xtol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fc < fx && fc < fd {
        (c, fc)
    } else if fd < fx {
        (d, fd)
    } else {
        (x, fx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_cubic() {
        let r = safeguarded_root(|x| x * x * x - 0.5, 0.0, 1.0, 1e-14, 0.0, 200).unwrap();
        assert!((r - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn root_with_infinite_endpoint() {
        // f blows up at the right edge, as the cascade equations do.
        let f = |x: f64| if x >= 1.0 { f64::NEG_INFINITY } else { 1.0 - 0.5 / (1.0 - x) };
        let r = safeguarded_root(f, 0.0, 1.0, 1e-14, 0.0, 200).unwrap();
        assert!((r - 0.5).abs() < 1e-10);
    }

    #[test]
    fn no_bracket_reported() {
        let e = safeguarded_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0, 100).unwrap_err();
        assert!(matches!(e, RootError::NoBracket { .. }));
    }

    #[test]
    fn brent_min_quadratic() {
        let (x, fx) = brent_min(|x| (x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-12, 200);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 2.0).abs() < 1e-14);
    }

    #[test]
    fn golden_min_matches_brent() {
        let f = |x: f64| (x - 0.7).powi(4) + 0.1 * x;
        let (xg, _) = golden_min(f, 0.0, 1.0, 1e-12, 400);
        let (xb, _) = brent_min(f, 0.0, 1.0, 1e-12, 400);
        assert!((xg - xb).abs() < 1e-6);
    }
}

//! One-dimensional maximization of smooth periodic functions.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Maximizes `f` with period `hi − lo`: a uniform grid of `points` samples,
/// then golden-section refinement around the best sample. Returns the
/// maximizer reduced into `[lo, hi)` and the maximum.
pub fn periodic_max<F>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let period = hi - lo;
    let step = period / points as f64;
    let mut best = (lo, f(lo)?);
    for k in 1..points {
        let x = lo + k as f64 * step;
        let fx = f(x)?;
        if fx > best.1 {
            best = (x, fx);
        }
    }
    let refined = golden_max(&mut f, best.0 - step, best.0 + step, tol)?;
    let (x, fx) = if refined.1 > best.1 { refined } else { best };
    Ok((lo + (x - lo).rem_euclid(period), fx))
}

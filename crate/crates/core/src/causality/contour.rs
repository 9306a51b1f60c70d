//! Argument-principle location of zeros and poles of an analytic function.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

const NODES: usize = 128;
const STENCIL: usize = 16;

/// Zeros minus poles inside a disc, and the matching weighted sum of positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscCount {
    pub center: Complex64,
    pub radius: f64,
    /// `(1/2πi)∮ f'/f`, close to an integer when the contour is well resolved.
    pub count: f64,
    /// `(1/2πi)∮ (z − center) f'/f`: Σ zeros − Σ poles about the center.
    pub moment: Complex64,
}

impl DiscCount {
    pub fn integer_count(&self) -> Option<i64> {
        let r = self.count.round();
        ((self.count - r).abs() < 1e-3).then_some(r as i64)
    }

    /// Mean position of the enclosed singularities, if the count is nonzero.
    pub fn centroid(&self) -> Option<Complex64> {
        self.integer_count().filter(|&n| n != 0).map(|n| self.center + self.moment / n as f64)
    }
}

fn log_derivative<F: Fn(Complex64) -> Complex64>(f: &F, z: Complex64, h: f64) -> Complex64 {
    let mut d = Complex64::new(0.0, 0.0);
    for k in 0..STENCIL {
        let w = Complex64::from_polar(1.0, TAU * k as f64 / STENCIL as f64);
        d += f(z + h * w) / w;
    }
    d / (STENCIL as f64 * h) / f(z)
}

pub fn count_in_disc<F>(f: F, center: Complex64, radius: f64) -> Result<DiscCount>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("contour radius {radius}")));
    }
    let h = radius / 8.0;
    let mut count = Complex64::new(0.0, 0.0);
    let mut moment = Complex64::new(0.0, 0.0);
    for j in 0..NODES {
        let dz = Complex64::from_polar(radius, TAU * j as f64 / NODES as f64);
        let z = center + dz;
        let q = log_derivative(&f, z, h) * dz;
        if !q.is_finite() {
            return Err(Error::NoConvergence(format!("singular value on the contour at {z}")));
        }
        count += q;
        moment += dz * q;
    }
    Ok(DiscCount { center, radius, count: count.re / NODES as f64, moment: moment / NODES as f64 })
}

/// Shrinks the disc around `center` by factors of 4 until two successive
/// discs enclose a net count of exactly `expected` with agreeing centroids,
/// then returns that centroid.
pub fn locate_singularity<F>(
    f: F,
    center: Complex64,
    radius: f64,
    expected: i64,
    max_shrinks: usize,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut r = radius;
    let mut previous: Option<(f64, Complex64)> = None;
    for _ in 0..=max_shrinks {
        let disc = count_in_disc(&f, center, r)?;
        let current = if disc.integer_count() == Some(expected) { disc.centroid() } else { None };
        if let (Some((r_prev, a)), Some(b)) = (previous, current) {
            if (a - b).norm() <= 1e-6 * r_prev + 4.0 * f64::EPSILON * center.norm() {
                return Ok(b);
            }
        }
        previous = current.map(|c| (r, c));
        r /= 4.0;
    }
    Err(Error::NoConvergence(format!("no disc around {center} isolates a count of {expected}")))
}

//! Homogeneous-slab model: forward scattering and inversion of `(R, T)` to
//! an effective index `n` and impedance `z`, with `ε = n/z` and `μ = n·z`.
//!
//! Time convention `e^{−iωt}`; `T` is referenced to the exit face.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative bound on `|Re z|` below which the sign of `z` is not fixed by passivity.
pub const AMBIGUITY_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabParameters {
    pub kl: f64,
    pub n: Complex64,
    pub z: Complex64,
    /// `ε/μ = 1/z²`.
    pub eps_over_mu: Complex64,
    /// Branch index `m` in `n = (−i Log X + 2πm)/kL`.
    pub branch_index: i64,
    /// True when both signs of `z` reproduce the data (`Re z ≈ 0`).
    pub ambiguous: bool,
}

impl SlabParameters {
    fn new(kl: f64, n: Complex64, z: Complex64, branch_index: i64, ambiguous: bool) -> Self {
        Self { kl, n, z, eps_over_mu: 1.0 / (z * z), branch_index, ambiguous }
    }

    pub fn eps(&self) -> Complex64 {
        self.n / self.z
    }

    pub fn mu(&self) -> Complex64 {
        self.n * self.z
    }
}

/// `(R, T)` of a slab with index `n`, impedance `z` and vacuum phase thickness `kL`.
pub fn forward_slab(n: Complex64, z: Complex64, kl: f64) -> (Complex64, Complex64) {
    let phase = n * kl;
    let s = phase.sin();
    let t = 1.0 / (phase.cos() - 0.5 * I * (z + 1.0 / z) * s);
    let r = -0.5 * I * (z - 1.0 / z) * s * t;
    (r, t)
}

/// `z² = [(1 + R)² − T²] / [(1 − R)² − T²]`; analytic in `R` and `T`.
pub fn impedance_squared(refl: Complex64, trans: Complex64) -> Result<Complex64> {
    let num = (1.0 + refl) * (1.0 + refl) - trans * trans;
    let den = (1.0 - refl) * (1.0 - refl) - trans * trans;
    if den.norm() == 0.0 || num.norm() == 0.0 {
        return Err(Error::NoConvergence("impedance is zero or infinite".into()));
    }
    Ok(num / den)
}

fn index_for(z: Complex64, refl: Complex64, trans: Complex64, kl: f64) -> Result<Complex64> {
    let x = trans / (1.0 - refl * (z - 1.0) / (z + 1.0));
    if !x.is_finite() || x.norm() == 0.0 {
        return Err(Error::NoConvergence(format!("slab phase factor {x}")));
    }
    Ok(-I * x.ln() / kl)
}

/// Inverts `(R, T)` on branch `branch`.
pub fn slab_retrieval(refl: Complex64, trans: Complex64, kl: f64, branch: i64) -> Result<SlabParameters> {
    if !(kl.is_finite() && kl > 0.0) {
        return Err(Error::InvalidParameter(format!("slab thickness kL must be positive, got {kl}")));
    }
    if trans.norm() == 0.0 {
        return Err(Error::NoConvergence("no transmitted field".into()));
    }
    let mut z = impedance_squared(refl, trans)?.sqrt();
    if z.re < 0.0 {
        z = -z;
    }
    let shift = 2.0 * PI * branch as f64 / kl;
    let mut n = index_for(z, refl, trans, kl)? + shift;
    let ambiguous = z.re.abs() <= AMBIGUITY_TOL * z.norm();
    if ambiguous {
        // Smallest |Im n| wins; an exact tie goes to Im n ≥ 0.
        let n_alt = index_for(-z, refl, trans, kl)? + shift;
        let tie = (n_alt.im.abs() - n.im.abs()).abs() <= AMBIGUITY_TOL * n.norm().max(1.0);
        if (tie && n.im < 0.0 && n_alt.im >= 0.0) || (!tie && n_alt.im.abs() < n.im.abs()) {
            z = -z;
            n = n_alt;
        }
    }

    let (r_fw, t_fw) = forward_slab(n, z, kl);
    let scale = 1.0f64.max(refl.norm()).max(trans.norm());
    let residual = (r_fw - refl).norm().max((t_fw - trans).norm());
    if !(residual <= RESIDUAL_TOL * scale) {
        return Err(Error::NoConvergence(format!("forward residual {residual:e}")));
    }
    Ok(SlabParameters::new(kl, n, z, branch, ambiguous))
}

/// Retrieval along a frequency sweep, choosing the branch that keeps `Re n`
/// continuous with the previous point.
#[derive(Debug, Clone)]
pub struct SlabTracker {
    kl: f64,
    branch: i64,
    prev_re_n: Option<f64>,
}

impl SlabTracker {
    pub fn new(kl: f64, initial_branch: i64) -> Self {
        Self { kl, branch: initial_branch, prev_re_n: None }
    }

    pub fn branch(&self) -> i64 {
        self.branch
    }

    pub fn retrieve(&mut self, refl: Complex64, trans: Complex64) -> Result<SlabParameters> {
        let base = slab_retrieval(refl, trans, self.kl, 0)?;
        let branch = match self.prev_re_n {
            Some(prev) => ((prev - base.n.re) * self.kl / (2.0 * PI)).round() as i64,
            None => self.branch,
        };
        let shift = 2.0 * PI * branch as f64 / self.kl;
        let out = SlabParameters { n: base.n + shift, branch_index: branch, ..base };
        self.branch = branch;
        self.prev_re_n = Some(out.n.re);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn recovers_known_slab() {
        let (r, t) = forward_slab(c(2.0, 0.1), c(0.8, 0.0), 1.3);
        let s = slab_retrieval(r, t, 1.3, 0).unwrap();
        assert!((s.n - c(2.0, 0.1)).norm() < 1e-12, "{}", s.n);
        assert!((s.z - c(0.8, 0.0)).norm() < 1e-12, "{}", s.z);
        assert!(!s.ambiguous);
        assert!((s.eps_over_mu - 1.0 / 0.64).norm() < 1e-11);
    }

    #[test]
    fn vacuum_slab() {
        let kl = 0.9;
        let (r, t) = forward_slab(c(1.0, 0.0), c(1.0, 0.0), kl);
        assert!(r.norm() < 1e-15);
        assert!((t - Complex64::from_polar(1.0, kl)).norm() < 1e-15);
        let s = slab_retrieval(r, t, kl, 0).unwrap();
        assert!((s.n - 1.0).norm() < 1e-12);
        assert!((s.z - 1.0).norm() < 1e-12);
    }

    #[test]
    fn higher_branch_recovered() {
        let kl = 1.0;
        let n = c(4.0, 0.05);
        let (r, t) = forward_slab(n, c(1.3, 0.1), kl);
        let s = slab_retrieval(r, t, kl, 1).unwrap();
        assert!((s.n - n).norm() < 1e-10, "{}", s.n);
    }

    #[test]
    fn imaginary_impedance_flags_ambiguity() {
        let kl = 0.7;
        let (r, t) = forward_slab(c(0.0, 0.4), c(0.0, 0.5), kl);
        let s = slab_retrieval(r, t, kl, 0).unwrap();
        assert!(s.ambiguous);
        assert!(s.n.im >= 0.0);
    }

    #[test]
    fn zero_transmission_fails() {
        let e = slab_retrieval(c(-1.0, 0.0), c(0.0, 0.0), 1.0, 0).unwrap_err();
        assert!(matches!(e, Error::NoConvergence(_)));
    }

    #[test]
    fn tracker_follows_branch() {
        let kl = 1.0;
        let mut tracker = SlabTracker::new(kl, 0);
        let mut prev = None::<f64>;
        for k in 0..60 {
            let n = c(1.0 + 0.1 * k as f64, 0.02);
            let (r, t) = forward_slab(n, c(1.1, 0.0), kl);
            let s = tracker.retrieve(r, t).unwrap();
            assert!((s.n - n).norm() < 1e-9, "k={k} got {}", s.n);
            if let Some(p) = prev {
                assert!((s.n.re - p).abs() < 0.2);
            }
            prev = Some(s.n.re);
        }
        assert!(tracker.branch() >= 1);
    }

    proptest! {
        #[test]
        fn round_trip(
            nre in 0.5f64..2.5,
            nim in 0.0f64..0.5,
            zre in 0.2f64..3.0,
            zim in -0.5f64..0.5,
            kl in 0.6f64..1.2,
        ) {
            let n = c(nre, nim);
            let z = c(zre, zim);
            let (r, t) = forward_slab(n, z, kl);
            let s = slab_retrieval(r, t, kl, 0).unwrap();
            prop_assert!((s.n - n).norm() < 1e-8 * (1.0 + n.norm()), "{} vs {}", s.n, n);
            prop_assert!((s.z - z).norm() < 1e-8 * (1.0 + z.norm()), "{} vs {}", s.z, z);
        }
    }
}

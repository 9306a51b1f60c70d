//! Location and classification of the response nonanalyticities.

pub mod contour;
pub mod kernel;
pub mod roots;

use num_complex::Complex64;

use crate::error::Result;
use crate::params::{Sidedness, SystemParams};
use crate::response::{
    eps_over_mu_complex, impedance_squared, reference_transmission, response_coefficient_complex, TransmissionReference,
};

pub use contour::{count_in_disc, locate_singularity, DiscCount};
pub use kernel::{kernel_check, kernel_check_fn, KernelCheck, KernelWindow};
pub use roots::{
    causality_verdict, numerator_cubic, perturbative_gcrt, perturbative_gcrt_gamma_c, solve_roots, ComplexRootSet,
    Cubic, RootLabel, Verdict,
};

const MAX_SHRINKS: usize = 16;

/// Roots whose ε/μ poles can be isolated numerically. At the near-cavity
/// zero the response denominator nearly cancels the numerator
/// (`D = (u + 2iΔ)N + i|g|²u` with `u = κ − i(Δ + Δp)`), so that pole has a
/// Laurent coefficient of order `|g|⁸` and is swamped by rounding.
pub const RESOLVABLE_LABELS: [RootLabel; 2] = [RootLabel::NearPlusOmega, RootLabel::NearMinusOmega];

fn isolation_radius(roots: &[Complex64; 3], k: usize) -> f64 {
    let nearest = (0..3).filter(|&j| j != k).map(|j| (roots[j] - roots[k]).norm()).fold(f64::INFINITY, f64::min);
    0.25 * nearest.min(1.0)
}

/// Locates the double pole of `f` next to the numerator zero `label`,
/// independently of the cubic solver's value for it.
fn double_pole<F>(params: &SystemParams, label: RootLabel, f: F) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let roots = solve_roots(params, None)?.roots;
    let k = label as usize;
    locate_singularity(&f, roots[k], isolation_radius(&roots, k), -2, MAX_SHRINKS)
}

fn nan_on_error(v: Result<Complex64>) -> Complex64 {
    v.unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// Pole of the closed-form ε/μ at slab thickness `kl` next to root `label`.
pub fn eps_over_mu_pole(params: &SystemParams, kl: f64, label: RootLabel) -> Result<Complex64> {
    double_pole(params, label, |dp| nan_on_error(eps_over_mu_complex(params, dp, kl)))
}

/// `1/z²` retrieved from the continued reflected and transmitted fields.
pub fn retrieved_eps_over_mu(params: &SystemParams, dp: Complex64, kl: f64) -> Result<Complex64> {
    let c = response_coefficient_complex(params, dp)?;
    let trans = match params.sidedness() {
        Sidedness::TwoSided => c,
        Sidedness::SingleSided => Complex64::new(0.0, 0.0),
    };
    let t = reference_transmission(c - 1.0, trans, kl, TransmissionReference::Transmitted);
    Ok(1.0 / impedance_squared(c - 1.0, t)?)
}

/// Resolvable singularities of the slab-retrieved ε/μ at thickness `kl`.
pub fn retrieved_singularities(params: &SystemParams, kl: f64) -> Result<Vec<Complex64>> {
    RESOLVABLE_LABELS
        .iter()
        .map(|&label| double_pole(params, label, |dp| nan_on_error(retrieved_eps_over_mu(params, dp, kl))))
        .collect()
}

/// Noncausal iff any singularity lies strictly in the upper half plane.
pub fn verdict_from_singularities(points: &[Complex64]) -> Verdict {
    if points.iter().any(|p| p.im > 0.0) {
        Verdict::Noncausal
    } else {
        Verdict::Causal
    }
}

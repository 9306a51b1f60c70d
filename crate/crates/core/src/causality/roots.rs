//! Zeros of the response numerator: the nonanalyticities of ε/μ and n.

use std::fmt;

use nalgebra::{Matrix3, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{SystemParams, OMEGA_M};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Half-width of the band around `Im = 0` reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-12;
/// Root residual tolerance relative to the largest coefficient.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Coefficients `(a₃, a₂, a₁, a₀)` of `a₃Δp³ + a₂Δp² + a₁Δp + a₀`.
pub type Cubic = [Complex64; 4];

/// Expanded numerator `[κ − i(Δ + Δp)](Δp² − ωm² + iγmΔp) − iωm|g|²`.
pub fn numerator_cubic(params: &SystemParams) -> Cubic {
    let a = Complex64::new(params.kappa(), -params.delta());
    let gm = params.gamma_m();
    let w2 = OMEGA_M * OMEGA_M;
    let g2 = params.g_mag() * params.g_mag();
    [-I, a + gm, I * gm * a - I * (-w2), -a * w2 - I * OMEGA_M * g2]
}

pub fn eval_cubic(c: &Cubic, x: Complex64) -> Complex64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn eval_derivative(c: &Cubic, x: Complex64) -> Complex64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

/// Eigenvalues of the companion matrix, each refined by one Newton step.
pub fn cubic_roots(c: &Cubic) -> Result<[Complex64; 3]> {
    if c[0].norm() == 0.0 {
        return Err(Error::InvalidParameter("leading cubic coefficient is zero".into()));
    }
    let p2 = c[1] / c[0];
    let p1 = c[2] / c[0];
    let p0 = c[3] / c[0];
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let companion = Matrix3::new(
        -p2, -p1, -p0, //
        one, zero, zero, //
        zero, one, zero,
    );
    let eig = Schur::try_new(companion, 1e-15, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::NoConvergence("companion Schur decomposition".into()))?;
    let mut roots = [eig[0], eig[1], eig[2]];
    for r in roots.iter_mut() {
        let d = eval_derivative(c, *r);
        if d.norm() > 0.0 {
            let step = eval_cubic(c, *r) / d;
            if step.is_finite() {
                *r -= step;
            }
        }
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootLabel {
    NearPlusOmega,
    NearMinusOmega,
    NearCavity,
}

impl RootLabel {
    pub const ALL: [RootLabel; 3] = [RootLabel::NearPlusOmega, RootLabel::NearMinusOmega, RootLabel::NearCavity];
}

/// The three numerator zeros, stored in [`RootLabel::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRootSet {
    pub roots: [Complex64; 3],
    pub labels: [RootLabel; 3],
    pub residuals: [f64; 3],
    pub max_imag: f64,
}

impl ComplexRootSet {
    pub fn get(&self, label: RootLabel) -> Complex64 {
        self.roots[label as usize]
    }

    pub fn is_marginal(&self) -> bool {
        self.max_imag.abs() < MARGINAL_BAND
    }
}

/// Roots at `|g| = 0`: `±√(ωm² − γm²/4) − iγm/2` and `−Δ − iκ`.
pub fn decoupled_roots(params: &SystemParams) -> [Complex64; 3] {
    let gm = params.gamma_m();
    let w = (OMEGA_M * OMEGA_M - gm * gm / 4.0).sqrt();
    [Complex64::new(w, -gm / 2.0), Complex64::new(-w, -gm / 2.0), Complex64::new(-params.delta(), -params.kappa())]
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Orders `roots` so that slot k is the root closest to `reference[k]`,
/// minimizing the total distance over all assignments.
fn match_to(roots: [Complex64; 3], reference: &[Complex64; 3]) -> [Complex64; 3] {
    let cost = |p: &[usize; 3]| (0..3).map(|k| (roots[p[k]] - reference[k]).norm()).sum::<f64>();
    let best = PERMUTATIONS.iter().min_by(|a, b| cost(a).total_cmp(&cost(b))).expect("nonempty");
    [roots[best[0]], roots[best[1]], roots[best[2]]]
}

pub fn solve_roots(params: &SystemParams, previous: Option<&ComplexRootSet>) -> Result<ComplexRootSet> {
    let c = numerator_cubic(params);
    let raw = cubic_roots(&c)?;
    let reference = match previous {
        Some(p) => p.roots,
        None => decoupled_roots(params),
    };
    let roots = match_to(raw, &reference);
    let scale = c.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let tolerance = RESIDUAL_TOL * scale;
    let residuals = roots.map(|r| eval_cubic(&c, r).norm());
    if let Some(&residual) = residuals.iter().find(|&&r| !(r < tolerance)) {
        return Err(Error::IllConditioned { residual, tolerance });
    }
    let max_imag = roots.iter().map(|r| r.im).fold(f64::NEG_INFINITY, f64::max);
    Ok(ComplexRootSet { roots, labels: RootLabel::ALL, residuals, max_imag })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Causal,
    Noncausal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Causal => "causal",
            Verdict::Noncausal => "noncausal",
        })
    }
}

/// Noncausal iff some root lies strictly in the upper half plane.
pub fn causality_verdict(roots: &ComplexRootSet) -> Verdict {
    if roots.max_imag > 0.0 {
        Verdict::Noncausal
    } else {
        Verdict::Causal
    }
}

/// `2√(γm/κ)·ωm`.
pub fn perturbative_gcrt(params: &SystemParams) -> f64 {
    2.0 * (params.gamma_m() / params.kappa()).sqrt() * OMEGA_M
}

/// `2√(γm/γc)·ωm`, the variant written in terms of the per-mirror rate.
pub fn perturbative_gcrt_gamma_c(params: &SystemParams) -> f64 {
    2.0 * (params.gamma_m() / params.gamma_c()).sqrt() * OMEGA_M
}

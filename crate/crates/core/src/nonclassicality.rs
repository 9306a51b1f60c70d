//! Single-mode nonclassicality through a balanced beam splitter: the
//! logarithmic negativity of the two output ports.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::periodic_max;
use crate::steady::{symplectic_form, uncertainty_margin, SingleModeMoments};

/// E_N below this is reported as exactly zero.
pub const EN_FLOOR: f64 = 1e-12;
const PHI_GRID: usize = 64;
const PHI_TOL: f64 = 1e-10;

/// Covariance of `(x₁, p₁, x₂, p₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCovariance {
    v: Matrix4<f64>,
}

impl TwoModeCovariance {
    pub fn new(v: Matrix4<f64>) -> Result<Self> {
        let asym = (v - v.transpose()).abs().max();
        if !(asym <= 1e-12 * v.abs().max().max(1.0)) {
            return Err(Error::UnphysicalCovariance(format!("asymmetry {asym:e}")));
        }
        let v = (v + v.transpose()) * 0.5;
        let margin = uncertainty_margin(&v);
        if margin < -1e-10 * v.abs().max().max(1.0) {
            return Err(Error::UnphysicalCovariance(format!("uncertainty bound violated by {margin:e}")));
        }
        Ok(Self { v })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.v
    }

    fn block(&self, r: usize, c: usize) -> Matrix2<f64> {
        self.v.fixed_view::<2, 2>(r, c).into_owned()
    }

    pub fn v_m(&self) -> Matrix2<f64> {
        self.block(0, 0)
    }

    pub fn v_c(&self) -> Matrix2<f64> {
        self.block(2, 2)
    }

    pub fn v_mc(&self) -> Matrix2<f64> {
        self.block(0, 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonclassicalityResult {
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub e_n: f64,
    pub phi_opt: f64,
    pub dgcz: bool,
}

pub fn phase_rotate(m: &SingleModeMoments, phi: f64) -> SingleModeMoments {
    SingleModeMoments { a_sq: m.a_sq * Complex64::from_polar(1.0, 2.0 * phi), ..*m }
}

/// Mixes the mode with vacuum on a balanced splitter. With `s = ⟨a²⟩e^{2iφ}`
/// each port has x-variance `½ + (n + Re s)/2`, p-variance `½ + (n − Re s)/2`
/// and xp-covariance `Im s / 2`; the cross block is the same minus `½`.
pub fn beamsplit_covariance(m: &SingleModeMoments, phi: f64) -> Result<TwoModeCovariance> {
    let checked = SingleModeMoments::new(m.a_sq, m.n_occ)?;
    let s = phase_rotate(&checked, phi).a_sq;
    let n = checked.n_occ;
    let cross = Matrix2::new((n + s.re) / 2.0, s.im / 2.0, s.im / 2.0, (n - s.re) / 2.0);
    let port = cross + Matrix2::identity() * 0.5;
    let mut v = Matrix4::zeros();
    v.fixed_view_mut::<2, 2>(0, 0).copy_from(&port);
    v.fixed_view_mut::<2, 2>(2, 2).copy_from(&port);
    v.fixed_view_mut::<2, 2>(0, 2).copy_from(&cross);
    v.fixed_view_mut::<2, 2>(2, 0).copy_from(&cross.transpose());
    TwoModeCovariance::new(v)
}

/// `σ = det V_m + det V_c − 2 det V_mc` and `det V`.
pub fn seralian(v: &TwoModeCovariance) -> (f64, f64) {
    (v.v_m().determinant() + v.v_c().determinant() - 2.0 * v.v_mc().determinant(), v.v.determinant())
}

/// `η± = (1/√2)(σ ± √(σ² − 4 det V))^{1/2}` evaluated literally.
pub fn symplectic_eigs_closed_form(v: &TwoModeCovariance) -> Result<(f64, f64)> {
    let (sigma, det) = seralian(v);
    let mut disc = sigma * sigma - 4.0 * det;
    if disc < 0.0 {
        if disc < -1e-10 * sigma * sigma {
            return Err(Error::NegativeDiscriminant(disc));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let lo = ((sigma - root).max(0.0) / 2.0).sqrt();
    let hi = ((sigma + root) / 2.0).sqrt();
    Ok((lo, hi))
}

/// Partial-transpose symplectic eigenvalues `(η₋, η₊)`.
///
/// Same quantities as [`symplectic_eigs_closed_form`], computed as the
/// singular values of `Lᵀ Ω L` with `L Lᵀ` the Cholesky factorization of the
/// partially transposed covariance. This keeps full precision near the
/// vacuum, where the closed form loses half its digits to cancellation.
pub fn symplectic_eigs(v: &TwoModeCovariance) -> Result<(f64, f64)> {
    // Validates the discriminant with the literal expression.
    symplectic_eigs_closed_form(v)?;
    let flip = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
    let pt = flip * v.v * flip;
    let chol = pt
        .cholesky()
        .ok_or_else(|| Error::UnphysicalCovariance("partial transpose is not positive definite".into()))?;
    let l = chol.l();
    let m = l.transpose() * symplectic_form() * l;
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(f64::total_cmp);
    // Singular values of the antisymmetric matrix come in equal pairs.
    Ok(((s[0] + s[1]) / 2.0, (s[2] + s[3]) / 2.0))
}

/// `max(0, −ln(2η₋))`.
pub fn log_negativity(eta_minus: f64) -> Result<f64> {
    if !(eta_minus > 0.0) {
        return Err(Error::NonPositiveEta(eta_minus));
    }
    Ok((-(2.0 * eta_minus).ln()).max(0.0))
}

fn clamp(e_n: f64) -> f64 {
    if e_n < EN_FLOOR {
        0.0
    } else {
        e_n
    }
}

/// E_N at a fixed splitter phase.
pub fn e_n_at(m: &SingleModeMoments, phi: f64) -> Result<(f64, f64, f64)> {
    let (lo, hi) = symplectic_eigs(&beamsplit_covariance(m, phi)?)?;
    Ok((lo, hi, log_negativity(lo)?))
}

/// E_N maximized over the splitter phase `φ ∈ [0, π)`.
pub fn measure_nonclassicality(m: &SingleModeMoments) -> Result<NonclassicalityResult> {
    SingleModeMoments::new(m.a_sq, m.n_occ)?;
    // The raw −ln(2η₋) is maximized so that the search sees a slope even
    // where E_N itself is clamped at zero.
    let (phi_opt, _) = periodic_max(
        |phi| {
            let (lo, _) = symplectic_eigs(&beamsplit_covariance(m, phi)?)?;
            Ok(-(2.0 * lo).ln())
        },
        0.0,
        PI,
        PHI_GRID,
        PHI_TOL,
    )?;
    let (eta_minus, eta_plus, e_n) = e_n_at(m, phi_opt)?;
    Ok(NonclassicalityResult { eta_minus, eta_plus, e_n: clamp(e_n), phi_opt, dgcz: m.dgcz_margin() > 0.0 })
}

//! Classical linear response of the cavity to a weak probe.
//!
//! The probe response coefficient is normalized so that the mirror coupling
//! and the density of states drop out: `C₊ = 2γc · N(Δp) / D(Δp)` with
//!
//! ```text
//! N(Δp) = [κ − i(Δ + Δp)](Δp² − ωm² + iγmΔp) − iωm|g|²
//! D(Δp) = [(κ − iΔp)² + Δ²](Δp² − ωm² + iγmΔp) + 2ωmΔ|g|²
//! ```
//!
//! An empty, matched two-sided cavity probed on resonance has `C₊ = 1`.

pub mod slab;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Sidedness, SystemParams, OMEGA_M};

pub use slab::{forward_slab, impedance_squared, slab_retrieval, SlabParameters, SlabTracker};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Mechanical susceptibility factor `Δp² − ωm² + iγmΔp`.
fn mechanical_factor(params: &SystemParams, dp: Complex64) -> Complex64 {
    dp * dp - OMEGA_M * OMEGA_M + I * params.gamma_m() * dp
}

/// Numerator `N(Δp)` of the response coefficient, evaluated in product form.
pub fn response_numerator(params: &SystemParams, dp: Complex64) -> Complex64 {
    let g2 = params.g_mag() * params.g_mag();
    (params.kappa() - I * (params.delta() + dp)) * mechanical_factor(params, dp) - I * OMEGA_M * g2
}

/// Denominator `D(Δp)` of the response coefficient.
pub fn response_denominator(params: &SystemParams, dp: Complex64) -> Complex64 {
    let g2 = params.g_mag() * params.g_mag();
    let cav = params.kappa() - I * dp;
    (cav * cav + params.delta() * params.delta()) * mechanical_factor(params, dp) + 2.0 * OMEGA_M * params.delta() * g2
}

/// `C₊` at a complex probe detuning (analytic continuation of the real response).
pub fn response_coefficient_complex(params: &SystemParams, dp: Complex64) -> Result<Complex64> {
    let den = response_denominator(params, dp);
    if den.norm() == 0.0 {
        return Err(Error::DenominatorZero(dp.re));
    }
    let c = 2.0 * params.gamma_c() * response_numerator(params, dp) / den;
    if !c.is_finite() {
        return Err(Error::DenominatorZero(dp.re));
    }
    Ok(c)
}

/// Normalized probe response `C₊(Δp)` at a real probe detuning.
pub fn response_coefficient(params: &SystemParams, delta_p: f64) -> Result<Complex64> {
    response_coefficient_complex(params, Complex64::new(delta_p, 0.0))
}

/// Reflected and transmitted amplitudes, both relative to the incident probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResponse {
    pub delta_p: f64,
    pub c_plus_norm: Complex64,
    pub refl: Complex64,
    pub trans: Complex64,
}

pub fn reflect_transmit(params: &SystemParams, delta_p: f64) -> Result<ProbeResponse> {
    let c = response_coefficient(params, delta_p)?;
    let trans = match params.sidedness() {
        Sidedness::TwoSided => c,
        Sidedness::SingleSided => Complex64::new(0.0, 0.0),
    };
    Ok(ProbeResponse { delta_p, c_plus_norm: c, refl: c - 1.0, trans })
}

/// Which field enters the transmitted-side term of the ε/μ relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransmissionReference {
    /// `T̃ = T e^{ikL}`: the transmitted field, moved to the exit plane.
    #[default]
    Transmitted,
    /// `T̃ = R e^{ikL}`: the literal variant that reuses the reflected field.
    Reflected,
}

/// `T̃` for the given convention.
pub fn reference_transmission(
    refl: Complex64,
    trans: Complex64,
    kl: f64,
    reference: TransmissionReference,
) -> Complex64 {
    let phase = Complex64::from_polar(1.0, kl);
    match reference {
        TransmissionReference::Transmitted => trans * phase,
        TransmissionReference::Reflected => refl * phase,
    }
}

/// ε/μ from field amplitudes: `[−(R − 1)² + T̃²] / [(R + 1)² − T̃²]`.
pub fn eps_over_mu_from_fields(
    refl: Complex64,
    trans: Complex64,
    kl: f64,
    reference: TransmissionReference,
) -> Result<Complex64> {
    let t = reference_transmission(refl, trans, kl, reference);
    let den = (refl + 1.0) * (refl + 1.0) - t * t;
    if den.norm() == 0.0 {
        return Err(Error::PerfectMirror);
    }
    Ok((-(refl - 1.0) * (refl - 1.0) + t * t) / den)
}

fn eps_over_mu_from_c(c: Complex64, kl: f64) -> Result<Complex64> {
    let e2 = Complex64::from_polar(1.0, 2.0 * kl);
    let one_minus = 1.0 - e2;
    if one_minus.norm() < 1e-14 {
        return Err(Error::DegenerateSlabPhase);
    }
    if c.norm() == 0.0 {
        return Err(Error::PerfectMirror);
    }
    let c2 = c * c;
    Ok((-(c - 2.0) * (c - 2.0) + c2 * e2) / (c2 * one_minus))
}

/// ε/μ of the two-sided cavity in closed form,
/// `[−(C₊ − 2)² + C₊² e^{2ikL}] / [C₊² (1 − e^{2ikL})]`.
pub fn eps_over_mu(params: &SystemParams, delta_p: f64, kl: f64) -> Result<Complex64> {
    eps_over_mu_from_c(response_coefficient(params, delta_p)?, kl)
}

/// Analytic continuation of [`eps_over_mu`] to complex Δp.
pub fn eps_over_mu_complex(params: &SystemParams, dp: Complex64, kl: f64) -> Result<Complex64> {
    eps_over_mu_from_c(response_coefficient_complex(params, dp)?, kl)
}

/// One row of a probe-detuning sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseRow {
    pub delta_p: f64,
    pub c_plus: Complex64,
    pub refl: Complex64,
    pub trans: Complex64,
    pub eps_over_mu: Option<Complex64>,
    pub n: Option<Complex64>,
    pub z: Option<Complex64>,
}

impl ResponseRow {
    pub const CSV_HEADER: &'static str = "delta_p,re_c_plus,im_c_plus,re_refl,im_refl,re_trans,im_trans,\
re_eps_over_mu,im_eps_over_mu,re_n,im_n,re_z,im_z";
}

/// Evaluates the response along a probe grid. The slab index and impedance
/// are tracked for continuity of the branch of Re n along the grid.
pub fn response_sweep(
    params: &SystemParams,
    delta_ps: &[f64],
    kl: f64,
    reference: TransmissionReference,
) -> Result<Vec<ResponseRow>> {
    let mut tracker = SlabTracker::new(kl, 0);
    delta_ps
        .iter()
        .map(|&dp| {
            let r = reflect_transmit(params, dp)?;
            let eps_over_mu = eps_over_mu_from_fields(r.refl, r.trans, kl, reference).ok();
            let slab = match params.sidedness() {
                Sidedness::TwoSided => {
                    let t = reference_transmission(r.refl, r.trans, kl, TransmissionReference::Transmitted);
                    tracker.retrieve(r.refl, t).ok()
                }
                Sidedness::SingleSided => None,
            };
            Ok(ResponseRow {
                delta_p: dp,
                c_plus: r.c_plus_norm,
                refl: r.refl,
                trans: r.trans,
                eps_over_mu,
                n: slab.map(|s| s.n),
                z: slab.map(|s| s.z),
            })
        })
        .collect()
}

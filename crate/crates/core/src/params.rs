//! Physical parameters of the optomechanical cavity.
//!
//! Every frequency and rate is dimensionless, measured in units of the
//! mechanical resonance frequency, which is therefore exactly 1.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Mechanical resonance frequency. The unit of every other rate.
pub const OMEGA_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// Two semitransparent mirrors; total damping is twice the per-mirror rate.
    TwoSided,
    /// One semitransparent mirror; no transmitted wave.
    SingleSided,
}

impl Sidedness {
    pub fn total_damping(self, gamma_c: f64) -> f64 {
        match self {
            Sidedness::TwoSided => 2.0 * gamma_c,
            Sidedness::SingleSided => gamma_c,
        }
    }
}

impl std::str::FromStr for Sidedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "two-sided" | "twosided" | "two" | "double" => Ok(Sidedness::TwoSided),
            "single-sided" | "singlesided" | "single" | "one" => Ok(Sidedness::SingleSided),
            other => Err(Error::InvalidParameter(format!("unknown sidedness {other:?}"))),
        }
    }
}

/// Raw, unvalidated parameter values as they appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub gamma_m: f64,
    pub gamma_c: f64,
    pub sidedness: Sidedness,
    pub delta: f64,
    #[serde(default)]
    pub g_mag: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_c_override: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub thermal_phonons: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Default for RawParams {
    /// The experimental regime used throughout: γm = 1e-6, γc = 0.1, two-sided, Δ = +1.
    fn default() -> Self {
        RawParams {
            gamma_m: 1e-6,
            gamma_c: 0.1,
            sidedness: Sidedness::TwoSided,
            delta: 1.0,
            g_mag: 0.0,
            theta: 0.0,
            kappa_c_override: None,
            thermal_phonons: 0.0,
        }
    }
}

/// Validated system parameters.
///
/// The coupling is stored as magnitude and phase, `g = |g| e^{iθ}`, with θ
/// reduced to `[0, 2π)`. The total cavity damping `kappa` is derived from the
/// per-mirror rate and the mirror configuration and cannot be set directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    gamma_m: f64,
    gamma_c: f64,
    sidedness: Sidedness,
    kappa: f64,
    delta: f64,
    g_mag: f64,
    theta: f64,
    kappa_c_override: Option<f64>,
    thermal_phonons: f64,
}

impl SystemParams {
    pub fn new(raw: RawParams) -> Result<Self> {
        check_finite("gamma_m", raw.gamma_m)?;
        check_finite("gamma_c", raw.gamma_c)?;
        check_finite("delta", raw.delta)?;
        check_finite("g_mag", raw.g_mag)?;
        check_finite("theta", raw.theta)?;
        check_finite("thermal_phonons", raw.thermal_phonons)?;
        if raw.gamma_m <= 0.0 {
            return Err(Error::NonPositiveRate { name: "gamma_m", value: raw.gamma_m });
        }
        if raw.gamma_c <= 0.0 {
            return Err(Error::NonPositiveRate { name: "gamma_c", value: raw.gamma_c });
        }
        if raw.g_mag < 0.0 {
            return Err(Error::NegativeCoupling(raw.g_mag));
        }
        if let Some(k) = raw.kappa_c_override {
            check_finite("kappa_c_override", k)?;
            if k <= 0.0 {
                return Err(Error::NonPositiveRate { name: "kappa_c_override", value: k });
            }
        }
        if raw.thermal_phonons < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "thermal_phonons must be nonnegative, got {}",
                raw.thermal_phonons
            )));
        }
        let theta = raw.theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        let theta = if theta >= TAU { 0.0 } else { theta };
        Ok(SystemParams {
            gamma_m: raw.gamma_m,
            gamma_c: raw.gamma_c,
            sidedness: raw.sidedness,
            kappa: raw.sidedness.total_damping(raw.gamma_c),
            delta: raw.delta,
            g_mag: raw.g_mag,
            theta,
            kappa_c_override: raw.kappa_c_override,
            thermal_phonons: raw.thermal_phonons,
        })
    }

    pub fn omega_m(&self) -> f64 {
        OMEGA_M
    }
    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }
    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }
    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }
    /// Total cavity damping.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    /// Effective detuning Δ.
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn g_mag(&self) -> f64 {
        self.g_mag
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    /// Re g.
    pub fn g_re(&self) -> f64 {
        self.g_mag * self.theta.cos()
    }
    /// Im g.
    pub fn g_im(&self) -> f64 {
        self.g_mag * self.theta.sin()
    }
    pub fn kappa_c_override(&self) -> Option<f64> {
        self.kappa_c_override
    }
    /// Cavity damping used by the quantum drift and diffusion matrices.
    pub fn kappa_c(&self) -> f64 {
        self.kappa_c_override.unwrap_or(self.kappa)
    }
    /// Mean thermal phonon number of the mechanical bath (zero by default).
    pub fn thermal_phonons(&self) -> f64 {
        self.thermal_phonons
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            gamma_m: self.gamma_m,
            gamma_c: self.gamma_c,
            sidedness: self.sidedness,
            delta: self.delta,
            g_mag: self.g_mag,
            theta: self.theta,
            kappa_c_override: self.kappa_c_override,
            thermal_phonons: self.thermal_phonons,
        }
    }

    pub fn with_coupling(&self, g_mag: f64) -> Result<Self> {
        SystemParams::new(RawParams { g_mag, ..self.raw() })
    }

    pub fn with_phase(&self, theta: f64) -> Result<Self> {
        SystemParams::new(RawParams { theta, ..self.raw() })
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        SystemParams::new(RawParams { delta, ..self.raw() })
    }

    pub fn with_gamma_m(&self, gamma_m: f64) -> Result<Self> {
        SystemParams::new(RawParams { gamma_m, ..self.raw() })
    }

    pub fn with_sidedness(&self, sidedness: Sidedness) -> Result<Self> {
        SystemParams::new(RawParams { sidedness, ..self.raw() })
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams::new(RawParams::default()).expect("default parameters are valid")
    }
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SystemParams::new(raw)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        p.raw()
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value })
    }
}

/// Validates raw values into [`SystemParams`].
pub fn make_params(raw: RawParams) -> Result<SystemParams> {
    SystemParams::new(raw)
}

/// Couplings at which the linearized dynamics loses stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityThresholds {
    /// `√(|Δ| ωm / 2)`, the red-detuned (Δ > 0) threshold.
    pub g_pt_plus: f64,
    /// `√(γm κ)`, the blue-detuned (Δ < 0) threshold.
    pub g_pt_minus: f64,
    /// Whether `g_pt_plus` applies to the sign of Δ. When false it is informational only.
    pub plus_applies: bool,
    /// Whether `g_pt_minus` applies to the sign of Δ.
    pub minus_applies: bool,
}

impl StabilityThresholds {
    /// The threshold relevant to the sign of Δ, if any (Δ = 0 has neither).
    pub fn applicable(&self) -> Option<f64> {
        if self.plus_applies {
            Some(self.g_pt_plus)
        } else if self.minus_applies {
            Some(self.g_pt_minus)
        } else {
            None
        }
    }
}

pub(crate) fn thresholds_from_rates(omega_m: f64, delta: f64, gamma_m: f64, kappa: f64) -> StabilityThresholds {
    StabilityThresholds {
        g_pt_plus: (delta.abs() * omega_m / 2.0).sqrt(),
        g_pt_minus: (gamma_m * kappa).sqrt(),
        plus_applies: delta > 0.0,
        minus_applies: delta < 0.0,
    }
}

pub fn pt_thresholds(params: &SystemParams) -> StabilityThresholds {
    thresholds_from_rates(OMEGA_M, params.delta(), params.gamma_m(), params.kappa())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(gamma_m: f64, gamma_c: f64, sidedness: Sidedness, delta: f64, g: f64) -> RawParams {
        RawParams { gamma_m, gamma_c, sidedness, delta, g_mag: g, ..RawParams::default() }
    }

    #[test]
    fn experimental_point_is_valid() {
        let p = make_params(raw(1e-6, 0.1, Sidedness::TwoSided, 1.0, 4e-3)).unwrap();
        assert_eq!(p.kappa(), 0.2);
        assert_eq!(p.omega_m(), 1.0);
        assert_eq!(p.g_re(), 4e-3);
        assert_eq!(p.g_im(), 0.0);
    }

    #[test]
    fn single_sided_damping() {
        let p = make_params(raw(1e-6, 0.1, Sidedness::SingleSided, 1.0, 0.0)).unwrap();
        assert_eq!(p.kappa(), 0.1);
    }

    #[test]
    fn rejects_bad_rates() {
        let e = make_params(raw(1e-6, -0.1, Sidedness::TwoSided, 1.0, 0.0)).unwrap_err();
        assert!(matches!(e, Error::NonPositiveRate { name: "gamma_c", .. }));
        let e = make_params(raw(0.0, 0.1, Sidedness::TwoSided, 1.0, 0.0)).unwrap_err();
        assert!(matches!(e, Error::NonPositiveRate { name: "gamma_m", .. }));
        let e = make_params(raw(1e-6, 0.1, Sidedness::TwoSided, 1.0, -1e-3)).unwrap_err();
        assert_eq!(e, Error::NegativeCoupling(-1e-3));
        let e = make_params(raw(f64::NAN, 0.1, Sidedness::TwoSided, 1.0, 0.0)).unwrap_err();
        assert!(matches!(e, Error::NonFinite { .. }));
    }

    #[test]
    fn phase_is_reduced() {
        let p = make_params(RawParams { theta: -std::f64::consts::FRAC_PI_2, ..RawParams::default() }).unwrap();
        assert!((p.theta() - 1.5 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn thresholds_at_experimental_point() {
        let p = make_params(raw(1e-6, 0.1, Sidedness::TwoSided, 1.0, 0.0)).unwrap();
        let t = pt_thresholds(&p);
        assert!((t.g_pt_plus - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert!(t.plus_applies && !t.minus_applies);
        assert_eq!(t.applicable(), Some(t.g_pt_plus));

        let t = pt_thresholds(&p.with_delta(-1.0).unwrap());
        assert!((t.g_pt_minus - 4.472e-4).abs() < 1e-6);
        assert!(t.minus_applies && !t.plus_applies);
    }

    #[test]
    fn minus_threshold_vanishes_with_mechanical_damping() {
        let small = thresholds_from_rates(1.0, -1.0, 1e-300, 0.2);
        assert!(small.g_pt_minus < 1e-149);
    }

    #[test]
    fn config_rejects_invalid_values() {
        let text = "gamma_m = 1e-6\ngamma_c = 0.0\nsidedness = \"two-sided\"\ndelta = 1.0\n";
        assert!(toml::from_str::<SystemParams>(text).is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip_is_exact(
            gamma_m in 1e-9f64..1.0,
            gamma_c in 1e-6f64..10.0,
            two in any::<bool>(),
            delta in -5.0f64..5.0,
            g in 0.0f64..1.0,
            theta in 0.0f64..6.2,
        ) {
            let side = if two { Sidedness::TwoSided } else { Sidedness::SingleSided };
            let p = make_params(RawParams { theta, ..raw(gamma_m, gamma_c, side, delta, g) }).unwrap();
            let json = serde_json::to_string(&p).unwrap();
            let back: SystemParams = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(p, back);
            let text = toml::to_string(&p).unwrap();
            let back: SystemParams = toml::from_str(&text).unwrap();
            prop_assert_eq!(p, back);
        }

        #[test]
        fn thresholds_scale_with_the_unit(
            delta in 0.01f64..5.0,
            gamma_m in 1e-9f64..1e-2,
            kappa in 1e-3f64..2.0,
        ) {
            // Rates expressed in units of 2ωm are all halved.
            let t1 = thresholds_from_rates(1.0, delta, gamma_m, kappa);
            let t2 = thresholds_from_rates(0.5, delta / 2.0, gamma_m / 2.0, kappa / 2.0);
            prop_assert!((t2.g_pt_plus - t1.g_pt_plus / 2.0).abs() <= 1e-15 * t1.g_pt_plus);
            prop_assert!((t2.g_pt_minus - t1.g_pt_minus / 2.0).abs() <= 1e-15 * t1.g_pt_minus);
        }
    }
}

//! Numerical time-domain check of causality.
//!
//! `G(τ) = ∫ f(Δp) e^{−iΔpτ} dΔp` over a tapered window, integrated with a
//! Filon rule (piecewise-linear `f`, exact oscillatory factor) on a mesh
//! refined around the known singularities. A causal `f` gives `G(τ) ≈ 0`
//! for `τ < 0`.
//!
//! For the cavity the transformed function is `1/N(Δp)`, the reciprocal
//! response numerator: it carries exactly the singularities of ε/μ and `n`
//! and decays as `Δp⁻³`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::roots::{solve_roots, Verdict};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::response::response_numerator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelWindow {
    /// Window `|Δp| ≤ half_width`.
    pub half_width: f64,
    /// Uniform background samples across the window (even).
    pub samples: usize,
    /// Tukey taper fraction.
    pub taper_alpha: f64,
    pub threshold: f64,
    /// Number of `|τ|` samples on each side of `τ = 0`.
    pub tau_points: usize,
}

impl KernelWindow {
    pub fn for_params(params: &SystemParams) -> Self {
        Self { half_width: 8.0 * params.delta().abs().max(params.omega_m()), ..Self::default() }
    }

    /// Leakage is measured only for `τ < −guard`; shorter delays are
    /// dominated by the spread of the taper itself.
    pub fn guard(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.taper_alpha * self.half_width)
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel half width {}", self.half_width)));
        }
        if self.samples < 4 || !self.samples.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "kernel sample count must be even and at least 4, got {}",
                self.samples
            )));
        }
        if !(self.taper_alpha > 0.0 && self.taper_alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("taper fraction {}", self.taper_alpha)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter(format!("leakage threshold {}", self.threshold)));
        }
        if self.tau_points < 2 {
            return Err(Error::InvalidParameter("need at least 2 delay samples".into()));
        }
        Ok(())
    }
}

impl Default for KernelWindow {
    fn default() -> Self {
        Self { half_width: 8.0, samples: 1 << 14, taper_alpha: 0.1, threshold: 5e-2, tau_points: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub tau_grid: Vec<f64>,
    pub kernel: Vec<Complex64>,
    pub precausal_leakage: f64,
    pub verdict: Verdict,
}

impl KernelCheck {
    pub const CSV_HEADER: &'static str = "tau,re_g,im_g";
}

pub fn tukey(x: f64, half_width: f64, alpha: f64) -> f64 {
    let t = (x + half_width) / (2.0 * half_width);
    let edge = |u: f64| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * u / alpha).cos());
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else if t < alpha / 2.0 {
        edge(t)
    } else if t > 1.0 - alpha / 2.0 {
        edge(1.0 - t)
    } else {
        1.0
    }
}

fn mesh(window: &KernelWindow, hints: &[Complex64]) -> Vec<f64> {
    let w = window.half_width;
    let n = window.samples;
    let h = 2.0 * w / (n - 1) as f64;
    let mut pts: Vec<f64> = (0..n).map(|k| -w + k as f64 * h).collect();
    for r in hints {
        let (x, y) = (r.re, r.im.abs());
        if y == 0.0 {
            continue;
        }
        pts.extend((0..21).map(|k| x - y + 2.0 * y * k as f64 / 20.0));
        let mut d = y;
        while d < 4.0 * h {
            pts.push(x + d);
            pts.push(x - d);
            d *= 1.05;
        }
    }
    pts.retain(|p| (-w..=w).contains(p));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * w);
    pts
}

/// `∫₀^h e^{zs/h} ds` and `∫₀^h s e^{zs/h} ds` for `z = −iτh`.
fn panel_weights(z: Complex64, h: f64) -> (Complex64, Complex64) {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        let i0 = 1.0 + z / 2.0 + z2 / 6.0 + z2 * z / 24.0 + z2 * z2 / 120.0;
        let i1 = 0.5 + z / 3.0 + z2 / 8.0 + z2 * z / 30.0 + z2 * z2 / 144.0;
        (h * i0, h * h * i1)
    } else {
        let e = z.exp();
        (h * (e - 1.0) / z, h * h * ((z - 1.0) * e + 1.0) / (z * z))
    }
}

fn filon(x: &[f64], f: &[Complex64], tau: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..x.len() - 1 {
        let h = x[j + 1] - x[j];
        let (i0, i1) = panel_weights(Complex64::new(0.0, -tau * h), h);
        let slope = (f[j + 1] - f[j]) / h;
        acc += Complex64::from_polar(1.0, -x[j] * tau) * (f[j] * i0 + slope * i1);
    }
    acc
}

fn tau_grid(window: &KernelWindow, hints: &[Complex64]) -> Vec<f64> {
    let min_width = hints.iter().map(|r| r.im.abs()).fold(f64::INFINITY, f64::min).max(1e-9);
    let lo = 1e-2f64;
    let hi = (10.0 / min_width).max(10.0 * window.guard()).min(1e12);
    let n = window.tau_points;
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let pos: Vec<f64> = (0..n).map(|k| lo * (ratio * k as f64).exp()).collect();
    let mut taus: Vec<f64> = pos.iter().rev().map(|t| -t).collect();
    taus.push(0.0);
    taus.extend(pos);
    taus
}

/// Kernel check of an arbitrary response `f` whose singularities are `hints`.
pub fn kernel_check_fn<F>(f: F, hints: &[Complex64], window: &KernelWindow) -> Result<KernelCheck>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    window.validate()?;
    let w = window.half_width;
    for r in hints {
        let linewidths = (w - r.re.abs()) / r.im.abs();
        if r.re.abs() >= w || linewidths < 3.0 {
            return Err(Error::WindowTooNarrow { location: r.to_string(), linewidths });
        }
    }
    let x = mesh(window, hints);
    let values: Vec<Complex64> = x.iter().map(|&p| f(p) * tukey(p, w, window.taper_alpha)).collect();
    let tau_grid = tau_grid(window, hints);
    let kernel: Vec<Complex64> = {
        use rayon::prelude::*;
        tau_grid.par_iter().map(|&t| filon(&x, &values, t)).collect()
    };
    let peak = kernel.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let guard = window.guard();
    let pre = tau_grid.iter().zip(&kernel).filter(|(t, _)| **t < -guard).map(|(_, g)| g.norm()).fold(0.0, f64::max);
    let precausal_leakage = if peak > 0.0 { (pre / peak).clamp(0.0, 1.0) } else { 0.0 };
    let verdict = if precausal_leakage > window.threshold { Verdict::Noncausal } else { Verdict::Causal };
    Ok(KernelCheck { tau_grid, kernel, precausal_leakage, verdict })
}

/// Kernel check of the cavity response singularities.
pub fn kernel_check(params: &SystemParams, window: &KernelWindow) -> Result<KernelCheck> {
    let roots = solve_roots(params, None)?;
    kernel_check_fn(|dp| 1.0 / response_numerator(params, Complex64::new(dp, 0.0)), &roots.roots, window)
}

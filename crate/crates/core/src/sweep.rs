//! Coupling sweeps, critical-coupling bisection and report artifacts.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causality::{
    causality_verdict, perturbative_gcrt, perturbative_gcrt_gamma_c, solve_roots, ComplexRootSet, Verdict,
};
use crate::error::{Error, Result};
use crate::nonclassicality::measure_nonclassicality;
use crate::optimize::periodic_max;
use crate::params::SystemParams;
use crate::steady::{build_drift, stability_check, steady_state};

pub const SCHEMA_VERSION: u32 = 1;
/// E_N above this counts as nonclassical.
pub const ONSET_THRESHOLD: f64 = 1e-10;
pub const BISECTION_TOL: f64 = 1e-6;
const THETA_GRID: usize = 16;
const THETA_TOL: f64 = 1e-8;
/// Fraction of the instability onset used to cap an unstable bracket.
const STABLE_MARGIN: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn fig2() -> Self {
        Self { min: 0.0, max: 0.01, points: 101 }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min < 0.0 {
            return Err(Error::InvalidParameter(format!("grid bounds [{}, {}]", self.min, self.max)));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        if self.max <= self.min {
            return Err(Error::UnsortedGrid);
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        Ok((0..self.points).map(|k| if k + 1 == self.points { self.max } else { self.min + k as f64 * step }).collect())
    }
}

/// Quantum column of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumPoint {
    pub stable: bool,
    pub max_real_eig: f64,
    /// `None` at unstable points.
    pub e_n: Option<f64>,
    pub dgcz: Option<bool>,
    pub theta_opt: f64,
    pub phi_opt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub g: f64,
    pub theta_opt: f64,
    pub roots: ComplexRootSet,
    pub max_imag: f64,
    pub verdict: Verdict,
    pub marginal: bool,
    pub e_n: Option<f64>,
    pub dgcz: Option<bool>,
    pub stable: bool,
    pub max_real_eig: f64,
}

/// Unclamped `−ln(2η₋)` at coupling phase `theta`, or `None` if unstable there.
fn raw_negativity(params: &SystemParams) -> Result<Option<(f64, f64, bool, f64)>> {
    if !stability_check(&build_drift(params)).stable {
        return Ok(None);
    }
    let s = steady_state(params)?;
    let r = measure_nonclassicality(&s.output)?;
    Ok(Some((-(2.0 * r.eta_minus).ln(), r.e_n, r.dgcz, r.phi_opt)))
}

/// Stability, E_N and DGCZ at one coupling, optionally maximized over θ.
pub fn quantum_point(template: &SystemParams, g: f64, maximize_theta: bool) -> Result<QuantumPoint> {
    let base = template.with_coupling(g)?;
    let stability = stability_check(&build_drift(&base));
    if !stability.stable {
        return Ok(QuantumPoint {
            stable: false,
            max_real_eig: stability.max_real_eig,
            e_n: None,
            dgcz: None,
            theta_opt: base.theta(),
            phi_opt: None,
        });
    }
    let theta_opt = if maximize_theta && g > 0.0 {
        periodic_max(
            |theta| Ok(raw_negativity(&base.with_phase(theta)?)?.map_or(f64::NEG_INFINITY, |r| r.0)),
            0.0,
            TAU,
            THETA_GRID,
            THETA_TOL,
        )?
        .0
    } else {
        base.theta()
    };
    let at = base.with_phase(theta_opt)?;
    let (_, e_n, dgcz, phi_opt) = raw_negativity(&at)?.ok_or(Error::Unstable(stability.max_real_eig))?;
    Ok(QuantumPoint {
        stable: true,
        max_real_eig: stability.max_real_eig,
        e_n: Some(e_n),
        dgcz: Some(dgcz),
        theta_opt,
        phi_opt: Some(phi_opt),
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(g) = grid.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::InvalidParameter(format!("coupling grid value {g}")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

/// Root column with continuity tracking, in grid order.
pub fn root_sweep(template: &SystemParams, grid: &[f64]) -> Result<Vec<ComplexRootSet>> {
    check_grid(grid)?;
    let mut out: Vec<ComplexRootSet> = Vec::with_capacity(grid.len());
    for &g in grid {
        let set = solve_roots(&template.with_coupling(g)?, out.last())?;
        out.push(set);
    }
    Ok(out)
}

/// Classical and quantum columns over a strictly increasing coupling grid.
/// Quantum points run in parallel; results are collected in grid order, so
/// the output does not depend on the number of workers.
pub fn sweep_g(template: &SystemParams, grid: &[f64], maximize_theta: bool) -> Result<Vec<SweepRecord>> {
    let roots = root_sweep(template, grid)?;
    let quantum: Vec<QuantumPoint> =
        grid.par_iter().map(|&g| quantum_point(template, g, maximize_theta)).collect::<Result<_>>()?;
    Ok(grid
        .iter()
        .zip(roots)
        .zip(quantum)
        .map(|((&g, roots), q)| SweepRecord {
            g,
            theta_opt: q.theta_opt,
            max_imag: roots.max_imag,
            verdict: causality_verdict(&roots),
            marginal: roots.is_marginal(),
            roots,
            e_n: q.e_n,
            dgcz: q.dgcz,
            stable: q.stable,
            max_real_eig: q.max_real_eig,
        })
        .collect())
}

fn check_bracket(bracket: (f64, f64)) -> Result<()> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidBracket(format!("[{lo}, {hi}]")));
    }
    Ok(())
}

/// Bisection for the sign change of `f` on `[lo, hi]`. Values inside
/// `±band` count as zero and end the search.
fn bisect_sign<F>(mut f: F, bracket: (f64, f64), band: f64, quantity: &'static str, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = bracket;
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.abs() <= band {
        return Ok(lo);
    }
    if f_hi.abs() <= band {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { quantity, lo, hi });
    }
    let lo_sign = f_lo.signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.abs() <= band {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Coupling where the largest root imaginary part crosses zero.
pub fn find_critical_classical(template: &SystemParams, bracket: (f64, f64)) -> Result<f64> {
    check_bracket(bracket)?;
    bisect_sign(
        |g| Ok(solve_roots(&template.with_coupling(g)?, None)?.max_imag),
        bracket,
        crate::causality::roots::MARGINAL_BAND,
        "max_imag",
        BISECTION_TOL,
    )
}

/// Coupling where the largest real part of the drift eigenvalues crosses zero.
pub fn find_instability_onset(template: &SystemParams, bracket: (f64, f64)) -> Result<f64> {
    check_bracket(bracket)?;
    bisect_sign(
        |g| Ok(stability_check(&build_drift(&template.with_coupling(g)?)).max_real_eig),
        bracket,
        0.0,
        "max_real_eig",
        BISECTION_TOL,
    )
}

fn is_nonclassical(template: &SystemParams, g: f64) -> Result<Option<bool>> {
    let q = quantum_point(template, g, true)?;
    Ok(q.e_n.map(|e| e > ONSET_THRESHOLD))
}

/// Outcome of the E_N onset search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetSearch {
    pub onset: Option<f64>,
    /// Upper end actually searched; below the requested one when the
    /// requested end is unstable.
    pub searched_hi: f64,
    pub instability_onset: Option<f64>,
}

/// Smallest coupling with θ-maximized E_N above [`ONSET_THRESHOLD`]. An
/// unstable upper end is first pulled back inside the stable region; no
/// onset in the (stable part of the) bracket is reported as `None`.
pub fn find_critical_nonclassical(template: &SystemParams, bracket: (f64, f64)) -> Result<OnsetSearch> {
    check_bracket(bracket)?;
    let (lo, mut hi) = bracket;
    let mut instability_onset = None;
    if is_nonclassical(template, hi)?.is_none() {
        if is_nonclassical(template, lo)?.is_none() {
            return Err(Error::InvalidBracket(format!("lower end {lo} is unstable")));
        }
        let onset = find_instability_onset(template, (lo, hi))?;
        instability_onset = Some(onset);
        hi = lo + STABLE_MARGIN * (onset - lo);
        if is_nonclassical(template, hi)?.is_none() {
            return Err(Error::InvalidBracket(format!("no stable upper end below {onset}")));
        }
    }
    if is_nonclassical(template, lo)? == Some(true) {
        return Err(Error::InvalidBracket(format!("already nonclassical at the lower end {lo}")));
    }
    if is_nonclassical(template, hi)? != Some(true) {
        return Ok(OnsetSearch { onset: None, searched_hi: hi, instability_onset });
    }
    let onset = bisect_sign(
        |g| {
            Ok(match is_nonclassical(template, g)? {
                Some(true) => 1.0,
                _ => -1.0,
            })
        },
        (lo, hi),
        0.0,
        "nonclassicality indicator",
        BISECTION_TOL,
    )?;
    Ok(OnsetSearch { onset: Some(onset), searched_hi: hi, instability_onset })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub schema_version: u32,
    pub g_crt_cls: Option<f64>,
    pub g_crt_ncls: Option<f64>,
    /// Same value as `g_crt_ncls`.
    pub nonclassical_onset: Option<f64>,
    /// `2√(γm/κ)·ωm`.
    pub g_formula: f64,
    /// `2√(γm/γc)·ωm`.
    pub g_formula_gamma_c: f64,
    /// `g_crt_cls / g_crt_ncls`.
    pub ratio: Option<f64>,
    pub instability_onset: Option<f64>,
    pub bracket: (f64, f64),
    pub rwa_note: String,
    pub params: SystemParams,
}

fn rwa_note(ratio: Option<f64>) -> String {
    let head = "Counter-rotating terms are kept in the quantum model; a rotating-wave treatment \
                halves the effective coupling, so the same critical behaviour would appear at twice \
                the coupling (ratio 2 expected) rather than at equal couplings (ratio 1 expected).";
    match ratio {
        Some(r) => format!(
            "{head} Measured g_crt_cls/g_crt_ncls = {r:.6}; deviation from 1: {:.6}, from 2: {:.6}.",
            r - 1.0,
            r - 2.0
        ),
        None => format!("{head} No ratio: one of the critical couplings is absent in the bracket."),
    }
}

pub fn critical_report(template: &SystemParams, bracket: (f64, f64)) -> Result<CriticalReport> {
    let g_crt_cls = match find_critical_classical(template, bracket) {
        Ok(g) => Some(g),
        Err(Error::NoSignChange { .. }) => None,
        Err(e) => return Err(e),
    };
    let search = find_critical_nonclassical(template, bracket)?;
    let ratio = match (g_crt_cls, search.onset) {
        (Some(c), Some(n)) if n > 0.0 => Some(c / n),
        _ => None,
    };
    Ok(CriticalReport {
        schema_version: SCHEMA_VERSION,
        g_crt_cls,
        g_crt_ncls: search.onset,
        nonclassical_onset: search.onset,
        g_formula: perturbative_gcrt(template),
        g_formula_gamma_c: perturbative_gcrt_gamma_c(template),
        ratio,
        instability_onset: search.instability_onset,
        bracket,
        rwa_note: rwa_note(ratio),
        params: *template,
    })
}

/// Grid sweep plus both bisections.
pub fn fig2_report(template: &SystemParams, grid: &GridSpec) -> Result<(CriticalReport, Vec<SweepRecord>)> {
    let values = grid.values()?;
    let records = sweep_g(template, &values, true)?;
    let lo = values[0];
    let hi = *values.last().expect("nonempty");
    let report = critical_report(template, (lo, hi.max(lo + BISECTION_TOL)))?;
    Ok((report, records))
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), fmt_num)
}

fn fmt_bool(x: Option<bool>) -> String {
    x.map_or_else(|| "undefined".to_string(), |b| b.to_string())
}

pub const FIG2A_HEADER: &str = "g,re_root1,im_root1,re_root2,im_root2,re_root3,im_root3,max_imag,verdict";
pub const FIG2B_HEADER: &str = "g,theta_opt,e_n,dgcz,stable";
pub const SWEEP_HEADER: &str = "g,max_imag,verdict,marginal,stable,max_real_eig,theta_opt,e_n,dgcz";

pub fn fig2a_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{FIG2A_HEADER}\n");
    for r in records {
        let _ = write!(out, "{}", fmt_num(r.g));
        for z in r.roots.roots {
            let _ = write!(out, ",{},{}", fmt_num(z.re), fmt_num(z.im));
        }
        let _ = writeln!(out, ",{},{}", fmt_num(r.max_imag), r.verdict);
    }
    out
}

pub fn fig2b_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{FIG2B_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(r.g),
            fmt_num(r.theta_opt),
            fmt_opt(r.e_n),
            fmt_bool(r.dgcz),
            r.stable
        );
    }
    out
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(r.g),
            fmt_num(r.max_imag),
            r.verdict,
            r.marginal,
            r.stable,
            fmt_num(r.max_real_eig),
            fmt_num(r.theta_opt),
            fmt_opt(r.e_n),
            fmt_bool(r.dgcz)
        );
    }
    out
}

pub fn write_text(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_text(dir, name, &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{make_params, pt_thresholds, RawParams};

    fn params(delta: f64) -> SystemParams {
        make_params(RawParams { delta, ..RawParams::default() }).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert_eq!(sweep_g(&params(1.0), &[], false), Err(Error::EmptyGrid));
        assert_eq!(sweep_g(&params(1.0), &[0.0, 0.0], false), Err(Error::UnsortedGrid));
        assert_eq!(GridSpec { min: 0.0, max: 1.0, points: 0 }.values(), Err(Error::EmptyGrid));
        let g = GridSpec::fig2().values().unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[100], 0.01);
    }

    #[test]
    fn single_point_at_zero() {
        let r = sweep_g(&params(1.0), &[0.0], true).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].verdict, Verdict::Causal);
        assert_eq!(r[0].e_n, Some(0.0));
        assert_eq!(r[0].dgcz, Some(false));
        assert!(r[0].stable);
    }

    #[test]
    fn classical_crossing() {
        let g = find_critical_classical(&params(1.0), (0.0, 0.01)).unwrap();
        assert!((g - 4.4944e-3).abs() < 2e-6, "{g}");
        let four = params(1.0).with_gamma_m(4e-6).unwrap();
        let g4 = find_critical_classical(&four, (0.0, 0.05)).unwrap();
        assert!((g4 / g - 2.0).abs() < 2e-3, "{}", g4 / g);
        let minus = find_critical_classical(&params(-1.0), (0.0, 0.01)).unwrap();
        let t = pt_thresholds(&params(-1.0)).g_pt_minus;
        assert!((minus / t - 1.0).abs() < 0.1, "{minus} vs {t}");
    }

    #[test]
    fn no_sign_change_is_reported() {
        let e = find_critical_classical(&params(1.0), (0.0, 1e-3)).unwrap_err();
        assert!(matches!(e, Error::NoSignChange { .. }));
    }

    #[test]
    fn instability_onsets() {
        let minus = find_instability_onset(&params(-1.0), (0.0, 0.01)).unwrap();
        assert!((minus / 4.472e-4 - 1.0).abs() < 0.1, "{minus}");
        let plus = find_instability_onset(&params(1.0), (0.01, 2.0)).unwrap();
        assert!((plus / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.15, "{plus}");
    }

    #[test]
    fn red_detuned_onset_is_absent() {
        let s = find_critical_nonclassical(&params(-1.0), (0.0, 0.01)).unwrap();
        assert_eq!(s.onset, None);
        let inst = s.instability_onset.unwrap();
        assert!(s.searched_hi < inst);
    }

    #[test]
    fn csv_layout() {
        let r = sweep_g(&params(1.0), &[0.0, 0.005], false).unwrap();
        let a = fig2a_csv(&r);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], FIG2A_HEADER);
        assert_eq!(lines[1].split(',').count(), 9);
        assert!(lines[2].ends_with(",noncausal"));
        let b = fig2b_csv(&r);
        assert!(b.lines().nth(1).unwrap().starts_with("0.0000000000000000e0,"));
    }

    #[test]
    fn unstable_points_are_undefined() {
        let r = sweep_g(&params(-1.0), &[1e-3], false).unwrap();
        assert!(!r[0].stable);
        assert_eq!(r[0].e_n, None);
        assert!(fig2b_csv(&r).lines().nth(1).unwrap().contains(",undefined,undefined,false"));
    }

    #[test]
    fn blue_detuned_onset_matches_reference() {
        // Reference from a Bartels–Stewart Lyapunov solve (scipy), scanning
        // for |⟨a²⟩| > ⟨a†a⟩ in the output mode.
        let s = find_critical_nonclassical(&params(1.0), (0.0, 0.01)).unwrap();
        let onset = s.onset.unwrap();
        assert!((onset - 2.8908e-5).abs() < 1.5e-6, "{onset}");
        assert_eq!(s.instability_onset, None);
    }
}

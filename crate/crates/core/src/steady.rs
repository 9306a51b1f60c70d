//! Linearized quantum Langevin dynamics of the fluctuations
//! `(δq_m, δp_m, δX_c, δY_c)` and their steady-state covariance.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

pub const SCHEMA_VERSION: u32 = 1;
const PHYSICALITY_TOL: f64 = 1e-10;
const CONDITION_LIMIT: f64 = 1e8;

type Matrix16 = SMatrix<f64, 16, 16>;
type Vector16 = SVector<f64, 16>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    pub a: Matrix4<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix {
    pub d: Matrix4<f64>,
}

/// Symmetrized second moments; guaranteed symmetric and physical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCovariance {
    v: Matrix4<f64>,
}

/// Two-mode symplectic form `⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 1)] = 1.0;
    o[(1, 0)] = -1.0;
    o[(2, 3)] = 1.0;
    o[(3, 2)] = -1.0;
    o
}

/// Smallest eigenvalue of the Hermitian matrix `v + (i/2)Ω`.
pub fn uncertainty_margin(v: &Matrix4<f64>) -> f64 {
    let o = symplectic_form();
    let h = Matrix4::from_fn(|r, c| Complex64::new(v[(r, c)], 0.5 * o[(r, c)]));
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

impl StateCovariance {
    pub fn new(v: Matrix4<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::UnphysicalCovariance("non-finite entry".into()));
        }
        let asym = (v - v.transpose()).abs().max();
        if asym > 1e-12 * v.abs().max().max(1.0) {
            return Err(Error::UnphysicalCovariance(format!("asymmetry {asym:e}")));
        }
        let v = (v + v.transpose()) * 0.5;
        if let Some(k) = (0..4).find(|&k| v[(k, k)] < 0.0) {
            return Err(Error::UnphysicalCovariance(format!("negative variance v[{k}][{k}] = {}", v[(k, k)])));
        }
        let margin = uncertainty_margin(&v);
        if margin < -PHYSICALITY_TOL * v.abs().max().max(1.0) {
            return Err(Error::UnphysicalCovariance(format!("uncertainty bound violated by {margin:e}")));
        }
        Ok(Self { v })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    Cavity,
    Output,
    Given,
}

/// `⟨δa²⟩` and `⟨δa†δa⟩` of one zero-mean Gaussian mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleModeMoments {
    pub a_sq: Complex64,
    pub n_occ: f64,
    pub source: MomentSource,
}

impl SingleModeMoments {
    /// Checks `n ≥ 0` and `|⟨a²⟩|² ≤ n(n + 1)`.
    pub fn new(a_sq: Complex64, n_occ: f64) -> Result<Self> {
        if !a_sq.is_finite() || !n_occ.is_finite() {
            return Err(Error::NonFinite { name: "moments", value: n_occ });
        }
        let bound = n_occ * (n_occ + 1.0);
        let a_sq_norm_sqr = a_sq.norm_sqr();
        if n_occ < 0.0 || a_sq_norm_sqr > bound + PHYSICALITY_TOL * bound.max(1.0) {
            return Err(Error::UnphysicalMoments { a_sq_norm_sqr, bound });
        }
        Ok(Self { a_sq, n_occ, source: MomentSource::Given })
    }

    pub fn vacuum() -> Self {
        Self { a_sq: Complex64::new(0.0, 0.0), n_occ: 0.0, source: MomentSource::Given }
    }

    /// Squeezed vacuum with squeezing parameter `r` along the x quadrature.
    pub fn squeezed_vacuum(r: f64) -> Self {
        Self {
            a_sq: Complex64::new(-(2.0 * r).sinh() / 2.0, 0.0),
            n_occ: r.sinh().powi(2),
            source: MomentSource::Given,
        }
    }

    /// `|⟨a²⟩| − ⟨a†a⟩`; positive exactly for nonclassical Gaussian states.
    pub fn dgcz_margin(&self) -> f64 {
        self.a_sq.norm() - self.n_occ
    }
}

pub fn build_drift(params: &SystemParams) -> DriftMatrix {
    let wm = params.omega_m();
    let s2 = std::f64::consts::SQRT_2;
    let (gr, gi) = (params.g_re(), params.g_im());
    let k = params.kappa_c();
    let dl = params.delta();
    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0,          wm,                0.0,     0.0,
        -wm,          -params.gamma_m(), s2 * gr, s2 * gi,
        -s2 * gi,     0.0,               -k,      dl,
        s2 * gr,      0.0,               -dl,     -k,
    );
    DriftMatrix { a }
}

pub fn build_diffusion(params: &SystemParams) -> DiffusionMatrix {
    let k = params.kappa_c();
    let mech = params.gamma_m() * (2.0 * params.thermal_phonons() + 1.0);
    DiffusionMatrix { d: Matrix4::from_diagonal(&nalgebra::Vector4::new(0.0, mech, k, k)) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub max_real_eig: f64,
}

pub fn stability_check(a: &DriftMatrix) -> StabilityReport {
    let max_real_eig = a.a.complex_eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    StabilityReport { stable: max_real_eig < 0.0, max_real_eig }
}

fn require_stable(a: &DriftMatrix) -> Result<()> {
    let s = stability_check(a);
    if s.stable {
        Ok(())
    } else {
        Err(Error::Unstable(s.max_real_eig))
    }
}

fn vec_of(m: &Matrix4<f64>) -> Vector16 {
    Vector16::from_iterator(m.iter().cloned())
}

fn mat_of(v: &Vector16) -> Matrix4<f64> {
    Matrix4::from_iterator(v.iter().cloned())
}

/// Frobenius norm of `A·V + V·Aᵀ + D`.
pub fn lyapunov_residual(a: &DriftMatrix, d: &DiffusionMatrix, v: &Matrix4<f64>) -> f64 {
    (a.a * v + v * a.a.transpose() + d.d).norm()
}

/// Solves `A·V + V·Aᵀ + D = 0` through the Kronecker form with iterative
/// refinement; no physicality check.
///
/// The unknown is the deviation `W = V − I/2` from the vacuum, which keeps
/// the small moments of weakly driven states at full absolute precision.
pub fn solve_lyapunov(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<Matrix4<f64>> {
    require_stable(a)?;
    let eye = Matrix4::<f64>::identity();
    let v0 = eye * 0.5;
    let k: Matrix16 = eye.kronecker(&a.a) + a.a.kronecker(&eye);
    let lu = k.lu();
    let rhs = -vec_of(&(a.a * v0 + v0 * a.a.transpose() + d.d));
    let mut x = lu.solve(&rhs).ok_or(Error::Unstable(stability_check(a).max_real_eig))?;
    for _ in 0..3 {
        let r = rhs - k * x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    let w = mat_of(&x);
    let v = v0 + (w + w.transpose()) * 0.5;
    let residual = lyapunov_residual(a, d, &v);
    let scale = d.d.norm().max(f64::MIN_POSITIVE);
    if residual > 1e-12 * scale {
        log::warn!("Lyapunov residual {residual:e} exceeds 1e-12 of the diffusion norm");
    }
    Ok(v)
}

pub fn lyapunov_steady(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<StateCovariance> {
    StateCovariance::new(solve_lyapunov(a, d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentRoute {
    Eigen,
    LyapunovFallback,
}

/// Right singular vectors of `m` for its `count` smallest singular values.
fn null_vectors(m: &Matrix4<Complex64>, count: usize) -> Vec<nalgebra::Vector4<Complex64>> {
    let svd = m.svd_unordered(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    order[..count].iter().map(|&k| v_t.row(k).transpose().map(|z| z.conj())).collect()
}

fn condition_number(m: &Matrix4<Complex64>) -> f64 {
    let s = m.singular_values_unordered();
    let (lo, hi) = (s.min(), s.max());
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `V = ∫₀^∞ e^{As} D e^{Aᵀs} ds` through `A = P Λ P⁻¹`:
/// `V = P [(P⁻¹ D P⁻ᵀ)_{mn} / −(λ_m + λ_n)] Pᵀ`; no physicality check.
pub fn solve_integral(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<Matrix4<f64>> {
    require_stable(a)?;
    let ac = a.a.map(|x| Complex64::new(x, 0.0));
    let lambda = a.a.complex_eigenvalues();
    // Numerically equal eigenvalues share one eigenspace computation, so a
    // semisimple repeated eigenvalue still yields independent vectors.
    let tol = 1e-10 * a.a.norm().max(1.0);
    let mut p = Matrix4::<Complex64>::zeros();
    let mut done = [false; 4];
    for k in 0..4 {
        if done[k] {
            continue;
        }
        let group: Vec<usize> = (k..4).filter(|&j| !done[j] && (lambda[j] - lambda[k]).norm() <= tol).collect();
        let shifted = ac - Matrix4::identity() * lambda[k];
        for (&j, v) in group.iter().zip(null_vectors(&shifted, group.len())) {
            if (shifted * v).norm() > 1e-8 * a.a.norm().max(1.0) {
                // Missing eigenvector: the eigenvalue is defective.
                return Err(Error::DefectiveMatrix(f64::INFINITY));
            }
            p.set_column(j, &v);
            done[j] = true;
        }
    }
    let cond = condition_number(&p);
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::DefectiveMatrix(cond));
    }
    let p_inv = p.try_inverse().ok_or(Error::DefectiveMatrix(f64::INFINITY))?;
    let dc = d.d.map(|x| Complex64::new(x, 0.0));
    let mut w = p_inv * dc * p_inv.transpose();
    for m in 0..4 {
        for n in 0..4 {
            w[(m, n)] /= -(lambda[m] + lambda[n]);
        }
    }
    let v = (p * w * p.transpose()).map(|z| z.re);
    Ok((v + v.transpose()) * 0.5)
}

pub fn integral_moments_eigen(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<StateCovariance> {
    StateCovariance::new(solve_integral(a, d)?)
}

/// [`integral_moments_eigen`], falling back to the Lyapunov solver when the
/// eigenvectors are too ill-conditioned.
pub fn integral_moments(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<(StateCovariance, MomentRoute)> {
    match integral_moments_eigen(a, d) {
        Ok(v) => Ok((v, MomentRoute::Eigen)),
        Err(Error::DefectiveMatrix(cond)) => {
            log::warn!("drift eigenvectors ill-conditioned ({cond:e}); using the Lyapunov solver");
            Ok((lyapunov_steady(a, d)?, MomentRoute::LyapunovFallback))
        }
        Err(e) => Err(e),
    }
}

/// Relative Frobenius distance between two matrices.
pub fn relative_difference(x: &Matrix4<f64>, y: &Matrix4<f64>) -> f64 {
    (x - y).norm() / x.norm().max(y.norm()).max(f64::MIN_POSITIVE)
}

pub fn cavity_moments(v: &StateCovariance) -> Result<SingleModeMoments> {
    let m = &v.v;
    let a_sq = Complex64::new((m[(2, 2)] - m[(3, 3)]) / 2.0, m[(2, 3)]);
    let mut n_occ = (m[(2, 2)] + m[(3, 3)] - 1.0) / 2.0;
    if n_occ < -PHYSICALITY_TOL {
        return Err(Error::UnphysicalCovariance(format!("negative occupation {n_occ:e}")));
    }
    if n_occ < 0.0 {
        log::warn!("clamping occupation {n_occ:e} to zero");
        n_occ = 0.0;
    }
    // A single mode of a physical two-mode state already obeys the bound;
    // tiny rounding excesses are tolerated by the same relative tolerance.
    let checked = SingleModeMoments::new(a_sq, n_occ)?;
    Ok(SingleModeMoments { source: MomentSource::Cavity, ..checked })
}

/// The output relations rescale both moments by one common positive factor,
/// which is normalized to 1; the cross term with the input vacuum vanishes at
/// equal times.
pub fn output_moments(cavity: &SingleModeMoments) -> SingleModeMoments {
    SingleModeMoments { source: MomentSource::Output, ..*cavity }
}

/// Steady state at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub drift: DriftMatrix,
    pub diffusion: DiffusionMatrix,
    pub covariance: StateCovariance,
    pub cavity: SingleModeMoments,
    pub output: SingleModeMoments,
    pub stability: StabilityReport,
}

pub fn steady_state(params: &SystemParams) -> Result<SteadyState> {
    let drift = build_drift(params);
    let diffusion = build_diffusion(params);
    let stability = stability_check(&drift);
    let covariance = lyapunov_steady(&drift, &diffusion)?;
    let cavity = cavity_moments(&covariance)?;
    Ok(SteadyState { drift, diffusion, covariance, cavity, output: output_moments(&cavity), stability })
}

fn rows(m: &Matrix4<f64>) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyDump {
    pub schema_version: u32,
    pub params: SystemParams,
    pub drift: [[f64; 4]; 4],
    pub diffusion: [[f64; 4]; 4],
    pub covariance: [[f64; 4]; 4],
    pub stability: StabilityReport,
    pub cavity: SingleModeMoments,
    pub output: SingleModeMoments,
}

impl SteadyDump {
    pub fn new(params: &SystemParams, s: &SteadyState) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params: *params,
            drift: rows(&s.drift.a),
            diffusion: rows(&s.diffusion.d),
            covariance: rows(s.covariance.matrix()),
            stability: s.stability,
            cavity: s.cavity,
            output: s.output,
        }
    }
}

/// Mechanical and optical 2×2 diagonal blocks of a drift matrix.
pub fn diagonal_blocks(a: &DriftMatrix) -> (Matrix2<f64>, Matrix2<f64>) {
    (a.a.fixed_view::<2, 2>(0, 0).into_owned(), a.a.fixed_view::<2, 2>(2, 2).into_owned())
}

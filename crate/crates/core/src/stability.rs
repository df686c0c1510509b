//! Linear stability of homogeneous equilibria against Fourier modes `e^{inx}`.
//!
//! For mode `n` and a constant scalar wind `v` the linearization is
//! `J(n) = A - n^2 diag(alpha, alpha, beta) - i n v diag(beta_B, beta_B, beta_P)`,
//! where `A` is the reaction Jacobian. Exact spectra come from a complex Schur
//! decomposition; the estimate treats the transport part as a perturbation of
//! `A` and adds `v_i^* Delta v_i` with unit right eigenvectors `v_i` of `A`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{reaction_jacobian, reaction_rhs};
use crate::linalg::eigen_complex;
use crate::params::{HomState, ModelParams};

/// Residual bound (relative to the state scale) for a state to count as an equilibrium.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-6;

/// Relative eigenvalue gap below which a spectrum is flagged as near-defective.
const DEFECT_GAP: f64 = 1e-8;

pub type Matrix3 = [[Complex64; 3]; 3];

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Reaction Jacobian `A` as a complex matrix; no equilibrium check.
pub fn reaction_matrix(eq: &HomState, params: &ModelParams) -> Matrix3 {
    reaction_jacobian(eq, params).map(|row| row.map(re))
}

/// Transport part `Delta(n, v)`, diagonal.
pub fn transport_diagonal(n: u32, v: f64, params: &ModelParams) -> [Complex64; 3] {
    let n = n as f64;
    [
        Complex64::new(-n * n * params.alpha, -n * v * params.beta_b),
        Complex64::new(-n * n * params.alpha, -n * v * params.beta_b),
        Complex64::new(-n * n * params.beta, -n * v * params.beta_p),
    ]
}

/// Checks that `eq` is an equilibrium of the reaction system.
pub fn check_equilibrium(eq: &HomState, params: &ModelParams) -> Result<()> {
    let rates = reaction_rhs(eq, params)?;
    let residual = rates.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let scale = eq.to_array().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tolerance = EQUILIBRIUM_TOLERANCE * scale;
    if residual > tolerance {
        return Err(Error::NotEquilibrium { residual, tolerance });
    }
    Ok(())
}

/// Full mode-`n` Jacobian at an equilibrium.
pub fn assemble_jacobian(eq: &HomState, n: u32, v: f64, params: &ModelParams) -> Result<Matrix3> {
    check_equilibrium(eq, params)?;
    let mut j = reaction_matrix(eq, params);
    let d = transport_diagonal(n, v, params);
    for i in 0..3 {
        j[i][i] += d[i];
    }
    Ok(j)
}

/// Eigenpairs of a 3x3 matrix, sorted by descending real part (ties by
/// descending imaginary part).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen3 {
    pub values: [Complex64; 3],
    /// Unit-norm eigenvectors; `vectors[i]` belongs to `values[i]`.
    pub vectors: [[Complex64; 3]; 3],
    /// Set when two eigenvalues nearly coincide; first-order estimates are then unreliable.
    pub near_defective: bool,
}

pub fn eigen_3x3(m: &Matrix3) -> Result<Eigen3> {
    let flat: Vec<Complex64> = m.iter().flatten().copied().collect();
    let pairs = eigen_complex(&flat, 3)?;
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| {
        let (x, y) = (pairs.values[a], pairs.values[b]);
        y.re.partial_cmp(&x.re).unwrap().then(y.im.partial_cmp(&x.im).unwrap())
    });
    let values = idx.map(|i| pairs.values[i]);
    let vectors = idx.map(|i| [pairs.vectors[i][0], pairs.vectors[i][1], pairs.vectors[i][2]]);
    let norm = flat.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let mut gap = f64::INFINITY;
    for a in 0..3 {
        for b in a + 1..3 {
            gap = gap.min((values[a] - values[b]).norm());
        }
    }
    Ok(Eigen3 { values, vectors, near_defective: gap < DEFECT_GAP * norm })
}

/// Spectrum of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpectrum {
    pub n: u32,
    /// Eigenvalues of the full `J(n)`, descending real part.
    pub exact: [Complex64; 3],
    /// Unit eigenvectors of `J(n)`.
    pub eigenvectors: [[Complex64; 3]; 3],
    /// First-order estimates, permuted so that `approx[i]` estimates `exact[i]`.
    pub approx: [Complex64; 3],
    /// Estimates from left/right eigenvector pairs, `w^H Delta v / w^H v`, in the same order.
    pub approx_biorthogonal: [Complex64; 3],
    pub near_defective: bool,
}

impl ModeSpectrum {
    /// Largest distance between an estimate and its exact eigenvalue.
    pub fn approx_error(&self) -> f64 {
        (0..3).map(|i| (self.approx[i] - self.exact[i]).norm()).fold(0.0, f64::max)
    }

    pub fn biorthogonal_error(&self) -> f64 {
        (0..3).map(|i| (self.approx_biorthogonal[i] - self.exact[i]).norm()).fold(0.0, f64::max)
    }

    pub fn leading_real(&self) -> f64 {
        self.exact[0].re
    }
}

/// Permutation `perm` minimizing `max_i |est[perm[i]] - exact[i]|`.
fn best_matching(est: &[Complex64; 3], exact: &[Complex64; 3]) -> [usize; 3] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let cost = |p: &[usize; 3]| (0..3).map(|i| (est[p[i]] - exact[i]).norm()).fold(0.0, f64::max);
    let mut best = PERMS[0];
    for p in PERMS.iter().skip(1) {
        if cost(p) < cost(&best) {
            best = *p;
        }
    }
    best
}

fn adjoint(m: &Matrix3) -> Matrix3 {
    let mut a = [[re(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = m[j][i].conj();
        }
    }
    a
}

/// Exact and first-order spectra of mode `n`.
pub fn perturbed_spectrum(eq: &HomState, n: u32, v: f64, params: &ModelParams) -> Result<ModeSpectrum> {
    check_equilibrium(eq, params)?;
    let a = reaction_matrix(eq, params);
    spectrum_of(&a, n, v, params)
}

fn spectrum_of(a: &Matrix3, n: u32, v: f64, params: &ModelParams) -> Result<ModeSpectrum> {
    let delta = transport_diagonal(n, v, params);
    let mut j = *a;
    for i in 0..3 {
        j[i][i] += delta[i];
    }
    let base = eigen_3x3(a)?;
    let full = eigen_3x3(&j)?;

    let mut approx = [re(0.0); 3];
    for i in 0..3 {
        let vi = &base.vectors[i];
        let corr: Complex64 = (0..3).map(|k| delta[k] * vi[k].norm_sqr()).sum();
        approx[i] = base.values[i] + corr;
    }

    // Left eigenvectors: eigenvectors of A^H for the conjugate eigenvalues.
    let left = eigen_3x3(&adjoint(a))?;
    let mut bio = [re(0.0); 3];
    for i in 0..3 {
        let target = base.values[i].conj();
        let k = (0..3)
            .min_by(|&x, &y| (left.values[x] - target).norm().partial_cmp(&(left.values[y] - target).norm()).unwrap())
            .unwrap();
        let w = &left.vectors[k];
        let vi = &base.vectors[i];
        let num: Complex64 = (0..3).map(|m| w[m].conj() * delta[m] * vi[m]).sum();
        let den: Complex64 = (0..3).map(|m| w[m].conj() * vi[m]).sum();
        bio[i] = base.values[i] + num / den;
    }

    let perm = best_matching(&approx, &full.values);
    let approx = perm.map(|p| approx[p]);
    let perm = best_matching(&bio, &full.values);
    let approx_biorthogonal = perm.map(|p| bio[p]);
    Ok(ModeSpectrum {
        n,
        exact: full.values,
        eigenvectors: full.vectors,
        approx,
        approx_biorthogonal,
        near_defective: base.near_defective || full.near_defective,
    })
}

/// Result of a sweep over `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSweep {
    pub wind: f64,
    pub spectra: Vec<ModeSpectrum>,
}

/// One row of the spectrum table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub n: u32,
    pub i: usize,
    pub re_exact: f64,
    pub im_exact: f64,
    pub re_approx: f64,
    pub im_approx: f64,
}

impl ModeSweep {
    /// Stable iff every exact eigenvalue over the sweep has negative real part.
    pub fn is_stable(&self) -> bool {
        self.max_leading_real() < 0.0
    }

    pub fn max_leading_real(&self) -> f64 {
        self.spectra.iter().map(ModeSpectrum::leading_real).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Modes whose eigenvalue `index` (in descending-real-part order) has positive real part.
    pub fn unstable_modes(&self, index: usize) -> Vec<u32> {
        self.spectra.iter().filter(|s| s.exact[index].re > 0.0).map(|s| s.n).collect()
    }

    pub fn rows(&self) -> Vec<SpectrumRow> {
        let mut out = Vec::with_capacity(3 * self.spectra.len());
        for s in &self.spectra {
            for i in 0..3 {
                out.push(SpectrumRow {
                    n: s.n,
                    i,
                    re_exact: s.exact[i].re,
                    im_exact: s.exact[i].im,
                    re_approx: s.approx[i].re,
                    im_approx: s.approx[i].im,
                });
            }
        }
        out
    }
}

pub fn mode_sweep(eq: &HomState, n_max: u32, v: f64, params: &ModelParams) -> Result<ModeSweep> {
    if n_max < 1 {
        return Err(Error::domain(format!("n_max must be at least 1, got {n_max}")));
    }
    check_equilibrium(eq, params)?;
    let a = reaction_matrix(eq, params);
    let spectra = (0..=n_max).map(|n| spectrum_of(&a, n, v, params)).collect::<Result<Vec<_>>>()?;
    Ok(ModeSweep { wind: v, spectra })
}

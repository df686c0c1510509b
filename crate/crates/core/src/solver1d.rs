//! Method of lines on `[0, L]` for the four-field system `(B, Q, P, p)`.
//!
//! Diffusion uses the three-point stencil and advection first-order upwinding
//! by the sign of the local transport speed. The Neumann condition is imposed
//! with ghost nodes equal to the boundary values, which makes the discrete
//! diffusion operator conservative for plain nodal sums.
//!
//! The quota carries its own transport `(2 alpha B_x / B - beta_B v) Q_x`, with
//! `B_x` from central differences. Biomass growth uses the evolved quota,
//! clamped to `[Q_m, Q_M]`; the phosphorus exchange uses `eta(B, p, P)` and `l p`
//! so that uptake and recycling cancel exactly between `p` and `P`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bdf::{self, BdfOptions, BdfStats, OdeSystem};
use crate::error::{Error, Result};
use crate::kernels::{growth_h, rho_rate, uptake_eta};
use crate::params::{HomState, ModelParams};
use crate::wind::Wind;
use crate::EPS_BIOMASS;

/// Lowest value a sampled component may take before it counts as negative.
pub const POSITIVITY_FLOOR: f64 = -1e-10;
/// Slack on the quota bounds at samples.
pub const QUOTA_TOLERANCE: f64 = 1e-6;

const FIELDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub length: f64,
    pub nx: usize,
    pub dx: f64,
}

pub fn build_grid(length: f64, nx: usize) -> Result<Grid1D> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Grid(format!("length must be positive, got {length}")));
    }
    if nx < 3 {
        return Err(Error::Grid(format!("need at least 3 nodes, got {nx}")));
    }
    Ok(Grid1D { length, nx, dx: length / (nx - 1) as f64 })
}

impl Grid1D {
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.length
        } else {
            i as f64 * self.dx
        }
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }
}

/// Nodal values of biomass, quota, dissolved and internal phosphorus.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub biomass: Vec<f64>,
    pub quota: Vec<f64>,
    pub dissolved: Vec<f64>,
    pub internal: Vec<f64>,
}

impl Field1D {
    pub fn uniform(nx: usize, state: &HomState, quota: f64) -> Self {
        Field1D {
            biomass: vec![state.biomass; nx],
            quota: vec![quota; nx],
            dissolved: vec![state.dissolved_p; nx],
            internal: vec![state.internal_p; nx],
        }
    }

    /// Builds a consistent field (`p = Q B`) from biomass, quota and dissolved profiles.
    pub fn from_profiles(biomass: Vec<f64>, quota: Vec<f64>, dissolved: Vec<f64>) -> Result<Self> {
        if biomass.len() != quota.len() || biomass.len() != dissolved.len() {
            return Err(Error::Dimension("profiles differ in length".into()));
        }
        let internal = biomass.iter().zip(&quota).map(|(b, q)| b * q).collect();
        Ok(Field1D { biomass, quota, dissolved, internal })
    }

    /// Gaussian biomass bump on a unit background, `1 + 4 exp(-((x - L/2)/(0.1 L))^2)`,
    /// with uniform quota `0.02` and dissolved phosphorus at the background level `P_h`.
    pub fn default_initial(grid: &Grid1D, params: &ModelParams) -> Self {
        let biomass: Vec<f64> = grid
            .positions()
            .iter()
            .map(|x| {
                let s = (x - 0.5 * grid.length) / (0.1 * grid.length);
                1.0 + 4.0 * (-s * s).exp()
            })
            .collect();
        let n = grid.nx;
        Field1D::from_profiles(biomass, vec![0.02; n], vec![params.p_h; n]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.biomass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biomass.is_empty()
    }

    fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(FIELDS * self.len());
        for i in 0..self.len() {
            y.extend_from_slice(&[self.biomass[i], self.quota[i], self.dissolved[i], self.internal[i]]);
        }
        y
    }

    fn unpack(y: &[f64]) -> Self {
        let n = y.len() / FIELDS;
        let pick = |c: usize| (0..n).map(|i| y[FIELDS * i + c]).collect::<Vec<f64>>();
        Field1D { biomass: pick(0), quota: pick(1), dissolved: pick(2), internal: pick(3) }
    }

    /// Nodal sum of `p + P`.
    pub fn phosphorus_total(&self) -> f64 {
        self.internal.iter().zip(&self.dissolved).map(|(a, b)| a + b).sum()
    }

    pub fn max_biomass(&self) -> f64 {
        self.biomass.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_biomass(&self) -> f64 {
        self.biomass.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max |p - Q B| / max |p|`.
    pub fn consistency_gap(&self) -> f64 {
        let pmax = self.internal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if pmax == 0.0 {
            return 0.0;
        }
        let gap = (0..self.len()).map(|i| (self.internal[i] - self.quota[i] * self.biomass[i]).abs()).fold(0.0, f64::max);
        gap / pmax
    }

    /// Positivity of `B, p, P` and the quota tube.
    pub fn check_invariants(&self, params: &ModelParams) -> Result<()> {
        for i in 0..self.len() {
            let (b, p, pd, q) = (self.biomass[i], self.internal[i], self.dissolved[i], self.quota[i]);
            if b < POSITIVITY_FLOOR || p < POSITIVITY_FLOOR || pd < POSITIVITY_FLOOR || !(b.is_finite() && p.is_finite() && pd.is_finite()) {
                return Err(Error::domain(format!("node {i}: negative or non-finite state ({b}, {p}, {pd})")));
            }
            if !(q >= params.q_min - QUOTA_TOLERANCE && q <= params.q_max + QUOTA_TOLERANCE) {
                return Err(Error::domain(format!("node {i}: quota {q} outside [{}, {}]", params.q_min, params.q_max)));
            }
        }
        Ok(())
    }

    fn validate(&self, grid: &Grid1D, params: &ModelParams) -> Result<()> {
        let n = grid.nx;
        if self.biomass.len() != n || self.quota.len() != n || self.dissolved.len() != n || self.internal.len() != n {
            return Err(Error::Dimension(format!("field arrays must have {n} entries")));
        }
        self.check_invariants(params)
    }
}

struct System<'a, W: Wind + ?Sized> {
    grid: Grid1D,
    params: ModelParams,
    wind: &'a W,
}

impl<W: Wind + ?Sized> System<'_, W> {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.grid.nx;
        let p = &self.params;
        let dx = self.grid.dx;
        let inv_dx2 = 1.0 / (dx * dx);
        let v = self.wind.velocity(t)[0];
        let removal = p.removal_rate();
        let at = |i: isize, c: usize| -> f64 {
            let k = i.clamp(0, n as isize - 1) as usize;
            y[FIELDS * k + c]
        };
        let laplacian = |i: isize, c: usize| (at(i + 1, c) - 2.0 * at(i, c) + at(i - 1, c)) * inv_dx2;
        // -speed * d/dx, upwinded.
        let transport = |i: isize, c: usize, speed: f64| {
            if speed > 0.0 {
                -speed * (at(i, c) - at(i - 1, c)) / dx
            } else {
                -speed * (at(i + 1, c) - at(i, c)) / dx
            }
        };
        for i in 0..n {
            let ii = i as isize;
            let b = y[FIELDS * i];
            let q = y[FIELDS * i + 1];
            let pd = y[FIELDS * i + 2];
            let pi = y[FIELDS * i + 3];

            let qc = q.clamp(p.q_min, p.q_max);
            let h = growth_h(b, p);
            let eta = uptake_eta(b.max(0.0), pi.max(0.0), pd, p);
            let b_x = (at(ii + 1, 0) - at(ii - 1, 0)) / (2.0 * dx);
            let q_speed = p.beta_b * v - 2.0 * p.alpha * b_x / b.max(EPS_BIOMASS);

            dy[FIELDS * i] = p.alpha * laplacian(ii, 0) + transport(ii, 0, p.beta_b * v) + p.r * (1.0 - p.q_min / qc) * h * b
                - removal * b;
            dy[FIELDS * i + 1] =
                p.alpha * laplacian(ii, 1) + transport(ii, 1, q_speed) + rho_rate(qc, pd, p) - p.r * (qc - p.q_min) * h;
            dy[FIELDS * i + 2] = p.beta * laplacian(ii, 2) + transport(ii, 2, p.beta_p * v) + p.dilution() * (p.p_h - pd) + p.p_in
                - eta
                + p.loss * pi;
            dy[FIELDS * i + 3] = p.alpha * laplacian(ii, 3) + transport(ii, 3, p.beta_b * v) + eta - removal * pi;
        }
    }
}

impl<W: Wind + ?Sized> OdeSystem for System<'_, W> {
    fn dim(&self) -> usize {
        FIELDS * self.grid.nx
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.eval(t, y, dy);
    }

    fn bandwidth(&self) -> (usize, usize) {
        (2 * FIELDS - 1, 2 * FIELDS - 1)
    }
}

/// Time derivatives of all four fields.
pub fn rhs_1d<W: Wind + ?Sized>(fields: &Field1D, t: f64, grid: &Grid1D, wind: &W, params: &ModelParams) -> Result<Field1D> {
    params.validate()?;
    fields.validate(grid, params)?;
    let sys = System { grid: *grid, params: *params, wind };
    let y = fields.pack();
    let mut dy = vec![0.0; y.len()];
    sys.eval(t, &y, &mut dy);
    Ok(Field1D::unpack(&dy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory1D {
    pub times: Vec<f64>,
    pub fields: Vec<Field1D>,
    /// Largest `max |p - Q B| / max |p|` over the samples.
    pub max_consistency_gap: f64,
    pub stats: BdfStats,
}

/// Integrates on `[0, t_end]` and records `sample_times` (sorted, within the interval).
///
/// Each sample is checked for positivity and the quota tube; a violation aborts
/// with [`Error::Domain`].
#[allow(clippy::too_many_arguments)]
pub fn integrate_1d<W: Wind + ?Sized>(
    initial: &Field1D,
    grid: &Grid1D,
    wind: &W,
    params: &ModelParams,
    t_end: f64,
    rtol: f64,
    atol: f64,
    sample_times: &[f64],
) -> Result<Trajectory1D> {
    params.validate()?;
    initial.validate(grid, params)?;
    let sys = System { grid: *grid, params: *params, wind };
    let opts = BdfOptions::with_tolerances(rtol, atol);
    let mut traj = Trajectory1D { times: Vec::new(), fields: Vec::new(), max_consistency_gap: 0.0, stats: BdfStats::default() };
    traj.stats = bdf::integrate(&sys, 0.0, &initial.pack(), t_end, sample_times, &opts, |t, y| {
        let f = Field1D::unpack(y);
        f.check_invariants(params).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("t = {t}: {m}")),
            other => other,
        })?;
        traj.max_consistency_gap = traj.max_consistency_gap.max(f.consistency_gap());
        traj.times.push(t);
        traj.fields.push(f);
        Ok(())
    })?;
    Ok(traj)
}

//! Spatially homogeneous dynamics: long-time integration and equilibria.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bdf::{self, BdfOptions, BdfStats, OdeSystem};
use crate::error::{Error, Result};
use crate::kernels::{self, quota_for_growth, reaction_rates};
use crate::linalg::solve_dense;
use crate::params::{HomState, ModelParams};
use crate::EPS_BIOMASS;

/// Slack allowed on the quota bounds along computed trajectories.
pub const QUOTA_TOLERANCE: f64 = 1e-6;

/// Reaction system in `(B, p, P)` with the regularized growth quota.
#[derive(Debug, Clone, Copy)]
pub struct Homogeneous {
    params: ModelParams,
    q_hat: f64,
}

impl Homogeneous {
    pub fn new(params: &ModelParams) -> Self {
        Homogeneous { params: *params, q_hat: kernels::q_hat(params) }
    }
}

impl OdeSystem for Homogeneous {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let q = quota_for_growth(y[0], y[1], EPS_BIOMASS, self.q_hat, &self.params);
        dy.copy_from_slice(&reaction_rates([y[0], y[1], y[2]], q, &self.params));
    }
}

/// Sampled solution of the homogeneous system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<HomState>,
    pub stats: BdfStats,
}

impl Trajectory {
    pub fn last(&self) -> Option<&HomState> {
        self.states.last()
    }
}

/// Integrates the homogeneous system on `[0, t_end]`, sampled once per day
/// (plus `t_end`).
pub fn integrate_homogeneous(initial: &HomState, params: &ModelParams, t_end: f64, rtol: f64, atol: f64) -> Result<Trajectory> {
    let mut times: Vec<f64> = (0..).map(|d| d as f64).take_while(|&t| t < t_end).collect();
    times.push(t_end);
    integrate_homogeneous_at(initial, params, &times, rtol, atol)
}

/// Integrates from `t = 0` to the last sample time and records the given samples.
///
/// Every sample is checked for positivity and, where `B` is resolved above the
/// absolute tolerance, for the quota bounds.
pub fn integrate_homogeneous_at(initial: &HomState, params: &ModelParams, sample_times: &[f64], rtol: f64, atol: f64) -> Result<Trajectory> {
    params.validate()?;
    initial.validate(params)?;
    let t_end = match sample_times.last() {
        Some(&t) if t > 0.0 => t,
        _ => return Err(Error::domain("need at least one positive sample time")),
    };
    let sys = Homogeneous::new(params);
    let opts = BdfOptions::with_tolerances(rtol, atol);
    let mut traj = Trajectory::default();
    let stats = bdf::integrate(&sys, 0.0, &initial.to_array(), t_end, sample_times, &opts, |t, y| {
        let state = HomState::from_array([y[0], y[1], y[2]]);
        check_sample(&state, params, atol).map_err(|e| match e {
            Error::Domain(msg) => Error::Domain(format!("t = {t}: {msg}")),
            other => other,
        })?;
        traj.times.push(t);
        traj.states.push(state);
        Ok(())
    })?;
    traj.stats = stats;
    Ok(traj)
}

fn check_sample(s: &HomState, params: &ModelParams, atol: f64) -> Result<()> {
    let floor = -10.0 * atol;
    if s.biomass < floor || s.internal_p < floor || s.dissolved_p < floor {
        return Err(Error::domain(format!("negative component in {s:?}")));
    }
    if s.biomass > 1e3 * atol {
        let q = s.internal_p / s.biomass;
        if q < params.q_min - QUOTA_TOLERANCE || q > params.q_max + QUOTA_TOLERANCE {
            return Err(Error::domain(format!("quota {q} left [{}, {}]", params.q_min, params.q_max)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Extinction,
    Positive,
}

/// Extinction equilibrium `(0, 0, P_h + z_m P_in / D)`.
///
/// Without exchange (`D = 0`) the dissolved level is taken as `P_h`.
pub fn extinction_state(params: &ModelParams) -> HomState {
    let source = if params.p_in > 0.0 && params.dilution() > 0.0 { params.p_in / params.dilution() } else { 0.0 };
    HomState::new(0.0, 0.0, params.p_h + source)
}

/// Largest per-capita growth rate (1/day) accepted at a positive equilibrium.
const PER_CAPITA_TOLERANCE: f64 = 1e-6;

fn residual_inf(x: [f64; 3], params: &ModelParams) -> f64 {
    let f = reaction_rates(x, x[1] / x[0], params);
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Locates an equilibrium of the reaction system.
///
/// Below the persistence threshold (`R0 <= 1`) the extinction state is returned.
/// Otherwise damped Newton starts from `guess`; if that fails or collapses to
/// `B = 0` (nonzero per-capita growth), the state reached by integrating to `t = 4000` seeds a second Newton run.
pub fn find_equilibrium(params: &ModelParams, guess: &HomState, rtol: f64) -> Result<(HomState, EquilibriumKind)> {
    params.validate()?;
    if kernels::r0(params) <= 1.0 {
        return Ok((extinction_state(params), EquilibriumKind::Extinction));
    }
    // Every rate is proportional to B near extinction, so a small residual alone
    // does not rule out B -> 0; the per-capita growth rate must vanish too.
    let positive = |x: [f64; 3]| {
        let f = reaction_rates(x, x[1] / x[0], params);
        (f[0] / x[0]).abs() < PER_CAPITA_TOLERANCE
    };
    let first = if guess.biomass > EPS_BIOMASS && guess.internal_p > 0.0 {
        damped_newton(params, guess.to_array(), rtol).and_then(|x| if positive(x) { Ok(x) } else { Err(Error::domain("collapsed to B = 0")) })
    } else {
        Err(Error::domain("guess has no biomass"))
    };
    let root = match first {
        Ok(x) => x,
        Err(_) => {
            let start = if guess.validate(params).is_ok() && guess.biomass > 0.0 {
                *guess
            } else {
                HomState::from_quota(1.0, kernels::q_hat(params), params.p_h.max(1e-3))
            };
            let traj = integrate_homogeneous_at(&start, params, &[4000.0], 1e-10, 1e-12)?;
            let x = damped_newton(params, traj.last().unwrap().to_array(), rtol)?;
            if !positive(x) {
                return Err(Error::NoConvergence { iterations: 0, residual: residual_inf(x, params), best: x.to_vec() });
            }
            x
        }
    };
    Ok((HomState::from_array(root), EquilibriumKind::Positive))
}

fn damped_newton(params: &ModelParams, mut x: [f64; 3], rtol: f64) -> Result<[f64; 3]> {
    const MAX_ITER: usize = 100;
    let scale = |x: &[f64; 3]| x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut res = residual_inf(x, params);
    for _ in 0..MAX_ITER {
        if res < rtol * scale(&x) {
            return Ok(x);
        }
        let jac = kernels::reaction_jacobian(&HomState::from_array(x), params);
        let mut a: Vec<f64> = jac.iter().flatten().copied().collect();
        let f = reaction_rates(x, x[1] / x[0], params);
        let mut dx = vec![-f[0], -f[1], -f[2]];
        solve_dense(&mut a, &mut dx)?;
        let mut lambda = 1.0;
        loop {
            let trial = [x[0] + lambda * dx[0], x[1] + lambda * dx[1], x[2] + lambda * dx[2]];
            let admissible = trial[0] > EPS_BIOMASS && trial[1] > 0.0 && trial[2] >= 0.0;
            if admissible {
                let r = residual_inf(trial, params);
                if r < res || lambda < 1e-3 {
                    x = trial;
                    res = r;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(Error::NoConvergence { iterations: MAX_ITER, residual: res, best: x.to_vec() });
            }
        }
        if x[0] < 1e-9 {
            return Err(Error::NoConvergence { iterations: MAX_ITER, residual: res, best: x.to_vec() });
        }
    }
    if res < rtol * scale(&x) {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: MAX_ITER, residual: res, best: x.to_vec() })
    }
}

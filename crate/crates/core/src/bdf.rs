//! Variable-order (1 to 5) backward differentiation formulas in Nordsieck-style
//! difference form, with the NDF error constants, simplified Newton iterations
//! on a banded iteration matrix and continuous output between steps.
//!
//! The step and order control follows the widely used quasi-constant step
//! size implementation (Shampine and Reichelt 1997).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{BandLu, BandMatrix};

const MAX_ORDER: usize = 5;
const NEWTON_MAXITER: usize = 4;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const KAPPA: [f64; MAX_ORDER + 1] = [0.0, -0.1850, -1.0 / 9.0, -0.0823, -0.0415, 0.0];

/// First-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);

    /// Lower and upper bandwidth of the Jacobian. Dense by default.
    fn bandwidth(&self) -> (usize, usize) {
        let n = self.dim();
        (n.saturating_sub(1), n.saturating_sub(1))
    }

    /// Writes `df/dy` into `jac`, whose bandwidths match [`OdeSystem::bandwidth`].
    /// `f` is `rhs(t, y)`. The default uses grouped forward differences.
    fn jacobian(&self, t: f64, y: &[f64], f: &[f64], jac: &mut BandMatrix) {
        fd_jacobian(self, t, y, f, jac);
    }
}

/// Forward-difference Jacobian that perturbs every `kl + ku + 1`-th column together.
pub fn fd_jacobian<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], f: &[f64], jac: &mut BandMatrix) {
    let n = y.len();
    let (kl, ku) = jac.bandwidths();
    let stride = (kl + ku + 1).min(n.max(1));
    let root_eps = f64::EPSILON.sqrt();
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut steps = vec![0.0; n];
    for group in 0..stride {
        for j in (group..n).step_by(stride) {
            let h = root_eps * y[j].abs().max(1e-6);
            // Exact representable step.
            let yj = y[j] + h;
            steps[j] = yj - y[j];
            yp[j] = yj;
        }
        sys.rhs(t, &yp, &mut fp);
        for j in (group..n).step_by(stride) {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl + 1).min(n);
            for i in lo..hi {
                jac.set(i, j, (fp[i] - f[i]) / steps[j]);
            }
            yp[j] = y[j];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdfOptions {
    pub rtol: f64,
    /// Absolute tolerance, either one value or one per component.
    pub atol: Vec<f64>,
    pub max_step: f64,
    pub first_step: Option<f64>,
    /// Upper limit on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for BdfOptions {
    fn default() -> Self {
        BdfOptions { rtol: 1e-6, atol: vec![1e-9], max_step: f64::INFINITY, first_step: None, max_steps: 1_000_000 }
    }
}

impl BdfOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        BdfOptions { rtol, atol: vec![atol], ..Default::default() }
    }
}

/// Counters reported after an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BdfStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jac_evals: usize,
    pub factorizations: usize,
}

fn rms(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    (v.map(|x| x * x).sum::<f64>() / n as f64).sqrt()
}

/// Stepper state. Most callers want [`integrate`].
pub struct Bdf<'s, S: OdeSystem + ?Sized> {
    sys: &'s S,
    n: usize,
    t: f64,
    t_old: f64,
    t_bound: f64,
    y: Vec<f64>,
    rtol: f64,
    atol: Vec<f64>,
    max_step: f64,
    h_abs: f64,
    newton_tol: f64,
    gamma: [f64; MAX_ORDER + 2],
    alpha: [f64; MAX_ORDER + 2],
    error_const: [f64; MAX_ORDER + 2],
    /// Rows `0..=MAX_ORDER+2` of backward differences, each of length `n`.
    d: Vec<Vec<f64>>,
    order: usize,
    n_equal_steps: usize,
    jac: BandMatrix,
    lu: Option<BandLu>,
    stats: BdfStats,
}

impl<'s, S: OdeSystem + ?Sized> Bdf<'s, S> {
    pub fn new(sys: &'s S, t0: f64, y0: &[f64], t_bound: f64, opts: &BdfOptions) -> Result<Self> {
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::Dimension(alloc::format!("initial state has {} entries, system has {n}", y0.len())));
        }
        if !(t_bound > t0) {
            return Err(Error::domain("integration interval must have positive length"));
        }
        if !(opts.rtol > 0.0) || opts.atol.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::domain("tolerances must be positive"));
        }
        let atol = match opts.atol.len() {
            1 => vec![opts.atol[0]; n],
            m if m == n => opts.atol.clone(),
            m => return Err(Error::Dimension(alloc::format!("{m} absolute tolerances for {n} components"))),
        };
        let rtol = opts.rtol.max(100.0 * f64::EPSILON);
        let mut f = vec![0.0; n];
        sys.rhs(t0, y0, &mut f);
        let mut stats = BdfStats { rhs_evals: 1, ..Default::default() };
        let h_abs = match opts.first_step {
            Some(h) => h,
            None => {
                stats.rhs_evals += 1;
                select_initial_step(sys, t0, y0, t_bound, opts.max_step, &f, rtol, &atol)
            }
        };

        let mut gamma = [0.0; MAX_ORDER + 2];
        let mut alpha = [0.0; MAX_ORDER + 2];
        let mut error_const = [0.0; MAX_ORDER + 2];
        for k in 1..=MAX_ORDER {
            gamma[k] = gamma[k - 1] + 1.0 / k as f64;
        }
        for k in 0..=MAX_ORDER {
            alpha[k] = (1.0 - KAPPA[k]) * gamma[k];
            error_const[k] = KAPPA[k] * gamma[k] + 1.0 / (k + 1) as f64;
        }

        let mut d = vec![vec![0.0; n]; MAX_ORDER + 3];
        d[0].copy_from_slice(y0);
        for i in 0..n {
            d[1][i] = f[i] * h_abs;
        }
        let (kl, ku) = sys.bandwidth();
        let mut jac = BandMatrix::zeros(n, kl, ku);
        sys.jacobian(t0, y0, &f, &mut jac);
        stats.jac_evals += 1;

        Ok(Bdf {
            sys,
            n,
            t: t0,
            t_old: t0,
            t_bound,
            y: y0.to_vec(),
            rtol,
            atol,
            max_step: opts.max_step,
            h_abs,
            newton_tol: (10.0 * f64::EPSILON / rtol).max(0.03f64.min(rtol.sqrt())),
            gamma,
            alpha,
            error_const,
            d,
            order: 1,
            n_equal_steps: 0,
            jac,
            lu: None,
            stats,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn stats(&self) -> BdfStats {
        self.stats
    }

    pub fn finished(&self) -> bool {
        self.t >= self.t_bound
    }

    fn change_d(&mut self, factor: f64) {
        change_d(&mut self.d, self.order, factor);
    }

    fn factor_iteration_matrix(&mut self, c: f64) -> Result<()> {
        let mut m = self.jac.clone();
        m.scale_shift(-c, 1.0);
        self.lu = Some(m.factor()?);
        self.stats.factorizations += 1;
        Ok(())
    }

    /// Simplified Newton iteration. Returns `(converged, iterations, y, d)`.
    fn solve_system(&mut self, t_new: f64, y_predict: &[f64], c: f64, psi: &[f64], scale: &[f64]) -> (bool, usize, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut d = vec![0.0; n];
        let mut y = y_predict.to_vec();
        let mut f = vec![0.0; n];
        let mut dy = vec![0.0; n];
        let mut dy_norm_old: Option<f64> = None;
        let mut converged = false;
        let mut k = 0;
        while k < NEWTON_MAXITER {
            self.sys.rhs(t_new, &y, &mut f);
            self.stats.rhs_evals += 1;
            if f.iter().any(|v| !v.is_finite()) {
                break;
            }
            for i in 0..n {
                dy[i] = c * f[i] - psi[i] - d[i];
            }
            self.lu.as_ref().expect("factored").solve_in_place(&mut dy);
            let dy_norm = rms(dy.iter().zip(scale).map(|(a, s)| a / s), n);
            let rate = dy_norm_old.map(|old| dy_norm / old);
            if let Some(rate) = rate {
                if rate >= 1.0 || rate.powi((NEWTON_MAXITER - k) as i32) / (1.0 - rate) * dy_norm > self.newton_tol {
                    break;
                }
            }
            for i in 0..n {
                y[i] += dy[i];
                d[i] += dy[i];
            }
            if dy_norm == 0.0 || rate.is_some_and(|r| r / (1.0 - r) * dy_norm < self.newton_tol) {
                converged = true;
                break;
            }
            dy_norm_old = Some(dy_norm);
            k += 1;
        }
        (converged, (k + 1).min(NEWTON_MAXITER), y, d)
    }

    /// Advances by one accepted step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.n;
        let t = self.t;
        let min_step = 10.0 * (next_up(t) - t).abs();
        let mut h_abs = if self.h_abs > self.max_step {
            let f = self.max_step / self.h_abs;
            self.change_d(f);
            self.n_equal_steps = 0;
            self.max_step
        } else if self.h_abs < min_step {
            let f = min_step / self.h_abs;
            self.change_d(f);
            self.n_equal_steps = 0;
            min_step
        } else {
            self.h_abs
        };
        let order = self.order;
        let mut current_jac = false;

        let (t_new, y_new, d, n_iter, error_norm, safety, scale) = loop {
            if h_abs < min_step {
                return Err(Error::StepSizeUnderflow { t, state: self.y.clone() });
            }
            let mut t_new = t + h_abs;
            if t_new > self.t_bound {
                t_new = self.t_bound;
                self.change_d((t_new - t).abs() / h_abs);
                self.n_equal_steps = 0;
                self.lu = None;
            }
            let h = t_new - t;
            h_abs = h.abs();

            let mut y_predict = vec![0.0; n];
            for row in &self.d[..=order] {
                for i in 0..n {
                    y_predict[i] += row[i];
                }
            }
            let scale: Vec<f64> = (0..n).map(|i| self.atol[i] + self.rtol * y_predict[i].abs()).collect();
            let mut psi = vec![0.0; n];
            for j in 1..=order {
                for i in 0..n {
                    psi[i] += self.d[j][i] * self.gamma[j];
                }
            }
            for v in psi.iter_mut() {
                *v /= self.alpha[order];
            }

            let c = h / self.alpha[order];
            let mut result;
            loop {
                if self.lu.is_none() {
                    if let Err(e) = self.factor_iteration_matrix(c) {
                        if current_jac {
                            return Err(e);
                        }
                        // Treat a singular iteration matrix like a failed Newton solve.
                        result = (false, 0, Vec::new(), Vec::new());
                        break;
                    }
                }
                result = self.solve_system(t_new, &y_predict, c, &psi, &scale);
                if result.0 || current_jac {
                    break;
                }
                let mut f = vec![0.0; n];
                self.sys.rhs(t_new, &y_predict, &mut f);
                self.stats.rhs_evals += 1;
                self.sys.jacobian(t_new, &y_predict, &f, &mut self.jac);
                self.stats.jac_evals += 1;
                self.lu = None;
                current_jac = true;
            }
            let (converged, n_iter, y_new, d) = result;

            if !converged {
                h_abs *= 0.5;
                self.change_d(0.5);
                self.n_equal_steps = 0;
                self.lu = None;
                self.stats.rejected += 1;
                continue;
            }

            let safety = 0.9 * (2 * NEWTON_MAXITER + 1) as f64 / (2 * NEWTON_MAXITER + n_iter) as f64;
            let scale: Vec<f64> = (0..n).map(|i| self.atol[i] + self.rtol * y_new[i].abs()).collect();
            let ec = self.error_const[order];
            let error_norm = rms(d.iter().zip(&scale).map(|(e, s)| ec * e / s), n);
            if error_norm > 1.0 {
                let factor = MIN_FACTOR.max(safety * error_norm.powf(-1.0 / (order + 1) as f64));
                h_abs *= factor;
                self.change_d(factor);
                self.n_equal_steps = 0;
                self.stats.rejected += 1;
            } else {
                break (t_new, y_new, d, n_iter, error_norm, safety, scale);
            }
        };
        let _ = n_iter;

        self.stats.steps += 1;
        self.n_equal_steps += 1;
        self.t_old = t;
        self.t = t_new;
        self.y = y_new;
        self.h_abs = h_abs;

        for i in 0..n {
            self.d[order + 2][i] = d[i] - self.d[order + 1][i];
            self.d[order + 1][i] = d[i];
        }
        for j in (0..=order).rev() {
            for i in 0..n {
                let next = self.d[j + 1][i];
                self.d[j][i] += next;
            }
        }

        if self.n_equal_steps < order + 1 {
            return Ok(());
        }

        let error_m_norm = if order > 1 {
            let ec = self.error_const[order - 1];
            rms(self.d[order].iter().zip(&scale).map(|(e, s)| ec * e / s), n)
        } else {
            f64::INFINITY
        };
        let error_p_norm = if order < MAX_ORDER {
            let ec = self.error_const[order + 1];
            rms(self.d[order + 2].iter().zip(&scale).map(|(e, s)| ec * e / s), n)
        } else {
            f64::INFINITY
        };
        let norms = [error_m_norm, error_norm, error_p_norm];
        let mut best = 0;
        let mut factors = [0.0; 3];
        for (k, e) in norms.iter().enumerate() {
            factors[k] = if *e == 0.0 { f64::INFINITY } else { e.powf(-1.0 / (order + k) as f64) };
            if factors[k] > factors[best] {
                best = k;
            }
        }
        self.order = order + best - 1;
        let factor = MAX_FACTOR.min(safety * factors[best]);
        self.h_abs *= factor;
        self.change_d(factor);
        self.n_equal_steps = 0;
        self.lu = None;
        Ok(())
    }

    /// Interpolates the last step at `t` in `[t_old, t]`.
    pub fn dense_output(&self, t: f64, out: &mut [f64]) {
        let h = self.h_abs;
        out.copy_from_slice(&self.d[0]);
        let mut p = 1.0;
        for j in 0..self.order {
            let shift = self.t - h * j as f64;
            p *= (t - shift) / (h * (j + 1) as f64);
            for i in 0..self.n {
                out[i] += self.d[j + 1][i] * p;
            }
        }
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

fn compute_r(order: usize, factor: f64) -> Vec<f64> {
    let m = order + 1;
    let mut r = vec![0.0; m * m];
    for j in 0..m {
        r[j] = 1.0;
    }
    for i in 1..m {
        for j in 0..m {
            let entry = if j == 0 { 0.0 } else { (i as f64 - 1.0 - factor * j as f64) / i as f64 };
            r[i * m + j] = r[(i - 1) * m + j] * entry;
        }
    }
    r
}

/// Rescales the difference array for a step size change by `factor`.
fn change_d(d: &mut [Vec<f64>], order: usize, factor: f64) {
    let m = order + 1;
    let r = compute_r(order, factor);
    let u = compute_r(order, 1.0);
    let mut ru = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            ru[i * m + j] = (0..m).map(|k| r[i * m + k] * u[k * m + j]).sum();
        }
    }
    let n = d[0].len();
    let mut new = vec![vec![0.0; n]; m];
    for (j, row) in new.iter_mut().enumerate() {
        for k in 0..m {
            let w = ru[k * m + j];
            if w != 0.0 {
                for i in 0..n {
                    row[i] += w * d[k][i];
                }
            }
        }
    }
    for (j, row) in new.into_iter().enumerate() {
        d[j] = row;
    }
}

#[allow(clippy::too_many_arguments)]
fn select_initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_bound: f64,
    max_step: f64,
    f0: &[f64],
    rtol: f64,
    atol: &[f64],
) -> f64 {
    let n = y0.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let interval = (t_bound - t0).abs();
    let scale: Vec<f64> = (0..n).map(|i| atol[i] + y0[i].abs() * rtol).collect();
    let d0 = rms((0..n).map(|i| y0[i] / scale[i]), n);
    let d1 = rms((0..n).map(|i| f0[i] / scale[i]), n);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(interval);
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let d2 = rms((0..n).map(|i| (f1[i] - f0[i]) / scale[i]), n) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.5) };
    (100.0 * h0).min(h1).min(interval).min(max_step)
}

/// Integrates from `t0` to `t_end`, calling `sample(t, y)` at every entry of
/// `sample_times` (sorted, inside `[t0, t_end]`). Samples are interpolated
/// from the dense output, except `t_end` which is the final step.
pub fn integrate<S, F>(sys: &S, t0: f64, y0: &[f64], t_end: f64, sample_times: &[f64], opts: &BdfOptions, mut sample: F) -> Result<BdfStats>
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("sample times must be sorted"));
    }
    if sample_times.iter().any(|&s| s < t0 || s > t_end) {
        return Err(Error::domain("sample times must lie inside the integration interval"));
    }
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] == t0 {
        sample(t0, y0)?;
        next += 1;
    }
    if t_end == t0 {
        return Ok(BdfStats::default());
    }
    let mut solver = Bdf::new(sys, t0, y0, t_end, opts)?;
    let mut buf = vec![0.0; y0.len()];
    while !solver.finished() {
        if solver.stats.steps + solver.stats.rejected >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t: solver.t, state: solver.y.clone() });
        }
        solver.step()?;
        while next < sample_times.len() && sample_times[next] <= solver.t {
            let ts = sample_times[next];
            if ts == solver.t {
                sample(ts, &solver.y)?;
            } else {
                solver.dense_output(ts, &mut buf);
                sample(ts, &buf)?;
            }
            next += 1;
        }
    }
    Ok(solver.stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(f64);

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -self.0 * y[0];
        }
    }

    /// Robertson's stiff chemical kinetics problem.
    struct Robertson;

    impl OdeSystem for Robertson {
        fn dim(&self) -> usize {
            3
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -0.04 * y[0] + 1e4 * y[1] * y[2];
            dy[2] = 3e7 * y[1] * y[1];
            dy[1] = -dy[0] - dy[2];
        }
    }

    /// Tridiagonal heat equation with homogeneous Dirichlet ends.
    struct Heat(usize);

    impl OdeSystem for Heat {
        fn dim(&self) -> usize {
            self.0
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            let n = self.0;
            let h2 = ((n + 1) * (n + 1)) as f64;
            for i in 0..n {
                let l = if i > 0 { y[i - 1] } else { 0.0 };
                let r = if i + 1 < n { y[i + 1] } else { 0.0 };
                dy[i] = h2 * (l - 2.0 * y[i] + r);
            }
        }
        fn bandwidth(&self) -> (usize, usize) {
            (1, 1)
        }
    }

    fn final_state<S: OdeSystem>(sys: &S, y0: &[f64], t_end: f64, opts: &BdfOptions) -> Vec<f64> {
        let mut out = Vec::new();
        integrate(sys, 0.0, y0, t_end, &[t_end], opts, |_, y| {
            out = y.to_vec();
            Ok(())
        })
        .unwrap();
        out
    }

    #[test]
    fn exponential_decay() {
        let y = final_state(&Decay(2.0), &[1.0], 3.0, &BdfOptions::with_tolerances(1e-8, 1e-12));
        let exact = (-6.0f64).exp();
        assert!((y[0] - exact).abs() < 1e-6 * exact + 1e-11, "{} vs {exact}", y[0]);
    }

    #[test]
    fn dense_output_tracks_solution() {
        let times: Vec<f64> = (0..=40).map(|i| 0.1 * i as f64).collect();
        let opts = BdfOptions::with_tolerances(1e-8, 1e-12);
        integrate(&Decay(1.0), 0.0, &[1.0], 4.0, &times, &opts, |t, y| {
            let exact = (-t).exp();
            assert!((y[0] - exact).abs() < 1e-6, "t={t}: {} vs {exact}", y[0]);
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn robertson_reference_values() {
        // Reference at t = 40 from the standard stiff test set.
        let opts = BdfOptions { rtol: 1e-8, atol: vec![1e-12, 1e-14, 1e-12], ..Default::default() };
        let y = final_state(&Robertson, &[1.0, 0.0, 0.0], 40.0, &opts);
        assert!((y[0] - 0.715_827_068_626_1).abs() < 1e-6, "{y:?}");
        assert!((y[1] - 9.185_534_764_557e-6).abs() < 1e-10, "{y:?}");
        assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn banded_heat_equation_matches_fourier_mode() {
        let n = 49;
        let h = 1.0 / (n + 1) as f64;
        let y0: Vec<f64> = (1..=n).map(|i| (core::f64::consts::PI * i as f64 * h).sin()).collect();
        // Discrete eigenvalue of the first sine mode.
        let lam = -4.0 / (h * h) * (core::f64::consts::PI * h / 2.0).sin().powi(2);
        let t_end = 0.05;
        let y = final_state(&Heat(n), &y0, t_end, &BdfOptions::with_tolerances(1e-8, 1e-12));
        for i in 0..n {
            let exact = y0[i] * (lam * t_end).exp();
            assert!((y[i] - exact).abs() < 1e-6, "node {i}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let opts = BdfOptions::default();
        assert!(Bdf::new(&Decay(1.0), 0.0, &[1.0, 2.0], 1.0, &opts).is_err());
        assert!(Bdf::new(&Decay(1.0), 1.0, &[1.0], 1.0, &opts).is_err());
        let bad = BdfOptions { rtol: 0.0, ..Default::default() };
        assert!(Bdf::new(&Decay(1.0), 0.0, &[1.0], 1.0, &bad).is_err());
        assert!(integrate(&Decay(1.0), 0.0, &[1.0], 1.0, &[2.0], &opts, |_, _| Ok(())).is_err());
    }

    #[test]
    fn change_d_round_trip_is_identity() {
        let mut d = vec![vec![1.0, -2.0], vec![0.5, 0.1], vec![0.01, -0.2], vec![0.003, 0.04]];
        let orig = d.clone();
        change_d(&mut d, 3, 0.5);
        change_d(&mut d, 3, 2.0);
        for (a, b) in d.iter().flatten().zip(orig.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

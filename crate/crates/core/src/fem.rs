//! P1 Galerkin discretization in two dimensions with backward Euler and Newton.
//!
//! The time derivative and the reactions use the lumped mass matrix, the
//! diffusion and advection terms the consistent stiffness and advection
//! matrices. Each Newton system couples `(B, p, P)` node by node through the
//! reaction Jacobian and across nodes through the transport matrices. It is
//! solved by banded LU after reverse Cuthill-McKee ordering of the nodes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{self, quota_for_growth, reaction_rates};
use crate::linalg::{bandwidth, reverse_cuthill_mckee, BandLu, BandMatrix, Csr};
use crate::mesh::TriMesh;
use crate::params::ModelParams;
use crate::solver1d::{POSITIVITY_FLOOR, QUOTA_TOLERANCE};
use crate::wind::Wind;

/// Biomass below which the pointwise quota is not checked against its bounds.
pub const QUOTA_BIOMASS_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FemMatrices {
    /// Consistent mass matrix.
    pub mass: Csr,
    /// Row sums of the mass matrix.
    pub lumped: Vec<f64>,
    /// `K_ij = integral grad(phi_i) . grad(phi_j)`.
    pub stiffness: Csr,
    /// `Cx_ij = integral phi_i d(phi_j)/dx`, likewise `cy`.
    pub cx: Csr,
    pub cy: Csr,
}

pub fn assemble_fem(mesh: &TriMesh) -> FemMatrices {
    let nt = mesh.triangle_count();
    let mut m = Vec::with_capacity(9 * nt);
    let mut k = Vec::with_capacity(9 * nt);
    let mut cx = Vec::with_capacity(9 * nt);
    let mut cy = Vec::with_capacity(9 * nt);
    for ((t, &area), g) in mesh.triangles().iter().zip(mesh.areas()).zip(mesh.gradients()) {
        for a in 0..3 {
            for b in 0..3 {
                let (i, j) = (t[a], t[b]);
                m.push((i, j, if a == b { area / 6.0 } else { area / 12.0 }));
                k.push((i, j, area * (g[a][0] * g[b][0] + g[a][1] * g[b][1])));
                cx.push((i, j, area / 3.0 * g[b][0]));
                cy.push((i, j, area / 3.0 * g[b][1]));
            }
        }
    }
    let n = mesh.node_count();
    let mass = Csr::from_triplets(n, m);
    let lumped = mass.row_sums();
    FemMatrices {
        mass,
        lumped,
        stiffness: Csr::from_triplets(n, k),
        cx: Csr::from_triplets(n, cx),
        cy: Csr::from_triplets(n, cy),
    }
}

impl FemMatrices {
    /// `C(v)_ij = integral (v . grad(phi_j)) phi_i`.
    pub fn advection(&self, v: [f64; 2]) -> Csr {
        self.cx.lin_comb(v[0], &self.cy, v[1])
    }

    /// `sqrt(u^T M u)`.
    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        let mut mu = vec![0.0; u.len()];
        self.mass.matvec(u, &mut mu);
        u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// `integral u`.
    pub fn integral(&self, u: &[f64]) -> f64 {
        self.lumped.iter().zip(u).map(|(w, x)| w * x).sum()
    }
}

/// Nodal biomass, internal and dissolved phosphorus.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub biomass: Vec<f64>,
    pub internal: Vec<f64>,
    pub dissolved: Vec<f64>,
}

impl Field2D {
    pub fn uniform(n: usize, b: f64, p: f64, pd: f64) -> Self {
        Field2D { biomass: vec![b; n], internal: vec![p; n], dissolved: vec![pd; n] }
    }

    /// Gaussian bump `1 + 4 exp(-(d / w)^2)` centred at the bounding-box centre
    /// with `w` a tenth of the box diagonal, quota `0.02` and dissolved
    /// phosphorus at `P_h`.
    pub fn default_initial(mesh: &TriMesh, params: &ModelParams) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for n in mesh.nodes() {
            for d in 0..2 {
                lo[d] = lo[d].min(n[d]);
                hi[d] = hi[d].max(n[d]);
            }
        }
        let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let w = 0.1 * ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
        let biomass: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|x| 1.0 + 4.0 * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (w * w)).exp())
            .collect();
        let internal = biomass.iter().map(|b| 0.02 * b).collect();
        Field2D { biomass, internal, dissolved: vec![params.p_h; mesh.node_count()] }
    }

    pub fn len(&self) -> usize {
        self.biomass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biomass.is_empty()
    }

    /// Pointwise `p / max(B, eps)`.
    pub fn quota(&self, eps: f64) -> Vec<f64> {
        self.biomass.iter().zip(&self.internal).map(|(b, p)| p / b.max(eps)).collect()
    }

    pub fn max_biomass(&self) -> f64 {
        self.biomass.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_biomass(&self) -> f64 {
        self.biomass.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_invariants(&self, params: &ModelParams) -> Result<()> {
        for i in 0..self.len() {
            let (b, p, pd) = (self.biomass[i], self.internal[i], self.dissolved[i]);
            if b < POSITIVITY_FLOOR || p < POSITIVITY_FLOOR || pd < POSITIVITY_FLOOR || !(b.is_finite() && p.is_finite() && pd.is_finite()) {
                return Err(Error::domain(format!("node {i}: negative or non-finite state ({b}, {p}, {pd})")));
            }
            if b > QUOTA_BIOMASS_FLOOR {
                let q = p / b;
                if q < params.q_min - QUOTA_TOLERANCE || q > params.q_max + QUOTA_TOLERANCE {
                    return Err(Error::domain(format!("node {i}: quota {q} outside [{}, {}]", params.q_min, params.q_max)));
                }
            }
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.biomass.len() != n || self.internal.len() != n || self.dissolved.len() != n {
            return Err(Error::Dimension(format!("field arrays must have {n} entries")));
        }
        Ok(())
    }
}

/// Treatment of the transport operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Stabilization {
    /// Plain Galerkin. Oscillates, and can blow up, once the cell Peclet number exceeds 1.
    #[default]
    None,
    /// Adds the smallest symmetric artificial diffusion that removes negative
    /// off-diagonal couplings (discrete upwinding). Conservative and positivity
    /// preserving with the lumped mass, first-order accurate in space.
    DiscreteUpwind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options2D {
    /// Nominal time step (days).
    pub dt: f64,
    /// Newton stops when the scaled residual is below `tol * max(1, |U|_inf)`.
    pub tol: f64,
    pub max_newton: usize,
    /// Consecutive halvings of `dt` tried before giving up on a step.
    pub max_halvings: usize,
    /// Regularization of the growth quota, in biomass units.
    pub eps: f64,
    pub stabilization: Stabilization,
}

impl Default for Options2D {
    fn default() -> Self {
        Options2D { dt: 0.25, tol: 1e-10, max_newton: 25, max_halvings: 8, eps: 1e-10, stabilization: Stabilization::None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepInfo {
    pub iterations: usize,
    pub factorizations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
struct Cached {
    lu: BandLu,
    dt: f64,
    v: [f64; 2],
}

/// Reusable state for backward-Euler steps on one mesh.
///
/// The last factorized Newton matrix is kept and reused by later steps with the
/// same `dt` and wind until convergence slows down.
#[derive(Debug, Clone)]
pub struct Stepper2D {
    mats: FemMatrices,
    params: ModelParams,
    opts: Options2D,
    q_hat: f64,
    /// Node position in the banded ordering.
    order: Vec<usize>,
    half_band: usize,
    diameter: f64,
    cache: Option<Cached>,
}

impl Stepper2D {
    pub fn new(mesh: &TriMesh, params: &ModelParams, opts: Options2D) -> Result<Self> {
        params.validate()?;
        if !(opts.dt > 0.0) || !(opts.tol > 0.0) || opts.max_newton == 0 || !(opts.eps > 0.0) {
            return Err(Error::InvalidParameter { name: "solver2d", reason: format!("invalid options {opts:?}") });
        }
        let mats = assemble_fem(mesh);
        let adj = mats.stiffness.adjacency();
        let perm = reverse_cuthill_mckee(&adj);
        let bw = bandwidth(&adj, &perm);
        let mut order = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            order[old] = new;
        }
        Ok(Stepper2D {
            mats,
            params: *params,
            opts,
            q_hat: kernels::q_hat(params),
            order,
            half_band: 3 * bw + 2,
            diameter: mesh.max_diameter(),
            cache: None,
        })
    }

    pub fn matrices(&self) -> &FemMatrices {
        &self.mats
    }

    pub fn options(&self) -> &Options2D {
        &self.opts
    }

    /// Cell Peclet number `h |v| beta / (2 alpha)` for the faster of the two
    /// transported species, at wind `v` (m/day).
    pub fn peclet(&self, v: [f64; 2]) -> f64 {
        let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if speed == 0.0 {
            return 0.0;
        }
        let p = &self.params;
        let ratio = |b: f64, d: f64| if d > 0.0 { b / (2.0 * d) } else { f64::INFINITY };
        self.diameter * speed * ratio(p.beta_b, p.alpha).max(ratio(p.beta_p, p.beta))
    }

    fn dof(&self, node: usize, field: usize) -> usize {
        3 * self.order[node] + field
    }

    fn rates(&self, b: f64, p: f64, pd: f64) -> [f64; 3] {
        let q = quota_for_growth(b, p, self.opts.eps, self.q_hat, &self.params);
        reaction_rates([b, p, pd], q, &self.params)
    }

    /// Transport operators `T = d K + b C(v)` for `(B, p)` and for `P`.
    fn transport(&self, v: [f64; 2]) -> [Csr; 2] {
        let p = &self.params;
        let adv = self.mats.advection(v);
        let build = |d: f64, b: f64| {
            let t = self.mats.stiffness.lin_comb(d, &adv, b);
            match self.opts.stabilization {
                Stabilization::None => t,
                Stabilization::DiscreteUpwind => discrete_upwind(&t),
            }
        };
        [build(p.alpha, p.beta_b), build(p.beta, p.beta_p)]
    }

    /// Scaled residual `U - U_n + dt M_L^{-1} (T U - M_L R(U))`, in dof order.
    fn residual(&self, u: &Field2D, prev: &Field2D, dt: f64, ops: &[Csr; 2], out: &mut [f64]) {
        let n = u.len();
        let fields = [&u.biomass, &u.internal, &u.dissolved];
        let mut tu = vec![0.0; n];
        for c in 0..3 {
            ops[c / 2].matvec(fields[c], &mut tu);
            for i in 0..n {
                out[self.dof(i, c)] = dt * tu[i] / self.mats.lumped[i];
            }
        }
        for i in 0..n {
            let r = self.rates(u.biomass[i], u.internal[i], u.dissolved[i]);
            out[self.dof(i, 0)] += u.biomass[i] - prev.biomass[i] - dt * r[0];
            out[self.dof(i, 1)] += u.internal[i] - prev.internal[i] - dt * r[1];
            out[self.dof(i, 2)] += u.dissolved[i] - prev.dissolved[i] - dt * r[2];
        }
    }

    fn jacobian(&self, u: &Field2D, dt: f64, ops: &[Csr; 2]) -> Result<BandLu> {
        let n = u.len();
        let mut jac = BandMatrix::zeros(3 * n, self.half_band, self.half_band);
        for i in 0..n {
            let w = dt / self.mats.lumped[i];
            for c in 0..3 {
                let (cols, vals) = ops[c / 2].row(i);
                for (&j, &tij) in cols.iter().zip(vals) {
                    jac.add(self.dof(i, c), self.dof(j, c), w * tij);
                }
            }
            let x = [u.biomass[i], u.internal[i], u.dissolved[i]];
            let r0 = self.rates(x[0], x[1], x[2]);
            for col in 0..3 {
                let h = 1e-7 * x[col].abs().max(1e-6);
                let mut xp = x;
                xp[col] += h;
                let r1 = self.rates(xp[0], xp[1], xp[2]);
                for row in 0..3 {
                    let d = (r1[row] - r0[row]) / h;
                    jac.add(self.dof(i, row), self.dof(i, col), -dt * d);
                }
            }
            for c in 0..3 {
                jac.add(self.dof(i, c), self.dof(i, c), 1.0);
            }
        }
        jac.factor()
    }

    /// One backward-Euler step of size `dt` ending at wind `v` (m/day).
    pub fn step(&mut self, prev: &Field2D, dt: f64, v: [f64; 2]) -> Result<(Field2D, StepInfo)> {
        let n = prev.len();
        let ops = self.transport(v);
        let mut u = prev.clone();
        let mut res = vec![0.0; 3 * n];
        let mut info = StepInfo::default();
        let mut fresh = false;
        if self.cache.as_ref().is_some_and(|c| c.dt != dt || c.v != v) {
            self.cache = None;
        }
        let mut last = f64::INFINITY;
        for it in 0..=self.opts.max_newton {
            self.residual(&u, prev, dt, &ops, &mut res);
            let norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            let scale = u.biomass.iter().chain(&u.internal).chain(&u.dissolved).fold(1.0f64, |m, x| m.max(x.abs()));
            info.iterations = it;
            info.residual = norm;
            if !norm.is_finite() {
                break;
            }
            if norm <= self.opts.tol * scale {
                return Ok((u, info));
            }
            if it == self.opts.max_newton {
                break;
            }
            // Chord iterations; refresh the matrix when contraction is slow.
            if self.cache.is_none() || (norm > 0.25 * last && !fresh) {
                let lu = self.jacobian(&u, dt, &ops)?;
                self.cache = Some(Cached { lu, dt, v });
                info.factorizations += 1;
                fresh = true;
            } else if norm > 0.25 * last {
                fresh = false;
            }
            last = norm;
            self.cache.as_ref().unwrap().lu.solve_in_place(&mut res);
            for i in 0..n {
                u.biomass[i] -= res[self.dof(i, 0)];
                u.internal[i] -= res[self.dof(i, 1)];
                u.dissolved[i] -= res[self.dof(i, 2)];
            }
        }
        self.cache = None;
        Err(Error::NoConvergence { iterations: info.iterations, residual: info.residual, best: vec![] })
    }

    /// Step with `dt`, halving on Newton failure. Returns the time reached.
    pub fn advance<W: Wind + ?Sized>(&mut self, u: &mut Field2D, t: f64, dt: f64, wind: &W, log: &mut RunLog) -> Result<f64> {
        let mut h = dt;
        for attempt in 0..=self.opts.max_halvings {
            let v = wind.velocity(t + h);
            match self.step(u, h, v) {
                Ok((next, info)) => {
                    *u = next;
                    log.steps += 1;
                    log.newton_iterations += info.iterations;
                    log.factorizations += info.factorizations;
                    log.max_peclet = log.max_peclet.max(self.peclet(v));
                    return Ok(t + h);
                }
                Err(e @ Error::NoConvergence { .. }) if attempt == self.opts.max_halvings => {
                    return Err(e);
                }
                Err(Error::NoConvergence { .. }) => {
                    log.halvings += 1;
                    h *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        unreachable!()
    }
}

/// `T - D` where `D` is the symmetric, zero-row-sum matrix with
/// `D_ij = max(0, T_ij, T_ji)` off the diagonal. Afterwards every off-diagonal
/// entry is nonpositive.
fn discrete_upwind(t: &Csr) -> Csr {
    let n = t.dim();
    let mut trip = Vec::with_capacity(t.nnz() + n);
    for i in 0..n {
        let (cols, vals) = t.row(i);
        let mut diag = 0.0;
        for (&j, &tij) in cols.iter().zip(vals) {
            trip.push((i, j, tij));
            if j != i {
                let d = tij.max(t.get(j, i)).max(0.0);
                if d > 0.0 {
                    trip.push((i, j, -d));
                    diag += d;
                }
            }
        }
        trip.push((i, i, diag));
    }
    Csr::from_triplets(n, trip)
}

/// Counters gathered over a 2D run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunLog {
    pub steps: usize,
    pub halvings: usize,
    pub newton_iterations: usize,
    pub factorizations: usize,
    /// Largest cell Peclet number seen; above 1 the Galerkin advection may oscillate.
    pub max_peclet: f64,
}

/// One backward-Euler step on `mesh` with wind evaluated at `t_next`.
pub fn newton_be_step<W: Wind + ?Sized>(
    prev: &Field2D,
    dt: f64,
    t_next: f64,
    mesh: &TriMesh,
    wind: &W,
    params: &ModelParams,
    tol: f64,
) -> Result<Field2D> {
    prev.check_len(mesh.node_count())?;
    let mut stepper = Stepper2D::new(mesh, params, Options2D { dt, tol, ..Options2D::default() })?;
    Ok(stepper.step(prev, dt, wind.velocity(t_next))?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation2D {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field2D>,
    pub log: RunLog,
}

/// Integrates to `t_end`, landing exactly on each of `output_times` (sorted,
/// in `[0, t_end]`). Invariants are checked at every snapshot.
pub fn simulate_2d<W: Wind + ?Sized>(
    initial: &Field2D,
    mesh: &TriMesh,
    wind: &W,
    params: &ModelParams,
    opts: Options2D,
    t_end: f64,
    output_times: &[f64],
) -> Result<Simulation2D> {
    initial.check_len(mesh.node_count())?;
    initial.check_invariants(params)?;
    if !(t_end >= 0.0) {
        return Err(Error::InvalidParameter { name: "t_end", reason: format!("must be >= 0, got {t_end}") });
    }
    if output_times.windows(2).any(|w| !(w[0] < w[1])) || output_times.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(Error::InvalidParameter { name: "output_times", reason: "must be increasing and inside [0, t_end]".into() });
    }
    let mut stepper = Stepper2D::new(mesh, params, opts)?;
    let mut sim = Simulation2D { times: Vec::new(), snapshots: Vec::new(), log: RunLog::default() };
    let mut u = initial.clone();
    let mut t = 0.0;
    let mut next_out = 0;
    let record = |sim: &mut Simulation2D, t: f64, u: &Field2D| -> Result<()> {
        u.check_invariants(params).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("t = {t}: {m}")),
            other => other,
        })?;
        sim.times.push(t);
        sim.snapshots.push(u.clone());
        Ok(())
    };
    while next_out < output_times.len() && output_times[next_out] <= 0.0 {
        record(&mut sim, 0.0, &u)?;
        next_out += 1;
    }
    while t < t_end {
        let target = output_times.get(next_out).copied().unwrap_or(t_end);
        let mut dt = opts.dt.min(target - t);
        // Avoid a sliver step just before an output time.
        if target - t - dt < 1e-9 * opts.dt {
            dt = target - t;
        }
        t = stepper.advance(&mut u, t, dt, wind, &mut sim.log)?;
        if (t - target).abs() <= 1e-9 * opts.dt.max(1.0) {
            t = target;
            if next_out < output_times.len() {
                record(&mut sim, t, &u)?;
                next_out += 1;
            }
        }
    }
    Ok(sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{reaction_jacobian, reaction_rhs};
    use crate::linalg::solve_dense;
    use crate::mesh::lake_mesh;
    use crate::params::{HomState, Parameter};
    use crate::wind::ConstantWind;

    fn mesh() -> TriMesh {
        lake_mesh(500.0, 5).unwrap()
    }

    #[test]
    fn matrix_identities() {
        let m = mesh();
        let f = assemble_fem(&m);
        let n = m.node_count();
        let total: f64 = f.lumped.iter().sum();
        assert!((total - m.total_area()).abs() < 1e-9 * total);
        let ones = vec![1.0; n];
        let mut out = vec![0.0; n];
        f.stiffness.matvec(&ones, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-9));
        f.advection([3.0, -2.0]).matvec(&ones, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-9));
        let zero = f.advection([0.0, 0.0]);
        assert!((0..n).all(|i| zero.row(i).1.iter().all(|v| *v == 0.0)));
        for i in 0..n {
            for (&j, &v) in f.stiffness.row(i).0.iter().zip(f.stiffness.row(i).1) {
                assert!((v - f.stiffness.get(j, i)).abs() < 1e-12);
                assert!((f.mass.get(i, j) - f.mass.get(j, i)).abs() < 1e-12);
            }
        }
        // Stiffness is positive semidefinite: x^T K x >= 0 for a few vectors.
        for s in 1..5 {
            let x: Vec<f64> = (0..n).map(|i| ((i * s) as f64 * 0.37).sin()).collect();
            f.stiffness.matvec(&x, &mut out);
            assert!(x.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>() >= -1e-9);
        }
    }

    #[test]
    fn advection_is_linear_in_wind() {
        let f = assemble_fem(&mesh());
        let a = f.advection([1.0, 0.0]);
        let b = f.advection([0.0, 1.0]);
        let c = f.advection([2.0, -3.0]);
        for i in 0..f.lumped.len() {
            for &j in c.row(i).0 {
                assert!((c.get(i, j) - (2.0 * a.get(i, j) - 3.0 * b.get(i, j))).abs() < 1e-12);
            }
        }
    }

    /// Scalar backward-Euler step on the homogeneous reactions, by Newton.
    fn be_oracle(s: [f64; 3], dt: f64, p: &ModelParams) -> [f64; 3] {
        let mut u = s;
        for _ in 0..50 {
            let st = HomState::from_array(u);
            let r = reaction_rhs(&st, p).unwrap();
            let j = reaction_jacobian(&st, p);
            let mut g = [u[0] - s[0] - dt * r[0], u[1] - s[1] - dt * r[1], u[2] - s[2] - dt * r[2]];
            let mut a = [0.0; 9];
            for i in 0..3 {
                for k in 0..3 {
                    a[3 * i + k] = if i == k { 1.0 } else { 0.0 } - dt * j[i][k];
                }
            }
            solve_dense(&mut a, &mut g).unwrap();
            for i in 0..3 {
                u[i] -= g[i];
            }
        }
        u
    }

    #[test]
    fn uniform_step_matches_scalar_backward_euler() {
        let p = ModelParams::default();
        let m = mesh();
        let n = m.node_count();
        let s = [3.0, 0.06, 0.4];
        let u = Field2D::uniform(n, s[0], s[1], s[2]);
        let next = newton_be_step(&u, 0.5, 0.5, &m, &ConstantWind::default(), &p, 1e-12).unwrap();
        let expect = be_oracle(s, 0.5, &p);
        for i in 0..n {
            assert!((next.biomass[i] - expect[0]).abs() < 1e-9 * expect[0]);
            assert!((next.internal[i] - expect[1]).abs() < 1e-9 * expect[1]);
            assert!((next.dissolved[i] - expect[2]).abs() < 1e-9 * expect[2]);
        }
    }

    #[test]
    fn extinction_state_is_fixed() {
        let p = ModelParams::default();
        let m = mesh();
        let u = Field2D::uniform(m.node_count(), 0.0, 0.0, p.p_h);
        let next = newton_be_step(&u, 1.0, 1.0, &m, &ConstantWind([50.0, 10.0]), &p, 1e-12).unwrap();
        assert_eq!(next, u);
    }

    #[test]
    fn heat_step_conserves_integral() {
        let p = ModelParams::default()
            .with(Parameter::R, 1e-12)
            .with(Parameter::Loss, 1e-12)
            .with(Parameter::Exchange, 0.0)
            .with(Parameter::RhoMax, 1e-12)
            .with(Parameter::Alpha, 50.0);
        let m = mesh();
        let f = assemble_fem(&m);
        let u = Field2D::default_initial(&m, &p);
        let next = newton_be_step(&u, 1.0, 1.0, &m, &ConstantWind::default(), &p, 1e-13).unwrap();
        let (a, b) = (f.integral(&u.biomass), f.integral(&next.biomass));
        assert!((a - b).abs() < 1e-9 * a);
        assert!(next.max_biomass() < u.max_biomass());
    }

    #[test]
    fn simulation_hits_output_times() {
        let p = ModelParams::default();
        let m = mesh();
        let u = Field2D::default_initial(&m, &p);
        let opts = Options2D { dt: 0.3, ..Options2D::default() };
        let sim = simulate_2d(&u, &m, &ConstantWind([20.0, 0.0]), &p, opts, 2.0, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(sim.times, vec![0.0, 1.0, 2.0]);
        assert!(sim.log.steps >= 7);
        assert!(sim.log.max_peclet > 0.0);
        assert!(simulate_2d(&u, &m, &ConstantWind::default(), &p, opts, 1.0, &[2.0]).is_err());
    }
}

//! Variance-based global sensitivity analysis.
//!
//! Base points come from a Sobol' sequence (Joe-Kuo direction numbers, file
//! `new-joe-kuo-6.21201`) with a seeded random digital shift. The design stacks,
//! for every base point `j`, the rows `A_j, AB_j^(1), ..., AB_j^(d), B_j`, where
//! `AB^(i)` is `A` with column `i` taken from `B`. First-order indices use the
//! Saltelli (2010) estimator, total-order indices the Jansen estimator.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Parameter};
use crate::solver1d::{build_grid, integrate_1d, Field1D};
use crate::wind::Wind;

/// Primitive polynomial (with leading and trailing bits) and initial direction
/// integers per dimension.
const DIRECTIONS: [(u32, &[u32]); 20] = [
    (1, &[1]),
    (3, &[1]),
    (7, &[1, 3]),
    (11, &[1, 3, 1]),
    (13, &[1, 1, 1]),
    (19, &[1, 1, 3, 3]),
    (25, &[1, 3, 5, 13]),
    (37, &[1, 1, 5, 5, 17]),
    (41, &[1, 1, 5, 5, 5]),
    (47, &[1, 1, 7, 11, 19]),
    (55, &[1, 1, 5, 1, 1]),
    (59, &[1, 1, 1, 3, 11]),
    (61, &[1, 3, 5, 5, 31]),
    (67, &[1, 3, 3, 9, 7, 49]),
    (91, &[1, 1, 1, 15, 21, 21]),
    (97, &[1, 3, 1, 13, 27, 49]),
    (103, &[1, 1, 1, 15, 7, 5]),
    (109, &[1, 3, 1, 15, 13, 25]),
    (115, &[1, 1, 5, 5, 19, 61]),
    (131, &[1, 3, 7, 11, 23, 15, 103]),
];

const BITS: usize = 32;

/// Unscrambled Sobol' points in Gray-code order, starting from the origin.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    pub const MAX_DIM: usize = DIRECTIONS.len();

    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > Self::MAX_DIM {
            return Err(Error::Dimension(format!("Sobol' dimension must be in 1..={}, got {dim}", Self::MAX_DIM)));
        }
        let directions = DIRECTIONS[..dim]
            .iter()
            .enumerate()
            .map(|(d, &(poly, init))| {
                let mut v = [0u32; BITS];
                if d == 0 {
                    for (i, vi) in v.iter_mut().enumerate() {
                        *vi = 1 << (BITS - 1 - i);
                    }
                    return v;
                }
                let s = (31 - poly.leading_zeros()) as usize;
                let mut m = vec![0u64; BITS];
                m[..s].copy_from_slice(&init.iter().map(|&x| x as u64).collect::<Vec<_>>());
                for i in s..BITS {
                    let mut x = m[i - s] ^ (m[i - s] << s);
                    for k in 1..s {
                        if (poly >> (s - k)) & 1 == 1 {
                            x ^= m[i - k] << k;
                        }
                    }
                    m[i] = x;
                }
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi = (m[i] << (BITS - 1 - i)) as u32;
                }
                v
            })
            .collect();
        Ok(SobolSequence { directions, state: vec![0; dim], index: 0 })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// Next point as raw 32-bit integers.
    pub fn next_bits(&mut self) -> Vec<u32> {
        let out = self.state.clone();
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            for (s, v) in self.state.iter_mut().zip(&self.directions) {
                *s ^= v[c];
            }
        }
        self.index += 1;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Factor {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Factor {
    pub fn new(name: &str, lower: f64, upper: f64) -> Self {
        Factor { name: name.into(), lower, upper }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SobolProblem {
    pub factors: Vec<Factor>,
}

impl SobolProblem {
    /// The five physical factors and their ranges.
    pub fn lake() -> Self {
        SobolProblem {
            factors: vec![
                Factor::new("z_m", 2.0, 10.0),
                Factor::new("K_bg", 0.1, 1.0),
                Factor::new("D", 0.01, 0.1),
                Factor::new("P_in", 0.0, 0.3),
                Factor::new("beta_B", 0.01, 0.1),
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() || 2 * self.dim() > SobolSequence::MAX_DIM {
            return Err(Error::Dimension(format!("need 1..={} factors, got {}", SobolSequence::MAX_DIM / 2, self.dim())));
        }
        for f in &self.factors {
            if !(f.lower.is_finite() && f.upper.is_finite() && f.lower <= f.upper) {
                return Err(Error::InvalidParameter { name: "factor range", reason: format!("{}: [{}, {}]", f.name, f.lower, f.upper) });
            }
        }
        Ok(())
    }

    /// Checks that every factor names a model parameter and that both range ends
    /// give valid parameter sets.
    pub fn validate_for(&self, base: &ModelParams) -> Result<()> {
        self.validate()?;
        let lo: Vec<f64> = self.factors.iter().map(|f| f.lower).collect();
        let hi: Vec<f64> = self.factors.iter().map(|f| f.upper).collect();
        self.apply(base, &lo)?;
        self.apply(base, &hi)?;
        Ok(())
    }

    /// `base` with the factor values of one design row substituted.
    pub fn apply(&self, base: &ModelParams, row: &[f64]) -> Result<ModelParams> {
        let mut p = *base;
        for (f, &x) in self.factors.iter().zip(row) {
            let param = Parameter::from_symbol(&f.name)
                .ok_or_else(|| Error::InvalidParameter { name: "factor", reason: format!("unknown parameter {}", f.name) })?;
            p.set(param, x);
        }
        p.validate()?;
        Ok(p)
    }
}

/// Evaluation rows of a Saltelli design, `n (d + 2)` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliDesign {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl SaltelliDesign {
    pub fn base_samples(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n * (self.d + 2)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.d..(k + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.d)
    }

    /// Sobol' estimates lose their balance properties unless `n` is a power of two.
    pub fn is_balanced(&self) -> bool {
        self.n.is_power_of_two()
    }
}

pub fn saltelli_design(problem: &SobolProblem, n: usize, seed: u64) -> Result<SaltelliDesign> {
    problem.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter { name: "N", reason: format!("need at least 2 base samples, got {n}") });
    }
    let d = problem.dim();
    let mut seq = SobolSequence::new(2 * d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<u32> = (0..2 * d).map(|_| rng.next_u32()).collect();
    let scale = 1.0 / 4_294_967_296.0;
    let mut values = Vec::with_capacity(n * (d + 2) * d);
    for _ in 0..n {
        let bits = seq.next_bits();
        let unit: Vec<f64> = bits.iter().zip(&shift).map(|(b, s)| (b ^ s) as f64 * scale).collect();
        let x: Vec<f64> = unit
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let f = &problem.factors[k % d];
                f.lower + (f.upper - f.lower) * u
            })
            .collect();
        let (a, b) = x.split_at(d);
        values.extend_from_slice(a);
        for i in 0..d {
            values.extend(a.iter().enumerate().map(|(k, v)| if k == i { b[k] } else { *v }));
        }
        values.extend_from_slice(b);
    }
    Ok(SaltelliDesign { n, d, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Indices {
    pub first: Vec<f64>,
    pub total: Vec<f64>,
    /// Blocks that entered the estimate.
    pub blocks: usize,
}

/// Estimates `(S1, ST)` from outputs aligned with the design rows. A block
/// containing a non-finite output is dropped as a whole.
pub fn estimate_indices(outputs: &[f64], d: usize) -> Result<Indices> {
    let width = d + 2;
    if d == 0 || !outputs.len().is_multiple_of(width) {
        return Err(Error::Dimension(format!("{} outputs do not form blocks of {width}", outputs.len())));
    }
    let blocks: Vec<&[f64]> = outputs.chunks(width).filter(|b| b.iter().all(|v| v.is_finite())).collect();
    let m = blocks.len();
    if m < 2 {
        return Err(Error::TooManyFailures { failed: outputs.len() / width - m, total: outputs.len() / width });
    }
    let mean = blocks.iter().map(|b| b[0] + b[d + 1]).sum::<f64>() / (2 * m) as f64;
    let var = blocks.iter().map(|b| (b[0] - mean).powi(2) + (b[d + 1] - mean).powi(2)).sum::<f64>() / (2 * m) as f64;
    if !(var > 1e-24 * mean * mean) || var == 0.0 {
        return Err(Error::ConstantOutput);
    }
    let mut first = vec![0.0; d];
    let mut total = vec![0.0; d];
    for i in 0..d {
        let (mut s, mut t) = (0.0, 0.0);
        for b in &blocks {
            let (fa, fab, fb) = (b[0], b[1 + i], b[d + 1]);
            s += fb * (fab - fa);
            t += (fa - fab) * (fa - fab);
        }
        first[i] = s / m as f64 / var;
        total[i] = 0.5 * t / m as f64 / var;
    }
    Ok(Indices { first, total, blocks: m })
}

/// `count` equal bins covering `(0, horizon]`, where `count` is `horizon / bin_days`
/// rounded to the nearest integer (at least one).
pub fn time_bins(horizon: f64, bin_days: f64) -> Result<Vec<(f64, f64)>> {
    if !(horizon > 0.0) || !(bin_days > 0.0) {
        return Err(Error::InvalidParameter { name: "bins", reason: format!("horizon {horizon} and bin width {bin_days} must be positive") });
    }
    let count = ((horizon / bin_days).round() as usize).max(1);
    let w = horizon / count as f64;
    Ok((0..count).map(|k| (k as f64 * w, if k + 1 == count { horizon } else { (k + 1) as f64 * w })).collect())
}

/// Averages sampled spatial profiles over each bin `(start, end]`.
pub fn bin_average(times: &[f64], profiles: &[Vec<f64>], bins: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
    bins.iter()
        .map(|&(lo, hi)| {
            let mut acc: Option<Vec<f64>> = None;
            let mut count = 0usize;
            for (t, prof) in times.iter().zip(profiles) {
                if *t > lo && *t <= hi {
                    match acc.as_mut() {
                        None => acc = Some(prof.clone()),
                        Some(a) => a.iter_mut().zip(prof).for_each(|(x, y)| *x += y),
                    }
                    count += 1;
                }
            }
            let mut a = acc.ok_or_else(|| Error::InvalidParameter { name: "bins", reason: format!("no samples in ({lo}, {hi}]") })?;
            a.iter_mut().for_each(|x| *x /= count as f64);
            Ok(a)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub factor: String,
    pub bin_start: f64,
    pub bin_end: f64,
    pub s1_mean: f64,
    pub s1_sd: f64,
    pub st_mean: f64,
    pub st_sd: f64,
    pub n: usize,
}

/// Indices per factor and bin, averaged over the spatial points, with the
/// population standard deviation over points.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub factors: Vec<String>,
    pub bins: Vec<(f64, f64)>,
    /// Blocks used in the estimates.
    pub n: usize,
    pub failed_rows: usize,
    /// Indexed `[factor][bin]`.
    pub s1_mean: Vec<Vec<f64>>,
    pub s1_sd: Vec<Vec<f64>>,
    pub st_mean: Vec<Vec<f64>>,
    pub st_sd: Vec<Vec<f64>>,
    /// Spatial points skipped in each bin because their output did not vary.
    pub constant_points: Vec<usize>,
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64;
    (m, v.sqrt())
}

impl SensitivityReport {
    /// Reduces per-row outputs (`None` for a failed model run; otherwise one
    /// spatial profile per bin) into the report. More than 1% failed rows aborts.
    pub fn from_outputs(problem: &SobolProblem, design: &SaltelliDesign, bins: &[(f64, f64)], outputs: &[Option<Vec<Vec<f64>>>]) -> Result<Self> {
        if outputs.len() != design.len() {
            return Err(Error::Dimension(format!("{} outputs for {} design rows", outputs.len(), design.len())));
        }
        let failed_rows = outputs.iter().filter(|o| o.is_none()).count();
        if failed_rows * 100 > outputs.len() {
            return Err(Error::TooManyFailures { failed: failed_rows, total: outputs.len() });
        }
        let d = design.dim();
        let first = outputs.iter().flatten().next().ok_or(Error::TooManyFailures { failed: failed_rows, total: outputs.len() })?;
        if first.len() != bins.len() {
            return Err(Error::Dimension(format!("expected {} bins per output, got {}", bins.len(), first.len())));
        }
        let points = first[0].len();
        if outputs.iter().flatten().any(|o| o.len() != bins.len() || o.iter().any(|p| p.len() != points)) {
            return Err(Error::Dimension("model outputs differ in shape".into()));
        }
        let nf = problem.dim();
        let mut rep = SensitivityReport {
            factors: problem.factors.iter().map(|f| f.name.clone()).collect(),
            bins: bins.to_vec(),
            n: 0,
            failed_rows,
            s1_mean: vec![vec![0.0; bins.len()]; nf],
            s1_sd: vec![vec![0.0; bins.len()]; nf],
            st_mean: vec![vec![0.0; bins.len()]; nf],
            st_sd: vec![vec![0.0; bins.len()]; nf],
            constant_points: vec![0; bins.len()],
        };
        let mut column = vec![0.0; outputs.len()];
        for b in 0..bins.len() {
            let mut s1 = vec![Vec::with_capacity(points); nf];
            let mut st = vec![Vec::with_capacity(points); nf];
            for pt in 0..points {
                for (c, o) in column.iter_mut().zip(outputs) {
                    *c = o.as_ref().map_or(f64::NAN, |v| v[b][pt]);
                }
                match estimate_indices(&column, d) {
                    Ok(ix) => {
                        rep.n = ix.blocks;
                        for f in 0..nf {
                            s1[f].push(ix.first[f]);
                            st[f].push(ix.total[f]);
                        }
                    }
                    Err(Error::ConstantOutput) => rep.constant_points[b] += 1,
                    Err(e) => return Err(e),
                }
            }
            if rep.constant_points[b] == points {
                return Err(Error::ConstantOutput);
            }
            for f in 0..nf {
                (rep.s1_mean[f][b], rep.s1_sd[f][b]) = mean_sd(&s1[f]);
                (rep.st_mean[f][b], rep.st_sd[f][b]) = mean_sd(&st[f]);
            }
        }
        Ok(rep)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out = Vec::new();
        for (f, name) in self.factors.iter().enumerate() {
            for (b, &(lo, hi)) in self.bins.iter().enumerate() {
                out.push(ReportRow {
                    factor: name.clone(),
                    bin_start: lo,
                    bin_end: hi,
                    s1_mean: self.s1_mean[f][b],
                    s1_sd: self.s1_sd[f][b],
                    st_mean: self.st_mean[f][b],
                    st_sd: self.st_sd[f][b],
                    n: self.n,
                });
            }
        }
        out
    }

    /// Mean over bins of the total-order index of factor `f`.
    pub fn mean_total(&self, f: usize) -> f64 {
        self.st_mean[f].iter().sum::<f64>() / self.bins.len() as f64
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f == name)
    }

    /// `(factor, bin)` pairs whose mean indices fall outside `[0, 1]`.
    pub fn out_of_range(&self) -> Vec<(usize, usize)> {
        let bad = |x: f64| !(0.0..=1.0).contains(&x);
        let mut out = Vec::new();
        for f in 0..self.factors.len() {
            for b in 0..self.bins.len() {
                if bad(self.s1_mean[f][b]) || bad(self.st_mean[f][b]) {
                    out.push((f, b));
                }
            }
        }
        out
    }
}

/// The 1D model as seen by the sensitivity analysis: default initial data, daily
/// samples of `B`, averaged per time bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario1D {
    pub length: f64,
    pub nx: usize,
    pub horizon: f64,
    pub bin_days: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Scenario1D {
    fn default() -> Self {
        Scenario1D { length: 1000.0, nx: 41, horizon: 365.0, bin_days: 60.0, rtol: 1e-6, atol: 1e-12 }
    }
}

impl Scenario1D {
    pub fn bins(&self) -> Result<Vec<(f64, f64)>> {
        time_bins(self.horizon, self.bin_days)
    }

    pub fn evaluate<W: Wind + ?Sized>(&self, params: &ModelParams, wind: &W) -> Result<Vec<Vec<f64>>> {
        let grid = build_grid(self.length, self.nx)?;
        let initial = Field1D::default_initial(&grid, params);
        let days = self.horizon.floor() as usize;
        let mut times: Vec<f64> = (1..=days).map(|k| k as f64).collect();
        if times.last().is_none_or(|&t| t < self.horizon) {
            times.push(self.horizon);
        }
        let traj = integrate_1d(&initial, &grid, wind, params, self.horizon, self.rtol, self.atol, &times)?;
        let profiles: Vec<Vec<f64>> = traj.fields.into_iter().map(|f| f.biomass).collect();
        bin_average(&traj.times, &profiles, &self.bins()?)
    }
}

/// Serial driver: design, one model run per row, reduction.
pub fn run_sensitivity<F>(problem: &SobolProblem, base: &ModelParams, n: usize, bins: &[(f64, f64)], seed: u64, mut model: F) -> Result<SensitivityReport>
where
    F: FnMut(&ModelParams) -> Result<Vec<Vec<f64>>>,
{
    problem.validate_for(base)?;
    let design = saltelli_design(problem, n, seed)?;
    let outputs: Vec<Option<Vec<Vec<f64>>>> = design
        .rows()
        .map(|row| problem.apply(base, row).and_then(|p| model(&p)).ok())
        .collect();
    SensitivityReport::from_outputs(problem, &design, bins, &outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn sequence_matches_reference_points() {
        // Unscrambled 32-bit points from an independent implementation.
        let expected: [(usize, [u32; 12]); 5] = [
            (2, [3221225472, 1073741824, 1073741824, 1073741824, 3221225472, 3221225472, 1073741824, 3221225472, 3221225472, 3221225472, 3221225472, 3221225472]),
            (3, [1073741824, 3221225472, 3221225472, 3221225472, 1073741824, 1073741824, 3221225472, 1073741824, 1073741824, 1073741824, 1073741824, 1073741824]),
            (5, [3758096384, 3758096384, 536870912, 1610612736, 3758096384, 2684354560, 3758096384, 1610612736, 1610612736, 536870912, 1610612736, 3758096384]),
            (100, [1778384896, 1107296256, 3321888768, 3120562176, 3791650816, 3187671040, 100663296, 2046820352, 2717908992, 2986344448, 1979711488, 2919235584]),
            (1023, [4194304, 3233808384, 2629828608, 624951296, 801112064, 1883242496, 599785472, 2654994432, 1480589312, 3653238784, 2915041280, 155189248]),
        ];
        let mut seq = SobolSequence::new(12).unwrap();
        let pts: Vec<Vec<u32>> = (0..1024).map(|_| seq.next_bits()).collect();
        assert!(pts[0].iter().all(|&x| x == 0));
        for (k, row) in expected {
            assert_eq!(pts[k], row, "point {k}");
        }
    }

    #[test]
    fn design_shape_and_bounds() {
        let p = SobolProblem::lake();
        let d = saltelli_design(&p, 2048, 7).unwrap();
        assert_eq!(d.len(), 14336);
        assert!(d.is_balanced());
        for row in d.rows() {
            for (x, f) in row.iter().zip(&p.factors) {
                assert!(*x >= f.lower && *x <= f.upper);
            }
        }
        assert_eq!(d, saltelli_design(&p, 2048, 7).unwrap());
        assert_ne!(d, saltelli_design(&p, 2048, 8).unwrap());
        assert!(!saltelli_design(&p, 100, 7).unwrap().is_balanced());
    }

    #[test]
    fn cross_rows_mix_a_and_b() {
        let p = SobolProblem { factors: vec![Factor::new("a", 0.0, 1.0), Factor::new("b", 0.0, 1.0), Factor::new("c", 0.0, 1.0)] };
        let d = saltelli_design(&p, 4, 1).unwrap();
        for j in 0..4 {
            let a = d.row(5 * j);
            let b = d.row(5 * j + 4);
            for i in 0..3 {
                let ab = d.row(5 * j + 1 + i);
                for k in 0..3 {
                    assert_eq!(ab[k], if k == i { b[k] } else { a[k] });
                }
            }
        }
    }

    fn ishigami(x: &[f64]) -> f64 {
        x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin()
    }

    fn ishigami_problem() -> SobolProblem {
        SobolProblem { factors: (0..3).map(|i| Factor::new(["x1", "x2", "x3"][i], -PI, PI)).collect() }
    }

    fn ishigami_exact() -> [f64; 3] {
        let (a, b) = (7.0, 0.1);
        let pi4 = PI.powi(4);
        let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
        let v2 = a * a / 8.0;
        let var = v1 + v2 + b * b * PI.powi(8) * 8.0 / 225.0;
        [v1 / var, v2 / var, 0.0]
    }

    fn ishigami_indices(n: usize, seed: u64) -> Indices {
        let d = saltelli_design(&ishigami_problem(), n, seed).unwrap();
        let y: Vec<f64> = d.rows().map(ishigami).collect();
        estimate_indices(&y, 3).unwrap()
    }

    #[test]
    fn ishigami_first_order() {
        let exact = ishigami_exact();
        assert!((exact[0] - 0.3139).abs() < 1e-3 && (exact[1] - 0.4424).abs() < 1e-3);
        let ix = ishigami_indices(2048, 11);
        for i in 0..3 {
            assert!((ix.first[i] - exact[i]).abs() < 0.05, "S1[{i}] = {}", ix.first[i]);
            assert!(ix.total[i] + 0.05 >= ix.first[i]);
        }
    }

    #[test]
    fn ishigami_error_shrinks_with_n() {
        let exact = ishigami_exact();
        let err = |n| {
            (0..8u64)
                .map(|s| {
                    let ix = ishigami_indices(n, s);
                    (0..3).map(|i| (ix.first[i] - exact[i]).abs()).sum::<f64>()
                })
                .sum::<f64>()
        };
        assert!(err(2048) < err(1024));
    }

    #[test]
    fn additive_model_has_equal_indices() {
        let p = SobolProblem { factors: vec![Factor::new("a", 0.0, 1.0), Factor::new("b", 0.0, 1.0), Factor::new("c", 0.0, 1.0)] };
        let d = saltelli_design(&p, 2048, 3).unwrap();
        let y: Vec<f64> = d.rows().map(|x| x[0] + 2.0 * x[1] + 3.0 * x[2]).collect();
        let ix = estimate_indices(&y, 3).unwrap();
        let exact = [1.0 / 14.0, 4.0 / 14.0, 9.0 / 14.0];
        for i in 0..3 {
            assert!((ix.first[i] - ix.total[i]).abs() < 0.03);
            assert!((ix.first[i] - exact[i]).abs() < 0.03);
        }
    }

    #[test]
    fn idle_factor_scores_zero() {
        let d = saltelli_design(&ishigami_problem(), 2048, 5).unwrap();
        let y: Vec<f64> = d.rows().map(|x| x[0].sin() + 7.0 * x[1].sin().powi(2)).collect();
        let ix = estimate_indices(&y, 3).unwrap();
        assert!(ix.first[2].abs() < 0.03 && ix.total[2].abs() < 0.03);
    }

    #[test]
    fn constant_output_is_an_error() {
        let y = vec![2.5; 5 * 16];
        assert!(matches!(estimate_indices(&y, 3), Err(Error::ConstantOutput)));
    }

    #[test]
    fn failed_blocks_are_dropped() {
        let d = saltelli_design(&ishigami_problem(), 512, 2).unwrap();
        let mut y: Vec<f64> = d.rows().map(ishigami).collect();
        y[7] = f64::NAN;
        let ix = estimate_indices(&y, 3).unwrap();
        assert_eq!(ix.blocks, 511);
    }

    #[test]
    fn bins_cover_the_horizon() {
        let b = time_bins(365.0, 60.0).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b[0].0, 0.0);
        assert_eq!(b[5].1, 365.0);
        let times = [1.0, 2.0, 3.0, 4.0];
        let prof = vec![vec![1.0], vec![3.0], vec![5.0], vec![7.0]];
        let avg = bin_average(&times, &prof, &[(0.0, 2.0), (2.0, 4.0)]).unwrap();
        assert_eq!(avg, vec![vec![2.0], vec![6.0]]);
    }

    #[test]
    fn report_from_a_toy_model() {
        let p = SobolProblem { factors: vec![Factor::new("K_bg", 0.1, 1.0), Factor::new("P_in", 0.0, 0.3)] };
        let bins = [(0.0, 1.0), (1.0, 2.0)];
        let rep = run_sensitivity(&p, &ModelParams::default(), 256, &bins, 9, |m| {
            Ok(vec![vec![m.k_bg, 2.0 * m.k_bg], vec![m.k_bg + m.p_in, m.p_in]])
        })
        .unwrap();
        assert_eq!(rep.rows().len(), 4);
        assert!((rep.s1_mean[0][0] - 1.0).abs() < 0.03);
        assert!(rep.s1_sd[0][0] < 1e-9);
        assert!(rep.s1_mean[1][1] > 0.5);
        let collapsed = SobolProblem { factors: vec![Factor::new("K_bg", 0.3, 0.3)] };
        let err = run_sensitivity(&collapsed, &ModelParams::default(), 64, &bins, 1, |m| Ok(vec![vec![m.k_bg]; 2]));
        assert!(matches!(err, Err(Error::ConstantOutput)));
    }

    #[test]
    fn too_many_failures_abort() {
        let p = ishigami_problem();
        let d = saltelli_design(&p, 64, 1).unwrap();
        let mut out: Vec<Option<Vec<Vec<f64>>>> = d.rows().map(|x| Some(vec![vec![ishigami(x)]])).collect();
        for o in out.iter_mut().take(4) {
            *o = None;
        }
        let r = SensitivityReport::from_outputs(&p, &d, &[(0.0, 1.0)], &out);
        assert!(matches!(r, Err(Error::TooManyFailures { failed: 4, .. })));
    }
}

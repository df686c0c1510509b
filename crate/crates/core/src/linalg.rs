//! Small linear-algebra kit: banded LU, CSR matrices, reverse Cuthill-McKee
//! ordering and a complex Schur eigensolver for small dense matrices.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` superdiagonals.
///
/// Rows carry `kl` extra slots on the right for pivoting fill-in, so the
/// factorization happens in place.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// `self = a * self + b * I`.
    pub fn scale_shift(&mut self, a: f64, b: f64) {
        for v in self.data.iter_mut() {
            *v *= a;
        }
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += b;
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            let mut acc = 0.0;
            for j in lo..hi {
                acc += self.data[self.slot(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let skj = self.slot(k, j);
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * self.data[skj];
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factors produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    b[i] -= m.data[m.slot(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + m.kl + m.ku).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=last_col {
                acc -= m.data[m.slot(k, j)] * b[j];
            }
            b[k] = acc / m.data[m.slot(k, k)];
        }
    }
}

/// Solves the dense `n x n` row-major system `a x = b` in place (Gaussian
/// elimination with partial pivoting). `a` is destroyed.
pub fn solve_dense(a: &mut [f64], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Dimension(alloc::format!("matrix of {} entries for {n} unknowns", a.len())));
    }
    for k in 0..n {
        let (mut p, mut best) = (k, a[k * n + k].abs());
        for i in k + 1..n {
            if a[i * n + k].abs() > best {
                best = a[i * n + k].abs();
                p = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::Singular(k));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let l = a[i * n + k] / a[k * n + k];
            if l == 0.0 {
                continue;
            }
            for j in k + 1..n {
                a[i * n + j] -= l * a[k * n + j];
            }
            b[i] -= l * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k * n + j] * b[j];
        }
        b[k] = acc / a[k * n + k];
    }
    Ok(())
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n} x {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (c, v) = self.row(i);
            y[i] = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// `a * self + b * other` over the union of both patterns.
    pub fn lin_comb(&self, a: f64, other: &Csr, b: f64) -> Csr {
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (c, v) = self.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, a * x)));
            let (c, v) = other.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, b * x)));
        }
        Csr::from_triplets(self.n, t)
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| self.row(i).0.iter().copied().filter(|&j| j != i).collect())
            .collect()
    }
}

/// Reverse Cuthill-McKee ordering. Returns `perm` with `perm[new] = old`.
///
/// Each connected component starts from a pseudo-peripheral node.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while order.len() < n {
        let seed = (0..n).filter(|&i| !placed[i]).min_by_key(|&i| degree[i]).unwrap();
        let start = pseudo_peripheral(adj, seed, &degree);
        placed[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            next.dedup();
            for w in next {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap();
        for &w in &adj[v] {
            if level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize, degree: &[usize]) -> usize {
    let mut root = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, root);
        let depth = level.iter().flatten().copied().max().unwrap_or(0);
        if depth <= ecc && root != seed {
            break;
        }
        ecc = depth;
        let cand = (0..adj.len())
            .filter(|&i| level[i] == Some(depth))
            .min_by_key(|&i| degree[i])
            .unwrap();
        if cand == root {
            break;
        }
        root = cand;
    }
    root
}

/// Bandwidth of a symmetric pattern under `perm` (`perm[new] = old`).
pub fn bandwidth(adj: &[Vec<usize>], perm: &[usize]) -> usize {
    let mut inv = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut bw = 0;
    for (i, row) in adj.iter().enumerate() {
        for &j in row {
            bw = bw.max(inv[i].abs_diff(inv[j]));
        }
    }
    bw
}

/// Eigenvalues and unit eigenvectors of a small complex matrix.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    /// `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vec<Complex64>>,
}

/// Complex Schur decomposition by Hessenberg reduction and shifted QR, followed
/// by back substitution for the eigenvectors. `a` is row-major `n x n`.
///
/// The result is unsorted.
pub fn eigen_complex(a: &[Complex64], n: usize) -> Result<EigenPairs> {
    if a.len() != n * n {
        return Err(Error::Dimension(alloc::format!("{} entries for a {n} x {n} matrix", a.len())));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut h = a.to_vec();
    let mut z = vec![zero; n * n];
    for i in 0..n {
        z[i * n + i] = one;
    }
    hessenberg(&mut h, &mut z, n);
    let norm = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    schur_qr(&mut h, &mut z, n, norm)?;

    let values: Vec<Complex64> = (0..n).map(|i| h[i * n + i]).collect();
    let small = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = values[k];
        let mut x = vec![zero; n];
        x[k] = one;
        for j in (0..k).rev() {
            let mut acc = zero;
            for m in j + 1..=k {
                acc += h[j * n + m] * x[m];
            }
            let mut d = h[j * n + j] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            x[j] = -acc / d;
        }
        let mut v = vec![zero; n];
        for i in 0..n {
            for m in 0..=k {
                v[i] += z[i * n + m] * x[m];
            }
        }
        let len = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in v.iter_mut() {
            *c /= len;
        }
        vectors.push(v);
    }
    Ok(EigenPairs { values, vectors })
}

fn hessenberg(h: &mut [Complex64], z: &mut [Complex64], n: usize) {
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = (k + 1..n).map(|i| h[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        // u = x + phase * |x| e1, reflector I - 2 u u^H / (u^H u)
        let mut u = vec![zero; n];
        for i in k + 1..n {
            u[i] = h[i * n + k];
        }
        u[k + 1] += phase * alpha_norm;
        let unorm2: f64 = u.iter().map(|c| c.norm_sqr()).sum();
        if unorm2 == 0.0 {
            continue;
        }
        // H <- P H
        for j in 0..n {
            let mut s = zero;
            for i in k + 1..n {
                s += u[i].conj() * h[i * n + j];
            }
            let f = s * 2.0 / unorm2;
            for i in k + 1..n {
                h[i * n + j] -= u[i] * f;
            }
        }
        // H <- H P, Z <- Z P
        for m in [&mut *h, &mut *z] {
            for i in 0..n {
                let mut s = zero;
                for j in k + 1..n {
                    s += m[i * n + j] * u[j];
                }
                let f = s * 2.0 / unorm2;
                for j in k + 1..n {
                    m[i * n + j] -= f * u[j].conj();
                }
            }
        }
        for i in k + 2..n {
            h[i * n + k] = zero;
        }
    }
}

fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if x.norm() == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let phase = x / x.norm();
    (x.norm() / r, phase * y.conj() / r)
}

fn schur_qr(h: &mut [Complex64], z: &mut [Complex64], n: usize, norm: f64) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1) * n + l - 1].norm() + h[l * n + l].norm();
            let s = if s == 0.0 { norm } else { s };
            if h[l * n + l - 1].norm() <= f64::EPSILON * s {
                h[l * n + l - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n {
            return Err(Error::NoConvergence { iterations: total, residual: h[hi * n + hi - 1].norm(), best: Vec::new() });
        }
        let shift = if iter % 11 == 10 {
            h[hi * n + hi] + Complex64::new(h[hi * n + hi - 1].norm(), 0.0) * 0.75
        } else {
            wilkinson(h[(hi - 1) * n + hi - 1], h[(hi - 1) * n + hi], h[hi * n + hi - 1], h[hi * n + hi])
        };
        let mut x = h[l * n + l] - shift;
        let mut y = h[(l + 1) * n + l];
        for k in l..hi {
            let (c, s) = givens(x, y);
            let col0 = if k > l { k - 1 } else { l };
            for j in col0..n {
                let a = h[k * n + j];
                let b = h[(k + 1) * n + j];
                h[k * n + j] = a * c + s * b;
                h[(k + 1) * n + j] = -s.conj() * a + b * c;
            }
            let row_end = (k + 2).min(hi);
            for i in 0..=row_end {
                let a = h[i * n + k];
                let b = h[i * n + k + 1];
                h[i * n + k] = a * c + s.conj() * b;
                h[i * n + k + 1] = -s * a + b * c;
            }
            for i in 0..n {
                let a = z[i * n + k];
                let b = z[i * n + k + 1];
                z[i * n + k] = a * c + s.conj() * b;
                z[i * n + k + 1] = -s * a + b * c;
            }
            if k + 1 < hi {
                x = h[(k + 1) * n + k];
                y = h[(k + 2) * n + k];
            }
        }
    }
    Ok(())
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let r1 = d + half + disc;
    let r2 = d + half - disc;
    if (r1 - d).norm() < (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

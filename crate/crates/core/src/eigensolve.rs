//! Hermitian eigensolvers, bare-state labeling, metastable-state filtering and
//! level tracking across parameter sweeps.
//!
//! Both solvers first split the operator into the connected components of its
//! sparsity graph. Models with a conserved quantity (excitation number, parity,
//! photon number modulo `n`) fall apart into many small blocks this way, and each
//! block is diagonalized on its own. Eigenvectors are stored per block, so a
//! 4000-dimensional model made of 667-dimensional chains costs 6 small dense
//! problems rather than one large one.
//!
//! The dense path reduces each block to real symmetric tridiagonal form with
//! complex Householder reflections and a diagonal phase transformation, then runs
//! the implicit-shift QL iteration. The iterative path is Lanczos with full
//! reorthogonalization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fockspace::{HilbertLayout, SparseOperator, SubsystemKind, C64};

pub const DEFAULT_DENSE_LIMIT: usize = 4096;
pub const DEFAULT_CONTINUITY_FLOOR: f64 = 0.5;
pub const DEFAULT_SEED: u64 = 0x5eed_1a2c;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Eigenvectors of one block, as columns over the block's global indices.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorBlock {
    pub indices: Vec<usize>,
    pub vectors: DMatrix<C64>,
}

/// Eigenvectors stored blockwise; state `i` is column `owner[i].1` of block `owner[i].0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenVectors {
    dim: usize,
    blocks: Vec<VectorBlock>,
    owner: Vec<(usize, usize)>,
}

impl EigenVectors {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    /// Global indices and amplitudes of state `i`.
    pub fn support(&self, i: usize) -> (&[usize], &[C64]) {
        let (b, c) = self.owner[i];
        let block = &self.blocks[b];
        let n = block.indices.len();
        (&block.indices, &block.vectors.as_slice()[c * n..(c + 1) * n])
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim];
        let (idx, amp) = self.support(i);
        for (&k, &a) in idx.iter().zip(amp) {
            v[k] = a;
        }
        v
    }

    /// Dense `dim × len` matrix of all states.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.len(), ZERO);
        for i in 0..self.len() {
            let (idx, amp) = self.support(i);
            for (&k, &a) in idx.iter().zip(amp) {
                m[(k, i)] = a;
            }
        }
        m
    }

    /// `<self_i | other_j>`.
    pub fn inner(&self, i: usize, other: &EigenVectors, j: usize, scratch: &mut Vec<C64>) -> C64 {
        scratch.clear();
        scratch.resize(self.dim, ZERO);
        let (ia, aa) = self.support(i);
        for (&k, &a) in ia.iter().zip(aa) {
            scratch[k] = a;
        }
        let (ib, ab) = other.support(j);
        ib.iter().zip(ab).map(|(&k, &b)| scratch[k].conj() * b).sum()
    }

    fn select(&self, keep: &[usize]) -> Self {
        EigenVectors { dim: self.dim, blocks: self.blocks.clone(), owner: keep.iter().map(|&i| self.owner[i]).collect() }
    }

    fn permute(&mut self, order: &[usize]) {
        self.owner = order.iter().map(|&i| self.owner[i]).collect();
    }
}

/// Bare product-state label of an eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct Label {
    pub bare_index: usize,
    /// Qubit digits in layout order (`0 = |e>`).
    pub qubits: Vec<usize>,
    /// Fock indices in layout order.
    pub fock: Vec<usize>,
    /// `|<bare|v>|²`
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub layout: HilbertLayout,
    pub energies: Vec<f64>,
    pub states: Option<EigenVectors>,
    pub labels: Option<Vec<Option<Label>>>,
    pub mean_photons: Option<Vec<f64>>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    fn states_or_err(&self) -> Result<&EigenVectors> {
        self.states.as_ref().ok_or_else(|| Error::usage("eigenvectors were not computed"))
    }

    /// Index of the state labeled with `bare_index`, if any.
    pub fn find_label(&self, bare_index: usize) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|l| l.as_ref().is_some_and(|l| l.bare_index == bare_index))
    }

    /// `‖H v - E v‖₂` for every stored pair.
    pub fn residuals(&self, h: &SparseOperator) -> Result<Vec<f64>> {
        let states = self.states_or_err()?;
        Ok((0..self.len())
            .map(|i| {
                let v = states.vector(i);
                let hv = h.apply(&v);
                hv.iter().zip(&v).map(|(a, b)| (a - b * self.energies[i]).norm_sqr()).sum::<f64>().sqrt()
            })
            .collect())
    }

    /// Largest `|V†V - I|` entry.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let states = self.states_or_err()?;
        let mut scratch = Vec::new();
        let mut worst: f64 = 0.0;
        for i in 0..states.len() {
            for j in i..states.len() {
                let mut s = states.inner(i, states, j, &mut scratch);
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        Ok(worst)
    }
}

// ---------------------------------------------------------------------------
// dense kernel

/// Real symmetric tridiagonal eigenproblem by implicit-shift QL.
///
/// `d` holds the diagonal, `e[i]` the element coupling `i` and `i + 1`
/// (`e[n-1]` is ignored). On return `d` holds the eigenvalues, unsorted, and the
/// columns of `z` (column-major `n × n`, if given) are multiplied by the rotations.
pub fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let max_iter = 30 * n.max(1) + 30;
    let mut iterations = 0usize;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::IterationLimit {
                        iterations,
                        converged: l,
                        requested: n,
                        partial: Box::new(SpectrumResult {
                            layout: HilbertLayout::scalar(),
                            energies: Vec::new(),
                            states: None,
                            labels: None,
                            mean_photons: None,
                        }),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (left, right) = z.split_at_mut((i + 1) * n);
                        let zi = &mut left[i * n..];
                        let zi1 = &mut right[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let h = *b;
                            *b = s * *a + c * h;
                            *a = c * *a - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
    /// `Q D`, column-major, when requested
    qd: Option<Vec<C64>>,
}

/// Reduces a column-major Hermitian matrix (overwritten) to real tridiagonal form
/// `T = (Q D)† A (Q D)`.
fn tridiagonalize(a: &mut [C64], n: usize, want_q: bool) -> Tridiagonal {
    let mut q = if want_q {
        let mut q = vec![ZERO; n * n];
        for i in 0..n {
            q[i + i * n] = C64::new(1.0, 0.0);
        }
        Some(q)
    } else {
        None
    };
    let mut sub = vec![ZERO; n.saturating_sub(1)];
    let mut w = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    let mut s = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let off = k + 1;
        let x0 = a[off + k * n];
        let tail: f64 = (1..m).map(|i| a[off + i + k * n].norm_sqr()).sum();
        if tail == 0.0 {
            sub[k] = x0;
            continue;
        }
        let xnorm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0 == ZERO { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let v0 = x0 - alpha;
        let scale = (2.0 / (v0.norm_sqr() + tail)).sqrt();
        w[0] = v0 * scale;
        for i in 1..m {
            w[i] = a[off + i + k * n] * scale;
        }
        let (w, p) = (&w[..m], &mut p[..m]);

        // p = A' w over the trailing block
        p.iter_mut().for_each(|x| *x = ZERO);
        for j in 0..m {
            let wj = w[j];
            let col = &a[off + (off + j) * n..off + (off + j) * n + m];
            for (pi, &aij) in p.iter_mut().zip(col) {
                *pi += aij * wj;
            }
        }
        let kk: C64 = w.iter().zip(p.iter()).map(|(wi, pi)| wi.conj() * pi).sum::<C64>() * 0.5;
        for (pi, &wi) in p.iter_mut().zip(w) {
            *pi -= kk * wi;
        }
        // A' -= w q† + q w†
        for j in 0..m {
            let (qj, wj) = (p[j].conj(), w[j].conj());
            let col = &mut a[off + (off + j) * n..off + (off + j) * n + m];
            for ((aij, &wi), &qi) in col.iter_mut().zip(w).zip(p.iter()) {
                *aij -= wi * qj + qi * wj;
            }
        }
        sub[k] = alpha;
        for i in 1..m {
            a[off + i + k * n] = ZERO;
        }
        a[off + k * n] = alpha;

        if let Some(q) = q.as_mut() {
            // Q[:, off..] -= (Q[:, off..] w) w†
            let s = &mut s[..n];
            s.iter_mut().for_each(|x| *x = ZERO);
            for j in 0..m {
                let wj = w[j];
                let col = &q[(off + j) * n..(off + j + 1) * n];
                for (si, &qij) in s.iter_mut().zip(col) {
                    *si += qij * wj;
                }
            }
            for j in 0..m {
                let wj = w[j].conj();
                let col = &mut q[(off + j) * n..(off + j + 1) * n];
                for (qij, &si) in col.iter_mut().zip(s.iter()) {
                    *qij -= si * wj;
                }
            }
        }
    }
    if n >= 2 {
        sub[n - 2] = a[(n - 1) + (n - 2) * n];
    }
    let d: Vec<f64> = (0..n).map(|i| a[i + i * n].re).collect();
    let mut e = vec![0.0; n];
    let mut phase = C64::new(1.0, 0.0);
    let mut phases = vec![phase; n];
    for k in 0..n.saturating_sub(1) {
        let r = sub[k].norm();
        e[k] = r;
        if r > 0.0 {
            phase *= sub[k] / r;
        }
        phases[k + 1] = phase;
    }
    if let Some(q) = q.as_mut() {
        for (c, &ph) in phases.iter().enumerate() {
            for x in &mut q[c * n..(c + 1) * n] {
                *x *= ph;
            }
        }
    }
    Tridiagonal { d, e, qd: q }
}

/// Eigen-decomposition of a dense Hermitian matrix: ascending eigenvalues and,
/// if requested, orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &DMatrix<C64>, want_vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<C64>>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::layout(format!("{}x{} matrix is not square", n, m.ncols())));
    }
    let mut a: Vec<C64> = m.as_slice().to_vec();
    let Tridiagonal { mut d, mut e, qd } = tridiagonalize(&mut a, n, want_vectors);
    let mut z = if want_vectors {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i + i * n] = 1.0;
        }
        Some(z)
    } else {
        None
    };
    tql2(&mut d, &mut e, z.as_deref_mut())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = match (qd, z) {
        (Some(qd), Some(z)) => {
            let zs = DMatrix::from_fn(n, n, |r, c| z[r + order[c] * n]);
            let re = DMatrix::from_fn(n, n, |r, c| qd[r + c * n].re);
            let im = DMatrix::from_fn(n, n, |r, c| qd[r + c * n].im);
            let (vr, vi) = (re * &zs, im * &zs);
            Some(DMatrix::from_fn(n, n, |r, c| C64::new(vr[(r, c)], vi[(r, c)])))
        }
        _ => None,
    };
    Ok((values, vectors))
}

// ---------------------------------------------------------------------------
// sparse front ends

pub(crate) fn require_hermitian(h: &SparseOperator) -> Result<()> {
    if h.is_hermitian() {
        return Ok(());
    }
    let defect = h.hermitian_defect();
    if defect != 0.0 {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct DenseOptions {
    /// Largest connected block handled densely.
    pub dense_limit: usize,
    pub vectors: bool,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions { dense_limit: DEFAULT_DENSE_LIMIT, vectors: true }
    }
}

/// Orders pairs collected from several blocks by energy; ties keep collection order.
fn assemble(layout: HilbertLayout, mut pairs: Vec<(f64, usize, usize)>, blocks: Option<Vec<VectorBlock>>) -> SpectrumResult {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let energies = pairs.iter().map(|p| p.0).collect();
    let states = blocks.map(|blocks| EigenVectors {
        dim: layout.total_dim(),
        blocks,
        owner: pairs.iter().map(|p| (p.1, p.2)).collect(),
    });
    SpectrumResult { layout, energies, states, labels: None, mean_photons: None }
}

/// Full eigendecomposition, block by block.
pub fn eigh_dense(h: &SparseOperator) -> Result<SpectrumResult> {
    eigh_dense_with(h, DenseOptions::default())
}

pub fn eigvals_dense(h: &SparseOperator) -> Result<Vec<f64>> {
    Ok(eigh_dense_with(h, DenseOptions { vectors: false, ..DenseOptions::default() })?.energies)
}

pub fn eigh_dense_with(h: &SparseOperator, opts: DenseOptions) -> Result<SpectrumResult> {
    require_hermitian(h)?;
    let comps = h.connected_components();
    if let Some(big) = comps.iter().map(Vec::len).max().filter(|&s| s > opts.dense_limit) {
        return Err(Error::Capacity(format!(
            "connected block of dimension {big} exceeds the dense limit {}; use eigs_lowest",
            opts.dense_limit
        )));
    }
    let mut pairs = Vec::with_capacity(h.dim());
    let mut blocks = Vec::with_capacity(comps.len());
    for comp in comps {
        let (values, vectors) = if comp.len() == 1 {
            let v = h.get(comp[0], comp[0]).re;
            (vec![v], opts.vectors.then(|| DMatrix::from_element(1, 1, C64::new(1.0, 0.0))))
        } else {
            hermitian_eigen(&h.dense_submatrix(&comp), opts.vectors)?
        };
        let b = blocks.len();
        pairs.extend(values.into_iter().enumerate().map(|(c, e)| (e, b, c)));
        if let Some(vectors) = vectors {
            blocks.push(VectorBlock { indices: comp, vectors });
        } else {
            blocks.push(VectorBlock { indices: Vec::new(), vectors: DMatrix::zeros(0, 0) });
        }
    }
    Ok(assemble(h.layout().clone(), pairs, opts.vectors.then_some(blocks)))
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Krylov steps per block; `None` allows up to the block dimension.
    pub max_iters: Option<usize>,
    pub seed: u64,
    /// Blocks at most this large (or within `2k + 32` of `k`) are solved densely.
    pub dense_cutoff: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_iters: None, seed: DEFAULT_SEED, dense_cutoff: 64 }
    }
}

/// Block-local CSR copy of a principal submatrix.
struct LocalOp {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl LocalOp {
    fn new(h: &SparseOperator, comp: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; h.dim()];
        for (k, &i) in comp.iter().enumerate() {
            pos[i] = k;
        }
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for &r in comp {
            for (c, v) in h.row(r) {
                if pos[c] != usize::MAX {
                    cols.push(pos[c]);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        LocalOp { row_ptr, cols, vals }
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *out = self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&c, &v)| v * x[c]).sum();
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Twice-iterated classical Gram-Schmidt against an orthonormal basis.
fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        let coeffs: Vec<C64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, c) in basis.iter().zip(coeffs) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
    }
}

struct LanczosOutcome {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
    converged: bool,
    iterations: usize,
}

/// Lowest `k` eigenpairs of one irreducible block.
fn lanczos_block(op: &LocalOp, m: usize, k: usize, tol_abs: f64, hnorm: f64, max_iters: usize, rng: &mut ChaCha8Rng) -> Result<LanczosOutcome> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let (mut alpha, mut beta) = (Vec::<f64>::new(), Vec::<f64>::new());
    let inv = 1.0 / (m as f64).sqrt();
    let mut v = vec![C64::new(inv, 0.0); m];
    let mut w = vec![ZERO; m];
    let breakdown = 1e-12 * hnorm;
    let mut last: Option<(Vec<f64>, Vec<f64>)> = None;
    let limit = max_iters.min(m);
    let mut converged = false;
    while basis.len() < limit {
        op.apply(&v, &mut w);
        let a = dot(&v, &w).re;
        basis.push(v.clone());
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        let j = basis.len();
        let check = j >= k && (j % 8 == 0 || j == limit || b <= breakdown);
        if check {
            let (vals, z) = tridiagonal_eigen(&alpha, &beta);
            let ok = (0..k).all(|i| (b * z[(j - 1) + i * j]).abs() <= tol_abs);
            last = Some((vals, z));
            if ok {
                converged = true;
                break;
            }
        }
        if basis.len() == limit {
            break;
        }
        if b <= breakdown {
            // invariant subspace: continue from a fresh random direction
            for x in w.iter_mut() {
                *x = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
            orthogonalize(&mut w, &basis);
            let nb = norm(&w);
            if nb == 0.0 {
                break;
            }
            beta.push(0.0);
            v = w.iter().map(|x| x / nb).collect();
        } else {
            beta.push(b);
            v = w.iter().map(|x| x / b).collect();
        }
        last = None;
    }
    let j = basis.len();
    let (vals, z) = match last {
        Some(x) => x,
        None => tridiagonal_eigen(&alpha, &beta[..j - 1]),
    };
    if !converged && j == m {
        converged = true;
    }
    let kk = k.min(j);
    let mut vectors = DMatrix::from_element(m, kk, ZERO);
    for c in 0..kk {
        for (t, bv) in basis.iter().enumerate() {
            let coef = z[t + c * j];
            if coef != 0.0 {
                for (r, &x) in bv.iter().enumerate() {
                    vectors[(r, c)] += x * coef;
                }
            }
        }
        let nrm = (0..m).map(|r| vectors[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..m {
            vectors[(r, c)] /= nrm;
        }
    }
    Ok(LanczosOutcome { values: vals[..kk].to_vec(), vectors, converged, iterations: j })
}

/// Ascending eigenvalues and column-major eigenvectors of a real symmetric tridiagonal matrix.
pub(crate) fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let j = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; j];
    e[..j - 1].copy_from_slice(&beta[..j - 1]);
    let mut z = vec![0.0; j * j];
    for i in 0..j {
        z[i + i * j] = 1.0;
    }
    tql2(&mut d, &mut e, Some(&mut z)).expect("tridiagonal QL converges");
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| d[i]).collect();
    let mut zs = vec![0.0; j * j];
    for (c, &o) in order.iter().enumerate() {
        zs[c * j..(c + 1) * j].copy_from_slice(&z[o * j..(o + 1) * j]);
    }
    (vals, zs)
}

/// The `k` lowest eigenpairs. Each connected block is solved by Lanczos with full
/// reorthogonalization from the normalized all-ones vector (small blocks densely),
/// and the block results are merged. Converged means every reported Ritz pair has
/// residual at most `tol · ‖H‖₁`.
pub fn eigs_lowest(h: &SparseOperator, k: usize, tol: f64) -> Result<SpectrumResult> {
    eigs_lowest_with(h, k, tol, LanczosOptions::default())
}

pub fn eigs_lowest_with(h: &SparseOperator, k: usize, tol: f64, opts: LanczosOptions) -> Result<SpectrumResult> {
    require_hermitian(h)?;
    if k == 0 || k > h.dim() {
        return Err(Error::usage(format!("requested {k} eigenpairs of a {}-dimensional operator", h.dim())));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::usage("tolerance must be positive"));
    }
    let hnorm = h.norm_one().max(f64::MIN_POSITIVE);
    let tol_abs = tol * hnorm;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pairs = Vec::new();
    let mut blocks = Vec::new();
    let mut failure: Option<usize> = None;
    for comp in h.connected_components() {
        let m = comp.len();
        let kk = k.min(m);
        let b = blocks.len();
        if m <= opts.dense_cutoff || 2 * kk + 32 >= m {
            let (values, vectors) = hermitian_eigen(&h.dense_submatrix(&comp), true)?;
            let vectors = vectors.expect("requested").columns(0, kk).into_owned();
            pairs.extend(values[..kk].iter().enumerate().map(|(c, &e)| (e, b, c)));
            blocks.push(VectorBlock { indices: comp, vectors });
            continue;
        }
        let op = LocalOp::new(h, &comp);
        let out = lanczos_block(&op, m, kk, tol_abs, hnorm, opts.max_iters.unwrap_or(m), &mut rng)?;
        if !out.converged {
            failure = Some(failure.unwrap_or(0).max(out.iterations));
        }
        pairs.extend(out.values.iter().enumerate().map(|(c, &e)| (e, b, c)));
        blocks.push(VectorBlock { indices: comp, vectors: out.vectors });
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(k);
    let result = assemble(h.layout().clone(), pairs, Some(blocks));
    match failure {
        None => Ok(result),
        Some(iterations) => {
            let converged = count_converged(&result, h, tol_abs);
            Err(Error::IterationLimit { iterations, converged, requested: k, partial: Box::new(result) })
        }
    }
}

fn count_converged(result: &SpectrumResult, h: &SparseOperator, tol_abs: f64) -> usize {
    result.residuals(h).map(|r| r.iter().take_while(|&&x| x <= tol_abs).count()).unwrap_or(0)
}

// ---------------------------------------------------------------------------
// labeling, filtering, tracking

fn photon_number(layout: &HilbertLayout, index: usize) -> usize {
    let digits = layout.digits(index);
    layout
        .subsystems()
        .iter()
        .zip(digits)
        .filter(|(s, _)| s.kind == SubsystemKind::Oscillator)
        .map(|(_, d)| d)
        .sum()
}

fn make_label(layout: &HilbertLayout, bare_index: usize, overlap: f64) -> Label {
    let digits = layout.digits(bare_index);
    let (mut qubits, mut fock) = (Vec::new(), Vec::new());
    for (s, d) in layout.subsystems().iter().zip(digits) {
        match s.kind {
            SubsystemKind::Qubit => qubits.push(d),
            SubsystemKind::Oscillator => fock.push(d),
        }
    }
    Label { bare_index, qubits, fock, overlap }
}

/// Greedy assignment of bare product labels in descending overlap order; each
/// label and each eigenstate is used once. Equal overlaps go to the lower
/// eigen-index first, then to the lower bare index.
pub fn label_by_overlap(result: &SpectrumResult, layout: &HilbertLayout) -> Result<SpectrumResult> {
    let states = result.states_or_err()?;
    if layout.total_dim() != states.dim() {
        return Err(Error::layout("layout does not match the eigenvector dimension"));
    }
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..states.len() {
        let (idx, amp) = states.support(i);
        cands.extend(idx.iter().zip(amp).map(|(&b, a)| (a.norm_sqr(), i, b)).filter(|c| c.0 > 0.0));
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut labels: Vec<Option<Label>> = vec![None; states.len()];
    let mut used = vec![false; layout.total_dim()];
    let mut left = states.len();
    for (w, i, b) in cands {
        if left == 0 {
            break;
        }
        if labels[i].is_none() && !used[b] {
            used[b] = true;
            labels[i] = Some(make_label(layout, b, w));
            left -= 1;
        }
    }
    let mut out = result.clone();
    out.layout = layout.clone();
    out.labels = Some(labels);
    Ok(out)
}

/// `<v|N_total|v>` for every stored state.
pub fn mean_photon_numbers(result: &SpectrumResult) -> Result<Vec<f64>> {
    let states = result.states_or_err()?;
    let layout = &result.layout;
    Ok((0..states.len())
        .map(|i| {
            let (idx, amp) = states.support(i);
            idx.iter().zip(amp).map(|(&b, a)| a.norm_sqr() * photon_number(layout, b) as f64).sum()
        })
        .collect())
}

/// States with mean total photon number below `nbar_max`, order preserved.
pub fn filter_by_mean_photon(result: &SpectrumResult, nbar_max: f64) -> Result<SpectrumResult> {
    let nbar = match &result.mean_photons {
        Some(n) => n.clone(),
        None => mean_photon_numbers(result)?,
    };
    let keep: Vec<usize> = (0..result.len()).filter(|&i| nbar[i] < nbar_max).collect();
    Ok(SpectrumResult {
        layout: result.layout.clone(),
        energies: keep.iter().map(|&i| result.energies[i]).collect(),
        states: result.states.as_ref().map(|s| s.select(&keep)),
        labels: result.labels.as_ref().map(|l| keep.iter().map(|&i| l[i].clone()).collect()),
        mean_photons: Some(keep.iter().map(|&i| nbar[i]).collect()),
    })
}

/// Reorders a result's pairs (used by permutation-stability checks).
pub fn permute(result: &SpectrumResult, order: &[usize]) -> SpectrumResult {
    let mut out = result.clone();
    out.energies = order.iter().map(|&i| result.energies[i]).collect();
    if let Some(s) = out.states.as_mut() {
        s.permute(order);
    }
    out.labels = result.labels.as_ref().map(|l| order.iter().map(|&i| l[i].clone()).collect());
    out.mean_photons = result.mean_photons.as_ref().map(|m| order.iter().map(|&i| m[i]).collect());
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackPoint {
    pub state: usize,
    pub energy: f64,
    /// `|<previous|current>|²`; 1 at the seed.
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelCurve {
    /// Label of the seed state in the first sweep result, when labeled.
    pub seed: Option<Label>,
    /// One entry per grid point up to termination.
    pub points: Vec<TrackPoint>,
    /// Grid index at which continuity was lost.
    pub terminated_at: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TrackOptions {
    pub continuity_floor: f64,
    /// State indices of the first result to follow; all states when `None`.
    pub seeds: Option<Vec<usize>>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions { continuity_floor: DEFAULT_CONTINUITY_FLOOR, seeds: None }
    }
}

/// Connects eigenstates of consecutive sweep points by maximal overlap.
/// A curve whose best available continuation has overlap below the floor is
/// terminated at that grid point.
pub fn track_levels(sweep: &[SpectrumResult], opts: &TrackOptions) -> Result<Vec<LevelCurve>> {
    let Some(first) = sweep.first() else { return Ok(Vec::new()) };
    for pair in sweep.windows(2) {
        if pair[0].layout != pair[1].layout {
            return Err(Error::layout("consecutive sweep results have different layouts"));
        }
    }
    let seeds = opts.seeds.clone().unwrap_or_else(|| (0..first.len()).collect());
    let mut curves: Vec<LevelCurve> = seeds
        .iter()
        .map(|&s| LevelCurve {
            seed: first.labels.as_ref().and_then(|l| l.get(s).cloned().flatten()),
            points: vec![TrackPoint { state: s, energy: first.energies[s], overlap: 1.0 }],
            terminated_at: None,
        })
        .collect();
    let mut scratch = Vec::new();
    for t in 1..sweep.len() {
        let (prev, cur) = (sweep[t - 1].states_or_err()?, sweep[t].states_or_err()?);
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, curve) in curves.iter().enumerate() {
            if curve.terminated_at.is_some() {
                continue;
            }
            let from = curve.points.last().expect("seeded").state;
            // scatter once, then dot against every current state
            scratch.clear();
            scratch.resize(prev.dim(), ZERO);
            let (ia, aa) = prev.support(from);
            for (&k, &a) in ia.iter().zip(aa) {
                scratch[k] = a;
            }
            for j in 0..cur.len() {
                let (ib, ab) = cur.support(j);
                let ov: C64 = ib.iter().zip(ab).map(|(&k, &b)| scratch[k].conj() * b).sum();
                let w = ov.norm_sqr();
                if w >= opts.continuity_floor {
                    cands.push((w, ci, j));
                }
            }
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut taken = vec![false; cur.len()];
        let mut extended = vec![false; curves.len()];
        for (w, ci, j) in cands {
            if !extended[ci] && !taken[j] {
                extended[ci] = true;
                taken[j] = true;
                curves[ci].points.push(TrackPoint { state: j, energy: sweep[t].energies[j], overlap: w });
            }
        }
        for (ci, curve) in curves.iter_mut().enumerate() {
            if curve.terminated_at.is_none() && !extended[ci] {
                curve.terminated_at = Some(t);
            }
        }
    }
    Ok(curves)
}

//! Truncated Fock-space operator algebra over composite qubit/oscillator spaces.
//!
//! Operators are stored in compressed-row form with complex entries. Assembly goes
//! through coordinate triplets which are sorted, merged and purged of exact zeros,
//! so the sparsity pattern of every operator is deterministic.
//!
//! Qubit basis ordering is `{|e>, |g>}`: index 0 is the excited state, so
//! `sigma_z = diag(1, -1)`. Composite indices are row-major over the subsystem list.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsystemKind {
    Qubit,
    Oscillator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Subsystem {
    pub kind: SubsystemKind,
    pub dim: usize,
}

impl Subsystem {
    pub fn qubit() -> Self {
        Subsystem { kind: SubsystemKind::Qubit, dim: 2 }
    }

    pub fn oscillator(trunc: usize) -> Self {
        Subsystem { kind: SubsystemKind::Oscillator, dim: trunc }
    }
}

/// Ordered tensor-product structure of a Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertLayout {
    subsystems: Vec<Subsystem>,
    total_dim: usize,
}

impl HilbertLayout {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        let mut total: usize = 1;
        for s in &subsystems {
            match s.kind {
                SubsystemKind::Qubit if s.dim != 2 => {
                    return Err(Error::InvalidDimension { dim: s.dim, reason: "qubits have dimension 2" })
                }
                SubsystemKind::Oscillator if s.dim < 2 => {
                    return Err(Error::InvalidDimension {
                        dim: s.dim,
                        reason: "oscillator truncation must be at least 2",
                    })
                }
                _ => {}
            }
            total = total.checked_mul(s.dim).ok_or_else(|| {
                Error::Capacity(format!("composite dimension overflows usize ({subsystems:?})"))
            })?;
        }
        Ok(HilbertLayout { subsystems, total_dim: total })
    }

    pub fn qubit() -> Self {
        HilbertLayout { subsystems: vec![Subsystem::qubit()], total_dim: 2 }
    }

    pub fn oscillator(trunc: usize) -> Result<Self> {
        Self::new(vec![Subsystem::oscillator(trunc)])
    }

    /// Empty layout: the one-dimensional space of scalars.
    pub fn scalar() -> Self {
        HilbertLayout { subsystems: Vec::new(), total_dim: 1 }
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn dim_of(&self, index: usize) -> usize {
        self.subsystems[index].dim
    }

    pub fn concat(&self, other: &HilbertLayout) -> Result<Self> {
        let mut subs = self.subsystems.clone();
        subs.extend_from_slice(&other.subsystems);
        Self::new(subs)
    }

    /// Layout restricted to the given subsystem indices, in layout order.
    pub fn select(&self, keep: &[usize]) -> Result<Self> {
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&bad) = sorted.iter().find(|&&i| i >= self.len()) {
            return Err(Error::usage(format!("subsystem index {bad} out of range")));
        }
        Self::new(sorted.iter().map(|&i| self.subsystems[i]).collect())
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for i in (0..self.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].dim;
        }
        strides
    }

    /// Per-subsystem digits of a composite basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (slot, s) in out.iter_mut().zip(&self.subsystems).rev() {
            *slot = index % s.dim;
            index /= s.dim;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.subsystems)
            .fold(0, |acc, (&d, s)| acc * s.dim + d)
    }

    pub fn oscillator_indices(&self) -> Vec<usize> {
        self.indices_of(SubsystemKind::Oscillator)
    }

    pub fn qubit_indices(&self) -> Vec<usize> {
        self.indices_of(SubsystemKind::Qubit)
    }

    fn indices_of(&self, kind: SubsystemKind) -> Vec<usize> {
        self.subsystems
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for HilbertLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .map(|s| match s.kind {
                SubsystemKind::Qubit => "qubit".to_string(),
                SubsystemKind::Oscillator => format!("osc({})", s.dim),
            })
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Complex sparse matrix in canonical compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    layout: HilbertLayout,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    pub fn from_triplets(layout: HilbertLayout, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        let dim = layout.total_dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::layout(format!("entry ({r}, {c}) outside dimension {dim}")));
        }
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let mut k = 0;
        for i in 0..values.len() {
            if values[i] != ZERO {
                rows[k] = rows[i];
                col_idx[k] = col_idx[i];
                values[k] = values[i];
                k += 1;
            }
        }
        rows.truncate(k);
        col_idx.truncate(k);
        values.truncate(k);
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseOperator { layout, row_ptr, col_idx, values, hermitian: false })
    }

    pub fn zeros(layout: HilbertLayout) -> Self {
        let dim = layout.total_dim();
        SparseOperator {
            layout,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(layout: HilbertLayout) -> Self {
        let dim = layout.total_dim();
        SparseOperator {
            layout,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![ONE; dim],
            hermitian: true,
        }
    }

    /// Real diagonal operator; certified Hermitian.
    pub fn from_real_diagonal(layout: HilbertLayout, diag: &[f64]) -> Result<Self> {
        if diag.len() != layout.total_dim() {
            return Err(Error::layout(format!(
                "diagonal of length {} for dimension {}",
                diag.len(),
                layout.total_dim()
            )));
        }
        let trip = diag.iter().enumerate().map(|(i, &d)| (i, i, C64::new(d, 0.0))).collect();
        let mut op = Self::from_triplets(layout, trip)?;
        op.hermitian = true;
        Ok(op)
    }

    /// Dense matrix to sparse; exact zeros are dropped.
    pub fn from_dense(layout: HilbertLayout, m: &DMatrix<C64>) -> Result<Self> {
        let dim = layout.total_dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::layout(format!("{}x{} matrix for dimension {dim}", m.nrows(), m.ncols())));
        }
        let mut trip = Vec::new();
        for c in 0..dim {
            for r in 0..dim {
                let v = m[(r, c)];
                if v != ZERO {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(layout, trip)
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    /// Same entries reinterpreted on another layout of equal total dimension.
    pub fn with_layout(mut self, layout: HilbertLayout) -> Result<Self> {
        if layout.total_dim() != self.dim() {
            return Err(Error::layout(format!("cannot relabel {} as {}", self.layout, layout)));
        }
        self.layout = layout;
        Ok(self)
    }

    /// Largest entrywise |H - H^dagger|.
    pub fn hermitian_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Sets the Hermitian flag after checking the entries exactly.
    pub fn certify_hermitian(mut self) -> Result<Self> {
        let defect = self.hermitian_defect();
        if defect != 0.0 {
            return Err(Error::NotHermitian { defect });
        }
        self.hermitian = true;
        Ok(self)
    }

    /// `(A + A^dagger) / 2`, which is Hermitian to the last bit.
    pub fn hermitian_part(&self) -> Self {
        let sum = self.add(&self.dagger()).expect("same layout");
        let mut half = sum.scale(C64::new(0.5, 0.0));
        half.hermitian = true;
        half
    }

    pub fn dagger(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut out = Self::from_triplets(self.layout.clone(), trip).expect("transpose stays in bounds");
        out.hermitian = self.hermitian;
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (r, c, v * s)).collect();
        let mut out = Self::from_triplets(self.layout.clone(), trip).expect("same pattern");
        out.hermitian = self.hermitian && s.im == 0.0;
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::layout(format!("{} vs {}", self.layout, other.layout)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_layout(other)?;
        let trip = self.triplets().chain(other.triplets()).collect();
        let mut out = Self::from_triplets(self.layout.clone(), trip)?;
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_layout(other)?;
        let trip = self
            .triplets()
            .chain(other.triplets().map(|(r, c, v)| (r, c, -v)))
            .collect();
        let mut out = Self::from_triplets(self.layout.clone(), trip)?;
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    /// Sparse matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_layout(other)?;
        let dim = self.dim();
        let mut acc = vec![ZERO; dim];
        let mut seen = vec![usize::MAX; dim];
        let mut touched = Vec::new();
        let mut trip = Vec::new();
        for r in 0..dim {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if seen[c] != r {
                        seen[c] = r;
                        acc[c] = ZERO;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                trip.push((r, c, acc[c]));
            }
        }
        Self::from_triplets(self.layout.clone(), trip)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.add(&other.matmul(self)?)
    }

    /// Kronecker product; `self`'s layout comes first.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let nb = other.dim();
        let mut trip = Vec::with_capacity(self.nnz().saturating_mul(other.nnz()));
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                trip.push((r1 * nb + r2, c1 * nb + c2, v1 * v2));
            }
        }
        let mut out = Self::from_triplets(layout, trip)?;
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    /// `n`-fold product; `pow(0)` is the identity.
    pub fn pow(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Ok(Self::identity(self.layout.clone()));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.matmul(self)?;
        }
        out.hermitian = false;
        Ok(out)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for (r, out) in y.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *out = self.col_idx[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let hp = self.apply(psi);
        psi.iter().zip(&hp).map(|(a, b)| a.conj() * b).sum()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let mut cols = vec![0.0; self.dim()];
        for (_, c, v) in self.triplets() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Principal submatrix on `indices` (in the given order), as a dense matrix.
    pub fn dense_submatrix(&self, indices: &[usize]) -> DMatrix<C64> {
        let mut pos = vec![usize::MAX; self.dim()];
        for (k, &i) in indices.iter().enumerate() {
            pos[i] = k;
        }
        let n = indices.len();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (k, &r) in indices.iter().enumerate() {
            for (c, v) in self.row(r) {
                if pos[c] != usize::MAX {
                    m[(k, pos[c])] = v;
                }
            }
        }
        m
    }

    /// Largest entrywise difference between two operators on the same layout.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs_entry())
    }

    /// Connected components of the sparsity graph (both directions), each sorted.
    /// The operator is block diagonal over these index sets.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let dim = self.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (r, c, _) in self.triplets() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
        let mut slot = vec![usize::MAX; dim];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for i in 0..dim {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = comps.len();
                comps.push(Vec::new());
            }
            comps[slot[root]].push(i);
        }
        comps
    }
}

/// Annihilation operator on a `dim`-level truncated oscillator.
pub fn destroy(dim: usize) -> Result<SparseOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, reason: "ladder operators need dim >= 2" });
    }
    let trip = (1..dim).map(|j| (j - 1, j, C64::new((j as f64).sqrt(), 0.0))).collect();
    SparseOperator::from_triplets(HilbertLayout::oscillator(dim)?, trip)
}

pub fn create(dim: usize) -> Result<SparseOperator> {
    Ok(destroy(dim)?.dagger())
}

pub fn number(dim: usize) -> Result<SparseOperator> {
    let diag: Vec<f64> = (0..dim).map(|j| j as f64).collect();
    SparseOperator::from_real_diagonal(HilbertLayout::oscillator(dim)?, &diag)
}

pub fn identity(layout: HilbertLayout) -> SparseOperator {
    SparseOperator::identity(layout)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Pauli operators in the ordered basis `{|e>, |g>}`.
pub fn pauli(which: Pauli) -> SparseOperator {
    let i = C64::new(0.0, 1.0);
    let trip = match which {
        Pauli::X => vec![(0, 1, ONE), (1, 0, ONE)],
        Pauli::Y => vec![(0, 1, -i), (1, 0, i)],
        Pauli::Z => vec![(0, 0, ONE), (1, 1, -ONE)],
        Pauli::Plus => vec![(0, 1, ONE)],
        Pauli::Minus => vec![(1, 0, ONE)],
    };
    let mut op = SparseOperator::from_triplets(HilbertLayout::qubit(), trip).expect("2x2 entries");
    op.hermitian = matches!(which, Pauli::X | Pauli::Y | Pauli::Z);
    op
}

pub fn kron(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator> {
    a.kron(b)
}

pub fn op_pow(a: &SparseOperator, n: u32) -> Result<SparseOperator> {
    a.pow(n)
}

/// Places `factors` on their subsystems of `layout`, identity elsewhere.
pub fn embed(layout: &HilbertLayout, factors: &[(usize, &SparseOperator)]) -> Result<SparseOperator> {
    let mut slots: Vec<Option<&SparseOperator>> = vec![None; layout.len()];
    for &(idx, op) in factors {
        if idx >= layout.len() {
            return Err(Error::layout(format!("subsystem {idx} not in layout {layout}")));
        }
        if slots[idx].is_some() {
            return Err(Error::usage(format!("subsystem {idx} listed twice")));
        }
        if op.dim() != layout.dim_of(idx) {
            return Err(Error::layout(format!(
                "factor of dimension {} on subsystem {idx} of dimension {}",
                op.dim(),
                layout.dim_of(idx)
            )));
        }
        slots[idx] = Some(op);
    }
    let mut acc = SparseOperator::identity(HilbertLayout::scalar());
    for (i, slot) in slots.iter().enumerate() {
        let sub = HilbertLayout::new(vec![layout.subsystems()[i]])?;
        let factor = match slot {
            Some(op) => (*op).clone().with_layout(sub)?,
            None => SparseOperator::identity(sub),
        };
        acc = acc.kron(&factor)?;
    }
    Ok(acc)
}

/// Fock indices close to the truncation edge, where ladder algebra is falsified,
/// are excluded from identity checks: with `nesting` applications of an `order`-photon
/// operator, indices `>= trunc - order * nesting` are outside the band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GuardBand {
    pub order: usize,
    pub nesting: usize,
}

impl GuardBand {
    pub fn new(order: usize) -> Self {
        GuardBand { order, nesting: 2 }
    }

    pub fn with_nesting(order: usize, nesting: usize) -> Self {
        GuardBand { order, nesting }
    }

    pub fn limit(&self, trunc: usize) -> usize {
        trunc.saturating_sub(self.order * self.nesting)
    }

    /// Whether every oscillator digit of `index` lies inside the band.
    pub fn contains(&self, layout: &HilbertLayout, index: usize) -> bool {
        let digits = layout.digits(index);
        layout
            .subsystems()
            .iter()
            .zip(digits)
            .all(|(s, d)| s.kind == SubsystemKind::Qubit || d < self.limit(s.dim))
    }

    /// Largest entrywise difference restricted to rows and columns inside the band.
    pub fn max_abs_diff(&self, a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
        let diff = a.sub(b)?;
        let layout = a.layout();
        Ok(diff
            .triplets()
            .filter(|&(r, c, _)| self.contains(layout, r) && self.contains(layout, c))
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max))
    }
}

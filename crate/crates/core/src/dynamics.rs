//! State preparation, unitary time evolution, reduced density matrices and
//! subsystem fidelities.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytic::DispersiveParams;
use crate::eigensolve::{hermitian_eigen, require_hermitian, tridiagonal_eigen};
use crate::error::{Error, Result};
use crate::fockspace::{HilbertLayout, SparseOperator, C64};
use crate::models::{build_dispersive, build_nR, Regime, SystemSpec};

pub const NORM_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_KRYLOV_DIM: usize = 30;
pub const DEFAULT_LOCAL_TOLERANCE: f64 = 1e-10;
/// Operators up to this dimension are propagated by full diagonalization.
pub const SPECTRAL_LIMIT: usize = 64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: HilbertLayout,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Requires `‖amplitudes‖₂ = 1` within [`NORM_TOLERANCE`].
    pub fn new(layout: HilbertLayout, amplitudes: Vec<C64>) -> Result<Self> {
        Self::check_len(&layout, &amplitudes)?;
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::usage(format!("state norm {n} differs from 1")));
        }
        Ok(StateVector { layout, amplitudes })
    }

    /// Rescales to unit norm; the zero vector is rejected.
    pub fn normalized(layout: HilbertLayout, mut amplitudes: Vec<C64>) -> Result<Self> {
        Self::check_len(&layout, &amplitudes)?;
        let n = norm(&amplitudes);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::usage("cannot normalize a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(StateVector { layout, amplitudes })
    }

    fn check_len(layout: &HilbertLayout, amplitudes: &[C64]) -> Result<()> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::layout(format!(
                "{} amplitudes for a {}-dimensional layout",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        Ok(())
    }

    /// Product basis state with the given per-subsystem digits.
    pub fn basis(layout: HilbertLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() || digits.iter().zip(layout.subsystems()).any(|(&d, s)| d >= s.dim) {
            return Err(Error::layout(format!("digits {digits:?} do not fit layout {layout}")));
        }
        let mut amplitudes = vec![ZERO; layout.total_dim()];
        amplitudes[layout.index_of(digits)] = ONE;
        Ok(StateVector { layout, amplitudes })
    }

    /// Fock state `|j>` of a single oscillator.
    pub fn fock(trunc: usize, j: usize) -> Result<Self> {
        Self::basis(HilbertLayout::oscillator(trunc)?, &[j])
    }

    /// `c_e |e> + c_g |g>`, normalized.
    pub fn qubit(c_e: C64, c_g: C64) -> Result<Self> {
        Self::normalized(HilbertLayout::qubit(), vec![c_e, c_g])
    }

    /// Tensor product in argument order.
    pub fn product(factors: &[&StateVector]) -> Result<Self> {
        let mut layout = HilbertLayout::scalar();
        let mut amplitudes = vec![ONE];
        for f in factors {
            layout = layout.concat(&f.layout)?;
            amplitudes = amplitudes.iter().flat_map(|&a| f.amplitudes.iter().map(move |&b| a * b)).collect();
        }
        Ok(StateVector { layout, amplitudes })
    }

    /// Normalized `Σ c_i |ψ_i>` over states sharing one layout.
    pub fn superposition(terms: &[(C64, &StateVector)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::usage("empty superposition"));
        };
        let mut amplitudes = vec![ZERO; first.dim()];
        for (c, s) in terms {
            if s.layout != first.layout {
                return Err(Error::layout("superposed states have different layouts"));
            }
            for (a, b) in amplitudes.iter_mut().zip(&s.amplitudes) {
                *a += c * b;
            }
        }
        Self::normalized(first.layout.clone(), amplitudes)
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::layout("inner product of states with different layouts"));
        }
        Ok(dot(&self.amplitudes, &other.amplitudes))
    }

    pub fn expectation(&self, op: &SparseOperator) -> Result<C64> {
        if op.layout() != &self.layout {
            return Err(Error::layout("operator and state layouts differ"));
        }
        Ok(op.expectation(&self.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = DMatrix::from_column_slice(self.dim(), 1, &self.amplitudes);
        DensityMatrix { layout: self.layout.clone(), matrix: &v * v.adjoint() }
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: HilbertLayout,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and trace to 1e-12 and eigenvalues to -1e-10.
    pub fn new(layout: HilbertLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::layout(format!("{}x{} matrix for a {d}-dimensional layout", matrix.nrows(), matrix.ncols())));
        }
        let defect = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > 1e-12 {
            return Err(Error::NotHermitian { defect });
        }
        let rho = DensityMatrix { layout, matrix };
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::usage(format!("density matrix trace {tr} differs from 1")));
        }
        if let Some(&low) = rho.eigenvalues()?.first() {
            if low < -1e-10 {
                return Err(Error::usage(format!("density matrix has eigenvalue {low}")));
            }
        }
        Ok(rho)
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(&self.matrix, false)?.0)
    }

    /// `V √Λ` with negative eigenvalues clamped to 0, so that `ρ = F F†` and `√ρ = F V†`.
    fn sqrt_factor(&self) -> Result<DMatrix<C64>> {
        let (vals, vecs) = hermitian_eigen(&self.matrix, true)?;
        let mut f = vecs.expect("requested");
        for (c, &l) in vals.iter().enumerate() {
            let s = l.max(0.0).sqrt();
            f.column_mut(c).iter_mut().for_each(|z| *z *= s);
        }
        Ok(f)
    }
}

/// Reduced layout, per-basis-state `(kept, traced)` compact indices, and traced dimension.
type Split = (HilbertLayout, Vec<(usize, usize)>, usize);

/// Digits of the kept and traced subsystems, as compact indices into each factor.
fn split_indices(layout: &HilbertLayout, keep: &[usize]) -> Result<Split> {
    if keep.is_empty() {
        return Err(Error::usage("partial trace needs at least one kept subsystem"));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.last().is_some_and(|&k| k >= layout.len()) {
        return Err(Error::usage(format!("invalid subsystem selection {keep:?} for {layout}")));
    }
    let kept = layout.select(&sorted)?;
    let traced: Vec<usize> = (0..layout.len()).filter(|i| !sorted.contains(i)).collect();
    let traced_layout = layout.select(&traced)?;
    let map = (0..layout.total_dim())
        .map(|i| {
            let d = layout.digits(i);
            let dk: Vec<usize> = sorted.iter().map(|&k| d[k]).collect();
            let dt: Vec<usize> = traced.iter().map(|&k| d[k]).collect();
            (kept.index_of(&dk), traced_layout.index_of(&dt))
        })
        .collect();
    Ok((kept, map, traced_layout.total_dim()))
}

/// States that can be reduced to a subset of their subsystems.
pub trait PartialTrace {
    /// Reduced density matrix over `keep`, in layout order.
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix>;
}

impl PartialTrace for StateVector {
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (kept, map, dt) = split_indices(&self.layout, keep)?;
        let mut m = DMatrix::from_element(kept.total_dim(), dt, ZERO);
        for (&(k, t), &a) in map.iter().zip(&self.amplitudes) {
            m[(k, t)] = a;
        }
        Ok(DensityMatrix { layout: kept, matrix: &m * m.adjoint() })
    }
}

impl PartialTrace for DensityMatrix {
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (kept, map, _) = split_indices(&self.layout, keep)?;
        let dk = kept.total_dim();
        let mut out = DMatrix::from_element(dk, dk, ZERO);
        for (i, &(ki, ti)) in map.iter().enumerate() {
            for (j, &(kj, tj)) in map.iter().enumerate() {
                if ti == tj {
                    out[(ki, kj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityMatrix { layout: kept, matrix: out })
    }
}

pub fn partial_trace(state: &impl PartialTrace, keep: &[usize]) -> Result<DensityMatrix> {
    state.partial_trace(keep)
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
///
/// Evaluated as the squared trace norm of `A†B` for square-root factors
/// `ρ = AA†`, `σ = BB†`, which avoids square roots of rounding-level eigenvalues.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.layout != sigma.layout {
        return Err(Error::usage(format!("fidelity between layouts {} and {}", rho.layout, sigma.layout)));
    }
    let overlap = rho.sqrt_factor()?.adjoint() * sigma.sqrt_factor()?;
    let root: f64 = overlap.singular_values().iter().sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// Truncated coherent state `|α>`, renormalized.
///
/// Requires `|α|² + 6|α| + 9 ≤ trunc`, which bounds the discarded tail mass well below 1e-10.
pub fn coherent_state(alpha: C64, trunc: usize) -> Result<StateVector> {
    let r = alpha.norm();
    if r * r + 6.0 * r + 9.0 > trunc as f64 {
        return Err(Error::TruncationInsufficient { trunc, alpha_abs: r });
    }
    let layout = HilbertLayout::oscillator(trunc)?;
    let mut amplitudes = Vec::with_capacity(trunc);
    let mut a = C64::new((-0.5 * r * r).exp(), 0.0);
    for j in 0..trunc {
        amplitudes.push(a);
        a *= alpha / ((j + 1) as f64).sqrt();
    }
    StateVector::normalized(layout, amplitudes)
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub krylov_dim: usize,
    /// Bound on the estimated error of each accepted substep.
    pub local_tolerance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { krylov_dim: DEFAULT_KRYLOV_DIM, local_tolerance: DEFAULT_LOCAL_TOLERANCE }
    }
}

/// `e^{-iHt} ψ₀`.
pub fn evolve(h: &SparseOperator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let mut out = evolve_sampled(h, psi0, &[t], EvolveOptions::default())?;
    Ok(out.pop().expect("one sample"))
}

/// States at each of the nondecreasing `times`, propagating from sample to sample.
pub fn evolve_sampled(h: &SparseOperator, psi0: &StateVector, times: &[f64], opts: EvolveOptions) -> Result<Vec<StateVector>> {
    require_hermitian(h)?;
    if h.layout() != psi0.layout() {
        return Err(Error::layout(format!("operator layout {} differs from state layout {}", h.layout(), psi0.layout())));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::usage("sample times must be finite and nondecreasing"));
    }
    if opts.krylov_dim < 2 || opts.local_tolerance.is_nan() || opts.local_tolerance <= 0.0 {
        return Err(Error::usage("Krylov dimension must be at least 2 and the tolerance positive"));
    }
    let layout = psi0.layout().clone();
    let wrap = |amplitudes: Vec<C64>| StateVector { layout: layout.clone(), amplitudes };

    if h.is_diagonal() {
        let e: Vec<f64> = h.diagonal().iter().map(|z| z.re).collect();
        return Ok(times
            .iter()
            .map(|&t| wrap(psi0.amplitudes.iter().zip(&e).map(|(a, &ej)| a * C64::from_polar(1.0, -ej * t)).collect()))
            .collect());
    }

    if h.dim() <= SPECTRAL_LIMIT {
        let (vals, vecs) = hermitian_eigen(&h.to_dense(), true)?;
        let v = vecs.expect("requested");
        let c0 = v.adjoint() * DMatrix::from_column_slice(h.dim(), 1, &psi0.amplitudes);
        return Ok(times
            .iter()
            .map(|&t| {
                let ct = DMatrix::from_fn(vals.len(), 1, |i, _| c0[(i, 0)] * C64::from_polar(1.0, -vals[i] * t));
                wrap((&v * ct).iter().copied().collect())
            })
            .collect());
    }

    let mut out = Vec::with_capacity(times.len());
    let mut psi = psi0.amplitudes.clone();
    let mut now = 0.0;
    let mut step_hint = f64::INFINITY;
    for &t in times {
        if t > now {
            krylov_propagate(h, &mut psi, t - now, &opts, &mut step_hint)?;
            now = t;
        } else if t < now {
            return Err(Error::usage("sample times must be nondecreasing"));
        }
        out.push(wrap(psi.clone()));
    }
    Ok(out)
}

/// Advances `psi` by `span` in substeps; each substep uses one Lanczos basis and
/// the largest step whose a-posteriori error estimate meets the tolerance.
fn krylov_propagate(h: &SparseOperator, psi: &mut [C64], span: f64, opts: &EvolveOptions, step_hint: &mut f64) -> Result<()> {
    let dim = h.dim();
    let m_max = opts.krylov_dim.min(dim);
    let hnorm = h.norm_one();
    let min_step = span * 1e-14;
    let mut remaining = span;
    let mut w = vec![ZERO; dim];
    while remaining > 0.0 {
        let beta0 = norm(psi);
        let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|x| x / beta0).collect()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut invariant = false;
        loop {
            h.apply_into(basis.last().expect("nonempty"), &mut w);
            let a = dot(basis.last().expect("nonempty"), &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let b = norm(&w);
            if b <= 1e-13 * hnorm.max(f64::MIN_POSITIVE) {
                invariant = true;
                break;
            }
            beta.push(b);
            if basis.len() == m_max {
                break;
            }
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let residual = if invariant { 0.0 } else { beta[m - 1] };
        let (vals, z) = tridiagonal_eigen(&alpha, &beta[..m - 1]);
        let coeffs = |tau: f64| -> Vec<C64> {
            // exp(-i tau T) e1 = Z exp(-i tau Λ) Zᵀ e1
            let mut c = vec![ZERO; m];
            for (k, &l) in vals.iter().enumerate() {
                let wk = z[k * m] * C64::from_polar(1.0, -l * tau);
                for (r, cr) in c.iter_mut().enumerate() {
                    *cr += wk * z[r + k * m];
                }
            }
            c
        };
        let mut tau = remaining.min(*step_hint);
        let c = loop {
            let c = coeffs(tau);
            let err = beta0 * residual * c[m - 1].norm();
            if err <= opts.local_tolerance {
                break c;
            }
            tau *= 0.5;
            if tau < min_step {
                return Err(Error::Propagation(format!("step size underflow at remaining time {remaining}")));
            }
        };
        psi.iter_mut().for_each(|x| *x = ZERO);
        for (ck, v) in c.iter().zip(&basis) {
            let s = ck * beta0;
            psi.iter_mut().zip(v).for_each(|(x, vi)| *x += s * vi);
        }
        remaining -= tau;
        if remaining < min_step {
            remaining = 0.0;
        }
        *step_hint = if invariant { f64::INFINITY } else { tau * 1.5 };
    }
    Ok(())
}

/// Initial states for the subsystem-fidelity study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsPreset {
    /// `(|g,2> + |e,0>)/√2`
    Bell,
    /// `(|g> + |e>)|α>/√2` with `|α|² = 1`
    PlusCoherent1,
    /// `(|g> + |e>)|α>/√2` with `|α|² = 2`
    PlusCoherent2,
}

impl DynamicsPreset {
    pub const ALL: [DynamicsPreset; 3] = [DynamicsPreset::Bell, DynamicsPreset::PlusCoherent1, DynamicsPreset::PlusCoherent2];

    pub fn name(self) -> &'static str {
        match self {
            DynamicsPreset::Bell => "bell",
            DynamicsPreset::PlusCoherent1 => "plus_coherent_1",
            DynamicsPreset::PlusCoherent2 => "plus_coherent_2",
        }
    }

    /// Qubit-first state on `qubit ⊗ oscillator(trunc)`.
    pub fn initial_state(self, trunc: usize) -> Result<StateVector> {
        let layout = SystemSpec::single(1.0, 1, 0.0, 1.0, trunc).layout()?;
        let plus = StateVector::qubit(ONE, ONE)?;
        match self {
            DynamicsPreset::Bell => {
                let g2 = StateVector::basis(layout.clone(), &[1, 2])?;
                let e0 = StateVector::basis(layout, &[0, 0])?;
                StateVector::superposition(&[(ONE, &g2), (ONE, &e0)])
            }
            DynamicsPreset::PlusCoherent1 => StateVector::product(&[&plus, &coherent_state(ONE, trunc)?]),
            DynamicsPreset::PlusCoherent2 => StateVector::product(&[&plus, &coherent_state(C64::new(2f64.sqrt(), 0.0), trunc)?]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityPoint {
    /// Time in units of `1/χ`.
    pub t_chi: f64,
    pub fid_qubit: f64,
    pub fid_osc: f64,
}

/// Subsystem fidelities between evolution under the full single-qubit model and
/// under its dispersive approximation, sampled at the given `χt` values.
pub fn dispersive_fidelity_trace(spec: &SystemSpec, regime: Regime, psi0: &StateVector, chi_times: &[f64]) -> Result<Vec<FidelityPoint>> {
    let params: DispersiveParams = spec.params()?;
    let times: Vec<f64> = chi_times.iter().map(|&x| x / params.chi).collect();
    let exact = evolve_sampled(&build_nR(spec)?, psi0, &times, EvolveOptions::default())?;
    let approx = evolve_sampled(&build_dispersive(spec, regime, false)?, psi0, &times, EvolveOptions::default())?;
    chi_times
        .iter()
        .zip(exact.iter().zip(&approx))
        .map(|(&t_chi, (a, b))| {
            Ok(FidelityPoint {
                t_chi,
                fid_qubit: fidelity(&a.partial_trace(&[0])?, &b.partial_trace(&[0])?)?,
                fid_osc: fidelity(&a.partial_trace(&[1])?, &b.partial_trace(&[1])?)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{destroy, number};
    use crate::models::build_nJC;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_state(layout: HilbertLayout, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..layout.total_dim()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        StateVector::normalized(layout, amps).unwrap()
    }

    #[test]
    fn coherent_vacuum_and_moments() {
        let vac = coherent_state(ZERO, 12).unwrap();
        assert_eq!(vac.amplitudes()[0], ONE);
        assert!(vac.amplitudes()[1..].iter().all(|a| *a == ZERO));

        let psi = coherent_state(c(2f64.sqrt()), 40).unwrap();
        let n = number(40).unwrap();
        let n1 = psi.expectation(&n).unwrap().re;
        let n2 = psi.expectation(&n.matmul(&n).unwrap()).unwrap().re;
        assert!((n1 - 2.0).abs() < 1e-9);
        assert!((n2 - 6.0).abs() < 1e-8);
        // eigenstate of the truncated annihilator away from the edge
        let a_psi = destroy(40).unwrap().apply(psi.amplitudes());
        assert!(a_psi.iter().zip(psi.amplitudes()).take(30).all(|(x, y)| (x - y * 2f64.sqrt()).norm() < 1e-12));
    }

    #[test]
    fn coherent_guard() {
        assert!(matches!(coherent_state(c(2.0), 24), Err(Error::TruncationInsufficient { .. })));
        assert!(coherent_state(c(2.0), 25).is_ok());
    }

    #[test]
    fn diagonal_evolution_is_exact() {
        let h = SparseOperator::from_real_diagonal(HilbertLayout::oscillator(3).unwrap(), &[0.0, 1.0, 2.5]).unwrap();
        let psi = StateVector::normalized(h.layout().clone(), vec![ONE, ONE, ONE]).unwrap();
        let out = evolve(&h, &psi, 0.7).unwrap();
        for (j, e) in [0.0, 1.0, 2.5].iter().enumerate() {
            assert_eq!(out.amplitudes()[j], psi.amplitudes()[j] * C64::from_polar(1.0, -e * 0.7));
        }
        assert_eq!(evolve(&h, &psi, 0.0).unwrap(), psi);
    }

    fn jc_rabi_check(trunc: usize) {
        // resonant JC: |e,0> -> cos(gt)|e,0> - i sin(gt)|g,1>
        let g = 0.05;
        let spec = SystemSpec::single(1.0, 1, g, 1.0, trunc);
        let h = build_nJC(&spec).unwrap();
        let layout = spec.layout().unwrap();
        let e0 = StateVector::basis(layout.clone(), &[0, 0]).unwrap();
        let (ie0, ig1) = (layout.index_of(&[0, 0]), layout.index_of(&[1, 1]));
        let times: Vec<f64> = (0..=8).map(|k| k as f64 * std::f64::consts::PI / g / 8.0).collect();
        let out = evolve_sampled(&h, &e0, &times, EvolveOptions::default()).unwrap();
        for (t, psi) in times.iter().zip(&out) {
            let phase = C64::from_polar(1.0, -0.5 * t);
            let want_e0 = phase * (g * t).cos();
            let want_g1 = phase * C64::new(0.0, -(g * t).sin());
            assert!((psi.amplitudes()[ie0] - want_e0).norm() < 1e-8, "t={t}");
            assert!((psi.amplitudes()[ig1] - want_g1).norm() < 1e-8, "t={t}");
            assert!((psi.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jc_rabi_oscillation_spectral() {
        jc_rabi_check(10);
    }

    #[test]
    fn jc_rabi_oscillation_krylov() {
        jc_rabi_check(80);
    }

    #[test]
    fn krylov_conserves_norm_and_energy() {
        let spec = SystemSpec::single(8.0, 2, 0.3, 1.0, 80);
        let h = build_nR(&spec).unwrap();
        let psi = random_state(h.layout().clone(), 3);
        let e0 = psi.expectation(&h).unwrap().re;
        let out = evolve_sampled(&h, &psi, &[1.0, 10.0, 50.0], EvolveOptions::default()).unwrap();
        for s in out {
            assert!((s.norm() - 1.0).abs() < 1e-9);
            assert!((s.expectation(&h).unwrap().re - e0).abs() <= 1e-8 * e0.abs());
        }
    }

    #[test]
    fn krylov_matches_spectral_oracle() {
        let h = build_nR(&SystemSpec::single(3.0, 1, 0.4, 1.0, 60)).unwrap();
        let psi = random_state(h.layout().clone(), 5);
        let t = 7.3;
        let krylov = evolve(&h, &psi, t).unwrap();
        let r = crate::eigensolve::eigh_dense(&h).unwrap();
        let v = r.states.unwrap().to_dense();
        let c0 = v.adjoint() * DMatrix::from_column_slice(h.dim(), 1, psi.amplitudes());
        let ct = DMatrix::from_fn(h.dim(), 1, |i, _| c0[(i, 0)] * C64::from_polar(1.0, -r.energies[i] * t));
        let want = &v * ct;
        let diff = krylov.amplitudes().iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn layout_mismatch_rejected() {
        let h = number(5).unwrap();
        let psi = StateVector::fock(6, 0).unwrap();
        assert!(matches!(evolve(&h, &psi, 1.0), Err(Error::Layout(_))));
        let a = destroy(5).unwrap();
        assert!(matches!(evolve(&a, &StateVector::fock(5, 0).unwrap(), 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn bell_reduction_is_maximally_mixed() {
        let psi = DynamicsPreset::Bell.initial_state(6).unwrap();
        let q = psi.partial_trace(&[0]).unwrap();
        assert!((q.matrix() - DMatrix::from_diagonal_element(2, 2, c(0.5))).iter().all(|z| z.norm() < 1e-15));
        let o = psi.partial_trace(&[1]).unwrap();
        assert!((o.matrix()[(0, 0)].re - 0.5).abs() < 1e-15 && (o.matrix()[(2, 2)].re - 0.5).abs() < 1e-15);
        assert!(matches!(psi.partial_trace(&[]), Err(Error::Usage(_))));
        assert!(matches!(psi.partial_trace(&[2]), Err(Error::Usage(_))));
    }

    #[test]
    fn product_state_reduces_to_factors() {
        let q = StateVector::qubit(c(0.6), C64::new(0.0, 0.8)).unwrap();
        let o = coherent_state(C64::new(0.3, 0.4), 20).unwrap();
        let psi = StateVector::product(&[&q, &o]).unwrap();
        let rq = psi.partial_trace(&[0]).unwrap();
        let ro = psi.partial_trace(&[1]).unwrap();
        assert!((rq.matrix() - q.to_density().matrix()).iter().all(|z| z.norm() < 1e-15));
        assert!((ro.matrix() - o.to_density().matrix()).iter().all(|z| z.norm() < 1e-15));
        // the mixed-state path agrees with the pure-state path
        let via_rho = psi.to_density().partial_trace(&[1]).unwrap();
        assert!((via_rho.matrix() - ro.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn fidelity_examples() {
        let a = StateVector::fock(4, 1).unwrap().to_density();
        let b = StateVector::fock(4, 2).unwrap().to_density();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&a, &b).unwrap() < 1e-12);
        let mixed = DensityMatrix::new(HilbertLayout::oscillator(4).unwrap(), DMatrix::from_diagonal_element(4, 4, c(0.25))).unwrap();
        assert!((fidelity(&a, &mixed).unwrap() - 0.25).abs() < 1e-12);
        let q = StateVector::qubit(ONE, ONE).unwrap().to_density();
        assert!(matches!(fidelity(&a, &q), Err(Error::Usage(_))));
    }

    #[test]
    fn density_validation() {
        let l = HilbertLayout::qubit();
        assert!(DensityMatrix::new(l.clone(), DMatrix::from_diagonal_element(2, 2, c(1.0))).is_err());
        assert!(DensityMatrix::new(l.clone(), DMatrix::from_row_slice(2, 2, &[c(1.5), ZERO, ZERO, c(-0.5)])).is_err());
        let nh = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), ZERO, c(0.5)]);
        assert!(matches!(DensityMatrix::new(l, nh), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn preset_states_are_normalized() {
        for p in DynamicsPreset::ALL {
            assert!((p.initial_state(40).unwrap().norm() - 1.0).abs() < 1e-14);
        }
        // the ladder operator sees |α|² = 2 in the second coherent preset
        let psi = DynamicsPreset::PlusCoherent2.initial_state(40).unwrap();
        let o = psi.partial_trace(&[1]).unwrap();
        let nbar: f64 = (0..40).map(|j| j as f64 * o.matrix()[(j, j)].re).sum();
        assert!((nbar - 2.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn reductions_have_unit_trace(seed in 0u64..10_000, trunc in 2usize..8) {
            let layout = HilbertLayout::new(vec![
                crate::fockspace::Subsystem::qubit(),
                crate::fockspace::Subsystem::oscillator(trunc),
                crate::fockspace::Subsystem::qubit(),
            ]).unwrap();
            let psi = random_state(layout, seed);
            for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![2, 1]] {
                let r = psi.partial_trace(&keep).unwrap();
                prop_assert!((r.trace() - 1.0).abs() < 1e-12);
                prop_assert!(DensityMatrix::new(r.layout().clone(), r.matrix().clone()).is_ok());
            }
        }

        #[test]
        fn fidelity_is_symmetric(seed in 0u64..10_000) {
            let layout = HilbertLayout::new(vec![
                crate::fockspace::Subsystem::qubit(),
                crate::fockspace::Subsystem::oscillator(4),
            ]).unwrap();
            let a = random_state(layout.clone(), seed).partial_trace(&[1]).unwrap();
            let b = random_state(layout, seed + 1).partial_trace(&[1]).unwrap();
            let (fab, fba) = (fidelity(&a, &b).unwrap(), fidelity(&b, &a).unwrap());
            prop_assert!((fab - fba).abs() < 1e-10);
            prop_assert!((0.0..=1.0).contains(&fab));
        }

        #[test]
        fn evolution_is_unitary(seed in 0u64..10_000, t in 0.0f64..20.0) {
            let h = build_nR(&SystemSpec::single(4.0, 2, 0.1, 1.0, 50)).unwrap();
            let psi = random_state(h.layout().clone(), seed);
            let out = evolve(&h, &psi, t).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-9);
        }
    }
}

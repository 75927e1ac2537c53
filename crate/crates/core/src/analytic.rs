//! Closed-form second-order results: dispersive level energies, exact multiphoton
//! Jaynes-Cummings doublets, critical photon numbers, coherent-state dressed qubit
//! frequencies and effective two-qubit parameters.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{poly_eval_from, CoeffTable};
use crate::error::{Error, Result};
use crate::models::{Regime, SystemSpec, Topology};

/// Derived quantities of one qubit-oscillator edge of order `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveParams {
    pub n: usize,
    pub g: f64,
    pub omega_q: f64,
    pub omega: f64,
    /// `ω_q - n ω`
    pub delta: f64,
    /// `ω_q + n ω`
    pub sigma: f64,
    /// `g² / Δ`
    pub chi: f64,
    /// `g² / Σ`; NaN when `Σ = 0`
    pub xi: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
    /// `g λ̄ / (2 n ω)`
    pub zeta: f64,
}

impl DispersiveParams {
    pub fn new(n: usize, g: f64, omega_q: f64, omega: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("interaction order must be >= 1".into()));
        }
        let delta = omega_q - n as f64 * omega;
        let sigma = omega_q + n as f64 * omega;
        if delta == 0.0 {
            return Err(Error::Resonance(format!("Δ_{n} = ω_q - {n}ω = 0")));
        }
        let (xi, lambda_bar) = if sigma == 0.0 { (f64::NAN, f64::NAN) } else { (g * g / sigma, g / sigma) };
        Ok(DispersiveParams {
            n,
            g,
            omega_q,
            omega,
            delta,
            sigma,
            chi: g * g / delta,
            xi,
            lambda: g / delta,
            lambda_bar,
            zeta: g * lambda_bar / (2.0 * n as f64 * omega),
        })
    }

    /// Parameters for a given `Δ_n` at `ω = 1`.
    pub fn from_detuning(n: usize, g: f64, delta: f64) -> Result<Self> {
        Self::new(n, g, delta + n as f64, 1.0)
    }

    pub(crate) fn check_sigma(&self) -> Result<()> {
        if self.sigma == 0.0 {
            return Err(Error::Resonance(format!("Σ_{} = ω_q + {}ω = 0", self.n, self.n)));
        }
        Ok(())
    }

    /// Prefactors `(A, B)` of the `σz`-attached `C+` polynomial and the
    /// qubit-independent `C-` polynomial: `(χ/2, χ/2)` in the RWA, `((χ+ξ)/2, (χ-ξ)/2)` otherwise.
    pub fn coefficients(&self, regime: Regime) -> Result<(f64, f64)> {
        match regime {
            Regime::Rwa => Ok((0.5 * self.chi, 0.5 * self.chi)),
            Regime::NonRwa => {
                self.check_sigma()?;
                Ok((0.5 * (self.chi + self.xi), 0.5 * (self.chi - self.xi)))
            }
        }
    }

    /// The dropped global constant `B · C-(n, 0) = B · n!`. Adding it to a dispersive
    /// level gives the absolute second-order energy.
    pub fn constant_offset(&self, regime: Regime) -> Result<f64> {
        let (_, b) = self.coefficients(regime)?;
        let fact: f64 = (1..=self.n).map(|i| i as f64).product();
        Ok(b * fact)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    E,
    G,
}

impl QubitState {
    pub fn sz(self) -> f64 {
        match self {
            QubitState::E => 1.0,
            QubitState::G => -1.0,
        }
    }

    /// Basis index (`|e>` is 0).
    pub fn index(self) -> usize {
        match self {
            QubitState::E => 0,
            QubitState::G => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            QubitState::E
        } else {
            QubitState::G
        }
    }
}

/// `ω j + σ (ω_q/2 + A Σ_{k>=0} C+_k j^k) + B Σ_{k>=1} C-_k j^k`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dispersive_energy(
    omega: f64,
    omega_q: f64,
    a: f64,
    b: f64,
    cplus: &[f64],
    cminus: &[f64],
    sz: f64,
    j: f64,
) -> f64 {
    omega * j + sz * (0.5 * omega_q + a * poly_eval_from(cplus, 0, j)) + b * poly_eval_from(cminus, 1, j)
}

/// Dispersive energy of the bare-labeled level `|qubit, j>`, without the global constant.
pub fn dispersive_level(params: &DispersiveParams, qubit: QubitState, j: usize, regime: Regime) -> Result<f64> {
    let (a, b) = params.coefficients(regime)?;
    let table = CoeffTable::covering(params.n);
    let cplus = table.cplus_f64(params.n)?;
    let cminus = table.cminus_f64(params.n)?;
    Ok(dispersive_energy(params.omega, params.omega_q, a, b, &cplus, &cminus, qubit.sz(), j as f64))
}

/// `(l+1)(l+2)...(l+n)` as a float product.
pub fn rising_factorial(l: usize, n: usize) -> f64 {
    (1..=n).map(|i| (l + i) as f64).product()
}

/// Exact eigenvalues `(E+, E-)` of the `{|e,l>, |g,l+n>}` block of the
/// multiphoton Jaynes-Cummings model:
/// `(l + n/2) ω ± sqrt(g² (l+n)!/l! + Δ²/4)`.
pub fn njc_doublet(params: &DispersiveParams, l: usize) -> (f64, f64) {
    let centre = (l as f64 + 0.5 * params.n as f64) * params.omega;
    let coupling = params.g * rising_factorial(l, params.n).sqrt();
    let radius = coupling.hypot(0.5 * params.delta);
    (centre + radius, centre - radius)
}

/// Doublet branch continuously connected to `|e, l>` as `g` grows from zero.
pub fn njc_excited_branch(params: &DispersiveParams, l: usize) -> f64 {
    let (plus, minus) = njc_doublet(params, l);
    if params.delta > 0.0 {
        plus
    } else {
        minus
    }
}

/// Heuristic critical photon number `(|Δ|/g)^{2/n}`; for `n = 1` the
/// conventional `Δ²/(4g²)`. `+∞` when `g = 0`.
pub fn critical_photon_number(n: usize, g: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("interaction order must be >= 1".into()));
    }
    if !g.is_finite() || !delta.is_finite() {
        return Err(Error::Domain(format!("non-finite input g = {g}, Δ = {delta}")));
    }
    let g = g.abs();
    if g == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ratio = delta.abs() / g;
    Ok(if n == 1 { 0.25 * ratio * ratio } else { ratio.powf(2.0 / n as f64) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentConvention {
    /// `<a†^l a^l> = |α|^{2l}`
    #[default]
    CoherentExact,
    /// `<a†^l a^l> = |α|^l`
    Literal,
}

/// `<(a†a)^k>` in a coherent state, `Σ_l s2(k, l) <a†^l a^l>`.
pub fn coherent_number_moment(k: usize, alpha_abs: f64, convention: MomentConvention) -> Result<f64> {
    let table = CoeffTable::covering(k.saturating_sub(1).max(1));
    let s2 = table.stirling2_row_f64(k)?;
    let base = match convention {
        MomentConvention::CoherentExact => alpha_abs * alpha_abs,
        MomentConvention::Literal => alpha_abs,
    };
    Ok(s2.iter().enumerate().map(|(l, s)| s * base.powi(l as i32)).sum())
}

fn moment_sum(coeffs: &[f64], from: usize, to: usize, alpha_abs: f64, convention: MomentConvention) -> Result<f64> {
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate().take(to + 1).skip(from) {
        acc += c * coherent_number_moment(k, alpha_abs, convention)?;
    }
    Ok(acc)
}

fn check_alpha(alpha_abs: f64) -> Result<()> {
    if !(alpha_abs >= 0.0 && alpha_abs.is_finite()) {
        return Err(Error::Domain(format!("|α| must be finite and >= 0, got {alpha_abs}")));
    }
    Ok(())
}

/// Dressed qubit frequency `ω_q + χ Σ_k C+_k <(a†a)^k>` for a coherent oscillator state.
pub fn dressed_qubit_frequency(
    params: &DispersiveParams,
    alpha_abs: f64,
    convention: MomentConvention,
) -> Result<f64> {
    check_alpha(alpha_abs)?;
    if params.lambda.abs() >= 1.0 {
        return Err(Error::Domain(format!("|λ| = {} outside the dispersive regime", params.lambda.abs())));
    }
    let cplus = CoeffTable::covering(params.n).cplus_f64(params.n)?;
    Ok(params.omega_q + params.chi * moment_sum(&cplus, 0, params.n, alpha_abs, convention)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTwoQubit {
    pub omega_bar_1: f64,
    pub omega_bar_2: f64,
    pub g_bar: f64,
}

/// Coherent-state average of the two-qubit RWA dispersive Hamiltonian:
/// dressed frequencies and the XY coupling `ḡ = (χ̃/2) Σ_k C-_k <(a†a)^k>`
/// (`k` from 0 with `cross_k0`, otherwise from 1).
pub fn effective_two_qubit_params(
    spec: &SystemSpec,
    alpha_abs: f64,
    convention: MomentConvention,
    cross_k0: bool,
) -> Result<EffectiveTwoQubit> {
    spec.validate()?;
    if spec.topology != Topology::Multiqubit || spec.qubits.len() != 2 {
        return Err(Error::usage("effective two-qubit parameters need a two-qubit multiqubit system"));
    }
    let edges = spec.edges();
    let (p1, p2) = (spec.edge_params(&edges[0])?, spec.edge_params(&edges[1])?);
    if p1.n != p2.n {
        return Err(Error::config("both qubits need the same interaction order"));
    }
    let n = p1.n;
    let cminus = CoeffTable::covering(n).cminus_f64(n)?;
    let chi_t = p1.g * p2.g * (1.0 / p1.delta + 1.0 / p2.delta);
    let from = if cross_k0 { 0 } else { 1 };
    Ok(EffectiveTwoQubit {
        omega_bar_1: dressed_qubit_frequency(&p1, alpha_abs, convention)?,
        omega_bar_2: dressed_qubit_frequency(&p2, alpha_abs, convention)?,
        g_bar: 0.5 * chi_t * moment_sum(&cminus, from, n - 1, alpha_abs, convention)?,
    })
}

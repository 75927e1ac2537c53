//! Hamiltonian builders: exact multiphoton models and their second-order
//! dispersive effective forms, for one qubit and one oscillator, many qubits on a
//! shared oscillator, and one qubit driving many oscillators.
//!
//! Composite layouts list qubits first, then oscillators. Every builder returns an
//! operator whose Hermitian flag has been certified entrywise.
//!
//! Dispersive conventions:
//! * the `k = 0` term of the qubit-independent `C-` polynomial is a global constant
//!   and is dropped (see [`crate::analytic::DispersiveParams::constant_offset`]);
//! * the `σz`-attached `k = 0` term is kept;
//! * qubit-qubit and mode-mode cross terms carry the prefactor `χ̃/2`
//!   (`(χ̃ ∓ ξ̃)/2` outside the rotating-wave approximation), the value obtained from
//!   second-order perturbation theory.

use serde::{Deserialize, Serialize};

use crate::analytic::{dispersive_energy, DispersiveParams};
use crate::combinatorics::{poly_eval_from, CoeffTable};
use crate::error::{Error, Result};
use crate::fockspace::{destroy, embed, pauli, HilbertLayout, Pauli, SparseOperator, Subsystem};

pub const DEFAULT_ETA: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Rwa,
    NonRwa,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    pub omega_q: f64,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default)]
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSpec {
    #[serde(default = "unit")]
    pub omega: f64,
    pub trunc: usize,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilizerForm {
    /// `η g a†^m a^m`
    #[default]
    NumberPower,
    /// `η g (a + a†)^m`, `m` even and larger than the interaction order
    FullPositionPower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizerSpec {
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub form: StabilizerForm,
    /// Defaults to `⌊n/2⌋ + 1` for `number_power` and the smallest even `m > n`
    /// for `full_position_power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl Default for StabilizerSpec {
    fn default() -> Self {
        StabilizerSpec { eta: DEFAULT_ETA, form: StabilizerForm::NumberPower, m: None }
    }
}

impl StabilizerSpec {
    pub fn number_power(eta: f64) -> Self {
        StabilizerSpec { eta, form: StabilizerForm::NumberPower, m: None }
    }

    pub fn full_position_power(eta: f64, m: usize) -> Self {
        StabilizerSpec { eta, form: StabilizerForm::FullPositionPower, m: Some(m) }
    }

    pub fn order_for(&self, n: usize) -> usize {
        match (self.m, self.form) {
            (Some(m), _) => m,
            (None, StabilizerForm::NumberPower) => n / 2 + 1,
            (None, StabilizerForm::FullPositionPower) => (n + 2) & !1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Single,
    Multiqubit,
    Multimode,
}

/// One qubit-oscillator edge with its own interaction order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    #[serde(default)]
    pub qubit: usize,
    pub oscillator: usize,
    pub n: usize,
    pub g: f64,
}

/// Declarative description of one model instance.
///
/// For `single` and `multiqubit` topologies each qubit's `n` and `g` describe its
/// coupling to the (only) oscillator. For `multimode` the `couplings` list gives one
/// edge per oscillator; when it is empty every oscillator inherits the qubit's `n` and `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub qubits: Vec<QubitSpec>,
    pub oscillators: Vec<OscillatorSpec>,
    pub topology: Topology,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub couplings: Vec<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stabilizer: Option<StabilizerSpec>,
}

fn finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{what} must be finite, got {x}")))
    }
}

impl SystemSpec {
    pub fn single(omega_q: f64, n: usize, g: f64, omega: f64, trunc: usize) -> Self {
        SystemSpec {
            qubits: vec![QubitSpec { omega_q, n, g }],
            oscillators: vec![OscillatorSpec { omega, trunc }],
            topology: Topology::Single,
            couplings: Vec::new(),
            stabilizer: None,
        }
    }

    pub fn multiqubit(qubits: Vec<QubitSpec>, oscillator: OscillatorSpec) -> Self {
        SystemSpec {
            qubits,
            oscillators: vec![oscillator],
            topology: Topology::Multiqubit,
            couplings: Vec::new(),
            stabilizer: None,
        }
    }

    /// One qubit and one `(oscillator, n, g)` edge per mode.
    pub fn multimode(omega_q: f64, modes: Vec<(OscillatorSpec, usize, f64)>) -> Self {
        let (n0, g0) = modes.first().map(|m| (m.1, m.2)).unwrap_or((1, 0.0));
        let couplings = modes
            .iter()
            .enumerate()
            .map(|(k, m)| Coupling { qubit: 0, oscillator: k, n: m.1, g: m.2 })
            .collect();
        SystemSpec {
            qubits: vec![QubitSpec { omega_q, n: n0, g: g0 }],
            oscillators: modes.into_iter().map(|m| m.0).collect(),
            topology: Topology::Multimode,
            couplings,
            stabilizer: None,
        }
    }

    pub fn with_stabilizer(mut self, stabilizer: StabilizerSpec) -> Self {
        self.stabilizer = Some(stabilizer);
        self
    }

    /// Copy with every coupling strength replaced by `g` (single/multiqubit: qubit 0 only).
    pub fn with_g(mut self, g: f64) -> Self {
        match self.topology {
            Topology::Multimode => {
                for c in &mut self.couplings {
                    c.g = g;
                }
                self.qubits[0].g = g;
            }
            _ => self.qubits[0].g = g,
        }
        self
    }

    pub fn with_trunc(mut self, trunc: usize) -> Self {
        for o in &mut self.oscillators {
            o.trunc = trunc;
        }
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SystemSpec =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let (nq, no) = (self.qubits.len(), self.oscillators.len());
        match self.topology {
            Topology::Single if nq != 1 || no != 1 => {
                return Err(Error::config(format!("single topology needs 1 qubit and 1 oscillator, got {nq} and {no}")))
            }
            Topology::Multiqubit if nq == 0 || no != 1 => {
                return Err(Error::config(format!(
                    "multiqubit topology needs at least 1 qubit and exactly 1 oscillator, got {nq} and {no}"
                )))
            }
            Topology::Multimode if nq != 1 || no == 0 => {
                return Err(Error::config(format!(
                    "multimode topology needs exactly 1 qubit and at least 1 oscillator, got {nq} and {no}"
                )))
            }
            _ => {}
        }
        for (i, q) in self.qubits.iter().enumerate() {
            finite(q.omega_q, "omega_q")?;
            finite(q.g, "g")?;
            if q.n == 0 {
                return Err(Error::config(format!("qubit {i}: interaction order must be >= 1")));
            }
            if q.g < 0.0 {
                return Err(Error::config(format!("qubit {i}: coupling must be >= 0")));
            }
        }
        for (i, o) in self.oscillators.iter().enumerate() {
            finite(o.omega, "omega")?;
            if o.trunc < 2 {
                return Err(Error::config(format!("oscillator {i}: trunc must be >= 2")));
            }
        }
        if !self.couplings.is_empty() {
            if self.topology != Topology::Multimode {
                return Err(Error::config("per-edge couplings are only used by the multimode topology"));
            }
            let mut seen = vec![false; no];
            for c in &self.couplings {
                finite(c.g, "coupling g")?;
                if c.qubit >= nq || c.oscillator >= no {
                    return Err(Error::config(format!(
                        "coupling references qubit {} / oscillator {} outside the system",
                        c.qubit, c.oscillator
                    )));
                }
                if c.n == 0 || c.g < 0.0 {
                    return Err(Error::config("coupling needs n >= 1 and g >= 0"));
                }
                if std::mem::replace(&mut seen[c.oscillator], true) {
                    return Err(Error::config(format!("oscillator {} coupled twice", c.oscillator)));
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::config("every oscillator needs a coupling entry"));
            }
        }
        if let Some(s) = &self.stabilizer {
            finite(s.eta, "eta")?;
            if s.eta < 0.0 {
                return Err(Error::config("stabilizer eta must be >= 0"));
            }
            if self.topology != Topology::Single {
                return Err(Error::config("stabilizer is only supported for the single topology"));
            }
            let n = self.qubits[0].n;
            let m = s.order_for(n);
            if m == 0 {
                return Err(Error::config("stabilizer order must be >= 1"));
            }
            if s.form == StabilizerForm::FullPositionPower && (m % 2 != 0 || m <= n) {
                return Err(Error::config(format!(
                    "full_position_power needs an even order above n = {n}, got {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<HilbertLayout> {
        let mut subs: Vec<Subsystem> = self.qubits.iter().map(|_| Subsystem::qubit()).collect();
        subs.extend(self.oscillators.iter().map(|o| Subsystem::oscillator(o.trunc)));
        HilbertLayout::new(subs)
    }

    pub fn oscillator_slot(&self, k: usize) -> usize {
        self.qubits.len() + k
    }

    /// Edges as `(qubit, oscillator, n, g)`.
    pub fn edges(&self) -> Vec<Coupling> {
        match self.topology {
            Topology::Multimode if !self.couplings.is_empty() => self.couplings.clone(),
            Topology::Multimode => (0..self.oscillators.len())
                .map(|k| Coupling { qubit: 0, oscillator: k, n: self.qubits[0].n, g: self.qubits[0].g })
                .collect(),
            _ => self
                .qubits
                .iter()
                .enumerate()
                .map(|(l, q)| Coupling { qubit: l, oscillator: 0, n: q.n, g: q.g })
                .collect(),
        }
    }

    /// `Δ_n = ω_q - n ω` for an edge.
    pub fn delta(&self, edge: &Coupling) -> f64 {
        self.qubits[edge.qubit].omega_q - edge.n as f64 * self.oscillators[edge.oscillator].omega
    }

    /// `Σ_n = ω_q + n ω` for an edge.
    pub fn sigma(&self, edge: &Coupling) -> f64 {
        self.qubits[edge.qubit].omega_q + edge.n as f64 * self.oscillators[edge.oscillator].omega
    }

    pub fn edge_params(&self, edge: &Coupling) -> Result<DispersiveParams> {
        DispersiveParams::new(
            edge.n,
            edge.g,
            self.qubits[edge.qubit].omega_q,
            self.oscillators[edge.oscillator].omega,
        )
    }

    /// Parameters of the single qubit-oscillator pair.
    pub fn params(&self) -> Result<DispersiveParams> {
        self.expect(Topology::Single)?;
        self.edge_params(&self.edges()[0])
    }

    fn expect(&self, topology: Topology) -> Result<()> {
        self.validate()?;
        if self.topology != topology {
            return Err(Error::usage(format!("expected {topology:?} topology, got {:?}", self.topology)));
        }
        Ok(())
    }

    fn check_truncation(&self) -> Result<()> {
        for e in self.edges() {
            let trunc = self.oscillators[e.oscillator].trunc;
            if e.n >= trunc {
                return Err(Error::DegenerateTruncation { order: e.n, trunc });
            }
        }
        Ok(())
    }
}

/// Diagonal `Σ_{k >= from} c_k N^k` on a `trunc`-level oscillator.
pub fn number_polynomial(trunc: usize, coeffs: &[f64], from: usize) -> Result<SparseOperator> {
    let diag: Vec<f64> = (0..trunc).map(|j| poly_eval_from(coeffs, from, j as f64)).collect();
    SparseOperator::from_real_diagonal(HilbertLayout::oscillator(trunc)?, &diag)
}

/// `ω N` on every oscillator plus `(ω_q/2) σz` on every qubit.
pub fn bare_hamiltonian(spec: &SystemSpec) -> Result<SparseOperator> {
    spec.validate()?;
    let layout = spec.layout()?;
    let nq = spec.qubits.len();
    let mut diag = vec![0.0; layout.total_dim()];
    for (i, d) in diag.iter_mut().enumerate() {
        let digits = layout.digits(i);
        let mut e = 0.0;
        for (l, q) in spec.qubits.iter().enumerate() {
            e += if digits[l] == 0 { 0.5 * q.omega_q } else { -0.5 * q.omega_q };
        }
        for (k, o) in spec.oscillators.iter().enumerate() {
            e += o.omega * digits[nq + k] as f64;
        }
        *d = e;
    }
    SparseOperator::from_real_diagonal(layout, &diag)
}

fn finish(h: SparseOperator) -> Result<SparseOperator> {
    h.hermitian_part().certify_hermitian()
}

fn coupling_term(spec: &SystemSpec, edge: &Coupling, rotating: bool) -> Result<SparseOperator> {
    let layout = spec.layout()?;
    let trunc = spec.oscillators[edge.oscillator].trunc;
    let an = destroy(trunc)?.pow(edge.n as u32)?;
    let adn = an.dagger();
    let (q, o) = (edge.qubit, spec.oscillator_slot(edge.oscillator));
    let term = if rotating {
        let plus = pauli(Pauli::Plus);
        let minus = pauli(Pauli::Minus);
        embed(&layout, &[(q, &plus), (o, &an)])?.add(&embed(&layout, &[(q, &minus), (o, &adn)])?)?
    } else {
        let x = pauli(Pauli::X);
        embed(&layout, &[(q, &x), (o, &an.add(&adn)?)])?
    };
    Ok(term.scale_real(edge.g))
}

/// Stabilizing term for a single-topology spec, if configured.
pub fn stabilizer_term(spec: &SystemSpec) -> Result<Option<SparseOperator>> {
    let Some(stab) = &spec.stabilizer else { return Ok(None) };
    spec.validate()?;
    let q = &spec.qubits[0];
    let trunc = spec.oscillators[0].trunc;
    let m = stab.order_for(q.n);
    let strength = stab.eta * q.g;
    let local = match stab.form {
        StabilizerForm::NumberPower => {
            // a†^m a^m |j> = j (j-1) ... (j-m+1) |j>
            let diag: Vec<f64> = (0..trunc)
                .map(|j| (0..m).map(|i| j as f64 - i as f64).product::<f64>().max(0.0) * strength)
                .collect();
            SparseOperator::from_real_diagonal(HilbertLayout::oscillator(trunc)?, &diag)?
        }
        StabilizerForm::FullPositionPower => {
            let a = destroy(trunc)?;
            let x = a.add(&a.dagger())?;
            x.pow(m as u32)?.hermitian_part().scale_real(strength)
        }
    };
    let layout = spec.layout()?;
    Ok(Some(embed(&layout, &[(1, &local)])?))
}

fn exact_single(spec: &SystemSpec, rotating: bool) -> Result<SparseOperator> {
    spec.expect(Topology::Single)?;
    spec.check_truncation()?;
    let mut h = bare_hamiltonian(spec)?.add(&coupling_term(spec, &spec.edges()[0], rotating)?)?;
    if let Some(s) = stabilizer_term(spec)? {
        h = h.add(&s)?;
    }
    finish(h)
}

/// `ω N + (ω_q/2) σz + g σx (a†^n + a^n)`, plus the stabilizer when configured.
#[allow(non_snake_case)]
pub fn build_nR(spec: &SystemSpec) -> Result<SparseOperator> {
    exact_single(spec, false)
}

/// `ω N + (ω_q/2) σz + g (σ+ a^n + σ- a†^n)`, plus the stabilizer when configured.
#[allow(non_snake_case)]
pub fn build_nJC(spec: &SystemSpec) -> Result<SparseOperator> {
    exact_single(spec, true)
}

/// Single-qubit dispersive Hamiltonian. It is diagonal in the bare basis apart from
/// the optional non-RWA `2n`-photon squeezing term `((χ+ξ)/2) σz (a†^{2n} + a^{2n})`.
pub fn build_dispersive(spec: &SystemSpec, regime: Regime, include_squeezing: bool) -> Result<SparseOperator> {
    spec.expect(Topology::Single)?;
    let p = spec.params()?;
    let (a, b) = p.coefficients(regime)?;
    let table = CoeffTable::covering(p.n);
    let cplus = table.cplus_f64(p.n)?;
    let cminus = table.cminus_f64(p.n)?;
    let layout = spec.layout()?;
    let trunc = spec.oscillators[0].trunc;
    let diag: Vec<f64> = (0..layout.total_dim())
        .map(|i| {
            let (q, j) = (i / trunc, i % trunc);
            let sz = if q == 0 { 1.0 } else { -1.0 };
            dispersive_energy(p.omega, p.omega_q, a, b, &cplus, &cminus, sz, j as f64)
        })
        .collect();
    let mut h = SparseOperator::from_real_diagonal(layout.clone(), &diag)?;
    if include_squeezing && regime == Regime::NonRwa {
        let a2n = destroy(trunc)?.pow(2 * p.n as u32)?;
        let sq = a2n.add(&a2n.dagger())?;
        let z = pauli(Pauli::Z);
        h = h.add(&embed(&layout, &[(0, &z), (1, &sq)])?.scale_real(a))?;
    }
    finish(h)
}

/// `n`-photon Dicke (`rwa = false`) or Tavis-Cummings (`rwa = true`) Hamiltonian.
#[allow(non_snake_case)]
pub fn build_nDicke(spec: &SystemSpec, rwa: bool) -> Result<SparseOperator> {
    spec.expect(Topology::Multiqubit)?;
    spec.check_truncation()?;
    let mut h = bare_hamiltonian(spec)?;
    for e in spec.edges() {
        h = h.add(&coupling_term(spec, &e, rwa)?)?;
    }
    finish(h)
}

/// Cross-term prefactor and `C-` polynomial coefficients (`k = 0..n`) for a qubit pair.
fn pair_cross(spec: &SystemSpec, l: usize, m: usize, regime: Regime) -> Result<f64> {
    let edges = spec.edges();
    let (pl, pm) = (spec.edge_params(&edges[l])?, spec.edge_params(&edges[m])?);
    let chi_t = pl.g * pm.g * (1.0 / pl.delta + 1.0 / pm.delta);
    Ok(match regime {
        Regime::Rwa => 0.5 * chi_t,
        Regime::NonRwa => {
            pl.check_sigma()?;
            pm.check_sigma()?;
            let xi_t = pl.g * pm.g * (1.0 / pl.sigma + 1.0 / pm.sigma);
            0.5 * (chi_t - xi_t)
        }
    })
}

fn common_order(spec: &SystemSpec) -> Result<usize> {
    let n = spec.qubits[0].n;
    if spec.qubits.iter().any(|q| q.n != n) {
        return Err(Error::config("multiqubit dispersive model needs a common interaction order"));
    }
    Ok(n)
}

/// Multiqubit dispersive Hamiltonian: single-qubit dispersive shifts for each qubit
/// plus photon-number dependent qubit-qubit couplings, `σ+σ- + h.c.` in the RWA and
/// `σx σx` otherwise. `cross_k0` keeps the constant `C-(n, 0)` cross term.
pub fn build_multiqubit_dispersive(
    spec: &SystemSpec,
    regime: Regime,
    cross_k0: bool,
    include_squeezing: bool,
) -> Result<SparseOperator> {
    spec.expect(Topology::Multiqubit)?;
    let n = common_order(spec)?;
    let layout = spec.layout()?;
    let nq = spec.qubits.len();
    let trunc = spec.oscillators[0].trunc;
    let table = CoeffTable::covering(n);
    let cplus = table.cplus_f64(n)?;
    let cminus = table.cminus_f64(n)?;
    let edges = spec.edges();
    let params: Vec<DispersiveParams> = edges.iter().map(|e| spec.edge_params(e)).collect::<Result<_>>()?;
    let coeffs: Vec<(f64, f64)> = params.iter().map(|p| p.coefficients(regime)).collect::<Result<_>>()?;

    let omega = spec.oscillators[0].omega;
    let diag: Vec<f64> = (0..layout.total_dim())
        .map(|i| {
            let digits = layout.digits(i);
            let j = digits[nq] as f64;
            let mut e = omega * j;
            for (l, (p, &(a, b))) in params.iter().zip(&coeffs).enumerate() {
                let sz = if digits[l] == 0 { 1.0 } else { -1.0 };
                e += dispersive_energy(0.0, p.omega_q, a, b, &cplus, &cminus, sz, j);
            }
            e
        })
        .collect();
    let mut h = SparseOperator::from_real_diagonal(layout.clone(), &diag)?;

    let poly = number_polynomial(trunc, &cminus, if cross_k0 { 0 } else { 1 })?;
    let poly = embed(&layout, &[(nq, &poly)])?;
    for l in 0..nq {
        for m in 0..l {
            let c = pair_cross(spec, l, m, regime)?;
            let qq = match regime {
                Regime::Rwa => {
                    let (p, mi) = (pauli(Pauli::Plus), pauli(Pauli::Minus));
                    embed(&layout, &[(l, &p), (m, &mi)])?.add(&embed(&layout, &[(l, &mi), (m, &p)])?)?
                }
                Regime::NonRwa => {
                    let x = pauli(Pauli::X);
                    embed(&layout, &[(l, &x), (m, &x)])?
                }
            };
            h = h.add(&qq.matmul(&poly)?.scale_real(c))?;
        }
    }
    if include_squeezing && regime == Regime::NonRwa {
        let a2n = destroy(trunc)?.pow(2 * n as u32)?;
        let sq = a2n.add(&a2n.dagger())?;
        let z = pauli(Pauli::Z);
        for (l, &(a, _)) in coeffs.iter().enumerate() {
            h = h.add(&embed(&layout, &[(l, &z), (nq, &sq)])?.scale_real(a))?;
        }
    }
    finish(h)
}

/// The `4 × 4` two-qubit block at oscillator occupation `j`, in the basis
/// `{|ee>, |eg>, |ge>, |gg>}`, assembled from the symbols `Σ, Δ, Ξ, Υ±, μ`.
/// The RWA variant sets `ξ = 0` and zeroes the `|ee><gg|` entries.
pub fn two_qubit_block(j: usize, spec: &SystemSpec, regime: Regime, cross_k0: bool) -> Result<[[f64; 4]; 4]> {
    spec.expect(Topology::Multiqubit)?;
    if spec.qubits.len() != 2 {
        return Err(Error::usage("two_qubit_block needs exactly two qubits"));
    }
    let n = common_order(spec)?;
    let edges = spec.edges();
    let (p1, p2) = (spec.edge_params(&edges[0])?, spec.edge_params(&edges[1])?);
    let rwa = regime == Regime::Rwa;
    let xi = |p: &DispersiveParams| -> Result<f64> {
        if rwa {
            Ok(0.0)
        } else {
            p.check_sigma()?;
            Ok(p.xi)
        }
    };
    let (xi1, xi2) = (xi(&p1)?, xi(&p2)?);
    let chi_t = p1.g * p2.g * (1.0 / p1.delta + 1.0 / p2.delta);
    let xi_t = if rwa { 0.0 } else { p1.g * p2.g * (1.0 / p1.sigma + 1.0 / p2.sigma) };

    let table = CoeffTable::covering(n);
    let cplus = table.cplus_f64(n)?;
    let cminus = table.cminus_f64(n)?;
    let jf = j as f64;
    let pplus: f64 = (0..=n).map(|k| cplus[k] * jf.powi(k as i32)).sum();
    let pminus: f64 = (1..n).map(|k| cminus[k] * jf.powi(k as i32)).sum();
    let pminus_cross = pminus + if cross_k0 { cminus[0] } else { 0.0 };

    let sum_q = p1.omega_q + p2.omega_q;
    let diff_q = p1.omega_q - p2.omega_q;
    let xi_big = (chi_t - xi_t) * pminus_cross;
    let ups_p = ((p1.chi + xi1) + (p2.chi + xi2)) * pplus;
    let ups_m = ((p1.chi + xi1) - (p2.chi + xi2)) * pplus;
    let omega = spec.oscillators[0].omega;
    let mu = 2.0 * jf * omega + (p1.chi + p2.chi - xi1 - xi2) * pminus;

    let corner = if rwa { 0.0 } else { xi_big };
    let m = [
        [sum_q + ups_p + mu, 0.0, 0.0, corner],
        [0.0, diff_q + ups_m + mu, xi_big, 0.0],
        [0.0, xi_big, -diff_q - ups_m + mu, 0.0],
        [corner, 0.0, 0.0, -sum_q - ups_p + mu],
    ];
    Ok(m.map(|row| row.map(|x| 0.5 * x)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultimodeVariant {
    Mmr,
    Mmjc,
    DispersiveRwa,
    DispersiveNonrwa,
}

/// One qubit coupled to several oscillators, each through its own order `n_k`.
///
/// The dispersive variants add, per mode, the single-mode shifts (without the
/// single-mode squeezing term) and, per mode pair, `(χ̃/2) σz (a_k†^{n_k} a_l^{n_l} + h.c.)`
/// in the RWA or `((χ̃+ξ̃)/2) σz (a_k^{n_k} + h.c.)(a_l^{n_l} + h.c.)` otherwise.
pub fn build_multimode(spec: &SystemSpec, variant: MultimodeVariant) -> Result<SparseOperator> {
    spec.expect(Topology::Multimode)?;
    let edges = spec.edges();
    let layout = spec.layout()?;
    let mut h = bare_hamiltonian(spec)?;
    match variant {
        MultimodeVariant::Mmr | MultimodeVariant::Mmjc => {
            spec.check_truncation()?;
            let rotating = variant == MultimodeVariant::Mmjc;
            for e in &edges {
                h = h.add(&coupling_term(spec, e, rotating)?)?;
            }
        }
        MultimodeVariant::DispersiveRwa | MultimodeVariant::DispersiveNonrwa => {
            let regime = if variant == MultimodeVariant::DispersiveRwa { Regime::Rwa } else { Regime::NonRwa };
            let z = pauli(Pauli::Z);
            let params: Vec<DispersiveParams> = edges.iter().map(|e| spec.edge_params(e)).collect::<Result<_>>()?;
            let mut ladders = Vec::with_capacity(edges.len());
            for (e, p) in edges.iter().zip(&params) {
                let (a, b) = p.coefficients(regime)?;
                let table = CoeffTable::covering(p.n);
                let trunc = spec.oscillators[e.oscillator].trunc;
                let slot = spec.oscillator_slot(e.oscillator);
                let plus = number_polynomial(trunc, &table.cplus_f64(p.n)?, 0)?.scale_real(a);
                let minus = number_polynomial(trunc, &table.cminus_f64(p.n)?, 1)?.scale_real(b);
                h = h.add(&embed(&layout, &[(0, &z), (slot, &plus)])?)?;
                h = h.add(&embed(&layout, &[(slot, &minus)])?)?;
                let an = destroy(trunc)?.pow(p.n as u32)?;
                ladders.push((slot, an));
            }
            for l in 0..edges.len() {
                for k in 0..l {
                    let (pk, pl) = (&params[k], &params[l]);
                    let chi_t = pk.g * pl.g * (1.0 / pk.delta + 1.0 / pl.delta);
                    let (sk, ak) = (&ladders[k].0, &ladders[k].1);
                    let (sl, al) = (&ladders[l].0, &ladders[l].1);
                    let term = match regime {
                        Regime::Rwa => {
                            let hop = embed(&layout, &[(0, &z), (*sk, &ak.dagger()), (*sl, al)])?;
                            hop.add(&hop.dagger())?.scale_real(0.5 * chi_t)
                        }
                        Regime::NonRwa => {
                            pk.check_sigma()?;
                            pl.check_sigma()?;
                            let xi_t = pk.g * pl.g * (1.0 / pk.sigma + 1.0 / pl.sigma);
                            let xk = ak.add(&ak.dagger())?;
                            let xl = al.add(&al.dagger())?;
                            embed(&layout, &[(0, &z), (*sk, &xk), (*sl, &xl)])?.scale_real(0.5 * (chi_t + xi_t))
                        }
                    };
                    h = h.add(&term)?;
                }
            }
        }
    }
    finish(h)
}

/// Conserved excitation number `N + n Σ_l |e><e|_l` for rotating-wave models
/// with a common order `n` on one oscillator.
pub fn excitation_number(spec: &SystemSpec) -> Result<SparseOperator> {
    let layout = spec.layout()?;
    let nq = spec.qubits.len();
    let diag: Vec<f64> = (0..layout.total_dim())
        .map(|i| {
            let d = layout.digits(i);
            let excited: usize = spec.qubits.iter().enumerate().filter(|(l, _)| d[*l] == 0).map(|(_, q)| q.n).sum();
            (d[nq] + excited) as f64
        })
        .collect();
    SparseOperator::from_real_diagonal(layout, &diag)
}

//! Closed-form tables: commutator coefficients, level formulas, critical photon
//! numbers, dressed qubit frequencies and effective two-qubit parameters.

use clap::{Args, ValueEnum};
use serde_json::json;

use nphoton_core::analytic::{
    critical_photon_number, dispersive_level, dressed_qubit_frequency, effective_two_qubit_params, njc_doublet,
    njc_excited_branch, DispersiveParams, MomentConvention, QubitState,
};
use nphoton_core::combinatorics::{CoeffTable, Sign};
use nphoton_core::models::{OscillatorSpec, QubitSpec, Regime, SystemSpec};

use crate::error::CliError;
use crate::grid::{parse_orders, parse_reals};
use crate::output::Table;

#[derive(Args, Debug)]
pub struct CoeffTableArgs {
    /// Largest interaction order.
    #[arg(long, default_value_t = 4)]
    pub nmax: usize,
}

pub fn coeff_table(args: &CoeffTableArgs) -> Result<Table, CliError> {
    if args.nmax == 0 {
        return Err(CliError::config("--nmax must be at least 1"));
    }
    let table = CoeffTable::new(args.nmax);
    let mut out = Table::new("coeff-table", &["n", "k", "cplus", "cminus"], &[]);
    out.parameters = json!({ "nmax": args.nmax });
    for n in 1..=args.nmax {
        for k in 0..=n {
            out.push(vec![
                n.into(),
                k.into(),
                table.c_coeff(n, k, Sign::Plus)?.to_string().into(),
                table.c_coeff(n, k, Sign::Minus)?.to_string().into(),
            ]);
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct LevelsArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.02)]
    pub g: f64,
    /// Detuning `ω_q - n ω` in units of `ω`.
    #[arg(long, default_value_t = 6.0)]
    pub delta: f64,
    /// Largest Fock index.
    #[arg(long, default_value_t = 10)]
    pub jmax: usize,
}

/// Single-qubit spec at `ω = 1`; truncation covers every level up to `jmax`.
fn single_spec(n: usize, g: f64, delta: f64, jmax: usize) -> SystemSpec {
    SystemSpec::single(delta + n as f64, n, g, 1.0, jmax + n + 1)
}

/// Exact level continuously connected to `|qubit, j>` in the multiphoton JC model.
fn njc_level(p: &DispersiveParams, qubit: QubitState, j: usize) -> f64 {
    match qubit {
        QubitState::E => njc_excited_branch(p, j),
        QubitState::G if j < p.n => j as f64 * p.omega - 0.5 * p.omega_q,
        QubitState::G => {
            let (plus, minus) = njc_doublet(p, j - p.n);
            if p.delta > 0.0 {
                minus
            } else {
                plus
            }
        }
    }
}

fn with_offset(p: &DispersiveParams, qubit: QubitState, j: usize, regime: Regime) -> Option<f64> {
    Some(dispersive_level(p, qubit, j, regime).ok()? + p.constant_offset(regime).ok()?)
}

pub fn levels(args: &LevelsArgs) -> Result<Table, CliError> {
    let spec = single_spec(args.n, args.g, args.delta, args.jmax);
    spec.validate()?;
    let p = spec.params()?;
    let mut out = Table::new(
        "levels",
        &["n", "qubit", "j", "e_rwa", "e_nonrwa", "e_njc"],
        &["e_rwa", "e_nonrwa", "e_njc"],
    );
    out.config = Some(serde_json::to_value(&spec).expect("spec serializes"));
    out.parameters = json!({ "n": args.n, "g": args.g, "delta": args.delta, "jmax": args.jmax });
    for qubit in [QubitState::G, QubitState::E] {
        for j in 0..=args.jmax {
            out.push(vec![
                args.n.into(),
                if qubit == QubitState::E { "e" } else { "g" }.into(),
                j.into(),
                with_offset(&p, qubit, j, Regime::Rwa).into(),
                with_offset(&p, qubit, j, Regime::NonRwa).into(),
                njc_level(&p, qubit, j).into(),
            ]);
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct CriticalArgs {
    /// Orders, e.g. `1..4` or `1,2`.
    #[arg(long, default_value = "1..4")]
    pub n: String,
    /// Detunings, e.g. `2,6`.
    #[arg(long, default_value = "2,6")]
    pub delta: String,
    /// Couplings, e.g. `0.01:0.3:29`.
    #[arg(long, default_value = "0.01:0.3:29")]
    pub g: String,
}

pub fn critical_nph(args: &CriticalArgs) -> Result<Table, CliError> {
    let (orders, deltas, gs) = (parse_orders(&args.n)?, parse_reals(&args.delta)?, parse_reals(&args.g)?);
    let mut out = Table::new("critical-nph", &["n", "delta", "g", "n_crit"], &[]);
    out.parameters = json!({ "n": orders, "delta": deltas, "g": gs });
    for &n in &orders {
        for &delta in &deltas {
            for &g in &gs {
                out.push(vec![n.into(), delta.into(), g.into(), critical_photon_number(n, g, delta)?.into()]);
            }
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct DressedArgs {
    #[arg(long, default_value = "1,2,3")]
    pub n: String,
    #[arg(long, default_value = "0.02,0.03")]
    pub g: String,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Coherent amplitudes `|α|`.
    #[arg(long, default_value = "0:3:30")]
    pub alpha: String,
}

pub fn dressed_freq(args: &DressedArgs) -> Result<Table, CliError> {
    let (orders, gs, alphas) = (parse_orders(&args.n)?, parse_reals(&args.g)?, parse_reals(&args.alpha)?);
    let mut out = Table::new(
        "dressed-freq",
        &["n", "g", "alpha", "omega_q_eff_exact", "omega_q_eff_literal"],
        &["omega_q_eff_exact", "omega_q_eff_literal"],
    );
    out.parameters = json!({ "n": orders, "g": gs, "delta": args.delta, "alpha": alphas });
    for &n in &orders {
        for &g in &gs {
            let p = DispersiveParams::from_detuning(n, g, args.delta)?;
            for &alpha in &alphas {
                out.push(vec![
                    n.into(),
                    g.into(),
                    alpha.into(),
                    dressed_qubit_frequency(&p, alpha, MomentConvention::CoherentExact)?.into(),
                    dressed_qubit_frequency(&p, alpha, MomentConvention::Literal)?.into(),
                ]);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    CoherentExact,
    Literal,
    Both,
}

#[derive(Args, Debug)]
pub struct Eff2qArgs {
    /// Two-qubit multiqubit configuration (JSON); overrides the flags below.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 2.5)]
    pub omega_q1: f64,
    #[arg(long, default_value_t = 2.5)]
    pub omega_q2: f64,
    #[arg(long, default_value_t = 0.02)]
    pub g1: f64,
    #[arg(long, default_value_t = 0.02)]
    pub g2: f64,
    #[arg(long, default_value_t = 40)]
    pub trunc: usize,
    #[arg(long, default_value = "0:3:30")]
    pub alpha: String,
    /// Include the constant `k = 0` term of the exchange coupling.
    #[arg(long)]
    pub cross_k0: bool,
    #[arg(long, value_enum, default_value = "both")]
    pub convention: ConventionArg,
}

pub fn eff_2q(args: &Eff2qArgs) -> Result<Table, CliError> {
    let spec = match &args.config {
        Some(path) => SystemSpec::from_json(
            &std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?,
        )?,
        None => SystemSpec::multiqubit(
            vec![
                QubitSpec { omega_q: args.omega_q1, n: args.n, g: args.g1 },
                QubitSpec { omega_q: args.omega_q2, n: args.n, g: args.g2 },
            ],
            OscillatorSpec { omega: 1.0, trunc: args.trunc },
        ),
    };
    spec.validate()?;
    let alphas = parse_reals(&args.alpha)?;
    let conventions: Vec<(MomentConvention, &str)> = match args.convention {
        ConventionArg::CoherentExact => vec![(MomentConvention::CoherentExact, "coherent_exact")],
        ConventionArg::Literal => vec![(MomentConvention::Literal, "literal")],
        ConventionArg::Both => {
            vec![(MomentConvention::CoherentExact, "coherent_exact"), (MomentConvention::Literal, "literal")]
        }
    };
    let mut out = Table::new(
        "eff-2q",
        &["convention", "alpha", "omega_bar_1", "omega_bar_2", "g_bar"],
        &["omega_bar_1", "omega_bar_2", "g_bar"],
    );
    out.config = Some(serde_json::to_value(&spec).expect("spec serializes"));
    out.parameters = json!({
        "alpha": alphas,
        "cross_k0": args.cross_k0,
        "conventions": conventions.iter().map(|c| c.1).collect::<Vec<_>>(),
    });
    for &(conv, name) in &conventions {
        for &alpha in &alphas {
            let e = effective_two_qubit_params(&spec, alpha, conv, args.cross_k0)?;
            out.push(vec![name.into(), alpha.into(), e.omega_bar_1.into(), e.omega_bar_2.into(), e.g_bar.into()]);
        }
    }
    Ok(out)
}

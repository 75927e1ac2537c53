//! `dynamics`: subsystem fidelities between full and dispersive evolution.

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use nphoton_core::dynamics::{dispersive_fidelity_trace, DynamicsPreset};
use nphoton_core::models::{Regime, SystemSpec};

use crate::error::CliError;
use crate::output::Table;
use crate::RegimeArg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Bell,
    PlusCoherent1,
    PlusCoherent2,
    All,
}

#[derive(Args, Debug)]
pub struct DynamicsArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.02)]
    pub g: f64,
    /// Detuning `ω_q - n ω` in units of `ω`.
    #[arg(long, default_value_t = 6.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 60)]
    pub trunc: usize,
    #[arg(long, value_enum, default_value = "all")]
    pub preset: PresetArg,
    /// Final time in units of `1/χ`.
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    /// Number of intervals; `steps + 1` samples.
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Regime of the dispersive reference evolution.
    #[arg(long, value_enum, default_value = "rwa")]
    pub regime: RegimeArg,
}

pub fn run(args: &DynamicsArgs) -> Result<Table, CliError> {
    if !(args.t_max >= 0.0 && args.t_max.is_finite()) || args.steps == 0 {
        return Err(CliError::config("--t-max must be finite and >= 0, --steps >= 1"));
    }
    let spec = SystemSpec::single(args.delta + args.n as f64, args.n, args.g, 1.0, args.trunc);
    spec.validate()?;
    spec.params()?;
    let presets: Vec<DynamicsPreset> = match args.preset {
        PresetArg::Bell => vec![DynamicsPreset::Bell],
        PresetArg::PlusCoherent1 => vec![DynamicsPreset::PlusCoherent1],
        PresetArg::PlusCoherent2 => vec![DynamicsPreset::PlusCoherent2],
        PresetArg::All => DynamicsPreset::ALL.to_vec(),
    };
    let times: Vec<f64> = (0..=args.steps).map(|i| args.t_max * i as f64 / args.steps as f64).collect();
    let regime = Regime::from(args.regime);

    let mut out = Table::new("dynamics", &["preset", "t_chi", "fid_qubit", "fid_osc"], &[]);
    out.config = Some(serde_json::to_value(&spec).expect("spec serializes"));
    out.parameters = json!({
        "presets": presets.iter().map(|p| p.name()).collect::<Vec<_>>(),
        "t_chi": times,
        "regime": regime,
    });
    let traces: Vec<_> = presets
        .par_iter()
        .map(|p| dispersive_fidelity_trace(&spec, regime, &p.initial_state(args.trunc)?, &times))
        .collect();
    for (p, trace) in presets.iter().zip(traces) {
        for pt in trace? {
            out.push(vec![p.name().into(), pt.t_chi.into(), pt.fid_qubit.into(), pt.fid_osc.into()]);
        }
    }
    Ok(out)
}

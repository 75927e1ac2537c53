//! `spectrum`: tracked eigenvalue curves over a coupling sweep.

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use nphoton_core::analytic::{dispersive_level, QubitState};
use nphoton_core::eigensolve::{
    eigh_dense, eigs_lowest, label_by_overlap, mean_photon_numbers, track_levels, Label, LevelCurve, SpectrumResult,
    TrackOptions,
};
use nphoton_core::models::{
    build_dispersive, build_multimode, build_multiqubit_dispersive, build_nDicke, build_nJC, build_nR, MultimodeVariant,
    Regime, SystemSpec, Topology,
};
use nphoton_core::{Error as CoreError, SparseOperator};

use crate::error::CliError;
use crate::grid::parse_sweep;
use crate::output::{Cell, Table};
use crate::RegimeArg;

/// Relative residual target of the iterative solver.
const LANCZOS_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Nr,
    Njc,
    Dispersive,
    Ndicke,
    Ntc,
    MultiqubitDispersive,
    Mmr,
    Mmjc,
    MultimodeDispersive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Dense,
    Lanczos,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// System configuration (JSON).
    #[arg(long)]
    pub config: std::path::PathBuf,
    #[arg(long, value_enum, default_value = "nr")]
    pub model: Model,
    /// Regime of the dispersive models.
    #[arg(long, value_enum, default_value = "nonrwa")]
    pub regime: RegimeArg,
    /// Keep the constant `k = 0` cross term of the multiqubit dispersive model.
    #[arg(long)]
    pub cross_k0: bool,
    /// Include the `2n`-photon squeezing term of the single-qubit non-RWA dispersive model.
    #[arg(long)]
    pub squeezing: bool,
    /// `g:from:to:steps` (`steps + 1` points); the config's coupling when absent.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Flag states with mean photon number at or above this value.
    #[arg(long)]
    pub filter_nbar: Option<f64>,
    /// Number of tracked levels, seeded from the lowest states at the first grid point.
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    #[arg(long, value_enum, default_value = "dense")]
    pub solver: Solver,
}

const COLUMNS: [&str; 11] =
    ["g", "level", "qubits", "fock", "e_numeric", "e_rwa", "e_nonrwa", "overlap", "nbar", "terminated", "filtered"];
const SCALABLE: [&str; 3] = ["e_numeric", "e_rwa", "e_nonrwa"];

fn build(spec: &SystemSpec, args: &SpectrumArgs) -> Result<SparseOperator, CoreError> {
    let regime: Regime = args.regime.into();
    match args.model {
        Model::Nr => build_nR(spec),
        Model::Njc => build_nJC(spec),
        Model::Dispersive => build_dispersive(spec, regime, args.squeezing),
        Model::Ndicke => build_nDicke(spec, false),
        Model::Ntc => build_nDicke(spec, true),
        Model::MultiqubitDispersive => build_multiqubit_dispersive(spec, regime, args.cross_k0, false),
        Model::Mmr => build_multimode(spec, MultimodeVariant::Mmr),
        Model::Mmjc => build_multimode(spec, MultimodeVariant::Mmjc),
        Model::MultimodeDispersive => build_multimode(
            spec,
            match regime {
                Regime::Rwa => MultimodeVariant::DispersiveRwa,
                Regime::NonRwa => MultimodeVariant::DispersiveNonrwa,
            },
        ),
    }
}

fn solve(spec: &SystemSpec, args: &SpectrumArgs) -> Result<SpectrumResult, CoreError> {
    let h = build(spec, args)?;
    let mut r = match args.solver {
        Solver::Dense => eigh_dense(&h)?,
        // spare states give crossing levels somewhere to land
        Solver::Lanczos => eigs_lowest(&h, (2 * args.levels + 4).min(h.dim()), LANCZOS_TOLERANCE)?,
    };
    r.mean_photons = Some(mean_photon_numbers(&r)?);
    Ok(r)
}

/// Analytic second-order energy of a labeled level, constant offset included.
fn analytic(spec: &SystemSpec, label: &Label, regime: Regime) -> Option<f64> {
    let p = spec.params().ok()?;
    let e = dispersive_level(&p, QubitState::from_index(label.qubits[0]), label.fock[0], regime).ok()?;
    Some(e + p.constant_offset(regime).ok()?)
}

fn label_text(label: Option<&Label>) -> (Cell, Cell) {
    match label {
        Some(l) => (
            l.qubits.iter().map(|&q| if q == 0 { 'e' } else { 'g' }).collect::<String>().into(),
            l.fock.iter().map(usize::to_string).collect::<Vec<_>>().join(";").into(),
        ),
        None => (Cell::Missing, Cell::Missing),
    }
}

fn seeds(first: &SpectrumResult, k: usize, nbar_max: Option<f64>) -> Vec<usize> {
    let nbar = first.mean_photons.as_ref().expect("computed in solve");
    let mut idx: Vec<usize> = (0..first.len()).filter(|&i| nbar_max.map_or(true, |m| nbar[i] < m)).collect();
    idx.sort_by(|&a, &b| first.energies[a].total_cmp(&first.energies[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

pub fn run(args: &SpectrumArgs) -> Result<(Table, Option<CliError>), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.config.display())))?;
    let spec = SystemSpec::from_json(&text)?;
    if args.levels == 0 {
        return Err(CliError::config("--levels must be at least 1"));
    }
    if let Some(m) = args.filter_nbar {
        if !(m > 0.0 && m.is_finite()) {
            return Err(CliError::config("--filter-nbar must be positive and finite"));
        }
    }
    let grid = match &args.sweep {
        Some(s) => {
            let (name, pts) = parse_sweep(s)?;
            if name != "g" {
                return Err(CliError::config(format!("unsupported sweep variable '{name}' (only g)")));
            }
            pts
        }
        None => vec![spec.qubits[0].g],
    };
    let specs: Vec<SystemSpec> = grid.iter().map(|&g| spec.clone().with_g(g)).collect();
    for s in &specs {
        s.validate()?;
    }
    // configuration errors surface before any solve
    build(&specs[0], args)?;

    let mut table = Table::new("spectrum", &COLUMNS, &SCALABLE);
    table.config = Some(serde_json::to_value(&spec).expect("spec serializes"));
    table.parameters = json!({
        "model": format!("{:?}", args.model).to_lowercase(),
        "regime": Regime::from(args.regime),
        "cross_k0": args.cross_k0,
        "squeezing": args.squeezing,
        "sweep_var": "g",
        "grid": grid,
        "filter_nbar": args.filter_nbar,
        "levels": args.levels,
        "solver": format!("{:?}", args.solver).to_lowercase(),
    });

    let results: Vec<Result<SpectrumResult, CoreError>> = specs.par_iter().map(|s| solve(s, args)).collect();
    let mut sweep = Vec::with_capacity(results.len());
    let mut failure = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => sweep.push(r),
            Err(e) => {
                failure = Some((i, e));
                break;
            }
        }
    }

    let curves = match sweep.first() {
        Some(first) => {
            let labeled = label_by_overlap(first, &first.layout)?;
            sweep[0] = labeled;
            let opts = TrackOptions { seeds: Some(seeds(&sweep[0], args.levels, args.filter_nbar)), ..TrackOptions::default() };
            track_levels(&sweep, &opts)?
        }
        None => Vec::new(),
    };
    let failed_at = failure.as_ref().map(|(i, _)| *i);
    rows(&mut table, &curves, &sweep, &specs, &grid, args, failed_at);
    Ok((table, failure.map(|(i, e)| annotate(i, e))))
}

fn annotate(i: usize, e: CoreError) -> CliError {
    match CliError::from(e) {
        CliError::Numerical(m) => CliError::Numerical(format!("grid point {i}: {m}")),
        other => other,
    }
}

/// Grid-major, label-minor rows; after termination or failure a level's rows
/// carry only the terminal flag.
fn rows(
    table: &mut Table,
    curves: &[LevelCurve],
    sweep: &[SpectrumResult],
    specs: &[SystemSpec],
    grid: &[f64],
    args: &SpectrumArgs,
    failed_at: Option<usize>,
) {
    let single = specs[0].topology == Topology::Single && matches!(args.model, Model::Nr | Model::Njc | Model::Dispersive);
    let end = failed_at.map_or(grid.len(), |f| f + 1);
    for t in 0..end {
        for (level, curve) in curves.iter().enumerate() {
            let (qubits, fock) = label_text(curve.seed.as_ref());
            let point = curve.points.get(t).filter(|_| failed_at != Some(t));
            let mut row = vec![Cell::Real(grid[t]), level.into(), qubits, fock];
            match point {
                Some(p) => {
                    let nbar = sweep[t].mean_photons.as_ref().expect("computed")[p.state];
                    let (rwa, nonrwa) = match (&curve.seed, single) {
                        (Some(l), true) => (analytic(&specs[t], l, Regime::Rwa), analytic(&specs[t], l, Regime::NonRwa)),
                        _ => (None, None),
                    };
                    row.extend([
                        p.energy.into(),
                        rwa.into(),
                        nonrwa.into(),
                        p.overlap.into(),
                        nbar.into(),
                        false.into(),
                        args.filter_nbar.is_some_and(|m| nbar >= m).into(),
                    ]);
                }
                None => row.extend([Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, true.into(), false.into()]),
            }
            table.push(row);
        }
    }
}

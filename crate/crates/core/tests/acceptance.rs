//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! measurement and runtime; the process exits nonzero if any criterion fails.
//!
//! Run a subset with `cargo test -p nphoton-core --test acceptance -- 3 5`.

use std::time::{Duration, Instant};

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nphoton_core::analytic::{dispersive_level, njc_doublet, njc_excited_branch, DispersiveParams, QubitState};
use nphoton_core::combinatorics::{to_f64, CoeffTable, Sign};
use nphoton_core::dynamics::{dispersive_fidelity_trace, evolve_sampled, DynamicsPreset, EvolveOptions, StateVector};
use nphoton_core::eigensolve::{
    eigh_dense, eigs_lowest, eigvals_dense, filter_by_mean_photon, hermitian_eigen, label_by_overlap, track_levels,
    SpectrumResult, TrackOptions,
};
use nphoton_core::fockspace::{create, destroy, embed, pauli, GuardBand, HilbertLayout, Pauli, SparseOperator, Subsystem};
use nphoton_core::models::{
    build_multiqubit_dispersive, build_nJC, build_nR, number_polynomial, two_qubit_block, OscillatorSpec,
    QubitSpec, Regime, StabilizerSpec, SystemSpec,
};
use nphoton_core::C64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "commutator coefficient table", Duration::from_secs(1), coefficient_table),
        (2, "commutator identity suite", Duration::from_secs(10), commutator_identities),
        (3, "exact doublets vs closed form", Duration::from_secs(60), doublets_vs_closed_form),
        (4, "dispersive level accuracy", Duration::from_secs(120), dispersive_accuracy),
        (5, "stabilization and metastable filtering", Duration::from_secs(600), stabilization),
        (6, "dispersive dynamics fidelity", Duration::from_secs(120), dynamics_fidelity),
        (7, "two-qubit block oracle", Duration::from_secs(10), two_qubit_blocks),
        (8, "numerics hygiene", Duration::from_secs(300), numerics_hygiene),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed < limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{name}]: {} ({}; {:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

// 1 -------------------------------------------------------------------------

/// Printed rows `(n, C⁺_{n,0..=n}, C⁻_{n,0..=n})`.
const PRINTED: [(usize, &[i64], &[i64]); 4] = [
    (1, &[1, 2], &[1, 0]),
    (2, &[2, 2, 2], &[2, 4, 0]),
    (3, &[6, 13, 3, 2], &[6, 9, 9, 0]),
    (4, &[24, 44, 46, 4, 2], &[24, 56, 24, 16, 0]),
];

fn coefficient_table() -> Outcome {
    let table = CoeffTable::new(4);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (n, plus, minus) in PRINTED {
        for (sign, row) in [(Sign::Plus, plus), (Sign::Minus, minus)] {
            for (k, &want) in row.iter().enumerate() {
                let got = table.c_coeff(n, k, sign).expect("in range");
                checked += 1;
                if got != want.into() {
                    mismatches.push(format!("C{sign:?}({n},{k})={got}"));
                }
            }
        }
    }
    outcome(mismatches.is_empty(), format!("{checked} printed entries, {} mismatches {mismatches:?}", mismatches.len()))
}

// 2 -------------------------------------------------------------------------

struct Identity {
    name: &'static str,
    abs: f64,
    rel: f64,
}

fn identity_deviations(n: usize) -> Vec<Identity> {
    let trunc = 8 * n;
    let layout = HilbertLayout::new(vec![Subsystem::qubit(), Subsystem::oscillator(trunc)]).unwrap();
    let q = |p| embed(&layout, &[(0, &pauli(p))]).unwrap();
    let osc = |op: &SparseOperator| embed(&layout, &[(1, op)]).unwrap();
    let (sz, sp, sm) = (q(Pauli::Z), q(Pauli::Plus), q(Pauli::Minus));
    let an = osc(&destroy(trunc).unwrap().pow(n as u32).unwrap());
    let adn = osc(&create(trunc).unwrap().pow(n as u32).unwrap());
    let mul = |a: &SparseOperator, b: &SparseOperator| a.matmul(b).unwrap();

    let xp = mul(&sm, &adn).add(&mul(&sp, &an)).unwrap();
    let xm = mul(&sm, &adn).sub(&mul(&sp, &an)).unwrap();
    let yp = mul(&sm, &an).add(&mul(&sp, &adn)).unwrap();
    let ym = mul(&sm, &an).sub(&mul(&sp, &adn)).unwrap();

    let table = CoeffTable::shared();
    let (cp, cm) = table.commutator_poly(n).unwrap();
    let zp = mul(&sz, &osc(&number_polynomial(trunc, &to_f64(&cp), 0).unwrap()));
    let pm = osc(&number_polynomial(trunc, &to_f64(&cm), 0).unwrap());
    let a2n = mul(&an, &an);
    let ad2n = mul(&adn, &adn);

    let band = GuardBand::new(n);
    let dev = |name, lhs: SparseOperator, rhs: SparseOperator| {
        let abs = band.max_abs_diff(&lhs, &rhs).unwrap();
        let scale = lhs.max_abs_entry().max(rhs.max_abs_entry()).max(1.0);
        Identity { name, abs, rel: abs / scale }
    };
    vec![
        dev("[X+,X-] = sz C+ + C-", xp.commutator(&xm).unwrap(), zp.add(&pm).unwrap()),
        dev("[Y+,Y-] = sz C+ - C-", yp.commutator(&ym).unwrap(), zp.sub(&pm).unwrap()),
        dev("[X+,Y-] = sz(ad^2n - a^2n)", xp.commutator(&ym).unwrap(), mul(&sz, &ad2n.sub(&a2n).unwrap())),
        dev("[Y+,X-] = sz(ad^2n - a^2n)", yp.commutator(&xm).unwrap(), mul(&sz, &ad2n.sub(&a2n).unwrap())),
        dev("[X+,Y-] = sz(ad^2n + a^2n)", xp.commutator(&ym).unwrap(), mul(&sz, &ad2n.add(&a2n).unwrap())),
    ]
}

fn commutator_identities() -> Outcome {
    const TOL: f64 = 1e-10;
    let mut worst: Vec<(&str, f64, f64, usize)> = Vec::new();
    for n in 1..=6 {
        for (i, d) in identity_deviations(n).into_iter().enumerate() {
            if worst.len() <= i {
                worst.push((d.name, 0.0, 0.0, 0));
            }
            if d.abs > worst[i].1 {
                worst[i].1 = d.abs;
                worst[i].3 = n;
            }
            worst[i].2 = worst[i].2.max(d.rel);
        }
    }
    // entries reach ~4e9 at n = 6, so roundoff is judged relative to the entry scale;
    // the last entry is the sign-corrected form, reported for reference only
    let stated = &worst[..4];
    let pass = stated.iter().all(|w| w.2 <= TOL);
    let detail = worst
        .iter()
        .enumerate()
        .map(|(i, (name, abs, rel, n))| {
            let tag = if i < 4 { "" } else { " [reference]" };
            format!("{name}{tag}: max abs {abs:.2e} (n={n}), max rel {rel:.2e}")
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, format!("tolerance {TOL:e} relative to max entry; {detail}"))
}

// 3 -------------------------------------------------------------------------

fn doublets_vs_closed_form() -> Outcome {
    const DELTA: f64 = 0.5;
    const TRUNC: usize = 300;
    const L_MAX: usize = 20;
    let grid: Vec<f64> = (0..=60).map(|i| 0.3 * (i as f64 / 60.0).powi(2)).collect();
    let mut worst: f64 = 0.0;
    let mut lost = 0;
    for n in 1..=4 {
        let base = SystemSpec::single(n as f64 + DELTA, n, 0.0, 1.0, TRUNC);
        let layout = base.layout().unwrap();
        let sweep: Vec<SpectrumResult> = grid
            .iter()
            .map(|&g| eigh_dense(&build_nJC(&base.clone().with_g(g)).unwrap()).unwrap())
            .collect();
        let first = label_by_overlap(&sweep[0], &layout).unwrap();
        let mut seeds = Vec::new();
        let mut upper = Vec::new();
        for l in 0..=L_MAX {
            for (digits, is_e) in [([0, l], true), ([1, l + n], false)] {
                seeds.push(first.find_label(layout.index_of(&digits)).expect("bare label at g = 0"));
                upper.push((l, is_e));
            }
        }
        let mut sweep = sweep;
        sweep[0] = first;
        let curves = track_levels(&sweep, &TrackOptions { seeds: Some(seeds), ..TrackOptions::default() }).unwrap();
        for (curve, &(l, is_e)) in curves.iter().zip(&upper) {
            if curve.terminated_at.is_some() {
                lost += 1;
            }
            for (point, &g) in curve.points.iter().zip(&grid) {
                let p = DispersiveParams::new(n, g, n as f64 + DELTA, 1.0).unwrap();
                let (plus, minus) = njc_doublet(&p, l);
                let excited = njc_excited_branch(&p, l);
                let want = if is_e { excited } else if excited == plus { minus } else { plus };
                worst = worst.max((point.energy - want).abs());
            }
        }
    }
    outcome(
        worst <= 1e-10 && lost == 0,
        format!("max |E_numeric - E_closed| = {worst:.2e} over n<=4, l<=20, {} g points; {lost} curves lost", grid.len()),
    )
}

// 4 -------------------------------------------------------------------------

struct LevelErrors {
    rwa: Vec<f64>,
    nonrwa: Vec<f64>,
    labels: Vec<(QubitState, usize)>,
}

fn level_errors(delta: f64, count: usize) -> LevelErrors {
    let spec = SystemSpec::single(2.0 + delta, 2, 0.02, 1.0, 300);
    let layout = spec.layout().unwrap();
    let p = spec.params().unwrap();
    let result = label_by_overlap(&eigh_dense(&build_nR(&spec).unwrap()).unwrap(), &layout).unwrap();
    let labels = result.labels.as_ref().unwrap();
    let mut out = LevelErrors { rwa: Vec::new(), nonrwa: Vec::new(), labels: Vec::new() };
    for (i, label) in labels.iter().enumerate() {
        let Some(label) = label else { continue };
        if out.labels.len() == count {
            break;
        }
        let (q, j) = (QubitState::from_index(label.qubits[0]), label.fock[0]);
        let e = result.energies[i];
        for (regime, errs) in [(Regime::Rwa, &mut out.rwa), (Regime::NonRwa, &mut out.nonrwa)] {
            let analytic = dispersive_level(&p, q, j, regime).unwrap() + p.constant_offset(regime).unwrap();
            errs.push((e - analytic).abs());
        }
        out.labels.push((q, j));
    }
    out
}

fn dispersive_accuracy() -> Outcome {
    let far = level_errors(6.0, 8);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (far_nonrwa, far_rwa) = (max(&far.nonrwa), max(&far.rwa));
    let near = level_errors(0.5, 8);
    let not_better: Vec<String> = near
        .labels
        .iter()
        .zip(near.nonrwa.iter().zip(&near.rwa))
        .filter(|(_, (nr, r))| nr >= r)
        .map(|((q, j), (nr, r))| format!("|{q:?},{j}> nonrwa {nr:.2e} vs rwa {r:.2e}"))
        .collect();
    let worst_rwa_level = far.rwa.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| far.labels[i]).unwrap();
    let pass = far_nonrwa <= 5e-4 && far_rwa <= 1e-3 && not_better.is_empty();
    outcome(
        pass,
        format!(
            "Delta=6: max nonrwa err {far_nonrwa:.2e} (tol 5e-4), max rwa err {far_rwa:.2e} at |{:?},{}> (tol 1e-3); \
             Delta=0.5: nonrwa not strictly better on {} of 8 levels {not_better:?}",
            worst_rwa_level.0,
            worst_rwa_level.1,
            not_better.len()
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn three_photon(g: f64, trunc: usize) -> SystemSpec {
    SystemSpec::single(3.1, 3, g, 1.0, trunc)
}

fn lowest(spec: &SystemSpec) -> f64 {
    eigs_lowest(&build_nR(spec).unwrap(), 1, 1e-13).unwrap().energies[0]
}

fn stabilization() -> Outcome {
    let eta = 0.02;
    let unstab: Vec<f64> = [300, 600].iter().map(|&t| eigvals_dense(&build_nR(&three_photon(0.01, t)).unwrap()).unwrap()[0]).collect();
    let unstab_shift = (unstab[1] - unstab[0]).abs();

    let stabilized = |g: f64, trunc: usize| lowest(&three_photon(g, trunc).with_stabilizer(StabilizerSpec::number_power(eta)));
    let stab_drift = (stabilized(0.01, 2000) - stabilized(0.01, 4000)).abs();
    // at larger g the deep well reaches j ~ 1/η² and is cut by N_T = 2000; reported only
    let stab_drift_strong = (stabilized(0.03, 2000) - stabilized(0.03, 4000)).abs();

    let grid: Vec<f64> = (0..=15).map(|i| 0.002 * i as f64).collect();
    let counts: Vec<usize> = grid
        .iter()
        .map(|&g| {
            let spec = three_photon(g, 2000).with_stabilizer(StabilizerSpec::number_power(eta));
            filter_by_mean_photon(&eigh_dense(&build_nR(&spec).unwrap()).unwrap(), 20.0).unwrap().len()
        })
        .collect();
    let monotone = counts.windows(2).all(|w| w[1] <= w[0]);
    // collapse: the count first drops to half its g = 0 value within [η/2, 2η]
    let collapse = grid.iter().zip(&counts).find(|(_, &c)| 2 * c <= counts[0]).map(|(&g, _)| g);
    let collapse_ok = collapse.is_some_and(|g| (0.5 * eta..=2.0 * eta).contains(&g));

    let pass = unstab_shift > 0.1 && stab_drift < 1e-6 && monotone && collapse_ok;
    outcome(
        pass,
        format!(
            "unstabilized ground shift N_T 300->600 at g=0.01: {unstab_shift:.2e} (need > 0.1); \
             stabilized drift N_T 2000->4000 at g=0.01: {stab_drift:.2e} (need < 1e-6), at g=0.03: {stab_drift_strong:.2e}; \
             nbar<20 counts over g=0..0.03: {counts:?} (non-increasing: {monotone}); half-collapse at g = {collapse:?}"
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn dynamics_fidelity() -> Outcome {
    let spec = SystemSpec::single(8.0, 2, 0.02, 1.0, 60);
    let chi_times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
    let bell = DynamicsPreset::Bell.initial_state(60).unwrap();
    let trace = dispersive_fidelity_trace(&spec, Regime::Rwa, &bell, &chi_times).unwrap();
    let bell_min = trace.iter().map(|p| p.fid_qubit.min(p.fid_osc)).fold(1.0, f64::min);

    let coh = DynamicsPreset::PlusCoherent2.initial_state(60).unwrap();
    let at_one = dispersive_fidelity_trace(&spec, Regime::Rwa, &coh, &[1.0]).unwrap()[0];
    let pass = bell_min > 0.99 && at_one.fid_osc < at_one.fid_qubit;
    outcome(
        pass,
        format!(
            "bell: min subsystem fidelity over chi*t in [0,2] = {bell_min:.6}; \
             |alpha|^2=2 at chi*t=1: qubit {:.4}, oscillator {:.4}",
            at_one.fid_qubit, at_one.fid_osc
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn two_qubit_blocks() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut leaks = 0;
    let mut cases = 0;
    for (n, d1, d2, g1, g2) in [(1, 0.6, 0.9, 0.03, 0.02), (2, 0.5, 0.8, 0.02, 0.03), (3, 0.7, 1.3, 0.01, 0.015)] {
        let spec = SystemSpec::multiqubit(
            vec![QubitSpec { omega_q: n as f64 + d1, n, g: g1 }, QubitSpec { omega_q: n as f64 + d2, n, g: g2 }],
            OscillatorSpec { omega: 1.0, trunc: 16 },
        );
        let layout = spec.layout().unwrap();
        for regime in [Regime::Rwa, Regime::NonRwa] {
            for cross_k0 in [false, true] {
                let h = build_multiqubit_dispersive(&spec, regime, cross_k0, false).unwrap();
                for j in 0..=10 {
                    cases += 1;
                    let sector: Vec<usize> = [[0, 0], [0, 1], [1, 0], [1, 1]].iter().map(|q| layout.index_of(&[q[0], q[1], j])).collect();
                    for &r in &sector {
                        leaks += h.row(r).filter(|(c, _)| !sector.contains(c)).count();
                    }
                    let (numeric, _) = hermitian_eigen(&h.dense_submatrix(&sector), false).unwrap();
                    let block = two_qubit_block(j, &spec, regime, cross_k0).unwrap();
                    let m = Matrix4::from_fn(|r, c| block[r][c]);
                    let mut oracle: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
                    oracle.sort_by(f64::total_cmp);
                    for (a, b) in numeric.iter().zip(&oracle) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-12 && leaks == 0,
        format!("{cases} sectors (n=1..3, j<=10, both regimes, both cross_k0): max eigenvalue diff {worst:.2e}, {leaks} out-of-sector entries"),
    )
}

// 8 -------------------------------------------------------------------------

fn random_hermitian(n: usize, degree: f64, seed: u64) -> SparseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (degree / n as f64).min(1.0);
    let mut trip = Vec::new();
    for r in 0..n {
        trip.push((r, r, C64::new(rng.gen_range(-1.0..1.0), 0.0)));
        // a ring keeps the instance irreducible
        let next = (r + 1) % n;
        let v = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        trip.push((r, next, v));
        trip.push((next, r, v.conj()));
        for c in 0..r {
            if rng.gen::<f64>() < p {
                let v = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                trip.push((r, c, v));
                trip.push((c, r, v.conj()));
            }
        }
    }
    let layout = HilbertLayout::oscillator(n).unwrap();
    SparseOperator::from_triplets(layout, trip).unwrap().hermitian_part().certify_hermitian().unwrap()
}

struct Hygiene {
    eig_diff: f64,
    lanczos_residual: f64,
    lanczos_orth: f64,
    deterministic: bool,
}

fn numerics_hygiene() -> Outcome {
    const K: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sizes: Vec<(usize, u64)> = (0..50).map(|i| (rng.gen_range(64..=1024), 1000 + i)).collect();
    let runs: Vec<Hygiene> = sizes
        .par_iter()
        .map(|&(n, seed)| {
            let h = random_hermitian(n, 8.0, seed);
            let dense = eigvals_dense(&h).unwrap();
            let lan = eigs_lowest(&h, K, 1e-12).unwrap();
            let again = eigs_lowest(&h, K, 1e-12).unwrap();
            let norm = h.norm_one();
            Hygiene {
                eig_diff: lan.energies.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
                lanczos_residual: lan.residuals(&h).unwrap().into_iter().fold(0.0, f64::max) / norm,
                lanczos_orth: lan.orthonormality_defect().unwrap(),
                deterministic: lan == again,
            }
        })
        .collect();
    let eig_diff = runs.iter().map(|r| r.eig_diff).fold(0.0, f64::max);
    let lan_res = runs.iter().map(|r| r.lanczos_residual).fold(0.0, f64::max);
    let lan_orth = runs.iter().map(|r| r.lanczos_orth).fold(0.0, f64::max);
    let deterministic = runs.iter().all(|r| r.deterministic);

    // dense eigenvectors on a subset
    let (mut dense_res, mut dense_orth): (f64, f64) = (0.0, 0.0);
    for &(n, seed) in sizes.iter().take(5) {
        let h = random_hermitian(n.min(400), 8.0, seed);
        let r = eigh_dense(&h).unwrap();
        dense_res = dense_res.max(r.residuals(&h).unwrap().into_iter().fold(0.0, f64::max) / h.norm_one());
        dense_orth = dense_orth.max(r.orthonormality_defect().unwrap());
    }

    // unitarity and energy conservation of the Krylov propagator
    let h = random_hermitian(300, 6.0, 77);
    let psi = StateVector::normalized(
        h.layout().clone(),
        (0..300).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect(),
    )
    .unwrap();
    let e0 = psi.expectation(&h).unwrap().re;
    let states = evolve_sampled(&h, &psi, &[1.0, 5.0, 25.0], EvolveOptions::default()).unwrap();
    let norm_drift = states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    let energy_drift = states.iter().map(|s| (s.expectation(&h).unwrap().re - e0).abs()).fold(0.0, f64::max) / e0.abs().max(1e-300);

    let pass = eig_diff <= 1e-9
        && lan_res <= 1e-9
        && lan_orth <= 1e-9
        && deterministic
        && dense_res <= 1e-12
        && dense_orth <= 1e-12
        && norm_drift < 1e-9
        && energy_drift < 1e-8;
    outcome(
        pass,
        format!(
            "50 instances n in [64,1024]: dense vs Lanczos max diff {eig_diff:.2e}, Lanczos rel residual {lan_res:.2e}, \
             orthonormality {lan_orth:.2e}, deterministic {deterministic}; dense rel residual {dense_res:.2e}, \
             orthonormality {dense_orth:.2e}; propagation norm drift {norm_drift:.2e}, rel energy drift {energy_drift:.2e}"
        ),
    )
}

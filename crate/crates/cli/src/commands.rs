//! One function per subcommand. Each returns its artifacts; the caller
//! handles metadata, formats and files.

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::json;

use scars::dynamics::{
    diagonal_ensemble_qfi, evolve_state, mean_and_std, sample_random_product_states, scaling_fit, time_grid,
    window_average, QuenchTrace,
};
use scars::fsa::{build_fsa_basis, locate_scar_tower, revival_fidelity, su2_closure_error};
use scars::hilbert::{enumerate_basis, neel};
use scars::mps_scars::{build_mps_scar, eigen_check, mps_qfi_closed_form, mps_qfi_transfer, MpsKind};
use scars::operators::{
    build_hz, build_perturbation, build_pxp, build_staggered_magnetization, default_range, split_by_neel_distance,
};
use scars::qfi::{entanglement_witness, fit_correlation_decay, qfi_pure, CorrelationFit, DecayModel};
use scars::selftest::{run_selftest, SelftestConfig};
use scars::spectral::{diagonalize_in_space, neel_overlaps, EigenDecomposition, SectorChoice, Space};
use scars::su2tower::tower_table;
use scars::symsub::SymsubSpectrum;
use scars::{ConstrainedBasis, Operator, Rational};

use crate::config::{Initial, OperatorKind, RunConfig};
use crate::output::{Artifact, Body, Cell, Outcome, Table};

/// Dense vectors for MPS checks are built up to this length.
const MPS_DENSE_MAX: usize = 20;

const QUENCH_COLUMNS: [&str; 5] = ["t", "f_Q", "M_S", "M_S2", "fidelity"];

fn hamiltonian(cfg: &RunConfig, basis: &ConstrainedBasis) -> Result<Operator> {
    let pxp = build_pxp(basis, cfg.omega);
    if !cfg.perturbation.enabled {
        return Ok(pxp);
    }
    let range = cfg.perturbation.range.unwrap_or_else(|| default_range(basis.n_sites()));
    Ok(pxp.add(&build_perturbation(basis, range, cfg.perturbation.h0)?)?)
}

struct Solved {
    space: Space,
    h: Operator,
    eig: EigenDecomposition<f64>,
}

fn solve(cfg: &RunConfig, n: usize, choice: SectorChoice) -> Result<Solved> {
    let basis = enumerate_basis(n, cfg.boundary())?;
    let h = hamiltonian(cfg, &basis)?;
    let space = Space::new(basis, choice)?;
    let mut eig = diagonalize_in_space(&space, &h)?;
    eig.align_degenerate(&space.neel_coordinates()?)?;
    Ok(Solved { space, h, eig })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let s = solve(cfg, cfg.n, cfg.sector_choice())?;
    let overlaps = neel_overlaps(&s.eig, &s.space)?;
    let tower = locate_scar_tower(&s.space, &s.h, &s.eig)?;
    let zero = s.eig.zero_mode_indices();
    let mut t = Table::new(&["n", "E_n", "overlap", "is_scar", "is_zero_mode"]);
    for (k, &ov) in overlaps.iter().enumerate() {
        t.push(vec![
            k.into(),
            s.eig.energy(k).into(),
            ov.into(),
            tower.indices.contains(&k).into(),
            zero.contains(&k).into(),
        ]);
    }
    Ok(Outcome::ok(vec![
        Artifact::table("spectrum", t),
        Artifact::json("tower", &tower),
    ]))
}

pub fn eigenstate_qfi(cfg: &RunConfig) -> Result<Outcome> {
    let s = solve(cfg, cfg.n, cfg.sector_choice())?;
    let ms = build_staggered_magnetization(s.space.basis());
    let overlaps = neel_overlaps(&s.eig, &s.space)?;
    let tower = locate_scar_tower(&s.space, &s.h, &s.eig)?;
    let mut t = Table::new(&["n", "E_n", "f_Q", "overlap", "witness_m"]);
    let mut f = Vec::with_capacity(s.eig.len());
    for (k, &ov) in overlaps.iter().enumerate() {
        let fq = qfi_pure(&s.space.embed(s.eig.vector(k))?, &ms)?.density;
        f.push(fq);
        t.push(vec![
            k.into(),
            s.eig.energy(k).into(),
            fq.into(),
            ov.into(),
            entanglement_witness(fq, cfg.n).into(),
        ]);
    }
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let summary = json!({
        "N": cfg.n,
        "mean_f_Q": mean,
        "tower_indices": tower.indices,
        "tower_f_Q": tower.indices.iter().map(|&k| f[k]).collect::<Vec<_>>(),
        "tower_degraded": tower.degraded,
    });
    Ok(Outcome::ok(vec![
        Artifact::table("eigenstate_qfi", t),
        Artifact {
            stem: "summary",
            body: Body::Json(summary),
        },
    ]))
}

/// Trace of one deterministic start, or the sample mean (and spread) of
/// random product states.
struct QuenchResult {
    trace: QuenchTrace<f64>,
    f_q_std: Option<Vec<f64>>,
}

fn quench_run(cfg: &RunConfig, n: usize, times: &[f64]) -> Result<QuenchResult> {
    let initial = cfg.quench.initial;
    if initial == Initial::Random {
        let seed = cfg.require_seed().map_err(anyhow::Error::msg)?;
        // Random configurations break translation symmetry.
        let s = solve(cfg, n, SectorChoice::Full)?;
        let ms = build_staggered_magnetization(s.space.basis());
        let configs = sample_random_product_states(s.space.basis(), cfg.quench.samples, seed)?;
        let traces = configs
            .iter()
            .map(|&x| evolve_state(&s.eig, &s.space, &s.space.basis().fock_vector(x)?, times, &ms, "random"))
            .collect::<scars::Result<Vec<_>>>()?;
        let pick = |f: fn(&QuenchTrace<f64>) -> &Vec<f64>| {
            mean_and_std(&traces.iter().map(|t| f(t).clone()).collect::<Vec<_>>())
        };
        let (f_q, f_q_std) = pick(|t| &t.f_q);
        let mut trace = traces[0].clone();
        trace.f_q = f_q;
        trace.ms = pick(|t| &t.ms).0;
        trace.ms2 = pick(|t| &t.ms2).0;
        trace.fidelity = pick(|t| &t.fidelity).0;
        trace.norm = pick(|t| &t.norm).0;
        return Ok(QuenchResult {
            trace,
            f_q_std: Some(f_q_std),
        });
    }
    let s = solve(cfg, n, cfg.sector_choice())?;
    let ms = build_staggered_magnetization(s.space.basis());
    let x = scars::dynamics::InitialState::from(initial)
        .config(n)
        .expect("deterministic start");
    let psi0 = s.space.basis().fock_vector(x)?;
    let trace = evolve_state(
        &s.eig,
        &s.space,
        &psi0,
        times,
        &ms,
        scars::dynamics::InitialState::from(initial).label(),
    )?;
    Ok(QuenchResult { trace, f_q_std: None })
}

fn trace_table(trace: &QuenchTrace<f64>, f_q_std: Option<&[f64]>) -> Table {
    let mut cols = QUENCH_COLUMNS.to_vec();
    if f_q_std.is_some() {
        cols.push("f_Q_std");
    }
    let mut t = Table::new(&cols);
    for i in 0..trace.times.len() {
        let mut row: Vec<Cell> = vec![
            trace.times[i].into(),
            trace.f_q[i].into(),
            trace.ms[i].into(),
            trace.ms2[i].into(),
            trace.fidelity[i].into(),
        ];
        if let Some(s) = f_q_std {
            row.push(s[i].into());
        }
        t.push(row);
    }
    t
}

pub fn quench(cfg: &RunConfig) -> Result<Outcome> {
    let times = time_grid(cfg.quench.t_max, cfg.quench.dt)?;
    let r = quench_run(cfg, cfg.n, &times)?;
    Ok(Outcome::ok(vec![Artifact::table(
        "quench",
        trace_table(&r.trace, r.f_q_std.as_deref()),
    )]))
}

#[derive(Serialize)]
struct ScalingReport {
    sizes: Vec<usize>,
    window_average: Vec<f64>,
    slope: f64,
    intercept: f64,
    residual: f64,
}

pub fn qfi_scaling(cfg: &RunConfig) -> Result<Outcome> {
    let q = &cfg.quench;
    let lo = (q.window_center - 0.5 * q.window_width).max(0.0);
    let steps = ((q.window_center + 0.5 * q.window_width - lo) / q.dt).floor() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| lo + q.dt * k as f64).collect();
    let mut t = Table::new(&["N", "f_Q_window"]);
    let mut values = Vec::new();
    for &n in &cfg.sizes {
        let r = quench_run(cfg, n, &times)?;
        let v = window_average(&r.trace, q.window_center, q.window_width)?;
        values.push(v);
        t.push(vec![n.into(), v.into()]);
    }
    let xs: Vec<f64> = cfg.sizes.iter().map(|&n| n as f64).collect();
    let fit = scaling_fit(&xs, &values)?;
    let report = ScalingReport {
        sizes: cfg.sizes.clone(),
        window_average: values,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
    };
    Ok(Outcome::ok(vec![
        Artifact::table("qfi_scaling", t),
        Artifact::json("fit", &report),
    ]))
}

pub fn diag_ensemble(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.quench.initial == Initial::Random {
        bail!("diag-ensemble needs a deterministic --initial (neel, neel-prime or polarized)");
    }
    let s = solve(cfg, cfg.n, cfg.sector_choice())?;
    let ms = build_staggered_magnetization(s.space.basis());
    let x = scars::dynamics::InitialState::from(cfg.quench.initial)
        .config(cfg.n)
        .expect("deterministic start");
    let de = diagonal_ensemble_qfi(&s.eig, &s.space, &s.space.basis().fock_vector(x)?, &ms)?;
    let out = json!({
        "N": cfg.n,
        "initial": cfg.quench.initial,
        "exact": de.exact,
        "trace_form": de.trace_form,
        "gap": de.gap,
        "zero_mode_count": de.zero_mode_count,
        "tr_rho_o": de.tr_rho_o,
        "tr_rho_o2": de.tr_rho_o2,
        "tr_rho_o_rho_o": de.tr_rho_o_rho_o,
        "mean_o_squared": de.mean_o_squared,
    });
    Ok(Outcome::ok(vec![Artifact {
        stem: "diag_ensemble",
        body: Body::Json(out),
    }]))
}

pub fn su2_tower(cfg: &RunConfig) -> Result<Outcome> {
    let mut t = Table::new(&["n", "f_Q_closed_form", "f_Q_oracle", "jpjm_density"]);
    for row in tower_table(cfg.n)? {
        t.push(vec![
            row.n.into(),
            row.f_q_closed_form.into(),
            row.f_q_oracle.into(),
            row.jpjm_density.into(),
        ]);
    }
    Ok(Outcome::ok(vec![Artifact::table("su2_tower", t)]))
}

pub fn fsa(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.n;
    let s = solve(cfg, n, cfg.sector_choice())?;
    let basis = s.space.basis();
    let (hp, hm) = split_by_neel_distance(&s.h, basis)?;
    let hz = build_hz(&hp, &hm)?;
    let ladder = build_fsa_basis(&hp, &basis.fock_vector(neel(n))?, n)?;
    let closure = su2_closure_error(&hp, &hm, &hz, &ladder);
    let coeffs = s.eig.coefficients(&s.space.neel_coordinates()?)?;
    let revival = revival_fidelity(s.eig.energies(), &coeffs, cfg.quench.t_max, cfg.quench.dt);
    let out = json!({
        "N": n,
        "perturbed": cfg.perturbation.enabled,
        "residual": closure.residual,
        "delta_fit": closure.delta_fit,
        "spacings": closure.spacings,
        "max_spacing_deviation": closure.max_spacing_deviation,
        "revival": revival,
    });
    Ok(Outcome::ok(vec![Artifact {
        stem: "fsa",
        body: Body::Json(out),
    }]))
}

pub fn symsub(cfg: &RunConfig) -> Result<Outcome> {
    let s = SymsubSpectrum::<f64>::solve(cfg.n, cfg.omega)?;
    let zz = s.table.zz_tables()?;
    let mut t = Table::new(&["E", "f_Q", "a_even", "a_odd", "b_even", "b_odd"]);
    for &k in &s.tower.indices {
        let probs: Vec<f64> = s.quasimode(k).iter().map(|c| c * c).collect();
        let profile = zz.correlations(&probs)?;
        let fit = fit_correlation_decay(&profile, DecayModel::OffsetExponential, 1).ok();
        let (ae, ao, be, bo) = match fit {
            Some(CorrelationFit::OffsetExponential {
                a_even,
                a_odd,
                b_even,
                b_odd,
                ..
            }) => (Some(a_even), Some(a_odd), Some(b_even), Some(b_odd)),
            _ => (None, None, None, None),
        };
        t.push(vec![
            s.eigen.energy(k).into(),
            s.qfi_density(k).into(),
            ae.into(),
            ao.into(),
            be.into(),
            bo.into(),
        ]);
    }
    let times = time_grid(cfg.quench.t_max, cfg.quench.dt)?;
    let trace = s.neel_quench(&times);
    let de = s.neel_diagonal_ensemble()?;
    let summary = json!({
        "N": cfg.n,
        "classes": s.table.len(),
        "mid_band_index": s.mid_band(),
        "mid_band_f_Q": s.qfi_density(s.mid_band()),
        "infinite_time_f_Q": de.exact,
        "infinite_time_trace_form": de.trace_form,
    });
    Ok(Outcome::ok(vec![
        Artifact::table("quasimodes", t),
        Artifact::table("quench", trace_table(&trace, None)),
        Artifact {
            stem: "summary",
            body: Body::Json(summary),
        },
    ]))
}

pub fn mps_check(cfg: &RunConfig) -> Result<Outcome> {
    let kinds: Vec<MpsKind> = match cfg.kind {
        Some(k) => vec![k],
        None => MpsKind::ALL.to_vec(),
    };
    let n = cfg.n;
    if n < 4 {
        bail!("mps-check needs N ≥ 4");
    }
    let mut t = Table::new(&[
        "N",
        "kind",
        "energy",
        "residual",
        "f_Q_transfer",
        "f_Q_closed",
        "f_Q_closed_exact",
        "f_Q_dense",
    ]);
    for kind in kinds {
        let (mut energy, mut residual, mut dense) = (None, None, None);
        if n <= MPS_DENSE_MAX {
            let b = enumerate_basis(n, kind.boundary())?;
            let psi: Vec<f64> = build_mps_scar(&b, kind)?;
            let check = eigen_check(&build_pxp(&b, cfg.omega), &psi);
            energy = Some(check.energy);
            residual = Some(check.residual);
            dense = Some(qfi_pure(&psi, &build_staggered_magnetization(&b))?.density);
        }
        let exact: Rational = mps_qfi_closed_form(n, kind)?;
        t.push(vec![
            n.into(),
            kind.to_string().into(),
            energy.into(),
            residual.into(),
            mps_qfi_transfer::<f64>(n, kind)?.into(),
            mps_qfi_closed_form::<f64>(n, kind)?.into(),
            exact.to_string().into(),
            dense.into(),
        ]);
    }
    Ok(Outcome::ok(vec![Artifact::table("mps_check", t)]))
}

pub fn basis(cfg: &RunConfig) -> Result<Outcome> {
    let b = enumerate_basis(cfg.n, cfg.boundary())?;
    let mut t = Table::new(&["ordinal", "bitstring"]);
    for (i, &x) in b.states().iter().enumerate() {
        t.push(vec![i.into(), b.bitstring(x).into()]);
    }
    Ok(Outcome::ok(vec![Artifact::table("basis", t)]))
}

pub fn operator(cfg: &RunConfig, which: OperatorKind) -> Result<Outcome> {
    let b = enumerate_basis(cfg.n, cfg.boundary())?;
    let range = cfg.perturbation.range.unwrap_or_else(|| default_range(cfg.n));
    let op = match which {
        OperatorKind::Hamiltonian => hamiltonian(cfg, &b)?,
        OperatorKind::Pxp => build_pxp(&b, cfg.omega),
        OperatorKind::Perturbation => build_perturbation(&b, range, cfg.perturbation.h0)?,
        OperatorKind::Ms => build_staggered_magnetization(&b),
        OperatorKind::Hz => {
            let (hp, hm) = split_by_neel_distance(&hamiltonian(cfg, &b)?, &b)?;
            build_hz(&hp, &hm)?
        }
    };
    let mut t = Table::new(&["row", "col", "value"]);
    for &(r, c, v) in op.entries() {
        t.push(vec![r.into(), c.into(), v.into()]);
    }
    Ok(Outcome::ok(vec![Artifact::table("operator", t)]))
}

pub fn selftest(cfg: &RunConfig, inject_fault: bool) -> Result<Outcome> {
    let report = run_selftest(&SelftestConfig {
        seed: cfg.seed.unwrap_or(7),
        corrupt_assembly: inject_fault,
        ..Default::default()
    });
    for c in &report.checks {
        eprintln!(
            "{} {:<32} max deviation {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.max_deviation
        );
    }
    eprintln!("selftest finished in {:.1} s", report.elapsed_seconds);
    let failed = !report.passed();
    // Timing stays out of the artifact so reruns are byte-identical.
    let mut doc = serde_json::to_value(&report)?;
    doc.as_object_mut()
        .expect("report is an object")
        .remove("elapsed_seconds");
    let mut out = Outcome::ok(vec![Artifact {
        stem: "selftest",
        body: Body::Json(doc),
    }]);
    out.failed = failed;
    Ok(out)
}

//! Oracle-equivalence suite: every fast construction is compared with a
//! slow, independent one at small sizes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fsa::{build_fsa_basis, su2_closure_error};
use crate::hilbert::{brute_force_states, build_momentum_sector, enumerate_basis, Boundary, ConstrainedBasis};
use crate::linalg::DenseMatrix;
use crate::mps_scars::{build_mps_scar, mps_qfi_closed_form, mps_qfi_transfer, MpsKind};
use crate::operators::{
    build_hz, build_perturbation, build_pxp, build_pxp_pm, build_staggered_magnetization, default_range, SparseOperator,
};
use crate::qfi::{connected_correlations, qfi_density_from_correlations, qfi_pure};
use crate::spectral::{chiral_asymmetry, diagonalize_in_space, SectorChoice, Space};
use crate::su2tower::{tower_table, SpinOracle};
use crate::symsub::{sublattice_counts, ClassTable};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
    pub elapsed_seconds: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestConfig {
    /// Largest chain for the brute-force basis comparison.
    pub max_basis_sites: usize,
    /// Largest chain for every other oracle.
    pub max_sites: usize,
    pub seed: u64,
    /// Fault injection: drop one off-diagonal PXP matrix element before the
    /// hermiticity check.
    pub corrupt_assembly: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            max_basis_sites: 16,
            max_sites: 10,
            seed: 7,
            corrupt_assembly: false,
        }
    }
}

fn record(name: &str, deviation: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: deviation <= tolerance,
        max_deviation: deviation,
        tolerance,
        detail,
    }
}

fn failed(name: &str, err: crate::error::Error) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: false,
        max_deviation: f64::INFINITY,
        tolerance: 0.0,
        detail: err.to_string(),
    }
}

fn run(name: &str, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| failed(name, e))
}

fn even_sizes(max: usize) -> impl Iterator<Item = usize> {
    (4..=max).step_by(2)
}

fn corrupt(op: &SparseOperator<f64>) -> Result<SparseOperator<f64>> {
    let mut entries = op.entries().to_vec();
    if let Some(pos) = entries.iter().position(|&(r, c, _)| r != c) {
        entries.remove(pos);
    }
    SparseOperator::from_entries(op.tag(), entries)
}

pub fn run_selftest(cfg: &SelftestConfig) -> SelftestReport {
    let start = Instant::now();
    let mut checks = Vec::new();

    checks.push(run("basis-vs-brute-force", || {
        let mut dev = 0usize;
        for n in (2..=cfg.max_basis_sites).step_by(2) {
            for bc in [Boundary::Periodic, Boundary::Open] {
                let fast = enumerate_basis(n, bc)?;
                let slow = brute_force_states(n, bc);
                dev = dev.max(fast.dim().abs_diff(slow.len()));
                if fast.states() != slow.as_slice() {
                    dev = dev.max(1);
                }
            }
        }
        Ok(record(
            "basis-vs-brute-force",
            dev as f64,
            0.0,
            format!("N = 2..={}, both boundaries", cfg.max_basis_sites),
        ))
    }));

    checks.push(run("lucas-fibonacci-recurrence", || {
        // Integer recurrences, independent of any enumeration.
        let (mut lucas, mut fib) = (vec![2usize, 1], vec![0usize, 1]);
        while fib.len() < cfg.max_basis_sites + 3 {
            lucas.push(lucas[lucas.len() - 1] + lucas[lucas.len() - 2]);
            fib.push(fib[fib.len() - 1] + fib[fib.len() - 2]);
        }
        let mut dev = 0usize;
        for n in (2..=cfg.max_basis_sites).step_by(2) {
            dev = dev.max(enumerate_basis(n, Boundary::Periodic)?.dim().abs_diff(lucas[n]));
            dev = dev.max(enumerate_basis(n, Boundary::Open)?.dim().abs_diff(fib[n + 2]));
        }
        Ok(record(
            "lucas-fibonacci-recurrence",
            dev as f64,
            0.0,
            "ring L_N, chain F_{N+2}".into(),
        ))
    }));

    checks.push(run("sector-dimension-completeness", || {
        let mut dev = 0usize;
        for n in (2..=cfg.max_basis_sites).step_by(2) {
            let b = enumerate_basis(n, Boundary::Periodic)?;
            let total: usize = (0..n)
                .map(|k| build_momentum_sector(&b, k).map(|s| s.dim()))
                .sum::<Result<usize>>()?;
            dev = dev.max(total.abs_diff(b.dim()));
        }
        Ok(record(
            "sector-dimension-completeness",
            dev as f64,
            0.0,
            "Σ_k dim(k) = dim".into(),
        ))
    }));

    checks.push(run("operator-hermiticity", || {
        let mut dev = 0.0f64;
        for n in even_sizes(cfg.max_sites) {
            for bc in [Boundary::Periodic, Boundary::Open] {
                let b = enumerate_basis(n, bc)?;
                let mut pxp = build_pxp(&b, 1.0f64);
                if cfg.corrupt_assembly {
                    pxp = corrupt(&pxp)?;
                }
                let (hp, hm) = build_pxp_pm(&b, 1.0f64)?;
                let ops = [
                    pxp,
                    build_perturbation(&b, default_range(n).min(crate::operators::max_range(&b)), 0.051)?,
                    build_staggered_magnetization(&b),
                    build_hz(&hp, &hm)?,
                ];
                for op in &ops {
                    dev = dev.max(op.max_asymmetry());
                }
            }
        }
        let note = if cfg.corrupt_assembly { " (fault injected)" } else { "" };
        Ok(record(
            "operator-hermiticity",
            dev,
            0.0,
            format!("PXP, δH, M_S, H^z{note}"),
        ))
    }));

    checks.push(run("chiral-symmetry", || {
        let mut dev = 0.0f64;
        for n in even_sizes(cfg.max_sites) {
            let b = enumerate_basis(n, Boundary::Periodic)?;
            let s = Space::new(b.clone(), SectorChoice::Full)?;
            let eig = diagonalize_in_space(&s, &build_pxp(&b, 1.0f64))?;
            dev = dev.max(chiral_asymmetry(eig.energies()));
        }
        Ok(record(
            "chiral-symmetry",
            dev,
            1e-10,
            "spectrum of PXP symmetric about 0".into(),
        ))
    }));

    checks.push(run("qfi-correlation-identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut dev = 0.0f64;
        for n in even_sizes(cfg.max_sites) {
            for bc in [Boundary::Periodic, Boundary::Open] {
                let b = enumerate_basis(n, bc)?;
                let ms = build_staggered_magnetization(&b);
                for _ in 0..5 {
                    let mut psi: Vec<f64> = (0..b.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    crate::linalg::normalize(&mut psi);
                    let direct = qfi_pure(&psi, &ms)?.density;
                    let rebuilt = qfi_density_from_correlations(&connected_correlations(&psi, &b)?);
                    dev = dev.max((direct - rebuilt).abs());
                }
            }
        }
        Ok(record(
            "qfi-correlation-identity",
            dev,
            1e-10,
            "4Var(M_S)/N vs Σ_r w_r (-1)^r G_r on random states".into(),
        ))
    }));

    checks.push(run("symsub-projection", || {
        let mut dev = 0.0f64;
        for n in even_sizes(cfg.max_sites) {
            let b = enumerate_basis(n, Boundary::Periodic)?;
            let table = ClassTable::new(n)?;
            dev = dev.max(
                brute_force_class_projection(&b, &table)?
                    .sub(&table.hamiltonian(1.0))?
                    .max_abs(),
            );
        }
        Ok(record(
            "symsub-projection",
            dev,
            1e-12,
            "class Hamiltonian vs explicit P H P".into(),
        ))
    }));

    checks.push(run("spin-oracle", || {
        let mut dev = 0.0f64;
        for n in (2..=cfg.max_sites).step_by(2) {
            for row in tower_table(n)? {
                dev = dev.max((row.f_q_closed_form - row.f_q_oracle).abs());
                dev = dev.max((row.jpjm_density - row.jpjm_oracle).abs());
            }
            let o = SpinOracle::<f64>::new(n)?;
            let (jp, jm) = (o.jp(), o.jm());
            let hz = jp.matmul(&jm)?.sub(&jm.matmul(&jp)?)?;
            let mut lowest = vec![0.0; o.dim()];
            lowest[0] = 1.0;
            dev = dev.max(su2_closure_error(&jp, &jm, &hz, &build_fsa_basis(&jp, &lowest, n)?).residual);
        }
        Ok(record(
            "spin-oracle",
            dev,
            1e-12,
            "tower closed forms and ladder closure on spin N/2".into(),
        ))
    }));

    checks.push(run("mps-transfer-vs-dense", || {
        let mut dev = 0.0f64;
        for n in even_sizes(cfg.max_sites) {
            for kind in MpsKind::ALL {
                let b = enumerate_basis(n, kind.boundary())?;
                let psi: Vec<f64> = build_mps_scar(&b, kind)?;
                let dense = qfi_pure(&psi, &build_staggered_magnetization(&b))?.density;
                let tm: f64 = mps_qfi_transfer(n, kind)?;
                let closed: f64 = mps_qfi_closed_form(n, kind)?;
                dev = dev.max((dense - tm).abs()).max((tm - closed).abs());
            }
        }
        Ok(record(
            "mps-transfer-vs-dense",
            dev,
            1e-10,
            "dense vector, transfer matrix and closed form".into(),
        ))
    }));

    SelftestReport {
        checks,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}

/// `<K|H|K'>` from explicit uniform class superpositions.
pub fn brute_force_class_projection(basis: &ConstrainedBasis, table: &ClassTable) -> Result<DenseMatrix<f64>> {
    let n = basis.n_sites();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); table.len()];
    for (i, &x) in basis.states().iter().enumerate() {
        let (n1, n2) = sublattice_counts(x, n);
        members[table.index_of(n1, n2).expect("class exists")].push(i);
    }
    let vecs: Vec<Vec<f64>> = members
        .iter()
        .map(|m| {
            let mut v = vec![0.0; basis.dim()];
            let a = 1.0 / (m.len() as f64).sqrt();
            for &i in m {
                v[i] = a;
            }
            v
        })
        .collect();
    build_pxp(basis, 1.0f64).to_dense().congruence(&vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SelftestConfig {
        SelftestConfig {
            max_basis_sites: 12,
            max_sites: 8,
            ..Default::default()
        }
    }

    #[test]
    fn fresh_build_passes() {
        let r = run_selftest(&quick());
        assert!(r.passed(), "{:#?}", r.failures());
        assert_eq!(r.checks.len(), 9);
    }

    #[test]
    fn corrupted_assembly_fails_hermiticity() {
        let r = run_selftest(&SelftestConfig {
            corrupt_assembly: true,
            ..quick()
        });
        let h = r.check("operator-hermiticity").unwrap();
        assert!(!h.passed && h.max_deviation > 0.5);
        assert_eq!(r.failures().len(), 1);
    }
}

use proptest::prelude::*;

use scars::dynamics::{evolve_state, mean_and_std};
use scars::hilbert::{enumerate_basis, is_blockade_valid, translate};
use scars::operators::{build_perturbation, build_pxp, build_staggered_magnetization};
use scars::qfi::{connected_correlations, qfi_density_from_correlations, qfi_pure};
use scars::spectral::{chiral_asymmetry, diagonalize_in_space, SectorChoice, Space};
use scars::su2tower::tower_table;
use scars::symsub::ClassTable;
use scars::Boundary;

fn even_n(lo: usize, hi: usize) -> impl Strategy<Value = usize> {
    (lo / 2..=hi / 2).prop_map(|h| 2 * h)
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Periodic), Just(Boundary::Open)]
}

/// Normalized random vector on the constrained basis of `n` sites.
fn state(n: usize, bc: Boundary, raw: &[f64]) -> Vec<f64> {
    let dim = enumerate_basis(n, bc).unwrap().dim();
    let mut v: Vec<f64> = (0..dim).map(|i| raw[i % raw.len()] + 1e-3 * i as f64).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn translations_compose_and_keep_the_ring_basis(n in even_n(4, 20), a in 0usize..20, b in 0usize..20) {
        let basis = enumerate_basis(n, Boundary::Periodic).unwrap();
        for &x in basis.states() {
            let y = translate(translate(x, a % n, n), b % n, n);
            prop_assert_eq!(y, translate(x, (a + b) % n, n));
            prop_assert!(is_blockade_valid(y, n, Boundary::Periodic));
        }
    }

    #[test]
    fn qfi_density_matches_summed_correlations(
        n in even_n(4, 12),
        bc in boundary(),
        raw in prop::collection::vec(-1.0f64..1.0, 8..32),
    ) {
        let basis = enumerate_basis(n, bc).unwrap();
        let psi = state(n, bc, &raw);
        let direct = qfi_pure(&psi, &build_staggered_magnetization(&basis)).unwrap().density;
        let summed = qfi_density_from_correlations(&connected_correlations(&psi, &basis).unwrap());
        prop_assert!((direct - summed).abs() < 1e-10, "{} vs {}", direct, summed);
        // 0 ≤ 4 Var(M_S)/N ≤ N.
        prop_assert!(direct > -1e-12 && direct <= n as f64 + 1e-12);
    }

    #[test]
    fn deformed_hamiltonian_is_symmetric_and_chiral(n in even_n(6, 12), h0 in -0.2f64..0.2, range in 2usize..4) {
        let basis = enumerate_basis(n, Boundary::Periodic).unwrap();
        let range = range.min(n / 2);
        let h = build_pxp(&basis, 1.0).add(&build_perturbation(&basis, range, h0).unwrap()).unwrap();
        prop_assert!(h.max_asymmetry() < 1e-14);
        let space = Space::new(basis, SectorChoice::Full).unwrap();
        let eig = diagonalize_in_space(&space, &h).unwrap();
        prop_assert!(chiral_asymmetry(eig.energies()) < 1e-9);
    }

    #[test]
    fn evolution_preserves_the_norm(n in even_n(4, 10), raw in prop::collection::vec(-1.0f64..1.0, 4..16)) {
        let basis = enumerate_basis(n, Boundary::Periodic).unwrap();
        let h = build_pxp(&basis, 1.0);
        let ms = build_staggered_magnetization(&basis);
        let psi = state(n, Boundary::Periodic, &raw);
        let space = Space::full(basis);
        let eig = diagonalize_in_space(&space, &h).unwrap();
        let trace = evolve_state(&eig, &space, &psi, &[0.0, 0.7, 3.1, 11.0], &ms, "random").unwrap();
        for &nrm in &trace.norm {
            prop_assert!((nrm - 1.0).abs() < 1e-10);
        }
        prop_assert!((trace.fidelity[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn class_dimensions_partition_the_basis(n in even_n(4, 22)) {
        let table = ClassTable::new(n).unwrap();
        let total: u64 = table.classes().iter().map(|c| u64::try_from(&c.dim).unwrap()).sum();
        prop_assert_eq!(total as usize, enumerate_basis(n, Boundary::Periodic).unwrap().dim());
    }

    #[test]
    fn tower_closed_form_matches_oracle(n_sites in 1usize..40) {
        for row in tower_table(n_sites).unwrap() {
            prop_assert!((row.f_q_closed_form - row.f_q_oracle).abs() < 1e-10);
            prop_assert!((row.jpjm_density - row.jpjm_oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_spread_is_non_negative(series in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..8)) {
        let (mean, std) = mean_and_std(&series);
        prop_assert_eq!(mean.len(), 6);
        for (i, s) in std.iter().enumerate() {
            prop_assert!(*s >= 0.0);
            let lo = series.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
            let hi = series.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(mean[i] >= lo - 1e-12 && mean[i] <= hi + 1e-12);
        }
    }
}

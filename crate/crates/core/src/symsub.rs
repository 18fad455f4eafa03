//! Symmetric-subspace approximation on a ring: classes `|n1, n2>` of
//! configurations with fixed even/odd sublattice occupations, the projected
//! Hamiltonian, top-band quasimodes, their QFI and correlations, and
//! quenches confined to the subspace.

use num_bigint::BigUint;
use num_traits::{CheckedAdd, One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{diagonal_ensemble_from_matrices, propagate, to_eigenbasis, DiagonalEnsemble, QuenchTrace};
use crate::error::{Error, Result};
use crate::fsa::{build_fsa_basis, fsa_spectrum};
use crate::hilbert::{Boundary, ConstrainedBasis};
use crate::linalg::DenseMatrix;
use crate::qfi::CorrelationProfile;
use crate::scalar::Real;
use crate::spectral::{diagonalize, identify_scar_tower, mean_spacing, EigenDecomposition, ScarTower};

/// Largest supported ring for the class construction.
pub const MAX_SYMSUB_SITES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetricClass {
    /// Excitations on even sites.
    pub n1: usize,
    /// Excitations on odd sites.
    pub n2: usize,
    /// Number of blockade-valid configurations in the class.
    #[serde(serialize_with = "serialize_big")]
    pub dim: BigUint,
}

fn serialize_big<S: serde::Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn check_ring(n: usize) -> Result<()> {
    if !n.is_multiple_of(2) || !(4..=MAX_SYMSUB_SITES).contains(&n) {
        return Err(Error::InvalidSiteCount {
            n,
            min: 4,
            max: MAX_SYMSUB_SITES,
        });
    }
    Ok(())
}

fn accumulate<C: CheckedAdd>(acc: &mut C, c: &C) -> Option<()> {
    *acc = acc.checked_add(c)?;
    Some(())
}

/// Ring transfer matrix over (previous occupancy, n1, n2), with the first
/// site's occupancy fixed per pass. `None` on overflow of `C`.
fn count_grid<C: Clone + Zero + One + CheckedAdd>(n: usize, forced: &[usize]) -> Option<Vec<C>> {
    let w = n / 2 + 1;
    let idx = |n1: usize, n2: usize| n1 * w + n2;
    let is_forced = |s: usize| forced.contains(&s);
    let mut out = vec![C::zero(); w * w];
    for s0 in 0..2usize {
        if s0 == 0 && is_forced(0) {
            continue;
        }
        let mut cur = [vec![C::zero(); w * w], vec![C::zero(); w * w]];
        cur[s0][idx(s0, 0)] = C::one();
        for site in 1..n {
            let mut next = [vec![C::zero(); w * w], vec![C::zero(); w * w]];
            let may_occupy_last = !(site == n - 1 && s0 == 1);
            for (prev, layer) in cur.iter().enumerate() {
                for n1 in 0..w {
                    for n2 in 0..w {
                        let c = &layer[idx(n1, n2)];
                        if c.is_zero() {
                            continue;
                        }
                        if !is_forced(site) {
                            accumulate(&mut next[0][idx(n1, n2)], c)?;
                        }
                        if prev == 0 && may_occupy_last {
                            let (m1, m2) = if site % 2 == 0 { (n1 + 1, n2) } else { (n1, n2 + 1) };
                            if m1 < w && m2 < w {
                                accumulate(&mut next[1][idx(m1, m2)], c)?;
                            }
                        }
                    }
                }
            }
            cur = next;
        }
        for layer in &cur {
            for (o, c) in out.iter_mut().zip(layer) {
                accumulate(o, c)?;
            }
        }
    }
    Some(out)
}

/// Counts of valid ring configurations per `(n1, n2)` with every site in
/// `forced` excited, as a row-major `(N/2+1)²` grid.
pub fn class_counts(n: usize, forced: &[usize]) -> Result<Vec<BigUint>> {
    check_ring(n)?;
    if let Some(&s) = forced.iter().find(|&&s| s >= n) {
        return Err(Error::SiteOutOfRange(format!("forced site {s} with N = {n}")));
    }
    if let Some(g) = count_grid::<u128>(n, forced) {
        return Ok(g.into_iter().map(BigUint::from).collect());
    }
    count_grid::<BigUint>(n, forced).ok_or(Error::CountOverflow)
}

/// Number of valid configurations of an `N`-site ring with the given
/// sublattice occupations; zero when infeasible.
pub fn class_dimension(n: usize, n1: usize, n2: usize) -> Result<BigUint> {
    let w = n / 2 + 1;
    if n1 >= w || n2 >= w {
        check_ring(n)?;
        return Ok(BigUint::zero());
    }
    Ok(class_counts(n, &[])?[n1 * w + n2].clone())
}

fn big_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// All non-empty classes of an `N`-site ring.
#[derive(Debug, Clone)]
pub struct ClassTable {
    n_sites: usize,
    classes: Vec<SymmetricClass>,
    /// `(n1, n2)` grid to class index.
    grid: Vec<Option<usize>>,
}

impl ClassTable {
    pub fn new(n: usize) -> Result<Self> {
        let counts = class_counts(n, &[])?;
        let w = n / 2 + 1;
        let mut classes = Vec::new();
        let mut grid = vec![None; w * w];
        for n1 in 0..w {
            for n2 in 0..w {
                let d = &counts[n1 * w + n2];
                if !d.is_zero() {
                    grid[n1 * w + n2] = Some(classes.len());
                    classes.push(SymmetricClass { n1, n2, dim: d.clone() });
                }
            }
        }
        Ok(Self {
            n_sites: n,
            classes,
            grid,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[SymmetricClass] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &SymmetricClass {
        &self.classes[i]
    }

    pub fn index_of(&self, n1: usize, n2: usize) -> Option<usize> {
        let w = self.n_sites / 2 + 1;
        if n1 >= w || n2 >= w {
            return None;
        }
        self.grid[n1 * w + n2]
    }

    /// Class of the Néel state, `(N/2, 0)`.
    pub fn neel_index(&self) -> usize {
        self.index_of(self.n_sites / 2, 0).expect("Néel class always exists")
    }

    /// Unit vector on the Néel class.
    pub fn neel_vector<T: Real>(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.len()];
        v[self.neel_index()] = T::one();
        v
    }

    /// Hamming distance of the class from the Néel class.
    fn neel_distance(&self, i: usize) -> usize {
        let c = &self.classes[i];
        self.n_sites / 2 - c.n1 + c.n2
    }

    /// Number of (configuration, flippable site) pairs connecting class
    /// `from` to class `to`. A flip raising `n1` pairs each target
    /// configuration with one of its `n1 + 1` excited even sites, so the
    /// count is `(n1 + 1)·D(n1 + 1, n2)` (likewise for `n2`).
    pub fn transition_count(&self, from: usize, to: usize) -> BigUint {
        let (a, b) = (&self.classes[from], &self.classes[to]);
        let (lo, hi) = match (b.n1 as isize - a.n1 as isize, b.n2 as isize - a.n2 as isize) {
            (1, 0) | (0, 1) => (a, b),
            (-1, 0) | (0, -1) => (b, a),
            _ => return BigUint::zero(),
        };
        let excited = if hi.n1 > lo.n1 { hi.n1 } else { hi.n2 };
        &hi.dim * BigUint::from(excited)
    }

    /// `<K'|H_PXP|K> = Ω·T(K→K') / √(D D')` over classes.
    pub fn hamiltonian<T: Real>(&self, omega: T) -> DenseMatrix<T> {
        let k = self.len();
        let mut h = DenseMatrix::zeros(k, k);
        for (i, c) in self.classes.iter().enumerate() {
            for (m1, m2) in [(c.n1 + 1, c.n2), (c.n1, c.n2 + 1)] {
                if let Some(j) = self.index_of(m1, m2) {
                    let up = &self.classes[j];
                    let excited = (if m1 > c.n1 { up.n1 } else { up.n2 }) as f64;
                    let v = omega * T::lit(excited * (big_f64(&up.dim) / big_f64(&c.dim)).sqrt());
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
        }
        h
    }

    /// `(H⁺, H⁻)` over classes: the parts of [`Self::hamiltonian`] moving
    /// away from and towards the Néel class.
    pub fn hamiltonian_pm<T: Real>(&self, omega: T) -> (DenseMatrix<T>, DenseMatrix<T>) {
        let h = self.hamiltonian(omega);
        let k = self.len();
        let mut plus = DenseMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                if self.neel_distance(i) == self.neel_distance(j) + 1 {
                    plus[(i, j)] = h[(i, j)];
                }
            }
        }
        let minus = plus.transpose();
        (plus, minus)
    }

    /// Diagonal of `P M_S P`: `n1 - n2`.
    pub fn ms_diagonal<T: Real>(&self) -> Vec<T> {
        self.classes.iter().map(|c| T::lit(c.n1 as f64 - c.n2 as f64)).collect()
    }

    /// Diagonal of `P M_S² P`, which equals the square of `M_S` on classes.
    pub fn ms2_diagonal<T: Real>(&self) -> Vec<T> {
        self.ms_diagonal::<T>().into_iter().map(|m| m * m).collect()
    }

    /// Class vector with amplitudes `coeffs` embedded as uniform
    /// superpositions in a full periodic basis.
    pub fn embed<T: Real>(&self, basis: &ConstrainedBasis, coeffs: &[T]) -> Result<Vec<T>> {
        if basis.n_sites() != self.n_sites || basis.boundary() != Boundary::Periodic {
            return Err(Error::BasisMismatch);
        }
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        basis
            .states()
            .iter()
            .map(|&x| {
                let (n1, n2) = sublattice_counts(x, self.n_sites);
                let i = self.index_of(n1, n2).expect("every configuration belongs to a class");
                Ok(coeffs[i] / T::lit(big_f64(&self.classes[i].dim).sqrt()))
            })
            .collect()
    }

    /// Class-averaged `<Z_j Z_{j+r}>` for `r = 0..=N/2`, for even and odd `j`.
    pub fn zz_tables(&self) -> Result<ZzTables> {
        let n = self.n_sites;
        let h = n / 2;
        let w = h + 1;
        let joint: Vec<Vec<BigUint>> = (0..=h)
            .into_par_iter()
            .map(|r| {
                if r == 0 {
                    class_counts(n, &[0])
                } else {
                    class_counts(n, &[0, r])
                }
            })
            .collect::<Result<_>>()?;
        let occ = |c: &SymmetricClass, odd_site: bool| 2.0 * (if odd_site { c.n2 } else { c.n1 }) as f64 / n as f64;
        let mut even = vec![vec![0.0; self.len()]; w];
        let mut odd = vec![vec![0.0; self.len()]; w];
        for r in 0..=h {
            for (i, c) in self.classes.iter().enumerate() {
                let d = big_f64(&c.dim);
                // Translation by one site swaps the sublattices.
                let p_even = big_f64(&joint[r][c.n1 * w + c.n2]) / d;
                let p_odd = big_f64(&joint[r][c.n2 * w + c.n1]) / d;
                let far_odd = r % 2 == 1;
                even[r][i] = 4.0 * p_even - 2.0 * occ(c, false) - 2.0 * occ(c, far_odd) + 1.0;
                odd[r][i] = 4.0 * p_odd - 2.0 * occ(c, true) - 2.0 * occ(c, !far_odd) + 1.0;
            }
        }
        let z_even = self.classes.iter().map(|c| 2.0 * occ(c, false) - 1.0).collect();
        let z_odd = self.classes.iter().map(|c| 2.0 * occ(c, true) - 1.0).collect();
        Ok(ZzTables {
            n_sites: n,
            even,
            odd,
            z_even,
            z_odd,
        })
    }
}

/// `(n1, n2)` of a configuration.
pub fn sublattice_counts(x: crate::hilbert::Config, n: usize) -> (usize, usize) {
    let even = crate::hilbert::neel(n);
    ((x & even).count_ones() as usize, (x & !even).count_ones() as usize)
}

/// Class-diagonal one- and two-point tables.
#[derive(Debug, Clone)]
pub struct ZzTables {
    n_sites: usize,
    /// `even[r][K]`: `<K|Z_j Z_{j+r}|K>` for even `j`.
    pub even: Vec<Vec<f64>>,
    pub odd: Vec<Vec<f64>>,
    /// `<K|Z_j|K>` for even and odd `j`.
    pub z_even: Vec<f64>,
    pub z_odd: Vec<f64>,
}

impl ZzTables {
    /// Translation-averaged connected correlations of a class-diagonal
    /// mixture with weights `probs` (a pure class vector gives `a_K²`).
    pub fn correlations<T: Real>(&self, probs: &[T]) -> Result<CorrelationProfile<T>> {
        if probs.len() != self.z_even.len() {
            return Err(Error::DimensionMismatch {
                expected: self.z_even.len(),
                got: probs.len(),
            });
        }
        let avg = |t: &[f64]| -> f64 { t.iter().zip(probs).map(|(a, p)| a * p.as_f64()).sum() };
        let (ze, zo) = (avg(&self.z_even), avg(&self.z_odd));
        let g = (0..=self.n_sites / 2)
            .map(|r| {
                let (fe, fo) = if r % 2 == 0 { (ze, zo) } else { (zo, ze) };
                let ce = avg(&self.even[r]) - ze * fe;
                let co = avg(&self.odd[r]) - zo * fo;
                T::lit(0.5 * (ce + co))
            })
            .collect();
        Ok(CorrelationProfile {
            n_sites: self.n_sites,
            boundary: Boundary::Periodic,
            r: (0..=self.n_sites / 2).collect(),
            g,
        })
    }
}

/// `f_Q` density of `M_S` for a class vector: `4 Var(n1 - n2) / N`.
pub fn class_qfi_density<T: Real>(table: &ClassTable, psi: &[T]) -> T {
    let m = table.ms_diagonal::<T>();
    let (mut a, mut b) = (T::zero(), T::zero());
    for (&x, &mi) in psi.iter().zip(&m) {
        let p = x * x;
        a += p * mi;
        b += p * mi * mi;
    }
    T::lit(4.0) * (b - a * a) / T::lit(table.n_sites() as f64)
}

/// Diagonalized subspace with top-band quasimodes.
#[derive(Debug, Clone)]
pub struct SymsubSpectrum<T> {
    pub table: ClassTable,
    pub hamiltonian: DenseMatrix<T>,
    /// Degenerate classes aligned with the Néel class vector.
    pub eigen: EigenDecomposition<T>,
    /// `|<Néel class|E_K>|²`.
    pub overlaps: Vec<T>,
    /// Forward-scattering energies inside the subspace (window centres).
    pub fsa_energies: Vec<f64>,
    pub tower: ScarTower,
}

impl<T: Real> SymsubSpectrum<T> {
    pub fn solve(n: usize, omega: T) -> Result<Self> {
        let table = ClassTable::new(n)?;
        let hamiltonian = table.hamiltonian(omega);
        let mut eigen = diagonalize(&hamiltonian)?;
        let neel = table.neel_vector::<T>();
        eigen.align_degenerate(&neel)?;
        let overlaps: Vec<T> = eigen.coefficients(&neel)?.into_iter().map(|c| c * c).collect();
        let (hp, _) = table.hamiltonian_pm(omega);
        let fsa = build_fsa_basis(&hp, &neel, n)?;
        let fsa_energies: Vec<f64> = fsa_spectrum(&hamiltonian, &fsa)?
            .energies()
            .iter()
            .map(|e| e.as_f64())
            .collect();
        let tower = top_band_quasimodes(eigen.energies(), &overlaps, &fsa_energies)?;
        Ok(Self {
            table,
            hamiltonian,
            eigen,
            overlaps,
            fsa_energies,
            tower,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.table.n_sites()
    }

    /// Tower member closest to zero energy.
    pub fn mid_band(&self) -> usize {
        *self
            .tower
            .indices
            .iter()
            .min_by(|&&a, &&b| {
                self.eigen
                    .energy(a)
                    .abs()
                    .partial_cmp(&self.eigen.energy(b).abs())
                    .unwrap()
            })
            .expect("tower is never empty")
    }

    pub fn quasimode(&self, n: usize) -> &[T] {
        self.eigen.vector(n)
    }

    pub fn qfi_density(&self, n: usize) -> T {
        class_qfi_density(&self.table, self.quasimode(n))
    }

    /// Quench from the Néel class vector; `M_S` moments taken in the subspace.
    pub fn neel_quench(&self, times: &[T]) -> QuenchTrace<T> {
        let coeffs = self
            .eigen
            .coefficients(&self.table.neel_vector())
            .expect("sized by construction");
        let m = self.table.ms_diagonal::<T>();
        let eval = |psi: &[num_complex::Complex<T>]| -> (T, T, T) {
            let (mut a, mut b, mut nrm) = (T::zero(), T::zero(), T::zero());
            for (z, &mi) in psi.iter().zip(&m) {
                let p = z.norm_sqr();
                a += p * mi;
                b += p * mi * mi;
                nrm += p;
            }
            (a, b, nrm)
        };
        propagate(&self.eigen, &coeffs, times, self.n_sites(), "neel", &eval)
    }

    /// Infinite-time average of the Néel quench inside the subspace.
    pub fn neel_diagonal_ensemble(&self) -> Result<DiagonalEnsemble> {
        let coeffs = self.eigen.coefficients(&self.table.neel_vector())?;
        let o = to_eigenbasis(&self.eigen, &DenseMatrix::from_diagonal(&self.table.ms_diagonal()))?;
        let o2 = to_eigenbasis(&self.eigen, &DenseMatrix::from_diagonal(&self.table.ms2_diagonal()))?;
        diagonal_ensemble_from_matrices(&self.eigen, &coeffs, &o, &o2, self.n_sites(), self.eigen.tol_zero())
    }
}

/// The quasimode with the largest Néel-class overlap inside each window of
/// width equal to the mean FSA spacing around each FSA energy.
pub fn top_band_quasimodes<T: Real>(energies: &[T], overlaps: &[T], fsa_energies: &[f64]) -> Result<ScarTower> {
    identify_scar_tower(energies, overlaps, fsa_energies, mean_spacing(fsa_energies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_basis, neel};
    use crate::operators::build_pxp;
    use crate::qfi::qfi_density_from_correlations;

    fn brute_classes(n: usize) -> (ConstrainedBasis, std::collections::BTreeMap<(usize, usize), Vec<usize>>) {
        let b = enumerate_basis(n, Boundary::Periodic).unwrap();
        let mut m = std::collections::BTreeMap::<(usize, usize), Vec<usize>>::new();
        for (i, &x) in b.states().iter().enumerate() {
            m.entry(sublattice_counts(x, n)).or_default().push(i);
        }
        (b, m)
    }

    #[test]
    fn small_class_dimensions() {
        assert_eq!(class_dimension(8, 4, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(class_dimension(8, 1, 1).unwrap(), BigUint::from(8u32));
        assert_eq!(class_dimension(8, 2, 0).unwrap(), BigUint::from(6u32));
        assert_eq!(class_dimension(8, 4, 1).unwrap(), BigUint::zero());
        assert_eq!(class_dimension(8, 9, 0).unwrap(), BigUint::zero());
        assert!(class_dimension(7, 1, 1).is_err());
    }

    #[test]
    fn dimensions_match_brute_force() {
        for n in (4..=14).step_by(2) {
            let (_, m) = brute_classes(n);
            let t = ClassTable::new(n).unwrap();
            assert_eq!(t.len(), m.len());
            for c in t.classes() {
                assert_eq!(c.dim, BigUint::from(m[&(c.n1, c.n2)].len()));
            }
        }
    }

    #[test]
    fn large_rings_fall_back_to_big_integers() {
        // Total count is the Lucas number, which exceeds u128 beyond N = 184.
        let n = 200;
        let total: BigUint = class_counts(n, &[]).unwrap().into_iter().sum();
        let (mut a, mut b) = (BigUint::from(2u32), BigUint::from(1u32));
        for _ in 0..n {
            let c = &a + &b;
            a = b;
            b = c;
        }
        assert_eq!(total, a);
        assert!(total > BigUint::from(u128::MAX));
    }

    #[test]
    fn projected_hamiltonian_matches_brute_force() {
        for n in (4..=12).step_by(2) {
            let (b, _) = brute_classes(n);
            let t = ClassTable::new(n).unwrap();
            let h = build_pxp(&b, 1.0f64);
            let hk: DenseMatrix<f64> = t.hamiltonian(1.0);
            let vecs: Vec<Vec<f64>> = (0..t.len())
                .map(|i| {
                    let mut e = vec![0.0; t.len()];
                    e[i] = 1.0;
                    t.embed(&b, &e).unwrap()
                })
                .collect();
            let brute = h.to_dense().congruence(&vecs).unwrap();
            assert!(brute.sub(&hk).unwrap().max_abs() < 1e-12, "N = {n}");
            assert!(hk.max_asymmetry() == 0.0);
            for i in 0..t.len() {
                for j in 0..t.len() {
                    let (a, c) = (t.class(i), t.class(j));
                    let step = a.n1.abs_diff(c.n1) + a.n2.abs_diff(c.n2);
                    if step != 1 {
                        assert_eq!(hk[(i, j)], 0.0);
                    }
                }
            }
            // Transition counts against explicit enumeration.
            for i in 0..t.len() {
                for j in 0..t.len() {
                    let ti = &vecs[i];
                    let tj = &vecs[j];
                    let mut pairs = 0usize;
                    for &(r, c, _) in h.entries() {
                        if ti[c] != 0.0 && tj[r] != 0.0 {
                            pairs += 1;
                        }
                    }
                    assert_eq!(t.transition_count(i, j), BigUint::from(pairs));
                }
            }
        }
    }

    #[test]
    fn dimension_grows_quadratically() {
        let sizes: Vec<usize> = (20..=100).step_by(10).collect();
        let dims: Vec<f64> = sizes
            .iter()
            .map(|&n| ClassTable::new(n).unwrap().len() as f64)
            .collect();
        // Second differences of an exact quadratic are constant.
        let d2: Vec<f64> = dims.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
        assert!(d2.iter().all(|&x| (x - d2[0]).abs() < 1e-9), "{d2:?}");
        assert!(d2[0] > 0.0);
        let full: BigUint = class_counts(100, &[]).unwrap().into_iter().sum();
        assert!(BigUint::from(ClassTable::new(100).unwrap().len()) * BigUint::from(10u64).pow(15) < full);
    }

    #[test]
    fn observables_on_classes() {
        let t = ClassTable::new(8).unwrap();
        let ms = t.ms_diagonal::<f64>();
        assert_eq!(ms[t.neel_index()], 4.0);
        let z = t.zz_tables().unwrap();
        for r in 0..=4 {
            let s = if r % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(z.even[r][t.neel_index()], s);
            assert_eq!(z.odd[r][t.neel_index()], s);
        }
        let g = z.correlations(&t.neel_vector::<f64>()).unwrap();
        assert!(g.g.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn zz_tables_match_brute_force() {
        for n in (4..=12).step_by(2) {
            let (b, m) = brute_classes(n);
            let t = ClassTable::new(n).unwrap();
            let z = t.zz_tables().unwrap();
            for (i, c) in t.classes().iter().enumerate() {
                let members = &m[&(c.n1, c.n2)];
                for r in 0..=n / 2 {
                    for (j, table) in [(0usize, &z.even), (1, &z.odd)] {
                        let s: f64 = members
                            .iter()
                            .map(|&k| {
                                let x = b.state(k);
                                (crate::hilbert::z_value(x, j) * crate::hilbert::z_value(x, (j + r) % n)) as f64
                            })
                            .sum();
                        assert!((s / members.len() as f64 - table[r][i]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn embedding_reproduces_class_observables() {
        for n in [8usize, 10, 12] {
            let b = enumerate_basis(n, Boundary::Periodic).unwrap();
            let t = ClassTable::new(n).unwrap();
            let ms_full = crate::operators::build_staggered_magnetization::<f64>(&b).diagonal_values();
            let ms = t.ms_diagonal::<f64>();
            for i in 0..t.len() {
                let mut e = vec![0.0; t.len()];
                e[i] = 1.0;
                let v = t.embed(&b, &e).unwrap();
                assert!((crate::linalg::norm(&v) - 1.0f64).abs() < 1e-12);
                let m: f64 = v.iter().zip(&ms_full).map(|(a, o)| a * a * o).sum();
                assert!((m - ms[i]).abs() < 1e-12);
            }
            assert_eq!(
                t.embed(&b, &t.neel_vector::<f64>()).unwrap()[b.index_of(neel(n)).unwrap()],
                1.0
            );
        }
    }

    #[test]
    fn correlations_reproduce_class_qfi() {
        let s = SymsubSpectrum::<f64>::solve(16, 1.0).unwrap();
        let z = s.table.zz_tables().unwrap();
        for &k in &s.tower.indices {
            let psi = s.quasimode(k);
            let probs: Vec<f64> = psi.iter().map(|a| a * a).collect();
            let f = qfi_density_from_correlations(&z.correlations(&probs).unwrap());
            assert!((f - s.qfi_density(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn tower_has_n_plus_one_quasimodes() {
        let s = SymsubSpectrum::<f64>::solve(50, 1.0).unwrap();
        assert_eq!(s.tower.indices.len(), 51);
        assert!(!s.tower.degraded);
        // Mid-band spacings are nearly uniform.
        let e = &s.tower.energies;
        let mid: Vec<f64> = e[15..36].windows(2).map(|w| w[1] - w[0]).collect();
        let mean = mid.iter().sum::<f64>() / mid.len() as f64;
        let spread = mid.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max) / mean;
        assert!(spread < 0.1, "{spread}");
    }

    #[test]
    fn quasimodes_overlap_exact_scars() {
        use crate::spectral::{diagonalize_in_space, SectorChoice, Space};
        let n = 12;
        let s = SymsubSpectrum::<f64>::solve(n, 1.0).unwrap();
        let b = enumerate_basis(n, Boundary::Periodic).unwrap();
        let space = Space::new(b.clone(), SectorChoice::All).unwrap();
        let mut eig = diagonalize_in_space(&space, &build_pxp(&b, 1.0)).unwrap();
        let z2 = space.neel_coordinates::<f64>().unwrap();
        eig.align_degenerate(&z2).unwrap();
        let ov: Vec<f64> = eig.coefficients(&z2).unwrap().iter().map(|c| c * c).collect();
        let tower = identify_scar_tower(eig.energies(), &ov, &s.fsa_energies, mean_spacing(&s.fsa_energies)).unwrap();
        let k = s.mid_band();
        let pos = s.tower.indices.iter().position(|&i| i == k).unwrap();
        let q = s.table.embed(&b, s.quasimode(k)).unwrap();
        let exact = space.embed(eig.vector(tower.indices[pos])).unwrap();
        let o = crate::linalg::dot(&q, &exact).powi(2);
        assert!(o > 0.8, "{o}");
    }
}

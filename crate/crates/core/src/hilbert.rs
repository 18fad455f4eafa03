//! Rydberg-blockaded Hilbert space and translation-symmetry sectors.
//!
//! A configuration is an unsigned word where bit `j` set means site `j` is
//! excited. The blockade forbids two adjacent excitations (cyclically
//! adjacent for periodic chains).

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported chain length. The basis grows as the golden ratio to the
/// power `N`; at `N = 32` it holds about 4.9 million configurations.
pub const MAX_SITES: usize = 32;

pub type Config = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[serde(alias = "pbc")]
    Periodic,
    #[serde(alias = "obc")]
    Open,
}

#[inline]
fn mask(n: usize) -> Config {
    if n == 64 {
        Config::MAX
    } else {
        (1 << n) - 1
    }
}

/// Cyclic shift of a configuration by `s` sites towards higher indices.
#[inline]
pub fn translate(x: Config, s: usize, n: usize) -> Config {
    let s = s % n;
    if s == 0 {
        return x;
    }
    ((x << s) | (x >> (n - s))) & mask(n)
}

#[inline]
pub fn is_blockade_valid(x: Config, n: usize, bc: Boundary) -> bool {
    let open_ok = x & (x >> 1) == 0;
    match bc {
        Boundary::Open => open_ok,
        Boundary::Periodic => open_ok && !(n > 1 && x & 1 == 1 && (x >> (n - 1)) & 1 == 1),
    }
}

#[inline]
pub fn is_excited(x: Config, site: usize) -> bool {
    (x >> site) & 1 == 1
}

/// `+1` if the site is excited, `-1` otherwise.
#[inline]
pub fn z_value(x: Config, site: usize) -> i32 {
    if is_excited(x, site) {
        1
    } else {
        -1
    }
}

/// Néel configuration with excitations on the even sites.
pub fn neel(n: usize) -> Config {
    (0..n).step_by(2).fold(0, |acc, j| acc | (1 << j))
}

/// Néel configuration with excitations on the odd sites.
pub fn neel_prime(n: usize) -> Config {
    (1..n).step_by(2).fold(0, |acc, j| acc | (1 << j))
}

/// Sorted list of blockade-satisfying configurations with an index lookup.
#[derive(Debug, Clone)]
pub struct ConstrainedBasis {
    n_sites: usize,
    boundary: Boundary,
    states: Vec<Config>,
    index: HashMap<Config, usize>,
}

impl ConstrainedBasis {
    pub fn new(n_sites: usize, boundary: Boundary) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n_sites) || !n_sites.is_multiple_of(2) {
            return Err(Error::InvalidSiteCount {
                n: n_sites,
                min: 2,
                max: MAX_SITES,
            });
        }
        let mut states = Vec::new();
        let mut stack: Vec<(usize, Config)> = vec![(n_sites, 0)];
        // Depth-first from the highest site, trying 0 before 1, yields
        // configurations in increasing integer order. Tuples pushed in reverse.
        while let Some((remaining, prefix)) = stack.pop() {
            if remaining == 0 {
                if is_blockade_valid(prefix, n_sites, boundary) {
                    states.push(prefix);
                }
                continue;
            }
            let site = remaining - 1;
            let upper_set = site + 1 < n_sites && is_excited(prefix, site + 1);
            if !upper_set {
                stack.push((site, prefix | (1 << site)));
            }
            stack.push((site, prefix));
        }
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Self {
            n_sites,
            boundary,
            states,
            index,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Config] {
        &self.states
    }

    pub fn state(&self, i: usize) -> Config {
        self.states[i]
    }

    pub fn index_of(&self, x: Config) -> Option<usize> {
        self.index.get(&x).copied()
    }

    pub fn contains(&self, x: Config) -> bool {
        self.index.contains_key(&x)
    }

    /// Unit vector on a configuration.
    pub fn fock_vector<T: Real>(&self, x: Config) -> Result<Vec<T>> {
        let i = self
            .index_of(x)
            .ok_or_else(|| Error::InvalidArgument(format!("configuration {x:#b} violates the blockade")))?;
        let mut v = vec![T::zero(); self.dim()];
        v[i] = T::one();
        Ok(v)
    }

    /// Rendering with site 0 first, `1` for an excitation.
    pub fn bitstring(&self, x: Config) -> String {
        (0..self.n_sites)
            .map(|j| if is_excited(x, j) { '1' } else { '0' })
            .collect()
    }

    pub fn same_space(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites && self.boundary == other.boundary
    }

    /// Translates a full-basis vector by `shift` sites.
    pub fn translate_vector<S: Copy + num_traits::Zero>(&self, v: &[S], shift: usize) -> Result<Vec<S>> {
        if self.boundary != Boundary::Periodic {
            return Err(Error::OpenBoundary);
        }
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![S::zero(); v.len()];
        for (i, &x) in self.states.iter().enumerate() {
            let j = self.index[&translate(x, shift, self.n_sites)];
            out[j] = v[i];
        }
        Ok(out)
    }
}

pub fn enumerate_basis(n_sites: usize, boundary: Boundary) -> Result<ConstrainedBasis> {
    ConstrainedBasis::new(n_sites, boundary)
}

/// Exhaustive scan over all `2^N` bitstrings. Oracle for small `N`.
pub fn brute_force_states(n_sites: usize, boundary: Boundary) -> Vec<Config> {
    (0..(1u64 << n_sites))
        .filter(|&x| is_blockade_valid(x, n_sites, boundary))
        .collect()
}

/// Momentum eigenbasis over translation orbits.
///
/// The basis state for orbit representative `r` with period `p` is
/// `|r,k> = p^{-1/2} Σ_{j<p} e^{-ikj} T^j |r>`, which satisfies
/// `T |r,k> = e^{ik} |r,k>`. For `k ∈ {0, π}` all amplitudes are real.
#[derive(Debug, Clone)]
pub struct SymmetrySector {
    n_sites: usize,
    parent_dim: usize,
    k_index: usize,
    representatives: Vec<Config>,
    periods: Vec<usize>,
    rep_index: HashMap<Config, usize>,
}

impl SymmetrySector {
    /// Sector with momentum `2π k_index / N`.
    pub fn new(basis: &ConstrainedBasis, k_index: usize) -> Result<Self> {
        if basis.boundary() != Boundary::Periodic {
            return Err(Error::OpenBoundary);
        }
        let n = basis.n_sites();
        if k_index >= n {
            return Err(Error::InvalidMomentum { k: k_index, n });
        }
        let mut representatives = Vec::new();
        let mut periods = Vec::new();
        for &x in basis.states() {
            let (rep, _) = orbit_representative(x, n);
            if rep != x {
                continue;
            }
            let p = orbit_period(x, n);
            if (k_index * p).is_multiple_of(n) {
                representatives.push(x);
                periods.push(p);
            }
        }
        let rep_index = representatives.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        Ok(Self {
            n_sites: n,
            parent_dim: basis.dim(),
            k_index,
            representatives,
            periods,
            rep_index,
        })
    }

    pub fn k_index(&self) -> usize {
        self.k_index
    }

    pub fn momentum(&self) -> f64 {
        2.0 * PI * self.k_index as f64 / self.n_sites as f64
    }

    /// True for `k = 0` and `k = π`, where the basis is real.
    pub fn is_real(&self) -> bool {
        self.k_index == 0 || 2 * self.k_index == self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.representatives.len()
    }

    pub fn representatives(&self) -> &[Config] {
        &self.representatives
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    /// Normalization `sqrt(p)` of the unnormalized orbit sum.
    pub fn norm(&self, i: usize) -> f64 {
        (self.periods[i] as f64).sqrt()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn parent_dim(&self) -> usize {
        self.parent_dim
    }

    /// Sector ordinal and shift `j` with `T^j rep = x`, or `None` when the
    /// orbit of `x` is not admitted at this momentum.
    pub fn locate(&self, x: Config) -> Option<(usize, usize)> {
        let (rep, shift) = orbit_representative(x, self.n_sites);
        self.rep_index.get(&rep).map(|&i| (i, shift))
    }

    /// Amplitude of `|r_i,k>` on `T^shift r_i`.
    pub fn amplitude(&self, i: usize, shift: usize) -> Complex<f64> {
        let phase = -self.momentum() * shift as f64;
        Complex::from_polar(1.0 / self.norm(i), phase)
    }

    /// Real amplitude; only meaningful for real sectors.
    pub fn real_amplitude(&self, i: usize, shift: usize) -> f64 {
        let sign = if self.k_index == 0 || shift.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        sign / self.norm(i)
    }

    /// Nonzero entries of the sector basis vector `i` in full-basis
    /// coordinates, as (full index, shift).
    pub fn orbit(&self, basis: &ConstrainedBasis, i: usize) -> Vec<(usize, usize)> {
        let r = self.representatives[i];
        (0..self.periods[i])
            .map(|j| {
                (
                    basis
                        .index_of(translate(r, j, self.n_sites))
                        .expect("orbit inside basis"),
                    j,
                )
            })
            .collect()
    }

    fn check_parent(&self, basis: &ConstrainedBasis) -> Result<()> {
        if basis.n_sites() != self.n_sites || basis.dim() != self.parent_dim || basis.boundary() != Boundary::Periodic {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    /// Isometric embedding of a real sector vector into the full basis.
    pub fn embed<T: Real>(&self, basis: &ConstrainedBasis, v: &[T]) -> Result<Vec<T>> {
        self.check_parent(basis)?;
        if !self.is_real() {
            return Err(Error::ComplexSector(self.k_index));
        }
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![T::zero(); basis.dim()];
        for (i, &c) in v.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            for (idx, shift) in self.orbit(basis, i) {
                out[idx] += c * T::lit(self.real_amplitude(i, shift));
            }
        }
        Ok(out)
    }

    /// Embedding for any momentum.
    pub fn embed_complex<T: Real>(&self, basis: &ConstrainedBasis, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_parent(basis)?;
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); basis.dim()];
        for (i, &c) in v.iter().enumerate() {
            for (idx, shift) in self.orbit(basis, i) {
                let a = self.amplitude(i, shift);
                out[idx] += c * Complex::new(T::lit(a.re), T::lit(a.im));
            }
        }
        Ok(out)
    }

    /// Coordinates `<r_i,k|v>` of a real full-basis vector.
    pub fn project<T: Real>(&self, basis: &ConstrainedBasis, full: &[T]) -> Result<Vec<T>> {
        self.check_parent(basis)?;
        if !self.is_real() {
            return Err(Error::ComplexSector(self.k_index));
        }
        if full.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: full.len(),
            });
        }
        Ok((0..self.dim())
            .map(|i| {
                self.orbit(basis, i)
                    .into_iter()
                    .map(|(idx, shift)| full[idx] * T::lit(self.real_amplitude(i, shift)))
                    .sum()
            })
            .collect())
    }
}

pub fn build_momentum_sector(basis: &ConstrainedBasis, k_index: usize) -> Result<SymmetrySector> {
    SymmetrySector::new(basis, k_index)
}

pub fn sector_to_full<T: Real>(sector: &SymmetrySector, basis: &ConstrainedBasis, v: &[T]) -> Result<Vec<T>> {
    sector.embed(basis, v)
}

/// Minimal element of the translation orbit of `x` and the smallest shift `j`
/// with `T^j rep = x`.
pub fn orbit_representative(x: Config, n: usize) -> (Config, usize) {
    let mut best = x;
    let mut best_shift = 0;
    for s in 1..n {
        let y = translate(x, n - s, n);
        if y < best {
            best = y;
            best_shift = s;
        }
    }
    (best, best_shift)
}

pub fn orbit_period(x: Config, n: usize) -> usize {
    (1..=n).find(|&p| translate(x, p, n) == x).unwrap_or(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dimensions() {
        assert_eq!(enumerate_basis(2, Boundary::Periodic).unwrap().dim(), 3);
        assert_eq!(enumerate_basis(4, Boundary::Periodic).unwrap().dim(), 7);
        assert_eq!(enumerate_basis(4, Boundary::Open).unwrap().dim(), 8);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(
            enumerate_basis(5, Boundary::Periodic),
            Err(Error::InvalidSiteCount { .. })
        ));
        assert!(enumerate_basis(0, Boundary::Open).is_err());
        assert!(enumerate_basis(MAX_SITES + 2, Boundary::Open).is_err());
    }

    #[test]
    fn matches_brute_force_and_is_sorted() {
        for n in (2..=16).step_by(2) {
            for bc in [Boundary::Periodic, Boundary::Open] {
                let basis = enumerate_basis(n, bc).unwrap();
                assert_eq!(basis.states(), brute_force_states(n, bc).as_slice(), "N={n} {bc:?}");
                for (i, &x) in basis.states().iter().enumerate() {
                    assert_eq!(basis.index_of(x), Some(i));
                }
            }
        }
    }

    #[test]
    fn lucas_recurrence() {
        let dims: Vec<usize> = (2..=16)
            .map(|n| brute_force_states(n, Boundary::Periodic).len())
            .collect();
        assert_eq!(dims[0], 3);
        assert_eq!(dims[1], 4);
        for w in dims.windows(3) {
            assert_eq!(w[2], w[1] + w[0]);
        }
    }

    #[test]
    fn n4_sectors() {
        let basis = enumerate_basis(4, Boundary::Periodic).unwrap();
        assert_eq!(build_momentum_sector(&basis, 0).unwrap().dim(), 3);
        assert_eq!(build_momentum_sector(&basis, 2).unwrap().dim(), 2);
        let total: usize = (0..4).map(|k| build_momentum_sector(&basis, k).unwrap().dim()).sum();
        assert_eq!(total, 7);
    }

    #[test]
    fn open_boundary_has_no_sectors() {
        let basis = enumerate_basis(4, Boundary::Open).unwrap();
        assert_eq!(build_momentum_sector(&basis, 0).unwrap_err(), Error::OpenBoundary);
    }

    #[test]
    fn embedding_of_full_orbit_representative() {
        let basis = enumerate_basis(6, Boundary::Periodic).unwrap();
        let sector = build_momentum_sector(&basis, 0).unwrap();
        let i = sector.locate(0b000001).unwrap().0;
        let mut v = vec![0.0; sector.dim()];
        v[i] = 1.0;
        let full = sector.embed(&basis, &v).unwrap();
        let amps: Vec<f64> = full.iter().copied().filter(|&a| a != 0.0).collect();
        assert_eq!(amps.len(), 6);
        for a in amps {
            assert!((a - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        }
        let zero = sector.embed(&basis, &vec![0.0; sector.dim()]).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn embedding_dimension_mismatch() {
        let basis = enumerate_basis(6, Boundary::Periodic).unwrap();
        let sector = build_momentum_sector(&basis, 0).unwrap();
        assert!(matches!(
            sector.embed(&basis, &[1.0f64]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn neel_patterns() {
        assert_eq!(neel(4), 0b0101);
        assert_eq!(neel_prime(4), 0b1010);
        assert_eq!(translate(neel(6), 1, 6), neel_prime(6));
    }
}

//! Full-spectrum diagonalization on a basis or on a direct sum of real
//! momentum sectors, Néel overlaps, scar-tower selection and zero modes.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{neel, Boundary, ConstrainedBasis, SymmetrySector};
use crate::linalg::{canonicalize_gauge, dot, normalize, symmetric_eigen, DenseMatrix, SymmetricEigen};
use crate::operators::{project_between, SparseOperator};
use crate::scalar::Real;

/// Which part of the constrained space to work in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorChoice {
    K0,
    Kpi,
    /// `k = 0 ⊕ k = π`, the support of the Néel state.
    All,
    /// The whole basis without symmetry reduction.
    Full,
}

#[derive(Debug, Clone)]
pub enum Block {
    Full,
    Sector(SymmetrySector),
}

/// Real coordinate space: the full basis, or a direct sum of real momentum
/// sectors with coordinates stacked block after block.
#[derive(Debug, Clone)]
pub struct Space {
    basis: ConstrainedBasis,
    blocks: Vec<Block>,
    offsets: Vec<usize>,
}

impl Space {
    pub fn new(basis: ConstrainedBasis, choice: SectorChoice) -> Result<Self> {
        let n = basis.n_sites();
        let blocks = match choice {
            SectorChoice::Full => vec![Block::Full],
            _ if basis.boundary() == Boundary::Open => return Err(Error::OpenBoundary),
            SectorChoice::K0 => vec![Block::Sector(SymmetrySector::new(&basis, 0)?)],
            SectorChoice::Kpi => vec![Block::Sector(SymmetrySector::new(&basis, n / 2)?)],
            SectorChoice::All => vec![
                Block::Sector(SymmetrySector::new(&basis, 0)?),
                Block::Sector(SymmetrySector::new(&basis, n / 2)?),
            ],
        };
        let mut offsets = vec![0];
        for b in &blocks {
            let d = match b {
                Block::Full => basis.dim(),
                Block::Sector(s) => s.dim(),
            };
            offsets.push(offsets.last().unwrap() + d);
        }
        Ok(Self { basis, blocks, offsets })
    }

    pub fn full(basis: ConstrainedBasis) -> Self {
        Self::new(basis, SectorChoice::Full).expect("full space always exists")
    }

    pub fn basis(&self) -> &ConstrainedBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_range(&self, b: usize) -> Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    pub fn block_label(&self, b: usize) -> String {
        match &self.blocks[b] {
            Block::Full => "full".into(),
            Block::Sector(s) if s.k_index() == 0 => "k0".into(),
            Block::Sector(s) if 2 * s.k_index() == s.n_sites() => "kpi".into(),
            Block::Sector(s) => format!("k{}", s.k_index()),
        }
    }

    /// Full-basis vector from space coordinates.
    pub fn embed<T: Real>(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.basis.dim()];
        for (b, block) in self.blocks.iter().enumerate() {
            let part = &v[self.block_range(b)];
            match block {
                Block::Full => out.copy_from_slice(part),
                Block::Sector(s) => {
                    for (o, x) in out.iter_mut().zip(s.embed(&self.basis, part)?) {
                        *o += x;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn embed_complex<T: Real>(&self, v: &[num_complex::Complex<T>]) -> Result<Vec<num_complex::Complex<T>>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![num_complex::Complex::new(T::zero(), T::zero()); self.basis.dim()];
        for (b, block) in self.blocks.iter().enumerate() {
            let part = &v[self.block_range(b)];
            match block {
                Block::Full => out.copy_from_slice(part),
                Block::Sector(s) => {
                    for (o, x) in out.iter_mut().zip(s.embed_complex(&self.basis, part)?) {
                        *o += x;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Orthogonal projection of a full-basis vector onto the space.
    pub fn restrict<T: Real>(&self, full: &[T]) -> Result<Vec<T>> {
        if full.len() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                got: full.len(),
            });
        }
        let mut out = Vec::with_capacity(self.dim());
        for block in &self.blocks {
            match block {
                Block::Full => out.extend_from_slice(full),
                Block::Sector(s) => out.extend(s.project(&self.basis, full)?),
            }
        }
        Ok(out)
    }

    /// Coordinates of a vector that must lie in the space (weight outside at
    /// most `1e-10`).
    pub fn coordinates<T: Real>(&self, full: &[T]) -> Result<Vec<T>> {
        let c = self.restrict(full)?;
        let outside = dot(full, full) - dot(&c, &c);
        if outside.abs() > T::tol(1e-10) {
            return Err(Error::SupportLeakage(outside.as_f64()));
        }
        Ok(c)
    }

    /// Dense matrix of `op` between blocks `a` and `b`.
    pub fn block_matrix<T: Real>(&self, op: &SparseOperator<T>, a: usize, b: usize) -> Result<DenseMatrix<T>> {
        match (&self.blocks[a], &self.blocks[b]) {
            (Block::Full, Block::Full) => {
                if op.tag() != (&self.basis).into() {
                    return Err(Error::BasisMismatch);
                }
                Ok(op.to_dense())
            }
            (Block::Sector(sa), Block::Sector(sb)) => project_between(op, &self.basis, sa, sb),
            _ => Err(Error::InvalidArgument("mixed full/sector blocks".into())),
        }
    }

    /// Dense matrix of `op` on the whole space, including couplings between
    /// sectors.
    pub fn operator_matrix<T: Real>(&self, op: &SparseOperator<T>) -> Result<DenseMatrix<T>> {
        let mut m = DenseMatrix::zeros(self.dim(), self.dim());
        for a in 0..self.blocks.len() {
            for b in 0..self.blocks.len() {
                let sub = self.block_matrix(op, a, b)?;
                let (ra, rb) = (self.block_range(a), self.block_range(b));
                for i in 0..sub.rows() {
                    m.row_mut(ra.start + i)[rb.clone()].copy_from_slice(sub.row(i));
                }
            }
        }
        Ok(m)
    }

    /// Coordinates of the Néel state (excitations on even sites), projected
    /// onto the space.
    pub fn neel_coordinates<T: Real>(&self) -> Result<Vec<T>> {
        self.restrict(&self.basis.fock_vector(neel(self.basis.n_sites()))?)
    }
}

/// How degenerate eigenvectors were fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// Pivoted orthogonalization in coefficient order, first significant
    /// component positive.
    BasisOrder,
    /// As `BasisOrder`, then each degenerate class rotated so that a single
    /// member carries the whole overlap with a reference state.
    ReferenceAligned,
}

/// Eigenpairs in ascending energy order. Vectors are stored contiguously in
/// space coordinates.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T> {
    energies: Vec<T>,
    vectors: Vec<T>,
    dim: usize,
    blocks: Vec<usize>,
    zero_modes: Vec<usize>,
    tol_zero: T,
    gauge: Gauge,
}

impl<T: Real> EigenDecomposition<T> {
    fn from_parts(parts: Vec<(usize, Range<usize>, SymmetricEigen<T>)>, dim: usize) -> Self {
        let mut order: Vec<(T, usize, usize)> = Vec::with_capacity(dim);
        for (b, (_, _, e)) in parts.iter().enumerate() {
            order.extend(e.values.iter().enumerate().map(|(i, &v)| (v, b, i)));
        }
        order.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut vectors = vec![T::zero(); order.len() * dim];
        let mut energies = Vec::with_capacity(order.len());
        let mut blocks = Vec::with_capacity(order.len());
        for (n, &(e, b, i)) in order.iter().enumerate() {
            let (label, range, eig) = &parts[b];
            vectors[n * dim + range.start..n * dim + range.end].copy_from_slice(eig.vector(i));
            energies.push(e);
            blocks.push(*label);
        }
        let scale = energies.iter().fold(T::zero(), |m, e| m.max(e.abs()));
        let tol_zero = T::tol(1e-8) * scale;
        let zero_modes = (0..energies.len()).filter(|&n| energies[n].abs() <= tol_zero).collect();
        Self {
            energies,
            vectors,
            dim,
            blocks,
            zero_modes,
            tol_zero,
            gauge: Gauge::BasisOrder,
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn energy(&self, n: usize) -> T {
        self.energies[n]
    }

    pub fn vector(&self, n: usize) -> &[T] {
        &self.vectors[n * self.dim..(n + 1) * self.dim]
    }

    /// Index of the space block holding eigenvector `n`.
    pub fn block_of(&self, n: usize) -> usize {
        self.blocks[n]
    }

    pub fn zero_mode_indices(&self) -> &[usize] {
        &self.zero_modes
    }

    pub fn tol_zero(&self) -> T {
        self.tol_zero
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    /// Expansion coefficients `<E_n|ψ>`.
    pub fn coefficients(&self, psi: &[T]) -> Result<Vec<T>> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi.len(),
            });
        }
        Ok((0..self.len()).map(|n| dot(self.vector(n), psi)).collect())
    }

    /// `Σ_n c_n |E_n>`.
    pub fn synthesize(&self, coeffs: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (n, &c) in coeffs.iter().enumerate() {
            if c != T::zero() {
                for (o, &v) in out.iter_mut().zip(self.vector(n)) {
                    *o += c * v;
                }
            }
        }
        out
    }

    /// Groups of indices whose energies are within `tol` of their neighbour,
    /// in ascending energy.
    pub fn energy_classes(&self, tol: T) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for n in 0..self.len() {
            match classes.last_mut() {
                Some(c) if self.energies[n] - self.energies[*c.last().unwrap()] <= tol => c.push(n),
                _ => classes.push(vec![n]),
            }
        }
        classes
    }

    /// Largest `‖M v_n - E_n v_n‖` for a dense matrix in the same coordinates.
    pub fn max_residual(&self, m: &DenseMatrix<T>) -> T {
        (0..self.len())
            .map(|n| {
                let v = self.vector(n);
                let mv = m.mul_vec(v);
                mv.iter()
                    .zip(v)
                    .map(|(&a, &b)| (a - self.energies[n] * b).powi(2))
                    .sum::<T>()
                    .sqrt()
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest `|<v_a|v_b> - δ_ab|`.
    pub fn orthonormality_error(&self) -> T {
        let mut worst = T::zero();
        for a in 0..self.len() {
            for b in a..self.len() {
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((dot(self.vector(a), self.vector(b)) - target).abs());
            }
        }
        worst
    }

    /// Rotates every degenerate class (within one block) so that its first
    /// member is the normalized projection of `reference` and the remaining
    /// members are orthogonal to it.
    pub fn align_degenerate(&mut self, reference: &[T]) -> Result<()> {
        if reference.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: reference.len(),
            });
        }
        let tol = self.tol_zero;
        for class in self.energy_classes(tol) {
            let mut by_block: Vec<(usize, Vec<usize>)> = Vec::new();
            for n in class {
                match by_block.iter_mut().find(|(b, _)| *b == self.blocks[n]) {
                    Some((_, v)) => v.push(n),
                    None => by_block.push((self.blocks[n], vec![n])),
                }
            }
            for (_, members) in by_block.into_iter().filter(|(_, m)| m.len() > 1) {
                self.align_class(&members, reference);
            }
        }
        self.gauge = Gauge::ReferenceAligned;
        Ok(())
    }

    fn align_class(&mut self, members: &[usize], reference: &[T]) {
        let vs: Vec<Vec<T>> = members.iter().map(|&n| self.vector(n).to_vec()).collect();
        let c: Vec<T> = vs.iter().map(|v| dot(v, reference)).collect();
        let weight = c.iter().map(|&x| x * x).sum::<T>().sqrt();
        if weight <= T::tol(1e-12) {
            return;
        }
        let mut lead = vec![T::zero(); self.dim];
        for (v, &ci) in vs.iter().zip(&c) {
            for (l, &x) in lead.iter_mut().zip(v) {
                *l += ci * x;
            }
        }
        normalize(&mut lead);
        let mut accepted = vec![lead];
        // Complete with the original vectors, most independent first.
        let mut pool = vs;
        while accepted.len() < members.len() {
            let mut best: Option<(usize, Vec<T>, T)> = None;
            for (i, v) in pool.iter().enumerate() {
                let mut r = v.clone();
                for a in &accepted {
                    let p = dot(a, &r);
                    for (x, &y) in r.iter_mut().zip(a) {
                        *x -= p * y;
                    }
                }
                let nr = dot(&r, &r).sqrt();
                if best.as_ref().is_none_or(|b| nr > b.2) {
                    best = Some((i, r, nr));
                }
            }
            let (i, mut r, _) = best.expect("pool not empty");
            pool.remove(i);
            normalize(&mut r);
            fix_sign(&mut r);
            accepted.push(r);
        }
        for (&n, v) in members.iter().zip(accepted) {
            self.vectors[n * self.dim..(n + 1) * self.dim].copy_from_slice(&v);
        }
    }
}

fn fix_sign<T: Real>(v: &mut [T]) {
    let thresh = T::tol(1e-8);
    if let Some(&first) = v.iter().find(|x| x.abs() > thresh) {
        if first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn eigen_gauged<T: Real>(m: &DenseMatrix<T>) -> Result<SymmetricEigen<T>> {
    let scale = T::one() + m.max_abs();
    let asym = m.max_asymmetry();
    if asym > T::tol(1e-12) * scale {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    let mut eig = symmetric_eigen(m)?;
    canonicalize_gauge(&mut eig, T::tol(1e-9) * scale);
    Ok(eig)
}

/// Diagonalizes a real symmetric matrix.
pub fn diagonalize<T: Real>(m: &DenseMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.cols(),
        });
    }
    let eig = eigen_gauged(m)?;
    Ok(EigenDecomposition::from_parts(vec![(0, 0..n, eig)], n))
}

/// Diagonalizes a translation-invariant Hamiltonian block by block.
pub fn diagonalize_in_space<T: Real>(space: &Space, h: &SparseOperator<T>) -> Result<EigenDecomposition<T>> {
    let mut parts = Vec::with_capacity(space.blocks().len());
    for b in 0..space.blocks().len() {
        let m = space.block_matrix(h, b, b)?;
        parts.push((b, space.block_range(b), eigen_gauged(&m)?));
    }
    Ok(EigenDecomposition::from_parts(parts, space.dim()))
}

/// `|<Z2|E_n>|²` for every eigenvector.
pub fn neel_overlaps<T: Real>(eig: &EigenDecomposition<T>, space: &Space) -> Result<Vec<T>> {
    overlaps_with(eig, &space.neel_coordinates()?)
}

pub fn overlaps_with<T: Real>(eig: &EigenDecomposition<T>, psi: &[T]) -> Result<Vec<T>> {
    Ok(eig.coefficients(psi)?.into_iter().map(|c| c * c).collect())
}

pub fn zero_mode_subspace<T: Real>(eig: &EigenDecomposition<T>, tol_zero: T) -> Vec<usize> {
    (0..eig.len()).filter(|&n| eig.energy(n).abs() <= tol_zero).collect()
}

/// Largest `|E_i + E_{D-1-i}|`; zero for a spectrum symmetric about zero.
pub fn chiral_asymmetry<T: Real>(energies: &[T]) -> T {
    let n = energies.len();
    (0..n)
        .map(|i| (energies[i] + energies[n - 1 - i]).abs())
        .fold(T::zero(), |a, b| a.max(b))
}

/// Selected scar states, one per energy window.
#[derive(Debug, Clone, Serialize)]
pub struct ScarTower {
    pub indices: Vec<usize>,
    pub energies: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub centres: Vec<f64>,
    pub width: f64,
    /// Windows that contained no eigenstate.
    pub empty_windows: Vec<usize>,
    /// Set when some window was empty or two windows chose the same state.
    pub degraded: bool,
}

/// Equally spaced centres `E_0 + kω` with `ω = -2E_0/N`, from the lowest
/// energy in the list. Used when no forward-scattering ladder is available.
pub fn fallback_centres<T: Real>(energies: &[T], n_sites: usize) -> Vec<f64> {
    let e0 = energies.iter().fold(f64::INFINITY, |m, e| m.min(e.as_f64()));
    let omega = -2.0 * e0 / n_sites as f64;
    (0..=n_sites).map(|k| e0 + k as f64 * omega).collect()
}

/// Mean spacing of an ascending list of centres.
pub fn mean_spacing(centres: &[f64]) -> f64 {
    if centres.len() < 2 {
        return 0.0;
    }
    (centres[centres.len() - 1] - centres[0]) / (centres.len() - 1) as f64
}

/// Picks, inside each window `[c - w/2, c + w/2]`, the state with the largest
/// overlap (lowest index on ties).
pub fn identify_scar_tower<T: Real>(energies: &[T], overlaps: &[T], centres: &[f64], width: f64) -> Result<ScarTower> {
    if energies.len() != overlaps.len() {
        return Err(Error::DimensionMismatch {
            expected: energies.len(),
            got: overlaps.len(),
        });
    }
    let mut tower = ScarTower {
        indices: vec![],
        energies: vec![],
        overlaps: vec![],
        centres: centres.to_vec(),
        width,
        empty_windows: vec![],
        degraded: false,
    };
    for (w, &c) in centres.iter().enumerate() {
        let best = (0..energies.len())
            .filter(|&n| (energies[n].as_f64() - c).abs() <= 0.5 * width)
            .fold(None::<usize>, |b, n| match b {
                Some(b) if overlaps[b] >= overlaps[n] => Some(b),
                _ => Some(n),
            });
        match best {
            Some(n) => {
                tower.indices.push(n);
                tower.energies.push(energies[n].as_f64());
                tower.overlaps.push(overlaps[n].as_f64());
            }
            None => tower.empty_windows.push(w),
        }
    }
    let distinct = tower.indices.windows(2).all(|p| p[0] < p[1]);
    tower.degraded = !tower.empty_windows.is_empty() || !distinct;
    Ok(tower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::enumerate_basis;
    use crate::operators::build_pxp;

    fn space(n: usize, c: SectorChoice) -> Space {
        Space::new(enumerate_basis(n, Boundary::Periodic).unwrap(), c).unwrap()
    }

    #[test]
    fn pauli_x_spectrum() {
        let m = DenseMatrix::from_row_major(2, 2, vec![0.0f64, 1.0, 1.0, 0.0]).unwrap();
        let e = diagonalize(&m).unwrap();
        assert!((e.energy(0) + 1.0).abs() < 1e-14 && (e.energy(1) - 1.0).abs() < 1e-14);
        // Gauge: first significant component positive.
        assert!(e.vector(0)[0] > 0.0 && e.vector(1)[0] > 0.0);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DenseMatrix::from_row_major(2, 2, vec![0.0f64, 1.0, 0.5, 0.0]).unwrap();
        assert!(matches!(diagonalize(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn n4_k0_spectrum_and_overlaps() {
        let s = space(4, SectorChoice::K0);
        let h = build_pxp(s.basis(), 1.0f64);
        let e = diagonalize_in_space(&s, &h).unwrap();
        let r6 = 6f64.sqrt();
        for (a, b) in e.energies().iter().zip([-r6, 0.0, r6]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(e.zero_mode_indices(), &[1]);
        // Analytic 3x3: the zero mode carries 2/3 of the k=0 Néel weight (1/2).
        let ov = neel_overlaps(&e, &s).unwrap();
        for (a, b) in ov.iter().zip([1.0 / 12.0, 1.0 / 3.0, 1.0 / 12.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn combined_space_is_consistent() {
        for n in [8, 10, 12] {
            let s = space(n, SectorChoice::All);
            let h = build_pxp(s.basis(), 1.0f64);
            let e = diagonalize_in_space(&s, &h).unwrap();
            let hm = s.operator_matrix(&h).unwrap();
            assert!(e.max_residual(&hm) < 1e-10 * 2.0 * n as f64);
            assert!(e.orthonormality_error() < 1e-10);
            let ov = neel_overlaps(&e, &s).unwrap();
            assert!((ov.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(chiral_asymmetry(e.energies()) < 1e-10);
        }
    }

    #[test]
    fn neel_absent_from_other_momenta() {
        let b = enumerate_basis(8, Boundary::Periodic).unwrap();
        let z2: Vec<f64> = b.fock_vector(neel(8)).unwrap();
        for k in [1, 2, 3] {
            let s = SymmetrySector::new(&b, k).unwrap();
            // Complex amplitudes: weight is the squared modulus.
            let w: f64 = (0..s.dim())
                .map(|i| {
                    s.orbit(&b, i)
                        .iter()
                        .map(|&(x, sh)| s.amplitude(i, sh).conj() * z2[x])
                        .sum::<num_complex::Complex<f64>>()
                        .norm_sqr()
                })
                .sum();
            assert!(w < 1e-24);
        }
    }

    #[test]
    fn full_basis_spectrum_is_union_of_sectors() {
        let b = enumerate_basis(10, Boundary::Periodic).unwrap();
        let h = build_pxp(&b, 1.0f64);
        let full = diagonalize_in_space(&Space::full(b.clone()), &h).unwrap();
        let mut from_sectors: Vec<f64> = Vec::new();
        for k in 0..10 {
            let s = SymmetrySector::new(&b, k).unwrap();
            let m = crate::operators::project_between_complex(&h, &b, &s, &s).unwrap();
            // Hermitian → real symmetric embedding [[Re, -Im], [Im, Re]] doubles each eigenvalue.
            let d = s.dim();
            let mut big = DenseMatrix::zeros(2 * d, 2 * d);
            for i in 0..d {
                for j in 0..d {
                    big[(i, j)] = m[(i, j)].re;
                    big[(i + d, j + d)] = m[(i, j)].re;
                    big[(i, j + d)] = -m[(i, j)].im;
                    big[(i + d, j)] = m[(i, j)].im;
                }
            }
            let ev = symmetric_eigen(&big).unwrap().values;
            from_sectors.extend(ev.iter().step_by(2));
        }
        from_sectors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in full.energies().iter().zip(&from_sectors) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_modes_grow() {
        let count = |n| {
            let s = space(n, SectorChoice::All);
            let e = diagonalize_in_space(&s, &build_pxp(s.basis(), 1.0f64)).unwrap();
            let z = zero_mode_subspace(&e, e.tol_zero());
            assert!(z.iter().all(|&i| e.energy(i).abs() <= e.tol_zero()));
            z.len()
        };
        assert!(count(12) > count(8));
    }

    #[test]
    fn alignment_concentrates_overlap() {
        let s = space(12, SectorChoice::All);
        let mut e = diagonalize_in_space(&s, &build_pxp(s.basis(), 1.0f64)).unwrap();
        let before = neel_overlaps(&e, &s).unwrap();
        let z2 = s.neel_coordinates().unwrap();
        e.align_degenerate(&z2).unwrap();
        let after = neel_overlaps(&e, &s).unwrap();
        assert!((after.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(e.orthonormality_error() < 1e-10);
        let zm = e.zero_mode_indices().to_vec();
        let total: f64 = zm.iter().map(|&i| before[i]).sum();
        let best = zm.iter().map(|&i| after[i]).fold(0.0, f64::max);
        let nonzero = zm.iter().filter(|&&i| after[i] > 1e-20).count();
        assert!((zm.iter().map(|&i| after[i]).sum::<f64>() - total).abs() < 1e-12);
        // One vector per block carries the weight.
        assert!(nonzero <= 2);
        assert!(best >= 0.5 * total);
        assert_eq!(e.gauge(), Gauge::ReferenceAligned);
    }

    #[test]
    fn tower_at_n8() {
        let s = space(8, SectorChoice::All);
        let e = diagonalize_in_space(&s, &build_pxp(s.basis(), 1.0f64)).unwrap();
        let ov = neel_overlaps(&e, &s).unwrap();
        let centres = fallback_centres(e.energies(), 8);
        let t = identify_scar_tower(e.energies(), &ov, &centres, mean_spacing(&centres)).unwrap();
        assert_eq!(t.indices.len(), 9);
        assert!(!t.degraded);
        assert_eq!(t.indices[0], 0);
        assert_eq!(*t.indices.last().unwrap(), e.len() - 1);
        for i in 0..9 {
            assert!((t.energies[i] + t.energies[8 - i]).abs() < 0.1);
        }
    }

    #[test]
    fn empty_windows_degrade() {
        let t = identify_scar_tower(&[0.0f64, 1.0], &[0.5, 0.5], &[0.0, 5.0], 1.0).unwrap();
        assert!(t.degraded);
        assert_eq!(t.empty_windows, vec![1]);
    }

    #[test]
    fn leakage_detected() {
        let s = space(8, SectorChoice::K0);
        let z2: Vec<f64> = s.basis().fock_vector(neel(8)).unwrap();
        assert!(matches!(s.coordinates(&z2), Err(Error::SupportLeakage(_))));
        let all = space(8, SectorChoice::All);
        let c = all.coordinates(&z2).unwrap();
        let back = all.embed(&c).unwrap();
        assert!(back.iter().zip(&z2).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

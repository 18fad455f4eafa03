//! Sparse operators on the constrained basis: the PXP Hamiltonian, its
//! long-range deformation, the raising/lowering split used by the forward
//! scattering approximation, and diagonal observables.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{is_excited, neel, z_value, Boundary, Config, ConstrainedBasis, SymmetrySector};
use crate::linalg::{DenseMatrix, LinearOperator};
use crate::scalar::Real;

/// Golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;

/// Identifies the basis an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BasisTag {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub dim: usize,
}

impl From<&ConstrainedBasis> for BasisTag {
    fn from(b: &ConstrainedBasis) -> Self {
        Self {
            n_sites: b.n_sites(),
            boundary: b.boundary(),
            dim: b.dim(),
        }
    }
}

/// Real operator in coordinate-list form with a row-compressed copy for
/// products. Entries keep their assembly order.
#[derive(Debug, Clone)]
pub struct SparseOperator<T> {
    tag: BasisTag,
    entries: Vec<(usize, usize, T)>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    hermitian: bool,
    diagonal: bool,
}

impl<T: Real> SparseOperator<T> {
    /// Assembles from raw triplets. Duplicate coordinates are summed into the
    /// first occurrence.
    pub fn from_entries(tag: BasisTag, raw: Vec<(usize, usize, T)>) -> Result<Self> {
        let mut slot: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut entries: Vec<(usize, usize, T)> = Vec::with_capacity(raw.len());
        for (r, c, v) in raw {
            if r >= tag.dim || c >= tag.dim {
                return Err(Error::DimensionMismatch {
                    expected: tag.dim,
                    got: r.max(c) + 1,
                });
            }
            match slot.get(&(r, c)) {
                Some(&i) => entries[i].2 += v,
                None => {
                    slot.insert((r, c), entries.len());
                    entries.push((r, c, v));
                }
            }
        }
        let diagonal = entries.iter().all(|&(r, c, _)| r == c);
        let mut op = Self {
            tag,
            entries,
            row_ptr: vec![],
            cols: vec![],
            vals: vec![],
            hermitian: false,
            diagonal,
        };
        op.rebuild_rows();
        op.hermitian = op.max_asymmetry() == T::zero();
        Ok(op)
    }

    fn rebuild_rows(&mut self) {
        let n = self.tag.dim;
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in &self.entries {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0; self.entries.len()];
        let mut vals = vec![T::zero(); self.entries.len()];
        for &(r, c, v) in &self.entries {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }
        self.row_ptr = counts;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn from_diagonal(tag: BasisTag, diag: &[T]) -> Result<Self> {
        if diag.len() != tag.dim {
            return Err(Error::DimensionMismatch {
                expected: tag.dim,
                got: diag.len(),
            });
        }
        Self::from_entries(tag, diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn identity(tag: BasisTag) -> Self {
        Self::from_diagonal(tag, &vec![T::one(); tag.dim]).expect("sized")
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn entries(&self) -> &[(usize, usize, T)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// Diagonal entries (zeros where absent).
    pub fn diagonal_values(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.tag.dim];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.row(r).filter(|&(cc, _)| cc == c).map(|(_, v)| v).sum()
    }

    /// Largest `|A_rc - A_cr|` over stored entries.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for &(r, c, v) in &self.entries {
            if r != c {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn transpose(&self) -> Self {
        Self::from_entries(self.tag, self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect()).expect("same tag")
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_entries(self.tag, self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect()).expect("same tag")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch);
        }
        let raw = self.entries.iter().chain(other.entries.iter()).copied().collect();
        Self::from_entries(self.tag, raw)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    /// Sparse product `self * other`, rows ascending, columns ascending
    /// within a row. Exact zeros are dropped.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch);
        }
        let mut raw = Vec::new();
        for r in 0..self.tag.dim {
            let mut acc: BTreeMap<usize, T> = BTreeMap::new();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    *acc.entry(c).or_insert(T::zero()) += a * b;
                }
            }
            raw.extend(acc.into_iter().filter(|&(_, v)| v != T::zero()).map(|(c, v)| (r, c, v)));
        }
        Self::from_entries(self.tag, raw)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        let raw: Vec<_> = ab
            .sub(&ba)?
            .entries
            .into_iter()
            .filter(|&(_, _, v)| v != T::zero())
            .collect();
        Self::from_entries(self.tag, raw)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.tag.dim, self.tag.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest absolute entry; a cheap scale for tolerances.
    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, &(_, _, v)| m.max(v.abs()))
    }

    /// Upper bound on the spectral norm (maximum absolute row sum).
    pub fn norm_bound(&self) -> T {
        (0..self.tag.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<T>())
            .fold(T::zero(), |m, s| m.max(s))
    }

    /// Applies to a complex vector.
    pub fn apply_complex(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.tag.dim)
            .map(|r| {
                self.row(r)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (c, v)| acc + x[c] * v)
            })
            .collect()
    }

    fn check_basis(&self, basis: &ConstrainedBasis) -> Result<()> {
        if self.tag != BasisTag::from(basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }
}

impl<T: Real> LinearOperator<T> for SparseOperator<T> {
    fn dim(&self) -> usize {
        self.tag.dim
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c]);
        }
    }
}

/// Sites whose flip keeps the blockade: both neighbours empty (an excited
/// site always qualifies).
fn flippable_sites(x: Config, n: usize, bc: Boundary) -> impl Iterator<Item = usize> {
    (0..n).filter(move |&j| {
        let left = match (j, bc) {
            (0, Boundary::Open) => false,
            (0, Boundary::Periodic) => is_excited(x, n - 1),
            _ => is_excited(x, j - 1),
        };
        let right = match bc {
            Boundary::Open if j + 1 == n => false,
            _ => is_excited(x, (j + 1) % n),
        };
        !left && !right
    })
}

/// `Ω Σ_j P_{j-1} X_j P_{j+1}`; sites beyond an open edge count as empty.
pub fn build_pxp<T: Real>(basis: &ConstrainedBasis, omega: T) -> SparseOperator<T> {
    let (n, bc) = (basis.n_sites(), basis.boundary());
    let mut raw = Vec::new();
    for (row, &x) in basis.states().iter().enumerate() {
        for j in flippable_sites(x, n, bc) {
            let col = basis.index_of(x ^ (1 << j)).expect("flip stays in the blockaded space");
            raw.push((row, col, omega));
        }
    }
    SparseOperator::from_entries(basis.into(), raw).expect("entries in range")
}

/// Deformation strength at distance `d`:
/// `h_d = h0 (φ^{d-1} - φ^{-(d-1)})^{-2}`.
pub fn deformation_strength<T: Real>(d: usize, h0: T) -> T {
    let phi = T::lit(PHI);
    let e = (d as i32) - 1;
    let s = phi.powi(e) - phi.powi(-e);
    h0 / (s * s)
}

/// Largest allowed deformation range for a basis.
pub fn max_range(basis: &ConstrainedBasis) -> usize {
    match basis.boundary() {
        Boundary::Periodic => basis.n_sites() / 2,
        Boundary::Open => basis.n_sites() - 1,
    }
}

/// Default range `N/2 - 1` (at least 2).
pub fn default_range(n_sites: usize) -> usize {
    (n_sites / 2).saturating_sub(1).max(2)
}

/// `-Σ_i Σ_{d=2}^{R} h_d P X_i P (Z_{i-d} + Z_{i+d})`.
pub fn build_perturbation<T: Real>(basis: &ConstrainedBasis, range: usize, h0: T) -> Result<SparseOperator<T>> {
    let (n, bc) = (basis.n_sites(), basis.boundary());
    let max = max_range(basis);
    if range < 2 || range > max {
        return Err(Error::InvalidRange { r: range, max });
    }
    let strengths: Vec<T> = (0..=range)
        .map(|d| if d >= 2 { deformation_strength(d, h0) } else { T::zero() })
        .collect();
    let mut raw = Vec::new();
    for (row, &x) in basis.states().iter().enumerate() {
        for i in flippable_sites(x, n, bc) {
            let mut field = T::zero();
            for (d, &h) in strengths.iter().enumerate().skip(2) {
                for site in neighbours_at(i, d, n, bc) {
                    field += h * T::lit(z_value(x, site) as f64);
                }
            }
            if field != T::zero() {
                let col = basis.index_of(x ^ (1 << i)).expect("flip stays in the blockaded space");
                raw.push((row, col, -field));
            }
        }
    }
    SparseOperator::from_entries(basis.into(), raw)
}

fn neighbours_at(i: usize, d: usize, n: usize, bc: Boundary) -> Vec<usize> {
    match bc {
        Boundary::Periodic => vec![(i + n - d % n) % n, (i + d) % n],
        Boundary::Open => {
            let mut v = Vec::with_capacity(2);
            if i >= d {
                v.push(i - d);
            }
            if i + d < n {
                v.push(i + d);
            }
            v
        }
    }
}

/// Value of `½ Σ_j (-1)^j Z_j` on a configuration.
pub fn staggered_magnetization_value(x: Config, n: usize) -> f64 {
    let s: i32 = (0..n)
        .map(|j| if j % 2 == 0 { z_value(x, j) } else { -z_value(x, j) })
        .sum();
    0.5 * s as f64
}

/// `M_S = ½ Σ_j (-1)^j Z_j` with `Z = +1` on excited sites.
pub fn build_staggered_magnetization<T: Real>(basis: &ConstrainedBasis) -> SparseOperator<T> {
    let diag: Vec<T> = basis
        .states()
        .iter()
        .map(|&x| T::lit(staggered_magnetization_value(x, basis.n_sites())))
        .collect();
    SparseOperator::from_diagonal(basis.into(), &diag).expect("sized")
}

/// `Z_j Z_{j+r}` (indices modulo `N` on a ring).
pub fn build_zz_correlator<T: Real>(basis: &ConstrainedBasis, j: usize, r: usize) -> Result<SparseOperator<T>> {
    let n = basis.n_sites();
    if j >= n || r >= n {
        return Err(Error::SiteOutOfRange(format!("j = {j}, r = {r} with N = {n}")));
    }
    let other = match basis.boundary() {
        Boundary::Periodic => (j + r) % n,
        Boundary::Open if j + r < n => j + r,
        Boundary::Open => {
            return Err(Error::SiteOutOfRange(format!("j + r = {} beyond open edge", j + r)));
        }
    };
    let diag: Vec<T> = basis
        .states()
        .iter()
        .map(|&x| T::lit((z_value(x, j) * z_value(x, other)) as f64))
        .collect();
    SparseOperator::from_diagonal(basis.into(), &diag)
}

fn hamming_from_neel(x: Config, n: usize) -> u32 {
    (x ^ neel(n)).count_ones()
}

/// Splits an operator made of single-site flips into the part that moves
/// away from the Néel state (`plus`) and the part that moves towards it.
pub fn split_by_neel_distance<T: Real>(
    op: &SparseOperator<T>,
    basis: &ConstrainedBasis,
) -> Result<(SparseOperator<T>, SparseOperator<T>)> {
    op.check_basis(basis)?;
    let n = basis.n_sites();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for &(r, c, v) in op.entries() {
        let (dr, dc) = (
            hamming_from_neel(basis.state(r), n),
            hamming_from_neel(basis.state(c), n),
        );
        if dr == dc + 1 {
            plus.push((r, c, v));
        } else if dc == dr + 1 {
            minus.push((r, c, v));
        } else {
            return Err(Error::InvalidArgument(format!(
                "entry ({r}, {c}) is not a single flip relative to the Néel state"
            )));
        }
    }
    Ok((
        SparseOperator::from_entries(op.tag, plus)?,
        SparseOperator::from_entries(op.tag, minus)?,
    ))
}

/// `(H⁺, H⁻)` with `H⁺ + H⁻ = H_PXP` and `H⁻ |Z2> = 0`.
pub fn build_pxp_pm<T: Real>(basis: &ConstrainedBasis, omega: T) -> Result<(SparseOperator<T>, SparseOperator<T>)> {
    split_by_neel_distance(&build_pxp(basis, omega), basis)
}

/// `H^z = [H⁺, H⁻]`.
pub fn build_hz<T: Real>(hplus: &SparseOperator<T>, hminus: &SparseOperator<T>) -> Result<SparseOperator<T>> {
    hplus.commutator(hminus)
}

/// `<row_i|op|col_j>` between two momentum sectors, accumulated in complex
/// arithmetic.
pub fn project_between_complex<T: Real>(
    op: &SparseOperator<T>,
    basis: &ConstrainedBasis,
    row_sector: &SymmetrySector,
    col_sector: &SymmetrySector,
) -> Result<DenseMatrix<Complex<T>>> {
    op.check_basis(basis)?;
    let transpose = op.transpose();
    let mut m = DenseMatrix::zeros(row_sector.dim(), col_sector.dim());
    for b in 0..col_sector.dim() {
        for (y, shift_b) in col_sector.orbit(basis, b) {
            let ub = col_sector.amplitude(b, shift_b);
            // Column y of op is row y of its transpose.
            for (x, v) in transpose.row(y) {
                if let Some((a, shift_a)) = row_sector.locate(basis.state(x)) {
                    let w = row_sector.amplitude(a, shift_a).conj() * ub * v.as_f64();
                    m[(a, b)] += Complex::new(T::lit(w.re), T::lit(w.im));
                }
            }
        }
    }
    Ok(m)
}

/// Real block `<row_i|op|col_j>` for sectors with `k ∈ {0, π}`.
pub fn project_between<T: Real>(
    op: &SparseOperator<T>,
    basis: &ConstrainedBasis,
    row_sector: &SymmetrySector,
    col_sector: &SymmetrySector,
) -> Result<DenseMatrix<T>> {
    for s in [row_sector, col_sector] {
        if !s.is_real() {
            return Err(Error::ComplexSector(s.k_index()));
        }
    }
    let m = project_between_complex(op, basis, row_sector, col_sector)?;
    let residue = m.as_slice().iter().fold(T::zero(), |acc, z| acc.max(z.im.abs()));
    if residue > T::tol(1e-12) * (T::one() + op.max_abs()) {
        return Err(Error::GaugeResidue(residue.as_f64()));
    }
    Ok(m.map(|z| z.re))
}

pub fn project_to_sector<T: Real>(
    op: &SparseOperator<T>,
    basis: &ConstrainedBasis,
    sector: &SymmetrySector,
) -> Result<DenseMatrix<T>> {
    project_between(op, basis, sector, sector)
}

//! Forward scattering approximation: the Krylov ladder generated by the
//! raising part of the Hamiltonian from the Néel state, its projected
//! spectrum, su(2) closure diagnostics and revival fidelity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{neel, ConstrainedBasis};
use crate::linalg::{dot, DenseMatrix, LinearOperator};
use crate::operators::{split_by_neel_distance, SparseOperator};
use crate::scalar::Real;
use crate::spectral::{
    diagonalize, identify_scar_tower, mean_spacing, neel_overlaps, EigenDecomposition, ScarTower, Space,
};

/// Orthonormal ladder `|k> ∝ (H⁺)^k |start>`, `k = 0..=steps`.
#[derive(Debug, Clone)]
pub struct FsaBasis<T> {
    vectors: Vec<Vec<T>>,
    /// `‖H⁺|k>‖` for `k = 0..steps`.
    norms: Vec<T>,
    /// `‖H⁺|steps>‖`, zero when the ladder closes exactly.
    terminal_norm: T,
}

impl<T: Real> FsaBasis<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, k: usize) -> &[T] {
        &self.vectors[k]
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }

    pub fn norms(&self) -> &[T] {
        &self.norms
    }

    /// `β_k = 1/‖(H⁺)^k |start>‖`.
    pub fn betas(&self) -> Vec<T> {
        let mut b = vec![T::one()];
        for &n in &self.norms {
            let last = *b.last().unwrap();
            b.push(last / n);
        }
        b
    }

    pub fn terminal_norm(&self) -> T {
        self.terminal_norm
    }

    /// `<k|op|k'>`.
    pub fn project<Op: LinearOperator<T> + ?Sized>(&self, op: &Op) -> DenseMatrix<T> {
        let images: Vec<Vec<T>> = self.vectors.iter().map(|v| op.apply(v)).collect();
        let k = self.len();
        let mut m = DenseMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = dot(&self.vectors[i], &images[j]);
            }
        }
        m
    }

    /// Largest `|<k|k'> - δ_kk'|`.
    pub fn orthonormality_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.len() {
            for j in i..self.len() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot(&self.vectors[i], &self.vectors[j]) - target).abs());
            }
        }
        worst
    }

    /// Diagonal `<k|H^z|k>`.
    pub fn ladder_energies<Op: LinearOperator<T> + ?Sized>(&self, hz: &Op) -> Vec<T> {
        self.vectors.iter().map(|v| dot(v, &hz.apply(v))).collect()
    }
}

/// Builds `steps + 1` ladder vectors. A vanishing norm before the last
/// step is an error.
pub fn build_fsa_basis<T: Real, Op: LinearOperator<T> + ?Sized>(
    hplus: &Op,
    start: &[T],
    steps: usize,
) -> Result<FsaBasis<T>> {
    if start.len() != hplus.dim() {
        return Err(Error::DimensionMismatch {
            expected: hplus.dim(),
            got: start.len(),
        });
    }
    let mut v = start.to_vec();
    let n0 = crate::linalg::normalize(&mut v);
    if n0 == T::zero() {
        return Err(Error::LadderTerminated(0));
    }
    let mut vectors = vec![v];
    let mut norms = Vec::with_capacity(steps);
    let floor = T::tol(1e-12);
    for k in 0..steps {
        let mut w = hplus.apply(vectors.last().unwrap());
        let n = crate::linalg::normalize(&mut w);
        if n <= floor {
            return Err(Error::LadderTerminated(k + 1));
        }
        norms.push(n);
        vectors.push(w);
    }
    let terminal_norm = crate::linalg::norm(&hplus.apply(vectors.last().unwrap()));
    Ok(FsaBasis {
        vectors,
        norms,
        terminal_norm,
    })
}

#[derive(Debug, Clone)]
pub struct FsaSpectrum<T> {
    /// `<k|H|k'>`.
    pub projected: DenseMatrix<T>,
    pub eigen: EigenDecomposition<T>,
}

impl<T: Real> FsaSpectrum<T> {
    pub fn energies(&self) -> &[T] {
        self.eigen.energies()
    }

    /// Eigenvector `j` of the projected matrix expressed in the ambient space.
    pub fn tower_vector(&self, basis: &FsaBasis<T>, j: usize) -> Vec<T> {
        let mut out = vec![T::zero(); basis.vector(0).len()];
        for (k, &c) in self.eigen.vector(j).iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(basis.vector(k)) {
                *o += c * x;
            }
        }
        out
    }

    /// Mean spacing of the projected spectrum.
    pub fn mean_spacing(&self) -> T {
        let e = self.energies();
        if e.len() < 2 {
            return T::zero();
        }
        (e[e.len() - 1] - e[0]) / T::lit((e.len() - 1) as f64)
    }
}

pub fn fsa_spectrum<T: Real, Op: LinearOperator<T> + ?Sized>(h: &Op, basis: &FsaBasis<T>) -> Result<FsaSpectrum<T>> {
    let projected = basis.project(h);
    let eigen = diagonalize(&projected)?;
    Ok(FsaSpectrum { projected, eigen })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    /// `‖P[H^z,H⁺]P - Δ PH⁺P‖_F / ‖PH⁺P‖_F`.
    pub residual: f64,
    /// Least-squares `Δ`.
    pub delta_fit: f64,
    /// `<k+1|H^z|k+1> - <k|H^z|k>`.
    pub spacings: Vec<f64>,
    /// Largest deviation of a spacing from their mean.
    pub max_spacing_deviation: f64,
}

/// su(2) closure of the projected ladder. `hminus` must be the transpose of
/// `hplus`.
pub fn su2_closure_error<T, P, M, Z>(hplus: &P, hminus: &M, hz: &Z, basis: &FsaBasis<T>) -> ClosureReport
where
    T: Real,
    P: LinearOperator<T> + ?Sized,
    M: LinearOperator<T> + ?Sized,
    Z: LinearOperator<T> + ?Sized,
{
    let k = basis.len();
    let zv: Vec<Vec<T>> = basis.vectors().iter().map(|v| hz.apply(v)).collect();
    let pv: Vec<Vec<T>> = basis.vectors().iter().map(|v| hplus.apply(v)).collect();
    let mv: Vec<Vec<T>> = basis.vectors().iter().map(|v| hminus.apply(v)).collect();
    let mut a = DenseMatrix::zeros(k, k);
    let mut b = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            // <i|H^z H⁺|j> - <i|H⁺ H^z|j> with (H⁺)ᵀ = H⁻.
            a[(i, j)] = dot(&zv[i], &pv[j]) - dot(&mv[i], &zv[j]);
            b[(i, j)] = dot(basis.vector(i), &pv[j]);
        }
    }
    let bb = b.frobenius_dot(&b);
    let delta = if bb > T::zero() {
        a.frobenius_dot(&b) / bb
    } else {
        T::zero()
    };
    let resid = a.sub(&b.scale(delta)).unwrap().frobenius_norm();
    let residual = if bb > T::zero() { resid / bb.sqrt() } else { resid };
    let diag: Vec<f64> = (0..k).map(|i| dot(basis.vector(i), &zv[i]).as_f64()).collect();
    let spacings: Vec<f64> = diag.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = if spacings.is_empty() {
        0.0
    } else {
        spacings.iter().sum::<f64>() / spacings.len() as f64
    };
    let max_spacing_deviation = spacings.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);
    ClosureReport {
        residual: residual.as_f64(),
        delta_fit: delta.as_f64(),
        spacings,
        max_spacing_deviation,
    }
}

/// Ladder energies of `h` seeded at the Néel state, using the part of `h`
/// that raises the Hamming distance from Néel.
pub fn neel_ladder_energies<T: Real>(h: &SparseOperator<T>, basis: &ConstrainedBasis) -> Result<Vec<f64>> {
    let (hp, _) = split_by_neel_distance(h, basis)?;
    let ladder = build_fsa_basis(&hp, &basis.fock_vector(neel(basis.n_sites()))?, basis.n_sites())?;
    Ok(fsa_spectrum(h, &ladder)?
        .energies()
        .iter()
        .map(|e| e.as_f64())
        .collect())
}

/// Scar tower of `eig` (a diagonalization of `h` in `space`): one state per
/// window of width equal to the mean ladder spacing, centred on each ladder
/// energy.
pub fn locate_scar_tower<T: Real>(
    space: &Space,
    h: &SparseOperator<T>,
    eig: &EigenDecomposition<T>,
) -> Result<ScarTower> {
    let centres = neel_ladder_energies(h, space.basis())?;
    let overlaps = neel_overlaps(eig, space)?;
    identify_scar_tower(eig.energies(), &overlaps, &centres, mean_spacing(&centres))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Revival {
    pub t: f64,
    pub fidelity: f64,
}

/// Minimum rise of a fidelity peak above the lowest value seen since
/// `t = 1`. Suppresses small ripples during the initial decay.
pub const REVIVAL_PROMINENCE: f64 = 0.05;

/// `|Σ_n c_n² e^{-iE_n t}|²`.
pub fn return_probability<T: Real>(energies: &[T], coeffs: &[T], t: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (e, c) in energies.iter().zip(coeffs) {
        let w = c.as_f64() * c.as_f64();
        let ph = -e.as_f64() * t;
        re += w * ph.cos();
        im += w * ph.sin();
    }
    re * re + im * im
}

/// First local maximum of the return probability after `t = 1` that rises
/// at least [`REVIVAL_PROMINENCE`] above the preceding minimum. The grid
/// maximum is refined by golden-section search. `None` if no such peak
/// occurs before `horizon`.
pub fn revival_fidelity<T: Real>(energies: &[T], coeffs: &[T], horizon: f64, dt: f64) -> Option<Revival> {
    let f = |t: f64| return_probability(energies, coeffs, t);
    let steps = ((horizon - 1.0) / dt).floor() as usize;
    let grid: Vec<(f64, f64)> = (0..=steps).map(|i| 1.0 + dt * i as f64).map(|t| (t, f(t))).collect();
    let mut low = f64::INFINITY;
    for i in 1..grid.len().saturating_sub(1) {
        low = low.min(grid[i - 1].1);
        let (prev, cur, next) = (grid[i - 1].1, grid[i].1, grid[i + 1].1);
        if cur > prev && cur >= next && cur - low >= REVIVAL_PROMINENCE {
            let (t, fid) = golden_max(&f, grid[i - 1].0, grid[i + 1].0);
            return Some(Revival {
                t,
                fidelity: fid.max(cur),
            });
        }
    }
    None
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

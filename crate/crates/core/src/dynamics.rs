//! Quench dynamics by spectral propagation, time-window averages, linear
//! scaling fits and infinite-time (diagonal-ensemble) QFI.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{neel, neel_prime, Config, ConstrainedBasis};
use crate::linalg::DenseMatrix;
use crate::operators::SparseOperator;
use crate::qfi::linear_least_squares;
use crate::scalar::Real;
use crate::spectral::{EigenDecomposition, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Neel,
    NeelPrime,
    Polarized,
    Random,
}

impl InitialState {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Neel => "neel",
            Self::NeelPrime => "neel-prime",
            Self::Polarized => "polarized",
            Self::Random => "random",
        }
    }

    /// Configuration for the deterministic choices.
    pub fn config(&self, n_sites: usize) -> Option<Config> {
        match self {
            Self::Neel => Some(neel(n_sites)),
            Self::NeelPrime => Some(neel_prime(n_sites)),
            Self::Polarized => Some(0),
            Self::Random => None,
        }
    }
}

/// Observables along a quench.
#[derive(Debug, Clone, Serialize)]
pub struct QuenchTrace<T> {
    pub label: String,
    pub n_sites: usize,
    pub times: Vec<T>,
    pub f_q: Vec<T>,
    pub ms: Vec<T>,
    pub ms2: Vec<T>,
    pub fidelity: Vec<T>,
    /// `‖ψ(t)‖`, kept for the unitarity check.
    pub norm: Vec<T>,
}

/// `(<O>, <O²>, ‖ψ‖²)` of a state given in Fock amplitudes.
pub type MomentFn<'a, T> = dyn Fn(&[Complex<T>]) -> (T, T, T) + Sync + 'a;

/// Propagates `Σ_n c_n e^{-iE_n t} |E_n>` and evaluates moments through
/// `eval`, which receives the state in the eigenvectors' coordinates.
pub fn propagate<T: Real>(
    eig: &EigenDecomposition<T>,
    coeffs: &[T],
    times: &[T],
    n_sites: usize,
    label: &str,
    eval: &MomentFn<'_, T>,
) -> QuenchTrace<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let rows: Vec<(T, T, T, T)> = times
        .par_iter()
        .map(|&t| {
            let mut psi = vec![zero; eig.dim()];
            let mut overlap = zero;
            for (n, &c) in coeffs.iter().enumerate() {
                if c == T::zero() {
                    continue;
                }
                let phase = -eig.energy(n) * t;
                let a = Complex::new(phase.cos(), phase.sin()) * c;
                overlap += a * c;
                for (p, &v) in psi.iter_mut().zip(eig.vector(n)) {
                    *p += a * v;
                }
            }
            let (m, m2, norm_sq) = eval(&psi);
            (m, m2, overlap.norm_sqr(), norm_sq.sqrt())
        })
        .collect();
    let four_over_n = T::lit(4.0 / n_sites as f64);
    QuenchTrace {
        label: label.to_string(),
        n_sites,
        times: times.to_vec(),
        f_q: rows
            .iter()
            .map(|r| four_over_n * (r.1 - r.0 * r.0).max(T::zero()))
            .collect(),
        ms: rows.iter().map(|r| r.0).collect(),
        ms2: rows.iter().map(|r| r.1).collect(),
        fidelity: rows.iter().map(|r| r.2).collect(),
        norm: rows.iter().map(|r| r.3).collect(),
    }
}

/// Evenly spaced times `0, dt, ..., ≤ t_max`.
pub fn time_grid<T: Real>(t_max: T, dt: T) -> Result<Vec<T>> {
    if dt <= T::zero() || t_max < T::zero() {
        return Err(Error::InvalidArgument("need dt > 0 and t_max ≥ 0".into()));
    }
    let steps = (t_max / dt + T::tol(1e-9)).floor().to_usize().unwrap_or(0);
    Ok((0..=steps).map(|k| dt * T::lit(k as f64)).collect())
}

/// Quench from a full-basis state inside `space` with a diagonal observable.
pub fn evolve_state<T: Real>(
    eig: &EigenDecomposition<T>,
    space: &Space,
    psi0: &[T],
    times: &[T],
    observable: &SparseOperator<T>,
    label: &str,
) -> Result<QuenchTrace<T>> {
    if !observable.is_diagonal() {
        return Err(Error::InvalidArgument(
            "quench observables must be diagonal in the Fock basis".into(),
        ));
    }
    if observable.tag() != space.basis().into() {
        return Err(Error::BasisMismatch);
    }
    let coords = space.coordinates(psi0)?;
    let coeffs = eig.coefficients(&coords)?;
    let diag = observable.diagonal_values();
    let eval = |psi: &[Complex<T>]| -> (T, T, T) {
        let full = space.embed_complex(psi).expect("sized by construction");
        let (mut m, mut m2, mut nrm) = (T::zero(), T::zero(), T::zero());
        for (z, &d) in full.iter().zip(&diag) {
            let p = z.norm_sqr();
            m += p * d;
            m2 += p * d * d;
            nrm += p;
        }
        (m, m2, nrm)
    };
    Ok(propagate(eig, &coeffs, times, space.basis().n_sites(), label, &eval))
}

/// Mean of `f_Q` over samples with `|t - centre| ≤ width/2`.
pub fn window_average<T: Real>(trace: &QuenchTrace<T>, centre: T, width: T) -> Result<T> {
    let half = width / T::lit(2.0);
    let vals: Vec<T> = trace
        .times
        .iter()
        .zip(&trace.f_q)
        .filter(|(&t, _)| (t - centre).abs() <= half + T::tol(1e-12))
        .map(|(_, &f)| f)
        .collect();
    if vals.is_empty() {
        return Err(Error::EmptyWindow((centre - half).as_f64(), (centre + half).as_f64()));
    }
    Ok(vals.iter().copied().sum::<T>() / T::lit(vals.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation from the line.
    pub residual: f64,
}

/// Least-squares line through at least three points.
pub fn scaling_fit(sizes: &[f64], values: &[f64]) -> Result<ScalingFit> {
    if sizes.len() < 3 || sizes.len() != values.len() {
        return Err(Error::InsufficientData(format!(
            "{} points, need 3",
            sizes.len().min(values.len())
        )));
    }
    let (slope, intercept) = linear_least_squares(sizes, values)?;
    let ss: f64 = sizes
        .iter()
        .zip(values)
        .map(|(&x, &y)| (slope * x + intercept - y).powi(2))
        .sum();
    Ok(ScalingFit {
        slope,
        intercept,
        residual: (ss / sizes.len() as f64).sqrt(),
    })
}

/// Infinite-time QFI density by two routes.
#[derive(Debug, Clone, Serialize)]
pub struct DiagonalEnsemble {
    /// Exact resonance-class sum.
    pub exact: f64,
    /// `4Tr(ρO²) - 4(Tr ρO)² - 8Tr(ρOρO)`, per site.
    pub trace_form: f64,
    /// `trace_form - exact`.
    pub gap: f64,
    pub zero_mode_count: usize,
    pub tr_rho_o: f64,
    pub tr_rho_o2: f64,
    pub tr_rho_o_rho_o: f64,
    /// Infinite-time average of `<O>²`.
    pub mean_o_squared: f64,
    /// `|c_n|²` in eigenvalue order.
    pub populations: Vec<f64>,
    /// `c_n` over the zero-energy block.
    pub zero_mode_coefficients: Vec<f64>,
}

/// `V A Vᵀ` with the eigenvectors as rows of `V`.
pub fn to_eigenbasis<T: Real>(eig: &EigenDecomposition<T>, a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let d = eig.dim();
    if a.rows() != d || a.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.rows(),
        });
    }
    let mut v = DenseMatrix::zeros(eig.len(), d);
    for n in 0..eig.len() {
        v.row_mut(n).copy_from_slice(eig.vector(n));
    }
    v.matmul(&a.matmul(&v.transpose())?)
}

/// Diagonal ensemble from real coefficients and the eigenbasis matrices of
/// `O` and `O²`. Energies closer than `tol` count as degenerate, and gaps
/// closer than `tol` as resonant.
pub fn diagonal_ensemble_from_matrices<T: Real>(
    eig: &EigenDecomposition<T>,
    coeffs: &[T],
    o_eig: &DenseMatrix<T>,
    o2_eig: &DenseMatrix<T>,
    n_sites: usize,
    tol: T,
) -> Result<DiagonalEnsemble> {
    let k = eig.len();
    if coeffs.len() != k || o_eig.rows() != k || o2_eig.rows() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: coeffs.len(),
        });
    }
    let classes = eig.energy_classes(tol);
    let class_energy: Vec<f64> = classes
        .iter()
        .map(|c| c.iter().map(|&n| eig.energy(n).as_f64()).sum::<f64>() / c.len() as f64)
        .collect();
    let c: Vec<f64> = coeffs.iter().map(|x| x.as_f64()).collect();

    let block_sum = |m: &DenseMatrix<T>, a: &[usize], b: &[usize]| -> f64 {
        let mut s = 0.0;
        for &i in a {
            if c[i] == 0.0 {
                continue;
            }
            for &j in b {
                s += c[i] * c[j] * m[(i, j)].as_f64();
            }
        }
        s
    };

    let tr_rho_o2: f64 = classes.iter().map(|a| block_sum(o2_eig, a, a)).sum();
    let tr_rho_o: f64 = classes.iter().map(|a| block_sum(o_eig, a, a)).sum();

    // Y_AB = Σ_{a∈A, b∈B} c_a O_ab c_b; Tr(ρOρO) = Σ_AB Y_AB Y_BA.
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut tr_rho_o_rho_o = 0.0;
    for (ia, a) in classes.iter().enumerate() {
        for (ib, b) in classes.iter().enumerate() {
            let y = block_sum(o_eig, a, b);
            if y != 0.0 {
                let y_rev = block_sum(o_eig, b, a);
                tr_rho_o_rho_o += y * y_rev;
                pairs.push((class_energy[ia] - class_energy[ib], y));
            }
        }
    }
    // Time average of <O>² = Σ_ω |X(ω)|² with X(ω) summed over resonant gaps.
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let gap_tol = tol.as_f64();
    let mut mean_o_squared = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let mut x = pairs[i].1;
        let mut j = i + 1;
        while j < pairs.len() && pairs[j].0 - pairs[j - 1].0 <= gap_tol {
            x += pairs[j].1;
            j += 1;
        }
        mean_o_squared += x * x;
        i = j;
    }

    let n = n_sites as f64;
    let exact = (4.0 * (tr_rho_o2 - mean_o_squared)).max(0.0) / n;
    let trace_form = (4.0 * tr_rho_o2 - 4.0 * tr_rho_o * tr_rho_o - 8.0 * tr_rho_o_rho_o) / n;
    let zero_modes = eig.zero_mode_indices();
    Ok(DiagonalEnsemble {
        exact,
        trace_form,
        gap: trace_form - exact,
        zero_mode_count: zero_modes.len(),
        tr_rho_o,
        tr_rho_o2,
        tr_rho_o_rho_o,
        mean_o_squared,
        populations: c.iter().map(|x| x * x).collect(),
        zero_mode_coefficients: zero_modes.iter().map(|&n| c[n]).collect(),
    })
}

/// Diagonal ensemble of a quench from a full-basis state inside `space`.
pub fn diagonal_ensemble_qfi<T: Real>(
    eig: &EigenDecomposition<T>,
    space: &Space,
    psi0: &[T],
    op: &SparseOperator<T>,
) -> Result<DiagonalEnsemble> {
    let coeffs = eig.coefficients(&space.coordinates(psi0)?)?;
    let o = to_eigenbasis(eig, &space.operator_matrix(op)?)?;
    let o2 = to_eigenbasis(eig, &space.operator_matrix(&op.matmul(op)?)?)?;
    diagonal_ensemble_from_matrices(eig, &coeffs, &o, &o2, space.basis().n_sites(), eig.tol_zero())
}

/// Time average of `f_Q(t)` over `[0, t_total]` by the trapezoidal rule,
/// evaluated in the eigenbasis.
pub fn running_average_qfi<T: Real>(
    eig: &EigenDecomposition<T>,
    coeffs: &[T],
    o_eig: &DenseMatrix<T>,
    o2_eig: &DenseMatrix<T>,
    n_sites: usize,
    t_total: T,
    dt: T,
) -> Result<T> {
    let times = time_grid(t_total, dt)?;
    let k = eig.len();
    let support: Vec<usize> = (0..k).filter(|&n| coeffs[n] != T::zero()).collect();
    let vals: Vec<T> = times
        .par_iter()
        .map(|&t| {
            let a: Vec<Complex<T>> = support
                .iter()
                .map(|&n| {
                    let ph = -eig.energy(n) * t;
                    Complex::new(ph.cos(), ph.sin()) * coeffs[n]
                })
                .collect();
            let (mut m, mut m2) = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
            for (i, &p) in support.iter().enumerate() {
                let (mut row_o, mut row_o2) = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
                for (j, &q) in support.iter().enumerate() {
                    row_o += a[j] * o_eig[(p, q)];
                    row_o2 += a[j] * o2_eig[(p, q)];
                }
                m += a[i].conj() * row_o;
                m2 += a[i].conj() * row_o2;
            }
            T::lit(4.0 / n_sites as f64) * (m2.re - m.re * m.re).max(T::zero())
        })
        .collect();
    let h = T::lit(0.5);
    let mut integral = T::zero();
    for w in vals.windows(2) {
        integral += h * (w[0] + w[1]);
    }
    let span = times.last().copied().unwrap_or(T::zero());
    if span <= T::zero() {
        return Ok(vals[0]);
    }
    Ok(integral * dt / span)
}

/// Uniform draws over blockade-valid Fock configurations; sample `i` uses
/// stream `i` of a ChaCha8 generator seeded with `seed`.
pub fn sample_random_product_states(basis: &ConstrainedBasis, count: usize, seed: u64) -> Result<Vec<Config>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be ≥ 1".into()));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            basis.state(rng.gen_range(0..basis.dim()))
        })
        .collect())
}

/// Pointwise mean and standard deviation of several traces sampled on the
/// same grid.
pub fn mean_and_std<T: Real>(series: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    if series.is_empty() {
        return (vec![], vec![]);
    }
    let len = series[0].len();
    let k = T::lit(series.len() as f64);
    let mean: Vec<T> = (0..len).map(|i| series.iter().map(|s| s[i]).sum::<T>() / k).collect();
    let std = (0..len)
        .map(|i| (series.iter().map(|s| (s[i] - mean[i]).powi(2)).sum::<T>() / k).sqrt())
        .collect();
    (mean, std)
}

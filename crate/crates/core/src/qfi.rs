//! Quantum Fisher information of pure and mixed states, the multipartite
//! entanglement witness, and connected ZZ correlations with decay fits.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{z_value, Boundary, ConstrainedBasis};
use crate::linalg::{dot, DenseMatrix, LinearOperator};
use crate::operators::SparseOperator;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QfiReport<T> {
    /// `F_Q`.
    pub total: T,
    /// `f_Q = F_Q / N`.
    pub density: T,
    pub n_sites: usize,
    /// Largest proper divisor `m` of `N` with `f_Q > m` (0 if none).
    pub witness_m: usize,
    pub genuine_n_partite: bool,
}

impl<T: Real> QfiReport<T> {
    pub fn new(total: T, n_sites: usize) -> Self {
        let density = total / T::lit(n_sites as f64);
        let f = density.as_f64();
        Self {
            total,
            density,
            n_sites,
            witness_m: entanglement_witness(f, n_sites),
            genuine_n_partite: n_sites > 0 && f >= (n_sites - 1) as f64,
        }
    }

    /// From the first two moments; variances above `-1e-10` clamp to zero.
    pub fn from_moments(mean: T, mean_sq: T, n_sites: usize) -> Self {
        Self::new(clamp_variance(mean_sq - mean * mean) * T::lit(4.0), n_sites)
    }
}

fn clamp_variance<T: Real>(v: T) -> T {
    v.max(T::zero())
}

/// Largest divisor `m < N` of `N` with `f_Q > m`; 0 if none.
pub fn entanglement_witness(f_q: f64, n_sites: usize) -> usize {
    (1..n_sites)
        .rev()
        .find(|&m| n_sites.is_multiple_of(m) && f_q > m as f64)
        .unwrap_or(0)
}

fn check_norm<T: Real>(norm_sq: T) -> Result<()> {
    let norm = norm_sq.sqrt();
    if (norm - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::NotNormalized(norm.as_f64()));
    }
    Ok(())
}

/// `4(<O²> - <O>²)` with `<O²> = ‖Oψ‖²`.
pub fn qfi_pure<T: Real>(psi: &[T], op: &SparseOperator<T>) -> Result<QfiReport<T>> {
    let tag = op.tag();
    if psi.len() != tag.dim {
        return Err(Error::DimensionMismatch {
            expected: tag.dim,
            got: psi.len(),
        });
    }
    check_norm(dot(psi, psi))?;
    let opsi = op.apply(psi);
    Ok(QfiReport::from_moments(dot(psi, &opsi), dot(&opsi, &opsi), tag.n_sites))
}

pub fn qfi_pure_complex<T: Real>(psi: &[Complex<T>], op: &SparseOperator<T>) -> Result<QfiReport<T>> {
    let tag = op.tag();
    if psi.len() != tag.dim {
        return Err(Error::DimensionMismatch {
            expected: tag.dim,
            got: psi.len(),
        });
    }
    check_norm(psi.iter().map(|z| z.norm_sqr()).sum::<T>())?;
    let opsi = op.apply_complex(psi);
    let mean: T = psi.iter().zip(&opsi).map(|(a, b)| (a.conj() * b).re).sum();
    let mean_sq: T = opsi.iter().map(|z| z.norm_sqr()).sum();
    Ok(QfiReport::from_moments(mean, mean_sq, tag.n_sites))
}

/// `2 Σ (p_n - p_m)²/(p_n + p_m) |O_nm|²` with `O` given in the eigenbasis
/// of `ρ`. Pairs with `p_n + p_m ≤ 1e-14` are skipped.
pub fn qfi_mixed<T: Real>(probs: &[T], o_eig: &DenseMatrix<T>, n_sites: usize) -> Result<QfiReport<T>> {
    let k = probs.len();
    if o_eig.rows() != k || o_eig.cols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: o_eig.rows(),
        });
    }
    if probs.iter().any(|&p| p < -T::tol(1e-14) || !p.is_finite()) {
        return Err(Error::InvalidProbabilities("negative or non-finite entry".into()));
    }
    let total: T = probs.iter().copied().sum();
    if (total - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::InvalidProbabilities(format!("sum = {}", total)));
    }
    let cutoff = T::tol(1e-14);
    let mut f = T::zero();
    for n in 0..k {
        for m in 0..k {
            let s = probs[n] + probs[m];
            if s > cutoff {
                let d = probs[n] - probs[m];
                f += d * d / s * o_eig[(n, m)] * o_eig[(n, m)];
            }
        }
    }
    Ok(QfiReport::new(f * T::lit(2.0), n_sites))
}

/// Mixed-state QFI for `ρ = Σ p_n |ψ_n><ψ_n|` with orthonormal `ψ_n`.
pub fn qfi_mixed_states<T: Real>(probs: &[T], states: &[Vec<T>], op: &SparseOperator<T>) -> Result<QfiReport<T>> {
    if probs.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            got: states.len(),
        });
    }
    let images: Vec<Vec<T>> = states.iter().map(|s| op.apply(s)).collect();
    let k = states.len();
    let mut o = DenseMatrix::zeros(k, k);
    for n in 0..k {
        for m in 0..k {
            o[(n, m)] = dot(&states[n], &images[m]);
        }
    }
    qfi_mixed(probs, &o, op.tag().n_sites)
}

/// Translation-averaged connected correlations
/// `G_r = (1/|pairs|) Σ_j (<Z_j Z_{j+r}> - <Z_j><Z_{j+r}>)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationProfile<T> {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub r: Vec<usize>,
    pub g: Vec<T>,
}

/// Correlations from Fock-basis probabilities `|ψ(x)|²`. Distances run over
/// `0..=N/2` on a ring and `0..N` on an open chain.
pub fn correlations_from_probabilities<T: Real>(
    probs: &[T],
    basis: &ConstrainedBasis,
) -> Result<CorrelationProfile<T>> {
    if probs.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: probs.len(),
        });
    }
    let n = basis.n_sites();
    let periodic = basis.boundary() == Boundary::Periodic;
    let r_max = if periodic { n / 2 } else { n - 1 };
    let mut z = vec![T::zero(); n];
    let mut zz = vec![vec![T::zero(); n]; r_max + 1];
    for (&x, &p) in basis.states().iter().zip(probs) {
        if p == T::zero() {
            continue;
        }
        let zx: Vec<i32> = (0..n).map(|j| z_value(x, j)).collect();
        for j in 0..n {
            z[j] += p * T::lit(zx[j] as f64);
        }
        for (r, row) in zz.iter_mut().enumerate() {
            for (j, acc) in row.iter_mut().enumerate() {
                if periodic || j + r < n {
                    *acc += p * T::lit((zx[j] * zx[(j + r) % n]) as f64);
                }
            }
        }
    }
    let g = zz
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let pairs: Vec<usize> = (0..n).filter(|&j| periodic || j + r < n).collect();
            let s: T = pairs.iter().map(|&j| row[j] - z[j] * z[(j + r) % n]).sum();
            s / T::lit(pairs.len() as f64)
        })
        .collect();
    Ok(CorrelationProfile {
        n_sites: n,
        boundary: basis.boundary(),
        r: (0..=r_max).collect(),
        g,
    })
}

pub fn connected_correlations<T: Real>(psi: &[T], basis: &ConstrainedBasis) -> Result<CorrelationProfile<T>> {
    check_norm(dot(psi, psi))?;
    let probs: Vec<T> = psi.iter().map(|&a| a * a).collect();
    correlations_from_probabilities(&probs, basis)
}

pub fn connected_correlations_complex<T: Real>(
    psi: &[Complex<T>],
    basis: &ConstrainedBasis,
) -> Result<CorrelationProfile<T>> {
    let probs: Vec<T> = psi.iter().map(|a| a.norm_sqr()).collect();
    check_norm(probs.iter().copied().sum::<T>())?;
    correlations_from_probabilities(&probs, basis)
}

/// QFI density of the staggered magnetization rebuilt from `G_r`:
/// `f_Q = (1/N) Σ_{i,j} (-1)^{i-j} G_{ij}`. Exact for any state because the
/// profile averages over all pairs at each distance.
pub fn qfi_density_from_correlations<T: Real>(profile: &CorrelationProfile<T>) -> T {
    let n = profile.n_sites;
    let sign = |r: usize| if r.is_multiple_of(2) { T::one() } else { -T::one() };
    let mut f = T::zero();
    for (&r, &g) in profile.r.iter().zip(&profile.g) {
        let weight = match profile.boundary {
            Boundary::Periodic if r == 0 || 2 * r == n => T::one(),
            Boundary::Periodic => T::lit(2.0),
            Boundary::Open if r == 0 => T::one(),
            Boundary::Open => T::lit(2.0 * (n - r) as f64 / n as f64),
        };
        f += weight * sign(r) * g;
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `|G_r| = c e^{-r/ξ}`, fitted in log space.
    Exponential,
    /// `G_r = a + b e^{-r}`, even and odd `r` fitted separately.
    OffsetExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CorrelationFit {
    Exponential {
        c: f64,
        xi: f64,
        /// RMS deviation of `c e^{-r/ξ}` from `|G_r|` over fitted points.
        residual: f64,
        excluded: Vec<usize>,
    },
    OffsetExponential {
        a_even: f64,
        b_even: f64,
        a_odd: f64,
        b_odd: f64,
        /// RMS deviation of `|a + b e^{-r}|` from `|G_r|` over fitted points.
        residual: f64,
    },
}

impl CorrelationFit {
    pub fn residual(&self) -> f64 {
        match self {
            Self::Exponential { residual, .. } | Self::OffsetExponential { residual, .. } => *residual,
        }
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points", x.len().min(y.len()))));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    if sxx <= 1e-300 {
        return Err(Error::InsufficientData("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fits distances `r ≥ r_min` of a profile (needs at least four points).
pub fn fit_correlation_decay<T: Real>(
    profile: &CorrelationProfile<T>,
    model: DecayModel,
    r_min: usize,
) -> Result<CorrelationFit> {
    let pts: Vec<(f64, f64)> = profile
        .r
        .iter()
        .zip(&profile.g)
        .filter(|(&r, _)| r >= r_min)
        .map(|(&r, g)| (r as f64, g.as_f64()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!("{} points, need 4", pts.len())));
    }
    match model {
        DecayModel::Exponential => {
            let (kept, excluded): (Vec<_>, Vec<_>) = pts.iter().partition(|(_, g)| g.abs() > 1e-300);
            let excluded = excluded.iter().map(|(r, _)| *r as usize).collect();
            let xs: Vec<f64> = kept.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = kept.iter().map(|p| p.1.abs().ln()).collect();
            let (slope, intercept) = linear_least_squares(&xs, &ys)?;
            let (c, xi) = (intercept.exp(), -1.0 / slope);
            let residual = rms(kept.iter().map(|&(r, g)| c * (-r / xi).exp() - g.abs()));
            Ok(CorrelationFit::Exponential {
                c,
                xi,
                residual,
                excluded,
            })
        }
        DecayModel::OffsetExponential => {
            let fit_parity = |parity: usize| -> Result<(f64, f64)> {
                let sel: Vec<&(f64, f64)> = pts.iter().filter(|p| p.0 as usize % 2 == parity).collect();
                let xs: Vec<f64> = sel.iter().map(|p| (-p.0).exp()).collect();
                let ys: Vec<f64> = sel.iter().map(|p| p.1).collect();
                let (b, a) = linear_least_squares(&xs, &ys)?;
                Ok((a, b))
            };
            let (a_even, b_even) = fit_parity(0)?;
            let (a_odd, b_odd) = fit_parity(1)?;
            let residual = rms(pts.iter().map(|&(r, g)| {
                let (a, b) = if (r as usize).is_multiple_of(2) {
                    (a_even, b_even)
                } else {
                    (a_odd, b_odd)
                };
                (a + b * (-r).exp()).abs() - g.abs()
            }));
            Ok(CorrelationFit::OffsetExponential {
                a_even,
                b_even,
                a_odd,
                b_odd,
                residual,
            })
        }
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), d| (s + d * d, n + 1));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Bound on the QFI density of a state with `|G_r| ≤ c e^{-r/ξ}` for
/// `r ≥ 1`: `G_0 + 2c / (e^{1/ξ} - 1)`.
pub fn thermal_qfi_bound(g0: f64, c: f64, xi: f64) -> f64 {
    g0 + 2.0 * c / ((1.0 / xi).exp() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_basis, neel, neel_prime};
    use crate::operators::build_staggered_magnetization;

    fn cat_state(n: usize) -> (ConstrainedBasis, Vec<f64>) {
        let b = enumerate_basis(n, Boundary::Periodic).unwrap();
        let mut psi = vec![0.0; b.dim()];
        psi[b.index_of(neel(n)).unwrap()] = 0.5f64.sqrt();
        psi[b.index_of(neel_prime(n)).unwrap()] = 0.5f64.sqrt();
        (b, psi)
    }

    #[test]
    fn eigenvector_has_zero_qfi() {
        let b = enumerate_basis(8, Boundary::Periodic).unwrap();
        let ms = build_staggered_magnetization(&b);
        let psi: Vec<f64> = b.fock_vector(neel(8)).unwrap();
        assert_eq!(qfi_pure(&psi, &ms).unwrap().total, 0.0);
    }

    #[test]
    fn cat_state_is_maximal() {
        let (b, psi) = cat_state(8);
        let r = qfi_pure(&psi, &build_staggered_magnetization(&b)).unwrap();
        assert!((r.total - 64.0).abs() < 1e-12);
        assert!((r.density - 8.0).abs() < 1e-12);
        assert!(r.genuine_n_partite);
        assert_eq!(r.witness_m, 4);
    }

    #[test]
    fn two_site_example() {
        let b = enumerate_basis(2, Boundary::Periodic).unwrap();
        let mut psi = vec![0.0f64; 3];
        psi[b.index_of(0b00).unwrap()] = 0.5f64.sqrt();
        psi[b.index_of(0b01).unwrap()] = 0.5f64.sqrt();
        let r = qfi_pure(&psi, &build_staggered_magnetization(&b)).unwrap();
        assert!((r.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_rejected() {
        let b = enumerate_basis(4, Boundary::Periodic).unwrap();
        let psi = vec![1.0f64; b.dim()];
        assert!(matches!(
            qfi_pure(&psi, &build_staggered_magnetization(&b)),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn witness_divisors() {
        assert_eq!(entanglement_witness(5.0, 8), 4);
        assert_eq!(entanglement_witness(1.5, 8), 1);
        assert_eq!(entanglement_witness(1.0, 8), 0);
        assert_eq!(entanglement_witness(0.3, 8), 0);
        assert_eq!(entanglement_witness(3.5, 9), 3);
        assert_eq!(entanglement_witness(7.99, 8), 4);
        assert!(QfiReport::new(64.0f64, 8).genuine_n_partite);
        assert!(!QfiReport::new(40.0f64, 8).genuine_n_partite);
    }

    #[test]
    fn mixed_two_level_closed_form() {
        let o = DenseMatrix::from_row_major(2, 2, vec![0.0f64, 1.0, 1.0, 0.0]).unwrap();
        for p in [0.0, 0.1, 0.25, 0.5, 0.9, 1.0] {
            let r = qfi_mixed(&[p, 1.0 - p], &o, 1).unwrap();
            assert!((r.total - 4.0 * (2.0 * p - 1.0f64).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_reduces_to_pure_and_vanishes_when_maximally_mixed() {
        let (b, psi) = cat_state(6);
        let ms = build_staggered_magnetization(&b);
        let pure = qfi_pure(&psi, &ms).unwrap().total;
        let mut other = vec![0.0; b.dim()];
        other[b.index_of(neel(6)).unwrap()] = 0.5f64.sqrt();
        other[b.index_of(neel_prime(6)).unwrap()] = -(0.5f64.sqrt());
        let mixed = qfi_mixed_states(&[1.0, 0.0], &[psi.clone(), other.clone()], &ms)
            .unwrap()
            .total;
        assert!((pure - mixed).abs() < 1e-10);
        let flat = qfi_mixed_states(&[0.5, 0.5], &[psi, other], &ms).unwrap().total;
        assert!(flat.abs() < 1e-12);
    }

    #[test]
    fn invalid_probabilities() {
        let o = DenseMatrix::<f64>::identity(2);
        assert!(matches!(
            qfi_mixed(&[0.7, 0.7], &o, 1),
            Err(Error::InvalidProbabilities(_))
        ));
        assert!(matches!(
            qfi_mixed(&[1.5, -0.5], &o, 1),
            Err(Error::InvalidProbabilities(_))
        ));
    }

    #[test]
    fn fock_state_has_no_connected_correlations() {
        let b = enumerate_basis(8, Boundary::Periodic).unwrap();
        let psi: Vec<f64> = b.fock_vector(0b0001_0010).unwrap();
        let p = connected_correlations(&psi, &b).unwrap();
        assert!(p.g.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn cat_state_correlations() {
        let (b, psi) = cat_state(8);
        let p = connected_correlations(&psi, &b).unwrap();
        assert_eq!(p.r, vec![0, 1, 2, 3, 4]);
        for (&r, &g) in p.r.iter().zip(&p.g) {
            assert!((g - if r % 2 == 0 { 1.0 } else { -1.0 }).abs() < 1e-12);
        }
        assert!((qfi_density_from_correlations(&p) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_fit_recovers_parameters() {
        let profile = CorrelationProfile {
            n_sites: 20,
            boundary: Boundary::Periodic,
            r: (0..=10).collect(),
            g: (0..=10).map(|r| 0.5 * (-(r as f64) / 2.0).exp()).collect::<Vec<f64>>(),
        };
        match fit_correlation_decay(&profile, DecayModel::Exponential, 1).unwrap() {
            CorrelationFit::Exponential { c, xi, .. } => {
                assert!((xi - 2.0).abs() < 1e-6);
                assert!((c - 0.5).abs() < 1e-6);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn offset_fit_recovers_parameters() {
        let profile = CorrelationProfile {
            n_sites: 30,
            boundary: Boundary::Periodic,
            r: (0..=15).collect(),
            g: (0..=15).map(|r| 0.3 + 0.2 * (-(r as f64)).exp()).collect::<Vec<f64>>(),
        };
        match fit_correlation_decay(&profile, DecayModel::OffsetExponential, 1).unwrap() {
            CorrelationFit::OffsetExponential {
                a_even,
                b_even,
                a_odd,
                b_odd,
                residual,
            } => {
                for a in [a_even, a_odd] {
                    assert!((a - 0.3).abs() < 1e-6);
                }
                for b in [b_even, b_odd] {
                    assert!((b - 0.2).abs() < 1e-6);
                }
                assert!(residual < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn too_few_points() {
        let profile = CorrelationProfile {
            n_sites: 4,
            boundary: Boundary::Periodic,
            r: vec![0, 1, 2],
            g: vec![1.0f64, 0.5, 0.2],
        };
        assert!(matches!(
            fit_correlation_decay(&profile, DecayModel::Exponential, 0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn zero_points_excluded_from_log_fit() {
        let profile = CorrelationProfile {
            n_sites: 20,
            boundary: Boundary::Periodic,
            r: (0..=6).collect(),
            g: vec![
                1.0f64,
                0.5,
                0.0,
                0.5 * (-2.0f64).exp(),
                0.5 * (-3.0f64).exp(),
                0.5 * (-4.0f64).exp(),
                0.5 * (-5.0f64).exp(),
            ],
        };
        match fit_correlation_decay(&profile, DecayModel::Exponential, 1).unwrap() {
            CorrelationFit::Exponential { excluded, .. } => assert_eq!(excluded, vec![2]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn thermal_bound_value() {
        assert!((thermal_qfi_bound(1.0, 0.5, 1.0) - (1.0 + 1.0 / (1f64.exp() - 1.0))).abs() < 1e-15);
        assert!((thermal_qfi_bound(1.0, 0.5, 1.0) - 1.582).abs() < 1e-3);
    }

    #[test]
    fn line_fit() {
        let x: Vec<f64> = (8..=18).step_by(2).map(|n| n as f64).collect();
        let y: Vec<f64> = x.iter().map(|n| 0.2 * n + 3.06).collect();
        let (s, i) = linear_least_squares(&x, &y).unwrap();
        assert!((s - 0.2).abs() < 1e-12 && (i - 3.06).abs() < 1e-12);
        assert!(linear_least_squares(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}

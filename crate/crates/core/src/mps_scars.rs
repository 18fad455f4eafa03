//! Exact matrix-product eigenstates of the PXP chain with bond dimensions 2
//! and 3: construction, eigenstate checks, transfer-matrix QFI of the
//! staggered magnetization and its closed forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Boundary, Config, ConstrainedBasis};
use crate::linalg::{dot, norm, DenseMatrix, LinearOperator};
use crate::operators::SparseOperator;
use crate::scalar::{Field, Real};

/// Which exact state. `Gamma` uses boundary vectors `v_1 = (1, 1)` and
/// `v_2 = (1, -1)` on an open chain; `Phi1`/`Phi2` live on a ring and
/// differ by one lattice translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MpsKind {
    Phi1,
    Phi2,
    Gamma { alpha: u8, beta: u8 },
}

impl MpsKind {
    pub const ALL: [MpsKind; 6] = [
        MpsKind::Phi1,
        MpsKind::Phi2,
        MpsKind::Gamma { alpha: 1, beta: 1 },
        MpsKind::Gamma { alpha: 1, beta: 2 },
        MpsKind::Gamma { alpha: 2, beta: 1 },
        MpsKind::Gamma { alpha: 2, beta: 2 },
    ];

    pub fn boundary(&self) -> Boundary {
        match self {
            Self::Phi1 | Self::Phi2 => Boundary::Periodic,
            Self::Gamma { .. } => Boundary::Open,
        }
    }
}

impl fmt::Display for MpsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Phi1 => write!(f, "phi1"),
            Self::Phi2 => write!(f, "phi2"),
            Self::Gamma { alpha, beta } => write!(f, "gamma{alpha}{beta}"),
        }
    }
}

impl FromStr for MpsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi1" => Ok(Self::Phi1),
            "phi2" => Ok(Self::Phi2),
            "gamma11" => Ok(Self::Gamma { alpha: 1, beta: 1 }),
            "gamma12" => Ok(Self::Gamma { alpha: 1, beta: 2 }),
            "gamma21" => Ok(Self::Gamma { alpha: 2, beta: 1 }),
            "gamma22" => Ok(Self::Gamma { alpha: 2, beta: 2 }),
            _ => Err(Error::InvalidArgument(format!("unknown MPS kind '{s}'"))),
        }
    }
}

impl TryFrom<String> for MpsKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MpsKind> for String {
    fn from(k: MpsKind) -> String {
        k.to_string()
    }
}

/// `B^σ` (2×3) and `C^σ` (3×2), indexed by `σ` (1 = excited).
#[derive(Debug, Clone)]
pub struct MpsTensors<T> {
    pub b: [DenseMatrix<T>; 2],
    pub c: [DenseMatrix<T>; 2],
}

impl<T: Real> MpsTensors<T> {
    pub fn new() -> Self {
        let s = T::lit(2.0).sqrt();
        let (o, z, l) = (T::one(), T::zero(), -T::one());
        let m = |r, c, v: Vec<T>| DenseMatrix::from_row_major(r, c, v).expect("fixed shape");
        Self {
            b: [m(2, 3, vec![o, z, z, z, o, z]), m(2, 3, vec![z, z, z, s, z, s])],
            c: [m(3, 2, vec![z, l, o, z, z, z]), m(3, 2, vec![s, z, z, z, -s, z])],
        }
    }

    /// Tensor pair used on `site` for the given kind.
    fn site(&self, kind: MpsKind, site: usize) -> &[DenseMatrix<T>; 2] {
        let b_first = site.is_multiple_of(2);
        match (kind, b_first) {
            (MpsKind::Phi2, true) => &self.c,
            (MpsKind::Phi2, false) => &self.b,
            (_, true) => &self.b,
            (_, false) => &self.c,
        }
    }
}

impl<T: Real> Default for MpsTensors<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn boundary_vector<T: Real>(a: u8) -> Result<[T; 2]> {
    match a {
        1 => Ok([T::one(), T::one()]),
        2 => Ok([T::one(), -T::one()]),
        _ => Err(Error::InvalidArgument(format!("boundary index {a} not in {{1, 2}}"))),
    }
}

fn check_sites(n: usize) -> Result<()> {
    if !n.is_multiple_of(2) || n < 4 {
        return Err(Error::InvalidSiteCount {
            n,
            min: 4,
            max: usize::MAX,
        });
    }
    Ok(())
}

fn row_times<T: Real>(v: &[T], m: &DenseMatrix<T>) -> Vec<T> {
    (0..m.cols())
        .map(|j| v.iter().enumerate().map(|(i, &x)| x * m[(i, j)]).sum())
        .collect()
}

/// Unnormalized amplitude of a configuration (bit `j` = site `j`), valid
/// for any bit string including blockade-violating ones.
pub fn mps_amplitude<T: Real>(tensors: &MpsTensors<T>, kind: MpsKind, x: Config, n: usize) -> Result<T> {
    check_sites(n)?;
    let sigma = |j: usize| ((x >> j) & 1) as usize;
    match kind {
        MpsKind::Phi1 | MpsKind::Phi2 => {
            let d = tensors.site(kind, 0)[0].rows();
            let mut tr = T::zero();
            for start in 0..d {
                let mut v = vec![T::zero(); d];
                v[start] = T::one();
                for j in 0..n {
                    v = row_times(&v, &tensors.site(kind, j)[sigma(j)]);
                }
                tr += v[start];
            }
            Ok(tr)
        }
        MpsKind::Gamma { alpha, beta } => {
            let mut v = boundary_vector::<T>(alpha)?.to_vec();
            for j in 0..n {
                v = row_times(&v, &tensors.site(kind, j)[sigma(j)]);
            }
            Ok(dot(&v, &boundary_vector::<T>(beta)?))
        }
    }
}

/// Normalized state vector over `basis`. The basis boundary must match the
/// kind.
pub fn build_mps_scar<T: Real>(basis: &ConstrainedBasis, kind: MpsKind) -> Result<Vec<T>> {
    if basis.boundary() != kind.boundary() {
        return Err(Error::InvalidArgument(format!(
            "{kind} requires {:?} boundaries",
            kind.boundary()
        )));
    }
    let t = MpsTensors::new();
    let n = basis.n_sites();
    let mut psi: Vec<T> = basis
        .states()
        .iter()
        .map(|&x| mps_amplitude(&t, kind, x, n))
        .collect::<Result<_>>()?;
    let nrm = crate::linalg::normalize(&mut psi);
    if nrm == T::zero() {
        return Err(Error::InvalidArgument(format!("{kind} vanishes at N = {n}")));
    }
    Ok(psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCheck {
    pub energy: f64,
    pub residual: f64,
}

/// `E = <ψ|H|ψ>` and `‖Hψ - Eψ‖` for a normalized state.
pub fn eigen_check<T: Real>(h: &SparseOperator<T>, psi: &[T]) -> EigenCheck {
    let hp = h.apply(psi);
    let e = dot(psi, &hp);
    let r: Vec<T> = hp.iter().zip(psi).map(|(&a, &b)| a - e * b).collect();
    EigenCheck {
        energy: e.as_f64(),
        residual: norm(&r).as_f64(),
    }
}

/// As [`eigen_check`], failing when the residual exceeds `1e-10`.
pub fn verify_eigenstate<T: Real>(h: &SparseOperator<T>, psi: &[T]) -> Result<EigenCheck> {
    let c = eigen_check(h, psi);
    if c.residual > 1e-10 {
        return Err(Error::NotEigenstate(c.residual));
    }
    Ok(c)
}

/// Truncated series `a0 + a1 λ + a2 λ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet<T>([T; 3]);

impl<T: Real> Jet<T> {
    fn zero() -> Self {
        Self([T::zero(); 3])
    }

    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
        ])
    }

    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    fn scale(self, s: T) -> Self {
        Self([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// Row-major matrix of jets.
#[derive(Debug, Clone)]
struct JetMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Jet<T>>,
}

impl<T: Real> JetMatrix<T> {
    fn identity(n: usize) -> Self {
        let mut data = vec![Jet::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = Jet([T::one(), T::zero(), T::zero()]);
        }
        Self { rows: n, cols: n, data }
    }

    fn matmul(&self, o: &Self) -> Self {
        let mut data = vec![Jet::zero(); self.rows * o.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.0 == [T::zero(); 3] {
                    continue;
                }
                for j in 0..o.cols {
                    data[i * o.cols + j] = data[i * o.cols + j].add(a.mul(o.data[k * o.cols + j]));
                }
            }
        }
        Self {
            rows: self.rows,
            cols: o.cols,
            data,
        }
    }

    /// Divides by the largest constant term so long chains stay finite.
    fn renormalize(&mut self) {
        let m = self.data.iter().fold(T::zero(), |m, j| m.max(j.0[0].abs()));
        if m > T::zero() {
            for j in &mut self.data {
                *j = j.scale(T::one() / m);
            }
        }
    }
}

/// `Σ_σ e^{λ s(σ)} A^σ ⊗ A^σ` with `s = ±½` the site's staggered weight.
fn doubled_transfer<T: Real>(a: &[DenseMatrix<T>; 2], stagger: T) -> JetMatrix<T> {
    let (r, c) = (a[0].rows(), a[0].cols());
    let mut data = vec![Jet::zero(); r * r * c * c];
    for (sigma, m) in a.iter().enumerate() {
        let s = if sigma == 1 { stagger } else { -stagger };
        let w = Jet([T::one(), s, s * s / T::lit(2.0)]);
        for i1 in 0..r {
            for i2 in 0..r {
                for j1 in 0..c {
                    for j2 in 0..c {
                        let v = m[(i1, j1)] * m[(i2, j2)];
                        if v != T::zero() {
                            let idx = (i1 * r + i2) * (c * c) + j1 * c + j2;
                            data[idx] = data[idx].add(w.scale(v));
                        }
                    }
                }
            }
        }
    }
    JetMatrix {
        rows: r * r,
        cols: c * c,
        data,
    }
}

/// `(<M_S>, <M_S²>)` from the generating function `<ψ|e^{λ M_S}|ψ>`
/// expanded to second order, contracted site by site.
pub fn mps_ms_moments<T: Real>(n: usize, kind: MpsKind) -> Result<(T, T)> {
    check_sites(n)?;
    let t = MpsTensors::<T>::new();
    let half = T::lit(0.5);
    let transfers: [JetMatrix<T>; 2] = [
        doubled_transfer(t.site(kind, 0), half),
        doubled_transfer(t.site(kind, 1), -half),
    ];
    let z = match kind {
        MpsKind::Phi1 | MpsKind::Phi2 => {
            let mut acc = JetMatrix::identity(transfers[0].rows);
            for j in 0..n {
                acc = acc.matmul(&transfers[j % 2]);
                acc.renormalize();
            }
            (0..acc.rows).fold(Jet::zero(), |s, i| s.add(acc.data[i * acc.cols + i]))
        }
        MpsKind::Gamma { alpha, beta } => {
            let (va, vb) = (boundary_vector::<T>(alpha)?, boundary_vector::<T>(beta)?);
            let to_row = |v: [T; 2]| JetMatrix {
                rows: 1,
                cols: 4,
                data: (0..4)
                    .map(|k| Jet([v[k / 2] * v[k % 2], T::zero(), T::zero()]))
                    .collect(),
            };
            let mut acc = to_row(va);
            for j in 0..n {
                acc = acc.matmul(&transfers[j % 2]);
                acc.renormalize();
            }
            let right = to_row(vb);
            (0..4).fold(Jet::zero(), |s, k| s.add(acc.data[k].mul(right.data[k])))
        }
    };
    if z.0[0] == T::zero() {
        return Err(Error::InvalidArgument(format!("{kind} vanishes at N = {n}")));
    }
    Ok((z.0[1] / z.0[0], T::lit(2.0) * z.0[2] / z.0[0]))
}

/// QFI density `4 Var(M_S) / N` from the transfer-matrix contraction.
pub fn mps_qfi_transfer<T: Real>(n: usize, kind: MpsKind) -> Result<T> {
    let (m, m2) = mps_ms_moments::<T>(n, kind)?;
    Ok(T::lit(4.0) * (m2 - m * m) / T::lit(n as f64))
}

/// Closed form with `M = N/2` and `r = 3^{-M}`:
/// `4(1 - r)/(1 + (2 + (-1)^M) r)` on a ring and
/// `4((1 - 1/M) + r/M)/(1 + (-1)^{M+α+β} r)` on an open chain.
pub fn mps_qfi_closed_form<F: Field>(n: usize, kind: MpsKind) -> Result<F> {
    check_sites(n)?;
    let m = n / 2;
    let mut r = F::one();
    for _ in 0..m {
        r = r / F::int(3);
    }
    let sign = |e: usize| {
        if e.is_multiple_of(2) {
            F::one()
        } else {
            F::zero() - F::one()
        }
    };
    let four = F::int(4);
    Ok(match kind {
        MpsKind::Phi1 | MpsKind::Phi2 => four * (F::one() - r.clone()) / (F::one() + (F::int(2) + sign(m)) * r),
        MpsKind::Gamma { alpha, beta } => {
            let inv_m = F::one() / F::int(m as i64);
            let numerator = F::one() - inv_m.clone() + r.clone() * inv_m;
            four * numerator / (F::one() + sign(m + alpha as usize + beta as usize) * r)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_basis, is_blockade_valid, translate};
    use crate::operators::{build_pxp, build_staggered_magnetization};
    use crate::qfi::qfi_pure;
    use num_rational::BigRational;

    fn rational(p: i64, q: i64) -> BigRational {
        BigRational::int(p) / BigRational::int(q)
    }

    #[test]
    fn tensor_products() {
        let t = MpsTensors::<f64>::new();
        let bc = t.b[0].matmul(&t.c[0]).unwrap();
        assert_eq!(bc.as_slice(), &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(mps_amplitude(&t, MpsKind::Phi1, 0, 4).unwrap(), -2.0);
    }

    #[test]
    fn blockade_violations_have_zero_amplitude() {
        let t = MpsTensors::<f64>::new();
        let n = 8;
        for kind in MpsKind::ALL {
            for x in 0..(1u64 << n) {
                if !is_blockade_valid(x, n, kind.boundary()) {
                    assert!(mps_amplitude(&t, kind, x, n).unwrap().abs() < 1e-12, "{kind} {x:b}");
                }
            }
        }
    }

    #[test]
    fn phi2_is_translated_phi1() {
        for n in [4usize, 6, 8, 10, 12] {
            let b = enumerate_basis(n, Boundary::Periodic).unwrap();
            let p1: Vec<f64> = build_mps_scar(&b, MpsKind::Phi1).unwrap();
            let p2: Vec<f64> = build_mps_scar(&b, MpsKind::Phi2).unwrap();
            let shifted = |psi: &[f64], s: usize| -> Vec<f64> {
                let mut out = vec![0.0; b.dim()];
                for (i, &x) in b.states().iter().enumerate() {
                    out[b.index_of(translate(x, s, n)).unwrap()] = psi[i];
                }
                out
            };
            assert!((dot(&shifted(&p1, 1), &p2).abs() - 1.0).abs() < 1e-12);
            assert!((dot(&shifted(&p1, 2), &p1).abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_eigenstates() {
        let n = 8;
        let ring = enumerate_basis(n, Boundary::Periodic).unwrap();
        let chain = enumerate_basis(n, Boundary::Open).unwrap();
        let c = verify_eigenstate(
            &build_pxp(&ring, 1.0),
            &build_mps_scar::<f64>(&ring, MpsKind::Phi1).unwrap(),
        )
        .unwrap();
        assert!(c.energy.abs() < 1e-12);
        let h = build_pxp(&chain, 1.0);
        let energies: Vec<f64> = MpsKind::ALL[2..]
            .iter()
            .map(|&k| {
                verify_eigenstate(&h, &build_mps_scar::<f64>(&chain, k).unwrap())
                    .unwrap()
                    .energy
            })
            .collect();
        let s2 = 2f64.sqrt();
        assert!(energies.iter().any(|e| (e - s2).abs() < 1e-10));
        assert!(energies.iter().any(|e| (e + s2).abs() < 1e-10));
    }

    #[test]
    fn boundary_mismatch_rejected() {
        let ring = enumerate_basis(6, Boundary::Periodic).unwrap();
        assert!(build_mps_scar::<f64>(&ring, MpsKind::Gamma { alpha: 1, beta: 1 }).is_err());
        assert!("gamma31".parse::<MpsKind>().is_err());
        assert_eq!(
            "gamma12".parse::<MpsKind>().unwrap(),
            MpsKind::Gamma { alpha: 1, beta: 2 }
        );
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(
            mps_qfi_closed_form::<BigRational>(4, MpsKind::Phi1).unwrap(),
            rational(8, 3)
        );
        assert_eq!(
            mps_qfi_closed_form::<BigRational>(8, MpsKind::Phi1).unwrap(),
            rational(80, 21)
        );
        // Open chain, M = 2: amplitudes (-2, ±√2 ×4, 2, 2) with norm² 20 give
        // <M_S> = 0 and <M_S²> = 2.
        assert_eq!(
            mps_qfi_closed_form::<BigRational>(4, MpsKind::Gamma { alpha: 1, beta: 1 }).unwrap(),
            rational(2, 1)
        );
        assert_eq!(
            mps_qfi_closed_form::<BigRational>(8, MpsKind::Gamma { alpha: 1, beta: 2 }).unwrap(),
            rational(61, 20)
        );
        // Huge M stays finite in floating point.
        let f: f64 = mps_qfi_closed_form(4000, MpsKind::Phi1).unwrap();
        assert!((f - 4.0).abs() < 1e-15);
    }

    #[test]
    fn transfer_matches_dense() {
        for n in (4..=14).step_by(2) {
            for kind in MpsKind::ALL {
                let b = enumerate_basis(n, kind.boundary()).unwrap();
                let psi: Vec<f64> = build_mps_scar(&b, kind).unwrap();
                let dense = qfi_pure(&psi, &build_staggered_magnetization(&b)).unwrap().density;
                let tm: f64 = mps_qfi_transfer(n, kind).unwrap();
                assert!((dense - tm).abs() < 1e-10, "{kind} N={n}: {dense} vs {tm}");
            }
        }
    }

    #[test]
    fn closed_form_matches_transfer_and_approaches_four() {
        for kind in MpsKind::ALL {
            let mut prev = 0.0;
            for n in (4..=40).step_by(2) {
                let t: f64 = mps_qfi_transfer(n, kind).unwrap();
                let c: f64 = mps_qfi_closed_form(n, kind).unwrap();
                assert!((t - c).abs() < 1e-12, "{kind} N={n}");
                assert!(c < 4.0);
                if n >= 8 {
                    assert!(c > prev, "{kind} N={n}");
                }
                prev = c;
            }
        }
    }

    #[test]
    fn long_chains_stay_finite() {
        let f: f64 = mps_qfi_transfer(4000, MpsKind::Phi1).unwrap();
        assert!(f.is_finite() && f < 4.0 && f > 3.99);
    }
}

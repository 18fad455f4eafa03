//! Closed forms for towers generated by an su(2) spectrum-generating algebra,
//! checked against an explicit spin-S representation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LinearOperator};
use crate::scalar::{Field, Real};

/// Tower member `n` of a system of `n_sites` sites with ladder spacing
/// `omega` and ground-state energy density `eps0` (`E_0 = -N ε_0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Su2TowerSpec<F> {
    pub n_sites: usize,
    pub omega: F,
    pub eps0: F,
    pub n: usize,
}

impl<F: Field + PartialOrd> Su2TowerSpec<F> {
    pub fn new(n_sites: usize, omega: F, eps0: F, n: usize) -> Result<Self> {
        if n_sites == 0 || n > n_sites {
            return Err(Error::InvalidArgument(format!("tower index {n} outside 0..={n_sites}")));
        }
        if omega <= F::zero() || eps0 <= F::zero() {
            return Err(Error::InvalidArgument("omega and eps0 must be positive".into()));
        }
        Ok(Self {
            n_sites,
            omega,
            eps0,
            n,
        })
    }

    /// Spin-S correspondence `2ε_0/ω = 1`.
    pub fn unit_ratio(n_sites: usize, n: usize) -> Result<Self> {
        Self::new(n_sites, F::int(2), F::int(1), n)
    }

    /// `2ε_0/ω`.
    pub fn ratio(&self) -> F {
        F::int(2) * self.eps0.clone() / self.omega.clone()
    }
}

/// `<S_n|J⁺J⁻|S_n>/N² = x n/N - (n/N)² + n/N²` with `x = 2ε_0/ω`.
pub fn su2_jpjm_density<F: Field + PartialOrd>(spec: &Su2TowerSpec<F>) -> F {
    let n_sites = F::int(spec.n_sites as i64);
    let n = F::int(spec.n as i64);
    let q = n.clone() / n_sites.clone();
    spec.ratio() * q.clone() - q.clone() * q + n / (n_sites.clone() * n_sites)
}

/// QFI density of the tower member for `J^x`: `2(x - n/N) n + x`.
pub fn su2_tower_qfi<F: Field + PartialOrd>(spec: &Su2TowerSpec<F>) -> F {
    let x = spec.ratio();
    let n = F::int(spec.n as i64);
    let q = n.clone() / F::int(spec.n_sites as i64);
    F::int(2) * (x.clone() - q) * n + x
}

/// Spin-`S` representation with basis `|S, m>`, `m = -S..=S` in ascending
/// order. Only the ladder coefficients are stored.
#[derive(Debug, Clone)]
pub struct SpinOracle<T> {
    two_s: usize,
    /// `<m+1|J⁺|m>` for consecutive `m`.
    ladder: Vec<T>,
}

pub const MAX_ORACLE_DIM: usize = 10_000;

impl<T: Real> SpinOracle<T> {
    pub fn new(two_s: usize) -> Result<Self> {
        if two_s + 1 > MAX_ORACLE_DIM {
            return Err(Error::InvalidArgument(format!(
                "2S + 1 = {} exceeds {MAX_ORACLE_DIM}",
                two_s + 1
            )));
        }
        let s = T::lit(two_s as f64 / 2.0);
        let ladder = (0..two_s)
            .map(|i| {
                let m = T::lit(i as f64) - s;
                (s * (s + T::one()) - m * (m + T::one())).sqrt()
            })
            .collect();
        Ok(Self { two_s, ladder })
    }

    pub fn dim(&self) -> usize {
        self.two_s + 1
    }

    pub fn spin(&self) -> T {
        T::lit(self.two_s as f64 / 2.0)
    }

    pub fn m(&self, i: usize) -> T {
        T::lit(i as f64) - self.spin()
    }

    pub fn apply_jp(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        for (i, &c) in self.ladder.iter().enumerate() {
            out[i + 1] = c * v[i];
        }
        out
    }

    pub fn apply_jm(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        for (i, &c) in self.ladder.iter().enumerate() {
            out[i] = c * v[i + 1];
        }
        out
    }

    pub fn apply_jz(&self, v: &[T]) -> Vec<T> {
        v.iter().enumerate().map(|(i, &x)| self.m(i) * x).collect()
    }

    pub fn jp(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.dim(), self.dim());
        for (i, &c) in self.ladder.iter().enumerate() {
            m[(i + 1, i)] = c;
        }
        m
    }

    pub fn jm(&self) -> DenseMatrix<T> {
        self.jp().transpose()
    }

    pub fn jz(&self) -> DenseMatrix<T> {
        DenseMatrix::from_diagonal(&(0..self.dim()).map(|i| self.m(i)).collect::<Vec<_>>())
    }

    /// `J^x = (J⁺ + J⁻)/2` as an operator.
    pub fn jx(&self) -> JxOperator<'_, T> {
        JxOperator(self)
    }

    /// `|S_n> ∝ (J⁺)^n |S, -S>`, built by repeated application.
    pub fn tower_state(&self, n: usize) -> Result<Vec<T>> {
        if n > self.two_s {
            return Err(Error::InvalidArgument(format!("tower index {n} > 2S = {}", self.two_s)));
        }
        let mut v = vec![T::zero(); self.dim()];
        v[0] = T::one();
        for step in 0..n {
            v = self.apply_jp(&v);
            if crate::linalg::normalize(&mut v) == T::zero() {
                return Err(Error::LadderTerminated(step));
            }
        }
        Ok(v)
    }

    /// Largest entry of `[J^z, J^±] ∓ J^±` and `[J⁺, J⁻] - 2J^z`.
    pub fn commutator_residual(&self) -> T {
        let (jp, jm, jz) = (self.jp(), self.jm(), self.jz());
        let comm = |a: &DenseMatrix<T>, b: &DenseMatrix<T>| a.matmul(b).unwrap().sub(&b.matmul(a).unwrap()).unwrap();
        let r1 = comm(&jz, &jp).sub(&jp).unwrap().max_abs();
        let r2 = comm(&jz, &jm).sub(&jm.scale(-T::one())).unwrap().max_abs();
        let r3 = comm(&jp, &jm).sub(&jz.scale(T::lit(2.0))).unwrap().max_abs();
        r1.max(r2).max(r3)
    }

    /// `<v|J⁺J⁻|v> = ‖J⁻ v‖²`.
    pub fn jpjm_expectation(&self, v: &[T]) -> T {
        self.apply_jm(v).iter().map(|&x| x * x).sum()
    }

    /// `4 Var(J^x)` in state `v`.
    pub fn jx_fisher(&self, v: &[T]) -> T {
        let jx = self.jx();
        let w = jx.apply(v);
        let mean = crate::linalg::dot(v, &w);
        let mean_sq = crate::linalg::dot(&w, &w);
        T::lit(4.0) * (mean_sq - mean * mean).max(T::zero())
    }
}

pub struct JxOperator<'a, T>(&'a SpinOracle<T>);

impl<T: Real> LinearOperator<T> for JxOperator<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        let (p, m) = (self.0.apply_jp(x), self.0.apply_jm(x));
        let half = T::lit(0.5);
        for ((yi, a), b) in y.iter_mut().zip(p).zip(m) {
            *yi = half * (a + b);
        }
    }
}

/// One row of the tower table: closed forms next to oracle values.
#[derive(Debug, Clone, Serialize)]
pub struct TowerRow {
    pub n: usize,
    pub f_q_closed_form: f64,
    pub f_q_oracle: f64,
    pub jpjm_density: f64,
    pub jpjm_oracle: f64,
}

/// Tower of a spin `N/2` with `2ε_0/ω = 1`, closed forms in exact rational
/// arithmetic.
pub fn tower_table(n_sites: usize) -> Result<Vec<TowerRow>> {
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    let oracle = SpinOracle::<f64>::new(n_sites)?;
    let nn = n_sites as f64;
    (0..=n_sites)
        .map(|n| {
            let spec = Su2TowerSpec::<BigRational>::unit_ratio(n_sites, n)?;
            let state = oracle.tower_state(n)?;
            Ok(TowerRow {
                n,
                f_q_closed_form: su2_tower_qfi(&spec).to_f64().unwrap_or(f64::NAN),
                f_q_oracle: oracle.jx_fisher(&state) / nn,
                jpjm_density: su2_jpjm_density(&spec).to_f64().unwrap_or(f64::NAN),
                jpjm_oracle: oracle.jpjm_expectation(&state) / (nn * nn),
            })
        })
        .collect()
}

/// Truncated bosonic ladder `a†|k> = √(k+1)|k+1>` on `0..dim`. Returns
/// `<n|a† a|n> / N²` computed from the matrix.
pub fn oscillator_jpjm_density<T: Real>(n: usize, n_sites: usize) -> T {
    let dim = n + 2;
    let mut v = vec![T::zero(); dim];
    v[n] = T::one();
    // a|n> = √n |n-1>
    let lowered: T = (1..dim).map(|k| T::lit(k as f64).sqrt() * v[k]).map(|x| x * x).sum();
    let nn = T::lit(n_sites as f64);
    lowered / (nn * nn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn jpjm_density_values() {
        let spec = Su2TowerSpec::<BigRational>::unit_ratio(8, 4).unwrap();
        assert_eq!(su2_jpjm_density(&spec), r(5, 16));
        let zero = Su2TowerSpec::<BigRational>::unit_ratio(8, 0).unwrap();
        assert_eq!(su2_jpjm_density(&zero), r(0, 1));
    }

    #[test]
    fn tower_qfi_values() {
        let spec = Su2TowerSpec::<BigRational>::unit_ratio(8, 4).unwrap();
        assert_eq!(su2_tower_qfi(&spec), r(5, 1));
        let general = Su2TowerSpec::new(10, 2.0f64, 1.5, 0).unwrap();
        assert_eq!(su2_tower_qfi(&general), 1.5);
    }

    #[test]
    fn spec_validation() {
        assert!(Su2TowerSpec::new(8, 1.0f64, 1.0, 9).is_err());
        assert!(Su2TowerSpec::new(8, 0.0f64, 1.0, 2).is_err());
    }

    #[test]
    fn oracle_commutators() {
        for two_s in 1..=40 {
            assert!(SpinOracle::<f64>::new(two_s).unwrap().commutator_residual() <= 1e-12);
        }
    }

    #[test]
    fn oracle_expectations() {
        let o = SpinOracle::<f64>::new(4).unwrap();
        let s1 = o.tower_state(1).unwrap();
        assert!((o.jpjm_expectation(&s1) - 4.0).abs() < 1e-12);
        // Dicke m = 0 state of spin 4.
        let o8 = SpinOracle::<f64>::new(8).unwrap();
        let mid = o8.tower_state(4).unwrap();
        assert!((o8.jx_fisher(&mid) - 40.0).abs() < 1e-12);
        let jx = o8.jx();
        let w = jx.apply(&mid);
        assert!(crate::linalg::dot(&mid, &w).abs() < 1e-15);
        let jp2 = o8.apply_jp(&o8.apply_jp(&mid));
        assert!(crate::linalg::dot(&mid, &jp2).abs() < 1e-15);
    }

    #[test]
    fn table_matches_closed_forms() {
        for n_sites in 2..=24 {
            for row in tower_table(n_sites).unwrap() {
                assert!(
                    (row.f_q_closed_form - row.f_q_oracle).abs() <= 1e-12,
                    "{n_sites} {row:?}"
                );
                assert!((row.jpjm_density - row.jpjm_oracle).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn concave_with_super_extensive_peak() {
        let peak = |n_sites: usize| {
            (0..=n_sites)
                .map(|n| su2_tower_qfi(&Su2TowerSpec::unit_ratio(n_sites, n).unwrap()))
                .fold(f64::MIN, f64::max)
        };
        assert!(peak(20) > peak(10) && peak(40) > peak(20));
        let f: Vec<f64> = (0..=12)
            .map(|n| su2_tower_qfi(&Su2TowerSpec::unit_ratio(12, n).unwrap()))
            .collect();
        for w in f.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] < 0.0);
        }
    }

    #[test]
    fn oscillator_has_no_long_range_order() {
        assert!((oscillator_jpjm_density::<f64>(5, 10) - 0.05).abs() < 1e-15);
        assert!(oscillator_jpjm_density::<f64>(50, 100) < 0.01);
    }

    #[test]
    fn oracle_size_limit() {
        assert!(SpinOracle::<f64>::new(MAX_ORACLE_DIM).is_err());
        assert!(SpinOracle::<f64>::new(MAX_ORACLE_DIM - 1).is_ok());
    }
}

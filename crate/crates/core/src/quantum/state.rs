use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::crosstalk::CrosstalkMatrix;
use super::{CMatrix, CVector};
use crate::error::{Error, Result};

/// Leaf size of the pairwise ensemble summation.
const PAIRWISE_LEAF: usize = 16;

/// Maximally entangled `Σ_j |j⟩|j⟩ / √d`, index `a·d + b` for Alice `a`,
/// Bob `b`.
pub fn maximally_entangled(d: usize) -> CVector {
    let amp = Complex64::from((d as f64).sqrt().recip());
    CVector::from_fn(d * d, |k, _| if k / d == k % d { amp } else { Complex64::new(0.0, 0.0) })
}

/// Post-selected two-photon state for a channel matrix acting on Bob's
/// photon: amplitude at (Alice `a`, Bob `b`) is `m[b, a] / √d`.
pub fn postselect_from_matrix(m: &CMatrix) -> CVector {
    let d = m.nrows();
    let scale = (d as f64).sqrt().recip();
    CVector::from_fn(d * d, |k, _| m[(k % d, k / d)] * scale)
}

/// Unnormalized post-selected state; its squared norm is the photon's
/// survival probability for this realization.
pub fn postselect_state(c: &CrosstalkMatrix) -> CVector {
    postselect_from_matrix(c.matrix())
}

/// Normalized two-qudit state together with the survival fraction of the
/// ensemble it was averaged from.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    d: usize,
    rho: CMatrix,
    survival: f64,
}

impl DensityMatrix {
    /// Wraps `rho` on C^d ⊗ C^d; rescales to unit trace.
    pub fn new(d: usize, rho: CMatrix, survival: f64) -> Result<Self> {
        if rho.nrows() != d * d || rho.ncols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: rho.nrows(),
            });
        }
        if !(0.0..=1.0 + 1e-9).contains(&survival) {
            return Err(Error::InvalidParameter(format!("survival fraction {survival} outside [0, 1]")));
        }
        let tr = rho.trace().re;
        if !(tr > 0.0) {
            return Err(Error::DegenerateEnsemble);
        }
        let rho = (&rho + rho.adjoint()) * Complex64::from(0.5 / tr);
        Ok(Self {
            d,
            rho,
            survival: survival.min(1.0),
        })
    }

    pub fn pure(psi: &CVector, survival: f64) -> Result<Self> {
        let d = (psi.len() as f64).sqrt().round() as usize;
        Self::new(d, psi * psi.adjoint(), survival)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let n = d * d;
        Self {
            d,
            rho: CMatrix::identity(n, n) * Complex64::from(1.0 / n as f64),
            survival: 1.0,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn survival(&self) -> f64 {
        self.survival
    }

    pub fn with_survival(mut self, survival: f64) -> Self {
        self.survival = survival;
        self
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.rho.clone()).eigenvalues.min()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &CVector) -> f64 {
        (psi.adjoint() * &self.rho * psi)[(0, 0)].re
    }

    /// Overlap with the maximally entangled state.
    pub fn fidelity_with_max_entangled(&self) -> f64 {
        self.expectation(&maximally_entangled(self.d))
    }

    /// Alice's reduced state `tr_B ρ`.
    pub fn reduced_alice(&self) -> CMatrix {
        let d = self.d;
        CMatrix::from_fn(d, d, |a, a2| (0..d).map(|b| self.rho[(a * d + b, a2 * d + b)]).sum())
    }

    /// Bob's reduced state `tr_A ρ`.
    pub fn reduced_bob(&self) -> CMatrix {
        let d = self.d;
        CMatrix::from_fn(d, d, |b, b2| (0..d).map(|a| self.rho[(a * d + b, a * d + b2)]).sum())
    }
}

fn outer_sum(states: &[CVector]) -> CMatrix {
    if states.len() <= PAIRWISE_LEAF {
        let n = states[0].len();
        let mut acc = CMatrix::zeros(n, n);
        for s in states {
            acc.gerc(Complex64::new(1.0, 0.0), s, s, Complex64::new(1.0, 0.0));
        }
        acc
    } else {
        let mid = states.len() / 2;
        outer_sum(&states[..mid]) + outer_sum(&states[mid..])
    }
}

/// Ensemble state `⟨|Φ⟩⟨Φ|⟩ / T` with `T` the mean squared norm. Sums in
/// a fixed pairwise order so the result does not depend on how the
/// ensemble was produced.
pub fn average_density_matrix(states: &[CVector]) -> Result<DensityMatrix> {
    let first = states.first().ok_or(Error::DegenerateEnsemble)?;
    let n = first.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::DimensionMismatch { expected: d * d, found: n });
    }
    if let Some(bad) = states.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let sum = outer_sum(states);
    let count = states.len() as f64;
    let survival = sum.trace().re / count;
    if !(survival > 0.0) {
        return Err(Error::DegenerateEnsemble);
    }
    DensityMatrix::new(d, sum, survival)
}

/// `−tr(ρ log2 ρ)`, ignoring eigenvalues below 1e-15.
pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    SymmetricEigen::new(rho.clone())
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::EncodingSubspace;

    #[test]
    fn identity_channel_gives_maximally_entangled_state() {
        let c = CrosstalkMatrix::identity(EncodingSubspace::new(vec![-1, 0, 1]).unwrap());
        let psi = postselect_state(&c);
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert!((psi - maximally_entangled(3)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_channel_survival() {
        let t = [0.9, 0.5, 0.1];
        let m = CMatrix::from_diagonal(&CVector::from_fn(3, |i, _| Complex64::from(t[i])));
        let psi = postselect_from_matrix(&m);
        let expected: f64 = t.iter().map(|x| x * x).sum::<f64>() / 3.0;
        assert!((psi.norm_squared() - expected).abs() < 1e-15);
        assert_eq!(postselect_from_matrix(&CMatrix::zeros(3, 3)).norm(), 0.0);
    }

    #[test]
    fn amplitude_layout_is_alice_major() {
        let mut m = CMatrix::zeros(2, 2);
        m[(1, 0)] = Complex64::new(0.3, 0.4); // sent 0, received 1
        let psi = postselect_from_matrix(&m);
        assert!((psi[1] - m[(1, 0)] / 2f64.sqrt()).norm() < 1e-15);
        assert_eq!(psi[2], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn averaging_renormalizes() {
        let phi = maximally_entangled(2);
        let rho = average_density_matrix(&[phi.clone(), CVector::zeros(4)]).unwrap();
        assert!((rho.survival() - 0.5).abs() < 1e-15);
        assert!((rho.fidelity_with_max_entangled() - 1.0).abs() < 1e-12);
        assert!(matches!(
            average_density_matrix(&[CVector::zeros(4)]),
            Err(Error::DegenerateEnsemble)
        ));
        assert!(average_density_matrix(&[]).is_err());
    }

    #[test]
    fn entropy_of_simple_states() {
        assert!(von_neumann_entropy(&DensityMatrix::pure(&maximally_entangled(3), 1.0).unwrap().rho().clone()).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((von_neumann_entropy(mixed.rho()) - 9f64.log2()).abs() < 1e-12);
        let pure = DensityMatrix::pure(&maximally_entangled(4), 1.0).unwrap();
        assert!((von_neumann_entropy(&pure.reduced_bob()) - 2.0).abs() < 1e-12);
    }
}

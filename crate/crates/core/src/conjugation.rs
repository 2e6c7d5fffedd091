//! Channel conjugation: Kraus operators, the Procrustean conjugate filter
//! `M̃ = (Σ_j γ_min/γ_j |v_j⟩⟨v_j|) U†`, and the receiver noise models
//! (beam misalignment and depolarization after conjugation).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::{translate, ComplexField};
use crate::quantum::{
    average_density_matrix, postselect_from_matrix, CMatrix, CVector, CrosstalkMatrix, DensityMatrix,
};

/// Below this smallest singular value a channel is treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Effective channel on the encoding subspace with its singular system
/// `M = W Σ V†` and polar factor `U = W V†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    m: CMatrix,
    gammas: Vec<f64>,
    left: CMatrix,
    right: CMatrix,
    unitary: CMatrix,
}

impl KrausOperator {
    pub fn from_matrix(m: CMatrix) -> Self {
        let d = m.nrows();
        let svd = m.clone().svd(true, true);
        let u = svd.u.expect("left singular vectors requested");
        let v = svd.v_t.expect("right singular vectors requested").adjoint();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let gammas = order.iter().map(|&j| svd.singular_values[j]).collect();
        let left = CMatrix::from_fn(d, d, |r, c| u[(r, order[c])]);
        let right = CMatrix::from_fn(d, d, |r, c| v[(r, order[c])]);
        let unitary = &left * right.adjoint();
        Self {
            m,
            gammas,
            left,
            right,
            unitary,
        }
    }

    pub fn d(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.gammas
    }

    pub fn gamma_min(&self) -> f64 {
        *self.gammas.last().expect("non-empty operator")
    }

    pub fn left_vectors(&self) -> &CMatrix {
        &self.left
    }

    pub fn right_vectors(&self) -> &CMatrix {
        &self.right
    }

    /// Unitary polar factor `U`.
    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// Positive polar factor `|M| = V Σ V†`.
    pub fn modulus(&self) -> CMatrix {
        let sigma = CMatrix::from_diagonal(&CVector::from_iterator(
            self.d(),
            self.gammas.iter().map(|&g| Complex64::from(g)),
        ));
        &self.right * sigma * self.right.adjoint()
    }
}

/// Under perfect channel characterization the Kraus operator is the
/// post-selected crosstalk matrix itself.
pub fn kraus_from_realization(c: &CrosstalkMatrix) -> KrausOperator {
    KrausOperator::from_matrix(c.matrix().clone())
}

/// Local filter `M̃` with `M̃ M = γ_min·1` and largest singular value 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateFilter {
    mt: CMatrix,
}

impl ConjugateFilter {
    pub fn d(&self) -> usize {
        self.mt.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mt
    }

    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        &self.mt * m
    }

    pub fn max_singular_value(&self) -> f64 {
        self.mt.clone().singular_values().max()
    }
}

pub fn conjugate_filter(k: &KrausOperator) -> Result<ConjugateFilter> {
    let gmin = k.gamma_min();
    if gmin <= SINGULAR_THRESHOLD {
        return Err(Error::SingularChannel(gmin));
    }
    let weights = CVector::from_iterator(k.d(), k.gammas.iter().map(|&g| Complex64::from(gmin / g)));
    let mt = &k.right * CMatrix::from_diagonal(&weights) * k.left.adjoint();
    Ok(ConjugateFilter { mt })
}

/// Conjugated ensemble where each filter is built from `reference[i]` and
/// applied to `actual[i]`. Realizations with a singular reference channel
/// lose the photon. Returns the normalized state and survival `T′`.
pub fn conjugated_ensemble_with(
    reference: &[CrosstalkMatrix],
    actual: &[CrosstalkMatrix],
) -> Result<(DensityMatrix, f64)> {
    if reference.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            found: actual.len(),
        });
    }
    let states: Vec<CVector> = reference
        .iter()
        .zip(actual)
        .map(|(r, a)| {
            let d = a.d();
            match conjugate_filter(&kraus_from_realization(r)) {
                Ok(filter) => postselect_from_matrix(&filter.apply(a.matrix())),
                Err(_) => CVector::zeros(d * d),
            }
        })
        .collect();
    let rho = average_density_matrix(&states)?;
    let t = rho.survival();
    Ok((rho, t))
}

/// Ideal conjugation: every realization's filter comes from its own
/// channel, giving `γ_min|Φ0⟩` per realization and `T′ = ⟨γ_min²⟩`.
pub fn conjugated_ensemble(ensemble: &[CrosstalkMatrix]) -> Result<(DensityMatrix, f64)> {
    conjugated_ensemble_with(ensemble, ensemble)
}

/// Translates the received field by `magnitude` along `direction` (rad).
pub fn apply_misalignment(f: &ComplexField, magnitude: f64, direction: f64) -> Result<ComplexField> {
    if !(magnitude >= 0.0) {
        return Err(Error::InvalidParameter(format!("misalignment must be non-negative, got {magnitude}")));
    }
    if magnitude >= 0.5 * f.grid().extent() {
        return Err(Error::ShiftOutOfRange(magnitude));
    }
    if magnitude == 0.0 {
        return Ok(f.clone());
    }
    Ok(translate(f, magnitude * direction.cos(), magnitude * direction.sin()))
}

/// Depolarizes Bob's photon: `ρ → (1−p)ρ + p·(tr_B ρ ⊗ 1/d)` with
/// `p = infidelity / (1 − 1/d²)`, so a maximally entangled input ends
/// with the requested infidelity.
pub fn depolarize(rho: &DensityMatrix, infidelity: f64) -> Result<DensityMatrix> {
    let d = rho.d();
    let ceiling = 1.0 - 1.0 / (d * d) as f64;
    if !(0.0..=ceiling).contains(&infidelity) {
        return Err(Error::InvalidParameter(format!(
            "infidelity {infidelity} outside [0, {ceiling}] for d = {d}"
        )));
    }
    if infidelity == 0.0 {
        return Ok(rho.clone());
    }
    let p = infidelity / ceiling;
    let alice = rho.reduced_alice();
    let n = d * d;
    let mixed = CMatrix::from_fn(n, n, |r, c| {
        if r % d == c % d {
            alice[(r / d, c / d)] / d as f64
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let out = rho.rho() * Complex64::from(1.0 - p) + mixed * Complex64::from(p);
    DensityMatrix::new(d, out, rho.survival())
}

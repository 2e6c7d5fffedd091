use serde::{Deserialize, Serialize};

use super::crosstalk::CrosstalkMatrix;
use super::mubs::{build_mubs, MUBSet};
use super::state::{average_density_matrix, postselect_state, von_neumann_entropy, DensityMatrix};
use super::subspace::EncodingSubspace;
use super::CVector;
use crate::error::{Error, Result};

/// Error rate, survival and key rates of one ensemble. `k1` and `k` are
/// `None` for d = 6, which has no key-rate formula with two bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub q: f64,
    pub t: f64,
    pub k1: Option<f64>,
    pub k: Option<f64>,
}

impl KeyRateResult {
    pub fn from_state(rho: &DensityMatrix, mubs: &MUBSet) -> Result<Self> {
        let q = average_error_rate(rho, mubs)?;
        let t = rho.survival();
        let (k1, k) = if rho.d() == 6 {
            (None, None)
        } else {
            let k1 = key_rate_per_photon(q.min((rho.d() - 1) as f64 / rho.d() as f64), rho.d())?;
            (Some(k1), Some(secret_key_rate(t, k1)))
        };
        Ok(Self { q, t, k1, k })
    }
}

/// `Q = (1/N_B) Σ_β Σ_{s≠s'} ⟨ξ*_{β,s} ⊗ ξ_{β,s'}| ρ |ξ*_{β,s} ⊗ ξ_{β,s'}⟩`.
///
/// Alice's projector is conjugated; this matters for bases with complex
/// amplitudes.
pub fn average_error_rate(rho: &DensityMatrix, mubs: &MUBSet) -> Result<f64> {
    let d = mubs.d();
    if rho.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.d(),
        });
    }
    let mut total = 0.0;
    for basis in mubs.bases() {
        for s in 0..d {
            let alice = basis.column(s).map(|v| v.conj());
            for s2 in (0..d).filter(|&s2| s2 != s) {
                let bob = basis.column(s2);
                let v = CVector::from_fn(d * d, |k, _| alice[k / d] * bob[k % d]);
                total += rho.expectation(&v);
            }
        }
    }
    Ok((total / mubs.num_bases() as f64).clamp(0.0, 1.0))
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Asymptotic key per post-selected photon with all d+1 bases,
/// `log2 d + ((d+1)/d)·Q·log2(Q/(d(d−1))) + (1 − (d+1)Q/d)·log2(1 − (d+1)Q/d)`,
/// clamped at zero.
pub fn key_rate_per_photon(q: f64, d: usize) -> Result<f64> {
    if d == 6 || !(2..=9).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let df = d as f64;
    let q_max = (df - 1.0) / df;
    if !(0.0..=q_max + 1e-12).contains(&q) {
        return Err(Error::InvalidParameter(format!("error rate {q} outside [0, {q_max}]")));
    }
    let q = q.min(q_max);
    let wrong = (df + 1.0) / df * q;
    let k1 = df.log2() + (df + 1.0) / df * q * if q > 0.0 { (q / (df * (df - 1.0))).log2() } else { 0.0 }
        + xlog2x(1.0 - wrong);
    Ok(k1.max(0.0))
}

/// Key per sent photon.
pub fn secret_key_rate(t: f64, k1: f64) -> f64 {
    if k1 > 0.0 {
        t * k1
    } else {
        0.0
    }
}

/// Direct evaluation of `I(A:B) − χ(A:E)` for a measurement in basis 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolevoCheck {
    pub mutual_information: f64,
    pub holevo_quantity: f64,
    pub key_rate: f64,
}

pub fn holevo_check(rho: &DensityMatrix, mubs: &MUBSet) -> Result<HolevoCheck> {
    let d = mubs.d();
    if rho.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.d(),
        });
    }
    let min_eig = rho.min_eigenvalue();
    if min_eig < -1e-9 {
        return Err(Error::NotPositiveSemidefinite(min_eig));
    }
    let basis = &mubs.bases()[0];
    let alice: Vec<CVector> = (0..d).map(|s| basis.column(s).map(|v| v.conj())).collect();
    let bob: Vec<CVector> = (0..d).map(|s| basis.column(s).into_owned()).collect();

    let mut joint = vec![vec![0.0; d]; d];
    for (a, va) in alice.iter().enumerate() {
        for (b, vb) in bob.iter().enumerate() {
            let v = CVector::from_fn(d * d, |k, _| va[k / d] * vb[k % d]);
            joint[a][b] = rho.expectation(&v).max(0.0);
        }
    }
    let pa: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let pb: Vec<f64> = (0..d).map(|b| joint.iter().map(|row| row[b]).sum()).collect();
    let h = |p: &mut dyn Iterator<Item = f64>| -> f64 { -p.map(xlog2x).sum::<f64>() };
    let mutual_information = h(&mut pa.iter().copied()) + h(&mut pb.iter().copied())
        - h(&mut joint.iter().flat_map(|r| r.iter().copied()));

    // Bob's conditional state after Alice obtains outcome a.
    let mut conditional = 0.0;
    for (a, va) in alice.iter().enumerate() {
        if pa[a] <= 1e-15 {
            continue;
        }
        let rho_b = super::CMatrix::from_fn(d, d, |b, b2| {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    acc += va[i].conj() * rho.rho()[(i * d + b, j * d + b2)] * va[j];
                }
            }
            acc
        }) / num_complex::Complex64::from(pa[a]);
        conditional += pa[a] * von_neumann_entropy(&rho_b);
    }
    let holevo_quantity = von_neumann_entropy(rho.rho()) - conditional;
    Ok(HolevoCheck {
        mutual_information,
        holevo_quantity,
        key_rate: mutual_information - holevo_quantity,
    })
}

/// Post-selects every channel, averages and evaluates the key rate.
pub fn evaluate_ensemble<'a>(
    ensemble: impl IntoIterator<Item = &'a CrosstalkMatrix>,
    mubs: &MUBSet,
) -> Result<KeyRateResult> {
    let states: Vec<CVector> = ensemble.into_iter().map(postselect_state).collect();
    let rho = average_density_matrix(&states)?;
    KeyRateResult::from_state(&rho, mubs)
}

/// Searches every conforming subspace of dimension `d` with a custom
/// evaluator. Picks the largest K, keeping the candidate with smaller
/// max|l| on ties; for d = 6 the smallest Q wins. Candidates whose
/// ensemble loses every photon are skipped.
pub fn best_subspace_by(
    d: usize,
    mut evaluate: impl FnMut(&EncodingSubspace) -> Result<KeyRateResult>,
) -> Result<(EncodingSubspace, KeyRateResult)> {
    let mut best: Option<(EncodingSubspace, KeyRateResult)> = None;
    for sub in EncodingSubspace::candidates(d)? {
        let result = match evaluate(&sub) {
            Ok(r) => r,
            Err(Error::DegenerateEnsemble) => continue,
            Err(e) => return Err(e),
        };
        let better = match &best {
            None => true,
            Some((_, b)) => match (result.k, b.k) {
                (Some(k), Some(bk)) => k > bk,
                _ => result.q < b.q,
            },
        };
        if better {
            best = Some((sub, result));
        }
    }
    best.ok_or(Error::DegenerateEnsemble)
}

/// Best conforming subspace for an ensemble of full 9×9 crosstalk matrices.
pub fn best_subspace(d: usize, ensemble: &[CrosstalkMatrix]) -> Result<(EncodingSubspace, KeyRateResult)> {
    let mubs = build_mubs(d)?;
    best_subspace_by(d, |sub| {
        let restricted = ensemble.iter().map(|c| c.restrict(sub)).collect::<Result<Vec<_>>>()?;
        evaluate_ensemble(&restricted, &mubs)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{maximally_entangled, CMatrix};
    use num_complex::Complex64;

    fn werner(d: usize, v: f64) -> DensityMatrix {
        let phi = maximally_entangled(d);
        let n = d * d;
        let rho = &phi * phi.adjoint() * Complex64::from(v)
            + CMatrix::identity(n, n) * Complex64::from((1.0 - v) / n as f64);
        DensityMatrix::new(d, rho, 1.0).unwrap()
    }

    #[test]
    fn error_rate_endpoints() {
        for d in 2..=9 {
            let mubs = build_mubs(d).unwrap();
            let q0 = average_error_rate(&werner(d, 1.0), &mubs).unwrap();
            assert!(q0.abs() < 1e-10, "d={d}: {q0}");
            let qm = average_error_rate(&DensityMatrix::maximally_mixed(d), &mubs).unwrap();
            assert!((qm - (d - 1) as f64 / d as f64).abs() < 1e-10);
        }
        let mubs = build_mubs(2).unwrap();
        for v in [0.0, 0.3, 0.8] {
            assert!((average_error_rate(&werner(2, v), &mubs).unwrap() - (1.0 - v) / 2.0).abs() < 1e-12);
        }
        assert!(average_error_rate(&werner(3, 1.0), &mubs).is_err());
    }

    #[test]
    fn key_rate_anchor_values() {
        assert_eq!(key_rate_per_photon(0.0, 2).unwrap(), 1.0);
        assert_eq!(key_rate_per_photon(0.0, 8).unwrap(), 3.0);
        assert!(key_rate_per_photon(0.0, 6).is_err());
        assert!(key_rate_per_photon(0.6, 2).is_err());
        assert_eq!(key_rate_per_photon(0.5, 2).unwrap(), 0.0);
        assert!((key_rate_per_photon(0.1875, 3).unwrap() - 0.023_68).abs() < 1e-4);
        assert_eq!(secret_key_rate(0.5, 1.0), 0.5);
        assert_eq!(secret_key_rate(0.0, 2.0), 0.0);
        assert_eq!(secret_key_rate(1.0, 0.0), 0.0);
    }

    #[test]
    fn holevo_endpoints() {
        for d in [2, 3, 5] {
            let mubs = build_mubs(d).unwrap();
            let pure = holevo_check(&werner(d, 1.0), &mubs).unwrap();
            assert!((pure.mutual_information - (d as f64).log2()).abs() < 1e-10);
            assert!(pure.holevo_quantity.abs() < 1e-10);
            let mixed = holevo_check(&DensityMatrix::maximally_mixed(d), &mubs).unwrap();
            assert!(mixed.mutual_information.abs() < 1e-10);
        }
    }

    #[test]
    fn global_phase_leaves_error_rate_unchanged() {
        let sub = EncodingSubspace::new(vec![-1, 1]).unwrap();
        let c = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.7, 0.1),
                Complex64::new(0.1, -0.2),
                Complex64::new(-0.05, 0.2),
                Complex64::new(0.6, 0.3),
            ],
        );
        let a = CrosstalkMatrix::new(sub, c).unwrap();
        let mubs = build_mubs(2).unwrap();
        let r1 = evaluate_ensemble([&a], &mubs).unwrap();
        let r2 = evaluate_ensemble([&a.with_global_phase(1.234)], &mubs).unwrap();
        assert!((r1.q - r2.q).abs() < 1e-12);
    }

    #[test]
    fn best_subspace_prefers_lowest_loss_on_vacuum_like_ensembles() {
        let full = EncodingSubspace::full();
        let mut c = CMatrix::zeros(9, 9);
        for (i, l) in full.ls().iter().enumerate() {
            c[(i, i)] = Complex64::from(0.9f64.powi(l.abs()));
        }
        let ensemble = vec![CrosstalkMatrix::new(full, c).unwrap()];
        let (sub, res) = best_subspace(2, &ensemble).unwrap();
        assert_eq!(sub.ls(), &[-1, 1]);
        assert!(res.q.abs() < 1e-12);
        assert!((res.t - 0.81).abs() < 1e-12);
        let (sub6, res6) = best_subspace(6, &ensemble).unwrap();
        assert_eq!(sub6.d(), 6);
        assert!(res6.k.is_none());
    }
}

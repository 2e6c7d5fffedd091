use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::gf::GaloisField;
use super::CMatrix;
use crate::error::{Error, Result};

/// A family of orthonormal bases of C^d. Each basis is stored as a matrix
/// whose columns are the basis vectors in the standard (OAM) basis; basis 0
/// is always the standard basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MUBSet {
    d: usize,
    bases: Vec<CMatrix>,
}

impl MUBSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    /// Largest `|⟨ξ_s|ξ_s'⟩ − δ_ss'|` within any basis.
    pub fn orthonormality_error(&self) -> f64 {
        self.bases
            .iter()
            .map(|b| (b.adjoint() * b - CMatrix::identity(self.d, self.d)).camax())
            .fold(0.0, f64::max)
    }

    /// Largest `||⟨ξ|ξ'⟩|² − 1/d|` across distinct bases.
    pub fn unbiasedness_error(&self) -> f64 {
        let target = 1.0 / self.d as f64;
        let mut worst: f64 = 0.0;
        for (i, a) in self.bases.iter().enumerate() {
            for b in &self.bases[i + 1..] {
                let g = a.adjoint() * b;
                worst = g.iter().map(|v| (v.norm_sqr() - target).abs()).fold(worst, f64::max);
            }
        }
        worst
    }
}

fn omega(d: usize, k: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k.rem_euclid(d as i64)) as f64 / d as f64)
}

/// Eigenbasis of `X Z^n` with `X|j⟩ = |j+1⟩`, `Z|j⟩ = ω^j|j⟩`. The s-th
/// eigenvector has components `λ_s^{−j} ω^{n j(j−1)/2} / √d`.
fn weyl_eigenbasis(d: usize, n: usize) -> CMatrix {
    let norm = (d as f64).sqrt().recip();
    let base_phase = PI * (n * (d - 1)) as f64 / d as f64;
    CMatrix::from_fn(d, d, |j, s| {
        let lambda_phase = base_phase - 2.0 * PI * s as f64 / d as f64;
        let chirp = (n * j * j.saturating_sub(1) / 2) as i64;
        Complex64::from_polar(norm, -lambda_phase * j as f64) * omega(d, chirp)
    })
}

/// Displacement `D(a, b)|j⟩ = ω^{b·j} |j + a⟩` over Z_p^m.
fn displacement(field: &GaloisField, a: &[u32], b: &[u32]) -> CMatrix {
    let q = field.order();
    let p = field.p() as usize;
    let mut m = CMatrix::zeros(q, q);
    for j in 0..q {
        let jv = field.element(j);
        let dot: u32 = b.iter().zip(&jv).map(|(x, y)| x * y).sum();
        let target = field.index(&field.add(&jv, a));
        m[(target, j)] = omega(p, dot as i64);
    }
    m
}

/// Common eigenbasis of the commuting displacement class
/// `{D(a, b_r(a))}` with `b_r(a)_i = tr(r·a·x^i)`.
fn galois_class_basis(field: &GaloisField, r: &[u32]) -> CMatrix {
    let q = field.order();
    let m = (q as f64).log(field.p() as f64).round() as usize;
    let ops: Vec<CMatrix> = (1..q)
        .map(|ai| {
            let a = field.element(ai);
            let ra = field.mul(r, &a);
            let b: Vec<u32> = (0..m).map(|i| field.trace(&field.mul(&ra, &field.monomial(i)))).collect();
            displacement(field, &a, &b)
        })
        .collect();
    let i = Complex64::new(0.0, 1.0);
    // A generic real combination of the Hermitian parts separates the joint
    // eigenspaces. Eigenvector accuracy scales as 1/gap, so keep the
    // weighting with the widest minimum spectral gap.
    let mut best: Option<(f64, CMatrix)> = None;
    for attempt in 0..16u32 {
        let mut h = CMatrix::zeros(q, q);
        for (k, op) in ops.iter().enumerate() {
            let t = (k as f64 + 1.0) * (1.0 + 0.173 * f64::from(attempt));
            let (c1, c2) = ((t * 1.618_034).sin() + 1.3, (t * 2.414_214).cos() + 1.7);
            let adj = op.adjoint();
            h += (op + &adj) * Complex64::from(c1) + (op - &adj) * (i * c2);
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let gap = order
            .windows(2)
            .map(|w| eig.eigenvalues[w[1]] - eig.eigenvalues[w[0]])
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            let basis = CMatrix::from_fn(q, q, |row, col| eig.eigenvectors[(row, order[col])]);
            best = Some((gap, basis));
        }
    }
    let (gap, basis) = best.expect("at least one attempt");
    assert!(gap > 1e-3, "displacement class is not maximal (gap {gap})");
    basis
}

/// Mutually unbiased bases for dimensions 2 through 9.
///
/// Prime `d`: the standard basis plus the eigenbases of `X Z^n`,
/// `n = 0..d−1`. `d ∈ {4, 8, 9}`: the standard basis plus one basis per
/// field element from the Galois-field displacement classes. `d = 6`: only
/// the standard and Fourier bases.
pub fn build_mubs(d: usize) -> Result<MUBSet> {
    let standard = CMatrix::identity(d, d);
    let bases = match d {
        2 | 3 | 5 | 7 => std::iter::once(standard).chain((0..d).map(|n| weyl_eigenbasis(d, n))).collect(),
        6 => vec![standard, weyl_eigenbasis(6, 0)],
        4 | 8 | 9 => {
            let field = GaloisField::for_order(d).expect("prime-power order");
            std::iter::once(standard)
                .chain((0..d).map(|r| galois_class_basis(&field, &field.element(r))))
                .collect()
        }
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    Ok(MUBSet { d, bases })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_bases_are_pauli_eigenbases() {
        let m = build_mubs(2).unwrap();
        assert_eq!(m.num_bases(), 3);
        let s = 0.5f64.sqrt();
        // X eigenbasis: (|0⟩ ± |1⟩)/√2 up to phase.
        let x = &m.bases()[1];
        for col in x.column_iter() {
            assert!((col[0].norm() - s).abs() < 1e-12);
            let ratio = col[1] / col[0];
            assert!((ratio.im).abs() < 1e-12 && (ratio.re.abs() - 1.0).abs() < 1e-12);
        }
        // Y eigenbasis: (|0⟩ ± i|1⟩)/√2 up to phase.
        let y = &m.bases()[2];
        for col in y.column_iter() {
            let ratio = col[1] / col[0];
            assert!(ratio.re.abs() < 1e-12 && (ratio.im.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weyl_vectors_are_eigenvectors() {
        for d in [3, 5, 7] {
            for n in 0..d {
                let b = weyl_eigenbasis(d, n);
                let xz = CMatrix::from_fn(d, d, |row, col| {
                    if row == (col + 1) % d {
                        omega(d, (n * col) as i64)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let img = &xz * &b;
                for s in 0..d {
                    let lambda = img[(0, s)] / b[(0, s)];
                    let resid = (img.column(s) - b.column(s) * lambda).norm();
                    assert!(resid < 1e-12);
                }
            }
        }
    }

    #[test]
    fn all_dimensions_are_mutually_unbiased() {
        for d in 2..=9 {
            let m = build_mubs(d).unwrap();
            let expected = if d == 6 { 2 } else { d + 1 };
            assert_eq!(m.num_bases(), expected, "d={d}");
            assert!(m.orthonormality_error() < 1e-12, "d={d}");
            assert!(m.unbiasedness_error() < 1e-10, "d={d}: {}", m.unbiasedness_error());
        }
        assert!(matches!(build_mubs(10), Err(Error::UnsupportedDimension(10))));
        assert!(build_mubs(1).is_err());
    }
}

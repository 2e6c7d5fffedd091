use std::collections::BTreeMap;

use num_complex::Complex64;

use super::subspace::EncodingSubspace;
use super::CMatrix;
use crate::error::{Error, Result};
use crate::optics::{aperture_indices, lg_field, BeamParams, ComplexField, GridSpec, ModeIndex};

/// Coefficients `c[l, l_t]`: amplitude of receiver mode `l` (row) in the
/// apertured field sent as mode `l_t` (column).
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkMatrix {
    subspace: EncodingSubspace,
    c: CMatrix,
}

impl CrosstalkMatrix {
    pub fn new(subspace: EncodingSubspace, c: CMatrix) -> Result<Self> {
        let d = subspace.d();
        if c.nrows() != d || c.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: c.nrows().max(c.ncols()),
            });
        }
        Ok(Self { subspace, c })
    }

    pub fn identity(subspace: EncodingSubspace) -> Self {
        let d = subspace.d();
        Self {
            subspace,
            c: CMatrix::identity(d, d),
        }
    }

    pub fn subspace(&self) -> &EncodingSubspace {
        &self.subspace
    }

    pub fn d(&self) -> usize {
        self.subspace.d()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.c
    }

    /// `c[l, l_t]` by OAM number.
    pub fn get(&self, l: i32, lt: i32) -> Option<Complex64> {
        Some(self.c[(self.subspace.index_of(l)?, self.subspace.index_of(lt)?)])
    }

    /// Euclidean norm of the largest column (at most 1 for a physical channel).
    pub fn max_column_norm(&self) -> f64 {
        self.c.column_iter().map(|col| col.norm()).fold(0.0, f64::max)
    }

    /// Submatrix on a smaller alphabet.
    pub fn restrict(&self, sub: &EncodingSubspace) -> Result<Self> {
        let idx: Vec<usize> = sub
            .ls()
            .iter()
            .map(|&l| self.subspace.index_of(l).ok_or(Error::MissingMode(l)))
            .collect::<Result<_>>()?;
        let c = CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.c[(idx[i], idx[j])]);
        Ok(Self {
            subspace: sub.clone(),
            c,
        })
    }

    /// Multiplies every entry by a phase factor.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        Self {
            subspace: self.subspace.clone(),
            c: self.c.map(|v| v * Complex64::from_polar(1.0, phase)),
        }
    }
}

/// Receiver projection modes: analytic LG modes at the ground plane,
/// truncated to the aperture and renormalized inside it.
///
/// Renormalizing inside the aperture makes `|c[l, l]|²` of a vacuum channel
/// equal the fraction of power the aperture collects, and keeps a vacuum
/// channel without aperture loss equal to the identity.
#[derive(Debug, Clone)]
pub struct ReceiverBasis {
    grid: GridSpec,
    r_a: f64,
    indices: Vec<usize>,
    modes: BTreeMap<i32, Vec<Complex64>>,
}

impl ReceiverBasis {
    pub fn new(ls: &[i32], grid: &GridSpec, z: f64, beam: &BeamParams, r_a: f64) -> Result<Self> {
        if !(r_a > 0.0) {
            return Err(Error::InvalidParameter(format!("aperture radius must be positive, got {r_a}")));
        }
        let indices = aperture_indices(grid, r_a);
        let area = grid.cell_area();
        let mut modes = BTreeMap::new();
        for &l in ls {
            let field = lg_field(ModeIndex::new(l), z, beam, grid)?;
            let amps = field.amplitudes();
            let inside: Vec<Complex64> = indices.iter().map(|&i| amps[i]).collect();
            let power: f64 = inside.iter().map(|a| a.norm_sqr()).sum::<f64>() * area;
            if power <= 0.0 {
                return Err(Error::InvalidParameter(format!("aperture {r_a} m captures no samples")));
            }
            let scale = power.sqrt().recip();
            modes.insert(l, inside.into_iter().map(|a| a * scale).collect());
        }
        Ok(Self {
            grid: *grid,
            r_a,
            indices,
            modes,
        })
    }

    pub fn aperture_radius(&self) -> f64 {
        self.r_a
    }

    /// `⟨receiver_mode(l) | aperture(field)⟩`.
    pub fn project(&self, l: i32, field: &ComplexField) -> Result<Complex64> {
        if field.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mode = self.modes.get(&l).ok_or(Error::MissingMode(l))?;
        let amps = field.amplitudes();
        let sum: Complex64 = self.indices.iter().zip(mode).map(|(&i, m)| m.conj() * amps[i]).sum();
        Ok(sum * self.grid.cell_area())
    }

    pub fn crosstalk(
        &self,
        received: &BTreeMap<i32, ComplexField>,
        subspace: &EncodingSubspace,
    ) -> Result<CrosstalkMatrix> {
        let d = subspace.d();
        let mut c = CMatrix::zeros(d, d);
        for (j, &lt) in subspace.ls().iter().enumerate() {
            let field = received.get(&lt).ok_or(Error::MissingMode(lt))?;
            for (i, &l) in subspace.ls().iter().enumerate() {
                c[(i, j)] = self.project(l, field)?;
            }
        }
        CrosstalkMatrix::new(subspace.clone(), c)
    }
}

/// Projects each received field, after the aperture, onto the receiver
/// modes at distance `z`.
pub fn crosstalk_matrix(
    received: &BTreeMap<i32, ComplexField>,
    subspace: &EncodingSubspace,
    r_a: f64,
    z: f64,
    beam: &BeamParams,
) -> Result<CrosstalkMatrix> {
    let lt = *subspace.ls().first().expect("non-empty subspace");
    let grid = received.get(&lt).ok_or(Error::MissingMode(lt))?.grid();
    ReceiverBasis::new(subspace.ls(), &grid, z, beam, r_a)?.crosstalk(received, subspace)
}

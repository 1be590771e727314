use nalgebra::{DMatrix, SymmetricEigen};

use crate::costs::ProblemInstance;
use crate::error::{Error, Result};
use crate::linalg::{check_spd, spectral_map, symmetry_defect};

/// Eigenvalue floor applied to `H_i + γI` before inversion.
pub const HESSIAN_FLOOR: f64 = 1e-8;

/// Block-diagonal SPD matrix `K = Diag(K_1, …, K_m)` with `d × d` blocks.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    m: usize,
    d: usize,
    blocks: Option<Blocks>,
}

#[derive(Debug, Clone)]
struct Blocks {
    forward: Vec<DMatrix<f64>>,
    inverse: Vec<DMatrix<f64>>,
}

impl Preconditioner {
    pub fn identity(m: usize, d: usize) -> Self {
        Preconditioner { m, d, blocks: None }
    }

    /// Validates each block (symmetric to 1e-10, positive definite) and caches its inverse.
    pub fn from_blocks(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("preconditioner needs at least one block".into()))?
            .nrows();
        let mut inverse = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: b.nrows(),
                });
            }
            check_spd(b, &format!("preconditioner block {i}"))?;
            inverse.push(spectral_map(b, |l| 1.0 / l));
        }
        Ok(Preconditioner {
            m: blocks.len(),
            d,
            blocks: Some(Blocks {
                forward: blocks,
                inverse,
            }),
        })
    }

    /// `c · I` written out as explicit blocks.
    pub fn scaled_identity(m: usize, d: usize, c: f64) -> Result<Self> {
        Self::from_blocks(vec![DMatrix::identity(d, d) * c; m])
    }

    pub fn agents(&self) -> usize {
        self.m
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.is_none()
    }

    pub fn block(&self, agent: usize) -> DMatrix<f64> {
        match &self.blocks {
            None => DMatrix::identity(self.d, self.d),
            Some(b) => b.forward[agent].clone(),
        }
    }

    /// `out = K_i · input`.
    pub fn apply_block_into(&self, agent: usize, input: &[f64], out: &mut [f64]) {
        match &self.blocks {
            None => out.copy_from_slice(input),
            Some(b) => mat_vec(&b.forward[agent], input, out),
        }
    }

    /// `out = K_i⁻¹ · input`.
    pub fn apply_inverse_block_into(&self, agent: usize, input: &[f64], out: &mut [f64]) {
        match &self.blocks {
            None => out.copy_from_slice(input),
            Some(b) => mat_vec(&b.inverse[agent], input, out),
        }
    }

    /// `K⁻¹ x` on a stacked vector.
    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (i, (xi, oi)) in x.chunks(self.d).zip(out.chunks_mut(self.d)).enumerate() {
            self.apply_inverse_block_into(i, xi, oi);
        }
        out
    }

    /// `Σ_i K_i⁻¹` (d × d).
    pub fn inverse_sum(&self) -> DMatrix<f64> {
        match &self.blocks {
            None => DMatrix::identity(self.d, self.d) * self.m as f64,
            Some(b) => b.inverse.iter().fold(DMatrix::zeros(self.d, self.d), |acc, k| acc + k),
        }
    }

    /// `‖K‖₂`, the largest block eigenvalue.
    pub fn norm(&self) -> f64 {
        match &self.blocks {
            None => 1.0,
            Some(b) => b
                .forward
                .iter()
                .map(|k| {
                    SymmetricEigen::new(k.clone())
                        .eigenvalues
                        .iter()
                        .copied()
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max),
        }
    }

    /// Symmetric square roots of the blocks; `None` for the identity.
    pub fn sqrt_blocks(&self) -> Result<Option<Vec<DMatrix<f64>>>> {
        match &self.blocks {
            None => Ok(None),
            Some(b) => Ok(Some(
                b.forward.iter().map(|k| spectral_map(k, f64::sqrt)).collect(),
            )),
        }
    }
}

fn mat_vec(matrix: &DMatrix<f64>, input: &[f64], out: &mut [f64]) {
    let d = input.len();
    out.fill(0.0);
    // Column-major: out += column_c * input_c.
    for (c, xc) in input.iter().enumerate() {
        if *xc == 0.0 {
            continue;
        }
        let col = &matrix.as_slice()[c * d..(c + 1) * d];
        for (o, a) in out.iter_mut().zip(col) {
            *o += a * xc;
        }
    }
}

/// `K_i = (∇²f_i(x_i(0)) + γI)⁻¹`, computed once before the run.
///
/// Eigenvalues of `H_i + γI` below [`HESSIAN_FLOOR`] are raised to the floor
/// so every block stays SPD for nonconvex locals. Without Hessians the
/// identity is returned and a warning logged.
pub fn build_preconditioner(
    problem: &ProblemInstance,
    x0_stacked: &[f64],
    gamma: f64,
) -> Result<Preconditioner> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let (m, d) = (problem.agents(), problem.dim());
    if x0_stacked.len() != m * d {
        return Err(Error::DimensionMismatch {
            expected: m * d,
            got: x0_stacked.len(),
        });
    }
    let mut blocks = Vec::with_capacity(m);
    for (i, xi) in x0_stacked.chunks(d).enumerate() {
        let Some(h) = problem.local(i).hessian(xi) else {
            log::warn!("agent {i} offers no Hessian; falling back to the identity preconditioner");
            return Ok(Preconditioner::identity(m, d));
        };
        if symmetry_defect(&h) > 1e-10 {
            return Err(Error::NotSpd(format!("Hessian of agent {i} is not symmetric")));
        }
        let shifted = h + DMatrix::identity(d, d) * gamma;
        let shifted = (&shifted + shifted.transpose()) * 0.5;
        let mut clamped = false;
        let k = spectral_map(&shifted, |l| {
            if l < HESSIAN_FLOOR {
                clamped = true;
                1.0 / HESSIAN_FLOOR
            } else {
                1.0 / l
            }
        });
        if clamped {
            log::warn!("agent {i}: H + γI has eigenvalues below {HESSIAN_FLOOR:e}; clamped");
        }
        blocks.push((&k + k.transpose()) * 0.5);
    }
    Preconditioner::from_blocks(blocks)
}

//! A posteriori global-optimality check.
//!
//! A stationary point `{R_i}` is globally optimal if `Λ − R̃ ⪰ 0`, where `Λ`
//! is block diagonal with `Λ_i = Σ_j R̃_ij R_jᵀ R_i` over all neighbors `j`
//! of `i`. At exact stationary points `Λ` is symmetric; for numerical
//! iterates the asymmetry is reported and the test runs on the symmetric part.

use nalgebra::{DVector, Matrix3};

use crate::eigen::{self, LanczosOptions};
use crate::error::{Error, Result};
use crate::graph::{self, BlockMatrix, RaGraph, RotationStack};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// Smallest eigenvalue of `(M + Mᵀ)/2`, `M = Λ − R̃`.
    pub min_eig: f64,
    /// `‖M − Mᵀ‖_F`; zero at exact stationary points.
    pub asymmetry: f64,
    pub optimal: bool,
    pub tol: f64,
}

/// `1e-6 · n`.
pub fn default_tolerance(n: usize) -> f64 {
    tol::CERTIFICATE_PER_VERTEX * n as f64
}

fn lambda_blocks(g: &RaGraph, r: &RotationStack) -> Result<Vec<Matrix3<f64>>> {
    if r.len() != g.vertex_count() {
        return Err(Error::invalid(format!(
            "stack has {} rotations but graph has {} vertices",
            r.len(),
            g.vertex_count()
        )));
    }
    Ok((0..g.vertex_count())
        .map(|i| graph::neighbor_sum(g, r, i) * r[i].matrix())
        .collect())
}

/// Block-diagonal `Λ`.
pub fn build_lambda(g: &RaGraph, r: &RotationStack) -> Result<BlockMatrix> {
    let blocks = lambda_blocks(g, r)?;
    let mut m = BlockMatrix::zeros(g.vertex_count());
    for (i, block) in blocks.iter().enumerate() {
        m.set_block(i, i, block);
    }
    Ok(m)
}

/// The raw (unsymmetrized) certificate matrix `Λ − R̃`.
pub fn certificate_matrix(g: &RaGraph, r: &RotationStack) -> Result<BlockMatrix> {
    let lambda = build_lambda(g, r)?;
    let r_tilde = graph::assemble_r_tilde(g);
    BlockMatrix::from_matrix(lambda.into_matrix() - r_tilde.into_matrix())
}

/// Full ascending spectrum of the symmetrized certificate matrix (dense).
pub fn certificate_spectrum(g: &RaGraph, r: &RotationStack) -> Result<Vec<f64>> {
    let m = certificate_matrix(g, r)?.symmetrized();
    eigen::symmetric_eigenvalues(m.as_matrix())
}

pub fn certify(g: &RaGraph, r: &RotationStack, tol: f64) -> Result<Certificate> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!(
            "certificate tolerance must be positive, got {tol}"
        )));
    }
    let blocks = lambda_blocks(g, r)?;
    let asymmetry = blocks
        .iter()
        .map(|b| (b - b.transpose()).norm_squared())
        .sum::<f64>()
        .sqrt();

    let dim = 3 * g.vertex_count();
    let min_eig = if dim <= eigen::DENSE_LIMIT {
        certificate_spectrum(g, r)?[0]
    } else {
        let sym: Vec<Matrix3<f64>> = blocks.iter().map(|b| (b + b.transpose()) * 0.5).collect();
        let apply = |x: &DVector<f64>, y: &mut DVector<f64>| {
            crate::solvers::apply_r_tilde(g, x, y);
            *y *= -1.0;
            for (i, s) in sym.iter().enumerate() {
                let xi = x.fixed_rows::<3>(3 * i).into_owned();
                let mut yi = y.fixed_rows_mut::<3>(3 * i);
                yi += s * xi;
            }
        };
        let est = eigen::lanczos_smallest(dim, apply, LanczosOptions::default())?;
        est.value - est.residual
    };

    Ok(Certificate {
        min_eig,
        asymmetry,
        optimal: min_eig >= -tol,
        tol,
    })
}

//! Smallest eigenvalues of symmetric matrices: dense decomposition for
//! moderate sizes, Lanczos with full reorthogonalization beyond that.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Matrices up to this dimension are decomposed densely.
pub const DENSE_LIMIT: usize = 1500;

/// All eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid("eigenvalues of a non-square matrix"));
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::numerical("eigensolver produced non-finite values"));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub max_steps: usize,
    /// Stop once the Ritz residual `β_k |s_k|` is below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_steps: 600,
            tolerance: 1e-9,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosEstimate {
    pub value: f64,
    /// Residual norm of the Ritz pair; some eigenvalue lies within this
    /// distance of `value`.
    pub residual: f64,
    pub steps: usize,
}

/// Smallest eigenvalue of the symmetric operator `apply` of dimension `dim`.
///
/// Fails if the Ritz residual has not dropped below `opts.tolerance` after
/// `opts.max_steps` steps (or `dim` steps, whichever is smaller).
pub fn lanczos_smallest<F>(dim: usize, apply: F, opts: LanczosOptions) -> Result<LanczosEstimate>
where
    F: Fn(&DVector<f64>, &mut DVector<f64>),
{
    if dim == 0 {
        return Err(Error::invalid("Lanczos on an empty operator"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
    q /= q.norm();

    let max_steps = opts.max_steps.min(dim).max(1);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_steps);
    let mut beta: Vec<f64> = Vec::with_capacity(max_steps);
    let mut w = DVector::zeros(dim);
    let mut last = None;

    for k in 0..max_steps {
        apply(&q, &mut w);
        let a = q.dot(&w);
        alpha.push(a);
        w.axpy(-a, &q, 1.0);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            w.axpy(-b, prev, 1.0);
        }
        basis.push(q.clone());
        // Two passes of full reorthogonalization.
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let b = w.norm();
        if !b.is_finite() || !a.is_finite() {
            return Err(Error::numerical(
                "Lanczos iteration produced non-finite values",
            ));
        }

        let steps = k + 1;
        let breakdown = b <= 1e-12 * (1.0 + a.abs());
        if breakdown || steps % 5 == 0 || steps == max_steps {
            let (value, last_component) = smallest_ritz(&alpha, &beta)?;
            let residual = if breakdown {
                0.0
            } else {
                b * last_component.abs()
            };
            last = Some(LanczosEstimate {
                value,
                residual,
                steps,
            });
            if residual <= opts.tolerance || breakdown {
                return Ok(last.expect("just set"));
            }
        }
        beta.push(b);
        q = &w / b;
    }

    let est = last.expect("at least one Ritz evaluation");
    if est.steps == dim {
        // The Krylov space is the whole space; the Ritz values are exact.
        return Ok(LanczosEstimate {
            residual: 0.0,
            ..est
        });
    }
    Err(Error::numerical(format!(
        "Lanczos did not converge: residual {:.3e} after {} steps",
        est.residual, est.steps
    )))
}

/// Smallest eigenvalue of the tridiagonal `T(alpha, beta)` and the last
/// component of its eigenvector.
fn smallest_ritz(alpha: &[f64], beta: &[f64]) -> Result<(f64, f64)> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::try_new(t, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("tridiagonal eigensolver did not converge"))?;
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    Ok((value, eig.eigenvectors[(k - 1, idx)]))
}

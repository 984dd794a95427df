//! Dimensionality reduction of action embeddings via truncated SVD.
//!
//! The top principal directions of the embedding matrix are found by
//! orthogonal iteration on its Gram matrix; actions are then projected
//! onto that subspace. Contexts keep their original dimension.

use rand::Rng;

use crate::bandit::linalg::{dot, gram_schmidt, matvec};
use crate::types::ActionSpace;
use crate::{Error, Result};

/// Result of a reduction: the orthonormal basis columns (each of the
/// original dimension) and the action space re-embedded in coordinates of
/// that basis.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub basis: Vec<Vec<f64>>,
    pub reduced: ActionSpace,
}

impl Reduction {
    /// Maps a reduced embedding back to the original space.
    pub fn reconstruct(&self, reduced_emb: &[f64]) -> Vec<f64> {
        let d = self.basis[0].len();
        let mut out = vec![0.0; d];
        for (q, &c) in self.basis.iter().zip(reduced_emb) {
            for (o, &qi) in out.iter_mut().zip(q) {
                *o += c * qi;
            }
        }
        out
    }
}

/// Projects every action embedding onto the top `target_dim` principal
/// directions of the embedding matrix. `target_dim >= dim` returns the
/// identity reduction.
pub fn reduce_action_embeddings(
    actions: &ActionSpace,
    target_dim: usize,
    seed: u64,
) -> Result<Reduction> {
    let d = actions.dim();
    if target_dim == 0 {
        return Err(Error::Config("reduction target dimension must be positive".into()));
    }
    if target_dim >= d {
        let basis = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect();
        return Ok(Reduction { basis, reduced: actions.clone() });
    }

    // Gram matrix of the embedding matrix E (actions as rows): G = E^T E.
    let mut gram = vec![vec![0.0; d]; d];
    for a in actions.iter() {
        let e = &a.embedding;
        for i in 0..d {
            if e[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                gram[i][j] += e[i] * e[j];
            }
        }
    }

    let basis = principal_subspace(&gram, target_dim, seed)?;
    let reduced_embs: Vec<Vec<f64>> = actions
        .iter()
        .map(|a| basis.iter().map(|q| dot(q, &a.embedding)).collect())
        .collect();
    let reduced = actions.with_embeddings(reduced_embs)?;
    Ok(Reduction { basis, reduced })
}

/// Orthogonal iteration on a symmetric PSD matrix: returns `k` orthonormal
/// columns spanning (numerically) the top-k eigenspace, ordered by
/// descending Rayleigh quotient.
pub fn principal_subspace(gram: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = gram.len();
    if k > d {
        return Err(Error::Config(format!("subspace dimension {k} exceeds matrix size {d}")));
    }
    let mut rng = crate::rng::stream(seed, "principal-subspace-init");
    let fresh_col = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    };

    let mut q: Vec<Vec<f64>> = (0..k).map(|_| fresh_col(&mut rng)).collect();
    if gram_schmidt(&mut q, 1e-12) < k {
        // Astronomically unlikely with random draws; retry once.
        q = (0..k).map(|_| fresh_col(&mut rng)).collect();
        if gram_schmidt(&mut q, 1e-12) < k {
            return Err(Error::Numerical("failed to draw an independent start basis".into()));
        }
    }

    let mut prev_rayleigh = vec![f64::INFINITY; k];
    for _ in 0..500 {
        let mut z: Vec<Vec<f64>> = q.iter().map(|col| matvec(gram, col)).collect();
        gram_schmidt(&mut z, 1e-300);
        // Rank collapse means the matrix has fewer than k nonzero
        // eigenvalues; pad with fresh random directions orthogonal to the
        // kept ones (their eigenvalues are ~0, the projection just needs a
        // full coordinate system).
        while z.len() < k {
            let before = z.len();
            z.push(fresh_col(&mut rng));
            if gram_schmidt(&mut z, 1e-12) == before {
                return Err(Error::Numerical("failed to complete the reduction basis".into()));
            }
        }
        q = z;

        let rayleigh: Vec<f64> = q.iter().map(|col| dot(col, &matvec(gram, col))).collect();
        let scale = rayleigh.iter().fold(1.0_f64, |m, &r| m.max(r.abs()));
        let converged = rayleigh
            .iter()
            .zip(&prev_rayleigh)
            .all(|(r, p)| (r - p).abs() <= 1e-13 * scale);
        prev_rayleigh = rayleigh;
        if converged {
            break;
        }
    }

    // Order columns by descending Rayleigh quotient so callers can rely on
    // component 0 being the dominant direction.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| prev_rayleigh[b].total_cmp(&prev_rayleigh[a]));
    Ok(order.into_iter().map(|i| std::mem::take(&mut q[i])).collect())
}

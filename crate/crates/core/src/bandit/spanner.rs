//! Approximate barycentric spanner of the action set.
//!
//! A C-approximate spanner is a subset of actions whose embeddings form a
//! basis of the action span such that every action's coordinates in that
//! basis are bounded by C in absolute value. Exploration draws only from
//! the spanner, which keeps the exploration support small while still
//! exciting every direction of the span.

use crate::bandit::linalg::{gram_schmidt, norm, residual, solve, transpose, Lu};
use crate::types::ActionSpace;
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-9;

/// Slack applied to the swap test so ties cannot cycle.
const SWAP_SLACK: f64 = 1.0 + 1e-9;

/// Computes a C-approximate barycentric spanner and returns the chosen
/// action ids, ascending. The spanner size equals the rank of the action
/// embedding set.
pub fn compute_spanner(actions: &ActionSpace, c: f64) -> Result<Vec<usize>> {
    if !(c >= 1.0) {
        return Err(Error::Config(format!("spanner approximation factor must be >= 1, got {c}")));
    }

    // Work in coordinates of an orthonormal basis of the span, so the
    // basis matrices below stay square even for rank-deficient sets.
    let mut span_basis: Vec<Vec<f64>> =
        actions.iter().map(|a| a.embedding.clone()).collect();
    let rank = gram_schmidt(&mut span_basis, RANK_TOL);
    if rank == 0 {
        return Err(Error::Numerical("all action embeddings are zero".into()));
    }
    let coords: Vec<Vec<f64>> = actions
        .iter()
        .map(|a| span_basis.iter().map(|q| crate::bandit::linalg::dot(q, &a.embedding)).collect())
        .collect();

    // Greedy linearly-independent initialization.
    let mut chosen: Vec<usize> = Vec::with_capacity(rank);
    let mut partial: Vec<Vec<f64>> = Vec::with_capacity(rank);
    for (id, coord) in coords.iter().enumerate() {
        if chosen.len() == rank {
            break;
        }
        let r = residual(&partial, coord);
        let n = norm(&r);
        if n > RANK_TOL {
            partial.push(r.iter().map(|x| x / n).collect());
            chosen.push(id);
        }
    }
    if chosen.len() < rank {
        return Err(Error::Numerical(
            "failed to initialize a basis of the action span".into(),
        ));
    }

    // Swap loop: replacing basis element i by action a scales |det| by
    // |lambda_i(a)|, so any coefficient above C strictly grows the
    // determinant and the loop terminates.
    let max_sweeps = 64 * rank.max(1) * actions.len().max(1);
    let mut sweeps = 0;
    'outer: loop {
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::Numerical("spanner swap loop failed to settle".into()));
        }
        let basis_cols: Vec<Vec<f64>> =
            transpose(&chosen.iter().map(|&id| coords[id].clone()).collect::<Vec<_>>());
        let lu = Lu::factor(&basis_cols)?;
        for (id, coord) in coords.iter().enumerate() {
            if chosen.contains(&id) {
                continue;
            }
            let lambda = lu.solve(coord)?;
            if let Some((i, _)) = lambda
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .filter(|(_, l)| l.abs() > c * SWAP_SLACK)
            {
                chosen[i] = id;
                continue 'outer;
            }
        }
        break;
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Largest absolute barycentric coordinate over all actions, i.e. the
/// tightest C for which `spanner` is a C-approximate spanner.
pub fn max_coefficient(actions: &ActionSpace, spanner: &[usize]) -> Result<f64> {
    let mut span_basis: Vec<Vec<f64>> =
        spanner.iter().map(|&id| actions.embedding(id).to_vec()).collect();
    let rank = gram_schmidt(&mut span_basis, RANK_TOL);
    if rank != spanner.len() {
        return Err(Error::Numerical("spanner members are not linearly independent".into()));
    }
    let coord = |emb: &[f64]| -> Vec<f64> {
        span_basis.iter().map(|q| crate::bandit::linalg::dot(q, emb)).collect()
    };
    let basis_cols =
        transpose(&spanner.iter().map(|&id| coord(actions.embedding(id))).collect::<Vec<_>>());
    let mut worst = 0.0_f64;
    for a in actions.iter() {
        let c = coord(&a.embedding);
        let in_span = residual(&span_basis, &a.embedding);
        if norm(&in_span) > 1e-6 * norm(&a.embedding).max(1.0) {
            return Err(Error::Numerical(format!(
                "action {} lies outside the spanner's span",
                a.id
            )));
        }
        let lambda = solve(&basis_cols, &c)?;
        for l in lambda {
            worst = worst.max(l.abs());
        }
    }
    Ok(worst)
}

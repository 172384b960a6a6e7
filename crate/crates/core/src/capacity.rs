//! Capacity driver: one integral equation per boundary component, component
//! means of the resulting `h_j`, then the bordered `(ℓ+1) × (ℓ+1)` system
//!
//! ```text
//! [ H  -1 ] [ m      ]   [ 0 ]
//! [ 1ᵀ  0 ] [ log μ  ] = [ 1 ]
//! ```
//!
//! whose solution gives the exponents `m_j` of the lemniscatic domain and
//! `μ = c(E)`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bie::{BieSolver, SolveOptions};
use crate::geometry::DiscretizedBoundary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacityOptions {
    pub solve: SolveOptions,
}

/// Diagnostics of the solve for one auxiliary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    /// Largest `max h - min h` over a single component.
    pub constancy_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Logarithmic capacity `c(E)`.
    pub mu: f64,
    pub log_mu: f64,
    /// Exponents `m_1..m_ℓ`, summing to one.
    pub m: Vec<f64>,
    /// `h_matrix[k][j]` is the mean of `h_j` over component `k`.
    pub h_matrix: Vec<Vec<f64>>,
    pub per_solve: Vec<SolveDiagnostics>,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

/// `γ_j(t) = -log |η(t) - α_j|` on every node.
pub fn gamma_j(disc: &DiscretizedBoundary, j: usize) -> Result<Vec<f64>> {
    let alpha = *disc
        .alphas
        .get(j)
        .ok_or_else(|| Error::Domain(format!("component index {j} out of range")))?;
    disc.eta
        .iter()
        .map(|z| {
            let r = (z - alpha).norm();
            if r == 0.0 {
                Err(Error::AlphaOutside { component: j })
            } else {
                Ok(-r.ln())
            }
        })
        .collect()
}

/// Arithmetic mean of `h` over each block of `n` nodes.
pub fn component_means(h: &[f64], n: usize) -> Vec<f64> {
    h.chunks(n).map(|c| c.iter().sum::<f64>() / n as f64).collect()
}

/// Solves the bordered system for `(m, log μ)` by LU with partial pivoting.
pub fn solve_capacity_system(h_matrix: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let l = h_matrix.len();
    if l == 0 || h_matrix.iter().any(|row| row.len() != l) {
        return Err(Error::Domain("h_matrix must be square and non-empty".into()));
    }
    if h_matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("h_matrix"));
    }
    let a = DMatrix::from_fn(l + 1, l + 1, |i, j| match (i < l, j < l) {
        (true, true) => h_matrix[i][j],
        (true, false) => -1.0,
        (false, true) => 1.0,
        (false, false) => 0.0,
    });
    let mut rhs = DVector::zeros(l + 1);
    rhs[l] = 1.0;
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("capacity system (degenerate or overlapping geometry?)".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("capacity system".into()));
    }
    Ok((x.iter().take(l).copied().collect(), x[l]))
}

/// Logarithmic capacity of the compact set bounded by `disc`.
pub fn logcapacity(disc: &DiscretizedBoundary, opts: &CapacityOptions) -> Result<CapacityResult> {
    let start = Instant::now();
    let l = disc.components();
    let n = disc.n();
    let dim = disc.len();

    let mut gammas = DMatrix::zeros(dim, l);
    for j in 0..l {
        gammas.column_mut(j).copy_from_slice(&gamma_j(disc, j)?);
    }
    let solver = BieSolver::new(disc, opts.solve)?;
    let solutions = solver.solve_block(&gammas, None)?;

    let mut h_matrix = vec![vec![0.0; l]; l];
    let mut per_solve = Vec::with_capacity(l);
    for (j, sol) in solutions.iter().enumerate() {
        for (k, mean) in component_means(&sol.h, n).into_iter().enumerate() {
            h_matrix[k][j] = mean;
        }
        per_solve.push(SolveDiagnostics {
            iterations: sol.iterations,
            residual: sol.residual,
            constancy_deviation: sol.constancy_deviation(n),
        });
    }
    let (m, log_mu) = solve_capacity_system(&h_matrix)?;
    let mu = log_mu.exp();
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::NonFinite("capacity"));
    }
    Ok(CapacityResult {
        mu,
        log_mu,
        m,
        h_matrix,
        per_solve,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

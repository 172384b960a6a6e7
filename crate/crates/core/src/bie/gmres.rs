//! Restart-free GMRES for several right-hand sides sharing one operator.
//!
//! Each column runs its own Arnoldi process (modified Gram-Schmidt, Givens
//! rotations); the operator is applied to the still-active columns at once so
//! that a dense operator turns into a matrix-matrix product.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Convergence record of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub iterations: usize,
    /// Residual estimate relative to the norm of the right-hand side.
    pub residual: f64,
}

struct Column {
    bnorm: f64,
    basis: Vec<Vec<f64>>,
    hess: Vec<Vec<f64>>,
    cs: Vec<f64>,
    sn: Vec<f64>,
    g: Vec<f64>,
    done: bool,
    stats: ColumnStats,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A X = B` column by column. `apply` receives a block of vectors and
/// returns `A` times that block. Fails with [`Error::NotConverged`] when a
/// column misses `tol` within `maxit` iterations.
pub fn gmres_block<F>(
    mut apply: F,
    rhs: &DMatrix<f64>,
    guess: Option<&DMatrix<f64>>,
    tol: f64,
    maxit: usize,
) -> Result<(DMatrix<f64>, Vec<ColumnStats>)>
where
    F: FnMut(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let (dim, ncols) = rhs.shape();
    let mut x = match guess {
        Some(g) => {
            assert_eq!(g.shape(), rhs.shape(), "initial guess shape mismatch");
            g.clone()
        }
        None => DMatrix::zeros(dim, ncols),
    };
    let r0 = match guess {
        Some(g) => rhs - apply(g)?,
        None => rhs.clone(),
    };

    let mut cols: Vec<Column> = (0..ncols)
        .map(|c| {
            let b = rhs.column(c);
            let bnorm = b.norm();
            let r = r0.column(c);
            let beta = r.norm();
            let mut col = Column {
                bnorm,
                basis: Vec::new(),
                hess: Vec::new(),
                cs: Vec::new(),
                sn: Vec::new(),
                g: vec![beta],
                done: false,
                stats: ColumnStats {
                    iterations: 0,
                    residual: if bnorm > 0.0 { beta / bnorm } else { 0.0 },
                },
            };
            if bnorm == 0.0 || beta <= tol * bnorm {
                col.done = true;
                if bnorm == 0.0 {
                    col.stats.residual = 0.0;
                }
            } else {
                col.basis.push(r.iter().map(|v| v / beta).collect());
            }
            col
        })
        .collect();
    // a zero right-hand side has the zero solution regardless of the guess
    for (c, col) in cols.iter().enumerate() {
        if col.bnorm == 0.0 {
            x.column_mut(c).fill(0.0);
        }
    }

    for _ in 0..maxit {
        let active: Vec<usize> = (0..ncols).filter(|&c| !cols[c].done).collect();
        if active.is_empty() {
            break;
        }
        let mut block = DMatrix::zeros(dim, active.len());
        for (j, &c) in active.iter().enumerate() {
            block
                .column_mut(j)
                .copy_from_slice(cols[c].basis.last().expect("active column has a basis"));
        }
        let image = apply(&block)?;
        if image.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GMRES matrix-vector product"));
        }

        for (j, &c) in active.iter().enumerate() {
            let col = &mut cols[c];
            let k = col.basis.len() - 1;
            let mut w: Vec<f64> = image.column(j).iter().copied().collect();
            let mut h = vec![0.0; k + 2];
            for (i, v) in col.basis.iter().enumerate() {
                let hi = dot(&w, v);
                h[i] = hi;
                w.iter_mut().zip(v).for_each(|(wv, vv)| *wv -= hi * vv);
            }
            let hnext = norm(&w);
            h[k + 1] = hnext;

            for i in 0..k {
                let t = col.cs[i] * h[i] + col.sn[i] * h[i + 1];
                h[i + 1] = -col.sn[i] * h[i] + col.cs[i] * h[i + 1];
                h[i] = t;
            }
            let r = h[k].hypot(h[k + 1]);
            let (cs, sn) = if r == 0.0 { (1.0, 0.0) } else { (h[k] / r, h[k + 1] / r) };
            h[k] = r;
            h[k + 1] = 0.0;
            col.cs.push(cs);
            col.sn.push(sn);
            let gk = col.g[k];
            col.g[k] = cs * gk;
            col.g.push(-sn * gk);
            col.hess.push(h);

            col.stats.iterations = k + 1;
            col.stats.residual = col.g[k + 1].abs() / col.bnorm;

            if col.stats.residual <= tol || hnext == 0.0 {
                // back substitution on the rotated Hessenberg matrix
                let m = k + 1;
                let mut y = vec![0.0; m];
                for i in (0..m).rev() {
                    let mut s = col.g[i];
                    for l in i + 1..m {
                        s -= col.hess[l][i] * y[l];
                    }
                    if col.hess[i][i] == 0.0 {
                        return Err(Error::Singular("GMRES Hessenberg factor".into()));
                    }
                    y[i] = s / col.hess[i][i];
                }
                let mut xc = x.column_mut(c);
                for (yi, v) in y.iter().zip(&col.basis) {
                    for (xv, vv) in xc.iter_mut().zip(v) {
                        *xv += yi * vv;
                    }
                }
                col.done = true;
                col.basis = Vec::new();
                col.hess = Vec::new();
            } else {
                let inv = 1.0 / hnext;
                col.basis.push(w.iter().map(|v| v * inv).collect());
            }
        }
    }

    if let Some(worst) = cols.iter().filter(|c| !c.done).max_by(|a, b| a.stats.residual.total_cmp(&b.stats.residual)) {
        return Err(Error::NotConverged {
            iterations: worst.stats.iterations,
            residual: worst.stats.residual,
        });
    }
    Ok((x, cols.into_iter().map(|c| c.stats).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(dim: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(dim, dim, |i, j| {
            let noise: f64 = rng.gen_range(-1.0..1.0);
            if i == j {
                1.0 + 0.3 * noise
            } else {
                0.3 * noise / dim as f64
            }
        })
    }

    #[test]
    fn matches_lu_on_nonsymmetric_system() {
        let a = random_system(60, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = DMatrix::from_fn(60, 3, |_, _| rng.gen_range(-1.0..1.0));
        let (x, stats) = gmres_block(|v| Ok(&a * v), &b, None, 1e-14, 100).unwrap();
        let direct = a.clone().lu().solve(&b).unwrap();
        assert!((x - direct).amax() < 1e-12);
        assert!(stats.iter().all(|s| s.residual <= 1e-14));
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let a = random_system(10, 3);
        let b = DMatrix::zeros(10, 2);
        let (x, stats) = gmres_block(|v| Ok(&a * v), &b, None, 1e-14, 100).unwrap();
        assert_eq!(x.amax(), 0.0);
        assert!(stats.iter().all(|s| s.iterations == 0));
    }

    #[test]
    fn exact_guess_needs_no_iterations() {
        let a = random_system(20, 4);
        let b = DMatrix::from_element(20, 1, 1.0);
        let x0 = a.clone().lu().solve(&b).unwrap();
        let (_, stats) = gmres_block(|v| Ok(&a * v), &b, Some(&x0), 1e-12, 100).unwrap();
        assert_eq!(stats[0].iterations, 0);
    }

    #[test]
    fn reports_non_convergence() {
        let a = random_system(40, 5);
        let b = DMatrix::from_element(40, 1, 1.0);
        match gmres_block(|v| Ok(&a * v), &b, None, 1e-14, 2) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-14);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn block_and_single_agree() {
        let a = random_system(30, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = DMatrix::from_fn(30, 4, |_, _| rng.gen_range(-1.0..1.0));
        let (xb, _) = gmres_block(|v| Ok(&a * v), &b, None, 1e-14, 100).unwrap();
        for c in 0..4 {
            let bc = b.columns(c, 1).into_owned();
            let (xc, _) = gmres_block(|v| Ok(&a * v), &bc, None, 1e-14, 100).unwrap();
            assert!((xb.column(c) - xc.column(0)).amax() < 1e-14);
        }
    }
}

//! Nyström discretization of the boundary integral equation
//! `(I - N) μ = -M γ` with the Neumann kernel, and recovery of
//! `h = (M μ - (I - N) γ) / 2`.
//!
//! Both kernels come from `A(s, t) = η'(t) / (π (η(t) - η(s)))`:
//! `N = Im A` and `M = Re A`. The trapezoidal rule on the equidistant raw
//! nodes gives the weights `2π/n`. On the diagonal the limits
//! `Im(η''/(2η'))/π` and `Re(η''/(2η'))/π` are used. The real part has a
//! `cot((t - s)/2) / (2π)` singularity on each component; it is split off and
//! integrated with the even-`n` trapezoidal conjugation rule, which keeps only
//! odd index offsets with weight `2/n`.
//!
//! On components with graded corners the diagonal is instead set so that each
//! row integrates the kernel exactly over its own component (see
//! `exact_row_sums`), which restores `O(n^-p)` convergence of the capacity.

mod gmres;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::DiscretizedBoundary;
use crate::{Error, Result};

pub use gmres::{gmres_block, ColumnStats};

/// Largest system dimension for which the Neumann matrix is kept in memory.
/// Larger systems regenerate kernel columns on every product.
pub const STORE_LIMIT: usize = 16_384;

/// Number of kernel columns generated at once when a matrix is not stored.
const TILE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative residual target of the Krylov iteration.
    pub tol: f64,
    /// Iteration cap (no restarts).
    pub maxit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            maxit: 100,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::Domain("maxit must be at least 1".into()));
        }
        Ok(())
    }
}

/// Explicit Nyström matrices (weights included).
#[derive(Debug, Clone)]
pub struct KernelMatrices {
    /// Discretized `N`.
    pub neumann: DMatrix<f64>,
    /// Discretized `M`, singular part included.
    pub companion: DMatrix<f64>,
}

impl KernelMatrices {
    /// `I - N`.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        DMatrix::identity(self.neumann.nrows(), self.neumann.ncols()) - &self.neumann
    }
}

/// Density `μ` and the piecewise constant function `h` at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BieSolution {
    pub mu: Vec<f64>,
    pub h: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl BieSolution {
    /// Largest spread `max h - min h` over a single component.
    pub fn constancy_deviation(&self, n: usize) -> f64 {
        self.h
            .chunks(n)
            .map(|c| {
                let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// Generates columns of the discretized kernels on demand.
struct KernelColumns<'a> {
    disc: &'a DiscretizedBoundary,
    re: Vec<f64>,
    im: Vec<f64>,
    /// `cot(π m / n)` for `m = 0..n` (entry 0 unused).
    cot: Vec<f64>,
    diag_n: Vec<f64>,
    diag_m: Vec<f64>,
}

impl<'a> KernelColumns<'a> {
    fn new(disc: &'a DiscretizedBoundary) -> Result<Self> {
        let n = disc.n();
        let inv_n = 1.0 / n as f64;
        let mut diag_n = Vec::with_capacity(disc.len());
        let mut diag_m = Vec::with_capacity(disc.len());
        for (i, (&d1, &d2)) in disc.etp.iter().zip(&disc.etpp).enumerate() {
            if d1.norm_sqr() == 0.0 {
                if !disc.corner_node[i] {
                    return Err(Error::ZeroTangent { node: i });
                }
                diag_n.push(0.0);
                diag_m.push(0.0);
            } else {
                let q = d2 / d1;
                diag_n.push(inv_n * q.im);
                diag_m.push(inv_n * q.re);
            }
        }
        for k in 0..disc.components() {
            let range = disc.range(k);
            if disc.corner_node[range.clone()].iter().any(|&c| c) {
                exact_row_sums(disc, range, &mut diag_n, &mut diag_m);
            }
        }
        let mut cot = vec![0.0; n];
        for (m, c) in cot.iter_mut().enumerate().skip(1) {
            *c = 1.0 / (PI * m as f64 / n as f64).tan();
        }
        Ok(Self {
            disc,
            re: disc.eta.iter().map(|z| z.re).collect(),
            im: disc.eta.iter().map(|z| z.im).collect(),
            cot,
            diag_n,
            diag_m,
        })
    }

    fn dim(&self) -> usize {
        self.re.len()
    }

    /// Writes column `t` of `N` and/or `M`.
    fn column(&self, t: usize, ncol: Option<&mut [f64]>, mcol: Option<&mut [f64]>) {
        let n = self.disc.n();
        let w = 2.0 / n as f64;
        let inv_n = 1.0 / n as f64;
        let d = self.disc.etp[t];
        let (pr, pi) = (d.re * w, d.im * w);
        let (xr, xi) = (self.re[t], self.im[t]);
        let comp = t / n;
        let jt = t % n;
        let base = comp * n;

        if let Some(col) = ncol {
            for ((out, &yr), &yi) in col.iter_mut().zip(&self.re).zip(&self.im) {
                let dr = xr - yr;
                let di = xi - yi;
                *out = (pi * dr - pr * di) / (dr * dr + di * di);
            }
            col[t] = self.diag_n[t];
        }
        if let Some(col) = mcol {
            for ((out, &yr), &yi) in col.iter_mut().zip(&self.re).zip(&self.im) {
                let dr = xr - yr;
                let di = xi - yi;
                *out = (pr * dr + pi * di) / (dr * dr + di * di);
            }
            // split off cot((t-s)/2)/(2π) and add the conjugation rule back
            for is in 0..n {
                if is == jt {
                    continue;
                }
                let off = (jt + n - is) % n;
                let c = inv_n * self.cot[off];
                col[base + is] += if off % 2 == 1 { c } else { -c };
            }
            col[t] = self.diag_m[t];
        }
    }

    /// Fills columns `c0..c0 + width` into column-major buffers.
    fn fill(&self, c0: usize, width: usize, nbuf: Option<&mut [f64]>, mbuf: Option<&mut [f64]>) {
        let dim = self.dim();
        match (nbuf, mbuf) {
            (Some(nb), Some(mb)) => nb
                .par_chunks_mut(dim)
                .zip(mb.par_chunks_mut(dim))
                .take(width)
                .enumerate()
                .for_each(|(j, (nc, mc))| self.column(c0 + j, Some(nc), Some(mc))),
            (Some(nb), None) => nb
                .par_chunks_mut(dim)
                .take(width)
                .enumerate()
                .for_each(|(j, nc)| self.column(c0 + j, Some(nc), None)),
            (None, Some(mb)) => mb
                .par_chunks_mut(dim)
                .take(width)
                .enumerate()
                .for_each(|(j, mc)| self.column(c0 + j, None, Some(mc))),
            (None, None) => {}
        }
    }

    /// `K X` for `K = N` or `M`, generated tile by tile.
    fn apply_tiled(&self, x: &DMatrix<f64>, companion: bool) -> DMatrix<f64> {
        let dim = self.dim();
        let mut y = DMatrix::zeros(dim, x.ncols());
        let mut buf = vec![0.0; dim * TILE.min(dim)];
        let mut c0 = 0;
        while c0 < dim {
            let width = TILE.min(dim - c0);
            let slice = &mut buf[..dim * width];
            if companion {
                self.fill(c0, width, None, Some(slice));
            } else {
                self.fill(c0, width, Some(slice), None);
            }
            let tile = DMatrixView::from_slice(slice, dim, width);
            y.gemm(1.0, &tile, &x.rows(c0, width), 1.0);
            c0 += width;
        }
        y
    }
}

/// On a graded component the trapezoidal rule does not resolve the kernel
/// for nodes next to a corner, so the diagonal is chosen to make each row
/// integrate the kernel exactly over its own component. At a smooth point of
/// a clockwise curve `PV ∫ η'(t) / (π (η(t) - η(s))) dt = -i`. The same value
/// is used on corner rows: `h` and `μ` are continuous there, and subtracting
/// `x(s)` makes the row the limit of its smooth neighbours rather than the
/// angle-dependent value at the corner itself. The conjugation rule for `M`
/// sums to zero along a row and needs no adjustment.
fn exact_row_sums(disc: &DiscretizedBoundary, range: std::ops::Range<usize>, diag_n: &mut [f64], diag_m: &mut [f64]) {
    let w = 2.0 / range.len() as f64;
    for i in range.clone() {
        let z = disc.eta[i];
        let mut sum = Complex64::new(0.0, 0.0);
        for j in range.clone() {
            if j != i {
                sum += disc.etp[j] / (disc.eta[j] - z);
            }
        }
        diag_n[i] = -1.0 - w * sum.im;
        diag_m[i] = -w * sum.re;
    }
}

/// Assembles both Nyström matrices explicitly.
pub fn assemble(disc: &DiscretizedBoundary) -> Result<KernelMatrices> {
    let cols = KernelColumns::new(disc)?;
    let dim = cols.dim();
    let mut nbuf = vec![0.0; dim * dim];
    let mut mbuf = vec![0.0; dim * dim];
    cols.fill(0, dim, Some(&mut nbuf), Some(&mut mbuf));
    Ok(KernelMatrices {
        neumann: DMatrix::from_vec(dim, dim, nbuf),
        companion: DMatrix::from_vec(dim, dim, mbuf),
    })
}

/// Operator for repeated solves on one boundary. Keeps `N` in memory when the
/// system is at most [`STORE_LIMIT`] unknowns and regenerates `M` on demand.
pub struct BieSolver<'a> {
    cols: KernelColumns<'a>,
    neumann: Option<DMatrix<f64>>,
    opts: SolveOptions,
}

impl<'a> BieSolver<'a> {
    pub fn new(disc: &'a DiscretizedBoundary, opts: SolveOptions) -> Result<Self> {
        opts.validate()?;
        let cols = KernelColumns::new(disc)?;
        let dim = cols.dim();
        let neumann = if dim <= STORE_LIMIT {
            let mut nbuf = vec![0.0; dim * dim];
            cols.fill(0, dim, Some(&mut nbuf), None);
            if nbuf.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("Neumann kernel"));
            }
            Some(DMatrix::from_vec(dim, dim, nbuf))
        } else {
            None
        };
        Ok(Self { cols, neumann, opts })
    }

    pub fn dim(&self) -> usize {
        self.cols.dim()
    }

    /// `N X`.
    pub fn apply_neumann(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.neumann {
            Some(nm) => nm * x,
            None => self.cols.apply_tiled(x, false),
        }
    }

    /// `M X`.
    pub fn apply_companion(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.cols.apply_tiled(x, true)
    }

    /// `(I - N) X`.
    pub fn apply_system(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x - self.apply_neumann(x)
    }

    /// Solves for every column of `gammas` (one right-hand side per column).
    pub fn solve_block(&self, gammas: &DMatrix<f64>, guess: Option<&DMatrix<f64>>) -> Result<Vec<BieSolution>> {
        let dim = self.dim();
        if gammas.nrows() != dim {
            return Err(Error::Domain(format!(
                "gamma has {} rows, boundary has {dim} nodes",
                gammas.nrows()
            )));
        }
        if gammas.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side"));
        }
        let rhs = -self.apply_companion(gammas);
        let (mu, stats) = gmres_block(
            |v| Ok(self.apply_system(v)),
            &rhs,
            guess,
            self.opts.tol,
            self.opts.maxit,
        )?;
        let h = (self.apply_companion(&mu) - self.apply_system(gammas)) * 0.5;
        Ok(stats
            .iter()
            .enumerate()
            .map(|(c, s)| BieSolution {
                mu: mu.column(c).iter().copied().collect(),
                h: h.column(c).iter().copied().collect(),
                iterations: s.iterations,
                residual: s.residual,
            })
            .collect())
    }

    pub fn solve(&self, gamma: &[f64], guess: Option<&[f64]>) -> Result<BieSolution> {
        let g = DMatrix::from_column_slice(gamma.len(), 1, gamma);
        let x0 = guess.map(|x| DMatrix::from_column_slice(x.len(), 1, x));
        Ok(self.solve_block(&g, x0.as_ref())?.remove(0))
    }
}

/// Solves `(I - N) μ = -M γ` and returns `μ` and `h = (M μ - (I - N) γ) / 2`.
pub fn solve_bie(disc: &DiscretizedBoundary, gamma: &[f64], opts: &SolveOptions) -> Result<BieSolution> {
    if gamma.len() != disc.len() {
        return Err(Error::Domain(format!(
            "gamma has length {}, boundary has {} nodes",
            gamma.len(),
            disc.len()
        )));
    }
    BieSolver::new(disc, *opts)?.solve(gamma, None)
}

//! Cantor-type sets `E_k^r = r E_{k-1}^r ∪ (r E_{k-1}^r + 1 - r)`, `E_0 = [0, 1]`,
//! their capacities through the interval pipeline, and the log-linear
//! extrapolation of the differences `c(E_k) - c(E_{k+1})` to `k → ∞`.

use serde::{Deserialize, Serialize};

use crate::reference::cantor_f;
use crate::slitmap::{capacity_of_intervals, OpenUpOptions};
use crate::{Error, Result};

/// Largest supported number of intervals.
pub const MAX_INTERVALS: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorLevel {
    pub k: usize,
    pub r: f64,
    pub intervals: Vec<[f64; 2]>,
}

/// The `2^k` intervals of level `k`, sorted left to right.
pub fn cantor_intervals(k: usize, r: f64) -> Result<CantorLevel> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::Domain(format!("Cantor ratio must lie in (0, 0.5], got {r}")));
    }
    if k > 15 {
        return Err(Error::Domain(format!("level {k} exceeds {MAX_INTERVALS} intervals")));
    }
    let mut intervals = vec![[0.0, 1.0]];
    for _ in 0..k {
        let scaled: Vec<[f64; 2]> = intervals.iter().map(|&[a, b]| [r * a, r * b]).collect();
        let shifted = scaled.iter().map(|&[a, b]| [a + 1.0 - r, b + 1.0 - r]);
        intervals = scaled.iter().copied().chain(shifted).collect();
    }
    Ok(CantorLevel { k, r, intervals })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CantorOptions {
    pub open_up: OpenUpOptions,
    /// Nodes per ellipse in the capacity stage; `None` picks a default by level size.
    pub cap_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCapacity {
    pub k: usize,
    pub capacity: f64,
    pub open_up_iterations: usize,
    pub cap_n: usize,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSequence {
    pub r: f64,
    pub levels: Vec<LevelCapacity>,
    /// First level that failed, with its error; later levels are not attempted.
    #[serde(skip)]
    pub failure: Option<(usize, Error)>,
}

impl CantorSequence {
    pub fn capacities(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.capacity).collect()
    }
}

/// Capacities of `E_1^r, …, E_kmax^r`.
pub fn capacity_sequence(kmax: usize, r: f64, opts: &CantorOptions) -> Result<CantorSequence> {
    if kmax == 0 {
        return Err(Error::Domain("kmax must be at least 1".into()));
    }
    cantor_intervals(kmax, r)?;
    let mut out = CantorSequence {
        r,
        levels: Vec::with_capacity(kmax),
        failure: None,
    };
    for k in 1..=kmax {
        let level = cantor_intervals(k, r)?;
        match capacity_of_intervals(&level.intervals, &opts.open_up, opts.cap_n) {
            Ok(res) => out.levels.push(LevelCapacity {
                k,
                capacity: res.capacity.mu,
                open_up_iterations: res.open_up.history.len(),
                cap_n: res.cap_n,
                elapsed: res.elapsed,
            }),
            Err(e) => {
                out.failure = Some((k, e));
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    /// Slope of `log d_k` against `k`.
    pub p1: f64,
    pub p2: f64,
    /// `d_k = c_k - c_{k+1}` for `k = first_k, …`.
    pub d: Vec<f64>,
    /// Level of the first difference.
    pub first_k: usize,
    pub estimate: f64,
    /// Max-norm residual of the line fit on `log d_k`.
    pub residual: f64,
    /// Number of tail terms summed.
    pub tail_terms: usize,
}

impl ExtrapolationFit {
    pub fn p(&self, k: f64) -> f64 {
        self.p1 * k + self.p2
    }
}

/// Fits `log d_k ≈ p1 k + p2` and sums the geometric tail:
/// `c ≈ c_K - Σ_{j ≥ K} exp(p(j))`, stopping once a term drops below
/// `term_floor`. `values[i]` is the capacity of level `first_k + i`; the first
/// `burn_in` differences are left out of the fit.
pub fn extrapolate(values: &[f64], first_k: usize, term_floor: f64, burn_in: usize) -> Result<ExtrapolationFit> {
    if values.len() < 3 {
        return Err(Error::Domain("extrapolation needs at least 3 levels".into()));
    }
    if !(term_floor > 0.0) {
        return Err(Error::Domain("term_floor must be positive".into()));
    }
    let d: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!(
            "capacities must strictly decrease (level {} to {})",
            first_k + i,
            first_k + i + 1
        )));
    }
    if d.len() < burn_in + 2 {
        return Err(Error::Domain("burn_in leaves fewer than 2 differences".into()));
    }
    let pts: Vec<(f64, f64)> = d
        .iter()
        .enumerate()
        .skip(burn_in)
        .map(|(i, v)| ((first_k + i) as f64, v.ln()))
        .collect();
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - xbar).powi(2)).sum();
    let p1 = sxy / sxx;
    let p2 = ybar - p1 * xbar;
    if !(p1 < 0.0) {
        return Err(Error::Domain(format!("differences do not decay (slope {p1})")));
    }
    let residual = pts.iter().map(|(x, y)| (y - (p1 * x + p2)).abs()).fold(0.0, f64::max);

    let last_k = first_k + values.len() - 1;
    let mut tail = 0.0;
    let mut tail_terms = 0;
    for j in last_k.. {
        let term = (p1 * j as f64 + p2).exp();
        if term < term_floor {
            break;
        }
        tail += term;
        tail_terms += 1;
        if tail_terms > 10_000_000 {
            return Err(Error::SeriesDivergence(tail_terms));
        }
    }
    Ok(ExtrapolationFit {
        p1,
        p2,
        d,
        first_k,
        estimate: values[values.len() - 1] - tail,
        residual,
        tail_terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Relative gap `1 - 2r`.
    pub q: f64,
    pub r: f64,
    pub estimate: Option<f64>,
    pub cantor_f: Option<f64>,
    pub error: Option<String>,
}

/// Extrapolated capacity of `E^r` for each `r`; failures are recorded per row.
pub fn generalized_sweep(rs: &[f64], kmax: usize, opts: &CantorOptions) -> Vec<SweepRow> {
    rs.iter()
        .map(|&r| {
            let result = capacity_sequence(kmax, r, opts).and_then(|seq| {
                if let Some((k, e)) = seq.failure {
                    return Err(Error::Domain(format!("level {k} failed: {e}")));
                }
                extrapolate(&seq.capacities(), 1, 1e-16, 0)
            });
            let (estimate, error) = match result {
                Ok(fit) => (Some(fit.estimate), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRow {
                q: 1.0 - 2.0 * r,
                r,
                estimate,
                cantor_f: cantor_f(r).ok(),
                error,
            }
        })
        .collect()
}

//! Conformal map from the exterior of ellipses onto a parallel slit domain,
//! and the iteration that "opens up" given horizontal slits into ellipses.
//!
//! For a domain `G` bounded by clockwise curves `η`, solving the integral
//! equation with `γ = Im η` yields `μ` and a piecewise constant `h`; the map
//! `ω(ζ) = ζ - i f(ζ)` with `f(η) = γ + h + iμ` sends `G` onto the plane
//! minus horizontal slits at heights `-h_j`, normalized by
//! `ω(ζ) = ζ + O(1/ζ)`. Since that normalization preserves capacity, the
//! capacity of a union of intervals equals that of the complement of the
//! converged preimage.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bie::{BieSolver, SolveOptions};
use crate::capacity::{logcapacity, CapacityOptions, CapacityResult};
use crate::geometry::{discretize, BoundaryComponent, DiscretizedBoundary, Mesh};
use crate::{Error, Result};

/// Horizontal slit with midpoint `center` and length `length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slit {
    pub center: Complex64,
    pub length: f64,
}

impl Slit {
    fn left(&self) -> f64 {
        self.center.re - 0.5 * self.length
    }

    fn right(&self) -> f64 {
        self.center.re + 0.5 * self.length
    }
}

/// The plane minus finitely many pairwise disjoint horizontal slits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitDomain {
    slits: Vec<Slit>,
}

impl SlitDomain {
    pub fn new(slits: Vec<Slit>) -> Result<Self> {
        if slits.is_empty() {
            return Err(Error::Domain("slit domain needs at least one slit".into()));
        }
        for (j, s) in slits.iter().enumerate() {
            if !(s.length > 0.0 && s.length.is_finite() && s.center.is_finite()) {
                return Err(Error::Domain(format!("slit {j} has invalid center or length")));
            }
        }
        // Sort by height then left end; neighbors on the same line must not touch.
        let mut order: Vec<usize> = (0..slits.len()).collect();
        order.sort_by(|&a, &b| {
            slits[a]
                .center
                .im
                .total_cmp(&slits[b].center.im)
                .then(slits[a].left().total_cmp(&slits[b].left()))
        });
        for w in order.windows(2) {
            let (p, q) = (&slits[w[0]], &slits[w[1]]);
            if p.center.im == q.center.im && q.left() <= p.right() {
                return Err(Error::Domain(format!("slits {} and {} intersect", w[0], w[1])));
            }
        }
        Ok(Self { slits })
    }

    /// Slits on the real line, one per interval `[a, b]`.
    pub fn from_intervals(intervals: &[[f64; 2]]) -> Result<Self> {
        let slits = intervals
            .iter()
            .map(|&[a, b]| {
                if !(a < b) {
                    return Err(Error::Domain(format!("interval [{a}, {b}] has no positive length")));
                }
                Ok(Slit {
                    center: Complex64::new(0.5 * (a + b), 0.0),
                    length: b - a,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(slits)
    }

    pub fn slits(&self) -> &[Slit] {
        &self.slits
    }

    pub fn len(&self) -> usize {
        self.slits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slits.is_empty()
    }
}

/// Ellipses `ζ_j + 0.5 (a_j cos t - i b_j sin t)`; `a_j`, `b_j` are full axis
/// lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsePreimage {
    pub centers: Vec<Complex64>,
    pub major: Vec<f64>,
    pub minor: Vec<f64>,
    pub r: f64,
}

impl EllipsePreimage {
    /// Initial guess for the iteration: same centers, `a = (1 - r/2)|L|`.
    pub fn initial(target: &SlitDomain, r: f64) -> Self {
        let centers = target.slits.iter().map(|s| s.center).collect();
        let major: Vec<f64> = target.slits.iter().map(|s| (1.0 - 0.5 * r) * s.length).collect();
        let minor = major.iter().map(|a| r * a).collect();
        Self { centers, major, minor, r }
    }

    /// Boundary components, with the ellipse centers as auxiliary points.
    pub fn components(&self) -> Vec<BoundaryComponent> {
        self.centers
            .iter()
            .zip(self.major.iter().zip(&self.minor))
            .map(|(&c, (&a, &b))| BoundaryComponent::ellipse(c, 0.5 * a, 0.5 * b, 0.0).with_alpha(c))
            .collect()
    }

    pub fn discretize(&self, n: usize) -> Result<DiscretizedBoundary> {
        discretize(&self.components(), &Mesh::uniform(n)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenUpOptions {
    /// Minor to major axis ratio of the preimage ellipses.
    pub r: f64,
    /// Nodes per ellipse during the iteration.
    pub n: usize,
    /// Absolute bound on `max_j(|z_j^i - z_j| + ||L_j^i| - |L_j||)`; scale it
    /// with the size and position of the slits.
    pub eps: f64,
    pub max_iter: usize,
    pub solve: SolveOptions,
}

impl Default for OpenUpOptions {
    fn default() -> Self {
        Self {
            r: 0.5,
            n: 64,
            eps: 1e-14,
            max_iter: 50,
            solve: SolveOptions::default(),
        }
    }
}

impl OpenUpOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::Domain(format!("axis ratio r must lie in (0, 1), got {}", self.r)));
        }
        if !(self.eps > 0.0) || self.max_iter == 0 {
            return Err(Error::Domain("eps must be positive and max_iter at least 1".into()));
        }
        Mesh::uniform(self.n)?;
        self.solve.validate()
    }
}

/// Result of mapping a known domain onto a slit domain.
#[derive(Debug, Clone)]
pub struct SlitMap {
    pub slits: Vec<Slit>,
    /// `ω(η(t))` at every node.
    pub omega: Vec<Complex64>,
    /// Per component `max - min` of `Im ω`.
    pub flatness: Vec<f64>,
    pub mu: Vec<f64>,
    pub iterations: usize,
}

impl SlitMap {
    /// Largest flatness defect, scaled by `1 + |h_j|`.
    pub fn max_relative_flatness(&self) -> f64 {
        self.flatness
            .iter()
            .zip(&self.slits)
            .map(|(f, s)| f / (1.0 + s.center.im.abs()))
            .fold(0.0, f64::max)
    }

    /// The slits as a validated domain.
    pub fn domain(&self) -> Result<SlitDomain> {
        SlitDomain::new(self.slits.clone())
    }
}

/// Maps the exterior of `disc` onto a parallel slit domain.
pub fn map_to_slits(disc: &DiscretizedBoundary, solve: &SolveOptions) -> Result<SlitMap> {
    map_to_slits_from(disc, solve, None)
}

/// [`map_to_slits`] with an initial guess for the density `μ`.
pub fn map_to_slits_from(disc: &DiscretizedBoundary, solve: &SolveOptions, guess: Option<&[f64]>) -> Result<SlitMap> {
    let gamma: Vec<f64> = disc.eta.iter().map(|z| z.im).collect();
    let solver = BieSolver::new(disc, *solve)?;
    let sol = solver.solve(&gamma, guess)?;
    let n = disc.n();
    let omega: Vec<Complex64> = (0..disc.len())
        .map(|i| disc.eta[i] + sol.mu[i] - Complex64::i() * (gamma[i] + sol.h[i]))
        .collect();

    let mut slits = Vec::with_capacity(disc.components());
    let mut flatness = Vec::with_capacity(disc.components());
    for k in 0..disc.components() {
        let part = &omega[disc.range(k)];
        let (lo, hi) = part.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w.re), hi.max(w.re)));
        let (ilo, ihi) = part.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w.im), hi.max(w.im)));
        let h_mean = sol.h[disc.range(k)].iter().sum::<f64>() / n as f64;
        slits.push(Slit {
            center: Complex64::new(0.5 * (lo + hi), -h_mean),
            length: hi - lo,
        });
        flatness.push(ihi - ilo);
    }
    if slits.iter().any(|s| !s.center.is_finite() || !s.length.is_finite()) {
        return Err(Error::NonFinite("slit map"));
    }
    Ok(SlitMap {
        slits,
        omega,
        flatness,
        mu: sol.mu,
        iterations: sol.iterations,
    })
}

/// One step of the open-up iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenUpStep {
    pub iteration: usize,
    /// `max_j (|z_j^i - z_j| + ||L_j^i| - |L_j||)`.
    pub defect: f64,
    pub gmres_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenUp {
    pub preimage: EllipsePreimage,
    pub history: Vec<OpenUpStep>,
}

/// Finds ellipses whose exterior is mapped onto `target` by the normalized
/// slit map.
pub fn open_up(target: &SlitDomain, opts: &OpenUpOptions) -> Result<OpenUp> {
    opts.validate()?;
    let mut pre = EllipsePreimage::initial(target, opts.r);
    let mut history = Vec::new();
    let mut guess: Option<Vec<f64>> = None;
    for i in 1..=opts.max_iter {
        let disc = pre.discretize(opts.n).map_err(|e| match e {
            Error::CurvesIntersect { .. } | Error::Geometry(_) | Error::AlphaOutside { .. } if i > 1 => {
                Error::Collapsed(format!("preimage ellipses overlap after iteration {}: {e}", i - 1))
            }
            other => other,
        })?;
        let map = map_to_slits_from(&disc, &opts.solve, guess.as_deref())?;
        let mut defect: f64 = 0.0;
        for (j, (got, want)) in map.slits.iter().zip(target.slits()).enumerate() {
            let dz = got.center - want.center;
            let dl = got.length - want.length;
            defect = defect.max(dz.norm() + dl.abs());
            pre.centers[j] -= dz;
            pre.major[j] -= dl;
            if !(pre.major[j] > 0.0) {
                return Err(Error::Collapsed(format!("ellipse {j} lost its major axis at iteration {i}")));
            }
            pre.minor[j] = pre.r * pre.major[j];
        }
        history.push(OpenUpStep {
            iteration: i,
            defect,
            gmres_iterations: map.iterations,
        });
        if !defect.is_finite() {
            return Err(Error::NonFinite("open-up defect"));
        }
        if defect < opts.eps {
            return Ok(OpenUp { preimage: pre, history });
        }
        guess = Some(map.mu);
    }
    Err(Error::OpenUpNotConverged {
        iterations: opts.max_iter,
        defect: history.last().map_or(f64::NAN, |s| s.defect),
    })
}

/// Nodes per ellipse used for the capacity stage when none is given.
pub fn default_cap_n(components: usize) -> usize {
    if components <= 16 {
        256
    } else {
        64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCapacity {
    pub capacity: CapacityResult,
    pub open_up: OpenUp,
    /// Intervals in the (sorted) order used internally.
    pub intervals: Vec<[f64; 2]>,
    pub cap_n: usize,
    /// Wall-clock seconds for the whole pipeline.
    pub elapsed: f64,
}

/// Capacity of a union of disjoint real intervals.
pub fn capacity_of_intervals(intervals: &[[f64; 2]], opts: &OpenUpOptions, cap_n: Option<usize>) -> Result<IntervalCapacity> {
    let start = Instant::now();
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let target = SlitDomain::from_intervals(&sorted)?;
    let cap_n = cap_n.unwrap_or_else(|| default_cap_n(sorted.len()));
    let opened = open_up(&target, opts)?;
    let disc = opened.preimage.discretize(cap_n)?;
    let capacity = logcapacity(&disc, &CapacityOptions { solve: opts.solve })?;
    Ok(IntervalCapacity {
        capacity,
        open_up: opened,
        intervals: sorted,
        cap_n,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

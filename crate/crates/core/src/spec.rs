//! Serializable description of a domain: a list of boundary components plus
//! the mesh parameters, as read by the command-line front end.
//!
//! ```json
//! {"n": 256, "components": [{"shape": "circle", "center": [0, 0], "radius": 2}]}
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryComponent, CustomCurve, Mesh, DEFAULT_GRADING};
use crate::reference::{table1_capacity, Table1Shape};
use crate::{Error, Result};

/// `[re, im]`.
pub type Point = [f64; 2];

fn complex(p: Point) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    Circle {
        center: Point,
        radius: f64,
        alpha: Option<Point>,
        corners: Option<usize>,
    },
    Ellipse {
        center: Point,
        /// Semi-axes.
        a: f64,
        b: f64,
        #[serde(default)]
        rotation: f64,
        alpha: Option<Point>,
        corners: Option<usize>,
    },
    Polygon {
        vertices: Vec<Point>,
        alpha: Option<Point>,
        corners: Option<usize>,
    },
    HalfDisk {
        center: Point,
        radius: f64,
        #[serde(default)]
        angle: f64,
        alpha: Option<Point>,
        corners: Option<usize>,
    },
    /// Either boundary values at exactly the mesh nodes (`points`, optional
    /// `derivative`), or a trigonometric polynomial
    /// `η(t) = Σ c_k e^{ikt}` given as `fourier: [[k, re, im], …]`.
    Custom {
        points: Option<Vec<Point>>,
        derivative: Option<Vec<Point>>,
        fourier: Option<Vec<[f64; 3]>>,
        alpha: Option<Point>,
        corners: Option<usize>,
    },
}

impl ComponentSpec {
    fn alpha(&self) -> Option<Point> {
        match self {
            Self::Circle { alpha, .. }
            | Self::Ellipse { alpha, .. }
            | Self::Polygon { alpha, .. }
            | Self::HalfDisk { alpha, .. }
            | Self::Custom { alpha, .. } => *alpha,
        }
    }

    fn declared_corners(&self) -> Option<usize> {
        match self {
            Self::Circle { corners, .. }
            | Self::Ellipse { corners, .. }
            | Self::Polygon { corners, .. }
            | Self::HalfDisk { corners, .. }
            | Self::Custom { corners, .. } => *corners,
        }
    }

    /// Builds the boundary component; `index` only labels error messages.
    pub fn build(&self, index: usize) -> Result<BoundaryComponent> {
        let bad = |msg: String| Error::Domain(format!("component {index}: {msg}"));
        let comp = match self {
            Self::Circle { center, radius, .. } => BoundaryComponent::circle(complex(*center), *radius),
            Self::Ellipse { center, a, b, rotation, .. } => BoundaryComponent::ellipse(complex(*center), *a, *b, *rotation),
            Self::Polygon { vertices, .. } => {
                BoundaryComponent::polygon(vertices.iter().copied().map(complex).collect()).map_err(|e| bad(e.to_string()))?
            }
            Self::HalfDisk { center, radius, angle, .. } => BoundaryComponent::half_disk(complex(*center), *radius, *angle),
            Self::Custom { points, derivative, fourier, .. } => match (points, fourier) {
                (Some(pts), None) => BoundaryComponent::custom(CustomCurve::Sampled {
                    eta: pts.iter().copied().map(complex).collect(),
                    etp: derivative.as_ref().map(|d| d.iter().copied().map(complex).collect()),
                }),
                (None, Some(coeffs)) => {
                    if derivative.is_some() {
                        return Err(bad("`derivative` applies only to `points`".into()));
                    }
                    fourier_curve(coeffs).map_err(|e| bad(e.to_string()))?
                }
                _ => return Err(bad("custom curves need exactly one of `points` or `fourier`".into())),
            },
        };
        if let Some(q) = self.declared_corners() {
            if q != comp.corner_count() {
                return Err(bad(format!("`corners` is {q} but the shape has {}", comp.corner_count())));
            }
        }
        Ok(match self.alpha() {
            Some(p) => comp.with_alpha(complex(p)),
            None => comp,
        })
    }
}

fn fourier_curve(coeffs: &[[f64; 3]]) -> Result<BoundaryComponent> {
    if coeffs.is_empty() {
        return Err(Error::Domain("`fourier` needs at least one coefficient".into()));
    }
    let terms: Vec<(f64, Complex64)> = coeffs
        .iter()
        .map(|&[k, re, im]| {
            if k.fract() != 0.0 || !k.is_finite() {
                Err(Error::Domain(format!("Fourier index {k} is not an integer")))
            } else {
                Ok((k, Complex64::new(re, im)))
            }
        })
        .collect::<Result<_>>()?;
    let terms = Arc::new(terms);
    let jet = move |order: i32| {
        let terms = Arc::clone(&terms);
        move |t: f64| {
            terms
                .iter()
                .map(|&(k, c)| c * (Complex64::i() * k).powi(order) * Complex64::from_polar(1.0, k * t))
                .sum::<Complex64>()
        }
    };
    Ok(BoundaryComponent::custom(CustomCurve::Analytic {
        eta: Arc::new(jet(0)),
        deta: Arc::new(jet(1)),
        ddeta: Some(Arc::new(jet(2))),
        corners: 0,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Nodes per component; the command line may override it.
    pub n: Option<usize>,
    /// Grading exponent for components with corners (default 3).
    pub grading_p: Option<u32>,
    pub components: Vec<ComponentSpec>,
    /// Known capacity, used for error columns in convergence studies.
    pub exact: Option<f64>,
}

impl DomainSpec {
    pub fn build_components(&self) -> Result<Vec<BoundaryComponent>> {
        if self.components.is_empty() {
            return Err(Error::Domain("`components` must not be empty".into()));
        }
        self.components.iter().enumerate().map(|(i, c)| c.build(i)).collect()
    }

    /// Mesh with `n` taken from the argument, else from the spec.
    pub fn mesh(&self, n: Option<usize>, grading_p: Option<u32>) -> Result<Mesh> {
        let n = n
            .or(self.n)
            .ok_or_else(|| Error::Domain("number of nodes `n` is not given".into()))?;
        Mesh::new(n, Some(grading_p.or(self.grading_p).unwrap_or(DEFAULT_GRADING)))
    }

    /// Closed-form capacity when given in the spec or when the set is a
    /// single disk, ellipse, half-disk or square.
    pub fn known_capacity(&self) -> Option<f64> {
        if self.exact.is_some() {
            return self.exact;
        }
        let [only] = self.components.as_slice() else {
            return None;
        };
        let shape = match only {
            ComponentSpec::Circle { radius, .. } => Table1Shape::Disk { r: *radius },
            ComponentSpec::Ellipse { a, b, .. } => Table1Shape::Ellipse { a: *a, b: *b },
            ComponentSpec::HalfDisk { radius, .. } => Table1Shape::HalfDisk { r: *radius },
            ComponentSpec::Polygon { vertices, .. } => Table1Shape::Square { h: square_side(vertices)? },
            ComponentSpec::Custom { .. } => return None,
        };
        table1_capacity(shape).ok()
    }
}

/// Side length when the vertices form a square.
fn square_side(vertices: &[Point]) -> Option<f64> {
    if vertices.len() != 4 {
        return None;
    }
    let v: Vec<Complex64> = vertices.iter().copied().map(complex).collect();
    let side = (v[1] - v[0]).norm();
    let tol = 1e-12 * side;
    let square = (0..4).all(|i| {
        let e0 = v[(i + 1) % 4] - v[i];
        let e1 = v[(i + 2) % 4] - v[(i + 1) % 4];
        (e0.norm() - side).abs() <= tol && (e0.re * e1.re + e0.im * e1.im).abs() <= tol * side
    });
    square.then_some(side)
}

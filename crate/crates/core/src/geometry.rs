//! Boundary components, parameter meshes and the sampled boundary vectors
//! consumed by the integral-equation solver.
//!
//! Every curve is parameterized over `[0, 2π]` and oriented clockwise, so the
//! unbounded complement lies to the left of the boundary. Curves with corners
//! are sampled on a graded mesh: the corner at parameter `2πm/q` is reached by
//! substituting `δ(t)` built from the Kress function `w`, which vanishes to
//! order `p` at the ends of each corner interval.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Grading exponent used when none is given.
pub const DEFAULT_GRADING: u32 = 3;

/// A curve point together with its first and second parameter derivatives.
pub type Jet = (Complex64, Complex64, Complex64);

/// Callback evaluating a curve quantity at a parameter in `[0, 2π]`.
pub type CurveFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// User supplied boundary curve.
#[derive(Clone)]
pub enum CustomCurve {
    /// Closed-form parameterization with derivative callbacks. When the second
    /// derivative is missing it is obtained by spectral differentiation.
    Analytic {
        eta: CurveFn,
        deta: CurveFn,
        ddeta: Option<CurveFn>,
        corners: usize,
    },
    /// Values already sampled at the `n` equidistant mesh nodes. Missing
    /// derivatives come from trigonometric interpolation; no grading is applied.
    Sampled {
        eta: Vec<Complex64>,
        etp: Option<Vec<Complex64>>,
    },
}

impl fmt::Debug for CustomCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CustomCurve::Analytic { corners, ddeta, .. } => f
                .debug_struct("Analytic")
                .field("corners", corners)
                .field("has_second_derivative", &ddeta.is_some())
                .finish(),
            CustomCurve::Sampled { eta, etp } => f
                .debug_struct("Sampled")
                .field("len", &eta.len())
                .field("has_derivative", &etp.is_some())
                .finish(),
        }
    }
}

/// Shape of one boundary curve.
#[derive(Debug, Clone)]
pub enum Shape {
    Circle {
        center: Complex64,
        radius: f64,
    },
    /// Semi-axes `a` (along the rotated real axis) and `b`.
    Ellipse {
        center: Complex64,
        a: f64,
        b: f64,
        rotation: f64,
    },
    /// Vertices in clockwise order; one corner per vertex.
    Polygon {
        vertices: Vec<Complex64>,
    },
    /// `{ |z - center| <= radius, Im((z - center) e^{-i angle}) >= 0 }`.
    HalfDisk {
        center: Complex64,
        radius: f64,
        angle: f64,
    },
    Custom(CustomCurve),
}

/// One Jordan curve bounding the compact set, with its auxiliary point.
#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub shape: Shape,
    alpha: Option<Complex64>,
}

impl BoundaryComponent {
    pub fn new(shape: Shape) -> Self {
        Self { shape, alpha: None }
    }

    pub fn circle(center: Complex64, radius: f64) -> Self {
        Self::new(Shape::Circle { center, radius })
    }

    pub fn ellipse(center: Complex64, a: f64, b: f64, rotation: f64) -> Self {
        Self::new(Shape::Ellipse {
            center,
            a,
            b,
            rotation,
        })
    }

    pub fn half_disk(center: Complex64, radius: f64, angle: f64) -> Self {
        Self::new(Shape::HalfDisk {
            center,
            radius,
            angle,
        })
    }

    /// Polygon through `vertices`. Counterclockwise input is reversed (keeping
    /// the first vertex) so the boundary runs clockwise.
    pub fn polygon(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite polygon vertex".into()));
        }
        let area = shoelace(&vertices);
        if area == 0.0 {
            return Err(Error::Geometry("degenerate polygon".into()));
        }
        let vertices = if area > 0.0 {
            let mut v = vertices;
            v[1..].reverse();
            v
        } else {
            vertices
        };
        Ok(Self::new(Shape::Polygon { vertices }))
    }

    pub fn custom(curve: CustomCurve) -> Self {
        Self::new(Shape::Custom(curve))
    }

    /// Sets the auxiliary point. Without one, the centroid is used.
    pub fn with_alpha(mut self, alpha: Complex64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha.unwrap_or_else(|| self.centroid())
    }

    /// Number of corners `q` (zero for smooth curves).
    pub fn corner_count(&self) -> usize {
        match &self.shape {
            Shape::Circle { .. } | Shape::Ellipse { .. } => 0,
            Shape::Polygon { vertices } => vertices.len(),
            Shape::HalfDisk { .. } => 2,
            Shape::Custom(CustomCurve::Analytic { corners, .. }) => *corners,
            Shape::Custom(CustomCurve::Sampled { .. }) => 0,
        }
    }

    /// Area centroid of the enclosed region (approximate for custom curves).
    pub fn centroid(&self) -> Complex64 {
        match &self.shape {
            Shape::Circle { center, .. } | Shape::Ellipse { center, .. } => *center,
            Shape::HalfDisk {
                center,
                radius,
                angle,
            } => center + Complex64::from_polar(4.0 * radius / (3.0 * PI), angle + PI / 2.0),
            Shape::Polygon { vertices } => polygon_centroid(vertices),
            Shape::Custom(CustomCurve::Sampled { eta, .. }) => polygon_centroid(eta),
            Shape::Custom(CustomCurve::Analytic { eta, .. }) => {
                let pts: Vec<Complex64> = (0..512).map(|k| eta(TWO_PI * k as f64 / 512.0)).collect();
                polygon_centroid(&pts)
            }
        }
    }

    fn validate_shape(&self) -> Result<()> {
        let positive = |x: f64, what: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Geometry(format!("{what} must be positive, got {x}")))
            }
        };
        match &self.shape {
            Shape::Circle { radius, .. } => positive(*radius, "radius"),
            Shape::Ellipse { a, b, .. } => {
                positive(*a, "semi-axis a")?;
                positive(*b, "semi-axis b")
            }
            Shape::HalfDisk { radius, .. } => positive(*radius, "radius"),
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    Err(Error::Geometry("polygon needs at least 3 vertices".into()))
                } else {
                    Ok(())
                }
            }
            Shape::Custom(_) => Ok(()),
        }
    }

    /// Point and derivatives at parameter `tau` for closed-form shapes.
    /// At a corner the left-sided derivatives are returned.
    fn jet(&self, tau: f64) -> Jet {
        match &self.shape {
            Shape::Circle { center, radius } => {
                let e = Complex64::from_polar(*radius, -tau);
                (center + e, -Complex64::i() * e, -e)
            }
            Shape::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                let rot = Complex64::from_polar(1.0, *rotation);
                let (s, c) = tau.sin_cos();
                let z = Complex64::new(a * c, -b * s);
                let dz = Complex64::new(-a * s, -b * c);
                (center + rot * z, rot * dz, -rot * z)
            }
            Shape::Polygon { vertices } => polygon_jet(vertices, tau),
            Shape::HalfDisk {
                center,
                radius,
                angle,
            } => {
                let rot = Complex64::from_polar(1.0, *angle);
                // diameter from +R to -R on (0, π], arc back over the top on (π, 2π]
                let (z, dz, ddz) = if tau > 0.0 && tau <= PI {
                    let z = Complex64::new(radius * (1.0 - 2.0 * tau / PI), 0.0);
                    (z, Complex64::new(-2.0 * radius / PI, 0.0), Complex64::new(0.0, 0.0))
                } else {
                    let e = Complex64::from_polar(*radius, -tau);
                    (e, -Complex64::i() * e, -e)
                };
                (center + rot * z, rot * dz, rot * ddz)
            }
            Shape::Custom(CustomCurve::Analytic {
                eta, deta, ddeta, ..
            }) => {
                let dd = ddeta.as_ref().map(|f| f(tau)).unwrap_or(Complex64::new(0.0, 0.0));
                (eta(tau), deta(tau), dd)
            }
            Shape::Custom(CustomCurve::Sampled { .. }) => {
                unreachable!("sampled curves have no parameterization")
            }
        }
    }
}

fn polygon_jet(vertices: &[Complex64], tau: f64) -> Jet {
    let q = vertices.len();
    let x = q as f64 * tau / TWO_PI;
    let snapped = x.round();
    // piece m covers (2πm/q, 2π(m+1)/q]; an exact corner belongs to the edge on its left
    let (m, u) = if (x - snapped).abs() < 1e-12 {
        let k = snapped as i64;
        (((k - 1).rem_euclid(q as i64)) as usize, 1.0)
    } else {
        let m = (x.floor() as i64).clamp(0, q as i64 - 1) as usize;
        (m, x - m as f64)
    };
    let v0 = vertices[m];
    let v1 = vertices[(m + 1) % q];
    let edge = v1 - v0;
    (v0 + edge * u, edge * (q as f64 / TWO_PI), Complex64::new(0.0, 0.0))
}

/// Signed area of the closed polygon through `pts` (negative when clockwise).
pub fn shoelace(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a.re * b.im - b.re * a.im;
    }
    0.5 * acc
}

fn polygon_centroid(pts: &[Complex64]) -> Complex64 {
    let n = pts.len();
    let mut area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let cross = a.re * b.im - b.re * a.im;
        area += cross;
        cx += (a.re + b.re) * cross;
        cy += (a.im + b.im) * cross;
    }
    if area == 0.0 {
        return pts.iter().sum::<Complex64>() / n as f64;
    }
    Complex64::new(cx / (3.0 * area), cy / (3.0 * area))
}

/// Winding number of the closed polygon `pts` about `z`.
pub fn winding_number(pts: &[Complex64], z: Complex64) -> i64 {
    let n = pts.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = pts[i] - z;
        let b = pts[(i + 1) % n] - z;
        total += (b / a).arg();
    }
    (total / TWO_PI).round() as i64
}

/// Parameter mesh: `n` nodes per component, optional grading exponent for
/// components with corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    n: usize,
    grading_p: Option<u32>,
}

impl Mesh {
    pub fn new(n: usize, grading_p: Option<u32>) -> Result<Self> {
        check_node_count(n)?;
        if let Some(p) = grading_p {
            if p < 2 {
                return Err(Error::InvalidMesh(format!("grading exponent must be >= 2, got {p}")));
            }
        }
        Ok(Self { n, grading_p })
    }

    /// Equidistant nodes everywhere.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, None)
    }

    /// Graded nodes on components with corners, with the default exponent.
    pub fn graded(n: usize) -> Result<Self> {
        Self::new(n, Some(DEFAULT_GRADING))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grading_p(&self) -> Option<u32> {
        self.grading_p
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| TWO_PI * k as f64 / self.n as f64).collect()
    }
}

fn check_node_count(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidMesh(format!(
            "node count must be even and at least 4, got {n}"
        )));
    }
    Ok(())
}

/// Equidistant nodes `s_k = (k-1) 2π/n`, `k = 1..n`.
pub fn uniform_nodes(n: usize) -> Result<Vec<f64>> {
    check_node_count(n)?;
    Ok(Mesh { n, grading_p: None }.nodes())
}

fn check_grading(p: u32) -> Result<()> {
    if p < 2 {
        return Err(Error::Domain(format!("grading exponent must be >= 2, got {p}")));
    }
    Ok(())
}

/// The cubic `v` of the Kress substitution and its first two derivatives.
fn kress_cubic(t: f64, p: f64) -> (f64, f64, f64) {
    let c = 1.0 / p - 0.5;
    let x = (PI - t) / PI;
    let v = c * x * x * x + (t - PI) / (p * PI) + 0.5;
    let dv = -3.0 * c * x * x / PI + 1.0 / (p * PI);
    let ddv = 6.0 * c * x / (PI * PI);
    (v, dv, ddv)
}

/// Kress substitution `w(t) = 2π v(t)^p / (v(t)^p + v(2π-t)^p)`.
pub fn kress_w(t: f64, p: u32) -> Result<f64> {
    Ok(kress_w_derivatives(t, p)?.0)
}

/// `(w(t), w'(t), w''(t))`.
pub fn kress_w_derivatives(t: f64, p: u32) -> Result<(f64, f64, f64)> {
    check_grading(p)?;
    if !(0.0..=TWO_PI).contains(&t) {
        return Err(Error::Domain(format!("kress_w expects t in [0, 2π], got {t}")));
    }
    let pf = p as f64;
    let pi = p as i32;
    let (v1, dv1, ddv1) = kress_cubic(t, pf);
    let (v2, dv2, ddv2) = kress_cubic(TWO_PI - t, pf);

    let a = v1.powi(pi);
    let da = pf * v1.powi(pi - 1) * dv1;
    let dda = pf * (pf - 1.0) * v1.powi(pi - 2) * dv1 * dv1 + pf * v1.powi(pi - 1) * ddv1;
    let b = v2.powi(pi);
    let db = -pf * v2.powi(pi - 1) * dv2;
    let ddb = pf * (pf - 1.0) * v2.powi(pi - 2) * dv2 * dv2 + pf * v2.powi(pi - 1) * ddv2;

    let s = a + b;
    let num = da * b - a * db;
    let w = TWO_PI * a / s;
    let dw = TWO_PI * num / (s * s);
    let ddw = TWO_PI * ((dda * b - a * ddb) * s - 2.0 * num * (da + db)) / (s * s * s);
    Ok((w, dw, ddw))
}

/// Graded parameter map `(δ(t), δ'(t))` for a curve with `q` corners.
/// For `q = 0` this is the identity.
pub fn graded_delta(t: f64, q: usize, p: u32) -> Result<(f64, f64)> {
    let (d, dd, _) = graded_delta_derivatives(t, q, p)?;
    Ok((d, dd))
}

/// `(δ(t), δ'(t), δ''(t))`.
pub fn graded_delta_derivatives(t: f64, q: usize, p: u32) -> Result<(f64, f64, f64)> {
    check_grading(p)?;
    if !(0.0..=TWO_PI).contains(&t) {
        return Err(Error::Domain(format!("graded_delta expects t in [0, 2π], got {t}")));
    }
    if q == 0 {
        return Ok((t, 1.0, 0.0));
    }
    let qf = q as f64;
    let m = ((qf * t / TWO_PI).floor() as usize).min(q - 1);
    let tau = (qf * t - TWO_PI * m as f64).clamp(0.0, TWO_PI);
    let (w, dw, ddw) = kress_w_derivatives(tau, p)?;
    Ok(((w + TWO_PI * m as f64) / qf, dw, qf * ddw))
}

/// Graded map at mesh node `k` of `n`, computed with integer arithmetic so
/// that corner nodes are hit exactly. Returns `(δ, δ', δ'', at_corner)`.
fn graded_node(k: usize, n: usize, q: usize, p: u32) -> Result<(f64, f64, f64, bool)> {
    let m = (q * k) / n;
    let r = (q * k) % n;
    let tau = TWO_PI * r as f64 / n as f64;
    let (w, dw, ddw) = kress_w_derivatives(tau, p)?;
    let qf = q as f64;
    Ok(((w + TWO_PI * m as f64) / qf, dw, qf * ddw, r == 0))
}

/// Derivative of the trigonometric interpolant of equidistant samples on `[0, 2π)`.
/// The Nyquist mode is dropped.
pub fn spectral_derivative(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if k < n.div_ceil(2) {
            k as f64
        } else if n % 2 == 0 && k == n / 2 {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex64::new(0.0, freq / n as f64);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Sampled boundary: `ℓ` components of `n` nodes each, stored back to back.
#[derive(Debug, Clone)]
pub struct DiscretizedBoundary {
    n: usize,
    /// `η(δ(t))` at every node.
    pub eta: Vec<Complex64>,
    /// `d/dt η(δ(t))`.
    pub etp: Vec<Complex64>,
    /// `d²/dt² η(δ(t))`, used for the kernel diagonals.
    pub etpp: Vec<Complex64>,
    /// Raw equidistant nodes, `ℓ` copies of the mesh.
    pub t: Vec<f64>,
    /// Auxiliary points, one per component.
    pub alphas: Vec<Complex64>,
    /// Corner count per component.
    pub corners: Vec<usize>,
    /// Nodes sitting exactly on a graded corner (zero tangent permitted).
    pub corner_node: Vec<bool>,
}

impl DiscretizedBoundary {
    /// Nodes per component.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of components `ℓ`.
    pub fn components(&self) -> usize {
        self.alphas.len()
    }

    /// Total number of nodes `ℓ n`.
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Index range of component `k` (zero based).
    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        k * self.n..(k + 1) * self.n
    }

    /// Same geometry mapped by `z -> scale * z + shift`.
    pub fn affine(&self, scale: Complex64, shift: Complex64) -> Self {
        let mut out = self.clone();
        out.eta.iter_mut().for_each(|z| *z = scale * *z + shift);
        out.etp.iter_mut().for_each(|z| *z *= scale);
        out.etpp.iter_mut().for_each(|z| *z *= scale);
        out.alphas.iter_mut().for_each(|z| *z = scale * *z + shift);
        out
    }
}

/// Samples every component on the mesh and validates orientation, simplicity,
/// auxiliary points and mutual disjointness.
pub fn discretize(components: &[BoundaryComponent], mesh: &Mesh) -> Result<DiscretizedBoundary> {
    if components.is_empty() {
        return Err(Error::Geometry("at least one boundary component is required".into()));
    }
    let n = mesh.n;
    let total = components.len() * n;
    let mut out = DiscretizedBoundary {
        n,
        eta: Vec::with_capacity(total),
        etp: Vec::with_capacity(total),
        etpp: Vec::with_capacity(total),
        t: Vec::with_capacity(total),
        alphas: Vec::with_capacity(components.len()),
        corners: Vec::with_capacity(components.len()),
        corner_node: Vec::with_capacity(total),
    };
    let nodes = mesh.nodes();

    for comp in components {
        comp.validate_shape()?;
        let q = comp.corner_count();
        let (eta, etp, etpp, corner) = sample_component(comp, n, q, mesh.grading_p)?;
        out.eta.extend(eta);
        out.etp.extend(etp);
        out.etpp.extend(etpp);
        out.corner_node.extend(corner);
        out.t.extend_from_slice(&nodes);
        out.alphas.push(comp.alpha());
        out.corners.push(q);
    }

    for k in 0..out.components() {
        validate_component(&out, k)?;
    }
    check_disjoint(&out)?;
    Ok(out)
}

type Samples = (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, Vec<bool>);

fn sample_component(
    comp: &BoundaryComponent,
    n: usize,
    q: usize,
    grading: Option<u32>,
) -> Result<Samples> {
    if let Shape::Custom(CustomCurve::Sampled { eta, etp }) = &comp.shape {
        if eta.len() != n {
            return Err(Error::Geometry(format!(
                "sampled curve has {} values, mesh has {n} nodes",
                eta.len()
            )));
        }
        let etp = match etp {
            Some(d) if d.len() == n => d.clone(),
            Some(d) => {
                return Err(Error::Geometry(format!(
                    "sampled derivative has {} values, mesh has {n} nodes",
                    d.len()
                )))
            }
            None => spectral_derivative(eta),
        };
        let etpp = spectral_derivative(&etp);
        return Ok((eta.clone(), etp, etpp, vec![false; n]));
    }

    let mut eta = Vec::with_capacity(n);
    let mut etp = Vec::with_capacity(n);
    let mut etpp = Vec::with_capacity(n);
    let mut corner = Vec::with_capacity(n);
    for k in 0..n {
        let (d, dd, ddd, at_corner) = match grading {
            Some(p) if q > 0 => graded_node(k, n, q, p)?,
            _ => (TWO_PI * k as f64 / n as f64, 1.0, 0.0, false),
        };
        let (z, dz, ddz) = comp.jet(d);
        eta.push(z);
        etp.push(dz * dd);
        etpp.push(ddz * dd * dd + dz * ddd);
        corner.push(at_corner);
    }
    if let Shape::Custom(CustomCurve::Analytic { ddeta: None, .. }) = &comp.shape {
        etpp = spectral_derivative(&etp);
    }
    Ok((eta, etp, etpp, corner))
}

fn validate_component(disc: &DiscretizedBoundary, k: usize) -> Result<()> {
    let r = disc.range(k);
    let pts = &disc.eta[r.clone()];
    if pts.iter().chain(&disc.etp[r.clone()]).chain(&disc.etpp[r.clone()]).any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("boundary samples"));
    }
    let area = shoelace(pts);
    if !(area < 0.0) {
        return Err(Error::Geometry(format!(
            "component {k} is not oriented clockwise (signed area {area:e})"
        )));
    }
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        pts[a]
            .re
            .total_cmp(&pts[b].re)
            .then(pts[a].im.total_cmp(&pts[b].im))
    });
    if order.windows(2).any(|w| pts[w[0]] == pts[w[1]]) {
        return Err(Error::Geometry(format!("component {k} repeats a boundary point")));
    }
    let alpha = disc.alphas[k];
    if !alpha.is_finite() || pts.contains(&alpha) || winding_number(pts, alpha) != -1 {
        return Err(Error::AlphaOutside { component: k });
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Bbox {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

fn bbox(pts: &[Complex64]) -> Bbox {
    pts.iter().fold(
        Bbox {
            xmin: f64::INFINITY,
            xmax: f64::NEG_INFINITY,
            ymin: f64::INFINITY,
            ymax: f64::NEG_INFINITY,
        },
        |b, z| Bbox {
            xmin: b.xmin.min(z.re),
            xmax: b.xmax.max(z.re),
            ymin: b.ymin.min(z.im),
            ymax: b.ymax.max(z.im),
        },
    )
}

/// Sample-based disjointness: no node of one component lies on or inside
/// another component's sampled polygon.
fn check_disjoint(disc: &DiscretizedBoundary) -> Result<()> {
    let l = disc.components();
    if l < 2 {
        return Ok(());
    }
    let boxes: Vec<Bbox> = (0..l).map(|k| bbox(&disc.eta[disc.range(k)])).collect();
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| boxes[a].xmin.total_cmp(&boxes[b].xmin));

    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if boxes[b].xmin > boxes[a].xmax {
                break;
            }
            if boxes[b].ymin > boxes[a].ymax || boxes[a].ymin > boxes[b].ymax {
                continue;
            }
            let pa = &disc.eta[disc.range(a)];
            let pb = &disc.eta[disc.range(b)];
            let crosses = |inner: &[Complex64], outer: &[Complex64], ob: &Bbox| {
                inner.iter().any(|&z| {
                    z.re >= ob.xmin
                        && z.re <= ob.xmax
                        && z.im >= ob.ymin
                        && z.im <= ob.ymax
                        && (outer.contains(&z) || winding_number(outer, z) != 0)
                })
            };
            if crosses(pa, pb, &boxes[b]) || crosses(pb, pa, &boxes[a]) {
                let (first, second) = (a.min(b), a.max(b));
                return Err(Error::CurvesIntersect { first, second });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn uniform_nodes_formula() {
        let s = uniform_nodes(4).unwrap();
        let expected = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        for (a, b) in s.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((uniform_nodes(8).unwrap()[2] - PI / 2.0).abs() < 1e-15);
        assert!((uniform_nodes(256).unwrap()[255] - TWO_PI * 255.0 / 256.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_nodes_rejects_bad_counts() {
        assert!(uniform_nodes(7).is_err());
        assert!(uniform_nodes(2).is_err());
        assert!(uniform_nodes(0).is_err());
        assert!(Mesh::new(64, Some(1)).is_err());
    }

    #[test]
    fn kress_w_endpoints_and_midpoint() {
        for p in 2..=6 {
            assert_eq!(kress_w(0.0, p).unwrap(), 0.0);
            assert!((kress_w(TWO_PI, p).unwrap() - TWO_PI).abs() < 1e-15);
            assert!((kress_w(PI, p).unwrap() - PI).abs() < 1e-14);
        }
        assert!(kress_w(-0.1, 3).is_err());
        assert!(kress_w(7.0, 3).is_err());
        assert!(kress_w(1.0, 1).is_err());
    }

    #[test]
    fn kress_derivatives_match_finite_differences() {
        let h = 1e-6;
        for p in [2, 3, 4] {
            for &t in &[0.3, 1.0, PI, 4.0, 6.0] {
                let (_, dw, ddw) = kress_w_derivatives(t, p).unwrap();
                let fd1 = (kress_w(t + h, p).unwrap() - kress_w(t - h, p).unwrap()) / (2.0 * h);
                assert!((dw - fd1).abs() < 1e-8, "p={p} t={t}: {dw} vs {fd1}");
                let d1p = kress_w_derivatives(t + h, p).unwrap().1;
                let d1m = kress_w_derivatives(t - h, p).unwrap().1;
                assert!((ddw - (d1p - d1m) / (2.0 * h)).abs() < 1e-7);
            }
        }
        // p = 3: flat at both endpoints, one-sided differences agree
        let (_, d0, _) = kress_w_derivatives(0.0, 3).unwrap();
        let (_, d2, _) = kress_w_derivatives(TWO_PI, 3).unwrap();
        assert_eq!(d0, 0.0);
        assert!(d2.abs() < 1e-12);
        let fd0 = kress_w(h, 3).unwrap() / h;
        let fd2 = (TWO_PI - kress_w(TWO_PI - h, 3).unwrap()) / h;
        assert!(fd0.abs() < 1e-8 && fd2.abs() < 1e-8);
    }

    #[test]
    fn graded_delta_cases() {
        for &t in &[0.0, 0.5, 3.0, TWO_PI] {
            assert_eq!(graded_delta(t, 0, 3).unwrap(), (t, 1.0));
        }
        let (d, _) = graded_delta(PI / 4.0, 4, 3).unwrap();
        assert!((d - PI / 4.0).abs() < 1e-15);
        let (_, dd) = graded_delta(PI, 2, 3).unwrap();
        assert!(dd.abs() < 1e-12);
        let h = 1e-6;
        let fd = (graded_delta(PI + h, 2, 3).unwrap().0 - graded_delta(PI - h, 2, 3).unwrap().0) / (2.0 * h);
        assert!(fd.abs() < 1e-8);
        let (d0, _) = graded_delta(0.0, 3, 3).unwrap();
        let (d1, _) = graded_delta(TWO_PI, 3, 3).unwrap();
        assert_eq!(d0, 0.0);
        assert!((d1 - TWO_PI).abs() < 1e-14);
    }

    #[test]
    fn graded_delta_is_monotone_on_nodes() {
        for q in 1..=5 {
            let nodes = uniform_nodes(128).unwrap();
            let vals: Vec<f64> = nodes.iter().map(|&t| graded_delta(t, q, 3).unwrap().0).collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]), "q = {q}");
        }
    }

    #[test]
    fn circle_samples() {
        let disc = discretize(&[BoundaryComponent::circle(c(0.0, 0.0), 2.0)], &Mesh::uniform(4).unwrap()).unwrap();
        let expected = [c(2.0, 0.0), c(0.0, -2.0), c(-2.0, 0.0), c(0.0, 2.0)];
        for (z, e) in disc.eta.iter().zip(expected) {
            assert!((z - e).norm() < 1e-15);
        }
    }

    #[test]
    fn ellipse_samples() {
        let disc =
            discretize(&[BoundaryComponent::ellipse(c(0.0, 0.0), 1.0, 0.1, 0.0)], &Mesh::uniform(8).unwrap()).unwrap();
        assert!((disc.eta[2] - c(0.0, -0.1)).norm() < 1e-15);
    }

    #[test]
    fn square_corners_land_on_vertices() {
        let verts = vec![c(1.0, 1.0), c(1.0, -1.0), c(-1.0, -1.0), c(-1.0, 1.0)];
        let sq = BoundaryComponent::polygon(verts.clone()).unwrap();
        let disc = discretize(&[sq], &Mesh::graded(8).unwrap()).unwrap();
        for (m, v) in verts.iter().enumerate() {
            assert_eq!(disc.eta[2 * m], *v);
            assert!(disc.corner_node[2 * m]);
            assert_eq!(disc.etp[2 * m], c(0.0, 0.0));
        }
        assert!(!disc.corner_node[1]);
    }

    #[test]
    fn counterclockwise_polygon_is_reoriented() {
        let ccw = vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)];
        let sq = BoundaryComponent::polygon(ccw).unwrap();
        let disc = discretize(&[sq], &Mesh::graded(16).unwrap()).unwrap();
        assert!(shoelace(&disc.eta) < 0.0);
        assert_eq!(disc.eta[0], c(1.0, 1.0));
    }

    #[test]
    fn builtin_shapes_are_clockwise() {
        let shapes = vec![
            BoundaryComponent::circle(c(1.0, 2.0), 0.5),
            BoundaryComponent::ellipse(c(-1.0, 0.0), 2.0, 0.3, 0.7),
            BoundaryComponent::half_disk(c(0.0, 0.0), 1.0, 0.0),
            BoundaryComponent::half_disk(c(3.0, 0.0), 1.0, 2.0),
            BoundaryComponent::polygon(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]).unwrap(),
        ];
        for s in shapes {
            for mesh in [Mesh::uniform(64).unwrap(), Mesh::graded(64).unwrap()] {
                let disc = discretize(std::slice::from_ref(&s), &mesh).unwrap();
                assert!(shoelace(&disc.eta) < 0.0);
            }
        }
    }

    #[test]
    fn half_disk_geometry() {
        let hd = BoundaryComponent::half_disk(c(0.0, 0.0), 1.0, 0.0);
        let disc = discretize(&[hd], &Mesh::graded(16).unwrap()).unwrap();
        assert_eq!(disc.eta[0], c(1.0, 0.0));
        assert!((disc.eta[8] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(disc.corner_node[0] && disc.corner_node[8]);
        // a quarter of the way round the graded arc is the top of the disk
        assert!((disc.eta[12] - c(0.0, 1.0)).norm() < 1e-14);
        assert!((disc.alphas[0] - c(0.0, 4.0 / (3.0 * PI))).norm() < 1e-15);
    }

    #[test]
    fn smooth_component_ignores_grading() {
        let e = BoundaryComponent::ellipse(c(0.5, 0.0), 1.0, 0.4, 0.2);
        let a = discretize(std::slice::from_ref(&e), &Mesh::uniform(64).unwrap()).unwrap();
        let b = discretize(&[e], &Mesh::graded(64).unwrap()).unwrap();
        assert_eq!(a.eta, b.eta);
        assert_eq!(a.etp, b.etp);
        assert_eq!(a.etpp, b.etpp);
    }

    #[test]
    fn graded_tangent_vanishes_at_corners() {
        let hd = BoundaryComponent::half_disk(c(0.0, 0.0), 1.0, 0.0);
        let disc = discretize(&[hd], &Mesh::graded(256).unwrap()).unwrap();
        // order p - 1 = 2: |etp| ~ C t^2 next to the corner
        let r1 = disc.etp[1].norm();
        let r2 = disc.etp[2].norm();
        assert!(disc.etp[0].norm() == 0.0);
        assert!((r2 / r1 - 4.0).abs() < 0.1, "ratio {}", r2 / r1);
    }

    #[test]
    fn spectral_derivative_of_ellipse() {
        let n = 256;
        let e = BoundaryComponent::ellipse(c(0.3, -0.2), 1.0, 0.5, 0.4);
        let disc = discretize(&[e], &Mesh::uniform(n).unwrap()).unwrap();
        let d = spectral_derivative(&disc.eta);
        let dd = spectral_derivative(&disc.etp);
        let scale = disc.etp.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..n {
            assert!((d[i] - disc.etp[i]).norm() / scale < 1e-10);
            assert!((dd[i] - disc.etpp[i]).norm() / scale < 1e-10);
        }
    }

    #[test]
    fn sampled_custom_curve_matches_builtin() {
        let n = 64;
        let nodes = uniform_nodes(n).unwrap();
        let eta: Vec<Complex64> = nodes.iter().map(|&t| c(2.0 * t.cos(), -t.sin())).collect();
        let custom = BoundaryComponent::custom(CustomCurve::Sampled { eta, etp: None });
        let builtin = BoundaryComponent::ellipse(c(0.0, 0.0), 2.0, 1.0, 0.0);
        let a = discretize(&[custom], &Mesh::uniform(n).unwrap()).unwrap();
        let b = discretize(&[builtin], &Mesh::uniform(n).unwrap()).unwrap();
        for i in 0..n {
            assert!((a.etp[i] - b.etp[i]).norm() < 1e-12);
            assert!((a.etpp[i] - b.etpp[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_counterclockwise_custom_curve() {
        let eta: Vec<Complex64> = uniform_nodes(32).unwrap().iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let custom = BoundaryComponent::custom(CustomCurve::Sampled { eta, etp: None });
        assert!(matches!(
            discretize(&[custom], &Mesh::uniform(32).unwrap()),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn rejects_alpha_outside() {
        let disk = BoundaryComponent::circle(c(0.0, 0.0), 1.0).with_alpha(c(2.0, 0.0));
        assert_eq!(
            discretize(&[disk], &Mesh::uniform(32).unwrap()).unwrap_err(),
            Error::AlphaOutside { component: 0 }
        );
    }

    #[test]
    fn rejects_overlapping_components() {
        let a = BoundaryComponent::circle(c(0.0, 0.0), 1.0);
        let b = BoundaryComponent::circle(c(1.5, 0.0), 1.0);
        assert_eq!(
            discretize(&[a.clone(), b], &Mesh::uniform(32).unwrap()).unwrap_err(),
            Error::CurvesIntersect { first: 0, second: 1 }
        );
        let inner = BoundaryComponent::circle(c(0.0, 0.0), 0.5);
        assert!(discretize(&[a, inner], &Mesh::uniform(32).unwrap()).is_err());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(discretize(&[BoundaryComponent::circle(c(0.0, 0.0), -1.0)], &Mesh::uniform(8).unwrap()).is_err());
        assert!(discretize(&[], &Mesh::uniform(8).unwrap()).is_err());
    }
}

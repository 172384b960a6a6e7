//! Closed-form capacities used as ground truth, together with the special
//! functions they need: Jacobi theta series, complete and incomplete elliptic
//! integrals of the first kind, and Γ(1/4).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 1_000_000;

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Jacobi theta function `θ_k(z; q)`, `k ∈ 1..=4`, in the nome convention
///
/// ```text
/// θ1(z; q) = 2 q^{1/4} Σ_{n≥0} (-1)^n q^{n(n+1)} sin((2n+1) z)
/// θ2(z; q) = 2 q^{1/4} Σ_{n≥0} q^{n(n+1)} cos((2n+1) z)
/// θ3(z; q) = 1 + 2 Σ_{n≥1} q^{n²} cos(2n z)
/// θ4(z; q) = 1 + 2 Σ_{n≥1} (-1)^n q^{n²} cos(2n z)
/// ```
///
/// The sum stops once a term falls below machine epsilon relative to the
/// partial sum and the terms are past their peak, which can occur late for
/// large `|Im z|`.
pub fn theta(k: u8, z: Complex64, q: Complex64) -> Result<Complex64> {
    if !(1..=4).contains(&k) {
        return Err(domain(format!("theta index must be 1..4, got {k}")));
    }
    let aq = q.norm();
    if !(aq < 1.0) || !z.is_finite() {
        return Err(domain("theta requires |q| < 1 and finite z"));
    }
    let odd = k <= 2;
    // Leading part and the exponent of q in term n.
    let (mut sum, start) = if odd { (Complex64::new(0.0, 0.0), 0u64) } else { (Complex64::new(1.0, 0.0), 1u64) };
    if aq == 0.0 {
        // q^{1/4} = 0 kills θ1, θ2; θ3 = θ4 = 1.
        return Ok(if odd { Complex64::new(0.0, 0.0) } else { sum });
    }
    let growth = 2.0 * z.im.abs();
    let ln_q = aq.ln();
    for n in start..start + MAX_TERMS as u64 {
        let nf = n as f64;
        let (power, freq) = if odd { (nf * (nf + 1.0), 2.0 * nf + 1.0) } else { (nf * nf, 2.0 * nf) };
        let trig = if k == 1 { (z * freq).sin() } else { (z * freq).cos() };
        let sign = if (k == 1 || k == 4) && n % 2 == 1 { -1.0 } else { 1.0 };
        let term = q.powf(power) * trig * sign;
        let scale = if odd { 1.0 } else { 2.0 };
        sum += term * scale;
        // Majorant |q|^p e^{freq |Im z|}; ratio to the next term decreases in n.
        let majorant = (power * ln_q + freq * z.im.abs()).exp();
        let ratio = ((2.0 * nf + 2.0) * ln_q + growth).exp();
        if majorant < f64::EPSILON * sum.norm().max(f64::MIN_POSITIVE) && ratio < 0.5 {
            return Ok(if odd { sum * 2.0 * q.powf(0.25) } else { sum });
        }
        if !sum.is_finite() {
            return Err(Error::NonFinite("theta series"));
        }
    }
    Err(Error::SeriesDivergence(MAX_TERMS))
}

/// Real-argument convenience wrapper around [`theta`].
pub fn theta_real(k: u8, z: f64, q: f64) -> Result<f64> {
    theta(k, Complex64::new(z, 0.0), Complex64::new(q, 0.0)).map(|v| v.re)
}

/// Complete elliptic integral of the first kind,
/// `K(k) = ∫₀¹ dt / √((1-t²)(1-k²t²))`, by the arithmetic-geometric mean.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(domain(format!("elliptic_k needs 0 <= k < 1, got {k}")));
    }
    let mut a = 1.0;
    let mut g = (1.0 - k * k).sqrt();
    for _ in 0..64 {
        if (a - g).abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + g);
        g = (a * g).sqrt();
        a = next;
    }
    Ok(PI / (2.0 * a))
}

/// Incomplete elliptic integral `F(arcsin x, k)`, i.e. the `λ ∈ (0, K(k))`
/// with `sn(λ, k) = x`.
pub fn inverse_sn(x: f64, k: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) || !(0.0..1.0).contains(&k) {
        return Err(domain(format!("inverse_sn needs 0 < x < 1 and 0 <= k < 1, got x={x}, k={k}")));
    }
    let phi = x.asin();
    if k == 0.0 {
        return Ok(phi);
    }
    let out = quadrature::clenshaw_curtis::integrate(|t: f64| 1.0 / (1.0 - (k * t.sin()).powi(2)).sqrt(), 0.0, phi, 1e-15);
    if !out.integral.is_finite() {
        return Err(Error::NonFinite("inverse_sn quadrature"));
    }
    Ok(out.integral)
}

/// `Γ(1/4)`.
pub fn gamma_quarter() -> f64 {
    statrs::function::gamma::gamma(0.25)
}

/// Sets with classical closed-form capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Table1Shape {
    Disk { r: f64 },
    HalfDisk { r: f64 },
    /// Semi-axes `a`, `b`.
    Ellipse { a: f64, b: f64 },
    Segment { h: f64 },
    Square { h: f64 },
    /// `[-b, -a] ∪ [a, b]`, `0 <= a < b`.
    SymmetricIntervals { a: f64, b: f64 },
}

pub fn table1_capacity(shape: Table1Shape) -> Result<f64> {
    let positive = |v: f64, name: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(domain(format!("{name} must be positive, got {v}")))
        }
    };
    Ok(match shape {
        Table1Shape::Disk { r } => positive(r, "r")?,
        Table1Shape::HalfDisk { r } => 4.0 * positive(r, "r")? / 3f64.powf(1.5),
        Table1Shape::Ellipse { a, b } => 0.5 * (positive(a, "a")? + positive(b, "b")?),
        Table1Shape::Segment { h } => 0.25 * positive(h, "h")?,
        Table1Shape::Square { h } => gamma_quarter().powi(2) * positive(h, "h")? / (4.0 * PI.powf(1.5)),
        Table1Shape::SymmetricIntervals { a, b } => {
            if !(a >= 0.0 && a < b && b.is_finite()) {
                return Err(domain(format!("need 0 <= a < b, got a={a}, b={b}")));
            }
            0.5 * (b * b - a * a).sqrt()
        }
    })
}

/// Capacity of `D_r(z0) ∪ D_r(-z0)`.
pub fn cap_two_equal_disks(z0: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < z0 && z0.is_finite()) {
        return Err(domain(format!("need 0 < r < z0, got z0={z0}, r={r}")));
    }
    let (sp, sm) = ((z0 + r).sqrt(), (z0 - r).sqrt());
    let rho = (sp - sm) / (sp + sm);
    let rho4 = rho.powi(4);
    let mut l = 2.0 * rho;
    let mut pk = rho4; // rho^{8k-4}
    for _ in 0..MAX_TERMS {
        let factor = (1.0 + pk * rho4) / (1.0 + pk);
        l *= factor * factor;
        if (factor - 1.0).abs() < f64::EPSILON {
            break;
        }
        pk *= rho4 * rho4;
    }
    let kk = elliptic_k(l * l)?;
    Ok(2.0 * kk / PI * (z0 * z0 - r * r).sqrt() * (2.0 * l * (1.0 + l * l)).sqrt())
}

/// Two disks `D_1(0) ∪ D_r(a)` parameterized by `0 < u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnequalDisks {
    pub capacity: f64,
    /// Center of the second disk.
    pub a: f64,
    /// Radius of the second disk.
    pub r: f64,
}

pub fn cap_two_unequal_disks(u: f64, v: f64) -> Result<UnequalDisks> {
    if !(u > 0.0 && u < v && v.is_finite()) {
        return Err(domain(format!("need 0 < u < v, got u={u}, v={v}")));
    }
    let q = Complex64::new((-v).exp(), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let num = theta(2, zero, q)? * theta(3, zero, q)? * theta(4, zero, q)?;
    let den = theta(1, Complex64::new(0.0, u), q)?;
    if den.norm() == 0.0 {
        return Err(Error::Singular("theta1(iu) vanishes".into()));
    }
    let capacity = (u * u / v).exp() * u.sinh() * (num / den).norm();
    let s = (v - u).sinh();
    Ok(UnequalDisks { capacity, a: v.sinh() / s, r: u.sinh() / s })
}

/// Capacity of `[-1, a] ∪ [b, 1]` with `-1 < a < b < 1`.
///
/// Evaluated as `(2 + b - a)/4 · θ4(0; q) / θ4(πλ/K; q)` with
/// `k² = 2(b-a)/((1-a)(1+b))`, `q = exp(-πK'/K)` and `sn(λ, k) = √((1-a)/2)`.
/// The prefactor and theta argument are fixed by requiring agreement with
/// `½√(1-a²)` on symmetric pairs.
pub fn cap_two_intervals(a: f64, b: f64) -> Result<f64> {
    if !(-1.0 < a && a < b && b < 1.0) {
        return Err(domain(format!("need -1 < a < b < 1, got a={a}, b={b}")));
    }
    let k = (2.0 * (b - a) / ((1.0 - a) * (1.0 + b))).sqrt();
    let kp = ((1.0 + a) * (1.0 - b) / ((1.0 - a) * (1.0 + b))).sqrt();
    let big_k = elliptic_k(k)?;
    let big_kp = elliptic_k(kp)?;
    let q = (-PI * big_kp / big_k).exp();
    let lambda = inverse_sn(((1.0 - a) / 2.0).sqrt(), k)?;
    let ratio = theta_real(4, 0.0, q)? / theta_real(4, PI * lambda / big_k, q)?;
    Ok((2.0 + b - a) / 4.0 * ratio)
}

/// Capacity of two disjoint intervals `[a1, b1] ∪ [a2, b2]` (any order),
/// via the affine map onto `[-1, a] ∪ [b, 1]`.
pub fn cap_interval_pair(first: [f64; 2], second: [f64; 2]) -> Result<f64> {
    let (lo, hi) = if first[0] <= second[0] { (first, second) } else { (second, first) };
    if !(lo[0] < lo[1] && lo[1] < hi[0] && hi[0] < hi[1]) || !hi[1].is_finite() || !lo[0].is_finite() {
        return Err(domain("intervals must be disjoint with positive length"));
    }
    let half = 0.5 * (hi[1] - lo[0]);
    let map = |x: f64| (x - lo[0]) / half - 1.0;
    Ok(half * cap_two_intervals(map(lo[1]), map(hi[0]))?)
}

/// Closed-form approximation `f(r) = r(1-r) - (r³/2)(½-r)^{3/2}` to the
/// capacity of the generalized Cantor set with ratio `r`.
pub fn cantor_f(r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(domain(format!("cantor_f needs 0 < r <= 0.5, got {r}")));
    }
    Ok(r * (1.0 - r) - 0.5 * r.powi(3) * (0.5 - r).powf(1.5))
}

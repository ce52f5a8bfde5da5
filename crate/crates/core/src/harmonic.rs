//! Numerical checks of the integration inequalities for harmonic functions
//! on discs and tangential polygons.
//!
//! Test functions are finite Fourier expansions
//! `f(re^{iθ}) = a₀ + Σ rⁿ(aₙ cos nθ + bₙ sin nθ)`, i.e. `Re F` for the
//! polynomial `F(z) = a₀ + Σ (aₙ − i bₙ) zⁿ`, so values and gradients are
//! exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{cross2, Point};

/// The disc constant: `∫∫ ‖∇f‖² dr dθ ≤ C₀ ∬ ‖∇f‖² dA` on the unit disc.
pub const DISC_CONSTANT: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmonicError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, HarmonicError>;

/// Something with a value and gradient at every point of the plane.
pub trait Harmonic {
    fn value(&self, p: &Point) -> f64;
    fn gradient(&self, p: &Point) -> Point;

    fn gradient_sq(&self, p: &Point) -> f64 {
        self.gradient(p).norm_squared()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierHarmonic {
    pub a0: f64,
    /// `a[n − 1]` multiplies `rⁿ cos nθ`.
    pub a: Vec<f64>,
    /// `b[n − 1]` multiplies `rⁿ sin nθ`.
    pub b: Vec<f64>,
}

impl FourierHarmonic {
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        FourierHarmonic { a0, a, b }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, vec![], vec![])
    }

    pub fn terms(&self) -> usize {
        self.a.len().max(self.b.len())
    }

    fn coefficient(&self, n: usize) -> Complex64 {
        let a = self.a.get(n - 1).copied().unwrap_or(0.0);
        let b = self.b.get(n - 1).copied().unwrap_or(0.0);
        Complex64::new(a, -b)
    }

    /// Coefficients with Gaussian entries damped by `rateⁿ`.
    pub fn random<R: Rng>(rng: &mut R, terms: usize, rate: f64) -> Self {
        let mut a = Vec::with_capacity(terms);
        let mut b = Vec::with_capacity(terms);
        let mut scale = 1.0;
        for _ in 0..terms {
            scale *= rate;
            a.push(rng.sample::<f64, _>(StandardNormal) * scale);
            b.push(rng.sample::<f64, _>(StandardNormal) * scale);
        }
        Self::new(rng.sample::<f64, _>(StandardNormal), a, b)
    }

    /// Evaluates `f ∘ (p ↦ (p − center)/scale)`.
    pub fn shifted(self, center: Point, scale: f64) -> Shifted {
        Shifted {
            inner: self,
            center,
            scale,
        }
    }
}

impl Harmonic for FourierHarmonic {
    fn value(&self, p: &Point) -> f64 {
        let z = Complex64::new(p.x, p.y);
        // Horner on F(z) − a₀.
        let mut acc = Complex64::new(0.0, 0.0);
        for n in (1..=self.terms()).rev() {
            acc = (acc + self.coefficient(n)) * z;
        }
        self.a0 + acc.re
    }

    fn gradient(&self, p: &Point) -> Point {
        let z = Complex64::new(p.x, p.y);
        let mut acc = Complex64::new(0.0, 0.0);
        for n in (1..=self.terms()).rev() {
            acc = acc * z + self.coefficient(n) * n as f64;
        }
        // ∇ Re F = (Re F', −Im F').
        Point::new(acc.re, -acc.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shifted {
    pub inner: FourierHarmonic,
    pub center: Point,
    pub scale: f64,
}

impl Harmonic for Shifted {
    fn value(&self, p: &Point) -> f64 {
        self.inner.value(&((p - self.center) / self.scale))
    }

    fn gradient(&self, p: &Point) -> Point {
        self.inner.gradient(&((p - self.center) / self.scale)) / self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    /// `lhs ≤ rhs·(1 + rel)`.
    pub fn holds_within(&self, rel: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel)
    }

    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Side of the polar sample grid used for nonnegativity checks.
pub const POLAR_GRID: usize = 1024;

/// Minimum and maximum over a `POLAR_GRID²` polar grid on the closed disc.
pub fn sample_range(f: &impl Harmonic, x0: &Point, r: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let m = POLAR_GRID;
    for j in 0..m {
        let t = 2.0 * PI * j as f64 / m as f64;
        let dir = Point::new(t.cos(), t.sin());
        for i in 0..m {
            let rho = r * i as f64 / (m - 1) as f64;
            let v = f.value(&(x0 + dir * rho));
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// `‖∇f(x₀)‖ ≤ 2 f(x₀)/R` for `f` nonnegative on `B(x₀, R)`.
pub fn gradient_bound_check(f: &impl Harmonic, x0: &Point, r: f64) -> Result<Inequality> {
    if !(r > 0.0) {
        return Err(HarmonicError::Domain(format!(
            "radius must be positive, got {r}"
        )));
    }
    let (lo, _) = sample_range(f, x0, r);
    if lo < 0.0 {
        return Err(HarmonicError::Precondition(format!(
            "function takes the negative value {lo:.3e} on the disc"
        )));
    }
    Ok(Inequality {
        lhs: f.gradient(x0).norm(),
        rhs: 2.0 * f.value(x0) / r,
    })
}

/// `‖∇f(x₀)‖ ≤ (2/R)(max − min)` over `B(x₀, R)`.
pub fn oscillation_bound_check(f: &impl Harmonic, x0: &Point, r: f64) -> Result<Inequality> {
    if !(r > 0.0) {
        return Err(HarmonicError::Domain(format!(
            "radius must be positive, got {r}"
        )));
    }
    let (lo, hi) = sample_range(f, x0, r);
    Ok(Inequality {
        lhs: f.gradient(x0).norm(),
        rhs: 2.0 / r * (hi - lo),
    })
}

/// Harnack bounds at `x` for `f` nonnegative on `B(x₀, R)`:
/// returns `(lower, f(x), upper)`.
pub fn harnack_bounds(f: &impl Harmonic, x0: &Point, r_big: f64, x: &Point) -> (f64, f64, f64) {
    let r = (x - x0).norm();
    let f0 = f.value(x0);
    (
        (r_big - r) / (r_big + r) * f0,
        f.value(x),
        (r_big + r) / (r_big - r) * f0,
    )
}

/// The radial-segment integral `∫₀^{2π}∫₀¹ ‖∇f‖² dr dθ` against the area
/// integral, both from the coefficient series.
pub fn disc_integral_ratio(f: &FourierHarmonic) -> Inequality {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for n in 1..=f.terms() {
        let c = f.coefficient(n).norm_sqr();
        let nf = n as f64;
        lhs += 2.0 * PI * nf * nf / (2.0 * nf - 1.0) * c;
        rhs += 2.0 * PI * nf * nf / (2.0 * nf) * c;
    }
    Inequality { lhs, rhs }
}

/// The same two integrals by Gauss–Legendre in `r` and the trapezoid rule
/// in `θ`, which are exact for these polynomial integrands at the chosen
/// orders.
pub fn disc_integral_quadrature(f: &FourierHarmonic) -> Inequality {
    let n = f.terms().max(1);
    let (nodes, weights) = gauss_legendre(n + 2);
    let m = 4 * n + 4;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 0..m {
        let t = 2.0 * PI * j as f64 / m as f64;
        let dir = Point::new(t.cos(), t.sin());
        for (r, w) in nodes.iter().zip(&weights) {
            let g = f.gradient_sq(&(dir * *r));
            lhs += w * g;
            rhs += w * g * r;
        }
    }
    let dt = 2.0 * PI / m as f64;
    Inequality {
        lhs: lhs * dt,
        rhs: rhs * dt,
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// A polygon whose sides are all tangent to one circle, given by the
/// angles of the tangency points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentialPolygon {
    pub incenter: Point,
    pub inradius: f64,
    /// Sorted, in `[0, 2π)`.
    pub tangency_angles: Vec<f64>,
    /// Corner `i` lies between tangency points `i` and `i + 1`.
    pub vertices: Vec<Point>,
    /// Interior angle at each corner.
    pub angles: Vec<f64>,
}

impl TangentialPolygon {
    pub fn new(incenter: Point, inradius: f64, mut tangency_angles: Vec<f64>) -> Result<Self> {
        if !(inradius > 0.0) {
            return Err(HarmonicError::Domain("inradius must be positive".into()));
        }
        if tangency_angles.len() < 3 {
            return Err(HarmonicError::Domain(
                "a polygon needs at least 3 sides".into(),
            ));
        }
        for t in &mut tangency_angles {
            *t = t.rem_euclid(2.0 * PI);
        }
        tangency_angles.sort_by(f64::total_cmp);
        let n = tangency_angles.len();
        let mut vertices = Vec::with_capacity(n);
        let mut angles = Vec::with_capacity(n);
        for i in 0..n {
            let gap = gap(&tangency_angles, i);
            if !(gap > 0.0 && gap < PI) {
                return Err(HarmonicError::Domain(format!(
                    "tangency gap {gap} must lie in (0, π) for a bounded polygon"
                )));
            }
            let phi = gap / 2.0;
            let mid = tangency_angles[i] + phi;
            vertices.push(incenter + Point::new(mid.cos(), mid.sin()) * (inradius / phi.cos()));
            angles.push(PI - gap);
        }
        Ok(TangentialPolygon {
            incenter,
            inradius,
            tangency_angles,
            vertices,
            angles,
        })
    }

    pub fn sides(&self) -> usize {
        self.tangency_angles.len()
    }

    /// `ρ² Σ tan φᵢ`.
    pub fn area(&self) -> f64 {
        let n = self.sides();
        (0..n)
            .map(|i| (gap(&self.tangency_angles, i) / 2.0).tan())
            .sum::<f64>()
            * self.inradius
            * self.inradius
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.sides();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .sum()
    }

    pub fn contains(&self, p: &Point) -> bool {
        let n = self.sides();
        (0..n).all(|i| {
            cross2(
                &(self.vertices[(i + 1) % n] - self.vertices[i]),
                &(p - self.vertices[i]),
            ) >= -1e-12
        })
    }

    /// Square with unit incircle at the origin and sides axis-aligned.
    pub fn unit_square() -> Self {
        Self::new(Point::zeros(), 1.0, vec![0.0, PI / 2.0, PI, 1.5 * PI]).expect("valid square")
    }

    /// A random tangential polygon all of whose angles exceed `alpha`.
    pub fn random_nice<R: Rng>(rng: &mut R, alpha: f64) -> Self {
        let max_gap = PI - alpha;
        let min_sides = (2.0 * PI / max_gap).floor() as usize + 1;
        loop {
            let n = rng.gen_range(min_sides.max(3)..=min_sides.max(3) + 6);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = w.iter().sum();
            let start: f64 = rng.gen_range(0.0..2.0 * PI);
            let mut acc = start;
            let mut angles = Vec::with_capacity(n);
            let mut ok = true;
            for x in &w {
                let g = x / total * 2.0 * PI;
                if g >= max_gap * 0.999 {
                    ok = false;
                }
                angles.push(acc);
                acc += g;
            }
            if ok {
                let c = Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                let r = rng.gen_range(0.2..3.0);
                return Self::new(c, r, angles).expect("gaps checked");
            }
        }
    }
}

impl crate::geometry::AlphaNice for TangentialPolygon {
    fn is_alpha_nice(&self, alpha: f64) -> bool {
        self.angles.iter().all(|&a| a > alpha)
    }
}

fn gap(angles: &[f64], i: usize) -> f64 {
    let n = angles.len();
    if i + 1 < n {
        angles[i + 1] - angles[i]
    } else {
        angles[0] + 2.0 * PI - angles[n - 1]
    }
}

/// `C₁(α) = (1 + C₀)/sin²(α/2)`.
pub fn polygon_constant(alpha: f64) -> f64 {
    (1.0 + DISC_CONSTANT) / (alpha / 2.0).sin().powi(2)
}

/// Relative stability demanded of the adaptive quadrature.
pub const QUADRATURE_STABILITY: f64 = 1e-6;

/// Compares `∫_{∂P} ∫_{T_az} ‖∇f‖² dw dz` with `C₁(α) ∬_P ‖∇f‖² dA`.
///
/// Each side `AB` is handled in the coordinates `w = a + s(z(t) − a)`,
/// `z(t) = A + t(B − A)`, where the segment integral has weight `|z − a|·L`
/// and the fan triangle has Jacobian `s·ρ·L`. Both use the same tensor
/// Gauss–Legendre rule, doubled until successive values agree.
pub fn polygon_integral_check(
    p: &TangentialPolygon,
    f: &impl Harmonic,
    alpha: f64,
) -> Result<Inequality> {
    use crate::geometry::AlphaNice;
    if !p.is_alpha_nice(alpha) {
        return Err(HarmonicError::Precondition(format!(
            "polygon is not {alpha}-nice (smallest angle {})",
            p.angles.iter().copied().fold(f64::INFINITY, f64::min)
        )));
    }
    let a = p.incenter;
    let n = p.sides();
    let mut lhs = 0.0;
    let mut area = 0.0;
    for i in 0..n {
        let (start, end) = (p.vertices[(i + n - 1) % n], p.vertices[i]);
        let side = |order: usize| {
            let (x, w) = gauss_legendre(order);
            let len = (end - start).norm();
            let mut seg = 0.0;
            let mut tri = 0.0;
            for (t, wt) in x.iter().zip(&w) {
                let z = start + (end - start) * *t;
                let dz = (z - a).norm();
                for (s, ws) in x.iter().zip(&w) {
                    let g = f.gradient_sq(&(a + (z - a) * *s));
                    seg += wt * ws * g * dz;
                    tri += wt * ws * g * s;
                }
            }
            (seg * len, tri * len * p.inradius)
        };
        let mut order = 8;
        let mut prev = side(order);
        loop {
            order *= 2;
            let next = side(order);
            let stable = (next.0 - prev.0).abs() <= QUADRATURE_STABILITY * next.0.abs().max(1e-300)
                && (next.1 - prev.1).abs() <= QUADRATURE_STABILITY * next.1.abs().max(1e-300);
            prev = next;
            if stable || order >= 256 {
                break;
            }
        }
        lhs += prev.0;
        area += prev.1;
    }
    Ok(Inequality {
        lhs,
        rhs: polygon_constant(alpha) * area,
    })
}

/// Replaces each corner of angle at most `alpha` by two corners, cutting
/// with the tangent at the midpoint of its tangency gap, until every angle
/// exceeds `alpha`. Returns the new polygon and the split depth used at
/// each original corner.
pub fn nicify_polygon(p: &TangentialPolygon, alpha: f64) -> Result<(TangentialPolygon, Vec<u32>)> {
    if !(alpha < PI) {
        return Err(HarmonicError::Domain(format!(
            "alpha must be below π, got {alpha}"
        )));
    }
    let n = p.sides();
    let limit = PI - alpha;
    let mut angles = Vec::with_capacity(n);
    let mut depths = Vec::with_capacity(n);
    for i in 0..n {
        let t0 = p.tangency_angles[i];
        let g = gap(&p.tangency_angles, i);
        // A corner of angle β = π − g becomes 2ᵈ corners of angle
        // π − g/2ᵈ.
        let mut d = 0u32;
        while g / 2f64.powi(d as i32) >= limit {
            d += 1;
        }
        let parts = 1u64 << d;
        for k in 0..parts {
            angles.push(t0 + g * k as f64 / parts as f64);
        }
        depths.push(d);
    }
    Ok((
        TangentialPolygon::new(p.incenter, p.inradius, angles)?,
        depths,
    ))
}

/// Split depth needed for a corner of angle `beta`: the least `n` with
/// `β/2ⁿ + (1 − 1/2ⁿ)π > α`.
pub fn predicted_split_depth(beta: f64, alpha: f64) -> u32 {
    let mut n = 0;
    while beta / 2f64.powi(n) + (1.0 - 1.0 / 2f64.powi(n)) * PI <= alpha {
        n += 1;
    }
    n as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AlphaNice;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn evaluation_matches_polar_form() {
        let f = FourierHarmonic::new(0.5, vec![1.0, -2.0, 0.25], vec![0.3, 0.0, 1.5]);
        for (r, t) in [(0.3, 1.0), (0.9, -2.0), (1.7, 4.0)] {
            let p = Point::new(r * f64::cos(t), r * f64::sin(t));
            let mut expect = 0.5;
            for n in 1..=3 {
                let nf = n as f64;
                expect += r.powi(n)
                    * (f.a[n as usize - 1] * (nf * t).cos() + f.b[n as usize - 1] * (nf * t).sin());
            }
            assert!((f.value(&p) - expect).abs() < 1e-12);
            let h = 1e-6;
            let gx = (f.value(&(p + Point::new(h, 0.0))) - f.value(&(p - Point::new(h, 0.0))))
                / (2.0 * h);
            let gy = (f.value(&(p + Point::new(0.0, h))) - f.value(&(p - Point::new(0.0, h))))
                / (2.0 * h);
            assert!((f.gradient(&p) - Point::new(gx, gy)).norm() < 1e-6);
        }
    }

    #[test]
    fn gradient_bound_examples() {
        let c = FourierHarmonic::constant(3.0);
        let b = gradient_bound_check(&c, &Point::zeros(), 2.0).unwrap();
        assert_eq!((b.lhs, b.rhs), (0.0, 3.0));
        let f = FourierHarmonic::new(1.0, vec![1.0], vec![]);
        let b = gradient_bound_check(&f, &Point::zeros(), 1.0).unwrap();
        assert!((b.lhs - 1.0).abs() < 1e-15 && (b.rhs - 2.0).abs() < 1e-15);
        let x = FourierHarmonic::new(0.0, vec![1.0], vec![]);
        assert!(matches!(
            gradient_bound_check(&x, &Point::zeros(), 1.0),
            Err(HarmonicError::Precondition(_))
        ));
        let o = oscillation_bound_check(&x, &Point::zeros(), 1.0).unwrap();
        assert!((o.lhs - 1.0).abs() < 1e-15 && (o.rhs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn harnack_holds_for_nonnegative_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x0 = Point::zeros();
        for _ in 0..10 {
            let g = FourierHarmonic::random(&mut rng, 6, 0.6);
            // Shift up so the function is nonnegative on the unit disc.
            let (lo, _) = sample_range(&g, &x0, 1.0);
            let f = FourierHarmonic {
                a0: g.a0 - lo + 1e-9,
                ..g
            };
            for _ in 0..100 {
                let r = rng.gen_range(0.0..0.99);
                let t = rng.gen_range(0.0..2.0 * PI);
                let (lower, value, upper) =
                    harnack_bounds(&f, &x0, 1.0, &Point::new(r * t.cos(), r * t.sin()));
                assert!(lower <= value + 1e-12 && value <= upper + 1e-12);
            }
        }
    }

    #[test]
    fn disc_ratio_examples() {
        let one = FourierHarmonic::new(0.0, vec![1.0], vec![]);
        let d = disc_integral_ratio(&one);
        assert!((d.lhs - 2.0 * PI).abs() < 1e-14 && (d.rhs - PI).abs() < 1e-14);
        assert!((d.ratio() - 2.0).abs() < 1e-15);
        let two = FourierHarmonic::new(0.0, vec![0.0, 1.0], vec![]);
        let d = disc_integral_ratio(&two);
        assert!((d.lhs - 8.0 * PI / 3.0).abs() < 1e-14 && (d.rhs - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn disc_quadrature_agrees_with_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let rate = rng.gen_range(0.1..1.0);
            let f = FourierHarmonic::random(&mut rng, 10, rate);
            let s = disc_integral_ratio(&f);
            let q = disc_integral_quadrature(&f);
            assert!((s.lhs - q.lhs).abs() <= 1e-6 * s.lhs);
            assert!((s.rhs - q.rhs).abs() <= 1e-6 * s.rhs);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16] {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn polygon_constant_example() {
        assert!((polygon_constant(PI / 2.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn affine_function_on_unit_square() {
        let sq = TangentialPolygon::unit_square();
        assert!((sq.area() - 4.0).abs() < 1e-12);
        let g = 1.7;
        let f = FourierHarmonic::new(0.0, vec![g], vec![]);
        let c = polygon_integral_check(&sq, &f, PI / 3.0).unwrap();
        let expected = g * g * 4.0 * (2f64.sqrt() + 1f64.asinh());
        assert!((c.lhs - expected).abs() < 1e-9 * expected);
        assert!((c.rhs - 48.0 * g * g).abs() < 1e-9 * c.rhs);
        assert!(c.holds());
    }

    #[test]
    fn non_nice_polygon_rejected() {
        let sq = TangentialPolygon::unit_square();
        let f = FourierHarmonic::new(0.0, vec![1.0], vec![]);
        assert!(matches!(
            polygon_integral_check(&sq, &f, PI / 2.0),
            Err(HarmonicError::Precondition(_))
        ));
    }

    #[test]
    fn nicify_examples() {
        let sq = TangentialPolygon::unit_square();
        let (same, depths) = nicify_polygon(&sq, 1.0).unwrap();
        assert_eq!(same, sq);
        assert!(depths.iter().all(|&d| d == 0));

        // One corner of angle β: gap π − β.
        let beta: f64 = 0.1;
        let p = TangentialPolygon::new(
            Point::zeros(),
            1.0,
            vec![0.0, PI - beta, 1.5 * PI - beta / 2.0],
        )
        .unwrap();
        assert!((p.angles[0] - beta).abs() < 1e-12);
        let (q, depths) = nicify_polygon(&p, 3.0).unwrap();
        assert_eq!(depths[0], 5);
        assert_eq!(predicted_split_depth(beta, 3.0), 5);
        assert!(q.is_alpha_nice(3.0));
        assert!(q.area() <= p.area());

        let (one, _) = nicify_polygon(&p, beta / 2.0 + PI / 2.0 - 1e-9).unwrap();
        let new: Vec<f64> = one
            .angles
            .iter()
            .copied()
            .filter(|a| (a - (beta / 2.0 + PI / 2.0)).abs() < 1e-12)
            .collect();
        assert_eq!(new.len(), 2);
        assert!(nicify_polygon(&p, PI).is_err());
    }

    #[test]
    fn random_polygons_satisfy_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let alpha = rng.gen_range(0.3..2.0);
            let p = TangentialPolygon::random_nice(&mut rng, alpha);
            assert!(p.is_alpha_nice(alpha));
            let scale = p
                .vertices
                .iter()
                .map(|v| (v - p.incenter).norm())
                .fold(0.0, f64::max);
            let f = FourierHarmonic::random(&mut rng, 8, 0.8).shifted(p.incenter, scale);
            let c = polygon_integral_check(&p, &f, alpha).unwrap();
            assert!(c.holds_within(1e-4), "{c:?}");
        }
    }
}

//! Planar primitives for circle-packed triangulations.
//!
//! Everything here works in double precision with a relative tangency
//! tolerance: two circles are tangent when
//! `|‖c₁ − c₂‖ − (r₁ + r₂)| ≤ ε·(r₁ + r₂)`.

use nalgebra::Vector2;
use num_complex::Complex64;
use thiserror::Error;

use crate::packing::CirclePacking;
use crate::VertexId;

pub type Point = Vector2<f64>;

/// Default relative tangency tolerance.
pub const TANGENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("circles {a} and {b} are not tangent (relative residual {residual:.3e})")]
    NotTangent {
        a: VertexId,
        b: VertexId,
        residual: f64,
    },
    #[error("vertex {0} is not an interior vertex; its polygon is incomplete")]
    Incomplete(VertexId),
    #[error("edge {0}-{1} is a boundary edge")]
    BoundaryEdge(VertexId, VertexId),
    #[error("unknown vertex {0}")]
    NotFound(VertexId),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub id: VertexId,
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(id: impl Into<VertexId>, x: f64, y: f64, radius: f64) -> Self {
        Circle {
            id: id.into(),
            center: Point::new(x, y),
            radius,
        }
    }

    pub fn curvature(&self) -> f64 {
        1.0 / self.radius
    }

    /// `|‖c₁ − c₂‖ − (r₁ + r₂)| / (r₁ + r₂)`.
    pub fn tangency_residual(&self, other: &Circle) -> f64 {
        let sum = self.radius + other.radius;
        ((self.center - other.center).norm() - sum).abs() / sum
    }

    pub fn is_tangent(&self, other: &Circle, tol: f64) -> bool {
        self.tangency_residual(other) <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub vertices: [VertexId; 3],
    pub incenter: Point,
    pub inradius: f64,
}

/// The dual of a primal edge joins the incenters of the faces on either
/// side. Boundary edges of a finite packing have only one incident face and
/// carry no dual length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEdge {
    pub edge: (VertexId, VertexId),
    pub endpoints: (Point, Option<Point>),
    pub primal_length: f64,
    pub dual_length: Option<f64>,
}

impl DualEdge {
    pub fn is_boundary(&self) -> bool {
        self.endpoints.1.is_none()
    }
}

/// Radius of the circle inscribed in the triangle of centres of three
/// mutually tangent circles.
pub fn incircle_radius(rx: f64, ry: f64, rz: f64) -> Result<f64> {
    if !(rx > 0.0 && ry > 0.0 && rz > 0.0) {
        return Err(GeometryError::Domain(format!(
            "radii must be positive, got ({rx}, {ry}, {rz})"
        )));
    }
    Ok((rx * ry * rz / (rx + ry + rz)).sqrt())
}

fn check_tangent(a: &Circle, b: &Circle, tol: f64) -> Result<()> {
    let residual = a.tangency_residual(b);
    if residual <= tol {
        Ok(())
    } else {
        Err(GeometryError::NotTangent {
            a: a.id,
            b: b.id,
            residual,
        })
    }
}

/// Incenter of the triangle formed by three mutually tangent circles.
///
/// Barycentric weights are the opposite side lengths, which for tangent
/// circles are radius sums.
pub fn incenter(x: &Circle, y: &Circle, z: &Circle) -> Result<Point> {
    check_tangent(x, y, TANGENCY_TOL)?;
    check_tangent(y, z, TANGENCY_TOL)?;
    check_tangent(x, z, TANGENCY_TOL)?;
    incenter_unchecked(x, y, z)
}

pub(crate) fn incenter_unchecked(x: &Circle, y: &Circle, z: &Circle) -> Result<Point> {
    let cross = cross2(&(y.center - x.center), &(z.center - x.center));
    let scale = (x.radius + y.radius + z.radius).powi(2);
    if cross.abs() <= 1e-14 * scale {
        return Err(GeometryError::Degenerate(format!(
            "centers of {}, {}, {} are collinear",
            x.id, y.id, z.id
        )));
    }
    let wx = y.radius + z.radius;
    let wy = x.radius + z.radius;
    let wz = x.radius + y.radius;
    // Accumulate relative to x to keep cancellation local.
    let rel = (y.center - x.center) * wy + (z.center - x.center) * wz;
    Ok(x.center + rel / (wx + wy + wz))
}

pub(crate) fn cross2(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Distance from `p` to the infinite line through `a` and `b`.
pub fn distance_to_line(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = b - a;
    cross2(&d, &(p - a)).abs() / d.norm()
}

/// Which root of the Descartes quadratic to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Larger curvature: the small circle filling the interstice.
    Plus,
    /// Smaller curvature: the outer solution (a line when zero, an
    /// enclosing circle when negative).
    Minus,
}

/// Both curvatures of circles tangent to three mutually tangent circles,
/// returned as `(plus, minus)`.
pub fn descartes_curvatures(k1: f64, k2: f64, k3: f64) -> Result<(f64, f64)> {
    let disc = k1 * k2 + k2 * k3 + k3 * k1;
    if disc < 0.0 || !disc.is_finite() {
        return Err(GeometryError::Domain(format!(
            "negative Descartes discriminant {disc:.6e}"
        )));
    }
    let sum = k1 + k2 + k3;
    let root = 2.0 * disc.sqrt();
    Ok((sum + root, sum - root))
}

/// Places the circle tangent to three mutually tangent circles.
///
/// The centre comes from the complex form of the Descartes relation, where
/// `k·z` obeys the same quadratic as the curvatures. Of the two complex
/// roots the one tangent to all three parents is kept, then polished with a
/// Gauss–Newton step on the tangency equations.
pub fn descartes_place_circle(
    c1: &Circle,
    c2: &Circle,
    c3: &Circle,
    branch: Branch,
    id: VertexId,
) -> Result<Circle> {
    check_tangent(c1, c2, TANGENCY_TOL)?;
    check_tangent(c2, c3, TANGENCY_TOL)?;
    check_tangent(c1, c3, TANGENCY_TOL)?;

    let (k1, k2, k3) = (c1.curvature(), c2.curvature(), c3.curvature());
    let (plus, minus) = descartes_curvatures(k1, k2, k3)?;
    let k4 = match branch {
        Branch::Plus => plus,
        Branch::Minus => minus,
    };
    if k4.abs() <= 1e-12 * (k1 + k2 + k3) {
        return Err(GeometryError::Domain(
            "the requested solution is a straight line".into(),
        ));
    }

    let origin = (c1.center + c2.center + c3.center) / 3.0;
    let z = |c: &Circle| {
        let p = c.center - origin;
        Complex64::new(p.x, p.y)
    };
    let (z1, z2, z3) = (z(c1), z(c2), z(c3));
    let linear = z1 * k1 + z2 * k2 + z3 * k3;
    let root = (z1 * z2 * (k1 * k2) + z2 * z3 * (k2 * k3) + z1 * z3 * (k1 * k3)).sqrt() * 2.0;

    let radius = 1.0 / k4.abs();
    let parents = [c1, c2, c3];
    // External tangency for positive curvature, internal for negative.
    let target = |c: &Circle| {
        if k4 > 0.0 {
            radius + c.radius
        } else {
            radius - c.radius
        }
    };
    let worst = |center: &Point| {
        parents
            .iter()
            .map(|c| ((center - c.center).norm() - target(c)).abs() / (radius + c.radius))
            .fold(0.0, f64::max)
    };

    let mut best: Option<(Point, f64)> = None;
    for sign in [1.0, -1.0] {
        let w = (linear + root * sign) / k4;
        let center = origin + Point::new(w.re, w.im);
        let res = worst(&center);
        if best.is_none_or(|(_, r)| res < r) {
            best = Some((center, res));
        }
    }
    let (mut center, _) = best.expect("two candidates");

    for _ in 0..2 {
        center = gauss_newton_step(&center, &parents, &target);
    }
    let residual = worst(&center);
    if residual > TANGENCY_TOL {
        return Err(GeometryError::Degenerate(format!(
            "placed circle misses its parents (relative residual {residual:.3e})"
        )));
    }
    Ok(Circle { id, center, radius })
}

fn gauss_newton_step(
    center: &Point,
    parents: &[&Circle; 3],
    target: &impl Fn(&Circle) -> f64,
) -> Point {
    // Minimise Σ (‖p − cᵢ‖ − tᵢ)² over p.
    let mut jtj = nalgebra::Matrix2::<f64>::zeros();
    let mut jtr = Point::zeros();
    for c in parents {
        let d = center - c.center;
        let n = d.norm();
        if n == 0.0 {
            return *center;
        }
        let g = d / n;
        let r = n - target(c);
        jtj += g * g.transpose();
        jtr += g * r;
    }
    match jtj.try_inverse() {
        Some(inv) => center - inv * jtr,
        None => *center,
    }
}

/// Dubejko weight of the edge `uv` from radii alone, where `w1` and `w2`
/// are the radii of the third circles of the two incident faces.
pub fn dubejko_weight_formula(ru: f64, rv: f64, w1: f64, w2: f64) -> f64 {
    let s = ru + rv;
    (ru * rv).sqrt() / s * ((w1 / (s + w1)).sqrt() + (w2 / (s + w2)).sqrt())
}

/// Lower bound on every Dubejko weight when adjacent radius ratios are at
/// most `m`.
pub fn weight_lower_bound(m: f64) -> f64 {
    2.0 / (m + 1.0) * (1.0 / (2.0 * m + 1.0)).sqrt()
}

/// Angle of the polygon of `v` at the incenter of a face containing `v`,
/// from `tan(α/2) = r_v / r_face`.
pub fn corner_angle(r_v: f64, face_inradius: f64) -> f64 {
    2.0 * (r_v / face_inradius).atan()
}

/// Lower bound `2·atan(√(r_x / min(r_y, r_z)))` on the corner angle of the
/// polygon of `x` at the incenter of face `xyz`.
pub fn corner_angle_lower_bound(rx: f64, ry: f64, rz: f64) -> f64 {
    2.0 * (rx / ry.min(rz)).sqrt().atan()
}

/// The polygon of an interior vertex: its sides are the duals of the edges
/// at the vertex, its corners the incenters of the incident faces.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPolygon {
    pub vertex: VertexId,
    /// Counter-clockwise.
    pub corners: Vec<Point>,
    /// Interior angle at each corner, radians.
    pub angles: Vec<f64>,
}

impl VertexPolygon {
    pub fn is_convex(&self) -> bool {
        let n = self.corners.len();
        (0..n).all(|i| {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % n];
            let c = self.corners[(i + 2) % n];
            cross2(&(b - a), &(c - b)) > 0.0
        })
    }

    /// Every side is at distance at least `radius·(1 − tol)` from `center`,
    /// and `center` is on the inner side of each.
    pub fn contains_circle(&self, center: &Point, radius: f64, tol: f64) -> bool {
        let n = self.corners.len();
        (0..n).all(|i| {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % n];
            let side = b - a;
            let signed = cross2(&side, &(center - a)) / side.norm();
            signed >= radius * (1.0 - tol)
        })
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.corners)
    }
}

pub(crate) fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let o = pts[0];
    (1..n - 1)
        .map(|i| cross2(&(pts[i] - o), &(pts[i + 1] - o)))
        .sum::<f64>()
        * 0.5
}

/// Interior angle of a closed polygon at each vertex (counter-clockwise
/// order assumed).
pub(crate) fn interior_angles(pts: &[Point]) -> Vec<f64> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            let a = prev - pts[i];
            let b = next - pts[i];
            cross2(&a, &b).abs().atan2(a.dot(&b))
        })
        .collect()
}

pub trait AlphaNice {
    /// True iff every relevant angle strictly exceeds `alpha`.
    fn is_alpha_nice(&self, alpha: f64) -> bool;
}

impl AlphaNice for VertexPolygon {
    fn is_alpha_nice(&self, alpha: f64) -> bool {
        self.angles.iter().all(|&a| a > alpha)
    }
}

pub fn polygon_of_vertex(packing: &CirclePacking, v: VertexId) -> Result<VertexPolygon> {
    let idx = packing.index_of(v).ok_or(GeometryError::NotFound(v))?;
    if !packing.is_interior_index(idx) {
        return Err(GeometryError::Incomplete(v));
    }
    let corners: Vec<Point> = packing
        .fan_indices(idx)
        .iter()
        .map(|&f| packing.faces()[f].incenter)
        .collect();
    let angles = interior_angles(&corners);
    Ok(VertexPolygon {
        vertex: v,
        corners,
        angles,
    })
}

/// An edge is α-nice when its dual is an α-nice side of both endpoint
/// polygons: the four corner angles at the two dual endpoints all exceed α.
pub fn alpha_nice_edge(
    packing: &CirclePacking,
    u: VertexId,
    v: VertexId,
    alpha: f64,
) -> Result<bool> {
    Ok(edge_corner_angles(packing, u, v)?
        .iter()
        .all(|&a| a > alpha))
}

/// The angles of `P_u` and `P_v` at both ends of the dual of `uv`.
pub fn edge_corner_angles(packing: &CirclePacking, u: VertexId, v: VertexId) -> Result<[f64; 4]> {
    let iu = packing.index_of(u).ok_or(GeometryError::NotFound(u))?;
    let iv = packing.index_of(v).ok_or(GeometryError::NotFound(v))?;
    let faces = packing.edge_face_indices(iu, iv);
    if faces.len() != 2 {
        return Err(GeometryError::BoundaryEdge(u, v));
    }
    let ru = packing.circle_at(iu).radius;
    let rv = packing.circle_at(iv).radius;
    let f1 = packing.faces()[faces[0]].inradius;
    let f2 = packing.faces()[faces[1]].inradius;
    Ok([
        corner_angle(ru, f1),
        corner_angle(ru, f2),
        corner_angle(rv, f1),
        corner_angle(rv, f2),
    ])
}

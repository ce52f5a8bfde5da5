//! Sphere packings in ℝ³, their tangent-plane cells, and face-area weights.
//!
//! The cell of a sphere is cut out of space by the common tangent planes
//! with each tangent neighbour. When that intersection is bounded the
//! vertex is covered and `c(u, v) = A(u, v) / ‖u − v‖`, where `A(u, v)` is
//! the area of the face of the cell lying in the tangent plane.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::TANGENCY_TOL;
use crate::network::{NetworkError, WeightedNetwork};
use crate::VertexId;

pub type Point3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum SphereError {
    #[error("vertex {vertex}: nonpositive radius {radius}")]
    NonPositiveRadius { vertex: VertexId, radius: f64 },
    #[error("vertex {0}: duplicate id")]
    DuplicateId(VertexId),
    #[error("spheres {u} and {v} overlap (relative residual {residual:.3e})")]
    Overlap {
        u: VertexId,
        v: VertexId,
        residual: f64,
    },
    #[error("unknown vertex {0}")]
    NotFound(VertexId),
    #[error("vertex {0} is not covered: its tangent half-spaces are unbounded")]
    NotCovered(VertexId),
    #[error("packing is not covering: {0}")]
    Coverage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub type Result<T> = std::result::Result<T, SphereError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub id: VertexId,
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(id: impl Into<VertexId>, x: f64, y: f64, z: f64, radius: f64) -> Self {
        Sphere {
            id: id.into(),
            center: Point3::new(x, y, z),
            radius,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpherePacking3D {
    spheres: Vec<Sphere>,
    index: HashMap<VertexId, usize>,
    neighbors: Vec<Vec<usize>>,
}

impl SpherePacking3D {
    /// Validates radii, ids and disjointness and records tangent pairs.
    pub fn new(mut spheres: Vec<Sphere>) -> Result<Self> {
        spheres.sort_by_key(|s| s.id);
        let mut index = HashMap::with_capacity(spheres.len());
        for (i, s) in spheres.iter().enumerate() {
            if !(s.radius > 0.0) || !s.radius.is_finite() {
                return Err(SphereError::NonPositiveRadius {
                    vertex: s.id,
                    radius: s.radius,
                });
            }
            if index.insert(s.id, i).is_some() {
                return Err(SphereError::DuplicateId(s.id));
            }
        }
        let n = spheres.len();
        let mut order: Vec<usize> = (0..n).collect();
        let left = |s: &Sphere| s.center.x - s.radius;
        order.sort_by(|&a, &b| left(&spheres[a]).total_cmp(&left(&spheres[b])));
        let mut neighbors = vec![Vec::new(); n];
        for (oi, &i) in order.iter().enumerate() {
            let a = &spheres[i];
            let right = a.center.x + a.radius * (1.0 + 2.0 * TANGENCY_TOL);
            for &j in &order[oi + 1..] {
                let b = &spheres[j];
                if left(b) > right {
                    break;
                }
                let sum = a.radius + b.radius;
                let residual = ((a.center - b.center).norm() - sum) / sum;
                if residual.abs() <= TANGENCY_TOL {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                } else if residual < 0.0 {
                    return Err(SphereError::Overlap {
                        u: a.id,
                        v: b.id,
                        residual: -residual,
                    });
                }
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(SpherePacking3D {
            spheres,
            index,
            neighbors,
        })
    }

    /// Unit spheres centred on `2ℤ³ ∩ [0, 2(side − 1)]³`.
    pub fn cubic(side: u32) -> Result<Self> {
        if side == 0 {
            return Err(SphereError::Domain("side must be at least 1".into()));
        }
        let mut out = Vec::new();
        for i in 0..side {
            for j in 0..side {
                for k in 0..side {
                    let id = ((i * side + j) * side + k) as u64;
                    out.push(Sphere::new(
                        id,
                        2.0 * i as f64,
                        2.0 * j as f64,
                        2.0 * k as f64,
                        1.0,
                    ));
                }
            }
        }
        Self::new(out)
    }

    /// Unit spheres on the face-centred cubic lattice: integer points with
    /// even coordinate sum in `[0, side)³`, scaled by `√2`.
    pub fn fcc(side: u32) -> Result<Self> {
        if side == 0 {
            return Err(SphereError::Domain("side must be at least 1".into()));
        }
        let s = 2f64.sqrt();
        let mut out = Vec::new();
        let mut id = 0u64;
        for i in 0..side {
            for j in 0..side {
                for k in 0..side {
                    if (i + j + k) % 2 == 0 {
                        out.push(Sphere::new(
                            id,
                            s * i as f64,
                            s * j as f64,
                            s * k as f64,
                            1.0,
                        ));
                        id += 1;
                    }
                }
            }
        }
        Self::new(out)
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    pub fn get(&self, id: VertexId) -> Option<&Sphere> {
        self.index.get(&id).map(|&i| &self.spheres[i])
    }

    pub fn neighbors(&self, id: VertexId) -> Option<impl Iterator<Item = &Sphere> + '_> {
        let i = *self.index.get(&id)?;
        Some(self.neighbors[i].iter().map(|&j| &self.spheres[j]))
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Every coordinate and radius multiplied by `s`.
    pub fn dilate(&self, s: f64) -> Result<Self> {
        Self::new(
            self.spheres
                .iter()
                .map(|x| Sphere {
                    center: x.center * s,
                    radius: x.radius * s,
                    ..*x
                })
                .collect(),
        )
    }

    pub fn save<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{{\"dim\":3,\"circles\":[")?;
        for (i, s) in self.spheres.iter().enumerate() {
            let sep = if i + 1 == self.spheres.len() { "" } else { "," };
            writeln!(
                sink,
                "{{\"id\":{},\"x\":{:.16e},\"y\":{:.16e},\"z\":{:.16e},\"r\":{:.16e}}}{sep}",
                s.id.0, s.center.x, s.center.y, s.center.z, s.radius
            )?;
        }
        writeln!(sink, "]}}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFace {
    pub neighbor: VertexId,
    /// Outward unit normal, `(u − v)/‖u − v‖`.
    pub normal: Point3,
    /// Signed distance of the face plane from the sphere centre.
    pub offset: f64,
    pub area: f64,
    /// Corners in absolute coordinates, counter-clockwise seen from outside.
    pub corners: Vec<Point3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellPolyhedron {
    pub vertex: VertexId,
    pub center: Point3,
    pub radius: f64,
    /// Every tangent half-space as `(normal, offset)`, redundant ones
    /// included.
    pub halfspaces: Vec<(Point3, f64)>,
    pub faces: Vec<CellFace>,
}

impl CellPolyhedron {
    pub fn surface_area(&self) -> f64 {
        self.faces.iter().map(|f| f.area).sum()
    }

    /// Cone decomposition from the sphere centre.
    pub fn volume(&self) -> f64 {
        self.faces.iter().map(|f| f.offset * f.area / 3.0).sum()
    }

    /// `‖Σ A·n̂‖ / Σ A`; zero for any closed surface.
    pub fn vector_area_residual(&self) -> f64 {
        let sum: Point3 = self.faces.iter().map(|f| f.normal * f.area).sum();
        sum.norm() / self.surface_area()
    }

    pub fn face_with(&self, u: VertexId) -> Option<&CellFace> {
        self.faces.iter().find(|f| f.neighbor == u)
    }
}

/// A convex polytope kept as a list of planar faces.
struct Polytope {
    faces: Vec<(Option<usize>, Point3, f64, Vec<Point3>)>,
}

impl Polytope {
    fn cube(h: f64) -> Self {
        let mut faces = Vec::new();
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut n = Point3::zeros();
                n[axis] = sign;
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                let corner = |s: f64, t: f64| {
                    let mut p = n * h;
                    p[a] = s * h;
                    p[b] = t * h;
                    p
                };
                let mut poly = vec![
                    corner(-1.0, -1.0),
                    corner(1.0, -1.0),
                    corner(1.0, 1.0),
                    corner(-1.0, 1.0),
                ];
                orient(&mut poly, &n);
                faces.push((None, n, h, poly));
            }
        }
        Polytope { faces }
    }

    /// Intersects with `{x : n·x ≤ d}`, labelling the new face `label`.
    fn cut(&mut self, label: usize, n: Point3, d: f64, eps: f64) {
        let mut cut_points: Vec<Point3> = Vec::new();
        let mut kept = Vec::with_capacity(self.faces.len() + 1);
        for (lab, fnormal, fd, poly) in self.faces.drain(..) {
            let m = poly.len();
            let dist: Vec<f64> = poly.iter().map(|p| n.dot(p) - d).collect();
            if dist.iter().all(|&x| x <= eps) {
                for (p, &x) in poly.iter().zip(&dist) {
                    if x.abs() <= eps {
                        cut_points.push(*p);
                    }
                }
                kept.push((lab, fnormal, fd, poly));
                continue;
            }
            let mut out = Vec::with_capacity(m + 1);
            for i in 0..m {
                let (p, q) = (poly[i], poly[(i + 1) % m]);
                let (dp, dq) = (dist[i], dist[(i + 1) % m]);
                if dp <= eps {
                    out.push(p);
                    if dp.abs() <= eps {
                        cut_points.push(p);
                    }
                }
                if (dp > eps && dq < -eps) || (dp < -eps && dq > eps) {
                    let t = dp / (dp - dq);
                    let x = p + (q - p) * t;
                    out.push(x);
                    cut_points.push(x);
                }
            }
            let out = dedup(out, eps);
            if out.len() >= 3 {
                kept.push((lab, fnormal, fd, out));
            }
        }
        self.faces = kept;
        let mut pts = dedup_all(cut_points, eps);
        if pts.len() >= 3 {
            let c: Point3 = pts.iter().sum::<Point3>() / pts.len() as f64;
            let e1 = any_perpendicular(&n);
            let e2 = n.cross(&e1);
            pts.sort_by(|a, b| {
                let (pa, pb) = (a - c, b - c);
                pa.dot(&e2)
                    .atan2(pa.dot(&e1))
                    .total_cmp(&pb.dot(&e2).atan2(pb.dot(&e1)))
            });
            self.faces.push((Some(label), n, d, pts));
        }
    }
}

fn any_perpendicular(n: &Point3) -> Point3 {
    let t = if n.x.abs() < 0.9 {
        Point3::x()
    } else {
        Point3::y()
    };
    n.cross(&t).normalize()
}

fn polygon_vector_area(poly: &[Point3]) -> Point3 {
    let m = poly.len();
    (0..m)
        .map(|i| poly[i].cross(&poly[(i + 1) % m]))
        .sum::<Point3>()
        * 0.5
}

fn orient(poly: &mut [Point3], n: &Point3) {
    if polygon_vector_area(poly).dot(n) < 0.0 {
        poly.reverse();
    }
}

fn dedup(pts: Vec<Point3>, eps: f64) -> Vec<Point3> {
    let mut out: Vec<Point3> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().is_none_or(|q| (p - q).norm() > eps) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= eps {
        out.pop();
    }
    out
}

fn dedup_all(pts: Vec<Point3>, eps: f64) -> Vec<Point3> {
    let mut out: Vec<Point3> = Vec::new();
    for p in pts {
        if out.iter().all(|q| (p - q).norm() > eps) {
            out.push(p);
        }
    }
    out
}

/// The cell of `v`, built by cutting a large box with each tangent
/// half-space in turn.
pub fn cell_polyhedron(packing: &SpherePacking3D, v: VertexId) -> Result<CellPolyhedron> {
    let i = *packing.index.get(&v).ok_or(SphereError::NotFound(v))?;
    let s = packing.spheres[i];
    let nbrs: Vec<&Sphere> = packing.neighbors[i]
        .iter()
        .map(|&j| &packing.spheres[j])
        .collect();
    if nbrs.len() < 4 {
        return Err(SphereError::NotCovered(v));
    }
    let reach = nbrs
        .iter()
        .map(|u| (u.center - s.center).norm())
        .fold(0.0, f64::max);
    let eps = 1e-9 * s.radius;
    let mut poly = Polytope::cube(16.0 * reach);
    let mut halfspaces = Vec::with_capacity(nbrs.len());
    for (k, u) in nbrs.iter().enumerate() {
        let n = (u.center - s.center).normalize();
        halfspaces.push((n, s.radius));
        poly.cut(k, n, s.radius, eps);
    }
    if poly.faces.iter().any(|f| f.0.is_none()) {
        return Err(SphereError::NotCovered(v));
    }
    let min_area = 1e-18 * s.radius * s.radius;
    let faces = poly
        .faces
        .into_iter()
        .filter_map(|(lab, n, d, mut corners)| {
            orient(&mut corners, &n);
            let area = polygon_vector_area(&corners).norm();
            (area > min_area).then(|| CellFace {
                neighbor: nbrs[lab.expect("box faces rejected above")].id,
                normal: n,
                offset: d,
                area,
                corners: corners.into_iter().map(|p| p + s.center).collect(),
            })
        })
        .collect();
    Ok(CellPolyhedron {
        vertex: v,
        center: s.center,
        radius: s.radius,
        halfspaces,
        faces,
    })
}

/// Cells of every covered vertex, keyed by id.
pub fn covered_cells(packing: &SpherePacking3D) -> BTreeMap<VertexId, CellPolyhedron> {
    packing
        .spheres
        .par_iter()
        .filter_map(|s| cell_polyhedron(packing, s.id).ok())
        .map(|c| (c.vertex, c))
        .collect()
}

/// Largest relative mismatch `|A(u,v) − A(v,u)| / A` over pairs where both
/// endpoints are covered.
pub fn reciprocity_residual(cells: &BTreeMap<VertexId, CellPolyhedron>) -> f64 {
    let mut worst: f64 = 0.0;
    for (v, cell) in cells {
        for f in &cell.faces {
            if let Some(other) = cells.get(&f.neighbor) {
                let back = other.face_with(*v).map_or(0.0, |g| g.area);
                worst = worst.max((f.area - back).abs() / f.area);
            }
        }
    }
    worst
}

/// Face-area weights. Each edge is weighted from whichever endpoint cells
/// are covered; when both are, their face areas must agree.
pub fn weights_3d(packing: &SpherePacking3D) -> Result<WeightedNetwork> {
    let cells = covered_cells(packing);
    if cells.is_empty() {
        return Err(SphereError::Coverage("no vertex is covered".into()));
    }
    let residual = reciprocity_residual(&cells);
    if residual > 1e-9 {
        return Err(SphereError::Coverage(format!(
            "face areas disagree across a tangent pair (relative residual {residual:.3e})"
        )));
    }
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (v, cell) in &cells {
        for f in &cell.faces {
            let key = if *v < f.neighbor {
                (*v, f.neighbor)
            } else {
                (f.neighbor, *v)
            };
            if seen.insert(key) {
                let u = packing.get(f.neighbor).expect("neighbor in packing");
                edges.push((*v, f.neighbor, f.area / (u.center - cell.center).norm()));
            }
        }
    }
    Ok(WeightedNetwork::from_edges(edges)?)
}

/// `‖Σ c(u, v)(u − v)‖ / (π(v)·r_v)` from the cell of `v`.
pub fn martingale_residual_3d(packing: &SpherePacking3D, v: VertexId) -> Result<f64> {
    let cell = cell_polyhedron(packing, v)?;
    let mut drift = Point3::zeros();
    let mut pi = 0.0;
    for f in &cell.faces {
        let u = packing.get(f.neighbor).expect("neighbor in packing");
        let d = u.center - cell.center;
        let c = f.area / d.norm();
        drift += d * c;
        pi += c;
    }
    Ok(drift.norm() / (pi * cell.radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cubic_cell_is_cube() {
        let p = SpherePacking3D::cubic(3).unwrap();
        assert_eq!(p.len(), 27);
        let center = VertexId(13);
        let cell = cell_polyhedron(&p, center).unwrap();
        assert_eq!(cell.faces.len(), 6);
        for f in &cell.faces {
            assert!((f.area - 4.0).abs() < 1e-9);
            assert_eq!(f.corners.len(), 4);
        }
        assert!((cell.volume() - 8.0).abs() < 1e-9);
        assert!(cell.vector_area_residual() < 1e-10);
        assert!(martingale_residual_3d(&p, center).unwrap() < 1e-10);
        assert!(matches!(
            cell_polyhedron(&p, VertexId(0)),
            Err(SphereError::NotCovered(_))
        ));
    }

    #[test]
    fn bisector_plane_for_equal_spheres() {
        let p = SpherePacking3D::cubic(3).unwrap();
        let cell = cell_polyhedron(&p, VertexId(13)).unwrap();
        for f in &cell.faces {
            let u = p.get(f.neighbor).unwrap();
            let mid = (u.center + cell.center) / 2.0;
            for c in &f.corners {
                assert!((c - mid).dot(&f.normal).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fcc_cell_is_rhombic_dodecahedron() {
        let p = SpherePacking3D::fcc(5).unwrap();
        let s = 2f64.sqrt();
        let v = p
            .spheres()
            .iter()
            .find(|x| (x.center - Point3::new(2.0 * s, 2.0 * s, 2.0 * s)).norm() < 1e-12)
            .unwrap()
            .id;
        let cell = cell_polyhedron(&p, v).unwrap();
        assert_eq!(cell.faces.len(), 12);
        assert!((cell.volume() - 4.0 * s).abs() < 1e-9);
        for f in &cell.faces {
            // Volume = (1/3)·inradius·surface, all 12 faces congruent.
            assert!((f.area - s).abs() < 1e-9);
            assert!((f.offset - 1.0).abs() < 1e-12);
        }
        assert!(martingale_residual_3d(&p, v).unwrap() < 1e-10);
    }

    #[test]
    fn lattice_weights() {
        let cubic = weights_3d(&SpherePacking3D::cubic(4).unwrap()).unwrap();
        for (_, _, c) in cubic.weighted_edges() {
            assert!((c - 2.0).abs() < 1e-9);
        }
        let fcc = weights_3d(&SpherePacking3D::fcc(5).unwrap()).unwrap();
        for (_, _, c) in fcc.weighted_edges() {
            assert!((c - 2f64.sqrt() / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dilation_scales_weights_linearly() {
        let p = SpherePacking3D::fcc(4).unwrap();
        let a = weights_3d(&p).unwrap();
        let b = weights_3d(&p.dilate(2.5).unwrap()).unwrap();
        for (u, v, c) in a.weighted_edges() {
            assert!((b.weight(u, v) - 2.5 * c).abs() < 1e-9 * c);
        }
    }

    /// A sphere of radius 1 with twelve tangent neighbours of random radii
    /// in jittered icosahedral directions.
    fn random_flower(rng: &mut ChaCha8Rng) -> SpherePacking3D {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut dirs = Vec::new();
        for a in [-1.0, 1.0] {
            for b in [-phi, phi] {
                dirs.push(Point3::new(0.0, a, b));
                dirs.push(Point3::new(a, b, 0.0));
                dirs.push(Point3::new(b, 0.0, a));
            }
        }
        let mut spheres = vec![Sphere::new(0u64, 0.0, 0.0, 0.0, 1.0)];
        for (k, d) in dirs.into_iter().enumerate() {
            let jitter = Point3::new(rng.gen(), rng.gen(), rng.gen()) * 0.1;
            let dir = (d.normalize() + jitter).normalize();
            let r = rng.gen_range(0.3..0.6);
            let c = dir * (1.0 + r);
            spheres.push(Sphere::new(k as u64 + 1, c.x, c.y, c.z, r));
        }
        SpherePacking3D::new(spheres).unwrap()
    }

    #[test]
    fn random_tangent_configurations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = random_flower(&mut rng);
            let cell = cell_polyhedron(&p, VertexId(0)).unwrap();
            assert!(cell.vector_area_residual() < 1e-10);
            assert!(martingale_residual_3d(&p, VertexId(0)).unwrap() < 1e-10);
            for f in &cell.faces {
                assert!((f.normal.dot(&(f.corners[0] - cell.center)) - cell.radius).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn overlap_rejected() {
        let e = SpherePacking3D::new(vec![
            Sphere::new(0u64, 0.0, 0.0, 0.0, 1.0),
            Sphere::new(1u64, 1.0, 0.0, 0.0, 1.0),
        ]);
        assert!(matches!(e, Err(SphereError::Overlap { .. })));
    }
}

//! Circle-packed triangulations: construction, refinement, validation and
//! the JSON file format.
//!
//! A [`CirclePacking`] stores circles only; tangencies, faces and interior
//! flags are always recomputed from geometry.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{
    self, corner_angle, cross2, descartes_place_circle, dubejko_weight_formula, incenter_unchecked,
    incircle_radius, Branch, Circle, DualEdge, Face, GeometryError, Point, TANGENCY_TOL,
};
use crate::sphere3d::SpherePacking3D;
use crate::VertexId;

/// Gaps below this fraction of the smaller radius are reported as
/// ambiguous tangencies.
pub const NEAR_MISS: f64 = 1e-2;

/// Default niceness threshold for refinement angles, radians.
pub const ALPHA0: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum PackingError {
    #[error("invalid packing: {}", summarize(.0))]
    Invalid(Vec<Violation>),
    #[error("face {0:?} is not a face of the packing")]
    FaceNotFound([VertexId; 3]),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(v: &[Violation]) -> String {
    let mut s = format!("{} violation(s)", v.len());
    for x in v.iter().take(3) {
        s.push_str("; ");
        s.push_str(&x.to_string());
    }
    s
}

pub type Result<T> = std::result::Result<T, PackingError>;

/// A single failed invariant, naming the offending element.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveRadius {
        vertex: VertexId,
        radius: f64,
    },
    DuplicateId {
        vertex: VertexId,
    },
    Overlap {
        u: VertexId,
        v: VertexId,
        residual: f64,
    },
    AmbiguousTangency {
        u: VertexId,
        v: VertexId,
        residual: f64,
    },
    DanglingEdge {
        u: VertexId,
        v: VertexId,
    },
    OverfullEdge {
        u: VertexId,
        v: VertexId,
        faces: usize,
    },
    FoldedEdge {
        u: VertexId,
        v: VertexId,
    },
    IsolatedVertex {
        vertex: VertexId,
    },
    EulerCharacteristic {
        measured: i64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NonPositiveRadius { vertex, radius } => {
                write!(f, "vertex {vertex}: nonpositive radius {radius}")
            }
            DuplicateId { vertex } => write!(f, "vertex {vertex}: duplicate id"),
            Overlap { u, v, residual } => {
                write!(f, "edge {u}-{v}: interiors overlap (relative residual {residual:.3e})")
            }
            AmbiguousTangency { u, v, residual } => write!(
                f,
                "edge {u}-{v}: gap of {residual:.3e} smaller radii is neither tangent nor clearly separated"
            ),
            DanglingEdge { u, v } => write!(f, "edge {u}-{v}: bounds no face"),
            OverfullEdge { u, v, faces } => write!(f, "edge {u}-{v}: bounds {faces} faces"),
            FoldedEdge { u, v } => write!(f, "edge {u}-{v}: both faces lie on the same side"),
            IsolatedVertex { vertex } => write!(f, "vertex {vertex}: tangent to nothing"),
            EulerCharacteristic { measured } => {
                write!(f, "V - E + F = {measured}, expected 1 for a disc")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CirclePacking {
    circles: Vec<Circle>,
    index: HashMap<VertexId, usize>,
    /// Counter-clockwise around each vertex.
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    face_idx: Vec<[usize; 3]>,
    faces: Vec<Face>,
    /// Faces around each vertex, in neighbor order.
    fans: Vec<Vec<usize>>,
    interior: Vec<bool>,
    edge_faces: HashMap<(usize, usize), Vec<usize>>,
    violations: Vec<Violation>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl CirclePacking {
    /// Builds a packing and rejects it unless [`validate`](Self::validate)
    /// is clean.
    pub fn from_circles(circles: Vec<Circle>) -> Result<Self> {
        let p = Self::from_circles_unchecked(circles);
        if p.violations.is_empty() {
            Ok(p)
        } else {
            Err(PackingError::Invalid(p.violations))
        }
    }

    /// Builds a packing without rejecting violations, for diagnostics.
    pub fn from_circles_unchecked(mut circles: Vec<Circle>) -> Self {
        circles.sort_by_key(|c| c.id);
        let n = circles.len();
        let mut violations = Vec::new();
        let mut index = HashMap::with_capacity(n);
        for (i, c) in circles.iter().enumerate() {
            if index.insert(c.id, i).is_some() {
                violations.push(Violation::DuplicateId { vertex: c.id });
            }
            if !(c.radius > 0.0) || !c.radius.is_finite() {
                violations.push(Violation::NonPositiveRadius {
                    vertex: c.id,
                    radius: c.radius,
                });
            }
        }

        // Sweep over x-intervals padded by the near-miss margin.
        let pad = 1.0 + NEAR_MISS;
        let mut order: Vec<usize> = (0..n).collect();
        let left = |c: &Circle| c.center.x - c.radius * pad;
        order.sort_by(|&a, &b| left(&circles[a]).total_cmp(&left(&circles[b])));
        let mut neighbors = vec![Vec::new(); n];
        let mut edges = Vec::new();
        for (oi, &i) in order.iter().enumerate() {
            let ci = &circles[i];
            let right = ci.center.x + ci.radius * pad;
            for &j in &order[oi + 1..] {
                let cj = &circles[j];
                if left(cj) > right {
                    break;
                }
                let sum = ci.radius + cj.radius;
                let d = (ci.center - cj.center).norm();
                let near = NEAR_MISS * ci.radius.min(cj.radius);
                if d - sum > near {
                    continue;
                }
                let residual = (d - sum) / sum;
                if residual.abs() <= TANGENCY_TOL {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                    edges.push(key(i, j));
                } else if residual < 0.0 {
                    violations.push(Violation::Overlap {
                        u: ci.id,
                        v: cj.id,
                        residual: -residual,
                    });
                } else {
                    violations.push(Violation::AmbiguousTangency {
                        u: ci.id,
                        v: cj.id,
                        residual: (d - sum) / ci.radius.min(cj.radius),
                    });
                }
            }
        }
        edges.sort_unstable();

        for (i, nb) in neighbors.iter_mut().enumerate() {
            let c = circles[i].center;
            nb.sort_by(|&a, &b| {
                let pa = circles[a].center - c;
                let pb = circles[b].center - c;
                pa.y.atan2(pa.x).total_cmp(&pb.y.atan2(pb.x))
            });
        }

        let edge_set: HashSet<(usize, usize)> = edges.iter().copied().collect();
        let mut face_map: BTreeMap<[usize; 3], [usize; 3]> = BTreeMap::new();
        for i in 0..n {
            let nb = &neighbors[i];
            let d = nb.len();
            if d < 2 {
                continue;
            }
            for t in 0..d {
                let a = nb[t];
                let b = nb[(t + 1) % d];
                if a == b || !edge_set.contains(&key(a, b)) {
                    continue;
                }
                let c = circles[i].center;
                if cross2(&(circles[a].center - c), &(circles[b].center - c)) <= 0.0 {
                    continue;
                }
                let mut sorted = [i, a, b];
                sorted.sort_unstable();
                face_map.entry(sorted).or_insert([i, a, b]);
            }
        }

        let mut face_idx = Vec::with_capacity(face_map.len());
        let mut faces = Vec::with_capacity(face_map.len());
        let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut lookup: HashMap<[usize; 3], usize> = HashMap::new();
        for (sorted, tri) in face_map {
            let fi = face_idx.len();
            let [a, b, c] = tri;
            let (ca, cb, cc) = (&circles[a], &circles[b], &circles[c]);
            let incenter = incenter_unchecked(ca, cb, cc).unwrap_or(ca.center);
            let inradius = incircle_radius(ca.radius, cb.radius, cc.radius).unwrap_or(0.0);
            faces.push(Face {
                vertices: [ca.id, cb.id, cc.id],
                incenter,
                inradius,
            });
            face_idx.push(tri);
            lookup.insert(sorted, fi);
            for (u, v) in [(a, b), (b, c), (a, c)] {
                edge_faces.entry(key(u, v)).or_default().push(fi);
            }
        }

        let mut fans = vec![Vec::new(); n];
        let mut interior = vec![false; n];
        for i in 0..n {
            let nb = &neighbors[i];
            let d = nb.len();
            let mut complete = d >= 3;
            for t in 0..d {
                let mut s = [i, nb[t], nb[(t + 1) % d]];
                s.sort_unstable();
                match lookup.get(&s) {
                    Some(&f) if nb[t] != nb[(t + 1) % d] => fans[i].push(f),
                    _ => complete = false,
                }
            }
            interior[i] = complete;
        }

        for &(u, v) in &edges {
            let fs = edge_faces.get(&(u, v)).map_or(&[][..], |x| &x[..]);
            let (iu, iv) = (circles[u].id, circles[v].id);
            match fs.len() {
                0 => violations.push(Violation::DanglingEdge { u: iu, v: iv }),
                1 => {}
                2 => {
                    let third = |f: usize| {
                        face_idx[f]
                            .iter()
                            .copied()
                            .find(|&w| w != u && w != v)
                            .unwrap()
                    };
                    let base = circles[v].center - circles[u].center;
                    let s1 = cross2(&base, &(circles[third(fs[0])].center - circles[u].center));
                    let s2 = cross2(&base, &(circles[third(fs[1])].center - circles[u].center));
                    if s1 * s2 >= 0.0 {
                        violations.push(Violation::FoldedEdge { u: iu, v: iv });
                    }
                }
                k => violations.push(Violation::OverfullEdge {
                    u: iu,
                    v: iv,
                    faces: k,
                }),
            }
        }
        if n > 1 {
            for (i, nb) in neighbors.iter().enumerate() {
                if nb.is_empty() {
                    violations.push(Violation::IsolatedVertex {
                        vertex: circles[i].id,
                    });
                }
            }
        }
        if n > 0 {
            let chi = n as i64 - edges.len() as i64 + faces.len() as i64;
            if chi != 1 {
                violations.push(Violation::EulerCharacteristic { measured: chi });
            }
        }

        CirclePacking {
            circles,
            index,
            neighbors,
            edges,
            face_idx,
            faces,
            fans,
            interior,
            edge_faces,
            violations,
        }
    }

    /// All invariant violations found while building; empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        self.violations.clone()
    }

    pub fn len(&self) -> usize {
        self.circles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }

    /// Circles sorted by id.
    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn circle_at(&self, idx: usize) -> &Circle {
        &self.circles[idx]
    }

    pub fn get(&self, id: VertexId) -> Option<&Circle> {
        self.index.get(&id).map(|&i| &self.circles[i])
    }

    pub fn index_of(&self, id: VertexId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.circles.iter().map(|c| c.id)
    }

    pub fn max_id(&self) -> Option<VertexId> {
        self.circles.last().map(|c| c.id)
    }

    /// Tangent pairs as index pairs `(i, j)` with `i < j`.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.circles[a].id, self.circles[b].id))
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Vertex indices of each face, counter-clockwise.
    pub fn face_indices(&self) -> &[[usize; 3]] {
        &self.face_idx
    }

    pub fn neighbor_indices(&self, idx: usize) -> &[usize] {
        &self.neighbors[idx]
    }

    pub fn fan_indices(&self, idx: usize) -> &[usize] {
        &self.fans[idx]
    }

    pub fn is_interior_index(&self, idx: usize) -> bool {
        self.interior[idx]
    }

    pub fn is_interior(&self, id: VertexId) -> bool {
        self.index_of(id).is_some_and(|i| self.interior[i])
    }

    pub fn interior_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.circles
            .iter()
            .zip(&self.interior)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c.id)
    }

    /// Breadth-first hop counts in the tangency graph from `start`, indexed
    /// like [`circles`](Self::circles). Unreachable vertices get `None`.
    pub fn hop_distances(&self, start: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = std::collections::VecDeque::from([start]);
        dist[start] = Some(0);
        while let Some(i) = queue.pop_front() {
            let d = dist[i].unwrap_or(0) + 1;
            for &j in &self.neighbors[i] {
                if dist[j].is_none() {
                    dist[j] = Some(d);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    pub fn edge_face_indices(&self, i: usize, j: usize) -> &[usize] {
        self.edge_faces.get(&key(i, j)).map_or(&[], |v| v)
    }

    /// Face with exactly these three vertices, in any order.
    pub fn find_face(&self, tri: [VertexId; 3]) -> Option<usize> {
        let a = self.index_of(tri[0])?;
        let b = self.index_of(tri[1])?;
        let c = self.index_of(tri[2])?;
        self.edge_face_indices(a, b)
            .iter()
            .copied()
            .find(|&f| self.face_idx[f].contains(&c))
    }

    pub fn dual_edges(&self) -> Vec<DualEdge> {
        self.edges
            .iter()
            .map(|&(i, j)| {
                let fs = self.edge_face_indices(i, j);
                let (a, b) = (&self.circles[i], &self.circles[j]);
                let first = fs.first().map_or(a.center, |&f| self.faces[f].incenter);
                let second = (fs.len() == 2).then(|| self.faces[fs[1]].incenter);
                DualEdge {
                    edge: (a.id, b.id),
                    endpoints: (first, second),
                    primal_length: a.radius + b.radius,
                    dual_length: second.map(|s| (s - first).norm()),
                }
            })
            .collect()
    }

    /// Whether `p` lies in the union of the closed faces.
    pub fn carrier_contains(&self, p: &Point) -> bool {
        self.face_idx.iter().any(|tri| {
            let [a, b, c] = tri.map(|i| self.circles[i].center);
            let eps = -1e-12;
            cross2(&(b - a), &(p - a)) >= eps
                && cross2(&(c - b), &(p - b)) >= eps
                && cross2(&(a - c), &(p - c)) >= eps
        })
    }

    /// Writes the packing in the JSON interchange format.
    pub fn save<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{{\"dim\":2,\"circles\":[")?;
        for (i, c) in self.circles.iter().enumerate() {
            let sep = if i + 1 == self.circles.len() { "" } else { "," };
            writeln!(
                sink,
                "{{\"id\":{},\"x\":{:.16e},\"y\":{:.16e},\"r\":{:.16e}}}{sep}",
                c.id.0, c.center.x, c.center.y, c.radius
            )?;
        }
        writeln!(sink, "]}}")
    }

    /// Reads and validates a planar packing file.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        match load_any(source)? {
            PackingFile::Planar(p) => Ok(p),
            PackingFile::Spatial(_) => Err(PackingError::Parse(
                "expected \"dim\":2, found a sphere packing".into(),
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    dim: u8,
    circles: Vec<RawCircle>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircle {
    id: u64,
    x: f64,
    y: f64,
    z: Option<f64>,
    r: f64,
}

/// Either kind of packing stored in the shared container format.
#[derive(Debug, Clone)]
pub enum PackingFile {
    Planar(CirclePacking),
    Spatial(SpherePacking3D),
}

/// Reads a `"dim":2` or `"dim":3` packing file and validates it.
pub fn load_any<R: Read>(mut source: R) -> Result<PackingFile> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let raw: RawFile = serde_json::from_str(&text).map_err(|e| {
        PackingError::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let mut seen = HashSet::new();
    for (i, c) in raw.circles.iter().enumerate() {
        if !seen.insert(c.id) {
            return Err(PackingError::Parse(format!(
                "circle #{i}: duplicate id {}",
                c.id
            )));
        }
        if raw.dim == 3 && c.z.is_none() {
            return Err(PackingError::Parse(format!(
                "circle #{i}: missing field `z`"
            )));
        }
        if raw.dim == 2 && c.z.is_some() {
            return Err(PackingError::Parse(format!(
                "circle #{i}: field `z` not allowed when dim is 2"
            )));
        }
    }
    match raw.dim {
        2 => {
            let circles = raw
                .circles
                .iter()
                .map(|c| Circle::new(c.id, c.x, c.y, c.r))
                .collect();
            Ok(PackingFile::Planar(CirclePacking::from_circles(circles)?))
        }
        3 => {
            let spheres = raw
                .circles
                .iter()
                .map(|c| crate::sphere3d::Sphere::new(c.id, c.x, c.y, c.z.unwrap_or(0.0), c.r))
                .collect();
            SpherePacking3D::new(spheres)
                .map(PackingFile::Spatial)
                .map_err(|e| PackingError::Parse(e.to_string()))
        }
        d => Err(PackingError::Parse(format!(
            "field `dim`: expected 2 or 3, found {d}"
        ))),
    }
}

/// Triangular-lattice ball of graph radius `ball_radius` with all circles of
/// radius `circle_radius`. Ids are assigned ring by ring, counter-clockwise
/// from the positive x axis, with the centre circle as id 0.
pub fn build_hexagonal(ball_radius: u32, circle_radius: f64) -> Result<CirclePacking> {
    if ball_radius < 1 {
        return Err(PackingError::Domain(
            "ball radius must be at least 1".into(),
        ));
    }
    if !(circle_radius > 0.0) {
        return Err(PackingError::Domain(
            "circle radius must be positive".into(),
        ));
    }
    let rad = ball_radius as i64;
    let mut cells = Vec::new();
    for q in -rad..=rad {
        for r in (-rad).max(-q - rad)..=rad.min(-q + rad) {
            let ring = q.abs().max(r.abs()).max((q + r).abs());
            let x = circle_radius * (2 * q + r) as f64;
            let y = circle_radius * 3f64.sqrt() * r as f64;
            let mut angle = y.atan2(x);
            if angle < 0.0 {
                angle += 2.0 * PI;
            }
            cells.push((ring, angle, x, y));
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let circles = cells
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, x, y))| Circle::new(i as u64, x, y, circle_radius))
        .collect();
    CirclePacking::from_circles(circles)
}

/// Petal radius of the flower with `n` petals around a unit circle.
pub fn flower_petal_radius(n: u32) -> f64 {
    let s = (PI / n as f64).sin();
    s / (1.0 - s)
}

/// A unit circle (id 0) surrounded by `n` equal petals.
pub fn build_flower(n: u32) -> Result<CirclePacking> {
    if n < 3 {
        return Err(PackingError::Domain(format!(
            "a flower needs at least 3 petals, got {n}"
        )));
    }
    let r = flower_petal_radius(n);
    let mut circles = vec![Circle::new(0u64, 0.0, 0.0, 1.0)];
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        circles.push(Circle::new(
            (k + 1) as u64,
            (1.0 + r) * t.cos(),
            (1.0 + r) * t.sin(),
            r,
        ));
    }
    CirclePacking::from_circles(circles)
}

/// Three mutually tangent circles with ids 0, 1, 2, the first centred at
/// the origin and the second on the positive x axis.
pub fn build_triangle(rx: f64, ry: f64, rz: f64) -> Result<CirclePacking> {
    incircle_radius(rx, ry, rz)?;
    let (dxy, dxz, dyz) = (rx + ry, rx + rz, ry + rz);
    let x = (dxz * dxz - dyz * dyz + dxy * dxy) / (2.0 * dxy);
    let y = (dxz * dxz - x * x).sqrt();
    CirclePacking::from_circles(vec![
        Circle::new(0u64, 0.0, 0.0, rx),
        Circle::new(1u64, dxy, 0.0, ry),
        Circle::new(2u64, x, y, rz),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    /// `[x, y, z]` with `r_x ≤ r_y ≤ r_z`.
    pub face: [VertexId; 3],
    pub chain_ids: Vec<VertexId>,
    pub chain_radii: Vec<f64>,
    pub k: usize,
    /// `c'(v_k, y) + c'(v_k, z)` from the radii formula.
    pub final_weight_sum: f64,
    /// Smallest corner angle among the new faces, excluding the angle of the
    /// last inserted circle at the incenter of `v_k y z`.
    pub min_new_angle: f64,
    /// The excluded angle.
    pub last_corner_angle: f64,
}

impl RefinementReport {
    /// `r_{i-1} / r_i` along the chain, starting from `x`.
    pub fn radius_ratios(&self, rx: f64) -> Vec<f64> {
        std::iter::once(rx)
            .chain(self.chain_radii.iter().copied())
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[0] / w[1])
            .collect()
    }
}

struct Chain {
    face: [VertexId; 3],
    x: Circle,
    y: Circle,
    z: Circle,
    circles: Vec<Circle>,
}

impl Chain {
    fn start(packing: &CirclePacking, face: [VertexId; 3]) -> Result<Self> {
        let f = packing
            .find_face(face)
            .ok_or(PackingError::FaceNotFound(face))?;
        let mut tri = packing.face_idx[f].map(|i| packing.circles[i]);
        tri.sort_by(|a, b| a.radius.total_cmp(&b.radius).then(a.id.cmp(&b.id)));
        Ok(Chain {
            face: tri.map(|c| c.id),
            x: tri[0],
            y: tri[1],
            z: tri[2],
            circles: Vec::new(),
        })
    }

    fn last(&self) -> &Circle {
        self.circles.last().unwrap_or(&self.x)
    }

    fn previous(&self) -> &Circle {
        match self.circles.len() {
            0 | 1 => &self.x,
            k => &self.circles[k - 2],
        }
    }

    fn push(&mut self, id: VertexId) -> Result<()> {
        let c = descartes_place_circle(self.last(), &self.y, &self.z, Branch::Plus, id)?;
        self.circles.push(c);
        Ok(())
    }

    fn final_weight_sum(&self) -> f64 {
        let (s, p) = (self.last(), self.previous());
        let (y, z) = (&self.y, &self.z);
        dubejko_weight_formula(s.radius, y.radius, z.radius, p.radius)
            + dubejko_weight_formula(s.radius, z.radius, y.radius, p.radius)
    }

    fn finish(self, packing: &CirclePacking) -> Result<(CirclePacking, RefinementReport)> {
        let k = self.circles.len();
        let mut min_angle = f64::INFINITY;
        let mut angles_of = |a: &Circle, b: &Circle, c: &Circle| {
            let r = incircle_radius(a.radius, b.radius, c.radius).unwrap_or(0.0);
            for v in [a, b, c] {
                min_angle = min_angle.min(corner_angle(v.radius, r));
            }
        };
        let mut prev = self.x;
        for c in &self.circles {
            angles_of(&prev, c, &self.y);
            angles_of(&prev, c, &self.z);
            prev = *c;
        }
        let s = *self.last();
        let r_last = incircle_radius(s.radius, self.y.radius, self.z.radius)?;
        for v in [&self.y, &self.z] {
            min_angle = min_angle.min(corner_angle(v.radius, r_last));
        }
        let report = RefinementReport {
            face: self.face,
            chain_ids: self.circles.iter().map(|c| c.id).collect(),
            chain_radii: self.circles.iter().map(|c| c.radius).collect(),
            k,
            final_weight_sum: self.final_weight_sum(),
            min_new_angle: min_angle,
            last_corner_angle: corner_angle(s.radius, r_last),
        };
        let mut all = packing.circles.clone();
        all.extend(self.circles);
        Ok((CirclePacking::from_circles(all)?, report))
    }
}

fn next_id(packing: &CirclePacking) -> u64 {
    packing.max_id().map_or(0, |m| m.0 + 1)
}

/// Inserts a chain of `k` circles into `face`, each tangent to the previous
/// one and to the two larger circles of the face.
pub fn refine_face(
    packing: &CirclePacking,
    face: [VertexId; 3],
    k: usize,
) -> Result<(CirclePacking, RefinementReport)> {
    if k == 0 {
        return Err(PackingError::Domain(
            "chain length must be at least 1".into(),
        ));
    }
    let mut chain = Chain::start(packing, face)?;
    let base = next_id(packing);
    for i in 0..k {
        chain.push(VertexId(base + i as u64))?;
    }
    chain.finish(packing)
}

/// Maximum chain length [`refine_until`] will try.
pub const MAX_CHAIN: usize = 1_000_000;

/// Extends the chain until the two weights at its last circle sum below
/// `weight_target`. At least one circle is always inserted.
pub fn refine_until(
    packing: &CirclePacking,
    face: [VertexId; 3],
    weight_target: f64,
) -> Result<(CirclePacking, RefinementReport)> {
    if !(weight_target > 0.0) {
        return Err(PackingError::Domain(format!(
            "weight target must be positive, got {weight_target}"
        )));
    }
    let mut chain = Chain::start(packing, face)?;
    let base = next_id(packing);
    loop {
        let i = chain.circles.len();
        if i >= MAX_CHAIN {
            return Err(PackingError::Domain(format!(
                "target {weight_target} not reached after {MAX_CHAIN} insertions"
            )));
        }
        chain.push(VertexId(base + i as u64))?;
        if chain.final_weight_sum() < weight_target {
            break;
        }
    }
    chain.finish(packing)
}

pub use geometry::AlphaNice;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{alpha_nice_edge, edge_corner_angles, polygon_of_vertex};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hexagonal_counts() {
        for r in 1..=6u32 {
            let p = build_hexagonal(r, 1.0).unwrap();
            assert_eq!(p.len() as u32, 1 + 3 * r * (r + 1));
            for i in 0..p.len() {
                if p.is_interior_index(i) {
                    assert_eq!(p.neighbor_indices(i).len(), 6);
                }
            }
        }
        let p = build_hexagonal(1, 1.0).unwrap();
        assert!(p.is_interior(VertexId(0)));
        assert_eq!(p.interior_ids().count(), 1);
        assert!(p.validate().is_empty());
        assert!(build_hexagonal(0, 1.0).is_err());
    }

    #[test]
    fn hexagonal_polygon_is_regular_hexagon() {
        let r = 1.5;
        let p = build_hexagonal(2, r).unwrap();
        let poly = polygon_of_vertex(&p, VertexId(0)).unwrap();
        assert_eq!(poly.corners.len(), 6);
        for c in &poly.corners {
            // Circumradius of a regular hexagon with inradius r.
            assert!((c.norm() - 2.0 * r / 3f64.sqrt()).abs() < 1e-12);
        }
        for a in &poly.angles {
            assert!((a - 2.0 * PI / 3.0).abs() < 1e-12);
        }
        assert!(poly.is_convex());
        assert!(poly.contains_circle(&Point::zeros(), r, 1e-9));
        assert!(poly.is_alpha_nice(PI / 2.0));
        assert!(!poly.is_alpha_nice(2.0 * PI / 3.0 + 1e-12));
        let boundary = p.ids().find(|&v| !p.is_interior(v)).unwrap();
        assert!(matches!(
            polygon_of_vertex(&p, boundary),
            Err(GeometryError::Incomplete(_))
        ));
    }

    #[test]
    fn flower_radii() {
        assert!((flower_petal_radius(6) - 1.0).abs() < 1e-15);
        let r12 = flower_petal_radius(12);
        assert!((r12 - 0.34919).abs() < 1e-5);
        for n in 3..=40 {
            let p = build_flower(n).unwrap();
            assert!(p.validate().is_empty(), "n = {n}");
            assert_eq!(p.len() as u32, n + 1);
            assert!(p.is_interior(VertexId(0)));
            assert_eq!(p.interior_ids().count(), 1);
        }
        assert!(matches!(build_flower(2), Err(PackingError::Domain(_))));
    }

    #[test]
    fn dual_edges_split_at_tangency_and_are_orthogonal() {
        let p = build_hexagonal(3, 1.0).unwrap();
        let (p, _) = refine_face(&p, face_near_origin(&p), 4).unwrap();
        let mut checked = 0;
        for d in p.dual_edges() {
            let Some(len) = d.dual_length else { continue };
            let (u, v) = (p.get(d.edge.0).unwrap(), p.get(d.edge.1).unwrap());
            let e = v.center - u.center;
            let dual = d.endpoints.1.unwrap() - d.endpoints.0;
            assert!(e.dot(&dual).abs() <= 1e-9 * e.norm() * len);
            assert!((e.norm() - d.primal_length).abs() <= 1e-9 * d.primal_length);
            let fs = p.edge_face_indices(p.index_of(u.id).unwrap(), p.index_of(v.id).unwrap());
            let split = p.faces()[fs[0]].inradius + p.faces()[fs[1]].inradius;
            assert!((len - split).abs() <= 1e-9 * len);
            checked += 1;
        }
        assert!(checked > 30);
    }

    fn face_near_origin(p: &CirclePacking) -> [VertexId; 3] {
        p.faces()
            .iter()
            .min_by(|a, b| a.incenter.norm().total_cmp(&b.incenter.norm()))
            .unwrap()
            .vertices
    }

    #[test]
    fn refine_unit_triangle() {
        let p = build_triangle(1.0, 1.0, 1.0).unwrap();
        let (q, rep) = refine_face(&p, [VertexId(0), VertexId(1), VertexId(2)], 1).unwrap();
        assert_eq!(q.len(), 4);
        assert!((rep.chain_radii[0] - 1.0 / (3.0 + 2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!(q.validate().is_empty());
        assert_eq!(rep.face, [VertexId(0), VertexId(1), VertexId(2)]);

        let (_, rep) = refine_face(&p, [VertexId(2), VertexId(0), VertexId(1)], 12).unwrap();
        for ratio in rep.radius_ratios(1.0) {
            assert!((1.0..=7.0).contains(&ratio), "{ratio}");
        }
        assert!(rep.min_new_angle > ALPHA0);
        assert!(matches!(
            refine_face(&p, [VertexId(0), VertexId(1), VertexId(2)], 0),
            Err(PackingError::Domain(_))
        ));
        assert!(matches!(
            refine_face(&p, [VertexId(0), VertexId(1), VertexId(7)], 1),
            Err(PackingError::FaceNotFound(_))
        ));
    }

    /// Chain radii from the curvature recursion alone.
    fn descartes_chain(rx: f64, ry: f64, rz: f64, k: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let mut ki = 1.0 / rx;
        let (ky, kz) = (1.0 / ry, 1.0 / rz);
        for _ in 0..k {
            ki = ki + ky + kz + 2.0 * (ki * ky + ky * kz + kz * ki).sqrt();
            out.push(1.0 / ki);
        }
        out
    }

    #[test]
    fn chain_matches_curvature_recursion() {
        let p = build_triangle(0.7, 1.3, 2.0).unwrap();
        let (_, rep) = refine_face(&p, [VertexId(0), VertexId(1), VertexId(2)], 20).unwrap();
        for (a, b) in rep
            .chain_radii
            .iter()
            .zip(descartes_chain(0.7, 1.3, 2.0, 20))
        {
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn only_last_edges_may_fail_niceness() {
        let p = build_triangle(1.0, 1.0, 1.0).unwrap();
        let (q, rep) = refine_face(&p, [VertexId(0), VertexId(1), VertexId(2)], 6).unwrap();
        let s = *rep.chain_ids.last().unwrap();
        let [_, y, z] = rep.face;
        for (u, v) in q.edges() {
            let Ok(nice) = alpha_nice_edge(&q, u, v, ALPHA0) else {
                continue;
            };
            let last = (u == s || v == s) && [y, z].iter().any(|w| *w == u || *w == v);
            if !last {
                assert!(nice, "edge {u}-{v}");
            }
        }
        // The exempt angle is the one at v_k in face v_k y z.
        let angles = edge_corner_angles(&q, s, y).unwrap();
        assert!(angles
            .iter()
            .any(|a| (a - rep.last_corner_angle).abs() < 1e-12));
    }

    #[test]
    fn refine_until_targets() {
        let p = build_triangle(1.0, 1.0, 1.0).unwrap();
        let f = [VertexId(0), VertexId(1), VertexId(2)];
        let (_, rep) = refine_until(&p, f, 0.5).unwrap();
        assert!(rep.final_weight_sum < 0.5);
        // Independent oracle: recursion on radii plus the weight formula.
        let radii = descartes_chain(1.0, 1.0, 1.0, 200);
        let sum_at = |k: usize| {
            let prev = if k == 1 { 1.0 } else { radii[k - 2] };
            2.0 * dubejko_weight_formula(radii[k - 1], 1.0, 1.0, prev)
        };
        let expected = (1..200).find(|&k| sum_at(k) < 0.5).unwrap();
        assert_eq!(rep.k, expected);
        assert!(sum_at(expected) < 0.5 && (expected == 1 || sum_at(expected - 1) >= 0.5));

        let (_, rep) = refine_until(&p, f, 10.0).unwrap();
        assert_eq!(rep.k, 1);
        let mut last = usize::MAX;
        for t in [0.05, 0.1, 0.2, 0.4, 0.8, 1.6] {
            let (_, rep) = refine_until(&p, f, t).unwrap();
            assert!(rep.k <= last);
            last = rep.k;
        }
        assert!(refine_until(&p, f, 0.0).is_err());
    }

    #[test]
    fn refinement_preserves_outside_weights_and_carrier() {
        let p = build_hexagonal(3, 1.0).unwrap();
        let f = face_near_origin(&p);
        let (q, rep) = refine_face(&p, f, 5).unwrap();
        assert!(q.validate().is_empty());
        let before = crate::network::dubejko_weights(&p).unwrap();
        let after = crate::network::dubejko_weights(&q).unwrap();
        let touched: HashSet<VertexId> = f.iter().chain(rep.chain_ids.iter()).copied().collect();
        for (u, v, c) in before.weighted_edges() {
            if touched.contains(&u) || touched.contains(&v) {
                continue;
            }
            assert!((after.weight(u, v) - c).abs() <= 1e-12 * c);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let pt = Point::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
            // Keep sample points off face boundaries.
            let near_edge = p.face_indices().iter().any(|tri| {
                let [a, b, c] = tri.map(|i| p.circle_at(i).center);
                [(a, b), (b, c), (c, a)]
                    .iter()
                    .any(|(s, t)| geometry::distance_to_line(&pt, s, t) < 1e-6)
            });
            if !near_edge {
                assert_eq!(p.carrier_contains(&pt), q.carrier_contains(&pt));
            }
        }
    }

    #[test]
    fn validation_catches_injected_faults() {
        let p = build_hexagonal(2, 1.0).unwrap();
        for scale in [1.0 + 1e-3, 1.0 - 1e-3] {
            let mut circles = p.circles().to_vec();
            circles[0].radius *= scale;
            let bad = CirclePacking::from_circles_unchecked(circles.clone());
            assert!(!bad.validate().is_empty(), "scale {scale}");
            assert!(CirclePacking::from_circles(circles).is_err());
        }
        let mut circles = p.circles().to_vec();
        circles[3].radius = -1.0;
        assert!(CirclePacking::from_circles_unchecked(circles)
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveRadius { .. })));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = build_hexagonal(5, 0.37).unwrap();
        let (p, _) = refine_face(&p, face_near_origin(&p), 3).unwrap();
        let mut buf = Vec::new();
        p.save(&mut buf).unwrap();
        let q = CirclePacking::load(&buf[..]).unwrap();
        assert_eq!(p.circles(), q.circles());
        assert_eq!(p.edge_indices(), q.edge_indices());
        assert_eq!(p.face_indices(), q.face_indices());
    }

    #[test]
    fn load_errors() {
        let dup = r#"{"dim":2,"circles":[{"id":1,"x":0,"y":0,"r":1},{"id":1,"x":2,"y":0,"r":1}]}"#;
        let e = CirclePacking::load(dup.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("duplicate id 1"), "{e}");

        let overlap =
            r#"{"dim":2,"circles":[{"id":0,"x":0,"y":0,"r":1},{"id":1,"x":1,"y":0,"r":1}]}"#;
        assert!(matches!(
            CirclePacking::load(overlap.as_bytes()),
            Err(PackingError::Invalid(_))
        ));

        let bad = "{\"dim\":2,\n\"circles\":[{\"id\":0,\"x\":\"a\",\"y\":0,\"r\":1}]}";
        let e = CirclePacking::load(bad.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");

        let missing = r#"{"dim":2,"circles":[{"id":0,"x":0,"r":1}]}"#;
        let e = CirclePacking::load(missing.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("`y`"), "{e}");
    }

    #[test]
    fn random_refinements_stay_valid() {
        let mut p = build_hexagonal(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = p.faces()[rng.gen_range(0..p.faces().len())].vertices;
            let k = rng.gen_range(1..=3);
            p = refine_face(&p, f, k).unwrap().0;
            assert!(p.validate().is_empty());
        }
    }

    proptest! {
        #[test]
        fn refine_keeps_validity(rx in 0.2f64..3.0, ry in 0.2f64..3.0, rz in 0.2f64..3.0, k in 1usize..15) {
            let p = build_triangle(rx, ry, rz).unwrap();
            let (q, rep) = refine_face(&p, [VertexId(0), VertexId(1), VertexId(2)], k).unwrap();
            prop_assert!(q.validate().is_empty());
            prop_assert_eq!(q.len(), 3 + k);
            prop_assert_eq!(q.faces().len(), 1 + 2 * k);
            for ratio in rep.radius_ratios(p.get(rep.face[0]).unwrap().radius) {
                prop_assert!((1.0..=7.0).contains(&ratio));
            }
            prop_assert!(rep.min_new_angle > ALPHA0);
        }
    }
}

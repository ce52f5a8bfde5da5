//! Electrical networks: Dubejko weights, censoring reductions, Dirichlet
//! energy, harmonic extension and effective conductance, plus the annulus
//! test functions used as energy certificates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dubejko_weight_formula, Point};
use crate::packing::CirclePacking;
use crate::VertexId;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("unknown vertex {0}")]
    NotFound(VertexId),
    #[error("invalid weight {c} on {u}-{v}")]
    BadWeight { u: VertexId, v: VertexId, c: f64 },
    #[error("network is not connected ({components} components)")]
    Disconnected { components: usize },
    #[error("network has no weighted edges")]
    Empty,
    #[error("vertex {0} is absorbing: all of its weight is on its self-loop")]
    Absorbing(VertexId),
    #[error("vertex {0} has only a self-loop")]
    IsolatedVertex(VertexId),
    #[error("cannot censor every vertex")]
    CensorAll,
    #[error("packing fails validation: {0}")]
    InvalidPacking(String),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("insufficient coverage: {0}")]
    Coverage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NetworkError>;

/// Symmetric nonnegative conductances with optional self-loops.
///
/// `π(x) = Σ_y c(x, y)` counts a self-loop once.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    adj: BTreeMap<VertexId, BTreeMap<VertexId, f64>>,
    pi: BTreeMap<VertexId, f64>,
}

impl WeightedNetwork {
    /// Parallel entries are summed; zero weights are dropped. The support
    /// must be connected.
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId, f64)>,
    {
        let mut adj: BTreeMap<VertexId, BTreeMap<VertexId, f64>> = BTreeMap::new();
        for (u, v, c) in edges {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(NetworkError::BadWeight { u, v, c });
            }
            if c == 0.0 {
                continue;
            }
            *adj.entry(u).or_default().entry(v).or_insert(0.0) += c;
            if u != v {
                *adj.entry(v).or_default().entry(u).or_insert(0.0) += c;
            }
        }
        if adj.is_empty() {
            return Err(NetworkError::Empty);
        }
        let net = Self::with_adjacency(adj);
        let components = net.components();
        if components != 1 {
            return Err(NetworkError::Disconnected { components });
        }
        Ok(net)
    }

    fn with_adjacency(adj: BTreeMap<VertexId, BTreeMap<VertexId, f64>>) -> Self {
        let pi = adj
            .iter()
            .map(|(&v, row)| (v, row.values().sum()))
            .collect();
        WeightedNetwork { adj, pi }
    }

    fn components(&self) -> usize {
        let mut seen = BTreeSet::new();
        let mut count = 0;
        for &start in self.adj.keys() {
            if !seen.insert(start) {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &y in self.adj[&x].keys() {
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        count
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.keys().copied()
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> f64 {
        self.adj
            .get(&u)
            .and_then(|row| row.get(&v))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn pi(&self, v: VertexId) -> f64 {
        self.pi.get(&v).copied().unwrap_or(0.0)
    }

    /// Neighbours of `v` with their weights, self-loop included.
    pub fn row(&self, v: VertexId) -> Option<&BTreeMap<VertexId, f64>> {
        self.adj.get(&v)
    }

    /// Each undirected edge once as `(u, v, c)` with `u ≤ v`.
    pub fn weighted_edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.adj
            .iter()
            .flat_map(|(&u, row)| row.range(u..).map(move |(&v, &c)| (u, v, c)))
    }

    pub fn edge_count(&self) -> usize {
        self.weighted_edges().count()
    }

    /// Transition probabilities `c(v, u) / π(v)`.
    pub fn transitions(&self, v: VertexId) -> Result<Vec<(VertexId, f64)>> {
        let row = self.adj.get(&v).ok_or(NetworkError::NotFound(v))?;
        let pi = self.pi[&v];
        Ok(row.iter().map(|(&u, &c)| (u, c / pi)).collect())
    }

    /// Removes `w`, rerouting its weight through the rule
    /// `c'(x, y) = c(x, y) + c(x, w)·c(y, w) / (π(w) − c(w, w))`.
    pub fn censor_vertex(&self, w: VertexId) -> Result<Self> {
        let row = self.adj.get(&w).ok_or(NetworkError::NotFound(w))?;
        if self.adj.len() == 1 {
            return Err(NetworkError::CensorAll);
        }
        let loop_w = row.get(&w).copied().unwrap_or(0.0);
        let denom = self.pi[&w] - loop_w;
        if !(denom > 1e-15 * self.pi[&w]) {
            return Err(NetworkError::Absorbing(w));
        }
        let legs: Vec<(VertexId, f64)> = row
            .iter()
            .filter(|(&u, _)| u != w)
            .map(|(&u, &c)| (u, c))
            .collect();
        let mut adj = self.adj.clone();
        adj.remove(&w);
        for &(x, _) in &legs {
            adj.get_mut(&x).unwrap().remove(&w);
        }
        for (i, &(x, cx)) in legs.iter().enumerate() {
            for &(y, cy) in &legs[i..] {
                let add = cx * cy / denom;
                *adj.get_mut(&x).unwrap().entry(y).or_insert(0.0) += add;
                if x != y {
                    *adj.get_mut(&y).unwrap().entry(x).or_insert(0.0) += add;
                }
            }
        }
        Ok(Self::with_adjacency(adj))
    }

    /// Censors every vertex of `set`, in ascending id order.
    pub fn censor_set(&self, set: &BTreeSet<VertexId>) -> Result<Self> {
        if let Some(&v) = set.iter().find(|v| !self.contains(**v)) {
            return Err(NetworkError::NotFound(v));
        }
        if set.len() >= self.len() {
            return Err(NetworkError::CensorAll);
        }
        set.iter()
            .try_fold(self.clone(), |net, &w| net.censor_vertex(w))
    }

    /// Drops every self-loop; `π(x)` decreases by `c(x, x)`.
    pub fn delete_loops(&self) -> Result<Self> {
        let mut adj = self.adj.clone();
        for (&x, row) in adj.iter_mut() {
            row.remove(&x);
            if row.is_empty() {
                return Err(NetworkError::IsolatedVertex(x));
            }
        }
        Ok(Self::with_adjacency(adj))
    }

    pub fn has_loops(&self) -> bool {
        self.adj.iter().any(|(v, row)| row.contains_key(v))
    }

    /// `Σ c(u, v)·(f(u) − f(v))²` over undirected edges.
    pub fn dirichlet_energy(&self, f: &VertexFunction) -> f64 {
        self.weighted_edges()
            .filter(|(u, v, _)| u != v)
            .map(|(u, v, c)| {
                let d = f.get(u) - f.get(v);
                c * d * d
            })
            .sum()
    }

    /// Solves the Dirichlet problem: the returned function equals
    /// `boundary` where given and is harmonic elsewhere.
    pub fn harmonic_extend(&self, boundary: &BTreeMap<VertexId, f64>) -> Result<VertexFunction> {
        if boundary.is_empty() {
            return Err(NetworkError::Solver("boundary is empty".into()));
        }
        if let Some(v) = boundary.keys().find(|v| !self.contains(**v)) {
            return Err(NetworkError::NotFound(*v));
        }
        let free: Vec<VertexId> = self.ids().filter(|v| !boundary.contains_key(v)).collect();
        self.check_reaches_boundary(boundary)?;
        let slot: BTreeMap<VertexId, usize> =
            free.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let n = free.len();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        row_start.push(0);
        for (i, &v) in free.iter().enumerate() {
            let row = &self.adj[&v];
            diag[i] = self.pi[&v] - row.get(&v).copied().unwrap_or(0.0);
            for (&u, &c) in row {
                if u == v {
                    continue;
                }
                if let Some(&j) = slot.get(&u) {
                    cols.push(j);
                    vals.push(c);
                } else {
                    rhs[i] += c * boundary[&u];
                }
            }
            row_start.push(cols.len());
        }
        let system = Csr {
            row_start,
            cols,
            vals,
            diag,
        };
        let x = system.solve(&rhs, 1e-12)?;

        let mut values = boundary.clone();
        for (v, val) in free.into_iter().zip(x) {
            values.insert(v, val);
        }
        Ok(VertexFunction { values })
    }

    fn check_reaches_boundary(&self, boundary: &BTreeMap<VertexId, f64>) -> Result<()> {
        let mut seen: BTreeSet<VertexId> = boundary.keys().copied().collect();
        let mut queue: VecDeque<VertexId> = seen.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            for &y in self.adj[&x].keys() {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        if seen.len() < self.len() {
            return Err(NetworkError::Solver(format!(
                "{} vertices cannot reach the boundary; the system is singular",
                self.len() - seen.len()
            )));
        }
        Ok(())
    }

    /// Effective conductance between `rho` and `boundary`, together with
    /// the unit potential that realises it.
    pub fn effective_conductance_with_potential(
        &self,
        rho: VertexId,
        boundary: &BTreeSet<VertexId>,
    ) -> Result<(f64, VertexFunction)> {
        if !self.contains(rho) {
            return Err(NetworkError::NotFound(rho));
        }
        if boundary.contains(&rho) {
            return Err(NetworkError::Domain(format!(
                "rho {rho} lies in the boundary set"
            )));
        }
        let mut values: BTreeMap<VertexId, f64> = boundary.iter().map(|&b| (b, 0.0)).collect();
        values.insert(rho, 1.0);
        let h = self.harmonic_extend(&values)?;
        let c = self.adj[&rho]
            .iter()
            .map(|(&u, &c)| c * (1.0 - h.get(u)))
            .sum();
        Ok((c, h))
    }

    pub fn effective_conductance(
        &self,
        rho: VertexId,
        boundary: &BTreeSet<VertexId>,
    ) -> Result<f64> {
        self.effective_conductance_with_potential(rho, boundary)
            .map(|(c, _)| c)
    }

    pub fn to_json<W: Write>(&self, sink: W) -> Result<()> {
        let file = NetworkFile {
            vertices: self.ids().map(|v| v.0).collect(),
            weights: self
                .weighted_edges()
                .map(|(u, v, c)| WeightRecord { u: u.0, v: v.0, c })
                .collect(),
        };
        serde_json::to_writer(sink, &file).map_err(|e| NetworkError::Parse(e.to_string()))
    }

    pub fn from_json<R: Read>(source: R) -> Result<Self> {
        let file: NetworkFile = serde_json::from_reader(source).map_err(|e| {
            NetworkError::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        let known: BTreeSet<u64> = file.vertices.iter().copied().collect();
        for w in &file.weights {
            for id in [w.u, w.v] {
                if !known.contains(&id) {
                    return Err(NetworkError::Parse(format!(
                        "weight {}-{} names undeclared vertex {id}",
                        w.u, w.v
                    )));
                }
            }
        }
        Self::from_edges(
            file.weights
                .into_iter()
                .map(|w| (VertexId(w.u), VertexId(w.v), w.c)),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    vertices: Vec<u64>,
    weights: Vec<WeightRecord>,
}

#[derive(Serialize, Deserialize)]
struct WeightRecord {
    u: u64,
    v: u64,
    c: f64,
}

/// Compressed rows of a symmetric positive definite system, diagonal kept
/// apart for Jacobi preconditioning.
struct Csr {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl Csr {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = self.diag[i] * x[i];
            for k in self.row_start[i]..self.row_start[i + 1] {
                s -= self.vals[k] * x[self.cols[k]];
            }
            *o = s;
        }
    }

    fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let bnorm = norm(b);
        if n == 0 || bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let max_iter = 50 * n + 1000;
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(NetworkError::Solver(
                    "system is not positive definite".into(),
                ));
            }
            let a = rz / pap;
            for i in 0..n {
                x[i] += a * p[i];
                r[i] -= a * ap[i];
            }
            if norm(&r) <= tol * bnorm {
                // Confirm against the true residual, not the recurrence.
                self.apply(&x, &mut ap);
                let true_res: f64 = b
                    .iter()
                    .zip(&ap)
                    .map(|(b, a)| (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt();
                if true_res <= 10.0 * tol * bnorm {
                    return Ok(x);
                }
                for i in 0..n {
                    r[i] = b[i] - ap[i];
                }
            }
            for i in 0..n {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(NetworkError::Solver(format!(
            "conjugate gradient did not converge in {max_iter} iterations"
        )))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A real function on vertices; ids without an entry read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VertexFunction {
    values: BTreeMap<VertexId, f64>,
}

impl VertexFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.values.get(&v).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, v: VertexId, value: f64) {
        if value == 0.0 {
            self.values.remove(&v);
        } else {
            self.values.insert(v, value);
        }
    }

    /// Ids with a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.values
            .iter()
            .filter(|(_, &x)| x != 0.0)
            .map(|(&v, _)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.values.iter().map(|(&v, &x)| (v, x))
    }
}

impl FromIterator<(VertexId, f64)> for VertexFunction {
    fn from_iter<I: IntoIterator<Item = (VertexId, f64)>>(iter: I) -> Self {
        let mut f = VertexFunction::new();
        for (v, x) in iter {
            f.set(v, x);
        }
        f
    }
}

/// Dubejko weight of every edge with two incident faces, measured as the
/// distance between the two incenters over the distance between centres.
pub fn dubejko_weights(packing: &CirclePacking) -> Result<WeightedNetwork> {
    let violations = packing.validate();
    if let Some(v) = violations.first() {
        return Err(NetworkError::InvalidPacking(format!(
            "{v} (and {} more)",
            violations.len() - 1
        )));
    }
    let mut edges = Vec::new();
    for &(i, j) in packing.edge_indices() {
        let fs = packing.edge_face_indices(i, j);
        if fs.len() != 2 {
            continue;
        }
        let (a, b) = (packing.circle_at(i), packing.circle_at(j));
        let dual = (packing.faces()[fs[0]].incenter - packing.faces()[fs[1]].incenter).norm();
        edges.push((a.id, b.id, dual / (a.center - b.center).norm()));
    }
    WeightedNetwork::from_edges(edges)
}

/// The same weight from radii alone, or `None` for a boundary edge.
pub fn formula_weight(packing: &CirclePacking, i: usize, j: usize) -> Option<f64> {
    let fs = packing.edge_face_indices(i, j);
    if fs.len() != 2 {
        return None;
    }
    let third = |f: usize| {
        let tri = packing.face_indices()[f];
        let w = tri.into_iter().find(|&w| w != i && w != j)?;
        Some(packing.circle_at(w).radius)
    };
    Some(dubejko_weight_formula(
        packing.circle_at(i).radius,
        packing.circle_at(j).radius,
        third(fs[0])?,
        third(fs[1])?,
    ))
}

/// Edges bounding exactly one face.
pub fn boundary_edges(packing: &CirclePacking) -> impl Iterator<Item = (usize, usize)> + '_ {
    packing
        .edge_indices()
        .iter()
        .copied()
        .filter(|&(i, j)| packing.edge_face_indices(i, j).len() == 1)
}

/// Radius about the origin up to which the carrier is guaranteed to
/// extend: zero unless the origin lies in the carrier, otherwise the
/// distance to the nearest boundary edge.
pub fn carrier_inradius(packing: &CirclePacking) -> f64 {
    if !packing.carrier_contains(&Point::zeros()) {
        return 0.0;
    }
    boundary_edges(packing)
        .map(|(i, j)| {
            segment_distance(
                &Point::zeros(),
                &packing.circle_at(i).center,
                &packing.circle_at(j).center,
            )
        })
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// `1` inside radius `r`, linear down to `0` at `2r`.
pub fn annulus_profile(dist: f64, r: f64) -> f64 {
    if dist <= r {
        1.0
    } else if dist >= 2.0 * r {
        0.0
    } else {
        (2.0 * r - dist) / r
    }
}

/// The annulus profile evaluated at every circle centre. The carrier must
/// cover the disc of radius `8r` about the origin.
pub fn annulus_test_function(packing: &CirclePacking, r: f64) -> Result<VertexFunction> {
    if !(r > 0.0) {
        return Err(NetworkError::Domain(format!(
            "radius must be positive, got {r}"
        )));
    }
    let covered = carrier_inradius(packing);
    if covered <= 8.0 * r {
        return Err(NetworkError::Coverage(format!(
            "carrier covers radius {covered:.6} about the origin, need more than {}",
            8.0 * r
        )));
    }
    Ok(annulus_unchecked(packing, r))
}

fn annulus_unchecked(packing: &CirclePacking, r: f64) -> VertexFunction {
    packing
        .circles()
        .iter()
        .map(|c| (c.id, annulus_profile(c.center.norm(), r)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct AveragedTestFunction {
    /// `(1/N) Σ f_i`.
    pub function: VertexFunction,
    /// The individual annulus functions `f_i`.
    pub parts: Vec<VertexFunction>,
    /// Inner radii `R_1 < … < R_N`.
    pub radii: Vec<f64>,
    /// Circle nearest the origin; `g_N(rho) = 1`.
    pub rho: VertexId,
}

/// Average of `n` annulus functions with nested radii spaced so that no
/// edge sees two of them vary.
///
/// `R_1` is the distance from the origin to the far side of the circle
/// nearest the origin. Each next radius reaches every vertex inside
/// `2 R_i` and all of its neighbours.
pub fn averaged_test_function(packing: &CirclePacking, n: usize) -> Result<AveragedTestFunction> {
    if n == 0 {
        return Err(NetworkError::Domain("need at least one annulus".into()));
    }
    let rho_idx = (0..packing.len())
        .min_by(|&a, &b| {
            packing
                .circle_at(a)
                .center
                .norm()
                .total_cmp(&packing.circle_at(b).center.norm())
        })
        .ok_or(NetworkError::Empty)?;
    let rho = packing.circle_at(rho_idx);
    let mut radii = vec![rho.center.norm() + rho.radius];
    while radii.len() < n {
        let last = *radii.last().unwrap();
        let mut next = 2.0 * last;
        for i in 0..packing.len() {
            let d = packing.circle_at(i).center.norm();
            if d < 2.0 * last {
                next = next.max(d);
                for &j in packing.neighbor_indices(i) {
                    next = next.max(packing.circle_at(j).center.norm());
                }
            }
        }
        radii.push(next);
    }
    let outer = *radii.last().unwrap();
    let covered = carrier_inradius(packing);
    if covered <= 8.0 * outer {
        return Err(NetworkError::Coverage(format!(
            "{n} annuli need the carrier to cover radius {}, it covers {covered:.6}",
            8.0 * outer
        )));
    }
    let parts: Vec<VertexFunction> = radii
        .iter()
        .map(|&r| annulus_unchecked(packing, r))
        .collect();
    let function = packing
        .circles()
        .iter()
        .map(|c| {
            let s: f64 = parts.iter().map(|f| f.get(c.id)).sum();
            (c.id, s / n as f64)
        })
        .collect();
    Ok(AveragedTestFunction {
        function,
        parts,
        radii,
        rho: rho.id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{build_flower, build_hexagonal};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn v(i: u64) -> VertexId {
        VertexId(i)
    }

    fn net(edges: &[(u64, u64, f64)]) -> WeightedNetwork {
        WeightedNetwork::from_edges(edges.iter().map(|&(a, b, c)| (v(a), v(b), c))).unwrap()
    }

    /// Effective conductance by dense Gaussian elimination on the
    /// Laplacian, independent of the CG solver.
    fn dense_conductance(n: &WeightedNetwork, a: VertexId, b: VertexId) -> f64 {
        let ids: Vec<VertexId> = n.ids().collect();
        let free: Vec<VertexId> = ids.iter().copied().filter(|&x| x != a && x != b).collect();
        let m = free.len();
        let mut mat = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut rhs = nalgebra::DVector::<f64>::zeros(m);
        for (i, &x) in free.iter().enumerate() {
            for (&y, &c) in n.row(x).unwrap() {
                if y == x {
                    continue;
                }
                mat[(i, i)] += c;
                if y == a {
                    rhs[i] += c;
                } else if let Some(j) = free.iter().position(|&z| z == y) {
                    mat[(i, j)] -= c;
                }
            }
        }
        // nalgebra panics on an empty system
        let sol = if m == 0 {
            rhs
        } else {
            mat.lu().solve(&rhs).unwrap()
        };
        let h = |y: VertexId| {
            if y == a {
                1.0
            } else if y == b {
                0.0
            } else {
                sol[free.iter().position(|&z| z == y).unwrap()]
            }
        };
        n.row(a)
            .unwrap()
            .iter()
            .map(|(&y, &c)| c * (1.0 - h(y)))
            .sum()
    }

    #[test]
    fn hexagonal_weights() {
        let p = build_hexagonal(4, 2.5).unwrap();
        let n = dubejko_weights(&p).unwrap();
        for (_, _, c) in n.weighted_edges() {
            assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        for id in p.interior_ids() {
            assert!((n.pi(id) - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        }
        assert!((crate::geometry::weight_lower_bound(1.0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flower_six_spoke() {
        let p = build_flower(6).unwrap();
        let n = dubejko_weights(&p).unwrap();
        assert!((n.weight(v(0), v(1)) - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let f = formula_weight(&p, 0, 1).unwrap();
        assert!((f - 0.5 * 2.0 * (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flower_sum_approaches_two_pi() {
        let p = build_flower(1000).unwrap();
        let n = dubejko_weights(&p).unwrap();
        let s = n.pi(v(0));
        assert!(s < 2.0 * PI);
        assert!((2.0 * PI - s) / (2.0 * PI) < 0.01);
    }

    #[test]
    fn series_and_star() {
        let n = net(&[(0, 1, 1.0), (1, 2, 1.0)]);
        let c = n.censor_vertex(v(1)).unwrap();
        assert!((c.weight(v(0), v(2)) - 0.5).abs() < 1e-15);
        assert!((c.weight(v(0), v(0)) - 0.5).abs() < 1e-15);

        let star = net(&[(9, 1, 1.0), (9, 2, 1.0), (9, 3, 1.0)]);
        let t = star.censor_vertex(v(9)).unwrap();
        for (a, b) in [(1, 2), (2, 3), (1, 3)] {
            assert!((t.weight(v(a), v(b)) - 1.0 / 3.0).abs() < 1e-15);
        }

        let looped = net(&[(0, 1, 1.0), (1, 1, 1.0), (1, 2, 1.0)]);
        let c = looped.censor_vertex(v(1)).unwrap();
        assert!((c.weight(v(0), v(2)) - 0.5).abs() < 1e-15);
        assert!(matches!(
            star.censor_vertex(v(7)),
            Err(NetworkError::NotFound(_))
        ));
    }

    #[test]
    fn absorbing_state_rejected() {
        // A vertex whose only weight is a loop cannot be in a connected
        // network with others, so test the single-vertex guard instead.
        let n = net(&[(0, 0, 1.0)]);
        assert!(matches!(
            n.censor_vertex(v(0)),
            Err(NetworkError::CensorAll)
        ));
        assert!(matches!(
            n.delete_loops(),
            Err(NetworkError::IsolatedVertex(_))
        ));
    }

    #[test]
    fn delete_loops_examples() {
        let n = net(&[(0, 0, 5.0), (0, 1, 1.0)]);
        let d = n.delete_loops().unwrap();
        assert_eq!(d.transitions(v(0)).unwrap(), vec![(v(1), 1.0)]);
        assert_eq!(d.pi(v(0)), 1.0);
        let plain = net(&[(0, 1, 1.0), (1, 2, 2.0)]);
        assert_eq!(plain.delete_loops().unwrap(), plain);
    }

    #[test]
    fn energy_examples() {
        let n = net(&[(0, 1, 2.0)]);
        let f: VertexFunction = [(v(1), 1.0)].into_iter().collect();
        assert_eq!(n.dirichlet_energy(&f), 2.0);
        let c: VertexFunction = [(v(0), 3.0), (v(1), 3.0)].into_iter().collect();
        assert_eq!(n.dirichlet_energy(&c), 0.0);
    }

    #[test]
    fn harmonic_examples() {
        let n = net(&[(0, 1, 1.0), (1, 2, 1.0)]);
        let h = n
            .harmonic_extend(&BTreeMap::from([(v(0), 0.0), (v(2), 1.0)]))
            .unwrap();
        assert!((h.get(v(1)) - 0.5).abs() < 1e-14);
        let ones = n
            .harmonic_extend(&BTreeMap::from([(v(0), 1.0), (v(2), 1.0)]))
            .unwrap();
        assert!((ones.get(v(1)) - 1.0).abs() < 1e-14);
        assert!(n.harmonic_extend(&BTreeMap::new()).is_err());
    }

    #[test]
    fn conductance_examples() {
        let series = net(&[(0, 1, 1.0), (1, 2, 1.0)]);
        let c = series
            .effective_conductance(v(0), &BTreeSet::from([v(2)]))
            .unwrap();
        assert!((c - 0.5).abs() < 1e-14);
        let parallel = net(&[(0, 1, 1.0), (0, 1, 1.0)]);
        let c = parallel
            .effective_conductance(v(0), &BTreeSet::from([v(1)]))
            .unwrap();
        assert!((c - 2.0).abs() < 1e-14);
        assert!(series
            .effective_conductance(v(0), &BTreeSet::from([v(0)]))
            .is_err());
    }

    #[test]
    fn conductance_equals_energy_of_potential() {
        let p = build_hexagonal(8, 1.0).unwrap();
        let n = dubejko_weights(&p).unwrap();
        let boundary: BTreeSet<VertexId> = n.ids().filter(|&x| !p.is_interior(x)).collect();
        let (c, h) = n
            .effective_conductance_with_potential(v(0), &boundary)
            .unwrap();
        let e = n.dirichlet_energy(&h);
        assert!((c - e).abs() <= 1e-9 * c);
    }

    #[test]
    fn harmonic_minimizes_energy() {
        let p = build_hexagonal(5, 1.0).unwrap();
        let n = dubejko_weights(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let boundary: BTreeMap<VertexId, f64> = n
            .ids()
            .filter(|&x| !p.is_interior(x))
            .map(|x| (x, rng.gen_range(-1.0..1.0)))
            .collect();
        let h = n.harmonic_extend(&boundary).unwrap();
        for x in n.ids().filter(|x| !boundary.contains_key(x)) {
            let avg: f64 = n
                .transitions(x)
                .unwrap()
                .iter()
                .map(|&(u, p)| p * h.get(u))
                .sum();
            assert!((avg - h.get(x)).abs() < 1e-10);
        }
        let base = n.dirichlet_energy(&h);
        for _ in 0..100 {
            let mut g = h.clone();
            for x in n.ids().filter(|x| !boundary.contains_key(x)) {
                g.set(x, h.get(x) + rng.gen_range(-1e-3..1e-3));
            }
            assert!(n.dirichlet_energy(&g) >= base);
        }
    }

    #[test]
    fn censor_preserves_five_vertex_conductance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut edges = vec![];
        for a in 0..5u64 {
            for b in a + 1..5 {
                edges.push((v(a), v(b), rng.gen_range(0.1..2.0)));
            }
        }
        let n = WeightedNetwork::from_edges(edges).unwrap();
        let w = BTreeSet::from([v(2), v(3)]);
        let reduced = n.censor_set(&w).unwrap();
        let before = dense_conductance(&n, v(0), v(4));
        let after = dense_conductance(&reduced, v(0), v(4));
        assert!((before - after).abs() <= 1e-12 * before);
    }

    #[test]
    fn json_round_trip() {
        let n = net(&[(0, 0, 0.25), (0, 1, 1.5), (1, 2, 1.0 / 3.0)]);
        let mut buf = Vec::new();
        n.to_json(&mut buf).unwrap();
        let back = WeightedNetwork::from_json(&buf[..]).unwrap();
        assert_eq!(n, back);
        assert!(WeightedNetwork::from_json(
            &b"{\"vertices\":[0],\"weights\":[{\"u\":0,\"v\":3,\"c\":1}]}"[..]
        )
        .is_err());
    }

    #[test]
    fn annulus_values() {
        assert_eq!(annulus_profile(1.5, 1.0), 0.5);
        assert_eq!(annulus_profile(0.3, 1.0), 1.0);
        assert_eq!(annulus_profile(2.0, 1.0), 0.0);
        assert_eq!(annulus_profile(7.0, 1.0), 0.0);
        let p = build_hexagonal(12, 1.0).unwrap();
        assert!(matches!(
            annulus_test_function(&p, 5.0),
            Err(NetworkError::Coverage(_))
        ));
        let f = annulus_test_function(&p, 1.0).unwrap();
        assert_eq!(f.get(v(0)), 1.0);
    }

    #[test]
    fn averaged_parts_do_not_share_edges() {
        let p = build_hexagonal(100, 1.0).unwrap();
        let n = dubejko_weights(&p).unwrap();
        let avg = averaged_test_function(&p, 4).unwrap();
        assert_eq!(avg.function.get(avg.rho), 1.0);
        for (a, b, _) in n.weighted_edges() {
            let varying = avg.parts.iter().filter(|f| f.get(a) != f.get(b)).count();
            assert!(varying <= 1);
        }
        let single = averaged_test_function(&p, 1).unwrap();
        assert_eq!(single.parts.len(), 1);
        assert_eq!(single.function, single.parts[0]);
    }

    fn random_network(rng: &mut ChaCha8Rng, size: u64) -> WeightedNetwork {
        loop {
            let mut edges = vec![];
            for a in 0..size {
                for b in a..size {
                    if rng.gen_bool(0.6) {
                        edges.push((v(a), v(b), rng.gen_range(0.05..3.0)));
                    }
                }
            }
            if let Ok(n) = WeightedNetwork::from_edges(edges) {
                if n.len() as u64 == size {
                    return n;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn censoring_preserves_pi_and_terminals(seed in 0u64..10_000, size in 3u64..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = random_network(&mut rng, size);
            let w: BTreeSet<VertexId> = (2..size).filter(|_| rng.gen_bool(0.5)).map(v).collect();
            let r = n.censor_set(&w).unwrap();
            for x in r.ids() {
                prop_assert!((r.pi(x) - n.pi(x)).abs() <= 1e-12 * n.pi(x));
            }
            let before = dense_conductance(&n, v(0), v(1));
            let after = dense_conductance(&r, v(0), v(1));
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1e-300));
            let rev = w.iter().rev().try_fold(n.clone(), |acc, &x| acc.censor_vertex(x)).unwrap();
            for (a, b, c) in r.weighted_edges() {
                prop_assert!((rev.weight(a, b) - c).abs() <= 1e-12 * c.max(1.0));
            }
        }
    }
}

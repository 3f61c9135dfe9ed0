use super::{signed_area2, DomainSpec, GeometryError, Point};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

pub const MESH_FORMAT_VERSION: u32 = 1;

/// Kind of boundary piece an edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    /// The outer (curved or polygonal) boundary of a domain containing the origin.
    Outer,
    /// The graph part `x₂ = h(x₁)` of a half domain.
    Graph,
    /// The arc `|x| = r` closing a half domain.
    Artificial,
}

/// A boundary edge `(i, j, tag)`, oriented so the domain lies to its left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge(pub usize, pub usize, pub BoundaryTag);

impl BoundaryEdge {
    pub fn vertices(&self) -> [usize; 2] {
        [self.0, self.1]
    }

    pub fn tag(&self) -> BoundaryTag {
        self.2
    }
}

/// Radial grading metadata: ring radii are `r_max · q^k` for `k = 0..=rings`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    pub q: f64,
    pub rings: usize,
    pub r_max: f64,
}

impl Grading {
    pub fn ring_radius(&self, k: usize) -> f64 {
        self.r_max * self.q.powi(k as i32)
    }

    /// Radius of the innermost graded ring.
    pub fn r_min(&self) -> f64 {
        self.ring_radius(self.rings)
    }
}

/// A conforming P1 triangulation with the origin as a vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    pub origin_vertex: usize,
    pub grading: Grading,
    pub domain: Option<DomainSpec>,
}

#[derive(Serialize, Deserialize)]
struct MeshDocument {
    version: u32,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    origin_vertex: usize,
    grading: Grading,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainSpec>,
}

/// Undirected edge key with the smaller index first.
pub(crate) fn edge_key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * signed_area2(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Whether triangle `t` has the origin as a vertex.
    pub fn touches_origin(&self, t: usize) -> bool {
        self.triangles[t].contains(&self.origin_vertex)
    }

    /// Maximum edge length.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(i, j)| self.vertices[i].distance(self.vertices[j]))
            .fold(0.0, f64::max)
    }

    /// Each undirected edge with the number of triangles containing it.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::with_capacity(3 * self.triangles.len() / 2 + 8);
        for t in &self.triangles {
            for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *counts.entry(edge_key(i, j)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Indices of vertices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary_vertices_tagged(&[BoundaryTag::Outer, BoundaryTag::Graph, BoundaryTag::Artificial])
    }

    /// Indices of vertices on boundary edges carrying one of `tags`.
    pub fn boundary_vertices_tagged(&self, tags: &[BoundaryTag]) -> Vec<usize> {
        let mut flags = vec![false; self.num_vertices()];
        for e in self.boundary.iter().filter(|e| tags.contains(&e.2)) {
            flags[e.0] = true;
            flags[e.1] = true;
        }
        flags.iter().enumerate().filter_map(|(i, f)| f.then_some(i)).collect()
    }

    /// Checks conformity, orientation, the Euler relation, the origin vertex and
    /// consistency of the boundary edge list.
    pub fn check_invariants(&self) -> Result<(), GeometryError> {
        let nv = self.num_vertices();
        let invalid = |msg: String| Err(GeometryError::InvalidMesh(msg));
        if self.origin_vertex >= nv || self.vertices[self.origin_vertex] != Point::ORIGIN {
            return invalid("origin vertex missing or not at (0, 0)".into());
        }
        let mut used = vec![false; nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return invalid(format!("triangle {t} references a missing vertex"));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return invalid(format!("triangle {t} repeats a vertex"));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(GeometryError::DegenerateTriangle(t));
            }
            tri.iter().for_each(|&i| used[i] = true);
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return invalid(format!("vertex {i} belongs to no triangle"));
        }
        // Directed edges must be unique; otherwise two triangles overlap with the same orientation.
        let mut directed = HashMap::with_capacity(3 * self.triangles.len());
        for tri in &self.triangles {
            for (i, j) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                if directed.insert((i, j), ()).is_some() {
                    return invalid(format!("directed edge ({i}, {j}) used twice"));
                }
            }
        }
        let counts = self.edge_counts();
        if let Some((e, c)) = counts.iter().find(|(_, &c)| c > 2) {
            return invalid(format!("edge {e:?} shared by {c} triangles"));
        }
        let euler = nv as i64 - counts.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return invalid(format!("Euler characteristic V − E + F = {euler}, expected 1"));
        }
        let open: usize = counts.values().filter(|&&c| c == 1).count();
        if open != self.boundary.len() {
            return invalid(format!("{} boundary edges listed, {open} edges have one triangle", self.boundary.len()));
        }
        for e in &self.boundary {
            if counts.get(&edge_key(e.0, e.1)) != Some(&1) {
                return invalid(format!("listed boundary edge ({}, {}) is interior or missing", e.0, e.1));
            }
            if !directed.contains_key(&(e.0, e.1)) {
                return invalid(format!("boundary edge ({}, {}) is not oriented with the domain on its left", e.0, e.1));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, GeometryError> {
        let doc = MeshDocument {
            version: MESH_FORMAT_VERSION,
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            origin_vertex: self.origin_vertex,
            grading: self.grading,
            domain: self.domain.clone(),
        };
        serde_json::to_string(&doc).map_err(|e| GeometryError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let doc: MeshDocument = serde_json::from_str(text).map_err(|e| GeometryError::Format(e.to_string()))?;
        if doc.version != MESH_FORMAT_VERSION {
            return Err(GeometryError::Format(format!(
                "unsupported mesh version {} (expected {MESH_FORMAT_VERSION})",
                doc.version
            )));
        }
        let mesh = Mesh {
            vertices: doc.vertices,
            triangles: doc.triangles,
            boundary: doc.boundary,
            origin_vertex: doc.origin_vertex,
            grading: doc.grading,
            domain: doc.domain,
        };
        mesh.check_invariants()?;
        Ok(mesh)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), GeometryError> {
        std::fs::write(path, self.to_json()?).map_err(|e| GeometryError::Io(e.to_string()))
    }

    pub fn read_json(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(e.to_string()))?;
        Self::from_json(&text)
    }
}

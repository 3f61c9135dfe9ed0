use super::build::boundary_edges;
use super::mesh::{edge_key, BoundaryTag, Mesh};
use std::collections::HashMap;

/// Red refinement: every triangle is split into four by its edge midpoints.
///
/// Parent vertices keep their indices and coordinates; new vertices are
/// numbered in order of first appearance. Midpoints of boundary edges are
/// projected onto the analytic boundary when the mesh carries its domain.
/// The grading metadata is kept: the coarse rings remain vertex circles.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let boundary_tags: HashMap<(usize, usize), BoundaryTag> =
        mesh.boundary.iter().map(|e| (edge_key(e.0, e.1), e.2)).collect();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * mesh.triangles.len() / 2);
    let mut new_tags: HashMap<usize, BoundaryTag> = HashMap::new();
    let mut mid = |i: usize, j: usize, vertices: &mut Vec<_>| -> usize {
        let key = edge_key(i, j);
        *midpoint.entry(key).or_insert_with(|| {
            let (p, q) = (mesh.vertices[key.0], mesh.vertices[key.1]);
            let m = match (boundary_tags.get(&key), &mesh.domain) {
                (Some(&tag), Some(domain)) => {
                    new_tags.insert(vertices.len(), tag);
                    domain.project_boundary_midpoint(p, q, tag)
                }
                (Some(&tag), None) => {
                    new_tags.insert(vertices.len(), tag);
                    p.midpoint(q)
                }
                _ => p.midpoint(q),
            };
            vertices.push(m);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    // A child boundary edge inherits the tag of its parent, which is the
    // tag attached to its midpoint end.
    let boundary = boundary_edges(&triangles, |i, j| {
        new_tags.get(&i).or_else(|| new_tags.get(&j)).copied().unwrap_or(BoundaryTag::Outer)
    });
    Mesh {
        vertices,
        triangles,
        boundary,
        origin_vertex: mesh.origin_vertex,
        grading: mesh.grading,
        domain: mesh.domain.clone(),
    }
}

use super::mesh::{edge_key, BoundaryEdge, BoundaryTag, Grading, Mesh};
use super::{signed_area2, DomainSpec, GeometryError, Point};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

/// An ordered run of vertices with increasing parameter, used to stitch
/// consecutive levels of a ring-structured mesh.
#[derive(Clone, Debug)]
struct Chain {
    ids: Vec<usize>,
    params: Vec<f64>,
}

impl Chain {
    fn len(&self) -> usize {
        self.ids.len()
    }

    /// Sub-chain between positions `from` and `to` (inclusive, cyclic on a
    /// closed chain whose last entry repeats the first), with parameters
    /// rescaled to `[0, 1]`.
    fn closed_sub_chain(&self, from: usize, to: usize) -> Chain {
        let n = self.len() - 1;
        let period = self.params[n] - self.params[0];
        let mut ids = Vec::new();
        let mut params = Vec::new();
        let mut k = from;
        let mut shift = 0.0;
        loop {
            ids.push(self.ids[k]);
            params.push(self.params[k] + shift);
            if k == to {
                break;
            }
            k += 1;
            if k == n {
                k = 0;
                shift += period;
            }
        }
        normalized(ids, params)
    }

    /// Entries between positions `from` and `to` of an open chain.
    fn open_sub_chain(&self, from: usize, to: usize) -> Chain {
        normalized(self.ids[from..=to].to_vec(), self.params[from..=to].to_vec())
    }

    fn position(&self, id: usize) -> usize {
        self.ids.iter().position(|&i| i == id).expect("vertex in chain")
    }
}

fn normalized(ids: Vec<usize>, params: Vec<f64>) -> Chain {
    let (lo, hi) = (params[0], params[params.len() - 1]);
    let params = params.iter().map(|p| (p - lo) / (hi - lo)).collect();
    Chain { ids, params }
}

#[derive(Default)]
struct Builder {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    on_graph: Vec<bool>,
}

impl Builder {
    fn add(&mut self, p: Point) -> usize {
        self.vertices.push(p);
        self.on_graph.push(false);
        self.vertices.len() - 1
    }

    fn add_graph(&mut self, p: Point) -> usize {
        let i = self.add(p);
        self.on_graph[i] = true;
        i
    }

    fn triangle(&mut self, a: usize, b: usize, c: usize) -> Result<(), GeometryError> {
        if signed_area2(self.vertices[a], self.vertices[b], self.vertices[c]) <= 0.0 {
            return Err(GeometryError::DegenerateTriangle(self.triangles.len()));
        }
        self.triangles.push([a, b, c]);
        Ok(())
    }

    /// Closed ring of vertices at the given angles (sorted, in `[0, 2π)`).
    fn closed_ring(&mut self, points: &[(f64, Point)]) -> Chain {
        let mut ids: Vec<usize> = points.iter().map(|(_, p)| self.add(*p)).collect();
        let mut params: Vec<f64> = points.iter().map(|(t, _)| *t).collect();
        ids.push(ids[0]);
        params.push(params[0] + TAU);
        Chain { ids, params }
    }

    fn fan(&mut self, center: usize, ring: &Chain) -> Result<(), GeometryError> {
        for w in ring.ids.windows(2) {
            self.triangle(center, w[0], w[1])?;
        }
        Ok(())
    }

    /// Triangulates the band between an inner and an outer chain by merging
    /// them in parameter order.
    fn stitch(&mut self, inner: &Chain, outer: &Chain) -> Result<(), GeometryError> {
        let (ni, no) = (inner.len() - 1, outer.len() - 1);
        let (mut i, mut j) = (0, 0);
        while i < ni || j < no {
            let advance_inner = if i == ni {
                false
            } else if j == no {
                true
            } else {
                inner.params[i + 1] <= outer.params[j + 1]
            };
            if advance_inner {
                self.triangle(inner.ids[i], outer.ids[j], inner.ids[i + 1])?;
                i += 1;
            } else {
                self.triangle(inner.ids[i], outer.ids[j], outer.ids[j + 1])?;
                j += 1;
            }
        }
        Ok(())
    }

    fn finish(self, grading: Grading, domain: &DomainSpec) -> Mesh {
        let boundary = boundary_edges(&self.triangles, |i, j| {
            if matches!(domain, DomainSpec::HalfGraph { .. }) {
                if self.on_graph[i] && self.on_graph[j] {
                    BoundaryTag::Graph
                } else {
                    BoundaryTag::Artificial
                }
            } else {
                BoundaryTag::Outer
            }
        });
        Mesh {
            vertices: self.vertices,
            triangles: self.triangles,
            boundary,
            origin_vertex: 0,
            grading,
            domain: Some(domain.clone()),
        }
    }
}

/// Edges with exactly one adjacent triangle, oriented with that triangle on the left,
/// in the order they first appear in the triangle list.
pub(crate) fn boundary_edges(
    triangles: &[[usize; 3]],
    mut tag: impl FnMut(usize, usize) -> BoundaryTag,
) -> Vec<BoundaryEdge> {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *counts.entry(edge_key(i, j)).or_insert(0) += 1;
        }
    }
    triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .filter(|&(i, j)| counts[&edge_key(i, j)] == 1)
        .map(|(i, j)| BoundaryEdge(i, j, tag(i, j)))
        .collect()
}

/// Number of vertices on each graded ring, a multiple of 4 chosen so the
/// elements between consecutive rings are close to isotropic.
fn graded_ring_count(q: f64) -> usize {
    (4 * (TAU / (4.0 * (1.0 - q))).round() as usize).max(8)
}

fn level_count(length: f64, h: f64) -> usize {
    (length / h).ceil().max(1.0) as usize
}

/// Regular angles on a closed ring with extra angles inserted; regular
/// angles too close to an inserted one are dropped.
fn ring_angles(n: usize, inserted: &[f64]) -> Vec<f64> {
    let spacing = TAU / n as f64;
    let inserted: Vec<f64> = inserted.iter().map(|t| t.rem_euclid(TAU)).collect();
    let cyclic = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    };
    let mut angles: Vec<f64> = (0..n)
        .map(|j| spacing * j as f64)
        .filter(|t| inserted.iter().all(|s| cyclic(*t, *s) > 0.3 * spacing))
        .chain(inserted.iter().copied())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Validates the discretization parameters shared by all domain families.
fn check_parameters(spec: &DomainSpec, h: f64, q: f64, rings: usize) -> Result<(), GeometryError> {
    spec.validate()?;
    let bad = |msg: String| Err(GeometryError::InvalidParameter(msg));
    if !(q > 0.0 && q < 1.0) {
        return bad(format!("grading ratio must lie in (0, 1), got {q}"));
    }
    if rings < 4 {
        return bad(format!("at least 4 graded rings are required, got {rings}"));
    }
    if !(h > 0.0 && h < spec.diameter()) {
        return bad(format!("target_h must lie in (0, diameter = {}), got {h}", spec.diameter()));
    }
    Ok(())
}

/// Builds a graded conforming triangulation of `spec` with the origin as vertex 0.
///
/// Rings of radius `r_max · q^k`, `k = 0..=rings`, surround the origin; the
/// rest of the domain is filled by levels of spacing about `target_h`.
pub fn build_mesh(spec: &DomainSpec, target_h: f64, grading_q: f64, rings: usize) -> Result<Mesh, GeometryError> {
    check_parameters(spec, target_h, grading_q, rings)?;
    match spec {
        DomainSpec::Disk { .. } | DomainSpec::LDomain { .. } => build_star(spec, target_h, grading_q, rings),
        DomainSpec::SectorAnnulus { .. } => build_sector_annulus(spec, target_h, grading_q, rings),
        DomainSpec::HalfGraph { .. } => build_half_graph(spec, target_h, grading_q, rings),
    }
}

/// Origin, graded closed rings; returns the outermost graded ring.
fn graded_core(b: &mut Builder, grading: &Grading) -> Result<Chain, GeometryError> {
    let origin = b.add(Point::ORIGIN);
    let n = graded_ring_count(grading.q);
    let mut inner: Option<Chain> = None;
    for k in (0..=grading.rings).rev() {
        let r = grading.ring_radius(k);
        let pts: Vec<(f64, Point)> = (0..n)
            .map(|j| TAU * j as f64 / n as f64)
            .map(|t| (t, Point::polar(r, t)))
            .collect();
        let ring = b.closed_ring(&pts);
        match &inner {
            None => b.fan(origin, &ring)?,
            Some(prev) => b.stitch(prev, &ring)?,
        }
        inner = Some(ring);
    }
    Ok(inner.expect("at least one ring"))
}

fn build_star(spec: &DomainSpec, h: f64, q: f64, rings: usize) -> Result<Mesh, GeometryError> {
    let rho = |t: f64| spec.radial_boundary(t).expect("star-shaped domain");
    let (rho_min, rho_max) = (spec.inner_radius(), spec.outer_radius());
    let grading = Grading { q, rings, r_max: (h / (1.0 - q)).min(0.5 * rho_min) };
    let mut b = Builder::default();
    let mut prev = graded_core(&mut b, &grading)?;
    let r0 = grading.r_max;
    let n_ring = graded_ring_count(q);
    let levels = level_count(rho_max - r0, h);
    for i in 1..=levels {
        let s = i as f64 / levels as f64;
        let reach = r0 + s * (rho_max - r0);
        let n = n_ring.max(4 * (TAU * reach / (4.0 * h)).ceil() as usize);
        let pts: Vec<(f64, Point)> = (0..n)
            .map(|j| TAU * j as f64 / n as f64)
            .map(|t| {
                let r = if i == levels { rho(t) } else { r0 + s * (rho(t) - r0) };
                (t, Point::polar(r, t))
            })
            .collect();
        let ring = b.closed_ring(&pts);
        b.stitch(&prev, &ring)?;
        prev = ring;
    }
    Ok(b.finish(grading, spec))
}

fn build_sector_annulus(spec: &DomainSpec, h: f64, q: f64, rings: usize) -> Result<Mesh, GeometryError> {
    let DomainSpec::SectorAnnulus { delta, theta_lo, theta_hi } = *spec else {
        unreachable!("dispatched on variant")
    };
    let eps = spec.origin_disk_radius();
    let inner_arc = 1.0 - delta;
    let span = theta_hi - theta_lo;
    let centre = 0.5 * (theta_lo + theta_hi);
    // Corridor of width h; its sides meet the circle of radius ρ at angle centre ± asin(h / 2ρ).
    let half_angle = |rho: f64| (0.5 * h / rho).asin();
    if h >= eps || half_angle(inner_arc) >= 0.45 * span {
        return Err(GeometryError::InvalidParameter(format!(
            "target_h = {h} too large for the corridor (origin disk radius {eps}, sector opening {span})"
        )));
    }
    let grading = Grading { q, rings, r_max: (h / (1.0 - q)).min(0.5 * eps) };
    let mut b = Builder::default();
    let mut prev = graded_core(&mut b, &grading)?;
    let r0 = grading.r_max;
    let n_ring = graded_ring_count(q);

    // Levels of the origin disk up to radius eps; the last one carries the corridor feet.
    let levels = level_count(eps - r0, h);
    let (foot_lo, foot_hi) = (centre - half_angle(eps), centre + half_angle(eps));
    for i in 1..=levels {
        let r = r0 + (eps - r0) * i as f64 / levels as f64;
        let n = n_ring.max(4 * (TAU * r / (4.0 * h)).ceil() as usize);
        let inserted: &[f64] = if i == levels { &[foot_lo, foot_hi] } else { &[] };
        let pts: Vec<(f64, Point)> = ring_angles(n, inserted).into_iter().map(|t| (t, Point::polar(r, t))).collect();
        let ring = b.closed_ring(&pts);
        b.stitch(&prev, &ring)?;
        prev = ring;
    }
    let core_ring = prev;
    let find_angle = |b: &Builder, chain: &Chain, t: f64| {
        let target = Point::polar(1.0, t);
        chain.ids[..chain.len() - 1]
            .iter()
            .copied()
            .min_by(|&x, &y| {
                let dx = b.vertices[x].angle_distance(target);
                let dy = b.vertices[y].angle_distance(target);
                dx.total_cmp(&dy)
            })
            .expect("non-empty ring")
    };
    let (lo_id, hi_id) = (find_angle(&b, &core_ring, foot_lo), find_angle(&b, &core_ring, foot_hi));
    let corridor_bottom = core_ring.closed_sub_chain(core_ring.position(lo_id), core_ring.position(hi_id));

    // Annular sector levels from 1 − δ to 1, the first one carrying the corridor head.
    let (head_lo, head_hi) = (centre - half_angle(inner_arc), centre + half_angle(inner_arc));
    let arc_levels = level_count(delta, h);
    let mut arcs: Vec<Chain> = Vec::with_capacity(arc_levels + 1);
    for k in 0..=arc_levels {
        let r = inner_arc + delta * k as f64 / arc_levels as f64;
        let n = ((span * r / h).ceil() as usize).max(2);
        let spacing = span / n as f64;
        let mut angles: Vec<f64> = (0..=n)
            .map(|i| theta_lo + spacing * i as f64)
            .filter(|&t| k > 0 || [head_lo, head_hi].iter().all(|s| (t - s).abs() > 0.3 * spacing))
            .collect();
        if k == 0 {
            angles.extend([head_lo, head_hi]);
            angles.sort_by(f64::total_cmp);
        }
        // The sector edges must stay on the rays θ_lo and θ_hi exactly.
        angles[0] = theta_lo;
        *angles.last_mut().expect("non-empty") = theta_hi;
        let ids = angles.iter().map(|&t| b.add(Point::polar(r, t))).collect();
        let chain = Chain { ids, params: angles };
        if let Some(inner) = arcs.last() {
            b.stitch(inner, &chain)?;
        }
        arcs.push(chain);
    }
    let head = &arcs[0];
    let pos = |t: f64| head.params.iter().position(|&p| p == t).expect("inserted angle");
    let corridor_top = head.open_sub_chain(pos(head_lo), pos(head_hi));

    // Corridor levels between the two circles.
    let corridor_levels = level_count(inner_arc - eps, h);
    let mut lower = corridor_bottom;
    for j in 1..=corridor_levels {
        let upper = if j == corridor_levels {
            corridor_top.clone()
        } else {
            let rho = eps + (inner_arc - eps) * j as f64 / corridor_levels as f64;
            let beta = half_angle(rho);
            let ids = vec![b.add(Point::polar(rho, centre - beta)), b.add(Point::polar(rho, centre + beta))];
            Chain { ids, params: vec![0.0, 1.0] }
        };
        b.stitch(&lower, &upper)?;
        lower = upper;
    }
    Ok(b.finish(grading, spec))
}

/// Radius along direction `phi` in the flattened coordinates `y` at which the
/// mapped point `(y₁, y₂ + h(y₁))` reaches `|x| = r`.
fn flattened_radius(spec: &DomainSpec, r: f64, phi: f64) -> f64 {
    let e = Point::polar(1.0, phi);
    let excess = |t: f64| unflatten(spec, t * e).norm() - r;
    let (mut lo, mut hi) = (0.0, 2.0 * r);
    debug_assert!(excess(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn unflatten(spec: &DomainSpec, y: Point) -> Point {
    Point::new(y.x(), y.y() + spec.graph(y.x()))
}

fn build_half_graph(spec: &DomainSpec, h: f64, q: f64, rings: usize) -> Result<Mesh, GeometryError> {
    let DomainSpec::HalfGraph { r, .. } = *spec else {
        unreachable!("dispatched on variant")
    };
    let samples = 64;
    let radii: Vec<f64> = (0..=samples).map(|i| flattened_radius(spec, r, PI * i as f64 / samples as f64)).collect();
    let rho_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_max = radii.iter().copied().fold(0.0, f64::max);
    let grading = Grading { q, rings, r_max: (h / (1.0 - q)).min(0.5 * rho_min) };
    let mut b = Builder::default();
    let origin = b.add_graph(Point::ORIGIN);

    // Open half rings from φ = 0 to φ = π in flattened coordinates.
    let half_ring = |b: &mut Builder, n: usize, radius: &dyn Fn(f64) -> f64, outermost: bool| -> Chain {
        let angles: Vec<f64> = (0..=n).map(|j| PI * j as f64 / n as f64).collect();
        let ids = angles
            .iter()
            .enumerate()
            .map(|(j, &phi)| {
                let mut x = unflatten(spec, Point::polar(radius(phi), phi));
                if j == 0 || j == n {
                    b.add_graph(x)
                } else {
                    if outermost {
                        x = (r / x.norm()) * x;
                    }
                    b.add(x)
                }
            })
            .collect();
        Chain { ids, params: angles.iter().map(|a| a / PI).collect() }
    };

    let n_half = graded_ring_count(q) / 2;
    let mut prev: Option<Chain> = None;
    for k in (0..=rings).rev() {
        let rk = grading.ring_radius(k);
        let ring = half_ring(&mut b, n_half, &|_| rk, false);
        match &prev {
            None => b.fan(origin, &ring)?,
            Some(inner) => b.stitch(inner, &ring)?,
        }
        prev = Some(ring);
    }
    let mut prev = prev.expect("rings");
    let r0 = grading.r_max;
    let levels = level_count(rho_max - r0, h);
    for i in 1..=levels {
        let s = i as f64 / levels as f64;
        let reach = r0 + s * (rho_max - r0);
        let n = n_half.max((PI * reach / h).ceil() as usize);
        let outermost = i == levels;
        let radius = |phi: f64| {
            let edge = flattened_radius(spec, r, phi);
            if outermost {
                edge
            } else {
                r0 + s * (edge - r0)
            }
        };
        let ring = half_ring(&mut b, n, &radius, outermost);
        b.stitch(&prev, &ring)?;
        prev = ring;
    }
    Ok(b.finish(grading, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_angles_insert_and_drop_neighbours() {
        let angles = ring_angles(8, &[0.05, -0.05]);
        assert_eq!(angles.len(), 9);
        assert!(angles.windows(2).all(|w| w[0] < w[1]));
        assert!((angles[0] - 0.05).abs() < 1e-15);
        assert!((angles[8] - (TAU - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn graded_count_is_multiple_of_four() {
        for q in [0.3, 0.5, 0.7, 0.9] {
            assert_eq!(graded_ring_count(q) % 4, 0);
        }
        assert_eq!(graded_ring_count(0.5), 12);
    }
}

//! Feature sizing from a pole-filtered approximation of the medial axis.
//!
//! The Voronoi diagram of the surface vertices (dual of the Delaunay
//! complex) carries the medial axis in the limit of dense sampling. For
//! each surface vertex p, the farthest Voronoi vertex of its cell is the
//! pole p+; the plane through p normal to the pole vector cuts a set of
//! Voronoi edges whose dual Delaunay facets form the umbrella of p.
//! Delaunay edges that stand out of the umbrella (angle condition) or are
//! much longer than its circumradii (ratio condition) cross the local gap;
//! a final per-edge filter against the endpoint surface normals removes
//! corner branches. Accepted edge lengths give the local feature size f
//! and the feature meshsize h_f = f / n_g.

use rayon::prelude::*;

use crate::delaunay::{DelaunayComplex, NONE};
use crate::error::{Error, Result};
use crate::geom::{triangle_circumradius, triangle_normal, Vec3};
use crate::mesh::SurfaceMesh;

/// Default angle threshold.
pub const DEFAULT_THETA: f64 = std::f64::consts::PI / 8.0;
/// Default edge-to-circumradius ratio threshold.
pub const DEFAULT_RHO: f64 = 8.0;

/// One Delaunay facet of an umbrella: its unit normal and circumradius.
#[derive(Debug, Clone, Copy)]
pub struct UmbrellaFacet {
    pub normal: Vec3,
    pub circumradius: f64,
}

/// Pole of a surface vertex: either the farthest Voronoi vertex of its
/// cell, or the direction of unboundedness for hull vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pole {
    Interior(Vec3),
    /// Hull vertex: the cell is unbounded; only the direction is defined.
    Unbounded,
}

/// Per-vertex poles, pole vectors and umbrellas over a Delaunay complex.
#[derive(Debug, Clone)]
pub struct PoleData {
    pub pole: Vec<Pole>,
    /// Pole vector v_p: `pole - p` for interior vertices, the average
    /// outward hull-facet direction for hull vertices.
    pub pole_vector: Vec<Vec3>,
    /// Farthest incident circumcenter on the opposite side of v_p.
    pub inner_pole: Vec<Option<Vec3>>,
    pub umbrellas: Vec<Vec<UmbrellaFacet>>,
    /// Points with no incident tet (excluded, should not occur after
    /// deduplication).
    pub excluded: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptReason {
    Angle,
    Ratio,
}

#[derive(Debug, Clone, Copy)]
pub struct FeatureEdge {
    pub verts: [u32; 2],
    pub length: f64,
    pub reason: AcceptReason,
}

/// Accepted feature edges and the per-vertex sizes they induce.
#[derive(Debug, Clone)]
pub struct FeatureField {
    /// Edges that passed the angle/ratio conditions and the corner filter.
    pub edges: Vec<FeatureEdge>,
    /// Per-point feature size f: min accepted edge length; `INFINITY`
    /// where no accepted edge touches the point.
    pub feature_size: Vec<f64>,
    /// h_f = f / n_g.
    pub h_f: Vec<f64>,
    /// Points whose umbrella was empty (edges evaluated from the other
    /// endpoint only).
    pub empty_umbrella: Vec<u32>,
}

/// Compute poles, pole vectors and umbrellas for every point of the
/// complex.
pub fn compute_poles(complex: &DelaunayComplex) -> PoleData {
    let n = complex.points.len();

    // Outward hull-facet normals per hull point, for the unbounded case,
    // and per-facet outward directions for dual Voronoi rays.
    let per_point: Vec<(Pole, Vec3, Option<Vec3>, Vec<UmbrellaFacet>)> = (0..n)
        .into_par_iter()
        .map(|pi| {
            let p = complex.points[pi];
            let tets = complex.point_tets.row(pi);
            if tets.is_empty() {
                return (Pole::Unbounded, Vec3::ZERO, None, Vec::new());
            }

            // Pole: hull points take the average outward direction of their
            // hull facets; interior points the farthest incident
            // circumcenter (ties resolved to the lowest tet index by the
            // strictly-greater comparison over the ascending tet list).
            let (pole, v_p) = if complex.hull_point[pi] {
                let mut dir = Vec3::ZERO;
                for &t in tets {
                    for k in 0..4 {
                        if complex.neighbors[t as usize][k] != NONE {
                            continue;
                        }
                        let f = facet_vertices(complex, t as usize, k);
                        if !f.contains(&(pi as u32)) {
                            continue;
                        }
                        if let Some(d) = outward_facet_normal(complex, t as usize, k) {
                            dir += d;
                        }
                    }
                }
                let dir = dir.normalized().unwrap_or(Vec3::ZERO);
                (Pole::Unbounded, dir)
            } else {
                let mut best = f64::NEG_INFINITY;
                let mut best_c = Vec3::ZERO;
                for &t in tets {
                    let c = complex.circumcenters[t as usize];
                    let d = (c - p).norm2();
                    if d > best {
                        best = d;
                        best_c = c;
                    }
                }
                (Pole::Interior(best_c), best_c - p)
            };

            // Inner pole: farthest circumcenter on the other side of v_p.
            let mut inner: Option<(f64, Vec3)> = None;
            for &t in tets {
                let c = complex.circumcenters[t as usize];
                if (c - p).dot(v_p) < 0.0 {
                    let d = (c - p).norm2();
                    if inner.map_or(true, |(bd, _)| d > bd) {
                        inner = Some((d, c));
                    }
                }
            }

            // Umbrella: Delaunay facets at p whose dual Voronoi edge crosses
            // the plane through p with normal v_p.
            let mut umbrella = Vec::new();
            for &t in tets {
                let tv = complex.tets[t as usize];
                for k in 0..4 {
                    if tv[k] == pi as u32 {
                        continue; // facet opposite p does not contain p
                    }
                    let nb = complex.neighbors[t as usize][k];
                    // Each facet once: owned by the lower tet index.
                    if nb != NONE && nb < t {
                        continue;
                    }
                    let fv = facet_vertices(complex, t as usize, k);
                    let fp = fv.map(|v| complex.points[v as usize]);
                    let c1 = complex.circumcenters[t as usize];
                    let s1 = (c1 - p).dot(v_p);
                    let crosses = if nb == NONE {
                        // Unbounded dual edge: a ray from c1 in the outward
                        // facet direction.
                        match outward_facet_normal(complex, t as usize, k) {
                            Some(d) => {
                                let si = d.dot(v_p);
                                if si > 0.0 {
                                    s1 <= 0.0
                                } else if si < 0.0 {
                                    s1 >= 0.0
                                } else {
                                    s1 == 0.0
                                }
                            }
                            None => false,
                        }
                    } else {
                        let s2 = (complex.circumcenters[nb as usize] - p).dot(v_p);
                        (s1 <= 0.0 && s2 >= 0.0) || (s1 >= 0.0 && s2 <= 0.0)
                    };
                    if crosses {
                        if let Some(normal) = triangle_normal(fp[0], fp[1], fp[2]).normalized() {
                            umbrella.push(UmbrellaFacet {
                                normal,
                                circumradius: triangle_circumradius(fp[0], fp[1], fp[2]),
                            });
                        }
                    }
                }
            }
            (pole, v_p, inner.map(|(_, c)| c), umbrella)
        })
        .collect();

    let mut data = PoleData {
        pole: Vec::with_capacity(n),
        pole_vector: Vec::with_capacity(n),
        inner_pole: Vec::with_capacity(n),
        umbrellas: Vec::with_capacity(n),
        excluded: Vec::new(),
    };
    for (pi, (pole, v, inner, umb)) in per_point.into_iter().enumerate() {
        if complex.point_tets.row(pi).is_empty() {
            data.excluded.push(pi as u32);
        }
        data.pole.push(pole);
        data.pole_vector.push(v);
        data.inner_pole.push(inner);
        data.umbrellas.push(umb);
    }
    data
}

impl PoleData {
    /// Definition-based feature size: twice the distance from each point to
    /// its medial-axis approximation (the pole for interior points, the
    /// farthest inner-side Voronoi vertex for hull points). `INFINITY`
    /// where no pole is defined. This is a diagnostic of medial-axis
    /// quality; the sizing pipeline uses the edge-based
    /// [`FeatureField::feature_size`].
    pub fn definition_feature_size(&self, complex: &DelaunayComplex) -> Vec<f64> {
        (0..complex.points.len())
            .map(|pi| {
                let p = complex.points[pi];
                match self.pole[pi] {
                    Pole::Interior(c) => 2.0 * (c - p).norm(),
                    Pole::Unbounded => match self.inner_pole[pi] {
                        Some(c) => 2.0 * (c - p).norm(),
                        None => f64::INFINITY,
                    },
                }
            })
            .collect()
    }
}

/// Vertices of the face of tet `t` opposite corner `k`.
fn facet_vertices(complex: &DelaunayComplex, t: usize, k: usize) -> [u32; 3] {
    const FACE_VERTS: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];
    FACE_VERTS[k].map(|i| complex.tets[t][i])
}

/// Unit normal of the facet opposite corner `k` of tet `t`, oriented away
/// from that corner (outward for hull facets).
fn outward_facet_normal(complex: &DelaunayComplex, t: usize, k: usize) -> Option<Vec3> {
    let f = facet_vertices(complex, t, k).map(|v| complex.points[v as usize]);
    let apex = complex.points[complex.tets[t][k] as usize];
    let n = triangle_normal(f[0], f[1], f[2]).normalized()?;
    if n.dot(apex - f[0]) > 0.0 {
        Some(-n)
    } else {
        Some(n)
    }
}

/// Angle/ratio test of one directed edge against one umbrella. All angles
/// are unsigned angles between lines, so normal orientation is irrelevant.
pub fn edge_passes_umbrella(
    umbrella: &[UmbrellaFacet],
    dir: Vec3,
    length: f64,
    theta: f64,
    rho: f64,
) -> Option<AcceptReason> {
    if umbrella.is_empty() {
        return None;
    }
    // Angle condition: max_i angle(pq, n_i) < pi/2 - theta, i.e.
    // |dir . n_i| > sin(theta) for every umbrella facet.
    let sin_theta = theta.sin();
    if umbrella.iter().all(|f| dir.dot(f.normal).abs() > sin_theta) {
        return Some(AcceptReason::Angle);
    }
    // Ratio condition: max_i length / R_i > rho; degenerate facets
    // (infinite circumradius) are skipped.
    let r_min = umbrella
        .iter()
        .map(|f| f.circumradius)
        .filter(|r| r.is_finite())
        .fold(f64::INFINITY, f64::min);
    if r_min.is_finite() && length > rho * r_min {
        return Some(AcceptReason::Ratio);
    }
    None
}

/// Select Delaunay edges by the angle/ratio conditions evaluated at both
/// endpoints (either suffices). Returns candidate edges, before the corner
/// filter.
pub fn filter_feature_edges(
    complex: &DelaunayComplex,
    poles: &PoleData,
    theta: f64,
    rho: f64,
) -> (Vec<FeatureEdge>, Vec<u32>) {
    let empty_umbrella: Vec<u32> = (0..complex.points.len() as u32)
        .filter(|&pi| {
            poles.umbrellas[pi as usize].is_empty() && !complex.point_tets.row(pi as usize).is_empty()
        })
        .collect();

    let edges: Vec<Option<FeatureEdge>> = complex
        .edges
        .par_iter()
        .map(|&[a, b]| {
            let (pa, pb) = (complex.points[a as usize], complex.points[b as usize]);
            let dir = (pb - pa).normalized()?;
            let length = (pb - pa).norm();
            let reason = edge_passes_umbrella(&poles.umbrellas[a as usize], dir, length, theta, rho)
                .or_else(|| {
                    edge_passes_umbrella(&poles.umbrellas[b as usize], dir, length, theta, rho)
                })?;
            Some(FeatureEdge {
                verts: [a, b],
                length,
                reason,
            })
        })
        .collect();
    (edges.into_iter().flatten().collect(), empty_umbrella)
}

/// Remove edges that lean away from both endpoint surface normals by more
/// than `theta` (corner and angle branches of the medial axis).
pub fn corner_filter(edges: Vec<FeatureEdge>, complex: &DelaunayComplex, normals: &[Vec3], theta: f64) -> Vec<FeatureEdge> {
    let cos_theta = theta.cos();
    edges
        .into_iter()
        .filter(|e| {
            let (a, b) = (e.verts[0] as usize, e.verts[1] as usize);
            let dir = match (complex.points[b] - complex.points[a]).normalized() {
                Some(d) => d,
                None => return false,
            };
            dir.dot(normals[a]).abs() >= cos_theta && dir.dot(normals[b]).abs() >= cos_theta
        })
        .collect()
}

/// Per-vertex feature size (min accepted edge length) and feature meshsize
/// h_f = f / n_g. Rejects n_g < 1.
pub fn feature_meshsize(
    edges: &[FeatureEdge],
    n_points: usize,
    n_g: u32,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_g < 1 {
        return Err(Error::InvalidParameter(format!(
            "gap layer count n_g = {n_g} must be at least 1"
        )));
    }
    let mut f = vec![f64::INFINITY; n_points];
    for e in edges {
        for &v in &e.verts {
            let slot = &mut f[v as usize];
            if e.length < *slot {
                *slot = e.length;
            }
        }
    }
    let h_f = f.iter().map(|&fv| fv / n_g as f64).collect();
    Ok((f, h_f))
}

/// Full feature-size pipeline over a surface mesh and its Delaunay
/// complex. `normals` are the per-mesh-vertex normals (from the curvature
/// stage); they are mapped onto deduplicated complex points internally.
pub fn compute(
    mesh: &SurfaceMesh,
    complex: &DelaunayComplex,
    normals: &[Vec3],
    theta: f64,
    rho: f64,
    n_g: u32,
) -> Result<FeatureField> {
    let mut point_normals = vec![Vec3::ZERO; complex.points.len()];
    for (i, &n) in normals.iter().enumerate() {
        point_normals[complex.index_map[i] as usize] = n;
    }
    debug_assert_eq!(mesh.vertices.len(), normals.len());

    let poles = compute_poles(complex);
    let (candidates, empty_umbrella) = filter_feature_edges(complex, &poles, theta, rho);
    let edges = corner_filter(candidates, complex, &point_normals, theta);
    let (feature_size, h_f) = feature_meshsize(&edges, complex.points.len(), n_g)?;
    Ok(FeatureField {
        edges,
        feature_size,
        h_f,
        empty_umbrella,
    })
}

impl FeatureField {
    /// Map h_f from complex points back to input mesh vertices.
    pub fn meshsize_per_input_vertex(&self, complex: &DelaunayComplex) -> Vec<f64> {
        complex
            .index_map
            .iter()
            .map(|&ci| self.h_f[ci as usize])
            .collect()
    }

    /// Sampling-adequacy diagnostic: per constrained vertex, the ratio of
    /// its shortest incident surface edge to its feature size. Large
    /// ratios mean the surface sampling is too coarse for the gaps it
    /// bounds.
    pub fn sampling_ratios(&self, mesh: &SurfaceMesh, complex: &DelaunayComplex) -> Vec<f64> {
        let mut min_edge = vec![f64::INFINITY; mesh.vertices.len()];
        for &[a, b] in &mesh.edges {
            let l = (mesh.vertices[a as usize] - mesh.vertices[b as usize]).norm();
            for v in [a, b] {
                if l < min_edge[v as usize] {
                    min_edge[v as usize] = l;
                }
            }
        }
        let mut out = Vec::new();
        for (i, &me) in min_edge.iter().enumerate() {
            let f = self.feature_size[complex.index_map[i] as usize];
            if f.is_finite() && me.is_finite() {
                out.push(me / f);
            }
        }
        out
    }
}

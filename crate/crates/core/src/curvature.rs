//! Discrete curvature from per-face second-fundamental-form fits.
//!
//! The second fundamental form II is fitted on every triangle from the
//! finite differences of the vertex normals along its edges (6 equations,
//! 3 unknowns, least squares), then the per-face tensors are rotated into
//! a common tangent frame at each vertex and averaged. The maximum
//! absolute eigenvalue kappa_max drives the curvature meshsize
//! h_c = 2*pi / (kappa_max * n_d).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{sym2_eigenvalues, triangle_normal, Vec3};
use crate::mesh::SurfaceMesh;

/// Orthonormal in-plane frame of a triangle plus its unit normal.
#[derive(Debug, Clone, Copy)]
pub struct FaceFrame {
    pub u: Vec3,
    pub v: Vec3,
    pub n: Vec3,
}

/// Second fundamental form of one triangle in its own frame.
#[derive(Debug, Clone, Copy)]
pub struct FaceTensor {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub frame: FaceFrame,
    /// Residual norm of the 6x3 least-squares fit.
    pub residual: f64,
    /// False when the fit was rank-deficient (needle triangle) and the
    /// tensor must not enter vertex averages.
    pub reliable: bool,
}

/// Per-vertex curvature data over a surface mesh.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub normals: Vec<Vec3>,
    /// (e, f, g) of the averaged tensor in the local vertex frame.
    pub tensors: Vec<(f64, f64, f64)>,
    /// max(|kappa_1|, |kappa_2|) >= 0 per vertex.
    pub kappa_max: Vec<f64>,
    /// Curvature meshsize per vertex; `INFINITY` where unconstrained.
    pub h_c: Vec<f64>,
    /// Vertices whose normal came from the largest-face fallback.
    pub normal_fallbacks: Vec<u32>,
    /// Vertices with no reliable adjacent tensor (kappa forced to 0).
    pub unconstrained: Vec<u32>,
}

/// Unweighted average of adjacent face normals per vertex. When the sum
/// cancels (opposite winding around the vertex), falls back to the normal
/// of the largest adjacent face and records the vertex.
///
/// Unweighted averaging is deliberate (area weighting is the common
/// alternative; switching means skipping `normalized()` on the per-face
/// normals below, since the raw cross product carries the area weight).
pub fn vertex_normals(mesh: &SurfaceMesh) -> (Vec<Vec3>, Vec<u32>) {
    let face_normals: Vec<Vec3> = mesh
        .triangles
        .par_iter()
        .map(|t| {
            triangle_normal(
                mesh.vertices[t[0] as usize],
                mesh.vertices[t[1] as usize],
                mesh.vertices[t[2] as usize],
            )
        })
        .collect();

    let mut fallbacks = Vec::new();
    let normals: Vec<Vec3> = mesh
        .vertex_triangles
        .iter()
        .map(|tris| {
            let mut sum = Vec3::ZERO;
            for &ti in tris {
                if let Some(n) = face_normals[ti as usize].normalized() {
                    sum += n;
                }
            }
            sum
        })
        .collect();

    let normals = normals
        .into_iter()
        .enumerate()
        .map(|(vi, sum)| {
            if let Some(n) = sum.normalized() {
                n
            } else {
                fallbacks.push(vi as u32);
                // Largest-area adjacent face wins.
                let best = mesh.vertex_triangles[vi]
                    .iter()
                    .max_by(|&&a, &&b| {
                        face_normals[a as usize]
                            .norm2()
                            .total_cmp(&face_normals[b as usize].norm2())
                    })
                    .copied();
                best.and_then(|ti| face_normals[ti as usize].normalized())
                    .unwrap_or(vec3_z())
            }
        })
        .collect();
    (normals, fallbacks)
}

fn vec3_z() -> Vec3 {
    crate::geom::vec3(0.0, 0.0, 1.0)
}

/// Least-squares fit of II on one triangle from the normal differences
/// along its three edges.
pub fn face_fundamental_form(mesh: &SurfaceMesh, normals: &[Vec3], ti: usize) -> FaceTensor {
    let [p0, p1, p2] = mesh.triangle_points(ti);
    let t = mesh.triangles[ti];
    let n0 = normals[t[0] as usize];
    let n1 = normals[t[1] as usize];
    let n2 = normals[t[2] as usize];

    let n = triangle_normal(p0, p1, p2).normalized().unwrap_or(vec3_z());
    let u = (p1 - p0)
        .normalized()
        .unwrap_or_else(|| n.any_orthonormal())
        .normalized()
        .unwrap();
    // Re-orthogonalize against n (the edge may be slightly off-plane only
    // through rounding, but keep the frame exactly orthonormal).
    let u = (u - n * u.dot(n)).normalized().unwrap_or_else(|| n.any_orthonormal());
    let v = n.cross(u);
    let frame = FaceFrame { u, v, n };

    // Edge k from vertex i to vertex j: II * [E.u, E.v]^T = [dN.u, dN.v]^T.
    let edges = [(p1 - p0, n1 - n0), (p2 - p1, n2 - n1), (p0 - p2, n0 - n2)];
    let mut m = [[0.0f64; 3]; 3]; // normal matrix A^T A, unknowns (e, f, g)
    let mut rhs = [0.0f64; 3];
    let mut rows: Vec<([f64; 3], f64)> = Vec::with_capacity(6);
    for (edge, dn) in edges {
        let eu = edge.dot(u);
        let ev = edge.dot(v);
        rows.push(([eu, ev, 0.0], dn.dot(u)));
        rows.push(([0.0, eu, ev], dn.dot(v)));
    }
    for (a, b) in &rows {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += a[i] * a[j];
            }
            rhs[i] += a[i] * b;
        }
    }

    let (lmax, lmin) = sym3_extreme_eigenvalues(m);
    let reliable = lmin > 0.0 && lmax / lmin < 1e8;
    let sol = crate::geom::solve3(m, rhs, 0.0).unwrap_or([0.0; 3]);
    let mut residual = 0.0;
    for (a, b) in &rows {
        let r = a[0] * sol[0] + a[1] * sol[1] + a[2] * sol[2] - b;
        residual += r * r;
    }
    FaceTensor {
        e: sol[0],
        f: sol[1],
        g: sol[2],
        frame,
        residual: residual.sqrt(),
        reliable,
    }
}

/// Extreme eigenvalues (max, min) of a symmetric 3x3 matrix.
fn sym3_extreme_eigenvalues(m: [[f64; 3]; 3]) -> (f64, f64) {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let trace = m[0][0] + m[1][1] + m[2][2];
    if p1 == 0.0 {
        let d = [m[0][0], m[1][1], m[2][2]];
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        return (max, min);
    }
    let q = trace / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = m;
    for i in 0..3 {
        b[i][i] -= q;
    }
    let r = (crate::geom::det3(b) / (p * p * p) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    (e1, e3)
}

/// Rotate `v` about the unit axis by the angle whose cosine/sine are given.
fn rotate_about(v: Vec3, axis: Vec3, cos_a: f64, sin_a: f64) -> Vec3 {
    v * cos_a + axis.cross(v) * sin_a + axis * (axis.dot(v) * (1.0 - cos_a))
}

/// Average the face tensors around each vertex in that vertex's tangent
/// frame and extract kappa_max. `h_c` is left for [`curvature_meshsize`].
/// The average is unweighted, matching [`vertex_normals`]; a weighted
/// variant would scale each face contribution before the `1/count` fold.
pub fn vertex_curvature(
    mesh: &SurfaceMesh,
    normals: &[Vec3],
    face_tensors: &[FaceTensor],
) -> CurvatureField {
    struct PerVertex {
        tensor: (f64, f64, f64),
        kappa: f64,
        unconstrained: bool,
    }

    let per_vertex: Vec<PerVertex> = (0..mesh.vertices.len())
        .into_par_iter()
        .map(|vi| {
            let n_p = normals[vi];
            let u_p = n_p.any_orthonormal();
            let v_p = n_p.cross(u_p);
            let mut acc = (0.0, 0.0, 0.0);
            let mut count = 0usize;
            for &ti in &mesh.vertex_triangles[vi] {
                let ft = &face_tensors[ti as usize];
                if !ft.reliable {
                    continue;
                }
                let n_f = ft.frame.n;
                let dot = n_f.dot(n_p).clamp(-1.0, 1.0);
                let axis = n_f.cross(n_p);
                let axis_norm = axis.norm();
                let (u_f, v_f) = if axis_norm < 1e-8 {
                    if dot < 0.0 {
                        // Face normal opposes the vertex normal; no stable
                        // tilt exists, skip this contribution.
                        continue;
                    }
                    (ft.frame.u, ft.frame.v)
                } else {
                    let axis = axis / axis_norm;
                    let sin_a = axis_norm.min(1.0);
                    (
                        rotate_about(ft.frame.u, axis, dot, sin_a),
                        rotate_about(ft.frame.v, axis, dot, sin_a),
                    )
                };
                // Components of u_p, v_p in the tilted face frame.
                let a = (u_p.dot(u_f), u_p.dot(v_f));
                let b = (v_p.dot(u_f), v_p.dot(v_f));
                let ii = |x: (f64, f64), y: (f64, f64)| {
                    x.0 * (ft.e * y.0 + ft.f * y.1) + x.1 * (ft.f * y.0 + ft.g * y.1)
                };
                acc.0 += ii(a, a);
                acc.1 += ii(a, b);
                acc.2 += ii(b, b);
                count += 1;
            }
            if count == 0 {
                PerVertex {
                    tensor: (0.0, 0.0, 0.0),
                    kappa: 0.0,
                    unconstrained: true,
                }
            } else {
                let inv = 1.0 / count as f64;
                let t = (acc.0 * inv, acc.1 * inv, acc.2 * inv);
                let (k1, k2) = sym2_eigenvalues(t.0, t.1, t.2);
                PerVertex {
                    tensor: t,
                    kappa: k1.abs().max(k2.abs()),
                    unconstrained: false,
                }
            }
        })
        .collect();

    let mut field = CurvatureField {
        normals: normals.to_vec(),
        tensors: Vec::with_capacity(per_vertex.len()),
        kappa_max: Vec::with_capacity(per_vertex.len()),
        h_c: Vec::new(),
        normal_fallbacks: Vec::new(),
        unconstrained: Vec::new(),
    };
    for (vi, pv) in per_vertex.into_iter().enumerate() {
        field.tensors.push(pv.tensor);
        field.kappa_max.push(pv.kappa);
        if pv.unconstrained {
            field.unconstrained.push(vi as u32);
        }
    }
    field
}

/// h_c = 2*pi / (kappa_max * n_d); `INFINITY` where kappa_max = 0.
/// Rejects n_d < 3: a circle cannot be discretized by fewer than 3 nodes.
pub fn curvature_meshsize(kappa_max: &[f64], n_d: u32) -> Result<Vec<f64>> {
    if n_d < 3 {
        return Err(Error::InvalidParameter(format!(
            "node density n_d = {n_d} must be at least 3"
        )));
    }
    Ok(kappa_max
        .iter()
        .map(|&k| {
            if k > 0.0 {
                std::f64::consts::TAU / (k * n_d as f64)
            } else {
                f64::INFINITY
            }
        })
        .collect())
}

/// Full curvature pipeline: normals, per-face fits, vertex averaging,
/// meshsize.
pub fn compute(mesh: &SurfaceMesh, n_d: u32) -> Result<CurvatureField> {
    let (normals, fallbacks) = vertex_normals(mesh);
    let face_tensors: Vec<FaceTensor> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|ti| face_fundamental_form(mesh, &normals, ti))
        .collect();
    let mut field = vertex_curvature(mesh, &normals, &face_tensors);
    field.normal_fallbacks = fallbacks;
    field.h_c = curvature_meshsize(&field.kappa_max, n_d)?;
    Ok(field)
}

/// Dump per-vertex curvature as `x,y,z,kmax,hc` CSV for visualization.
pub fn write_csv(
    mesh: &SurfaceMesh,
    field: &CurvatureField,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "x,y,z,kmax,hc").map_err(|e| Error::io(path, e))?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.x, p.y, p.z, field.kappa_max[i], field.h_c[i]
        )
        .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

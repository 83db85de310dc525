//! Synthetic test geometries: spheres, cylinders, boxes, parallel plates.
//!
//! These exist for tests, benchmarks and demos; they are deliberately plain
//! generators with exact, reproducible coordinates.

use std::collections::HashMap;

use crate::geom::{vec3, Vec3};
use crate::mesh::SurfaceMesh;

/// Axis-aligned box as 12 triangles with outward winding.
pub fn box_mesh(min: Vec3, max: Vec3) -> SurfaceMesh {
    let (vertices, triangles) = box_data(min, max);
    SurfaceMesh::from_indexed(vertices, triangles).expect("box mesh is valid")
}

/// The unit cube `[0,1]^3`.
pub fn unit_cube() -> SurfaceMesh {
    box_mesh(Vec3::ZERO, vec3(1.0, 1.0, 1.0))
}

fn box_data(min: Vec3, max: Vec3) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let corners = [
        vec3(min.x, min.y, min.z),
        vec3(max.x, min.y, min.z),
        vec3(min.x, max.y, min.z),
        vec3(max.x, max.y, min.z),
        vec3(min.x, min.y, max.z),
        vec3(max.x, min.y, max.z),
        vec3(min.x, max.y, max.z),
        vec3(max.x, max.y, max.z),
    ];
    // Quads with outward CCW winding, split along one diagonal each.
    let quads: [[u32; 4]; 6] = [
        [0, 2, 3, 1], // z = min
        [4, 5, 7, 6], // z = max
        [0, 1, 5, 4], // y = min
        [2, 6, 7, 3], // y = max
        [0, 4, 6, 2], // x = min
        [1, 3, 7, 5], // x = max
    ];
    let mut triangles = Vec::with_capacity(12);
    for q in quads {
        triangles.push([q[0], q[1], q[2]]);
        triangles.push([q[0], q[2], q[3]]);
    }
    (corners.to_vec(), triangles)
}

/// Icosphere: icosahedron subdivided `subdivisions` times, vertices projected
/// onto the sphere of radius `radius` around the origin.
pub fn icosphere(subdivisions: u32, radius: f64) -> SurfaceMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        vec3(-1.0, phi, 0.0),
        vec3(1.0, phi, 0.0),
        vec3(-1.0, -phi, 0.0),
        vec3(1.0, -phi, 0.0),
        vec3(0.0, -1.0, phi),
        vec3(0.0, 1.0, phi),
        vec3(0.0, -1.0, -phi),
        vec3(0.0, 1.0, -phi),
        vec3(phi, 0.0, -1.0),
        vec3(phi, 0.0, 1.0),
        vec3(-phi, 0.0, -1.0),
        vec3(-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|v| v.normalized().unwrap())
    .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mid = |a: u32, b: u32, vertices: &mut Vec<Vec3>, cache: &mut HashMap<(u32, u32), u32>| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    let m = ((vertices[a as usize] + vertices[b as usize]) * 0.5)
                        .normalized()
                        .unwrap();
                    vertices.push(m);
                    (vertices.len() - 1) as u32
                })
            };
            let ab = mid(t[0], t[1], &mut vertices, &mut midpoints);
            let bc = mid(t[1], t[2], &mut vertices, &mut midpoints);
            let ca = mid(t[2], t[0], &mut vertices, &mut midpoints);
            next.push([t[0], ab, ca]);
            next.push([t[1], bc, ab]);
            next.push([t[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    SurfaceMesh::from_indexed(vertices, triangles).expect("icosphere is valid")
}

/// Open cylinder (tube) of given radius around the z axis, from z = 0 to
/// z = `height`, with `n_theta` x `n_z` quads, no caps.
pub fn cylinder(radius: f64, height: f64, n_theta: usize, n_z: usize) -> SurfaceMesh {
    assert!(n_theta >= 3 && n_z >= 1);
    let mut vertices = Vec::with_capacity(n_theta * (n_z + 1));
    for iz in 0..=n_z {
        let z = height * iz as f64 / n_z as f64;
        for it in 0..n_theta {
            let theta = std::f64::consts::TAU * it as f64 / n_theta as f64;
            vertices.push(vec3(radius * theta.cos(), radius * theta.sin(), z));
        }
    }
    let idx = |iz: usize, it: usize| (iz * n_theta + it % n_theta) as u32;
    let mut triangles = Vec::with_capacity(2 * n_theta * n_z);
    for iz in 0..n_z {
        for it in 0..n_theta {
            let (a, b) = (idx(iz, it), idx(iz, it + 1));
            let (c, d) = (idx(iz + 1, it + 1), idx(iz + 1, it));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    SurfaceMesh::from_indexed(vertices, triangles).expect("cylinder is valid")
}

/// Vertices of `cylinder` away from the open rims (candidates for analytic
/// curvature checks).
pub fn cylinder_interior_vertices(n_theta: usize, n_z: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for iz in 1..n_z {
        for it in 0..n_theta {
            out.push((iz * n_theta + it) as u32);
        }
    }
    out
}

/// A square n x n grid of vertices in the plane z = `z`, spanning
/// [0, width]^2, triangulated. Open sheet (not watertight by design).
pub fn grid_sheet(n: usize, width: f64, z: f64) -> SurfaceMesh {
    let (vertices, triangles) = grid_sheet_data(n, width, z, 0);
    SurfaceMesh::from_indexed(vertices, triangles).expect("sheet is valid")
}

fn grid_sheet_data(n: usize, width: f64, z: f64, base: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    assert!(n >= 2);
    let mut vertices = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            vertices.push(vec3(
                width * ix as f64 / (n - 1) as f64,
                width * iy as f64 / (n - 1) as f64,
                z,
            ));
        }
    }
    let idx = |ix: usize, iy: usize| base + (iy * n + ix) as u32;
    let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for iy in 0..n - 1 {
        for ix in 0..n - 1 {
            let (a, b) = (idx(ix, iy), idx(ix + 1, iy));
            let (c, d) = (idx(ix + 1, iy + 1), idx(ix, iy + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    (vertices, triangles)
}

/// Two parallel square sheets of side `width`: one at z = 0, one at
/// z = `gap`, each an n x n grid. The classic thin-gap test model.
pub fn parallel_plates(n: usize, width: f64, gap: f64) -> SurfaceMesh {
    let (mut vertices, mut triangles) = grid_sheet_data(n, width, 0.0, 0);
    let (top_v, top_t) = grid_sheet_data(n, width, gap, vertices.len() as u32);
    vertices.extend(top_v);
    triangles.extend(top_t);
    SurfaceMesh::from_indexed(vertices, triangles).expect("plates are valid")
}

/// Vertex indices of `parallel_plates` at least `margin` grid cells away
/// from the sheet borders, on both plates.
pub fn plate_interior_vertices(n: usize, margin: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for plate in 0..2 {
        let base = (plate * n * n) as u32;
        for iy in margin..n - margin {
            for ix in margin..n - margin {
                out.push(base + (iy * n + ix) as u32);
            }
        }
    }
    out
}

/// Box with each face subdivided into a grid of roughly `target_edge`
/// spacing, as a triangle soup (welded by the caller).
fn subdivided_box_soup(min: Vec3, max: Vec3, target_edge: f64, soup: &mut Vec<[Vec3; 3]>) {
    let ext = max - min;
    let divs = |len: f64| ((len / target_edge).ceil() as usize).max(1);
    let (nx, ny, nz) = (divs(ext.x), divs(ext.y), divs(ext.z));
    // One face at a time: u/v in cyclic order so u x v = +axis, making the
    // unflipped winding face +axis (outward on max faces).
    let mut face = |axis: usize, at: f64, flip: bool| {
        let (ua, va, nu, nv) = match axis {
            0 => (1, 2, ny, nz),
            1 => (2, 0, nz, nx),
            _ => (0, 1, nx, ny),
        };
        let point = |iu: usize, iv: usize| {
            let mut c = [0.0; 3];
            c[axis] = at;
            c[ua] = min.component(ua) + ext.component(ua) * iu as f64 / nu as f64;
            c[va] = min.component(va) + ext.component(va) * iv as f64 / nv as f64;
            vec3(c[0], c[1], c[2])
        };
        for iu in 0..nu {
            for iv in 0..nv {
                let (a, b, c, d) = (
                    point(iu, iv),
                    point(iu + 1, iv),
                    point(iu + 1, iv + 1),
                    point(iu, iv + 1),
                );
                if flip {
                    soup.push([a, c, b]);
                    soup.push([a, d, c]);
                } else {
                    soup.push([a, b, c]);
                    soup.push([a, c, d]);
                }
            }
        }
    };
    for axis in 0..3 {
        face(axis, min.component(axis), true);
        face(axis, max.component(axis), false);
    }
}

/// A rectangular base block with thin upright fins on top, separated by
/// narrow gaps, all faces grid-sampled. Flat everywhere (curvature-free),
/// so sizing near the fins is driven purely by feature detection; a handy
/// octree stress model.
pub fn finned_block() -> SurfaceMesh {
    let mut soup: Vec<[Vec3; 3]> = Vec::new();
    let sampling = 0.05;
    // Base: 1.0 x 0.6 x 0.2
    subdivided_box_soup(Vec3::ZERO, vec3(1.0, 0.6, 0.2), sampling, &mut soup);
    // Four fins, 0.04 thick, gaps of 0.1 between them.
    let fin_w = 0.04;
    let gap = 0.1;
    let mut x = 0.2;
    for _ in 0..4 {
        subdivided_box_soup(vec3(x, 0.1, 0.2), vec3(x + fin_w, 0.5, 0.45), sampling, &mut soup);
        x += fin_w + gap;
    }
    SurfaceMesh::from_triangle_soup(&soup).expect("finned block is valid")
}

/// Fin geometry of [`finned_block`] (thickness, gap width), for tests.
pub fn finned_block_fin_dimensions() -> (f64, f64) {
    (0.04, 0.1)
}

/// A sheet of near-equilateral triangles with uniform edge length `edge`
/// (staggered rows); every edge has length `edge` up to rounding.
pub fn equilateral_sheet(cols: usize, rows: usize, edge: f64) -> SurfaceMesh {
    assert!(cols >= 2 && rows >= 2);
    let dy = edge * 3f64.sqrt() / 2.0;
    let mut vertices = Vec::with_capacity(cols * rows);
    for j in 0..rows {
        for i in 0..cols {
            let x = edge * i as f64 + if j % 2 == 1 { edge * 0.5 } else { 0.0 };
            vertices.push(vec3(x, dy * j as f64, 0.0));
        }
    }
    let idx = |i: usize, j: usize| (j * cols + i) as u32;
    let mut triangles = Vec::new();
    for j in 0..rows - 1 {
        for i in 0..cols - 1 {
            let (a, b) = (idx(i, j), idx(i + 1, j));
            let (c, d) = (idx(i, j + 1), idx(i + 1, j + 1));
            if j % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([b, d, c]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            }
        }
    }
    SurfaceMesh::from_indexed(vertices, triangles).expect("sheet is valid")
}

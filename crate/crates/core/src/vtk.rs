//! Legacy-VTK (ASCII) unstructured-grid writers for inspection in
//! ParaView: octree leaves as voxels, Delaunay complexes as tets, feature
//! edges as line segments.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::delaunay::DelaunayComplex;
use crate::error::{Error, Result};
use crate::geom::{vec3, Vec3};
use crate::octree::SizeFieldOctree;

const VTK_LINE: u8 = 3;
const VTK_TETRA: u8 = 10;
const VTK_VOXEL: u8 = 11;

struct GridWriter {
    points: Vec<Vec3>,
    index: HashMap<[u64; 3], u32>,
    cells: Vec<Vec<u32>>,
    cell_types: Vec<u8>,
}

impl GridWriter {
    fn new() -> GridWriter {
        GridWriter {
            points: Vec::new(),
            index: HashMap::new(),
            cells: Vec::new(),
            cell_types: Vec::new(),
        }
    }

    fn point(&mut self, p: Vec3) -> u32 {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.index.entry(key).or_insert_with(|| {
            self.points.push(p);
            (self.points.len() - 1) as u32
        })
    }

    fn cell(&mut self, kind: u8, verts: Vec<u32>) {
        self.cells.push(verts);
        self.cell_types.push(kind);
    }

    fn write(
        &self,
        path: &Path,
        title: &str,
        cell_scalars: &[(&str, Vec<f64>)],
        cell_int_scalars: &[(&str, Vec<i64>)],
    ) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "# vtk DataFile Version 3.0").map_err(io)?;
        writeln!(w, "{title}").map_err(io)?;
        writeln!(w, "ASCII").map_err(io)?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID").map_err(io)?;
        writeln!(w, "POINTS {} double", self.points.len()).map_err(io)?;
        for p in &self.points {
            writeln!(w, "{} {} {}", p.x, p.y, p.z).map_err(io)?;
        }
        let total: usize = self.cells.iter().map(|c| c.len() + 1).sum();
        writeln!(w, "CELLS {} {}", self.cells.len(), total).map_err(io)?;
        for c in &self.cells {
            write!(w, "{}", c.len()).map_err(io)?;
            for v in c {
                write!(w, " {v}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        writeln!(w, "CELL_TYPES {}", self.cell_types.len()).map_err(io)?;
        for t in &self.cell_types {
            writeln!(w, "{t}").map_err(io)?;
        }
        if !cell_scalars.is_empty() || !cell_int_scalars.is_empty() {
            writeln!(w, "CELL_DATA {}", self.cells.len()).map_err(io)?;
            for (name, values) in cell_scalars {
                writeln!(w, "SCALARS {name} double 1").map_err(io)?;
                writeln!(w, "LOOKUP_TABLE default").map_err(io)?;
                for v in values {
                    writeln!(w, "{v}").map_err(io)?;
                }
            }
            for (name, values) in cell_int_scalars {
                writeln!(w, "SCALARS {name} int 1").map_err(io)?;
                writeln!(w, "LOOKUP_TABLE default").map_err(io)?;
                for v in values {
                    writeln!(w, "{v}").map_err(io)?;
                }
            }
        }
        w.flush().map_err(io)
    }
}

/// Octree leaves as voxel cells with `h` and `level` cell data.
pub fn write_octree(tree: &SizeFieldOctree, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut g = GridWriter::new();
    let mut h = Vec::new();
    let mut level = Vec::new();
    for id in tree.leaves() {
        let a = tree.anchor(id);
        let s = tree.side(id);
        let mut corners = [0u32; 8];
        for (k, c) in corners.iter_mut().enumerate() {
            let d = vec3(
                (k & 1) as f64 * s,
                ((k >> 1) & 1) as f64 * s,
                ((k >> 2) & 1) as f64 * s,
            );
            *c = g.point(a + d);
        }
        g.cell(VTK_VOXEL, corners.to_vec());
        h.push(tree.h(id));
        level.push(tree.level(id) as i64);
    }
    g.write(path, "size field octants", &[("h", h)], &[("level", level)])
}

/// Delaunay tetrahedra with their circumradius as cell data.
pub fn write_delaunay(complex: &DelaunayComplex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut g = GridWriter::new();
    for t in 0..complex.tets.len() {
        let verts = complex
            .tet_points(t)
            .map(|p| g.point(p))
            .to_vec();
        g.cell(VTK_TETRA, verts);
    }
    g.write(
        path,
        "delaunay complex",
        &[("circumradius", complex.circumradii.clone())],
        &[],
    )
}

/// Line segments (e.g. accepted feature edges), with an optional scalar.
pub fn write_segments(
    segments: &[(Vec3, Vec3)],
    scalar: Option<(&str, Vec<f64>)>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut g = GridWriter::new();
    for &(a, b) in segments {
        let ia = g.point(a);
        let ib = g.point(b);
        g.cell(VTK_LINE, vec![ia, ib]);
    }
    let scalars: Vec<(&str, Vec<f64>)> = scalar.into_iter().collect();
    g.write(path, "segments", &scalars, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::octree::SizeFieldParams;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("sizefield-vtk-{}-{}", std::process::id(), name));
        p
    }

    #[test]
    fn octree_export_counts() {
        let bbox = Aabb {
            min: Vec3::ZERO,
            max: vec3(1.0, 1.0, 1.0),
        };
        let mut params = SizeFieldParams::defaults_for(1.0);
        params.h_bulk = 0.4;
        let tree = SizeFieldOctree::init(&bbox, &params).unwrap();
        let path = tmp("leaves.vtk");
        write_octree(&tree, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let leaf_count = tree.leaf_count();
        assert!(text.contains(&format!("CELLS {leaf_count} ")));
        assert!(text.contains("SCALARS h double 1"));
        assert!(text.contains("SCALARS level int 1"));
        // Corner points are shared: a uniform 4^3 grid has 5^3 corners.
        assert!(text.contains(&format!("POINTS {} double", 5 * 5 * 5)));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn segments_export() {
        let path = tmp("segs.vtk");
        write_segments(
            &[(Vec3::ZERO, vec3(1.0, 0.0, 0.0)), (vec3(1.0, 0.0, 0.0), vec3(1.0, 1.0, 0.0))],
            Some(("len", vec![1.0, 1.0])),
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("CELLS 2 6"));
        assert!(text.contains("POINTS 3 double")); // shared middle point
        std::fs::remove_file(&path).ok();
    }
}

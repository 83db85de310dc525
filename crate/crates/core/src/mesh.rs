//! Indexed triangle surfaces: STL/OBJ loading, vertex welding, adjacency.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{triangle_area, vec3, Aabb, Vec3};

/// Relative vertex weld tolerance: duplicates in STL soups are exact or very
/// nearly so, and scaling by the bounding box keeps behaviour unit-free.
pub const WELD_TOLERANCE_REL: f64 = 1e-9;

/// Relative area threshold below which a triangle is dropped as degenerate.
const DEGENERATE_AREA_REL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    StlAscii,
    StlBinary,
    Obj,
}

/// Non-fatal observations from loading/validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshWarning {
    DegenerateTriangles(usize),
    DuplicateTriangles(usize),
    NotWatertight { boundary_edges: usize, nonmanifold_edges: usize },
    InconsistentWinding(usize),
}

impl fmt::Display for MeshWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshWarning::DegenerateTriangles(n) => {
                write!(f, "dropped {n} degenerate (zero-area) triangle(s)")
            }
            MeshWarning::DuplicateTriangles(n) => write!(f, "dropped {n} duplicate triangle(s)"),
            MeshWarning::NotWatertight {
                boundary_edges,
                nonmanifold_edges,
            } => write!(
                f,
                "surface is not watertight ({boundary_edges} boundary, {nonmanifold_edges} non-manifold edge(s))"
            ),
            MeshWarning::InconsistentWinding(n) => {
                write!(f, "{n} edge(s) with inconsistent triangle winding")
            }
        }
    }
}

/// A welded, indexed triangle mesh with adjacency.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// For each vertex, indices of incident triangles.
    pub vertex_triangles: Vec<Vec<u32>>,
    /// Unique undirected edges, each stored with the smaller index first.
    pub edges: Vec<[u32; 2]>,
    pub warnings: Vec<MeshWarning>,
}

impl SurfaceMesh {
    /// Load a triangulated surface, sniffing the format from the extension
    /// and file contents (`.stl` ascii or binary, `.obj`).
    pub fn load(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
        let path = path.as_ref();
        let format = sniff_format(path)?;
        Self::load_as(path, format)
    }

    pub fn load_as(path: impl AsRef<Path>, format: MeshFormat) -> Result<SurfaceMesh> {
        let path = path.as_ref();
        let soup = match format {
            MeshFormat::StlAscii => read_stl_ascii(path)?,
            MeshFormat::StlBinary => read_stl_binary(path)?,
            MeshFormat::Obj => return read_obj(path),
        };
        SurfaceMesh::from_triangle_soup(&soup)
    }

    /// Weld a raw triangle soup (three corner positions per triangle) into
    /// an indexed mesh. Winding is preserved from the input order.
    pub fn from_triangle_soup(soup: &[[Vec3; 3]]) -> Result<SurfaceMesh> {
        if soup.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let bbox = Aabb::from_points(soup.iter().flatten().copied());
        let scale = bbox.largest_dimension();
        let tol = WELD_TOLERANCE_REL * scale;

        let mut welder = Welder::new(tol);
        let mut triangles = Vec::with_capacity(soup.len());
        for tri in soup {
            triangles.push([
                welder.insert(tri[0]),
                welder.insert(tri[1]),
                welder.insert(tri[2]),
            ]);
        }
        SurfaceMesh::from_welded(welder.points, triangles)
    }

    /// Build from already-indexed data: welds coincident vertices, drops
    /// degenerate and duplicate triangles, and builds adjacency.
    pub fn from_indexed(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<SurfaceMesh> {
        if triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for t in &triangles {
            for &i in t {
                if i as usize >= vertices.len() {
                    return Err(Error::Invariant(format!(
                        "triangle index {i} out of range ({} vertices)",
                        vertices.len()
                    )));
                }
            }
        }
        let bbox = Aabb::from_points(vertices.iter().copied());
        let scale = bbox.largest_dimension();
        let tol = WELD_TOLERANCE_REL * scale;

        // Weld: map each original vertex to its representative.
        let mut welder = Welder::new(tol);
        let remap: Vec<u32> = vertices.iter().map(|&p| welder.insert(p)).collect();
        let triangles = triangles
            .iter()
            .map(|t| {
                [
                    remap[t[0] as usize],
                    remap[t[1] as usize],
                    remap[t[2] as usize],
                ]
            })
            .collect();
        SurfaceMesh::from_welded(welder.points, triangles)
    }

    fn from_welded(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<SurfaceMesh> {
        let bbox = Aabb::from_points(vertices.iter().copied());
        let scale = bbox.largest_dimension();
        let area_tol = DEGENERATE_AREA_REL * scale * scale;

        let mut warnings = Vec::new();
        let mut kept = Vec::with_capacity(triangles.len());
        let mut seen = HashMap::new();
        let mut dropped_degenerate = 0usize;
        let mut dropped_duplicate = 0usize;
        for &t in &triangles {
            let degenerate = t[0] == t[1]
                || t[1] == t[2]
                || t[0] == t[2]
                || triangle_area(
                    vertices[t[0] as usize],
                    vertices[t[1] as usize],
                    vertices[t[2] as usize],
                ) <= area_tol;
            if degenerate {
                dropped_degenerate += 1;
                continue;
            }
            let mut key = t;
            key.sort_unstable();
            if seen.insert(key, ()).is_some() {
                dropped_duplicate += 1;
                continue;
            }
            kept.push(t);
        }
        if dropped_degenerate > 0 {
            warnings.push(MeshWarning::DegenerateTriangles(dropped_degenerate));
        }
        if dropped_duplicate > 0 {
            warnings.push(MeshWarning::DuplicateTriangles(dropped_duplicate));
        }
        if kept.is_empty() {
            return Err(Error::AllDegenerate);
        }

        // Drop unreferenced vertices (weld leftovers, isolated points).
        let mut used = vec![false; vertices.len()];
        for t in &kept {
            for &i in t {
                used[i as usize] = true;
            }
        }
        let mut compact = vec![u32::MAX; vertices.len()];
        let mut final_vertices = Vec::with_capacity(vertices.len());
        for (i, (&u, &p)) in used.iter().zip(&vertices).enumerate() {
            if u {
                compact[i] = final_vertices.len() as u32;
                final_vertices.push(p);
            }
        }
        for t in &mut kept {
            for i in t.iter_mut() {
                *i = compact[*i as usize];
            }
        }

        let mut mesh = SurfaceMesh {
            vertices: final_vertices,
            triangles: kept,
            vertex_triangles: Vec::new(),
            edges: Vec::new(),
            warnings,
        };
        mesh.build_adjacency();
        mesh.check_manifoldness();
        Ok(mesh)
    }

    fn build_adjacency(&mut self) {
        let mut vt = vec![Vec::new(); self.vertices.len()];
        let mut edges = Vec::with_capacity(self.triangles.len() * 3 / 2);
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                vt[t[k] as usize].push(ti as u32);
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.push([a.min(b), a.max(b)]);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        self.vertex_triangles = vt;
        self.edges = edges;
    }

    fn check_manifoldness(&mut self) {
        // Count directed edge uses: a watertight, consistently wound surface
        // has every undirected edge used exactly twice, once per direction.
        let mut counts: HashMap<[u32; 2], (u32, u32)> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let entry = counts.entry(key).or_insert((0, 0));
                if a < b {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        let mut boundary = 0usize;
        let mut nonmanifold = 0usize;
        let mut miswound = 0usize;
        for &(fwd, rev) in counts.values() {
            let total = fwd + rev;
            match total {
                1 => boundary += 1,
                2 => {
                    if fwd != 1 {
                        miswound += 1;
                    }
                }
                _ => nonmanifold += 1,
            }
        }
        if boundary > 0 || nonmanifold > 0 {
            self.warnings.push(MeshWarning::NotWatertight {
                boundary_edges: boundary,
                nonmanifold_edges: nonmanifold,
            });
        }
        if miswound > 0 {
            self.warnings.push(MeshWarning::InconsistentWinding(miswound));
        }
    }

    /// Tight axis-aligned bounding box over the vertices.
    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    pub fn triangle_points(&self, ti: usize) -> [Vec3; 3] {
        let t = self.triangles[ti];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    /// Write as binary STL. STL stores 32-bit floats, so round trips are
    /// bit-exact once coordinates are f32-representable.
    pub fn write_stl_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut header = [0u8; 80];
        header[..7].copy_from_slice(b"sizefld");
        w.write_all(&header).map_err(|e| Error::io(path, e))?;
        w.write_all(&(self.triangles.len() as u32).to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
        for ti in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(ti);
            let n = crate::geom::triangle_normal(a, b, c)
                .normalized()
                .unwrap_or(Vec3::ZERO);
            let mut rec = [0u8; 50];
            let mut off = 0;
            for v in [n, a, b, c] {
                for comp in [v.x, v.y, v.z] {
                    rec[off..off + 4].copy_from_slice(&(comp as f32).to_le_bytes());
                    off += 4;
                }
            }
            w.write_all(&rec).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Write as Wavefront OBJ (positions and faces only).
    pub fn write_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z).map_err(|e| Error::io(path, e))?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Spatial-hash welder: maps points within `tol` of an already-inserted
/// point onto the existing index.
struct Welder {
    tol: f64,
    inv_cell: f64,
    grid: HashMap<[i64; 3], Vec<u32>>,
    points: Vec<Vec3>,
}

impl Welder {
    fn new(tol: f64) -> Welder {
        let cell = if tol > 0.0 { tol * 4.0 } else { 1.0 };
        Welder {
            tol,
            inv_cell: 1.0 / cell,
            grid: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn cell_of(&self, p: Vec3) -> [i64; 3] {
        [
            (p.x * self.inv_cell).floor() as i64,
            (p.y * self.inv_cell).floor() as i64,
            (p.z * self.inv_cell).floor() as i64,
        ]
    }

    fn insert(&mut self, p: Vec3) -> u32 {
        let c = self.cell_of(p);
        let tol2 = self.tol * self.tol;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let key = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if let Some(bucket) = self.grid.get(&key) {
                        for &idx in bucket {
                            if (self.points[idx as usize] - p).norm2() <= tol2 {
                                return idx;
                            }
                        }
                    }
                }
            }
        }
        let idx = self.points.len() as u32;
        self.points.push(p);
        self.grid.entry(c).or_default().push(idx);
        idx
    }
}

fn sniff_format(path: &Path) -> Result<MeshFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    if ext.as_deref() == Some("obj") {
        return Ok(MeshFormat::Obj);
    }
    // STL: binary files have an 80-byte header plus 50 bytes per facet;
    // "solid" prefixes are not reliable on their own.
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut head = [0u8; 84];
    let n = file.read(&mut head).map_err(|e| Error::io(path, e))?;
    if n >= 84 {
        let count = u32::from_le_bytes(head[80..84].try_into().unwrap()) as u64;
        if len == 84 + count * 50 {
            return Ok(MeshFormat::StlBinary);
        }
    }
    if head.starts_with(b"solid") {
        return Ok(MeshFormat::StlAscii);
    }
    Err(Error::parse(path, 0, "unrecognized mesh format"))
}

fn read_stl_ascii(path: &Path) -> Result<Vec<[Vec3; 3]>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut soup = Vec::new();
    let mut current: Vec<Vec3> = Vec::with_capacity(3);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    *c = tokens
                        .next()
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| Error::parse(path, lineno + 1, "bad vertex line"))?;
                }
                current.push(Vec3::from_array(coords));
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(Error::parse(
                        path,
                        lineno + 1,
                        format!("facet with {} vertices", current.len()),
                    ));
                }
                soup.push([current[0], current[1], current[2]]);
                current.clear();
            }
            _ => {}
        }
    }
    if !current.is_empty() {
        return Err(Error::parse(path, 0, "unterminated facet"));
    }
    Ok(soup)
}

fn read_stl_binary(path: &Path) -> Result<Vec<[Vec3; 3]>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = [0u8; 84];
    reader
        .read_exact(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let count = u32::from_le_bytes(header[80..84].try_into().unwrap()) as usize;
    let mut soup = Vec::with_capacity(count);
    let mut rec = [0u8; 50];
    for i in 0..count {
        reader.read_exact(&mut rec).map_err(|_| {
            Error::parse(path, 0, format!("truncated binary STL at facet {i} of {count}"))
        })?;
        let f = |off: usize| -> f64 {
            f32::from_le_bytes(rec[off..off + 4].try_into().unwrap()) as f64
        };
        // Skip the stored normal (offsets 0..12); recomputed when needed.
        soup.push([
            vec3(f(12), f(16), f(20)),
            vec3(f(24), f(28), f(32)),
            vec3(f(36), f(40), f(44)),
        ]);
    }
    Ok(soup)
}

fn read_obj(path: &Path) -> Result<SurfaceMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    *c = tokens
                        .next()
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| Error::parse(path, lineno + 1, "bad vertex line"))?;
                }
                vertices.push(Vec3::from_array(coords));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(4);
                for tok in tokens {
                    // "i", "i/t", "i/t/n", "i//n"; only the position index matters.
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad face index"))?;
                    let resolved = if i > 0 {
                        (i - 1) as usize
                    } else if i < 0 {
                        let n = vertices.len() as i64 + i;
                        if n < 0 {
                            return Err(Error::parse(path, lineno + 1, "negative index out of range"));
                        }
                        n as usize
                    } else {
                        return Err(Error::parse(path, lineno + 1, "face index 0"));
                    };
                    if resolved >= vertices.len() {
                        return Err(Error::parse(path, lineno + 1, "face index out of range"));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(path, lineno + 1, "face with < 3 vertices"));
                }
                // Fan-triangulate polygons.
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    SurfaceMesh::from_indexed(vertices, triangles)
}

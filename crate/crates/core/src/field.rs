//! The finished size field: point queries and a versioned binary file
//! format.
//!
//! Queries locate the leaf containing the point (top-down descent) and
//! return the first-order Taylor value `h_i + grad h . (x - x_c)`, clamped
//! to `[h_min, h_bulk]`. Points outside the root cube are clamped to its
//! boundary first, making the query a total function.
//!
//! The file layout is little-endian: magic, version, the five parameters,
//! the root cube, leaf records (level, h, gradient) in depth-first
//! z-order, and a trailing CRC32 over everything before it. Round trips
//! are bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::octree::{SizeFieldOctree, SizeFieldParams};

const MAGIC: &[u8; 8] = b"SIZEFLD\0";
const VERSION: u32 = 1;

/// A limited size field: balanced octree with cached gradients plus the
/// parameters it was built with.
#[derive(Debug, Clone)]
pub struct SizeField {
    pub tree: SizeFieldOctree,
    pub params: SizeFieldParams,
}

impl SizeField {
    pub fn new(tree: SizeFieldOctree, params: SizeFieldParams) -> SizeField {
        SizeField { tree, params }
    }

    /// Size at a point: Taylor expansion in the containing octant, clamped
    /// to `[h_min, h_bulk]`; out-of-domain points are clamped to the root
    /// cube boundary.
    pub fn query(&self, p: Vec3) -> f64 {
        let root = self.root_cube();
        let p = root.clamp(p);
        let leaf = self.tree.leaf_at(p);
        let c = self.tree.center(leaf);
        let g = self.tree.grad(leaf);
        let d = p - c;
        let h = self.tree.h(leaf) + g[0] * d.x + g[1] * d.y + g[2] * d.z;
        h.clamp(self.params.h_min, self.params.h_bulk)
    }

    /// Side length of the leaf containing `p` (quadrature granularity for
    /// metric lengths).
    pub fn leaf_side_at(&self, p: Vec3) -> f64 {
        let p = self.root_cube().clamp(p);
        self.tree.side(self.tree.leaf_at(p))
    }

    pub fn root_cube(&self) -> crate::geom::Aabb {
        crate::geom::Aabb {
            min: self.tree.root_anchor,
            max: self.tree.root_anchor
                + crate::geom::vec3(self.tree.root_side, self.tree.root_side, self.tree.root_side),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    /// Serialize to the versioned binary format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(64 + self.tree.leaf_count() * 33);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.params.h_bulk.to_le_bytes());
        buf.extend_from_slice(&self.params.h_min.to_le_bytes());
        buf.extend_from_slice(&self.params.node_density.to_le_bytes());
        buf.extend_from_slice(&self.params.gap_layers.to_le_bytes());
        buf.extend_from_slice(&self.params.gradation.to_le_bytes());
        for c in self.tree.root_anchor.to_array() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        buf.extend_from_slice(&self.tree.root_side.to_le_bytes());
        let leaves = self.tree.leaves();
        buf.extend_from_slice(&(leaves.len() as u64).to_le_bytes());
        for id in leaves {
            buf.push(self.tree.level(id));
            buf.extend_from_slice(&self.tree.h(id).to_le_bytes());
            for g in self.tree.grad(id) {
                buf.extend_from_slice(&g.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Load a field written by [`save`](Self::save). Rejects unknown
    /// versions, truncation, and checksum mismatches without partial
    /// results.
    pub fn load(path: impl AsRef<Path>) -> Result<SizeField> {
        let path = path.as_ref();
        let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut r = Reader {
            buf: &buf,
            pos: 0,
            path,
        };
        if r.take(8)? != MAGIC {
            return Err(Error::field_file(path, "bad magic (not a size field file)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::field_file(
                path,
                format!("unsupported version {version} (expected {VERSION})"),
            ));
        }
        if buf.len() < 4 {
            return Err(Error::field_file(path, "truncated file"));
        }
        let stored_crc = u32::from_le_bytes(buf[buf.len() - 4..].try_into().unwrap());
        let actual_crc = crc32fast::hash(&buf[..buf.len() - 4]);
        if stored_crc != actual_crc {
            return Err(Error::field_file(
                path,
                format!("checksum mismatch (stored {stored_crc:08x}, computed {actual_crc:08x})"),
            ));
        }

        let params = SizeFieldParams {
            h_bulk: r.f64()?,
            h_min: r.f64()?,
            node_density: r.u32()?,
            gap_layers: r.u32()?,
            gradation: r.f64()?,
            user_size: None,
        };
        let root_anchor = Vec3::from_array([r.f64()?, r.f64()?, r.f64()?]);
        let root_side = r.f64()?;
        let leaf_count = r.u64()? as usize;

        let mut records = Vec::with_capacity(leaf_count);
        for _ in 0..leaf_count {
            let level = r.u8()?;
            let h = r.f64()?;
            let grad = [r.f64()?, r.f64()?, r.f64()?];
            records.push((level, h, grad));
        }
        if r.pos != buf.len() - 4 {
            return Err(Error::field_file(path, "trailing bytes after leaf records"));
        }

        let mut tree = SizeFieldOctree::from_root(root_anchor, root_side);
        let mut cursor = 0usize;
        rebuild(&mut tree, 0, 0, &records, &mut cursor)
            .map_err(|m| Error::field_file(path, m))?;
        if cursor != records.len() {
            return Err(Error::field_file(path, "leaf records do not form a tree"));
        }
        Ok(SizeField { tree, params })
    }
}

/// Rebuild tree topology by consuming leaf records in depth-first z-order:
/// a record at the current level is this leaf; a deeper record means the
/// node splits.
fn rebuild(
    tree: &mut SizeFieldOctree,
    id: u32,
    level: u8,
    records: &[(u8, f64, [f64; 3])],
    cursor: &mut usize,
) -> std::result::Result<(), String> {
    let Some(&(rec_level, h, grad)) = records.get(*cursor) else {
        return Err("leaf records exhausted early".into());
    };
    if rec_level == level {
        *cursor += 1;
        tree.set_h(id, h);
        tree.set_grad(id, grad);
        Ok(())
    } else if rec_level > level {
        let children = tree.split(id);
        for child in children {
            rebuild(tree, child, level + 1, records, cursor)?;
        }
        Ok(())
    } else {
        Err(format!(
            "record level {rec_level} shallower than tree position {level}"
        ))
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::field_file(self.path, "truncated file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

//! Incremental Delaunay tetrahedrization with exact predicates.
//!
//! Construction is Bowyer-Watson insertion inside an enclosing shell of
//! ghost tetrahedra (one per hull facet, with a symbolic vertex at
//! infinity), removed when the complex is finalized. Conflict tests are
//! strict (a point exactly on a circumsphere does not conflict), which
//! together with exact predicate signs guarantees that every created
//! tetrahedron has strictly positive volume and that the final complex
//! satisfies the non-strict empty-circumsphere property on any input,
//! including grids and co-spherical configurations.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{solve3, tet_signed_volume, Vec3};
use crate::predicates::{incircle3d, insphere, orient3d};

pub const NONE: u32 = u32::MAX;
const GHOST: u32 = u32::MAX;

/// Vertices of the face opposite corner `k`, ordered so the face normal
/// points back toward corner `k` (inward).
const FACE_VERTS: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];

/// Compressed row storage for small per-item index lists.
#[derive(Debug, Clone, Default)]
pub struct Csr {
    pub offsets: Vec<u32>,
    pub data: Vec<u32>,
}

impl Csr {
    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    fn from_pairs(n_rows: usize, mut pairs: Vec<(u32, u32)>) -> Csr {
        pairs.sort_unstable();
        let mut offsets = vec![0u32; n_rows + 1];
        for &(r, _) in &pairs {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..n_rows {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            offsets,
            data: pairs.into_iter().map(|(_, v)| v).collect(),
        }
    }
}

/// A Delaunay tetrahedrization of a point set ("empty mesh"), with
/// circumcenters exposed as Voronoi vertices.
#[derive(Debug, Clone)]
pub struct DelaunayComplex {
    /// Deduplicated points.
    pub points: Vec<Vec3>,
    /// Maps each input point index to its index in `points`.
    pub index_map: Vec<u32>,
    /// Positively oriented tetrahedra.
    pub tets: Vec<[u32; 4]>,
    /// Neighbor across the face opposite each corner; `NONE` on hull facets.
    pub neighbors: Vec<[u32; 4]>,
    pub circumcenters: Vec<Vec3>,
    pub circumradii: Vec<f64>,
    /// Tets flagged as near-flat slivers (regularized circumcenter solve).
    pub sliver: Vec<bool>,
    /// Incident tets per point.
    pub point_tets: Csr,
    /// Unique Delaunay edges (smaller index first, sorted).
    pub edges: Vec<[u32; 2]>,
    /// Incident tets per edge, aligned with `edges`.
    pub edge_tets: Csr,
    /// True for points on the convex hull (unbounded Voronoi cell).
    pub hull_point: Vec<bool>,
}

impl DelaunayComplex {
    pub fn tet_points(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.points[v as usize])
    }

    /// Signed volume of tet `t` (positive by construction).
    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        tet_signed_volume(a, b, c, d)
    }

    /// Volume of the convex hull computed from the boundary facets by the
    /// divergence theorem; an algebraic cross-check against the sum of tet
    /// volumes.
    pub fn hull_volume(&self) -> f64 {
        let mut vol = 0.0;
        for t in 0..self.tets.len() {
            for k in 0..4 {
                if self.neighbors[t][k] == NONE {
                    let f = FACE_VERTS[k].map(|i| self.points[self.tets[t][i] as usize]);
                    // FACE_VERTS points inward; flip for the outward flux.
                    vol -= f[0].dot(f[1].cross(f[2])) / 6.0;
                }
            }
        }
        vol
    }
}

/// Circumcenter and circumradius of a tetrahedron. The boolean is the
/// sliver flag: volume below 1e-12 x (longest edge)^3, in which case the
/// linear system is regularized before solving.
pub fn circumcenter(p: [Vec3; 4]) -> (Vec3, f64, bool) {
    let [a, b, c, d] = p;
    let (u, v, w) = (b - a, c - a, d - a);
    let mut longest: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            longest = longest.max((p[i] - p[j]).norm2());
        }
    }
    let longest = longest.sqrt();
    let vol = tet_signed_volume(a, b, c, d).abs();
    let sliver = vol < 1e-12 * longest.powi(3);
    let mut m = [
        [2.0 * u.x, 2.0 * u.y, 2.0 * u.z],
        [2.0 * v.x, 2.0 * v.y, 2.0 * v.z],
        [2.0 * w.x, 2.0 * w.y, 2.0 * w.z],
    ];
    if sliver {
        let lambda = 1e-9 * longest;
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += lambda;
        }
    }
    let rhs = [u.norm2(), v.norm2(), w.norm2()];
    let x = solve3(m, rhs, 0.0).unwrap_or([0.0; 3]);
    let center = a + Vec3::from_array(x);
    (center, (center - a).norm(), sliver)
}

/// Delaunay tetrahedrization of a point set. Exact duplicates are merged
/// (see [`DelaunayComplex::index_map`]); fails when fewer than 4 distinct
/// points remain or all points are coplanar.
pub fn tetrahedralize(points: &[Vec3]) -> Result<DelaunayComplex> {
    // Bitwise dedup.
    let mut index_map = Vec::with_capacity(points.len());
    let mut dedup: Vec<Vec3> = Vec::with_capacity(points.len());
    let mut seen: HashMap<[u64; 3], u32> = HashMap::new();
    for p in points {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        let idx = *seen.entry(key).or_insert_with(|| {
            dedup.push(*p);
            (dedup.len() - 1) as u32
        });
        index_map.push(idx);
    }
    if dedup.len() < 4 {
        return Err(Error::TooFewPoints(dedup.len()));
    }
    let mut builder = Builder::new(dedup)?;
    builder.run()?;
    builder.finalize(index_map)
}

struct TetData {
    verts: [u32; 4],
    neighbors: [u32; 4],
}

struct Builder {
    points: Vec<Vec3>,
    tets: Vec<TetData>,
    alive: Vec<bool>,
    free: Vec<u32>,
    visit_stamp: Vec<u64>,
    conflict_stamp: Vec<u64>,
    stamp: u64,
    alive_count: usize,
    hint: u32,
    insertion_order: Vec<u32>,
}

impl Builder {
    fn new(points: Vec<Vec3>) -> Result<Builder> {
        Ok(Builder {
            insertion_order: shuffled_order(points.len()),
            points,
            tets: Vec::new(),
            alive: Vec::new(),
            free: Vec::new(),
            visit_stamp: Vec::new(),
            conflict_stamp: Vec::new(),
            stamp: 0,
            alive_count: 0,
            hint: 0,
        })
    }

    fn is_ghost(&self, t: u32) -> bool {
        self.tets[t as usize].verts[3] == GHOST
    }

    fn alloc(&mut self, verts: [u32; 4]) -> u32 {
        self.alive_count += 1;
        if let Some(idx) = self.free.pop() {
            self.tets[idx as usize] = TetData {
                verts,
                neighbors: [NONE; 4],
            };
            self.alive[idx as usize] = true;
            idx
        } else {
            self.tets.push(TetData {
                verts,
                neighbors: [NONE; 4],
            });
            self.alive.push(true);
            self.visit_stamp.push(0);
            self.conflict_stamp.push(0);
            (self.tets.len() - 1) as u32
        }
    }

    fn kill(&mut self, t: u32) {
        self.alive[t as usize] = false;
        self.alive_count -= 1;
        self.free.push(t);
    }

    fn point(&self, v: u32) -> Vec3 {
        self.points[v as usize]
    }

    /// Strict conflict test: exactly-on-sphere does not conflict.
    fn in_conflict(&self, t: u32, p: Vec3) -> bool {
        let verts = self.tets[t as usize].verts;
        if verts[3] == GHOST {
            let (a, b, c) = (self.point(verts[0]), self.point(verts[1]), self.point(verts[2]));
            match orient3d(a, b, c, p) {
                1 => true,
                0 => incircle3d(a, b, c, p) > 0,
                _ => false,
            }
        } else {
            let [a, b, c, d] = verts.map(|v| self.point(v));
            insphere(a, b, c, d, p) > 0
        }
    }

    /// Move GHOST (if present) to slot 3 while preserving the orientation
    /// class of the 4-tuple.
    fn canonical(mut verts: [u32; 4]) -> [u32; 4] {
        if let Some(gpos) = verts.iter().position(|&v| v == GHOST) {
            let mut swaps = 0;
            for i in gpos..3 {
                verts.swap(i, i + 1);
                swaps += 1;
            }
            if swaps % 2 == 1 {
                verts.swap(0, 1);
            }
        }
        verts
    }

    /// Initial tet from 4 affinely independent points plus its 4 ghosts.
    fn bootstrap(&mut self) -> Result<[u32; 4]> {
        let n = self.points.len();
        let i0 = 0u32;
        let i1 = 1u32; // distinct after dedup
        let p0 = self.point(i0);
        let p1 = self.point(i1);
        // Farthest-from-collinear third point by float area, validated by
        // the exact orientation test through the fourth-point search.
        let mut i2 = NONE;
        let mut best = 0.0;
        for i in 2..n as u32 {
            let a = (p1 - p0).cross(self.point(i) - p0).norm2();
            if a > best {
                best = a;
                i2 = i;
            }
        }
        if i2 == NONE {
            return Err(Error::CoplanarPoints);
        }
        let p2 = self.point(i2);
        let mut i3 = NONE;
        let mut orient = 0i8;
        for i in 2..n as u32 {
            if i == i2 {
                continue;
            }
            orient = orient3d(p0, p1, p2, self.point(i));
            if orient != 0 {
                i3 = i;
                break;
            }
        }
        if i3 == NONE {
            return Err(Error::CoplanarPoints);
        }
        let first = if orient > 0 {
            [i0, i1, i2, i3]
        } else {
            [i1, i0, i2, i3]
        };
        let t0 = self.alloc(first);
        // One ghost per face, hull facet oriented outward (reverse of the
        // inward-facing FACE_VERTS order).
        let mut ghosts = [NONE; 4];
        for k in 0..4 {
            let f = FACE_VERTS[k].map(|i| first[i]);
            let g = self.alloc([f[2], f[1], f[0], GHOST]);
            self.tets[g as usize].neighbors[3] = t0;
            self.tets[t0 as usize].neighbors[k] = g;
            ghosts[k] = g;
        }
        // Stitch ghost-to-ghost side faces (each tet edge appears in two
        // ghosts).
        let mut edge_map: HashMap<[u32; 2], (u32, usize)> = HashMap::new();
        for &g in &ghosts {
            let verts = self.tets[g as usize].verts;
            for k in 0..3 {
                let f = FACE_VERTS[k].map(|i| verts[i]);
                let mut fin: Vec<u32> = f.iter().copied().filter(|&v| v != GHOST).collect();
                fin.sort_unstable();
                let key = [fin[0], fin[1]];
                if let Some((og, ok)) = edge_map.insert(key, (g, k)) {
                    self.tets[g as usize].neighbors[k] = og;
                    self.tets[og as usize].neighbors[ok] = g;
                }
            }
        }
        self.hint = t0;
        Ok(first)
    }

    /// Find some tet in conflict with `p`: a visibility walk through finite
    /// tets, with a linear scan as the safety net.
    fn locate_conflict(&self, p: Vec3) -> Result<u32> {
        let mut cur = self.hint;
        if !self.alive[cur as usize] {
            cur = (0..self.tets.len() as u32)
                .find(|&t| self.alive[t as usize] && !self.is_ghost(t))
                .ok_or_else(|| Error::Invariant("no alive tets".into()))?;
        }
        if self.is_ghost(cur) {
            if self.in_conflict(cur, p) {
                return Ok(cur);
            }
            cur = self.tets[cur as usize].neighbors[3];
        }
        let max_steps = 4 * self.alive_count + 64;
        let mut steps = 0;
        'walk: loop {
            steps += 1;
            if steps > max_steps {
                break;
            }
            let verts = self.tets[cur as usize].verts;
            for k in 0..4 {
                let f = FACE_VERTS[k].map(|i| self.point(verts[i]));
                // FACE_VERTS points inward; p strictly outside face k when
                // the orientation is negative.
                if orient3d(f[0], f[1], f[2], p) < 0 {
                    let next = self.tets[cur as usize].neighbors[k];
                    if self.is_ghost(next) {
                        debug_assert!(self.in_conflict(next, p));
                        return Ok(next);
                    }
                    cur = next;
                    continue 'walk;
                }
            }
            // p is inside the closure of `cur`: guaranteed conflict.
            debug_assert!(self.in_conflict(cur, p));
            return Ok(cur);
        }
        // Degenerate walk; fall back to scanning.
        for t in 0..self.tets.len() as u32 {
            if self.alive[t as usize] && self.in_conflict(t, p) {
                return Ok(t);
            }
        }
        Err(Error::Invariant(
            "point conflicts with no tet (duplicate point?)".into(),
        ))
    }

    fn insert(&mut self, pi: u32) -> Result<()> {
        let p = self.point(pi);
        let seed = self.locate_conflict(p)?;
        self.stamp += 1;
        let stamp = self.stamp;

        // Grow the conflict cavity.
        let mut cavity = vec![seed];
        let mut boundary: Vec<(u32, usize)> = Vec::new();
        self.visit_stamp[seed as usize] = stamp;
        self.conflict_stamp[seed as usize] = stamp;
        let mut head = 0;
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            for k in 0..4 {
                let n = self.tets[t as usize].neighbors[k];
                debug_assert_ne!(n, NONE);
                if self.visit_stamp[n as usize] != stamp {
                    self.visit_stamp[n as usize] = stamp;
                    if self.in_conflict(n, p) {
                        self.conflict_stamp[n as usize] = stamp;
                        cavity.push(n);
                    }
                }
                // The neighbor was just visited (or earlier this stamp), so
                // its conflict status is final: boundary records are stable.
                if self.conflict_stamp[n as usize] != stamp {
                    boundary.push((t, k));
                }
            }
        }

        // Retriangulate: one new tet per boundary face.
        let mut link: HashMap<[u32; 2], (u32, usize)> = HashMap::new();
        let mut last_finite = NONE;
        for &(t, k) in &boundary {
            let tv = self.tets[t as usize].verts;
            let f = FACE_VERTS[k].map(|i| tv[i]);
            let outside = self.tets[t as usize].neighbors[k];
            let verts = Self::canonical([f[0], f[1], f[2], pi]);
            let nt = self.alloc(verts);
            if verts[3] != GHOST {
                last_finite = nt;
                debug_assert!(
                    {
                        let [a, b, c, d] = verts.map(|v| self.point(v));
                        orient3d(a, b, c, d) > 0
                    },
                    "new tet must be positively oriented"
                );
            }
            // Face opposite p glues to the outside tet.
            let p_slot = verts.iter().position(|&v| v == pi).unwrap();
            self.tets[nt as usize].neighbors[p_slot] = outside;
            let back = self.tets[outside as usize]
                .neighbors
                .iter()
                .position(|&x| x == t)
                .ok_or_else(|| Error::Invariant("broken adjacency at cavity boundary".into()))?;
            self.tets[outside as usize].neighbors[back] = nt;
            // Faces containing p link new tets to each other across the
            // boundary-face edges.
            for k2 in 0..4 {
                if k2 == p_slot {
                    continue;
                }
                let mut pair: Vec<u32> = FACE_VERTS[k2]
                    .map(|i| verts[i])
                    .into_iter()
                    .filter(|&v| v != pi)
                    .collect();
                debug_assert_eq!(pair.len(), 2);
                pair.sort_unstable();
                let key = [pair[0], pair[1]];
                if let Some((ot, ok)) = link.insert(key, (nt, k2)) {
                    self.tets[nt as usize].neighbors[k2] = ot;
                    self.tets[ot as usize].neighbors[ok] = nt;
                }
            }
        }
        for t in cavity {
            self.kill(t);
        }
        if last_finite != NONE {
            self.hint = last_finite;
        }
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        let first = self.bootstrap()?;
        let order = std::mem::take(&mut self.insertion_order);
        for &pi in &order {
            if first.contains(&pi) {
                continue;
            }
            self.insert(pi)?;
        }
        Ok(())
    }

    fn finalize(self, index_map: Vec<u32>) -> Result<DelaunayComplex> {
        let mut remap = vec![NONE; self.tets.len()];
        let mut tets = Vec::new();
        let mut old_ids = Vec::new();
        for (i, td) in self.tets.iter().enumerate() {
            if self.alive[i] && td.verts[3] != GHOST {
                remap[i] = tets.len() as u32;
                tets.push(td.verts);
                old_ids.push(i);
            }
        }
        if tets.is_empty() {
            return Err(Error::Invariant("empty tetrahedrization".into()));
        }
        let neighbors: Vec<[u32; 4]> = old_ids
            .iter()
            .map(|&i| {
                self.tets[i].neighbors.map(|n| {
                    if n == NONE || self.tets[n as usize].verts[3] == GHOST {
                        NONE
                    } else {
                        remap[n as usize]
                    }
                })
            })
            .collect();

        let mut circumcenters = Vec::with_capacity(tets.len());
        let mut circumradii = Vec::with_capacity(tets.len());
        let mut sliver = Vec::with_capacity(tets.len());
        for t in &tets {
            let (c, r, s) = circumcenter(t.map(|v| self.points[v as usize]));
            circumcenters.push(c);
            circumradii.push(r);
            sliver.push(s);
        }

        let n_points = self.points.len();
        let mut pt_pairs = Vec::with_capacity(tets.len() * 4);
        for (ti, t) in tets.iter().enumerate() {
            for &v in t {
                pt_pairs.push((v, ti as u32));
            }
        }
        let point_tets = Csr::from_pairs(n_points, pt_pairs);

        // Edge list plus incident tets.
        let mut edge_occ: Vec<([u32; 2], u32)> = Vec::with_capacity(tets.len() * 6);
        for (ti, t) in tets.iter().enumerate() {
            for i in 0..4 {
                for j in i + 1..4 {
                    let (a, b) = (t[i].min(t[j]), t[i].max(t[j]));
                    edge_occ.push(([a, b], ti as u32));
                }
            }
        }
        edge_occ.sort_unstable();
        let mut edges = Vec::new();
        let mut offsets = vec![0u32];
        let mut data = Vec::with_capacity(edge_occ.len());
        for (e, t) in edge_occ {
            if edges.last() != Some(&e) {
                edges.push(e);
                offsets.push(*offsets.last().unwrap());
            }
            data.push(t);
            *offsets.last_mut().unwrap() += 1;
        }
        let edge_tets = Csr { offsets, data };

        let mut hull_point = vec![false; n_points];
        for (ti, ns) in neighbors.iter().enumerate() {
            for k in 0..4 {
                if ns[k] == NONE {
                    for i in FACE_VERTS[k] {
                        hull_point[tets[ti][i] as usize] = true;
                    }
                }
            }
        }

        Ok(DelaunayComplex {
            points: self.points,
            index_map,
            tets,
            neighbors,
            circumcenters,
            circumradii,
            sliver,
            point_tets,
            edges,
            edge_tets,
            hull_point,
        })
    }
}

/// Deterministic shuffle of 0..n (fixed-seed splitmix64): randomized
/// insertion order without run-to-run variation.
fn shuffled_order(n: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (n as u64);
    let mut next = || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    for i in (1..order.len()).rev() {
        let j = (next() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    /// Plain f64 circumsphere test, independent of the predicates module:
    /// positive when `e` is inside the circumsphere of the positively
    /// oriented tet, scaled magnitude for tolerancing.
    fn naive_insphere(p: [Vec3; 4], e: Vec3) -> (f64, f64) {
        let rows: Vec<[f64; 4]> = p
            .iter()
            .map(|&q| {
                let d = q - e;
                [d.x, d.y, d.z, d.norm2()]
            })
            .collect();
        let minor3 = |r: [&[f64; 4]; 3], cols: [usize; 3]| -> f64 {
            let m = [
                [r[0][cols[0]], r[0][cols[1]], r[0][cols[2]]],
                [r[1][cols[0]], r[1][cols[1]], r[1][cols[2]]],
                [r[2][cols[0]], r[2][cols[1]], r[2][cols[2]]],
            ];
            crate::geom::det3(m)
        };
        let mut det = 0.0;
        let mut mag = 0.0;
        for i in 0..4 {
            let others: Vec<&[f64; 4]> = (0..4).filter(|&j| j != i).map(|j| &rows[j]).collect();
            let m = minor3([others[0], others[1], others[2]], [0, 1, 2]);
            let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
            det += sign * rows[i][3] * m;
            mag += rows[i][3].abs() * m.abs();
        }
        // Negative det means "inside" for a positively oriented tet in this
        // row layout; flip so positive = inside.
        (-det, mag)
    }

    fn check_empty_spheres(dt: &DelaunayComplex, rel_tol: f64) -> usize {
        let mut violations = 0;
        for (ti, t) in dt.tets.iter().enumerate() {
            let tp = dt.tet_points(ti);
            for (pi, &p) in dt.points.iter().enumerate() {
                if t.contains(&(pi as u32)) {
                    continue;
                }
                let (det, mag) = naive_insphere(tp, p);
                if det > rel_tol * mag.max(f64::MIN_POSITIVE) {
                    violations += 1;
                }
            }
        }
        violations
    }

    /// Brute-force Delaunay: all 4-subsets whose circumsphere is strictly
    /// empty of all other points. For points in general position this is
    /// exactly the Delaunay tet set.
    fn brute_force_tets(points: &[Vec3], rel_tol: f64) -> Vec<[usize; 4]> {
        let n = points.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        let mut tp = [points[i], points[j], points[k], points[l]];
                        let vol = tet_signed_volume(tp[0], tp[1], tp[2], tp[3]);
                        let scale = (tp[0] - tp[3]).norm().max((tp[1] - tp[3]).norm());
                        if vol.abs() < 1e-12 * scale.powi(3) {
                            continue;
                        }
                        if vol < 0.0 {
                            tp.swap(0, 1);
                        }
                        let empty = points.iter().enumerate().all(|(m, &p)| {
                            if [i, j, k, l].contains(&m) {
                                return true;
                            }
                            let (det, mag) = naive_insphere(tp, p);
                            det <= rel_tol * mag.max(f64::MIN_POSITIVE)
                        });
                        if empty {
                            out.push([i, j, k, l]);
                        }
                    }
                }
            }
        }
        out
    }

    fn rng_points(seed: u64, n: usize) -> Vec<Vec3> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| vec3(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
            .collect()
    }

    fn structural_check(dt: &DelaunayComplex) {
        for t in 0..dt.tets.len() {
            assert!(dt.tet_volume(t) > 0.0, "tet {t} not positively oriented");
            for k in 0..4 {
                let n = dt.neighbors[t][k];
                if n == NONE {
                    continue;
                }
                let back = dt.neighbors[n as usize]
                    .iter()
                    .filter(|&&x| x == t as u32)
                    .count();
                assert_eq!(back, 1, "asymmetric adjacency {t} <-> {n}");
            }
        }
    }

    #[test]
    fn four_points_one_tet() {
        let dt = tetrahedralize(&[
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(dt.tets.len(), 1);
        assert_eq!(dt.edges.len(), 6);
        assert!(dt.hull_point.iter().all(|&h| h));
        structural_check(&dt);
    }

    #[test]
    fn cube_corners() {
        let mut pts = Vec::new();
        for z in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for x in [0.0, 1.0] {
                    pts.push(vec3(x, y, z));
                }
            }
        }
        let dt = tetrahedralize(&pts).unwrap();
        assert!(
            dt.tets.len() == 5 || dt.tets.len() == 6,
            "cube split into {} tets",
            dt.tets.len()
        );
        assert_eq!(check_empty_spheres(&dt, 1e-9), 0);
        let volume: f64 = (0..dt.tets.len()).map(|t| dt.tet_volume(t)).sum();
        assert!((volume - 1.0).abs() < 1e-12);
        assert!((dt.hull_volume() - 1.0).abs() < 1e-12);
        structural_check(&dt);
    }

    #[test]
    fn coplanar_rejected() {
        let pts: Vec<Vec3> = (0..10)
            .map(|i| vec3(i as f64, (i * i) as f64, 0.0))
            .collect();
        assert!(matches!(tetrahedralize(&pts), Err(Error::CoplanarPoints)));
    }

    #[test]
    fn duplicates_deduplicated() {
        let mut pts = vec![
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ];
        pts.push(pts[2]);
        pts.push(pts[0]);
        let dt = tetrahedralize(&pts).unwrap();
        assert_eq!(dt.points.len(), 4);
        assert_eq!(dt.index_map, vec![0, 1, 2, 3, 2, 0]);
    }

    #[test]
    fn random_points_empty_spheres() {
        for seed in 0..8 {
            let pts = rng_points(seed, 40);
            let dt = tetrahedralize(&pts).unwrap();
            assert_eq!(check_empty_spheres(&dt, 1e-9), 0, "seed {seed}");
            structural_check(&dt);
        }
    }

    #[test]
    fn matches_brute_force() {
        for (seed, n) in [(11u64, 14), (12, 20), (13, 26), (14, 32)] {
            let pts = rng_points(seed, n);
            let dt = tetrahedralize(&pts).unwrap();
            let brute = brute_force_tets(&pts, 1e-9);
            assert_eq!(dt.tets.len(), brute.len(), "seed {seed} n {n}");
            let vol: f64 = (0..dt.tets.len()).map(|t| dt.tet_volume(t)).sum();
            let bvol: f64 = brute
                .iter()
                .map(|&[i, j, k, l]| {
                    tet_signed_volume(pts[i], pts[j], pts[k], pts[l]).abs()
                })
                .sum();
            assert!((vol - bvol).abs() <= 1e-9 * bvol, "volumes {vol} vs {bvol}");
        }
    }

    #[test]
    fn volume_conservation_against_hull() {
        for seed in [21u64, 22, 23] {
            let pts = rng_points(seed, 60);
            let dt = tetrahedralize(&pts).unwrap();
            let vol: f64 = (0..dt.tets.len()).map(|t| dt.tet_volume(t)).sum();
            let hull = dt.hull_volume();
            assert!((vol - hull).abs() <= 1e-9 * hull, "{vol} vs {hull}");
        }
    }

    #[test]
    fn insertion_order_independent_edges() {
        let pts = rng_points(31, 50);
        let mut perm = pts.clone();
        perm.reverse();
        let a = tetrahedralize(&pts).unwrap();
        let b = tetrahedralize(&perm).unwrap();
        // Compare edge sets through original coordinates.
        let key = |dt: &DelaunayComplex, e: [u32; 2]| {
            let (p, q) = (dt.points[e[0] as usize], dt.points[e[1] as usize]);
            let mut k = [
                [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()],
                [q.x.to_bits(), q.y.to_bits(), q.z.to_bits()],
            ];
            k.sort_unstable();
            k
        };
        let mut ea: Vec<_> = a.edges.iter().map(|&e| key(&a, e)).collect();
        let mut eb: Vec<_> = b.edges.iter().map(|&e| key(&b, e)).collect();
        ea.sort_unstable();
        eb.sort_unstable();
        assert_eq!(ea, eb);
    }

    #[test]
    fn grid_points_valid() {
        // Highly degenerate: a 4x4x2 lattice (cocircular, cospherical
        // everywhere). Strict conflicts + exact predicates must survive.
        let mut pts = Vec::new();
        for z in [0.0, 1.0] {
            for y in 0..4 {
                for x in 0..4 {
                    pts.push(vec3(x as f64, y as f64, z));
                }
            }
        }
        let dt = tetrahedralize(&pts).unwrap();
        structural_check(&dt);
        assert_eq!(check_empty_spheres(&dt, 1e-9), 0);
        let vol: f64 = (0..dt.tets.len()).map(|t| dt.tet_volume(t)).sum();
        assert!((vol - 9.0).abs() < 1e-9, "lattice hull volume {vol}");
    }

    #[test]
    fn circumcenter_examples() {
        // Regular tetrahedron centered at the origin.
        let (c, r, sliver) = circumcenter([
            vec3(1.0, 1.0, 1.0),
            vec3(1.0, -1.0, -1.0),
            vec3(-1.0, 1.0, -1.0),
            vec3(-1.0, -1.0, 1.0),
        ]);
        assert!(c.norm() < 1e-12);
        assert!((r - 3f64.sqrt()).abs() < 1e-12);
        assert!(!sliver);

        // Right-corner tet: center at (1/2, 1/2, 1/2), radius sqrt(3)/2.
        let (c, r, _) = circumcenter([
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ]);
        assert!((c - vec3(0.5, 0.5, 0.5)).norm() < 1e-12);
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-12);

        // Translation equivariance.
        let t = vec3(5.0, -3.0, 2.0);
        let base = [
            vec3(0.1, 0.2, 0.3),
            vec3(1.3, 0.1, 0.2),
            vec3(0.4, 1.1, 0.1),
            vec3(0.2, 0.3, 1.4),
        ];
        let (c0, r0, _) = circumcenter(base);
        let (c1, r1, _) = circumcenter(base.map(|p| p + t));
        assert!((c1 - (c0 + t)).norm() < 1e-9);
        assert!((r1 - r0).abs() < 1e-9);
    }

    #[test]
    fn circumcenter_equidistance() {
        let pts = rng_points(41, 30);
        let dt = tetrahedralize(&pts).unwrap();
        for t in 0..dt.tets.len() {
            if dt.sliver[t] {
                continue;
            }
            let c = dt.circumcenters[t];
            let r = dt.circumradii[t];
            for p in dt.tet_points(t) {
                assert!(((p - c).norm() - r).abs() <= 1e-9 * r.max(1.0));
            }
        }
    }

    #[test]
    fn near_flat_tet_flagged_sliver() {
        let (_, _, sliver) = circumcenter([
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.5, 0.5, 1e-14),
        ]);
        assert!(sliver);
    }
}

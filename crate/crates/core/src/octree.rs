//! The size-field octree: a cube of nested octants carrying sizes.
//!
//! The root cube is the surface bounding box stretched by 1.5 and made
//! cubic, so octant sides are exact dyadic fractions of the root side.
//! Octants are refined until the refinement bound
//! `side <= max(h_min, min(h_c, h_f, h_u, h_bulk))` holds against the
//! triangles each octant intersects (R-tree lookup), then face-balanced to
//! a 2:1 level ratio. Leaves store the size h and, after limiting, its
//! gradient.

use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::{vec3, Aabb, Vec3};
use crate::mesh::SurfaceMesh;
use crate::rtree::TriangleRTree;

pub const NONE: u32 = u32::MAX;

/// Safety rail on refinement depth (sides span 2^30 : 1).
pub const MAX_LEVEL: u8 = 30;

/// User-supplied size function evaluated at octant centers.
pub type UserSizeFn = Arc<dyn Fn(Vec3) -> f64 + Send + Sync>;

/// The five sizing parameters plus the optional user size function.
#[derive(Clone)]
pub struct SizeFieldParams {
    /// Bulk (default) size h_b.
    pub h_bulk: f64,
    /// Minimum allowed size h_min.
    pub h_min: f64,
    /// Nodes per full osculating circle, n_d.
    pub node_density: u32,
    /// Element layers across narrow gaps, n_g.
    pub gap_layers: u32,
    /// Gradation alpha: adjacent-edge length ratio bound, |grad h| <= alpha - 1.
    pub gradation: f64,
    /// Optional extra size constraint h_u.
    pub user_size: Option<UserSizeFn>,
}

impl fmt::Debug for SizeFieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SizeFieldParams")
            .field("h_bulk", &self.h_bulk)
            .field("h_min", &self.h_min)
            .field("node_density", &self.node_density)
            .field("gap_layers", &self.gap_layers)
            .field("gradation", &self.gradation)
            .field("user_size", &self.user_size.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl SizeFieldParams {
    /// Defaults relative to the largest bounding-box dimension L:
    /// h_b = L/20, h_min = L/1000, n_d = 20, n_g = 4, alpha = 1.1.
    pub fn defaults_for(largest_dimension: f64) -> SizeFieldParams {
        SizeFieldParams {
            h_bulk: largest_dimension / 20.0,
            h_min: largest_dimension / 1000.0,
            node_density: 20,
            gap_layers: 4,
            gradation: 1.1,
            user_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h_min = {} must be positive",
                self.h_min
            )));
        }
        if !(self.h_bulk >= self.h_min) {
            return Err(Error::InvalidParameter(format!(
                "h_bulk = {} must be >= h_min = {}",
                self.h_bulk, self.h_min
            )));
        }
        if self.node_density < 3 {
            return Err(Error::InvalidParameter(format!(
                "node density n_d = {} must be at least 3",
                self.node_density
            )));
        }
        if self.gap_layers < 1 {
            return Err(Error::InvalidParameter(format!(
                "gap layers n_g = {} must be at least 1",
                self.gap_layers
            )));
        }
        if !(self.gradation > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gradation alpha = {} must be > 1",
                self.gradation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Node {
    /// Index of the first of 8 contiguous children; `NONE` for leaves.
    first_child: u32,
    level: u8,
    ix: u32,
    iy: u32,
    iz: u32,
    h: f64,
    grad: [f64; 3],
}

/// Which side of an octant a face neighbor sits on: axis 0..3, +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceDir {
    pub axis: usize,
    pub positive: bool,
}

pub const FACE_DIRS: [FaceDir; 6] = [
    FaceDir { axis: 0, positive: false },
    FaceDir { axis: 0, positive: true },
    FaceDir { axis: 1, positive: false },
    FaceDir { axis: 1, positive: true },
    FaceDir { axis: 2, positive: false },
    FaceDir { axis: 2, positive: true },
];

/// What lies across a leaf face.
#[derive(Debug, Clone)]
pub enum FaceNeighbor {
    /// Face on the root-cube boundary.
    Boundary,
    /// A leaf at the same or coarser level.
    Leaf(u32),
    /// A subdivided region: the (up to recursively subdivided) node at the
    /// same level. After 2:1 balancing its 4 face children are leaves.
    Finer(u32),
}

#[derive(Debug, Clone)]
pub struct SizeFieldOctree {
    /// Minimum corner of the root cube.
    pub root_anchor: Vec3,
    /// Side length of the root cube (1.5 x largest bbox dimension).
    pub root_side: f64,
    nodes: Vec<Node>,
}

impl SizeFieldOctree {
    /// A single-leaf tree over the given root cube (used when rebuilding a
    /// tree from serialized leaf records).
    pub fn from_root(root_anchor: Vec3, root_side: f64) -> SizeFieldOctree {
        SizeFieldOctree {
            root_anchor,
            root_side,
            nodes: vec![Node {
                first_child: NONE,
                level: 0,
                ix: 0,
                iy: 0,
                iz: 0,
                h: 0.0,
                grad: [0.0; 3],
            }],
        }
    }

    /// Root cube centered on the bounding box, side 1.5 x its largest
    /// dimension; uniform subdivision until sides are at most h_bulk; all
    /// leaves start at h = h_bulk.
    pub fn init(bbox: &Aabb, params: &SizeFieldParams) -> Result<SizeFieldOctree> {
        params.validate()?;
        let span = bbox.largest_dimension();
        if !(span > 0.0) {
            return Err(Error::InvalidParameter(
                "degenerate bounding box (zero largest dimension)".into(),
            ));
        }
        let root_side = 1.5 * span;
        let center = bbox.center();
        let root_anchor = center - vec3(root_side, root_side, root_side) * 0.5;
        let mut tree = SizeFieldOctree {
            root_anchor,
            root_side,
            nodes: vec![Node {
                first_child: NONE,
                level: 0,
                ix: 0,
                iy: 0,
                iz: 0,
                h: params.h_bulk,
                grad: [0.0; 3],
            }],
        };
        // Smallest uniform depth with side <= h_bulk.
        let mut depth = 0u8;
        let mut side = root_side;
        while side > params.h_bulk {
            depth += 1;
            side *= 0.5;
            if depth > MAX_LEVEL {
                return Err(Error::DepthCap(MAX_LEVEL as u32));
            }
        }
        for _ in 0..depth {
            let leaves = tree.leaves();
            for id in leaves {
                tree.split(id);
            }
        }
        Ok(tree)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.first_child == NONE).count()
    }

    pub fn is_leaf(&self, id: u32) -> bool {
        self.nodes[id as usize].first_child == NONE
    }

    pub fn level(&self, id: u32) -> u8 {
        self.nodes[id as usize].level
    }

    pub fn h(&self, id: u32) -> f64 {
        self.nodes[id as usize].h
    }

    pub fn set_h(&mut self, id: u32, h: f64) {
        self.nodes[id as usize].h = h;
    }

    pub fn grad(&self, id: u32) -> [f64; 3] {
        self.nodes[id as usize].grad
    }

    pub fn set_grad(&mut self, id: u32, g: [f64; 3]) {
        self.nodes[id as usize].grad = g;
    }

    /// Octant side at a level: root_side / 2^level, exact.
    pub fn side_at_level(&self, level: u8) -> f64 {
        self.root_side * (0.5f64).powi(level as i32)
    }

    pub fn side(&self, id: u32) -> f64 {
        self.side_at_level(self.nodes[id as usize].level)
    }

    pub fn anchor(&self, id: u32) -> Vec3 {
        let n = &self.nodes[id as usize];
        let s = self.side_at_level(n.level);
        self.root_anchor + vec3(n.ix as f64 * s, n.iy as f64 * s, n.iz as f64 * s)
    }

    pub fn center(&self, id: u32) -> Vec3 {
        let s = self.side(id);
        self.anchor(id) + vec3(s, s, s) * 0.5
    }

    pub fn cube(&self, id: u32) -> Aabb {
        let a = self.anchor(id);
        let s = self.side(id);
        Aabb {
            min: a,
            max: a + vec3(s, s, s),
        }
    }

    pub fn coords(&self, id: u32) -> (u8, u32, u32, u32) {
        let n = &self.nodes[id as usize];
        (n.level, n.ix, n.iy, n.iz)
    }

    pub fn children(&self, id: u32) -> Option<[u32; 8]> {
        let fc = self.nodes[id as usize].first_child;
        (fc != NONE).then(|| std::array::from_fn(|k| fc + k as u32))
    }

    /// Split a leaf into 8 children (z-order: bit 0 = x, bit 1 = y,
    /// bit 2 = z), each inheriting the parent's h. Returns the children.
    pub fn split(&mut self, id: u32) -> [u32; 8] {
        debug_assert!(self.is_leaf(id));
        let parent = self.nodes[id as usize].clone();
        let first = self.nodes.len() as u32;
        for k in 0..8u32 {
            self.nodes.push(Node {
                first_child: NONE,
                level: parent.level + 1,
                ix: 2 * parent.ix + (k & 1),
                iy: 2 * parent.iy + ((k >> 1) & 1),
                iz: 2 * parent.iz + ((k >> 2) & 1),
                h: parent.h,
                grad: [0.0; 3],
            });
        }
        self.nodes[id as usize].first_child = first;
        std::array::from_fn(|k| first + k as u32)
    }

    /// Leaf ids in depth-first z-order (the canonical space-filling-curve
    /// linearization used for iteration and serialization).
    pub fn leaves(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let fc = self.nodes[id as usize].first_child;
            if fc == NONE {
                out.push(id);
            } else {
                for k in (0..8u32).rev() {
                    stack.push(fc + k);
                }
            }
        }
        out
    }

    /// Deepest existing node containing the cell (level, ix, iy, iz).
    /// Returns the node id; its level may be shallower than requested.
    pub fn node_at(&self, level: u8, ix: u32, iy: u32, iz: u32) -> u32 {
        let mut id = 0u32;
        let mut l = 0u8;
        while l < level {
            let fc = self.nodes[id as usize].first_child;
            if fc == NONE {
                break;
            }
            let shift = level - l - 1;
            let dx = (ix >> shift) & 1;
            let dy = (iy >> shift) & 1;
            let dz = (iz >> shift) & 1;
            id = fc + (dx + 2 * dy + 4 * dz);
            l += 1;
        }
        id
    }

    /// Leaf containing a point (the point is clamped into the root cube).
    pub fn leaf_at(&self, p: Vec3) -> u32 {
        let root = Aabb {
            min: self.root_anchor,
            max: self.root_anchor + vec3(self.root_side, self.root_side, self.root_side),
        };
        let p = root.clamp(p);
        let mut id = 0u32;
        loop {
            let fc = self.nodes[id as usize].first_child;
            if fc == NONE {
                return id;
            }
            let c = self.center(id);
            let k = (p.x >= c.x) as u32 + 2 * ((p.y >= c.y) as u32) + 4 * ((p.z >= c.z) as u32);
            id = fc + k;
        }
    }

    /// Coordinates of the cell adjacent to `id` across the face in
    /// direction `dir`, or `None` on the root boundary.
    fn neighbor_coords(&self, id: u32, dir: FaceDir) -> Option<[u32; 3]> {
        let n = &self.nodes[id as usize];
        let extent = 1u32 << n.level;
        let mut c = [n.ix, n.iy, n.iz];
        if dir.positive {
            if c[dir.axis] + 1 == extent {
                return None;
            }
            c[dir.axis] += 1;
        } else {
            if c[dir.axis] == 0 {
                return None;
            }
            c[dir.axis] -= 1;
        }
        Some(c)
    }

    /// What lies across a face of `id` in direction `dir`.
    pub fn face_neighbor(&self, id: u32, dir: FaceDir) -> FaceNeighbor {
        let level = self.nodes[id as usize].level;
        let Some([ix, iy, iz]) = self.neighbor_coords(id, dir) else {
            return FaceNeighbor::Boundary;
        };
        let nb = self.node_at(level, ix, iy, iz);
        if self.nodes[nb as usize].first_child == NONE {
            FaceNeighbor::Leaf(nb)
        } else {
            FaceNeighbor::Finer(nb)
        }
    }

    /// The 4 children of `id` touching its face in direction `dir`.
    pub fn face_children(&self, id: u32, dir: FaceDir) -> [u32; 4] {
        let fc = self.nodes[id as usize].first_child;
        debug_assert_ne!(fc, NONE);
        let bit = if dir.positive { 1u32 } else { 0 };
        let mut out = [0u32; 4];
        let mut w = 0;
        for k in 0..8u32 {
            if (k >> dir.axis) & 1 == bit {
                out[w] = fc + k;
                w += 1;
            }
        }
        out
    }

    /// Total leaf volume; equals root_side^3 when the tree is a partition.
    pub fn leaf_volume(&self) -> f64 {
        self.leaves()
            .iter()
            .map(|&id| self.side(id).powi(3))
            .sum()
    }
}

/// Everything refinement needs to size an octant: the surface, its R-tree,
/// and the per-mesh-vertex size bound min(h_c, h_f) (INFINITY where
/// unconstrained).
pub struct RefineContext<'a> {
    pub rtree: &'a TriangleRTree,
    pub mesh: &'a SurfaceMesh,
    pub vertex_size: &'a [f64],
    pub params: &'a SizeFieldParams,
}

impl RefineContext<'_> {
    /// Refinement target for an octant cube:
    /// max(h_min, min(h_c, h_f over intersected triangles, h_u(center), h_bulk)).
    /// Also reports whether the octant intersects any triangle box.
    pub fn target(&self, cube: &Aabb, buf: &mut Vec<u32>) -> (f64, bool) {
        self.rtree.query_into(cube, buf);
        let mut bound = self.params.h_bulk;
        for &ti in buf.iter() {
            for &vi in &self.mesh.triangles[ti as usize] {
                let s = self.vertex_size[vi as usize];
                if s < bound {
                    bound = s;
                }
            }
        }
        if let Some(f) = &self.params.user_size {
            bound = bound.min(f(cube.center()));
        }
        (bound.max(self.params.h_min), !buf.is_empty())
    }
}

/// Refine until every leaf satisfies its target size; leaves store the
/// target (h_bulk where nothing constrains them).
pub fn refine_octree(tree: &mut SizeFieldOctree, ctx: &RefineContext) -> Result<()> {
    let mut frontier = tree.leaves();
    while !frontier.is_empty() {
        // Decide in parallel, apply splits in deterministic order.
        let decisions: Vec<(u32, f64, bool)> = frontier
            .par_iter()
            .map_init(Vec::new, |buf, &id| {
                let cube = tree.cube(id);
                let (target, _isect) = ctx.target(&cube, buf);
                (id, target, tree.side(id) > target)
            })
            .collect();
        let mut next = Vec::new();
        for (id, target, needs_split) in decisions {
            if needs_split {
                if tree.level(id) >= MAX_LEVEL {
                    return Err(Error::DepthCap(MAX_LEVEL as u32));
                }
                next.extend(tree.split(id));
            } else {
                tree.set_h(id, target);
            }
        }
        frontier = next;
    }
    Ok(())
}

/// Enforce the 2:1 face-level rule. Newly created children of a split
/// take the refinement target when they intersect the surface, and the
/// parent's size otherwise.
pub fn balance_octree(tree: &mut SizeFieldOctree, ctx: Option<&RefineContext>) {
    let mut buf = Vec::new();
    loop {
        let mut to_split: Vec<u32> = Vec::new();
        for id in tree.leaves() {
            let level = tree.level(id);
            if level < 2 {
                continue;
            }
            for dir in FACE_DIRS {
                // A neighbor coarser by 2+ levels violates the rule; find
                // the containing node at level - 1.
                let Some([ix, iy, iz]) = tree.neighbor_coords(id, dir) else {
                    continue;
                };
                let nb = tree.node_at(level - 1, ix >> 1, iy >> 1, iz >> 1);
                if tree.nodes[nb as usize].level < level - 1 {
                    to_split.push(nb);
                }
            }
        }
        to_split.sort_unstable();
        to_split.dedup();
        if to_split.is_empty() {
            return;
        }
        for id in to_split {
            // A node can appear once per loop iteration only; it is still
            // a leaf here.
            let children = tree.split(id);
            if let Some(ctx) = ctx {
                let parent_h = tree.h(id);
                for ch in children {
                    let cube = tree.cube(ch);
                    let (target, isect) = ctx.target(&cube, &mut buf);
                    tree.set_h(ch, if isect { target } else { parent_h });
                }
            }
        }
    }
}

/// Exhaustive face-pair sweep: the largest level difference found across
/// any leaf face (1 means properly balanced).
pub fn max_face_level_jump(tree: &SizeFieldOctree) -> u8 {
    let mut worst = 0u8;
    for id in tree.leaves() {
        for dir in FACE_DIRS {
            match tree.face_neighbor(id, dir) {
                FaceNeighbor::Boundary | FaceNeighbor::Leaf(_) => {}
                FaceNeighbor::Finer(nb) => {
                    // Depth of the subdivided region along this face.
                    let mut depth = 1u8;
                    let mut stack: Vec<(u32, u8)> = tree
                        .face_children(nb, FaceDir {
                            axis: dir.axis,
                            positive: !dir.positive,
                        })
                        .into_iter()
                        .map(|c| (c, 1))
                        .collect();
                    while let Some((c, d)) = stack.pop() {
                        if tree.is_leaf(c) {
                            depth = depth.max(d);
                        } else {
                            for cc in tree.face_children(c, FaceDir {
                                axis: dir.axis,
                                positive: !dir.positive,
                            }) {
                                stack.push((cc, d + 1));
                            }
                        }
                    }
                    worst = worst.max(depth);
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature;
    use crate::shapes;

    fn uniform_params(h_bulk: f64, h_min: f64) -> SizeFieldParams {
        SizeFieldParams {
            h_bulk,
            h_min,
            node_density: 20,
            gap_layers: 4,
            gradation: 1.1,
            user_size: None,
        }
    }

    fn unit_bbox() -> Aabb {
        Aabb {
            min: Vec3::ZERO,
            max: vec3(1.0, 1.0, 1.0),
        }
    }

    #[test]
    fn init_depth_arithmetic() {
        // L = 1, h_b = 0.05: root side 1.5, depth 5 (1.5/32 = 0.046875).
        let tree = SizeFieldOctree::init(&unit_bbox(), &uniform_params(0.05, 0.001)).unwrap();
        assert_eq!(tree.root_side, 1.5);
        assert_eq!(tree.leaf_count(), 32 * 32 * 32);
        let leaves = tree.leaves();
        assert!(leaves.iter().all(|&id| tree.level(id) == 5));
        assert!((tree.side(leaves[0]) - 1.5 / 32.0).abs() == 0.0);
        assert!(leaves.iter().all(|&id| tree.h(id) == 0.05));

        // h_b larger than the root: single leaf.
        let tree = SizeFieldOctree::init(&unit_bbox(), &uniform_params(4.0, 0.001)).unwrap();
        assert_eq!(tree.leaf_count(), 1);

        // Same depth rule at a different scale: L = 10 -> root 15, d = 5.
        let bbox = Aabb {
            min: Vec3::ZERO,
            max: vec3(10.0, 10.0, 10.0),
        };
        let tree = SizeFieldOctree::init(&bbox, &uniform_params(0.5, 0.01)).unwrap();
        assert_eq!(tree.leaf_count(), 32 * 32 * 32);
    }

    #[test]
    fn degenerate_bbox_rejected() {
        // A point-like bounding box (L = 0) cannot host a field.
        let bbox = Aabb::from_points([vec3(2.0, 3.0, 4.0), vec3(2.0, 3.0, 4.0)]);
        assert_eq!(bbox.largest_dimension(), 0.0);
        assert!(SizeFieldOctree::init(&bbox, &uniform_params(0.1, 0.001)).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(uniform_params(0.1, 0.001).validate().is_ok());
        assert!(uniform_params(0.0001, 0.001).validate().is_err()); // h_b < h_min
        let mut p = uniform_params(0.1, 0.001);
        p.gradation = 1.0;
        assert!(p.validate().is_err());
        p = uniform_params(0.1, 0.001);
        p.node_density = 2;
        assert!(p.validate().is_err());
        p = uniform_params(0.1, 0.001);
        p.gap_layers = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn partition_invariant() {
        let mesh = shapes::finned_block();
        let bbox = mesh.bounding_box();
        let params = SizeFieldParams::defaults_for(bbox.largest_dimension());
        let mut tree = SizeFieldOctree::init(&bbox, &params).unwrap();
        let root_vol = tree.root_side.powi(3);
        assert!((tree.leaf_volume() - root_vol).abs() <= 1e-9 * root_vol);

        let rtree = TriangleRTree::build(&mesh);
        let vertex_size = vec![0.02; mesh.vertices.len()];
        let ctx = RefineContext {
            rtree: &rtree,
            mesh: &mesh,
            vertex_size: &vertex_size,
            params: &params,
        };
        refine_octree(&mut tree, &ctx).unwrap();
        assert!((tree.leaf_volume() - root_vol).abs() <= 1e-9 * root_vol);
        balance_octree(&mut tree, Some(&ctx));
        assert!((tree.leaf_volume() - root_vol).abs() <= 1e-9 * root_vol);
    }

    #[test]
    fn refinement_satisfies_targets_exactly() {
        let mesh = shapes::finned_block();
        let bbox = mesh.bounding_box();
        let params = SizeFieldParams::defaults_for(bbox.largest_dimension());
        let mut tree = SizeFieldOctree::init(&bbox, &params).unwrap();
        let rtree = TriangleRTree::build(&mesh);
        let field = curvature::compute(&mesh, params.node_density).unwrap();
        let ctx = RefineContext {
            rtree: &rtree,
            mesh: &mesh,
            vertex_size: &field.h_c,
            params: &params,
        };
        refine_octree(&mut tree, &ctx).unwrap();

        // Straight after refinement, leaves away from the surface stay at
        // the bulk size (balance-induced splits may later inherit smaller
        // parent sizes instead).
        let mut buf = Vec::new();
        for id in tree.leaves() {
            let (_, isect) = ctx.target(&tree.cube(id), &mut buf);
            if !isect {
                assert_eq!(tree.h(id), params.h_bulk);
            }
        }

        balance_octree(&mut tree, Some(&ctx));
        for id in tree.leaves() {
            let h = tree.h(id);
            assert!(
                h >= params.h_min && h <= params.h_bulk,
                "h = {h} out of bounds"
            );
            let (target, isect) = ctx.target(&tree.cube(id), &mut buf);
            if isect {
                assert!(tree.side(id) <= target, "side > target on intersecting leaf");
                assert_eq!(h, target);
            }
        }
        assert!(max_face_level_jump(&tree) <= 1);
    }

    #[test]
    fn balance_idempotent_and_uniform_unchanged() {
        let tree0 = SizeFieldOctree::init(&unit_bbox(), &uniform_params(0.2, 0.001)).unwrap();
        let mut tree = tree0.clone();
        balance_octree(&mut tree, None);
        assert_eq!(tree.leaf_count(), tree0.leaf_count()); // uniform: unchanged

        // Force an imbalance: split one leaf twice, then balance.
        let mut tree = tree0.clone();
        let leaf = tree.leaves()[0];
        let kids = tree.split(leaf);
        tree.split(kids[0]);
        balance_octree(&mut tree, None);
        assert!(max_face_level_jump(&tree) <= 1);
        let n = tree.leaf_count();
        balance_octree(&mut tree, None);
        assert_eq!(tree.leaf_count(), n); // idempotent
    }

    #[test]
    fn neighbor_level_split_rule() {
        // Levels 3 and 5 side by side: balancing forces the level-3 leaf
        // down to level 4 along the shared face.
        let mut tree = SizeFieldOctree::init(&unit_bbox(), &uniform_params(2.0, 0.0001)).unwrap();
        // Uniform depth 3 first.
        for _ in 0..3 {
            for id in tree.leaves() {
                tree.split(id);
            }
        }
        // Subdivide one corner leaf to level 5.
        let target = tree.node_at(3, 0, 0, 0);
        let kids = tree.split(target);
        let kid = kids[1]; // +x child, its +x neighbor is the level-3 cell (1,0,0)
        tree.split(kid);
        balance_octree(&mut tree, None);
        assert!(max_face_level_jump(&tree) <= 1);
        // The old level-3 neighbor at (1,0,0) must now be subdivided.
        let nb = tree.node_at(3, 1, 0, 0);
        assert!(!tree.is_leaf(nb));
    }

    #[test]
    fn refinement_rule_arithmetic() {
        // A leaf of side 0.1 whose target is 0.012 splits 4 times
        // (0.1 / 16 = 0.00625 <= 0.012).
        let side0: f64 = 0.1;
        let target: f64 = 0.012;
        let mut side = side0;
        let mut splits = 0;
        while side > target {
            side *= 0.5;
            splits += 1;
        }
        assert_eq!(splits, 4);
        assert!(side <= target && side * 2.0 > target);

        // h_min clamps tiny curvature/feature sizes.
        let params = uniform_params(0.1, 0.001);
        let bound: f64 = 1e-6;
        assert_eq!(bound.min(params.h_bulk).max(params.h_min), 0.001);
    }

    #[test]
    fn user_size_refines_empty_space() {
        let params = SizeFieldParams {
            user_size: Some(Arc::new(|p: Vec3| 0.02 + 0.2 * p.norm())),
            ..uniform_params(0.25, 0.01)
        };
        let mesh = shapes::unit_cube();
        let rtree = TriangleRTree::from_boxes(vec![]); // no surface constraint
        let vertex_size = vec![];
        let ctx = RefineContext {
            rtree: &rtree,
            mesh: &mesh,
            vertex_size: &vertex_size,
            params: &params,
        };
        let mut tree = SizeFieldOctree::init(&unit_bbox(), &params).unwrap();
        let before = tree.leaf_count();
        refine_octree(&mut tree, &ctx).unwrap();
        assert!(tree.leaf_count() > before);
        let mut buf = Vec::new();
        for id in tree.leaves() {
            let (target, _) = ctx.target(&tree.cube(id), &mut buf);
            assert!(tree.side(id) <= target);
            assert_eq!(tree.h(id), target);
        }
    }

    #[test]
    fn monotone_leaf_count_in_node_density() {
        let mesh = shapes::icosphere(3, 1.0);
        let bbox = mesh.bounding_box();
        let mut counts = Vec::new();
        for n_d in [10u32, 20, 50] {
            let mut params = SizeFieldParams::defaults_for(bbox.largest_dimension());
            params.node_density = n_d;
            let field = curvature::compute(&mesh, n_d).unwrap();
            let rtree = TriangleRTree::build(&mesh);
            let ctx = RefineContext {
                rtree: &rtree,
                mesh: &mesh,
                vertex_size: &field.h_c,
                params: &params,
            };
            let mut tree = SizeFieldOctree::init(&bbox, &params).unwrap();
            refine_octree(&mut tree, &ctx).unwrap();
            balance_octree(&mut tree, Some(&ctx));
            counts.push(tree.leaf_count());
        }
        assert!(counts[0] <= counts[1] && counts[1] <= counts[2], "{counts:?}");
    }

    #[test]
    fn leaf_at_descends_correctly() {
        let tree = SizeFieldOctree::init(&unit_bbox(), &uniform_params(0.2, 0.001)).unwrap();
        for &p in &[
            vec3(0.1, 0.2, 0.3),
            vec3(0.99, 0.99, 0.01),
            vec3(-5.0, 0.5, 0.5), // clamped to the root boundary
        ] {
            let id = tree.leaf_at(p);
            assert!(tree.is_leaf(id));
            let cube = tree.cube(id);
            let root = Aabb {
                min: tree.root_anchor,
                max: tree.root_anchor + vec3(tree.root_side, tree.root_side, tree.root_side),
            };
            let q = root.clamp(p);
            assert!(cube.contains(q));
        }
    }
}

//! Packed R-tree over triangle bounding boxes (sort-tile-recursive bulk
//! load). Queries return every triangle whose AABB intersects the query
//! box: a conservative superset of exact triangle-box intersections, which
//! is what conservative octree refinement needs (no false negatives).

use crate::geom::Aabb;
use crate::mesh::SurfaceMesh;

const NODE_CAPACITY: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    bb: Aabb,
    /// Child range: node indices for inner nodes, item range for leaves.
    start: u32,
    count: u32,
    leaf: bool,
}

#[derive(Debug, Clone)]
pub struct TriangleRTree {
    nodes: Vec<Node>,
    /// Triangle indices, grouped per leaf node.
    items: Vec<u32>,
    /// Per-triangle boxes in `items` order is not kept; queries test node
    /// boxes only, then the stored per-triangle boxes.
    tri_boxes: Vec<Aabb>,
    root: u32,
}

impl TriangleRTree {
    /// Bulk-load from the triangles of a surface mesh.
    pub fn build(mesh: &SurfaceMesh) -> TriangleRTree {
        let tri_boxes: Vec<Aabb> = (0..mesh.triangles.len())
            .map(|ti| Aabb::from_points(mesh.triangle_points(ti)))
            .collect();
        Self::from_boxes(tri_boxes)
    }

    pub fn from_boxes(tri_boxes: Vec<Aabb>) -> TriangleRTree {
        let n = tri_boxes.len();
        let mut items: Vec<u32> = (0..n as u32).collect();
        // Sort-tile-recursive: slabs in x, then y, then runs of capacity in z.
        let center = |i: u32, axis: usize| {
            let b = &tri_boxes[i as usize];
            b.min.component(axis) + b.max.component(axis)
        };
        let n_leaves = n.div_ceil(NODE_CAPACITY).max(1);
        let s = (n_leaves as f64).powf(1.0 / 3.0).ceil() as usize;
        let x_slab = (s * s * NODE_CAPACITY).max(1);
        let y_slab = (s * NODE_CAPACITY).max(1);
        items.sort_by(|&a, &b| center(a, 0).total_cmp(&center(b, 0)));
        for xs in items.chunks_mut(x_slab) {
            xs.sort_by(|&a, &b| center(a, 1).total_cmp(&center(b, 1)));
            for ys in xs.chunks_mut(y_slab) {
                ys.sort_by(|&a, &b| center(a, 2).total_cmp(&center(b, 2)));
            }
        }

        let mut nodes: Vec<Node> = Vec::new();
        // Leaf level.
        let mut level: Vec<u32> = Vec::new();
        let mut pos = 0u32;
        while (pos as usize) < n.max(1) {
            let count = NODE_CAPACITY.min(n - pos as usize) as u32;
            let mut bb = Aabb::empty();
            for &t in &items[pos as usize..(pos + count) as usize] {
                bb = bb.merge(&tri_boxes[t as usize]);
            }
            level.push(nodes.len() as u32);
            nodes.push(Node {
                bb,
                start: pos,
                count,
                leaf: true,
            });
            pos += count;
            if n == 0 {
                break;
            }
        }
        // Inner levels until a single root remains.
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(NODE_CAPACITY));
            for group in level.chunks(NODE_CAPACITY) {
                let mut bb = Aabb::empty();
                for &c in group {
                    bb = bb.merge(&nodes[c as usize].bb);
                }
                // Children of STR levels are contiguous node indices.
                next.push(nodes.len() as u32);
                nodes.push(Node {
                    bb,
                    start: group[0],
                    count: group.len() as u32,
                    leaf: false,
                });
            }
            level = next;
        }
        let root = level[0];
        TriangleRTree {
            nodes,
            items,
            tri_boxes,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.tri_boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tri_boxes.is_empty()
    }

    /// All triangles whose AABB intersects `query` (closed intervals).
    pub fn query(&self, query: &Aabb) -> Vec<u32> {
        let mut out = Vec::new();
        self.query_into(query, &mut out);
        out
    }

    /// Like [`query`](Self::query), reusing the output buffer.
    pub fn query_into(&self, query: &Aabb, out: &mut Vec<u32>) {
        out.clear();
        if self.tri_boxes.is_empty() {
            return;
        }
        let mut stack = vec![self.root];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bb.intersects(query) {
                continue;
            }
            if node.leaf {
                for &t in &self.items[node.start as usize..(node.start + node.count) as usize] {
                    if self.tri_boxes[t as usize].intersects(query) {
                        out.push(t);
                    }
                }
            } else {
                for c in node.start..node.start + node.count {
                    stack.push(c);
                }
            }
        }
    }

    /// True when any triangle AABB intersects `query`.
    pub fn any_overlap(&self, query: &Aabb) -> bool {
        if self.tri_boxes.is_empty() {
            return false;
        }
        let mut stack = vec![self.root];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bb.intersects(query) {
                continue;
            }
            if node.leaf {
                for &t in &self.items[node.start as usize..(node.start + node.count) as usize] {
                    if self.tri_boxes[t as usize].intersects(query) {
                        return true;
                    }
                }
            } else {
                for c in node.start..node.start + node.count {
                    stack.push(c);
                }
            }
        }
        false
    }
}

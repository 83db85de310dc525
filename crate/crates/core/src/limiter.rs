//! Gradient limiting: clamp the stored sizes until |grad h| <= alpha - 1
//! across every octant face, then cache cell-centered gradients.
//!
//! Limiting works on face-adjacent leaf pairs: the larger size is pulled
//! down to `h_small + dx * (alpha - 1)` (dx = sum of the two half-sides),
//! never the other way around, so minima are preserved and the sweep is a
//! monotone fixed-point iteration. Gradients use the three balanced-octree
//! stencils (full/full, full/hanging, hanging/hanging); a hanging side
//! averages the four finer face neighbors.

use crate::error::{Error, Result};
use crate::octree::{FaceDir, FaceNeighbor, SizeFieldOctree, FACE_DIRS};

/// One side of a one-axis gradient stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StencilSide {
    /// Root-cube boundary: contributes nothing.
    Missing,
    /// Full neighbor (same or coarser leaf).
    Full { h: f64, dx: f64 },
    /// Hanging neighbor: the four finer face-adjacent leaves.
    Hanging { h: [f64; 4], dx: f64 },
}

impl StencilSide {
    fn averaged(&self) -> Option<(f64, f64)> {
        match *self {
            StencilSide::Missing => None,
            StencilSide::Full { h, dx } => Some((h, dx)),
            StencilSide::Hanging { h, dx } => Some((h.iter().sum::<f64>() / 4.0, dx)),
        }
    }
}

/// The two sides of the stencil for one leaf along one axis.
pub fn gradient_stencil(
    tree: &SizeFieldOctree,
    leaf: u32,
    axis: usize,
) -> Result<(StencilSide, StencilSide)> {
    let mut sides = [StencilSide::Missing, StencilSide::Missing];
    let s_self = tree.side(leaf);
    for (slot, positive) in [(0usize, false), (1usize, true)] {
        let dir = FaceDir { axis, positive };
        sides[slot] = match tree.face_neighbor(leaf, dir) {
            FaceNeighbor::Boundary => StencilSide::Missing,
            FaceNeighbor::Leaf(nb) => StencilSide::Full {
                h: tree.h(nb),
                dx: 0.5 * (s_self + tree.side(nb)),
            },
            FaceNeighbor::Finer(nb) => {
                let opposite = FaceDir {
                    axis,
                    positive: !positive,
                };
                let kids = tree.face_children(nb, opposite);
                let mut h = [0.0; 4];
                for (i, &k) in kids.iter().enumerate() {
                    if !tree.is_leaf(k) {
                        return Err(Error::Invariant(
                            "gradient stencil on an unbalanced octree".into(),
                        ));
                    }
                    h[i] = tree.h(k);
                }
                StencilSide::Hanging {
                    h,
                    dx: 0.5 * (s_self + 0.5 * s_self),
                }
            }
        };
    }
    Ok((sides[0], sides[1]))
}

/// Cell-centered gradient of one leaf:
/// dh/dx = (h+ - h) / (2 dx+) + (h - h-) / (2 dx-), per axis, with a
/// missing side contributing zero.
pub fn compute_gradient(tree: &SizeFieldOctree, leaf: u32) -> Result<[f64; 3]> {
    let h = tree.h(leaf);
    let mut grad = [0.0; 3];
    for (axis, g) in grad.iter_mut().enumerate() {
        let (lo, hi) = gradient_stencil(tree, leaf, axis)?;
        let mut d = 0.0;
        if let Some((hbar, dx)) = hi.averaged() {
            d += (hbar - h) / (2.0 * dx);
        }
        if let Some((hbar, dx)) = lo.averaged() {
            d += (h - hbar) / (2.0 * dx);
        }
        *g = d;
    }
    Ok(grad)
}

/// A face-adjacent leaf pair with its center distance along the face
/// normal (sum of half-sides).
#[derive(Debug, Clone, Copy)]
pub struct FacePair {
    pub a: u32,
    pub b: u32,
    pub dx: f64,
    pub axis: usize,
}

/// All face-adjacent leaf pairs, each exactly once, in the leaf z-order
/// (pairs are registered from the finer side, or from the lower side for
/// equal levels).
pub fn face_pairs(tree: &SizeFieldOctree) -> Vec<FacePair> {
    let mut pairs = Vec::new();
    for id in tree.leaves() {
        let level = tree.level(id);
        for dir in FACE_DIRS {
            if let FaceNeighbor::Leaf(nb) = tree.face_neighbor(id, dir) {
                let nb_level = tree.level(nb);
                let take = nb_level < level || (nb_level == level && dir.positive);
                if take {
                    pairs.push(FacePair {
                        a: id,
                        b: nb,
                        dx: 0.5 * (tree.side(id) + tree.side(nb)),
                        axis: dir.axis,
                    });
                }
            }
        }
    }
    pairs
}

/// Outcome of the limiting iteration.
#[derive(Debug, Clone)]
pub struct LimitReport {
    /// Number of sweeps that changed at least one size.
    pub passes: usize,
    /// Max residual max((h2 - h1)/dx - (alpha - 1), 0) before each sweep.
    pub residuals: Vec<f64>,
}

const PASS_CAP: usize = 1000;

/// Iterate the pairwise clamp until |grad h| <= alpha - 1 holds on every
/// face pair, then cache per-leaf gradients. The octree structure is not
/// modified, only the stored sizes. Returns the number of corrective
/// passes (0 when already limited).
pub fn limit_sizes(tree: &mut SizeFieldOctree, alpha: f64) -> Result<LimitReport> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gradation alpha = {alpha} must be > 1"
        )));
    }
    let slope = alpha - 1.0;
    let pairs = face_pairs(tree);
    // Per-axis sweeps in z-order, forward then backward.
    let axis_pairs: Vec<Vec<&FacePair>> = (0..3)
        .map(|axis| pairs.iter().filter(|p| p.axis == axis).collect())
        .collect();

    let mut report = LimitReport {
        passes: 0,
        residuals: Vec::new(),
    };
    loop {
        let mut worst = 0.0f64;
        for p in &pairs {
            let (ha, hb) = (tree.h(p.a), tree.h(p.b));
            worst = worst.max((ha - hb).abs() / p.dx - slope);
        }
        report.residuals.push(worst.max(0.0));

        let mut changed = false;
        for list in &axis_pairs {
            let mut clamp = |p: &FacePair, tree: &mut SizeFieldOctree| {
                let (ha, hb) = (tree.h(p.a), tree.h(p.b));
                if ha > hb {
                    let bound = hb + p.dx * slope;
                    if ha > bound {
                        tree.set_h(p.a, bound);
                        changed = true;
                    }
                } else {
                    let bound = ha + p.dx * slope;
                    if hb > bound {
                        tree.set_h(p.b, bound);
                        changed = true;
                    }
                }
            };
            for p in list.iter() {
                clamp(p, tree);
            }
            for p in list.iter().rev() {
                clamp(p, tree);
            }
        }
        if !changed {
            break;
        }
        report.passes += 1;
        if report.passes > PASS_CAP {
            let residual = report.residuals.last().copied().unwrap_or(f64::NAN);
            return Err(Error::LimiterDiverged {
                passes: report.passes,
                residual,
            });
        }
    }

    for id in tree.leaves() {
        let g = compute_gradient(tree, id)?;
        tree.set_grad(id, g);
    }
    Ok(report)
}

/// Largest (h2 - h1)/dx over all face pairs (diagnostic / test hook).
pub fn max_pair_slope(tree: &SizeFieldOctree) -> f64 {
    face_pairs(tree)
        .iter()
        .map(|p| (tree.h(p.a) - tree.h(p.b)).abs() / p.dx)
        .fold(0.0, f64::max)
}

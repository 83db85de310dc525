//! End-to-end field construction: curvature, feature size, octree
//! refinement, balancing, gradient limiting, with per-stage timings.

use std::time::{Duration, Instant};

use crate::curvature::{self, CurvatureField};
use crate::delaunay::{self, DelaunayComplex};
use crate::error::Result;
use crate::field::SizeField;
use crate::limiter;
use crate::medial::{self, FeatureField};
use crate::mesh::SurfaceMesh;
use crate::octree::{self, RefineContext, SizeFieldOctree, SizeFieldParams};
use crate::rtree::TriangleRTree;

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Compute feature sizes via the medial-axis approximation.
    pub features: bool,
    /// Angle threshold for the medial edge filters.
    pub theta: f64,
    /// Edge-to-circumradius ratio threshold.
    pub rho: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            features: true,
            theta: medial::DEFAULT_THETA,
            rho: medial::DEFAULT_RHO,
        }
    }
}

/// Wall-clock cost of each stage.
#[derive(Debug, Clone, Default)]
pub struct StageTimings {
    pub rtree: Duration,
    pub curvature: Duration,
    pub octree: Duration,
    pub medial: Duration,
    /// Included in `medial`.
    pub delaunay: Duration,
    pub limit: Duration,
    pub total: Duration,
}

impl StageTimings {
    /// Per-stage table (seconds and percentages) for the diagnostic stream.
    pub fn table(&self) -> String {
        let total = self.total.as_secs_f64().max(1e-12);
        let others = (self.total
            - (self.rtree + self.curvature + self.octree + self.medial + self.limit))
            .as_secs_f64()
            .max(0.0);
        let row = |name: &str, d: f64| format!("{name:<38}{d:>9.3} {:>6.1} %\n", 100.0 * d / total);
        let mut s = String::new();
        s.push_str(&row("insert surface mesh in R-tree", self.rtree.as_secs_f64()));
        s.push_str(&row("compute curvature", self.curvature.as_secs_f64()));
        s.push_str(&row("create and refine octree", self.octree.as_secs_f64()));
        s.push_str(&row("compute medial axis", self.medial.as_secs_f64()));
        s.push_str(&row(
            "  incl. delaunay tetrahedralization",
            self.delaunay.as_secs_f64(),
        ));
        s.push_str(&row("limit size gradient", self.limit.as_secs_f64()));
        s.push_str(&row("others", others));
        s.push_str(&row("total", total));
        s
    }
}

/// Everything a build produces, including intermediate fields for
/// diagnostics and dumps.
pub struct BuildOutput {
    pub field: SizeField,
    pub curvature: CurvatureField,
    pub complex: Option<DelaunayComplex>,
    pub feature: Option<FeatureField>,
    pub timings: StageTimings,
    pub limit_passes: usize,
    pub limit_residuals: Vec<f64>,
}

/// Build a limited size field from a surface mesh:
/// curvature meshsize, feature meshsize (optional), octree init + refine +
/// balance, gradient limiting.
pub fn build_size_field(
    mesh: &SurfaceMesh,
    params: &SizeFieldParams,
    opts: &BuildOptions,
) -> Result<BuildOutput> {
    params.validate()?;
    let t_start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let rtree = TriangleRTree::build(mesh);
    timings.rtree = t.elapsed();

    let t = Instant::now();
    let curvature =
        curvature::compute(mesh, params.node_density).map_err(|e| e.at_stage("curvature"))?;
    timings.curvature = t.elapsed();

    let (complex, feature) = if opts.features {
        let t = Instant::now();
        let complex = delaunay::tetrahedralize(&mesh.vertices)
            .map_err(|e| e.at_stage("medial axis (delaunay)"))?;
        timings.delaunay = t.elapsed();
        let feature = medial::compute(
            mesh,
            &complex,
            &curvature.normals,
            opts.theta,
            opts.rho,
            params.gap_layers,
        )
        .map_err(|e| e.at_stage("medial axis"))?;
        timings.medial = t.elapsed();
        (Some(complex), Some(feature))
    } else {
        (None, None)
    };

    // Per-vertex bound min(h_c, h_f).
    let vertex_size: Vec<f64> = match (&feature, &complex) {
        (Some(f), Some(c)) => {
            let h_f = f.meshsize_per_input_vertex(c);
            curvature
                .h_c
                .iter()
                .zip(&h_f)
                .map(|(&a, &b)| a.min(b))
                .collect()
        }
        _ => curvature.h_c.clone(),
    };

    let t = Instant::now();
    let mut tree = SizeFieldOctree::init(&mesh.bounding_box(), params)
        .map_err(|e| e.at_stage("octree init"))?;
    let ctx = RefineContext {
        rtree: &rtree,
        mesh,
        vertex_size: &vertex_size,
        params,
    };
    octree::refine_octree(&mut tree, &ctx).map_err(|e| e.at_stage("octree refinement"))?;
    octree::balance_octree(&mut tree, Some(&ctx));
    timings.octree = t.elapsed();

    let t = Instant::now();
    let report = limiter::limit_sizes(&mut tree, params.gradation)
        .map_err(|e| e.at_stage("gradient limiting"))?;
    timings.limit = t.elapsed();
    timings.total = t_start.elapsed();

    Ok(BuildOutput {
        field: SizeField::new(tree, params.clone()),
        curvature,
        complex,
        feature,
        timings,
        limit_passes: report.passes,
        limit_residuals: report.residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limiter::max_pair_slope;
    use crate::octree::max_face_level_jump;
    use crate::shapes;

    #[test]
    fn finned_block_end_to_end() {
        let mesh = shapes::finned_block();
        let params = SizeFieldParams::defaults_for(mesh.bounding_box().largest_dimension());
        let out = build_size_field(&mesh, &params, &BuildOptions::default()).unwrap();
        assert!(out.field.leaf_count() > 1000);
        assert!(max_face_level_jump(&out.field.tree) <= 1);
        assert!(max_pair_slope(&out.field.tree) <= (params.gradation - 1.0) + 1e-12);
        assert!(out.feature.is_some());
        // The fins are 0.04 thick: feature sizing must bite well below the
        // bulk size on fin vertices.
        let f = out.feature.as_ref().unwrap();
        let small = f.h_f.iter().filter(|h| **h < params.h_bulk / 2.0).count();
        assert!(small > 0, "no feature constraint found on the finned block");
        let table = out.timings.table();
        assert!(table.contains("total"));
    }

    #[test]
    fn no_features_skips_medial() {
        let mesh = shapes::icosphere(2, 1.0);
        let params = SizeFieldParams::defaults_for(2.0);
        let out = build_size_field(
            &mesh,
            &params,
            &BuildOptions {
                features: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.complex.is_none() && out.feature.is_none());
        assert!(out.field.leaf_count() > 0);
    }

    #[test]
    fn sphere_surface_sizes_follow_curvature() {
        // Unit sphere, defaults: h_c = 2 pi / 20 ~ 0.314 > h_b = 0.1, so
        // the surface stays at h_b; with n_d = 100, h_c ~ 0.0628 < h_b and
        // surface octants must carry h close to h_c.
        let mesh = shapes::icosphere(3, 1.0);
        let mut params = SizeFieldParams::defaults_for(2.0);
        params.node_density = 100;
        let out = build_size_field(
            &mesh,
            &params,
            &BuildOptions {
                features: false,
                ..Default::default()
            },
        )
        .unwrap();
        let h_c = std::f64::consts::TAU / 100.0;
        let on_surface = out.field.query(crate::geom::vec3(1.0, 0.0, 0.0));
        assert!(
            (on_surface - h_c).abs() < 0.25 * h_c,
            "surface size {on_surface} vs h_c {h_c}"
        );
        // Far corner of the domain relaxes back toward the bulk size.
        let far = out.field.query(out.field.root_cube().max);
        assert!(far > on_surface);
    }
}

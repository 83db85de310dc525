//! Mesh-versus-field evaluation: metric edge lengths, efficiency index,
//! discrete gradation, tetrahedron quality.

use rayon::prelude::*;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::SizeField;
use crate::geom::{tet_signed_volume, triangle_area, Vec3};

/// Length of the segment [a, b] in the metric 1/h: the integral of
/// |b - a| / h over the segment, by composite Simpson quadrature. The
/// subinterval count scales with the smallest octree leaf the segment
/// crosses, so discontinuities between octants are resolved.
pub fn metric_edge_length(field: &SizeField, a: Vec3, b: Vec3) -> f64 {
    let len = (b - a).norm();
    if len == 0.0 {
        return 0.0;
    }
    // Probe the crossed leaves for the finest granularity.
    let mut min_side = f64::INFINITY;
    let probes = 32;
    for i in 0..=probes {
        let t = i as f64 / probes as f64;
        min_side = min_side.min(field.leaf_side_at(a + (b - a) * t));
    }
    let n = ((len / min_side).ceil() as usize).clamp(4, 1 << 16);
    let n = n + (n % 2); // Simpson needs an even count
    simpson(n, |t| len / field.query(a + (b - a) * t))
}

/// Composite Simpson on [0, 1] with n (even) subintervals.
fn simpson(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    debug_assert!(n % 2 == 0);
    let h = 1.0 / n as f64;
    let mut sum = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    sum * h / 3.0
}

/// Efficiency index over metric edge lengths:
/// tau = exp(mean of l_bar), l_bar = l - 1 for l < 1 and 1/l - 1 otherwise.
/// Also reports the fraction of edges within [1/sqrt(2), sqrt(2)].
pub fn efficiency_index(metric_lengths: &[f64]) -> (f64, f64) {
    if metric_lengths.is_empty() {
        return (1.0, 1.0);
    }
    let mut sum = 0.0;
    let mut in_range = 0usize;
    let lo = 1.0 / 2f64.sqrt();
    let hi = 2f64.sqrt();
    for &l in metric_lengths {
        sum += if l < 1.0 { l - 1.0 } else { 1.0 / l - 1.0 };
        if (lo..=hi).contains(&l) {
            in_range += 1;
        }
    }
    (
        (sum / metric_lengths.len() as f64).exp(),
        in_range as f64 / metric_lengths.len() as f64,
    )
}

/// Discrete gradation per edge: the ratio of the average incident
/// (Euclidean) edge lengths at its two endpoints, always >= 1. Returns the
/// per-edge values and their mean. Vertices without edges are skipped.
pub fn discrete_gradation(points: &[Vec3], edges: &[[u32; 2]]) -> (Vec<f64>, f64) {
    let mut sum = vec![0.0f64; points.len()];
    let mut count = vec![0u32; points.len()];
    for &[a, b] in edges {
        let l = (points[a as usize] - points[b as usize]).norm();
        sum[a as usize] += l;
        count[a as usize] += 1;
        sum[b as usize] += l;
        count[b as usize] += 1;
    }
    let avg: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let per_edge: Vec<f64> = edges
        .iter()
        .map(|&[a, b]| {
            let (x, y) = (avg[a as usize], avg[b as usize]);
            let (max, min) = (x.max(y), x.min(y));
            if min > 0.0 {
                max / min
            } else {
                1.0
            }
        })
        .collect();
    let mean = if per_edge.is_empty() {
        1.0
    } else {
        per_edge.iter().sum::<f64>() / per_edge.len() as f64
    };
    (per_edge, mean)
}

/// Tetrahedron quality gamma = r/R (inradius to circumradius), in
/// (0, 1/3] for valid tets, 1/3 at the regular tetrahedron, 0 for
/// degenerate input.
pub fn tet_quality(p: [Vec3; 4]) -> f64 {
    let vol = tet_signed_volume(p[0], p[1], p[2], p[3]).abs();
    let areas = triangle_area(p[1], p[2], p[3])
        + triangle_area(p[0], p[2], p[3])
        + triangle_area(p[0], p[1], p[3])
        + triangle_area(p[0], p[1], p[2]);
    if areas <= 0.0 || vol <= 0.0 {
        return 0.0;
    }
    let r = 3.0 * vol / areas;
    let (_, circumradius, _) = crate::delaunay::circumcenter(p);
    if !(circumradius > 0.0) || !circumradius.is_finite() {
        return 0.0;
    }
    r / circumradius
}

/// Fixed-width histogram.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
        let mut h = Histogram {
            lo,
            hi,
            bins: vec![0; bins],
        };
        let w = (hi - lo) / bins as f64;
        for &v in values {
            if !v.is_finite() {
                continue;
            }
            let k = (((v - lo) / w).floor() as isize).clamp(0, bins as isize - 1) as usize;
            h.bins[k] += 1;
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        let w = (self.hi - self.lo) / self.bins.len() as f64;
        for (i, c) in self.bins.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.lo + i as f64 * w,
                self.lo + (i + 1) as f64 * w,
                c
            ));
        }
        out
    }
}

/// Full evaluation of a mesh against a size field.
#[derive(Debug, Clone)]
pub struct MeshReport {
    pub edge_count: usize,
    pub metric_lengths: Vec<f64>,
    pub tau: f64,
    /// Fraction of metric lengths within [1/sqrt(2), sqrt(2)].
    pub in_range_fraction: f64,
    pub gradation_per_edge: Vec<f64>,
    pub gradation_mean: f64,
    /// Raw gamma = r/R per tet (empty for surface meshes).
    pub tet_gamma: Vec<f64>,
    /// Normalized quality 3*gamma (1 at the regular tet), for comparison
    /// with thresholds quoted on the normalized scale.
    pub tet_gamma_normalized: Vec<f64>,
    pub length_histogram: Histogram,
    pub gradation_histogram: Histogram,
    pub gamma_histogram: Histogram,
}

/// Evaluate edges (and optionally tets) of a mesh against a field.
pub fn evaluate(
    field: &SizeField,
    points: &[Vec3],
    edges: &[[u32; 2]],
    tets: Option<&[[u32; 4]]>,
) -> MeshReport {
    let metric_lengths: Vec<f64> = edges
        .par_iter()
        .map(|&[a, b]| metric_edge_length(field, points[a as usize], points[b as usize]))
        .collect();
    let (tau, in_range_fraction) = efficiency_index(&metric_lengths);
    let (gradation_per_edge, gradation_mean) = discrete_gradation(points, edges);
    let tet_gamma: Vec<f64> = tets
        .map(|ts| {
            ts.par_iter()
                .map(|t| tet_quality(t.map(|v| points[v as usize])))
                .collect()
        })
        .unwrap_or_default();
    let tet_gamma_normalized: Vec<f64> = tet_gamma.iter().map(|g| 3.0 * g).collect();
    MeshReport {
        edge_count: edges.len(),
        length_histogram: Histogram::build(&metric_lengths, 0.0, 2.0, 20),
        gradation_histogram: Histogram::build(&gradation_per_edge, 1.0, 2.0, 20),
        gamma_histogram: Histogram::build(&tet_gamma_normalized, 0.0, 1.0, 20),
        metric_lengths,
        tau,
        in_range_fraction,
        gradation_per_edge,
        gradation_mean,
        tet_gamma,
        tet_gamma_normalized,
    }
}

impl MeshReport {
    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("edges                    {:>12}\n", self.edge_count));
        s.push_str(&format!("efficiency index tau     {:>12.4}\n", self.tau));
        s.push_str(&format!(
            "edges in [0.707, 1.414]  {:>11.1}%\n",
            100.0 * self.in_range_fraction
        ));
        s.push_str(&format!(
            "discrete gradation mean  {:>12.4}\n",
            self.gradation_mean
        ));
        if !self.tet_gamma.is_empty() {
            let min = self.tet_gamma.iter().cloned().fold(f64::INFINITY, f64::min);
            let mean = self.tet_gamma.iter().sum::<f64>() / self.tet_gamma.len() as f64;
            s.push_str(&format!("tets                     {:>12}\n", self.tet_gamma.len()));
            s.push_str(&format!("gamma = r/R min          {:>12.4}\n", min));
            s.push_str(&format!("gamma = r/R mean         {:>12.4}\n", mean));
            s.push_str(&format!(
                "normalized 3*gamma mean  {:>12.4}\n",
                3.0 * mean
            ));
        }
        s
    }
}

/// Unique undirected edges of a tet mesh.
pub fn tet_edges(tets: &[[u32; 4]]) -> Vec<[u32; 2]> {
    let mut edges = Vec::with_capacity(tets.len() * 6);
    for t in tets {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push([t[i].min(t[j]), t[i].max(t[j])]);
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Minimal ASCII tet mesh: node count, `x y z` per node, tet count, four
/// zero-based indices per tet. Whitespace-separated, `#` comments allowed.
pub fn read_tet_mesh(path: impl AsRef<Path>) -> Result<(Vec<Vec3>, Vec<[u32; 4]>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut tokens: Vec<String> = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| -> Result<String> {
        it.next()
            .ok_or_else(|| Error::parse(path, 0, format!("unexpected end of file reading {what}")))
    };
    let n_nodes: usize = next("node count")?
        .parse()
        .map_err(|_| Error::parse(path, 0, "bad node count"))?;
    let mut points = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let mut c = [0.0; 3];
        for v in &mut c {
            *v = next("node coordinate")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad node coordinate"))?;
        }
        points.push(Vec3::from_array(c));
    }
    let n_tets: usize = next("tet count")?
        .parse()
        .map_err(|_| Error::parse(path, 0, "bad tet count"))?;
    let mut tets = Vec::with_capacity(n_tets);
    for _ in 0..n_tets {
        let mut t = [0u32; 4];
        for v in &mut t {
            *v = next("tet index")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad tet index"))?;
            if *v as usize >= n_nodes {
                return Err(Error::parse(path, 0, "tet index out of range"));
            }
        }
        tets.push(t);
    }
    Ok((points, tets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{vec3, Aabb};
    use crate::octree::{SizeFieldOctree, SizeFieldParams};
    use std::sync::Arc;

    /// A uniform field h = c over a unit-ish box.
    fn uniform_field(c: f64) -> SizeField {
        let params = SizeFieldParams {
            h_bulk: c,
            h_min: c * 1e-3,
            node_density: 20,
            gap_layers: 4,
            gradation: 1.1,
            user_size: None,
        };
        let bbox = Aabb {
            min: Vec3::ZERO,
            max: vec3(1.0, 1.0, 1.0),
        };
        let mut tree = SizeFieldOctree::init(&bbox, &params).unwrap();
        crate::limiter::limit_sizes(&mut tree, params.gradation).unwrap();
        SizeField::new(tree, params)
    }

    /// A field h(x) = h0 + slope * x built from a user function on a fine
    /// octree, then limited (slope <= alpha - 1 keeps it intact).
    fn affine_field(h0: f64, slope: f64) -> SizeField {
        let params = SizeFieldParams {
            h_bulk: 1.0,
            h_min: 1e-4,
            node_density: 20,
            gap_layers: 4,
            gradation: 1.0 + slope.max(0.05) * 1.5,
            user_size: Some(Arc::new(move |p: Vec3| h0 + slope * p.x)),
        };
        let bbox = Aabb {
            min: Vec3::ZERO,
            max: vec3(1.0, 1.0, 1.0),
        };
        let mesh = crate::shapes::unit_cube();
        let rtree = crate::rtree::TriangleRTree::from_boxes(vec![]);
        let ctx = crate::octree::RefineContext {
            rtree: &rtree,
            mesh: &mesh,
            vertex_size: &[],
            params: &params,
        };
        let mut tree = SizeFieldOctree::init(&bbox, &params).unwrap();
        crate::octree::refine_octree(&mut tree, &ctx).unwrap();
        crate::octree::balance_octree(&mut tree, Some(&ctx));
        crate::limiter::limit_sizes(&mut tree, params.gradation).unwrap();
        SizeField::new(tree, params)
    }

    #[test]
    fn uniform_field_unit_edges() {
        let c = 0.22;
        let field = uniform_field(c);
        // An edge of Euclidean length c has metric length 1.
        let l = metric_edge_length(&field, vec3(0.1, 0.2, 0.3), vec3(0.1 + c, 0.2, 0.3));
        assert!((l - 1.0).abs() < 1e-12);
        // Length c*sqrt(2) -> sqrt(2).
        let l = metric_edge_length(&field, vec3(0.2, 0.2, 0.2), vec3(0.2 + c, 0.2 + c, 0.2));
        assert!((l - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn affine_field_log_integral() {
        // h(x) = h0 + s*x along the edge: closed form
        // l = ln(h(end)/h(start)) / s * |edge| ... with |edge| absorbed:
        // for an x-aligned edge [x0, x1]: l = ln(h(x1)/h(x0)) / s.
        let (h0, s) = (0.05, 0.08);
        let field = affine_field(h0, s);
        let (x0, x1) = (0.1, 0.9);
        let a = vec3(x0, 0.5, 0.5);
        let b = vec3(x1, 0.5, 0.5);
        let exact = ((h0 + s * x1) / (h0 + s * x0)).ln() / s;
        let l = metric_edge_length(&field, a, b);
        assert!(
            (l - exact).abs() <= 1e-6 * exact,
            "quadrature {l} vs analytic {exact}"
        );
    }

    #[test]
    fn quadrature_converges() {
        let field = affine_field(0.05, 0.08);
        let a = vec3(0.1, 0.5, 0.5);
        let b = vec3(0.9, 0.6, 0.4);
        let len = (b - a).norm();
        let coarse = simpson(512, |t| len / field.query(a + (b - a) * t));
        let fine = simpson(1024, |t| len / field.query(a + (b - a) * t));
        assert!((coarse - fine).abs() < 1e-8 * fine.max(1.0));
    }

    #[test]
    fn efficiency_index_formula() {
        // All unit lengths: tau = 1.
        let (tau, frac) = efficiency_index(&[1.0; 10]);
        assert_eq!(tau, 1.0);
        assert_eq!(frac, 1.0);
        // All sqrt(2): l_bar = 1/sqrt(2) - 1, tau = exp(that) ~ 0.7461.
        let (tau, frac) = efficiency_index(&vec![2f64.sqrt(); 8]);
        let expected = (1.0 / 2f64.sqrt() - 1.0).exp();
        assert!((tau - expected).abs() < 1e-12);
        assert_eq!(frac, 1.0); // sqrt(2) is the inclusive range edge
        // A short edge uses l - 1.
        let (tau, _) = efficiency_index(&[0.5]);
        assert!((tau - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn gradation_chain_arithmetic() {
        // Chain with lengths 1, 1.1, 1.21: the middle edge sees endpoint
        // averages 1.05 and 1.155 -> ratio exactly 1.1.
        let points = vec![
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(2.1, 0.0, 0.0),
            vec3(3.31, 0.0, 0.0),
        ];
        let edges = vec![[0u32, 1], [1, 2], [2, 3]];
        let (per_edge, _) = discrete_gradation(&points, &edges);
        assert!((per_edge[1] - 1.1).abs() < 1e-12, "{}", per_edge[1]);
    }

    #[test]
    fn gradation_uniform_lattice_exactly_one() {
        // 4-neighbor integer lattice: all edges length 1 -> all ratios 1.
        let n = 6;
        let mut points = Vec::new();
        for y in 0..n {
            for x in 0..n {
                points.push(vec3(x as f64, y as f64, 0.0));
            }
        }
        let mut edges = Vec::new();
        for y in 0..n {
            for x in 0..n {
                let i = (y * n + x) as u32;
                if x + 1 < n {
                    edges.push([i, i + 1]);
                }
                if y + 1 < n {
                    edges.push([i, i + n as u32]);
                }
            }
        }
        let (per_edge, mean) = discrete_gradation(&points, &edges);
        assert!(per_edge.iter().all(|&g| g == 1.0));
        assert_eq!(mean, 1.0);
    }

    #[test]
    fn tet_quality_examples() {
        // Regular tetrahedron: gamma = 1/3 (analytic r = a/(2 sqrt 6),
        // R = a sqrt(6)/4).
        let g = tet_quality([
            vec3(1.0, 1.0, 1.0),
            vec3(1.0, -1.0, -1.0),
            vec3(-1.0, 1.0, -1.0),
            vec3(-1.0, -1.0, 1.0),
        ]);
        assert!((g - 1.0 / 3.0).abs() < 1e-12);

        // Near-flat sliver.
        let g = tet_quality([
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.5, 0.5, 1e-6),
        ]);
        assert!(g < 0.01, "sliver gamma {g}");

        // Scale invariance.
        let base = [
            vec3(0.1, 0.0, 0.2),
            vec3(1.0, 0.1, 0.0),
            vec3(0.0, 1.2, 0.1),
            vec3(0.3, 0.2, 1.4),
        ];
        let g1 = tet_quality(base);
        let g2 = tet_quality(base.map(|p| p * 37.5));
        assert!((g1 - g2).abs() < 1e-12);

        // Exactly degenerate.
        let g = tet_quality([
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(2.0, 0.0, 0.0),
            vec3(3.0, 0.0, 0.0),
        ]);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn scale_invariance_of_metrics() {
        // Scaling mesh and field together leaves metric lengths, tau and
        // gradation unchanged.
        let c = 0.2;
        let s = 12.5;
        let f1 = uniform_field(c);
        let f2 = uniform_field(c * s);
        let a1 = vec3(0.1, 0.1, 0.1);
        let b1 = vec3(0.5, 0.3, 0.2);
        let l1 = metric_edge_length(&f1, a1, b1);
        let l2 = metric_edge_length(&f2, a1 * s, b1 * s);
        assert!((l1 - l2).abs() < 1e-9 * l1);
    }

    #[test]
    fn tet_file_roundtrip() {
        let path = {
            let mut p = std::env::temp_dir();
            p.push(format!("sizefield-tets-{}.tet", std::process::id()));
            p
        };
        std::fs::write(
            &path,
            "# tiny tet mesh\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1\n0 1 2 3\n",
        )
        .unwrap();
        let (points, tets) = read_tet_mesh(&path).unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(tets, vec![[0, 1, 2, 3]]);
        assert_eq!(tet_edges(&tets).len(), 6);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn report_on_matched_uniform_mesh() {
        // A cube-lattice tet-free edge soup matched to its uniform field:
        // all metric lengths 1 -> tau = 1.
        let c = 0.25;
        let field = uniform_field(c);
        let mut points = Vec::new();
        for k in 0..4 {
            points.push(vec3(0.1 + k as f64 * c, 0.4, 0.4));
        }
        let edges: Vec<[u32; 2]> = (0..3).map(|i| [i, i + 1]).collect();
        let report = evaluate(&field, &points, &edges, None);
        assert!(report.tau > 0.9999);
        assert_eq!(report.in_range_fraction, 1.0);
        assert!(report.summary().contains("tau"));
    }
}

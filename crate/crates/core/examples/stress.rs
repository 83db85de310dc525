//! Larger-model timing sanity: build fields on denser samplings.

use std::time::Instant;

fn main() {
    let cases: Vec<(&str, sizefield::SurfaceMesh)> = vec![
        ("icosphere sub5 (10242 pts)", sizefield::shapes::icosphere(5, 1.0)),
        ("plates 64x64 (8192 pts)", sizefield::shapes::parallel_plates(64, 1.0, 0.2)),
    ];
    for (name, mesh) in cases {
        let params =
            sizefield::SizeFieldParams::defaults_for(mesh.bounding_box().largest_dimension());
        let t = Instant::now();
        let out =
            sizefield::build_size_field(&mesh, &params, &sizefield::BuildOptions::default())
                .unwrap();
        println!(
            "{name}: {} leaves, {} passes, {:.2} s",
            out.field.leaf_count(),
            out.limit_passes,
            t.elapsed().as_secs_f64()
        );
        print!("{}", out.timings.table());
    }
}

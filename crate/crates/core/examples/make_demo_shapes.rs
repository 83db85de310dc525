//! Writes the built-in demo geometries as STL files into the current
//! directory: a finned block, an icosphere, and a parallel-plates model.

fn main() {
    let shapes = [
        ("block.stl", sizefield::shapes::finned_block()),
        ("sphere.stl", sizefield::shapes::icosphere(4, 1.0)),
        ("plates.stl", sizefield::shapes::parallel_plates(32, 1.0, 0.2)),
    ];
    for (name, mesh) in shapes {
        mesh.write_stl_binary(name).unwrap();
        println!("{name}: {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    }
}

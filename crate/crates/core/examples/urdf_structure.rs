//! Parse a URDF, print its Mermaid graph and check reachability.

use langarm::geometry::Vec3;
use langarm::robot_model::{parse_urdf, reach_check, to_mermaid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = env!("CARGO_MANIFEST_DIR");
    let path = std::env::args().nth(1).unwrap_or_else(|| format!("{root}/fixtures/urdf/arm6.urdf"));
    let model = parse_urdf(&std::fs::read_to_string(&path)?)?;
    println!("{}\n", model.structure_summary());
    println!("{}", to_mermaid(&model));
    println!("longest path: {}", model.longest_path().join(" -> "));

    let reach = parse_urdf(&std::fs::read_to_string(format!("{root}/fixtures/urdf/reach700.urdf"))?)?;
    for d in [300.0, 695.0, 800.0] {
        println!("target {d} mm: {:?}", reach_check(&reach, Vec3::ZERO, Vec3::new(d, 0.0, 0.0)));
    }
    Ok(())
}

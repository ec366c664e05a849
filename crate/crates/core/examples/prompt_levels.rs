//! Build the same task at every prompt level and show what each adds.

use langarm::prompt_forge::{build, output_directive_50, BuildInputs, ImageRef, Level};
use langarm::robot_model::parse_urdf;
use langarm::world_sim::load_world;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = env!("CARGO_MANIFEST_DIR");
    let (world, _) = load_world(format!("{root}/fixtures/worlds/vb_observe.json"))?;
    let robot = parse_urdf(&std::fs::read_to_string(format!("{root}/fixtures/urdf/arm6.urdf"))?)?;
    let images = [ImageRef::labeled("frames/stack.png", "frame stack")];
    let inputs = BuildInputs { world: Some(&world), images: &images, robot: Some(&robot), ..BuildInputs::default() };
    for level in Level::ALL {
        let b = build(level, "Grasp the red cube", &inputs)?;
        let kinds: Vec<String> = b.sections.iter().map(|s| format!("{:?}", s.kind)).collect();
        println!("{level}: {} bytes, sha256 {}…\n   {}", b.rendered.len(), &b.checksum()[..12], kinds.join(", "));
    }
    let d = output_directive_50(build(Level::D, "Grasp the red cube", &inputs)?);
    println!("\nlevel D tail:\n{}", d.rendered.lines().rev().take(4).collect::<Vec<_>>().into_iter().rev().collect::<Vec<_>>().join("\n"));
    Ok(())
}

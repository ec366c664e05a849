//! Placement, hazard and sorting checks with both verbalization modes.

use langarm::geometry::Vec3;
use langarm::sentinel::{verbalize, Sentinel, VerbalMode};
use langarm::world_sim::load_world;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worlds");
    let s = Sentinel::default();

    let (w, _) = load_world(format!("{fixtures}/vb_perception.json"))?;
    let blue = w.object("blue").unwrap().center;
    for target in [blue, Vec3::new(0.0, 150.0, 15.0)] {
        let v = s.check_placement(&w, "red", target)?;
        println!("place red at {target}\n  {}\n  {}", verbalize(&v, VerbalMode::Full), verbalize(&v, VerbalMode::FiftyChar).replace('\n', "\n  "));
    }

    let (w, _) = load_world(format!("{fixtures}/attributes.json"))?;
    for cube in ["red", "blue"] {
        let v = s.check_zone_move(&w, cube, "yellow")?;
        println!("{cube} -> yellow: {}", verbalize(&v, VerbalMode::Full));
    }

    let (w, _) = load_world(format!("{fixtures}/sorting.json"))?;
    let out = s.sort_assignment(&w.objects, &w.zones);
    println!("sorting: {:?}", out.assignment);
    Ok(())
}
